//! Published reference data of the fair-sampling-free photon Bell experiment.
//!
//! The per-round counts are compiled in as a dataset file; everything else
//! here is a published derived value used as a check target.

use crate::io::Dataset;

const PAPER_DATASET_JSON: &str = include_str!("../data/paper_rounds.json");

/// The five measured rounds (60 s per setting combination) and their totals,
/// exactly as published.
pub fn builtin_paper_dataset() -> Dataset {
    Dataset::from_json(PAPER_DATASET_JSON).expect("embedded paper dataset is valid")
}

pub fn builtin_paper_dataset_json() -> &'static str {
    PAPER_DATASET_JSON
}

/// Columns: C(a1b1), C(a1b2), C(a2b1), C(a2b2), S_A(a1), S_B(b1), J.
#[derive(Debug, Clone, Copy)]
pub struct ModelTable {
    pub experiment: [i64; 7],
    pub model: [i64; 7],
    pub deviation_percent: [f64; 7],
}

/// Accumulated singles in alpha-major row order (a1b1, a1b2, a2b1, a2b2).
#[derive(Debug, Clone, Copy)]
pub struct SinglesTable {
    pub s_a: [u64; 4],
    pub s_b: [u64; 4],
    /// dA(a1), dA(a2), dB(b1), dB(b2).
    pub delta_percent: [f64; 4],
    /// Quoted 1/sqrt(N) for the smaller and larger count numbers.
    pub poisson_percent: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct PublishedStats {
    pub sum: f64,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct NormalizationTable {
    pub j: [i64; 5],
    pub j_prime: [f64; 5],
    /// Correction factors per round in sequence order (a1b1, a1b2, a2b2, a2b1), percent.
    pub f_percent: [[f64; 4]; 5],
    pub j_stats: PublishedStats,
    pub j_prime_stats: PublishedStats,
    pub total_f_percent: [f64; 4],
    pub total_j_prime: f64,
    /// Per-round max(J, J').
    pub adversarial_stats: PublishedStats,
    /// Per-round normalization always against a1b1.
    pub fixed_a1b1_stats: PublishedStats,
    pub fixed_a1b1_total_j_prime: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PaperFixtures {
    pub table1: ModelTable,
    pub table2: SinglesTable,
    pub table3: NormalizationTable,
    /// Accidental share of observed coincidences: a1b1, mixed settings, a2b2 (fractions).
    pub accidental_fraction: [f64; 3],
}

pub const PAPER: PaperFixtures = PaperFixtures {
    table1: ModelTable {
        experiment: [1_069_306, 1_152_595, 1_191_146, 69_749, 1_522_865, 1_693_718, -126_715],
        model: [1_068_886, 1_152_743, 1_192_489, 68_694, 1_538_766, 1_686_467, -120_191],
        deviation_percent: [-0.04, 0.01, 0.11, -1.51, 1.04, -0.43, 5.15],
    },
    table2: SinglesTable {
        s_a: [1_526_617, 1_522_865, 4_735_046, 4_729_369],
        s_b: [1_699_881, 4_515_782, 1_693_718, 4_507_497],
        delta_percent: [-0.25, -0.12, -0.36, -0.18],
        poisson_percent: [0.08, 0.05],
    },
    table3: NormalizationTable {
        j: [-27_985, -25_032, -24_279, -24_597, -24_822],
        j_prime: [-24_193.0, -25_727.0, -24_717.0, -22_750.0, -25_745.0],
        f_percent: [
            [102.07, 100.17, 100.00, 100.45],
            [100.00, 100.20, 100.23, 100.52],
            [100.00, 100.26, 100.05, 100.24],
            [101.33, 101.18, 100.67, 100.00],
            [100.00, 100.35, 100.29, 100.63],
        ],
        j_stats: PublishedStats {
            sum: -126_715.0,
            mean: -25_343.0,
            std_dev: 1_503.0,
        },
        j_prime_stats: PublishedStats {
            sum: -123_132.0,
            mean: -24_626.0,
            std_dev: 1_243.0,
        },
        total_f_percent: [100.43, 100.18, 100.00, 100.12],
        total_j_prime: -123_412.0,
        adversarial_stats: PublishedStats {
            sum: -121_076.0,
            mean: -24_215.0,
            std_dev: 893.0,
        },
        fixed_a1b1_stats: PublishedStats {
            sum: -123_935.0,
            mean: -24_787.0,
            std_dev: 1_098.0,
        },
        fixed_a1b1_total_j_prime: -123_943.0,
    },
    accidental_fraction: [0.0002, 0.001, 0.18],
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Combo;

    #[test]
    fn embedded_dataset_shape() {
        let d = builtin_paper_dataset();
        assert_eq!(d.rounds.len(), 5);
        let b = d.rounds[1].counts.block(Combo::A2B2);
        assert_eq!((b.s_a, b.s_b, b.c_oo), (943_776, 900_898, 13_861));
        assert_eq!(d.accumulated().unwrap().block(Combo::A2B2).s_b, 4_507_497);
        assert_eq!(d.totals.as_ref().unwrap().counts, d.accumulated().unwrap());
    }

    #[test]
    fn accumulated_rounds_reproduce_the_singles_table() {
        let total = builtin_paper_dataset().accumulated().unwrap();
        for (i, combo) in Combo::ALPHA_MAJOR.into_iter().enumerate() {
            assert_eq!(total.block(combo).s_a, PAPER.table2.s_a[i], "{combo}");
            assert_eq!(total.block(combo).s_b, PAPER.table2.s_b[i], "{combo}");
        }
    }

    #[test]
    fn measured_row_of_model_table_matches_totals() {
        let t = builtin_paper_dataset().accumulated().unwrap();
        let e = PAPER.table1.experiment;
        assert_eq!(t.block(Combo::A1B1).c_oo as i64, e[0]);
        assert_eq!(t.block(Combo::A1B2).c_oo as i64, e[1]);
        assert_eq!(t.block(Combo::A2B1).c_oo as i64, e[2]);
        assert_eq!(t.block(Combo::A2B2).c_oo as i64, e[3]);
        assert_eq!(t.block(Combo::A1B2).s_a as i64, e[4]);
        assert_eq!(t.block(Combo::A2B1).s_b as i64, e[5]);
    }
}
