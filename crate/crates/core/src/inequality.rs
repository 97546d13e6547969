//! Eberhard value, round statistics and singles-stability checks.
//!
//! With the convention used throughout this crate local realism requires
//! `J >= 0`; a measured `J < 0` is a violation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Combo, Count, Party, RoundData};

/// J = [S_A(a1)|a1b2 - C(a1b2)] + [S_B(b1)|a2b1 - C(a2b1)] + C(a2b2) - C(a1b1).
///
/// Alice's singles come from the (a1, b2) block and Bob's from the (a2, b1)
/// block. Exact for integer counts.
pub fn eberhard_j<T: Count>(round: &RoundData<T>) -> T::Signed {
    let b12 = round.block(Combo::A1B2);
    let b21 = round.block(Combo::A2B1);
    let b22 = round.block(Combo::A2B2);
    let b11 = round.block(Combo::A1B1);
    (b12.s_a.signed() - b12.c_oo.signed()) + (b21.s_b.signed() - b21.c_oo.signed()) + b22.c_oo.signed()
        - b11.c_oo.signed()
}

/// One-sigma Poisson uncertainty of J.
///
/// The four terms of J are counts of disjoint event classes (A-only clicks in
/// a1b2, B-only clicks in a2b1, coincidences in a2b2 and a1b1), so their
/// variances add.
pub fn j_poisson_sigma<T: Count>(round: &RoundData<T>) -> f64 {
    let b12 = round.block(Combo::A1B2).to_real();
    let b21 = round.block(Combo::A2B1).to_real();
    let var = (b12.s_a - b12.c_oo).max(0.0)
        + (b21.s_b - b21.c_oo).max(0.0)
        + round.block(Combo::A2B2).c_oo.to_f64()
        + round.block(Combo::A1B1).c_oo.to_f64();
    var.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesStats {
    pub sum: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); `None` when n = 1.
    pub sample_std_dev: Option<f64>,
    pub n: usize,
}

impl SeriesStats {
    /// mean / std, the per-round significance.
    pub fn mean_significance(&self) -> Option<f64> {
        self.sample_std_dev.map(|s| self.mean / s)
    }

    /// sum / std, the significance quoted for the accumulated value.
    pub fn sum_significance(&self) -> Option<f64> {
        self.sample_std_dev.map(|s| self.sum / s)
    }

    /// Standard error of the mean, std / sqrt(n).
    pub fn standard_error(&self) -> Option<f64> {
        self.sample_std_dev.map(|s| s / (self.n as f64).sqrt())
    }
}

pub fn series_stats(values: &[f64]) -> Result<SeriesStats> {
    if values.is_empty() {
        return Err(Error::Domain("statistics of an empty series".into()));
    }
    let n = values.len();
    let sum: f64 = values.iter().sum();
    let mean = sum / n as f64;
    let sample_std_dev = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(SeriesStats {
        sum,
        mean,
        sample_std_dev,
        n,
    })
}

/// Relative change of each party's singles between the two blocks that share
/// its local setting, later block relative to earlier in alpha-major order
/// (a1b1, a1b2, a2b1, a2b2). Stored as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SinglesDeviationTable {
    pub delta_a1: f64,
    pub delta_a2: f64,
    pub delta_b1: f64,
    pub delta_b2: f64,
}

impl SinglesDeviationTable {
    pub fn as_percent(&self) -> [f64; 4] {
        [self.delta_a1, self.delta_a2, self.delta_b1, self.delta_b2].map(|d| 100.0 * d)
    }

    /// (party, setting index, earlier combo, later combo) of each entry, in
    /// the order of [`SinglesDeviationTable::as_percent`].
    pub const PAIRS: [(Party, u8, Combo, Combo); 4] = [
        (Party::A, 1, Combo::A1B1, Combo::A1B2),
        (Party::A, 2, Combo::A2B1, Combo::A2B2),
        (Party::B, 1, Combo::A1B1, Combo::A2B1),
        (Party::B, 2, Combo::A1B2, Combo::A2B2),
    ];
}

pub fn singles_deviations<T: Count>(totals: &RoundData<T>) -> SinglesDeviationTable {
    let d = |i: usize| {
        let (party, _, earlier, later) = SinglesDeviationTable::PAIRS[i];
        let e = totals.block(earlier).singles(party).to_f64();
        let l = totals.block(later).singles(party).to_f64();
        if e == l {
            0.0
        } else {
            (l - e) / e
        }
    };
    SinglesDeviationTable {
        delta_a1: d(0),
        delta_a2: d(1),
        delta_b1: d(2),
        delta_b2: d(3),
    }
}

/// Expected relative Poisson fluctuation 1/sqrt(count), as a fraction.
pub fn poisson_relative_fluctuation(count: f64) -> f64 {
    1.0 / count.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::CountsBlock;

    fn round(rows: [(u64, u64, u64); 4]) -> RoundData {
        RoundData::from_blocks(
            Combo::SEQUENCE
                .iter()
                .zip(rows)
                .map(|(&c, (a, b, cc))| CountsBlock::new(c, a, b, cc)),
        )
        .unwrap()
    }

    fn round1() -> RoundData {
        round([
            (308_131, 341_484, 215_282),
            (302_394, 897_934, 228_605),
            (940_904, 896_442, 14_501),
            (945_152, 337_158, 238_151),
        ])
    }

    #[test]
    fn round_one_j() {
        assert_eq!(eberhard_j(&round1()), -27_985);
    }

    #[test]
    fn zero_round_has_zero_j() {
        assert_eq!(eberhard_j(&round([(0, 0, 0); 4])), 0);
    }

    #[test]
    fn real_and_integer_j_agree() {
        assert_eq!(eberhard_j(&round1().to_real()), -27_985.0);
    }

    #[test]
    fn stats_of_published_j_values() {
        let s = series_stats(&[-27_985.0, -25_032.0, -24_279.0, -24_597.0, -24_822.0]).unwrap();
        assert_eq!(s.sum, -126_715.0);
        assert_eq!(s.mean.round(), -25_343.0);
        assert_eq!(s.sample_std_dev.unwrap().round(), 1_503.0);
        let s = series_stats(&[-24_193.0, -25_727.0, -24_717.0, -22_750.0, -25_745.0]).unwrap();
        assert_eq!(s.mean.round(), -24_626.0);
        assert_eq!(s.sample_std_dev.unwrap().round(), 1_243.0);
    }

    #[test]
    fn stats_edge_cases() {
        assert!(series_stats(&[]).is_err());
        let one = series_stats(&[3.5]).unwrap();
        assert_eq!((one.sum, one.mean, one.sample_std_dev), (3.5, 3.5, None));
        assert!(one.mean_significance().is_none());
        let same = series_stats(&[7.0; 6]).unwrap();
        assert_eq!(same.mean, 7.0);
        assert_eq!(same.sample_std_dev, Some(0.0));
    }

    #[test]
    fn singles_deviation_cases() {
        let d = singles_deviations(&round([(1_000_000, 5, 0); 4]));
        assert_eq!(d.as_percent(), [0.0; 4]);
        let r = round([(1_000_000, 10, 0), (999_000, 10, 0), (10, 10, 0), (10, 10, 0)]);
        assert!((singles_deviations(&r).as_percent()[0] + 0.10).abs() < 1e-12);
    }

    #[test]
    fn poisson_fluctuation() {
        assert!((poisson_relative_fluctuation(10_000.0) - 0.01).abs() < 1e-15);
        assert!((100.0 * poisson_relative_fluctuation(1_522_865.0) - 0.081).abs() < 5e-4);
        assert!((100.0 * poisson_relative_fluctuation(4_729_369.0) - 0.046).abs() < 5e-4);
    }

    #[test]
    fn poisson_sigma_of_j() {
        let r = round([(0, 0, 100), (50, 0, 50), (0, 0, 25), (0, 30, 10)]);
        assert!((j_poisson_sigma(&r) - (100.0f64 + 0.0 + 20.0 + 25.0).sqrt()).abs() < 1e-12);
    }
}
