//! Reproduces every published number from a measured dataset plus the
//! model parameters and reports a verdict per number.

use crate::drift::{adversarial_series, j_prime_series, normalize_total, BaselinePolicy, NormalizationPath};
use crate::error::{Error, Result};
use crate::fixtures::{PublishedStats, PAPER};
use crate::inequality::{eberhard_j, poisson_relative_fluctuation, series_stats, singles_deviations, SeriesStats};
use crate::io::Dataset;
use crate::model::{compare_model, correct_singles, predict_counts, predict_raw_singles, ExperimentConfig};
use crate::report::{ReportRow, Tolerance};
use crate::types::{Combo, CountsBlock, Party, RoundData};

const MODEL_REL_TOL: f64 = 0.002;
const MODEL_J_REL_TOL: f64 = 0.02;
const PERCENT_POINTS: f64 = 0.01;

/// Model row of the comparison table as a round: coincidences per block,
/// Alice's a1 singles in a1b2 and Bob's b1 singles in a2b1.
pub fn published_model_round() -> RoundData<f64> {
    let m = PAPER.table1.model.map(|v| v as f64);
    RoundData::from_blocks([
        CountsBlock::new(Combo::A1B1, m[4], m[5], m[0]),
        CountsBlock::new(Combo::A1B2, m[4], 0.0, m[1]),
        CountsBlock::new(Combo::A2B1, 0.0, m[5], m[2]),
        CountsBlock::new(Combo::A2B2, 0.0, 0.0, m[3]),
    ])
    .expect("four distinct combinations")
}

fn stats_rows(rows: &mut Vec<ReportRow>, label: &str, s: &SeriesStats, p: &PublishedStats, sum_tol: f64) {
    rows.push(ReportRow::check(
        format!("{label} sum"),
        p.sum,
        s.sum,
        Tolerance::Absolute { max: sum_tol },
    ));
    rows.push(ReportRow::check(
        format!("{label} mean"),
        p.mean,
        s.mean,
        Tolerance::Absolute { max: 1.0 },
    ));
    rows.push(ReportRow::check(
        format!("{label} std"),
        p.std_dev,
        s.sample_std_dev.unwrap_or(f64::NAN),
        Tolerance::Absolute { max: 1.0 },
    ));
}

/// Runs all checks. `dataset` supplies the measured counts; the model uses
/// the fixed published parameters.
pub fn validate_paper(dataset: &Dataset) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    let rounds = dataset.round_counts();
    let totals = dataset
        .accumulated()
        .ok_or_else(|| Error::validation("rounds", "dataset has no rounds"))?;

    // Fixture integrity.
    rows.push(ReportRow::check(
        "fixture rounds",
        5.0,
        rounds.len() as f64,
        Tolerance::Exact,
    ));
    for (i, combo) in Combo::ALPHA_MAJOR.into_iter().enumerate() {
        let b = totals.block(combo);
        rows.push(ReportRow::check(
            format!("fixture total S_A {combo}"),
            PAPER.table2.s_a[i] as f64,
            b.s_a as f64,
            Tolerance::Exact,
        ));
        rows.push(ReportRow::check(
            format!("fixture total S_B {combo}"),
            PAPER.table2.s_b[i] as f64,
            b.s_b as f64,
            Tolerance::Exact,
        ));
    }

    // Quantum model.
    let cfg = ExperimentConfig::paper();
    let pred = predict_counts(&cfg)?;
    let model = compare_model(&totals.to_real(), &pred.observed);
    let published = PAPER.table1.model.map(|v| v as f64);
    for (i, (label, c)) in crate::model::ModelComparison::LABELS
        .iter()
        .zip(model.entries())
        .enumerate()
    {
        let tol = if i == 6 { MODEL_J_REL_TOL } else { MODEL_REL_TOL };
        rows.push(ReportRow::check(
            format!("model {label}"),
            published[i],
            c.model,
            Tolerance::Relative { max: tol },
        ));
    }
    let raw_a1 = predict_raw_singles(&cfg, Party::A, cfg.alpha1)?;
    rows.push(ReportRow::check(
        "model S_A(a1) before dark counts",
        published[4] - correct_singles(0.0, &cfg),
        raw_a1,
        Tolerance::Relative { max: MODEL_REL_TOL },
    ));
    let [f11, fmixed, f22] = PAPER.accidental_fraction;
    rows.push(ReportRow::check(
        "accidental share a2b2",
        f22,
        pred.accidental_fraction(Combo::A2B2),
        Tolerance::Range { lo: 0.17, hi: 0.19 },
    ));
    rows.push(ReportRow::check(
        "accidental share a1b1",
        f11,
        pred.accidental_fraction(Combo::A1B1),
        Tolerance::factor(f11, 2.0),
    ));
    for combo in [Combo::A1B2, Combo::A2B1] {
        rows.push(ReportRow::check(
            format!("accidental share {combo}"),
            fmixed,
            pred.accidental_fraction(combo),
            Tolerance::factor(fmixed, 2.0),
        ));
    }

    // Deviations of the published model row from the data.
    let dev = compare_model(&totals.to_real(), &published_model_round());
    for ((label, c), want) in crate::model::ModelComparison::LABELS
        .iter()
        .zip(dev.entries())
        .zip(PAPER.table1.deviation_percent)
    {
        rows.push(ReportRow::check(
            format!("deviation {label} (%)"),
            want,
            c.deviation_percent(),
            Tolerance::Absolute { max: PERCENT_POINTS },
        ));
    }

    // Measured J.
    let js: Vec<i64> = rounds.iter().map(eberhard_j).collect();
    rows.push(ReportRow::check(
        "J accumulated",
        PAPER.table3.j_stats.sum,
        eberhard_j(&totals) as f64,
        Tolerance::Exact,
    ));
    for (i, (&want, &got)) in PAPER.table3.j.iter().zip(&js).enumerate() {
        rows.push(ReportRow::check(
            format!("J round {}", i + 1),
            want as f64,
            got as f64,
            Tolerance::Exact,
        ));
    }
    let j_stats = series_stats(&js.iter().map(|&j| j as f64).collect::<Vec<_>>())?;
    rows.push(ReportRow::check(
        "J sum of rounds",
        PAPER.table3.j_stats.sum,
        j_stats.sum,
        Tolerance::Exact,
    ));
    rows.push(ReportRow::check(
        "J mean",
        PAPER.table3.j_stats.mean,
        j_stats.mean.round(),
        Tolerance::Absolute { max: 1.0 },
    ));
    rows.push(ReportRow::check(
        "J std",
        PAPER.table3.j_stats.std_dev,
        j_stats.sample_std_dev.unwrap_or(f64::NAN).round(),
        Tolerance::Absolute { max: 1.0 },
    ));

    // Singles stability.
    let delta = singles_deviations(&totals).as_percent();
    for ((label, got), want) in ["dA(a1)", "dA(a2)", "dB(b1)", "dB(b2)"]
        .iter()
        .zip(delta)
        .zip(PAPER.table2.delta_percent)
    {
        rows.push(ReportRow::check(
            format!("singles {label} (%)"),
            want,
            got,
            Tolerance::Absolute { max: PERCENT_POINTS },
        ));
    }
    let small = totals.block(Combo::A1B2).s_a as f64;
    let large = totals.block(Combo::A2B2).s_a as f64;
    for (label, count, want) in [
        (
            "poisson 1/sqrt(N) smaller counts (%)",
            small,
            PAPER.table2.poisson_percent[0],
        ),
        (
            "poisson 1/sqrt(N) larger counts (%)",
            large,
            PAPER.table2.poisson_percent[1],
        ),
    ] {
        rows.push(ReportRow::check(
            label,
            want,
            100.0 * poisson_relative_fluctuation(count),
            Tolerance::Absolute { max: PERCENT_POINTS },
        ));
    }

    // Drift normalization.
    let path = NormalizationPath::sequence();
    let per_round = j_prime_series(&rounds, &path, BaselinePolicy::SmallestF)?;
    for (i, r) in per_round.iter().enumerate() {
        for (k, combo) in Combo::SEQUENCE.into_iter().enumerate() {
            rows.push(ReportRow::check(
                format!("f round {} {combo} (%)", i + 1),
                PAPER.table3.f_percent.get(i).map_or(f64::NAN, |f| f[k]),
                r.factors.as_percent()[k],
                Tolerance::Absolute { max: PERCENT_POINTS },
            ));
        }
        rows.push(ReportRow::check(
            format!("J' round {}", i + 1),
            PAPER.table3.j_prime.get(i).copied().unwrap_or(f64::NAN),
            r.j_prime,
            Tolerance::Absolute { max: 1.0 },
        ));
    }
    let jp_stats = series_stats(&per_round.iter().map(|r| r.j_prime).collect::<Vec<_>>())?;
    stats_rows(&mut rows, "J'", &jp_stats, &PAPER.table3.j_prime_stats, 3.0);

    let adv = adversarial_series(&rounds, &path, BaselinePolicy::SmallestF)?;
    stats_rows(
        &mut rows,
        "adversarial max(J, J')",
        &adv,
        &PAPER.table3.adversarial_stats,
        1.0,
    );

    let fixed = BaselinePolicy::FixedCombo(Combo::A1B1);
    let fixed_series = j_prime_series(&rounds, &path, fixed)?;
    let fixed_stats = series_stats(&fixed_series.iter().map(|r| r.j_prime).collect::<Vec<_>>())?;
    stats_rows(
        &mut rows,
        "J' baseline a1b1",
        &fixed_stats,
        &PAPER.table3.fixed_a1b1_stats,
        1.0,
    );

    let total = normalize_total(&rounds, &path, BaselinePolicy::SmallestF)?;
    for (k, combo) in Combo::SEQUENCE.into_iter().enumerate() {
        rows.push(ReportRow::check(
            format!("f total {combo} (%)"),
            PAPER.table3.total_f_percent[k],
            total.factors.as_percent()[k],
            Tolerance::Absolute { max: PERCENT_POINTS },
        ));
    }
    rows.push(ReportRow::check(
        "J' of totals",
        PAPER.table3.total_j_prime,
        total.j_prime,
        Tolerance::Absolute { max: 2.0 },
    ));
    let fixed_total = normalize_total(&rounds, &path, fixed)?;
    rows.push(ReportRow::check(
        "J' of totals, baseline a1b1",
        PAPER.table3.fixed_a1b1_total_j_prime,
        fixed_total.j_prime,
        Tolerance::Absolute { max: 2.0 },
    ));

    Ok(rows)
}
