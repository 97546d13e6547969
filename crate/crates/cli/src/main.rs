use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use eberhard::drift::{adversarial_series, j_prime_series, normalize_total};
use eberhard::inequality::{
    j_poisson_sigma, poisson_relative_fluctuation, series_stats, singles_deviations, SeriesStats,
};
use eberhard::io::{load_dataset, load_events, save_dataset, save_events, BlockEvents, Dataset};
use eberhard::model::predict_counts;
use eberhard::sim::{count_coincidences, simulate_experiment_blocks, simulate_lhv_experiment_blocks, tau_c_ns};
use eberhard::validation::validate_paper;
use eberhard::{
    eberhard_j, BaselinePolicy, Combo, Error, ExperimentConfig, IntensityProfile, LhvStrategy, NormalizationPath,
    ReportRow, Schedule, SimSeed,
};

mod render;

#[derive(Parser)]
#[command(
    name = "eberhard",
    version,
    about = "Eberhard-inequality count modeling, drift normalization and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict observed singles, coincidences and J from the source model.
    Predict {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        json: bool,
    },
    /// Eberhard values per round, statistics and singles stability of a dataset.
    Analyze {
        dataset: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Correction factors and drift-normalized J'.
    Normalize {
        dataset: PathBuf,
        /// Links `FROM>TO:PARTY`, e.g. `11>12:A,12>22:B,22>21:A`.
        #[arg(long, default_value = "11>12:A,12>22:B,22>21:A")]
        path: String,
        /// `smallest` or a combination such as `a1b1`.
        #[arg(long, default_value = "smallest")]
        baseline: String,
        #[arg(long, value_enum, default_value_t = Variant::PerRound)]
        variant: Variant,
        #[arg(long)]
        json: bool,
    },
    /// Simulate a timestamped experiment and write a counts dataset.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 5)]
        rounds: u32,
        #[arg(long, default_value_t = 60.0)]
        seconds_per_block: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// `g22=0.9,...` with optional `linear=SLOPE` or `sine=AMPLITUDE:PERIOD`.
        #[arg(long, default_value = "flat")]
        profile: String,
        /// Local hidden-variable source: `always-pass` or a strategy JSON file.
        #[arg(long)]
        lhv: Option<String>,
        /// Pair rate of the LHV source; defaults to the configured r0.
        #[arg(long)]
        base_rate: Option<f64>,
        /// Dataset output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write the raw click streams as CSV.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Count window coincidences in an event CSV, per block.
    Coincidences {
        events: PathBuf,
        /// Total window width in seconds.
        #[arg(long, default_value_t = 180e-9)]
        tau_c: f64,
        #[arg(long)]
        json: bool,
    },
    /// Check every published number against the built-in measurement.
    ValidatePaper {
        /// Use this dataset instead of the embedded one.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    PerRound,
    Adversarial,
    Total,
    FixedCombo,
}

#[derive(Args)]
struct ConfigArgs {
    /// ExperimentConfig JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    eta_a: Option<f64>,
    #[arg(long)]
    eta_b: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, alias = "dark")]
    zeta: Option<f64>,
    #[arg(long)]
    tau_c: Option<f64>,
    /// `a1,a2,b1,b2` in degrees.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    angles: Option<Vec<f64>>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_json(p)?,
            None => ExperimentConfig::paper(),
        };
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.state.r, self.r);
        set(&mut cfg.state.visibility, self.v);
        set(&mut cfg.eta_a, self.eta_a);
        set(&mut cfg.eta_b, self.eta_b);
        set(&mut cfg.r0, self.r0);
        set(&mut cfg.t, self.t);
        set(&mut cfg.zeta, self.zeta);
        set(&mut cfg.tau_c, self.tau_c);
        if let Some(a) = &self.angles {
            if a.len() != 4 {
                return Err(Usage(format!("--angles takes a1,a2,b1,b2; got {} value(s)", a.len())).into());
            }
            cfg.alpha1 = a[0].into();
            cfg.alpha2 = a[1].into();
            cfg.beta1 = a[2].into();
            cfg.beta2 = a[3].into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Unreadable or malformed user input; maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("reading {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text).map_err(|e| Usage(format!("parsing {}: {e}", path.display())))?)
}

fn parse_arg<T: std::str::FromStr<Err = Error>>(flag: &str, value: &str) -> anyhow::Result<T> {
    value.parse().map_err(|e| Usage(format!("{flag} {value}: {e}")).into())
}

/// Failure of a `validate-paper` check; maps to exit code 1.
#[derive(Debug)]
struct ChecksFailed(usize);

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let parameter = e
                .chain()
                .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_parameter_error) || c.is::<Usage>());
            ExitCode::from(if parameter { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Predict { config, json } => predict(&config.resolve()?, json),
        Command::Analyze { dataset, json } => analyze(&load(&dataset)?, json),
        Command::Normalize {
            dataset,
            path,
            baseline,
            variant,
            json,
        } => {
            let path: NormalizationPath = parse_arg("--path", &path)?;
            let baseline: BaselinePolicy = parse_arg("--baseline", &baseline)?;
            normalize(&load(&dataset)?, &path, baseline, variant, json)
        }
        Command::Simulate {
            config,
            rounds,
            seconds_per_block,
            seed,
            profile,
            lhv,
            base_rate,
            out,
            events,
        } => {
            let cfg = config.resolve()?;
            let profile: IntensityProfile = parse_arg("--profile", &profile)?;
            let schedule = Schedule::new(rounds, seconds_per_block);
            let (blocks, dataset) = match lhv {
                None => simulate_experiment_blocks(&cfg, &schedule, &profile, SimSeed(seed))?,
                Some(source) => {
                    let strategy = if source == "always-pass" {
                        LhvStrategy::always_pass(profile)
                    } else {
                        let mut s: LhvStrategy = read_json(std::path::Path::new(&source))?;
                        if profile != IntensityProfile::flat() {
                            s.profile = profile;
                        }
                        s
                    };
                    let rate = base_rate.unwrap_or(cfg.r0);
                    simulate_lhv_experiment_blocks(&strategy, rate, cfg.tau_c, &schedule, SimSeed(seed))?
                }
            };
            match out {
                Some(p) => save_dataset(&dataset, &p)?,
                None => print!("{}", dataset.to_json()?),
            }
            if let Some(p) = events {
                let logs: Vec<BlockEvents> = blocks
                    .into_iter()
                    .map(|b| BlockEvents {
                        id: b.id,
                        streams: b.streams,
                    })
                    .collect();
                save_events(&p, &logs)?;
            }
            Ok(())
        }
        Command::Coincidences { events, tau_c, json } => {
            let blocks = load_events(&events)?;
            let tau = tau_c_ns(tau_c);
            let rows = blocks
                .iter()
                .map(|b| {
                    Ok(ReportRow::value(
                        b.id.to_string(),
                        count_coincidences(&b.streams.a, &b.streams.b, tau)? as f64,
                    ))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            render::emit(&rows, json, render::plain)
        }
        Command::ValidatePaper { dataset, json } => {
            let d = match dataset {
                Some(p) => load(&p)?,
                None => eberhard::fixtures::builtin_paper_dataset(),
            };
            let rows = validate_paper(&d)?;
            render::emit(&rows, json, render::checks)?;
            let failed = rows.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(ChecksFailed(failed).into());
            }
            Ok(())
        }
    }
}

fn load(path: &PathBuf) -> anyhow::Result<Dataset> {
    load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn predict(cfg: &ExperimentConfig, json: bool) -> anyhow::Result<()> {
    let p = predict_counts(cfg)?;
    let o = &p.observed;
    let mut rows = vec![
        ReportRow::value("C(a1,b1)", o.block(Combo::A1B1).c_oo),
        ReportRow::value("C(a1,b2)", o.block(Combo::A1B2).c_oo),
        ReportRow::value("C(a2,b1)", o.block(Combo::A2B1).c_oo),
        ReportRow::value("C(a2,b2)", o.block(Combo::A2B2).c_oo),
        ReportRow::value("S_A(a1)", o.block(Combo::A1B2).s_a),
        ReportRow::value("S_B(b1)", o.block(Combo::A2B1).s_b),
        ReportRow::value("J", p.j),
    ];
    for combo in Combo::SEQUENCE {
        rows.push(ReportRow::value(
            format!("accidentals {combo} (%)"),
            100.0 * p.accidental_fraction(combo),
        ));
    }
    render::emit(&rows, json, render::plain)
}

fn stats_rows(rows: &mut Vec<ReportRow>, name: &str, s: &SeriesStats) {
    rows.push(ReportRow::value(format!("{name} sum"), s.sum));
    rows.push(ReportRow::value(format!("{name} mean"), s.mean));
    if let Some(sd) = s.sample_std_dev {
        rows.push(ReportRow::value(format!("{name} std"), sd));
        if let Some(z) = s.mean_significance() {
            rows.push(ReportRow::value(format!("{name} mean/std (ratio)"), z));
        }
        if let Some(z) = s.sum_significance() {
            rows.push(ReportRow::value(format!("{name} sum/std (ratio)"), z));
        }
    }
}

fn analyze(d: &Dataset, json: bool) -> anyhow::Result<()> {
    let rounds = d.round_counts();
    let Some(totals) = d.accumulated() else {
        bail!("dataset has no rounds");
    };
    let mut rows = Vec::new();
    let js: Vec<f64> = rounds.iter().map(|r| eberhard_j(r) as f64).collect();
    for (i, (r, j)) in rounds.iter().zip(&js).enumerate() {
        rows.push(ReportRow::value(format!("J round {}", i + 1), *j));
        rows.push(ReportRow::value(
            format!("sigma(J) round {}", i + 1),
            j_poisson_sigma(r),
        ));
    }
    rows.push(ReportRow::value("J accumulated", eberhard_j(&totals) as f64));
    stats_rows(&mut rows, "J", &series_stats(&js)?);
    let delta = singles_deviations(&totals).as_percent();
    for (label, v) in ["dA(a1)", "dA(a2)", "dB(b1)", "dB(b2)"].iter().zip(delta) {
        rows.push(ReportRow::value(format!("singles {label} (%)"), v));
    }
    for (combo, party_label, count) in [
        (Combo::A1B2, "S_A(a1)", totals.block(Combo::A1B2).s_a),
        (Combo::A2B2, "S_A(a2)", totals.block(Combo::A2B2).s_a),
        (Combo::A2B1, "S_B(b1)", totals.block(Combo::A2B1).s_b),
        (Combo::A2B2, "S_B(b2)", totals.block(Combo::A2B2).s_b),
    ] {
        rows.push(ReportRow::value(
            format!("poisson 1/sqrt(N) {party_label} {combo} (%)"),
            100.0 * poisson_relative_fluctuation(count as f64),
        ));
    }
    render::emit(&rows, json, render::plain)
}

fn normalize(
    d: &Dataset,
    path: &NormalizationPath,
    baseline: BaselinePolicy,
    variant: Variant,
    json: bool,
) -> anyhow::Result<()> {
    let rounds = d.round_counts();
    if rounds.is_empty() {
        bail!("dataset has no rounds");
    }
    let mut rows = Vec::new();
    let factor_rows = |rows: &mut Vec<ReportRow>, tag: &str, f: &eberhard::CorrectionFactors| {
        for (combo, v) in Combo::SEQUENCE.iter().zip(f.as_percent()) {
            rows.push(ReportRow::value(format!("f {tag} {combo} (%)"), v));
        }
    };
    match variant {
        Variant::Total => {
            let t = normalize_total(&rounds, path, baseline)?;
            factor_rows(&mut rows, "total", &t.factors);
            rows.push(ReportRow::value("J total", t.j));
            rows.push(ReportRow::value("J' total", t.j_prime));
        }
        Variant::PerRound | Variant::Adversarial | Variant::FixedCombo => {
            let policy = match (variant, baseline) {
                (Variant::FixedCombo, BaselinePolicy::SmallestF) => BaselinePolicy::FixedCombo(Combo::A1B1),
                _ => baseline,
            };
            let series = j_prime_series(&rounds, path, policy)?;
            for (i, r) in series.iter().enumerate() {
                factor_rows(&mut rows, &format!("round {}", i + 1), &r.factors);
                rows.push(ReportRow::value(format!("J round {}", i + 1), r.j));
                rows.push(ReportRow::value(format!("J' round {}", i + 1), r.j_prime));
            }
            let js: Vec<f64> = series.iter().map(|r| r.j).collect();
            stats_rows(&mut rows, "J", &series_stats(&js)?);
            if matches!(variant, Variant::Adversarial) {
                stats_rows(&mut rows, "max(J,J')", &adversarial_series(&rounds, path, policy)?);
            } else {
                let jp: Vec<f64> = series.iter().map(|r| r.j_prime).collect();
                stats_rows(&mut rows, "J'", &series_stats(&jp)?);
            }
        }
    }
    render::emit(&rows, json, render::plain)
}
