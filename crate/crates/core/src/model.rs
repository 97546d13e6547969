//! Quantum-mechanical count model for an Eberhard-type polarization experiment.
//!
//! The source state is a two-photon polarization state in the H/V product
//! basis, ordered |HH>, |HV>, |VH>, |VV>, whose |HV>/|VH> coherence is damped
//! by a real factor. Singles and coincidences are predicted from projective
//! polarizer measurements and then corrected for dark counts and accidental
//! coincidences inside the coincidence window.

use nalgebra::{Complex, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequality::eberhard_j;
use crate::types::{Combo, CountsBlock, Party, RoundData};

pub type C64 = Complex<f64>;

const TOL: f64 = 1e-12;

/// Amplitude ratio `r` of |VH> to |HV> and off-diagonal damping `visibility`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    pub r: f64,
    #[serde(rename = "v")]
    pub visibility: f64,
}

impl StateParams {
    pub fn new(r: f64, visibility: f64) -> Result<Self> {
        let p = StateParams { r, visibility };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::Parameter {
                name: "r",
                value: self.r,
                reason: "must satisfy 0 < r <= 1",
            });
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Parameter {
                name: "v",
                value: self.visibility,
                reason: "must satisfy 0 <= V <= 1",
            });
        }
        Ok(())
    }
}

/// Polarizer angle in degrees, measured from the H axis.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementAngle(pub f64);

impl MeasurementAngle {
    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

impl From<f64> for MeasurementAngle {
    fn from(deg: f64) -> Self {
        MeasurementAngle(deg)
    }
}

/// Two-qubit density matrix in the |HH>, |HV>, |VH>, |VV> basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4<C64>);

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn from_matrix(m: Matrix4<C64>) -> Result<Self> {
        let rho = DensityMatrix(m);
        if rho.hermiticity_defect() > TOL {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        if (rho.trace() - 1.0).abs() > TOL {
            return Err(Error::Domain(format!(
                "density matrix trace is {}, expected 1",
                rho.trace()
            )));
        }
        if rho.min_eigenvalue() < -TOL {
            return Err(Error::Domain("density matrix is not positive semidefinite".into()));
        }
        Ok(rho)
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Largest entry-wise distance from the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let ev = self.0.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Re Tr[rho (a (x) b)] for real single-photon operators `a` and `b`.
    pub fn expectation(&self, a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
        let op = a.kronecker(b).map(|x| C64::new(x, 0.0));
        (self.0 * op).trace().re
    }
}

pub fn build_state(p: StateParams) -> Result<DensityMatrix> {
    p.validate()?;
    let norm = 1.0 / (1.0 + p.r * p.r);
    let coh = C64::new(p.visibility * p.r * norm, 0.0);
    let mut m = Matrix4::<C64>::zeros();
    m[(1, 1)] = C64::new(norm, 0.0);
    m[(1, 2)] = coh;
    m[(2, 1)] = coh;
    m[(2, 2)] = C64::new(p.r * p.r * norm, 0.0);
    Ok(DensityMatrix(m))
}

/// Projector onto linear polarization cos(a)|H> + sin(a)|V>.
pub fn polarizer_projector(a: MeasurementAngle) -> Matrix2<f64> {
    let (s, c) = a.radians().sin_cos();
    Matrix2::new(c * c, c * s, c * s, s * s)
}

/// Physical parameters of one experiment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub state: StateParams,
    pub eta_a: f64,
    pub eta_b: f64,
    /// Pair production rate in pairs per second.
    pub r0: f64,
    /// Measurement time per setting combination, seconds.
    pub t: f64,
    /// Dark-count rate per party, events per second.
    pub zeta: f64,
    /// Total coincidence-window width, seconds.
    pub tau_c: f64,
    pub alpha1: MeasurementAngle,
    pub alpha2: MeasurementAngle,
    pub beta1: MeasurementAngle,
    pub beta2: MeasurementAngle,
}

impl ExperimentConfig {
    /// Parameters of the 300 s accumulated measurement on the Sagnac source.
    pub fn paper() -> Self {
        ExperimentConfig {
            state: StateParams {
                r: 0.297,
                visibility: 0.965,
            },
            eta_a: 0.7377,
            eta_b: 0.7859,
            r0: 80_700.0,
            t: 300.0,
            zeta: 10.0,
            tau_c: 180e-9,
            alpha1: MeasurementAngle(85.6),
            alpha2: MeasurementAngle(118.0),
            beta1: MeasurementAngle(-5.4),
            beta2: MeasurementAngle(25.9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        let check = |name, value: f64, ok: bool, reason| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter { name, value, reason })
            }
        };
        check(
            "etaA",
            self.eta_a,
            (0.0..=1.0).contains(&self.eta_a),
            "must lie in [0, 1]",
        )?;
        check(
            "etaB",
            self.eta_b,
            (0.0..=1.0).contains(&self.eta_b),
            "must lie in [0, 1]",
        )?;
        check("r0", self.r0, self.r0 >= 0.0, "must be non-negative")?;
        check("t", self.t, self.t > 0.0, "must be positive")?;
        check("zeta", self.zeta, self.zeta >= 0.0, "must be non-negative")?;
        check("tauC", self.tau_c, self.tau_c >= 0.0, "must be non-negative")?;
        for (name, a) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ] {
            check(name, a.0, true, "must be finite")?;
        }
        Ok(())
    }

    /// Number of pairs produced in the measurement time, R0 * T.
    pub fn pairs(&self) -> f64 {
        self.r0 * self.t
    }

    pub fn eta(&self, party: Party) -> f64 {
        match party {
            Party::A => self.eta_a,
            Party::B => self.eta_b,
        }
    }

    pub fn alpha(&self, index: u8) -> MeasurementAngle {
        if index == 1 {
            self.alpha1
        } else {
            self.alpha2
        }
    }

    pub fn beta(&self, index: u8) -> MeasurementAngle {
        if index == 1 {
            self.beta1
        } else {
            self.beta2
        }
    }

    /// The (alpha, beta) angles of a setting combination.
    pub fn angles(&self, combo: Combo) -> (MeasurementAngle, MeasurementAngle) {
        (self.alpha(combo.alpha_index()), self.beta(combo.beta_index()))
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        build_state(self.state)
    }
}

/// Raw singles before dark counts: eta * R0 * T * Tr[rho (P (x) I)] (or I (x) P for B).
pub fn predict_raw_singles(cfg: &ExperimentConfig, party: Party, a: MeasurementAngle) -> Result<f64> {
    let rho = cfg.density_matrix()?;
    Ok(raw_singles_with(&rho, cfg, party, a))
}

fn raw_singles_with(rho: &DensityMatrix, cfg: &ExperimentConfig, party: Party, a: MeasurementAngle) -> f64 {
    let p = polarizer_projector(a);
    let id = Matrix2::identity();
    let prob = match party {
        Party::A => rho.expectation(&p, &id),
        Party::B => rho.expectation(&id, &p),
    };
    cfg.eta(party) * cfg.pairs() * prob.max(0.0)
}

/// Raw coincidences before accidentals: etaA * etaB * R0 * T * Tr[rho (P_A (x) P_B)].
pub fn predict_raw_coincidence(cfg: &ExperimentConfig, a: MeasurementAngle, b: MeasurementAngle) -> Result<f64> {
    let rho = cfg.density_matrix()?;
    Ok(raw_coincidence_with(&rho, cfg, a, b))
}

fn raw_coincidence_with(rho: &DensityMatrix, cfg: &ExperimentConfig, a: MeasurementAngle, b: MeasurementAngle) -> f64 {
    let prob = rho.expectation(&polarizer_projector(a), &polarizer_projector(b));
    cfg.eta_a * cfg.eta_b * cfg.pairs() * prob.max(0.0)
}

/// Adds the dark-count background zeta * T.
pub fn correct_singles(raw: f64, cfg: &ExperimentConfig) -> f64 {
    raw + cfg.zeta * cfg.t
}

/// Expected accidental coincidences in time T given observed singles and raw
/// true coincidences. An accidental only counts where the true partner was
/// not detected, hence the two `(1 - c/s)` factors.
pub fn accidentals(s_a: f64, s_b: f64, c_raw: f64, cfg: &ExperimentConfig) -> Result<f64> {
    if !(s_a > 0.0 && s_b > 0.0) {
        return Err(Error::Domain(format!(
            "singles must be positive, got sA={s_a}, sB={s_b}"
        )));
    }
    if c_raw < 0.0 || c_raw > s_a || c_raw > s_b {
        return Err(Error::Domain(format!(
            "raw coincidences {c_raw} outside [0, min(sA={s_a}, sB={s_b})]"
        )));
    }
    Ok(s_a * s_b * (cfg.tau_c / cfg.t) * (1.0 - c_raw / s_a) * (1.0 - c_raw / s_b))
}

pub fn observed_coincidence(c_raw: f64, acc: f64) -> f64 {
    c_raw + acc
}

/// Full model output for all four setting combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Singles before dark counts and coincidences before accidentals.
    pub raw: RoundData<f64>,
    /// Observed singles and coincidences.
    pub observed: RoundData<f64>,
    /// Accidental coincidences per combination, in sequence order.
    pub accidentals: [f64; 4],
    /// Eberhard value of the observed counts.
    pub j: f64,
}

impl Prediction {
    pub fn accidental(&self, combo: Combo) -> f64 {
        self.accidentals[combo.position()]
    }

    /// Share of the observed coincidences that are accidental.
    pub fn accidental_fraction(&self, combo: Combo) -> f64 {
        self.accidental(combo) / self.observed.block(combo).c_oo
    }
}

pub fn predict_counts(cfg: &ExperimentConfig) -> Result<Prediction> {
    cfg.validate()?;
    let rho = cfg.density_matrix()?;
    let mut raw = Vec::with_capacity(4);
    let mut observed = Vec::with_capacity(4);
    let mut acc = [0.0; 4];
    for combo in Combo::SEQUENCE {
        let (a, b) = cfg.angles(combo);
        let sa_raw = raw_singles_with(&rho, cfg, Party::A, a);
        let sb_raw = raw_singles_with(&rho, cfg, Party::B, b);
        let c_raw = raw_coincidence_with(&rho, cfg, a, b);
        let sa = correct_singles(sa_raw, cfg);
        let sb = correct_singles(sb_raw, cfg);
        let c_acc = if sa > 0.0 && sb > 0.0 {
            accidentals(sa, sb, c_raw.min(sa).min(sb), cfg)?
        } else {
            0.0
        };
        acc[combo.position()] = c_acc;
        raw.push(CountsBlock::new(combo, sa_raw, sb_raw, c_raw));
        observed.push(CountsBlock::new(combo, sa, sb, observed_coincidence(c_raw, c_acc)));
    }
    let observed = RoundData::from_blocks(observed)?;
    Ok(Prediction {
        raw: RoundData::from_blocks(raw)?,
        j: eberhard_j(&observed),
        observed,
        accidentals: acc,
    })
}

/// Data value, model value and relative deviation of one compared quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compared {
    pub data: f64,
    pub model: f64,
    /// (model - data) / |data|, as a fraction.
    pub deviation: f64,
}

impl Compared {
    pub fn new(data: f64, model: f64) -> Self {
        Compared {
            data,
            model,
            deviation: relative_deviation(data, model),
        }
    }

    pub fn deviation_percent(&self) -> f64 {
        100.0 * self.deviation
    }
}

/// Relative difference of the model from the data. The denominator is |data|
/// so that the sign follows model - data even for negative quantities.
pub fn relative_deviation(data: f64, model: f64) -> f64 {
    if data == model {
        0.0
    } else {
        (model - data) / data.abs()
    }
}

/// Model versus data for the seven headline quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub c11: Compared,
    pub c12: Compared,
    pub c21: Compared,
    pub c22: Compared,
    /// Alice's alpha1 singles, taken from the (alpha1, beta2) block.
    pub s_a1: Compared,
    /// Bob's beta1 singles, taken from the (alpha2, beta1) block.
    pub s_b1: Compared,
    pub j: Compared,
}

impl ModelComparison {
    pub const LABELS: [&'static str; 7] = [
        "C(a1,b1)", "C(a1,b2)", "C(a2,b1)", "C(a2,b2)", "S_A(a1)", "S_B(b1)", "J",
    ];

    pub fn entries(&self) -> [Compared; 7] {
        [self.c11, self.c12, self.c21, self.c22, self.s_a1, self.s_b1, self.j]
    }
}

pub fn compare_model(data: &RoundData<f64>, model: &RoundData<f64>) -> ModelComparison {
    let c = |combo| Compared::new(data.block(combo).c_oo, model.block(combo).c_oo);
    ModelComparison {
        c11: c(Combo::A1B1),
        c12: c(Combo::A1B2),
        c21: c(Combo::A2B1),
        c22: c(Combo::A2B2),
        s_a1: Compared::new(data.block(Combo::A1B2).s_a, model.block(Combo::A1B2).s_a),
        s_b1: Compared::new(data.block(Combo::A2B1).s_b, model.block(Combo::A2B1).s_b),
        j: Compared::new(eberhard_j(data), eberhard_j(model)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn paper_state_entries() {
        // 1/(1+r^2), V r/(1+r^2), r^2/(1+r^2) evaluated by hand for r=0.297, V=0.965.
        let rho = build_state(StateParams::new(0.297, 0.965).unwrap()).unwrap();
        assert!(close(rho.entry(1, 1).re, 0.918941, 5e-7));
        assert!(close(rho.entry(1, 2).re, 0.263373, 5e-7));
        assert!(close(rho.entry(2, 1).re, 0.263373, 5e-7));
        assert!(close(rho.entry(2, 2).re, 0.081059, 5e-7));
        for (i, j) in [(0, 0), (3, 3), (0, 1), (1, 3), (0, 3), (2, 3)] {
            assert_eq!(rho.entry(i, j), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn symmetric_and_dephased_states() {
        let rho = build_state(StateParams::new(1.0, 1.0).unwrap()).unwrap();
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert!(close(rho.entry(i, j).re, 0.5, 1e-15));
        }
        assert!(close(rho.eigenvalues()[3], 1.0, 1e-12));

        let rho = build_state(StateParams::new(0.5, 0.0).unwrap()).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| rho.entry(i, i).re).collect();
        assert!(diag.iter().zip([0.0, 0.8, 0.2, 0.0]).all(|(a, b)| close(*a, b, 1e-15)));
        assert_eq!(rho.entry(1, 2).re, 0.0);
    }

    #[test]
    fn invalid_state_params_are_rejected() {
        assert!(matches!(
            StateParams::new(0.0, 0.5),
            Err(Error::Parameter { name: "r", .. })
        ));
        assert!(StateParams::new(1.2, 0.5).is_err());
        assert!(StateParams::new(0.5, -0.1).is_err());
        assert!(StateParams::new(0.5, 1.01).is_err());
        assert!(StateParams::new(f64::NAN, 0.5).is_err());
        assert!(build_state(StateParams {
            r: 2.0,
            visibility: 0.5
        })
        .is_err());
    }

    #[test]
    fn projector_special_angles() {
        let h = polarizer_projector(0.0.into());
        let v = polarizer_projector(90.0.into());
        let d = polarizer_projector(45.0.into());
        assert!((h - Matrix2::new(1.0, 0.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((v - Matrix2::new(0.0, 0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!((d - Matrix2::new(0.5, 0.5, 0.5, 0.5)).norm() < 1e-15);
        for deg in [-37.0, 12.5, 200.0] {
            let p = polarizer_projector(deg.into());
            assert!((p * p - p).norm() < 1e-14);
            assert!(close(p.trace(), 1.0, 1e-14));
        }
    }

    #[test]
    fn raw_singles_edge_cases() {
        let mut cfg = ExperimentConfig::paper();
        cfg.eta_a = 0.0;
        assert_eq!(predict_raw_singles(&cfg, Party::A, cfg.alpha1).unwrap(), 0.0);

        let mut cfg = ExperimentConfig::paper();
        cfg.state = StateParams::new(1.0, 0.3).unwrap();
        let half = cfg.eta_b * cfg.pairs() / 2.0;
        for deg in [-20.0, 0.0, 33.3, 90.0] {
            let s = predict_raw_singles(&cfg, Party::B, deg.into()).unwrap();
            assert!(close(s, half, 1e-6 * half));
        }
    }

    #[test]
    fn raw_singles_alpha1_matches_published_model_minus_dark_counts() {
        let cfg = ExperimentConfig::paper();
        let s = predict_raw_singles(&cfg, Party::A, cfg.alpha1).unwrap();
        assert!(close(s, 1_535_766.0, 1.0), "{s}");
        assert!(close(correct_singles(s, &cfg), 1_538_766.0, 1.0));
    }

    #[test]
    fn raw_coincidence_cases() {
        let cfg = ExperimentConfig::paper();
        // Frozen from an independent numpy evaluation of the trace formula.
        let c = predict_raw_coincidence(&cfg, cfg.alpha1, cfg.beta1).unwrap();
        assert!(close(c, 1_068_711.4, 1.0), "{c}");

        let mut zero = cfg;
        zero.eta_b = 0.0;
        assert_eq!(predict_raw_coincidence(&zero, cfg.alpha1, cfg.beta1).unwrap(), 0.0);

        // Pure |HV>+|VH>: parallel polarizers at H never fire together, crossed ones do.
        let mut ideal = cfg;
        ideal.state = StateParams::new(1.0, 1.0).unwrap();
        ideal.eta_a = 1.0;
        ideal.eta_b = 1.0;
        let n = ideal.pairs();
        assert!(predict_raw_coincidence(&ideal, 0.0.into(), 0.0.into()).unwrap() < 1e-9 * n);
        let crossed = predict_raw_coincidence(&ideal, 0.0.into(), 90.0.into()).unwrap();
        assert!(close(crossed, n / 2.0, 1e-9 * n));
        // Diagonal basis is perfectly correlated for the symmetric state.
        let dd = predict_raw_coincidence(&ideal, 45.0.into(), 45.0.into()).unwrap();
        assert!(close(dd, n / 2.0, 1e-9 * n));
    }

    #[test]
    fn singles_correction() {
        let cfg = ExperimentConfig::paper();
        assert_eq!(correct_singles(1_535_766.0, &cfg), 1_538_766.0);
        assert_eq!(correct_singles(0.0, &cfg), 3000.0);
        let mut dark_free = cfg;
        dark_free.zeta = 0.0;
        assert_eq!(correct_singles(1234.5, &dark_free), 1234.5);
    }

    #[test]
    fn accidental_cases() {
        let cfg = ExperimentConfig::paper();
        let p = predict_counts(&cfg).unwrap();
        let b = p.observed.block(Combo::A2B2);
        let acc = accidentals(b.s_a, b.s_b, p.raw.block(Combo::A2B2).c_oo, &cfg).unwrap();
        assert!(close(acc, 12_758.3, 1.0), "{acc}");
        let frac = acc / b.c_oo;
        assert!((0.17..0.19).contains(&frac));

        let mut no_window = cfg;
        no_window.tau_c = 0.0;
        assert_eq!(accidentals(1e6, 1e6, 1e5, &no_window).unwrap(), 0.0);
        assert_eq!(accidentals(5e5, 1e6, 5e5, &cfg).unwrap(), 0.0);
        assert!(accidentals(1e5, 1e6, 2e5, &cfg).is_err());
        assert!(accidentals(0.0, 1e6, 0.0, &cfg).is_err());
        assert!(accidentals(1e5, 1e6, -1.0, &cfg).is_err());
    }

    #[test]
    fn observed_is_raw_plus_accidentals() {
        assert_eq!(observed_coincidence(1_068_711.0, 175.0), 1_068_886.0);
        assert_eq!(observed_coincidence(42.0, 0.0), 42.0);
        assert_eq!(observed_coincidence(0.0, 7.5), 7.5);
    }

    #[test]
    fn ideal_anticorrelated_prediction() {
        let cfg = ExperimentConfig {
            state: StateParams::new(1.0, 1.0).unwrap(),
            eta_a: 1.0,
            eta_b: 1.0,
            zeta: 0.0,
            tau_c: 0.0,
            alpha1: 0.0.into(),
            alpha2: 0.0.into(),
            beta1: 90.0.into(),
            beta2: 90.0.into(),
            ..ExperimentConfig::paper()
        };
        let p = predict_counts(&cfg).unwrap();
        let n = cfg.pairs();
        assert!(close(p.observed.block(Combo::A1B1).s_a, n / 2.0, 1e-6));
        // |HV> + |VH>: crossed polarizers (H, V) fire together half the time.
        assert!(close(p.observed.block(Combo::A1B1).c_oo, n / 2.0, 1e-6));
        let mut hh = cfg;
        hh.beta1 = 0.0.into();
        let p = predict_counts(&hh).unwrap();
        assert!(p.observed.block(Combo::A1B1).c_oo.abs() < 1e-6);
        assert!(close(p.observed.block(Combo::A1B1).s_a, n / 2.0, 1e-6));
    }

    #[test]
    fn no_window_no_dark_means_observed_equals_raw() {
        let mut cfg = ExperimentConfig::paper();
        cfg.zeta = 0.0;
        cfg.tau_c = 0.0;
        let p = predict_counts(&cfg).unwrap();
        assert_eq!(p.raw, p.observed);
        assert_eq!(p.accidentals, [0.0; 4]);
    }

    #[test]
    fn invalid_config_is_a_parameter_error() {
        let mut cfg = ExperimentConfig::paper();
        cfg.eta_a = 1.5;
        let err = predict_counts(&cfg).unwrap_err();
        assert!(err.is_parameter_error());
        assert!(err.to_string().contains("etaA"));
        cfg = ExperimentConfig::paper();
        cfg.t = 0.0;
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::paper();
        cfg.alpha2 = f64::INFINITY.into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deviation_semantics() {
        assert!(close(relative_deviation(100.0, 101.0), 0.01, 1e-15));
        assert!(relative_deviation(-126_715.0, -120_191.0) > 0.0);
        let r = predict_counts(&ExperimentConfig::paper()).unwrap().observed;
        let cmp = compare_model(&r, &r);
        assert!(cmp.entries().iter().all(|c| c.deviation == 0.0));
    }

    #[test]
    fn config_json_uses_camel_case_fields() {
        let json = serde_json::to_value(ExperimentConfig::paper()).unwrap();
        for key in ["state", "etaA", "etaB", "r0", "t", "zeta", "tauC", "alpha1", "beta2"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["state"]["v"], 0.965);
        let back: ExperimentConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, ExperimentConfig::paper());
    }
}
