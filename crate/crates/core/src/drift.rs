//! Production-rate drift normalization.
//!
//! Within a round, a party's singles for a fixed local setting do not depend
//! on the other party's setting, so the ratio of those singles between two
//! blocks measures the ratio of the average production rates. Chaining such
//! ratios along a path fixes a correction factor `f` per setting combination
//! up to one overall scale, which the baseline policy then pins. Dividing
//! every count by its block's `f` yields the counts expected at constant
//! production rate, and their Eberhard value `J'`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequality::{eberhard_j, series_stats, SeriesStats};
use crate::types::{Combo, Count, CountsBlock, Party, RoundData};

/// "Express f(to) as a multiple of f(from) by comparing `channel` singles."
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLink {
    pub from: Combo,
    pub to: Combo,
    pub channel: Party,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PathLink>", into = "Vec<PathLink>")]
pub struct NormalizationPath {
    links: Vec<PathLink>,
}

impl NormalizationPath {
    pub fn new(links: Vec<PathLink>) -> Result<Self> {
        if links.len() != 3 {
            return Err(Error::Structure(format!(
                "a normalization path needs 3 links, got {}",
                links.len()
            )));
        }
        let mut reached = [false; 4];
        reached[links[0].from.position()] = true;
        for (i, l) in links.iter().enumerate() {
            if l.from.setting(l.channel) != l.to.setting(l.channel) {
                return Err(Error::Structure(format!(
                    "link {i} ({}->{} via {}) compares singles of different settings",
                    l.from, l.to, l.channel
                )));
            }
            if !reached[l.from.position()] {
                return Err(Error::Structure(format!(
                    "link {i} starts from {}, which is not yet reached",
                    l.from
                )));
            }
            if std::mem::replace(&mut reached[l.to.position()], true) {
                return Err(Error::Structure(format!("link {i} reaches {} a second time", l.to)));
            }
        }
        Ok(NormalizationPath { links })
    }

    /// f11 -> f12 via Alice's a1, f12 -> f22 via Bob's b2, f22 -> f21 via Alice's a2.
    pub fn sequence() -> Self {
        NormalizationPath {
            links: vec![
                PathLink {
                    from: Combo::A1B1,
                    to: Combo::A1B2,
                    channel: Party::A,
                },
                PathLink {
                    from: Combo::A1B2,
                    to: Combo::A2B2,
                    channel: Party::B,
                },
                PathLink {
                    from: Combo::A2B2,
                    to: Combo::A2B1,
                    channel: Party::A,
                },
            ],
        }
    }

    pub fn links(&self) -> &[PathLink] {
        &self.links
    }
}

impl Default for NormalizationPath {
    fn default() -> Self {
        Self::sequence()
    }
}

impl TryFrom<Vec<PathLink>> for NormalizationPath {
    type Error = Error;

    fn try_from(links: Vec<PathLink>) -> Result<Self> {
        NormalizationPath::new(links)
    }
}

impl From<NormalizationPath> for Vec<PathLink> {
    fn from(p: NormalizationPath) -> Self {
        p.links
    }
}

impl fmt::Display for NormalizationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.links.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(
                f,
                "{}{}>{}{}:{}",
                l.from.alpha_index(),
                l.from.beta_index(),
                l.to.alpha_index(),
                l.to.beta_index(),
                l.channel
            )?;
        }
        Ok(())
    }
}

/// Parses `11>12:A,12>22:B,22>21:A`; combos may also be written `a1b2`.
impl FromStr for NormalizationPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("sequence") || s.trim().eq_ignore_ascii_case("default") {
            return Ok(Self::sequence());
        }
        let links = s
            .split(',')
            .map(|item| {
                let bad = || Error::Structure(format!("malformed path link `{item}`"));
                let (pair, channel) = item.split_once(':').ok_or_else(bad)?;
                let (from, to) = pair.split_once('>').ok_or_else(bad)?;
                Ok(PathLink {
                    from: from.parse()?,
                    to: to.parse()?,
                    channel: channel.trim().parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        NormalizationPath::new(links)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BaselinePolicy {
    /// The smallest factor is set to 1, so every other factor is > 1.
    #[default]
    SmallestF,
    FixedCombo(Combo),
}

impl FromStr for BaselinePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smallest" | "smallest-f" | "min" => Ok(BaselinePolicy::SmallestF),
            other => Ok(BaselinePolicy::FixedCombo(other.parse()?)),
        }
    }
}

/// Per-combination correction factors, proportional to the average production
/// rate during each block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionFactors {
    /// Indexed by [`Combo::position`].
    values: [f64; 4],
}

impl CorrectionFactors {
    pub fn get(&self, combo: Combo) -> f64 {
        self.values[combo.position()]
    }

    pub fn f11(&self) -> f64 {
        self.get(Combo::A1B1)
    }

    pub fn f12(&self) -> f64 {
        self.get(Combo::A1B2)
    }

    pub fn f22(&self) -> f64 {
        self.get(Combo::A2B2)
    }

    pub fn f21(&self) -> f64 {
        self.get(Combo::A2B1)
    }

    /// Factors in sequence order.
    pub fn values(&self) -> [f64; 4] {
        self.values
    }

    pub fn as_percent(&self) -> [f64; 4] {
        self.values.map(|v| 100.0 * v)
    }

    pub fn uniform() -> Self {
        CorrectionFactors { values: [1.0; 4] }
    }

    /// Factors in sequence order; all must be positive.
    pub fn from_values(values: [f64; 4]) -> Result<Self> {
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "correction factors must be positive, got {values:?}"
            )));
        }
        Ok(CorrectionFactors { values })
    }

    fn rebased(mut self, policy: BaselinePolicy) -> Self {
        let base = match policy {
            BaselinePolicy::FixedCombo(c) => self.get(c),
            // first minimum in sequence order
            BaselinePolicy::SmallestF => self.values.iter().copied().fold(f64::INFINITY, f64::min),
        };
        for v in &mut self.values {
            *v /= base;
        }
        self
    }
}

pub fn compute_factors<T: Count>(
    round: &RoundData<T>,
    path: &NormalizationPath,
    policy: BaselinePolicy,
) -> Result<CorrectionFactors> {
    let mut values = [f64::NAN; 4];
    values[path.links[0].from.position()] = 1.0;
    for l in &path.links {
        let from = round.block(l.from).singles(l.channel).to_f64();
        let to = round.block(l.to).singles(l.channel).to_f64();
        if !(from > 0.0 && to > 0.0) {
            return Err(Error::Domain(format!(
                "link {}->{} compares zero {} singles",
                l.from, l.to, l.channel
            )));
        }
        values[l.to.position()] = values[l.from.position()] * to / from;
    }
    Ok(CorrectionFactors { values }.rebased(policy))
}

/// Divides every count of block (i, j) by f_ij.
pub fn normalize_round<T: Count>(round: &RoundData<T>, f: &CorrectionFactors) -> RoundData<f64> {
    round.to_real().map_blocks(|b| b.scaled(1.0 / f.get(b.combo)))
}

pub fn j_prime<T: Count>(round: &RoundData<T>, path: &NormalizationPath, policy: BaselinePolicy) -> Result<f64> {
    let f = compute_factors(round, path, policy)?;
    Ok(eberhard_j(&normalize_round(round, &f)))
}

/// J, correction factors and J' of one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundNormalization {
    pub j: f64,
    pub factors: CorrectionFactors,
    pub j_prime: f64,
}

pub fn normalize_report<T: Count>(
    round: &RoundData<T>,
    path: &NormalizationPath,
    policy: BaselinePolicy,
) -> Result<RoundNormalization> {
    let factors = compute_factors(round, path, policy)?;
    Ok(RoundNormalization {
        j: eberhard_j(&round.to_real()),
        factors,
        j_prime: eberhard_j(&normalize_round(round, &factors)),
    })
}

/// Normalizes each round independently; rounds are never normalized against
/// each other.
pub fn j_prime_series<T: Count>(
    rounds: &[RoundData<T>],
    path: &NormalizationPath,
    policy: BaselinePolicy,
) -> Result<Vec<RoundNormalization>> {
    rounds.iter().map(|r| normalize_report(r, path, policy)).collect()
}

/// Statistics of max(J, J') per round: a local realist only normalizes the
/// rounds where it helps.
pub fn adversarial_series<T: Count>(
    rounds: &[RoundData<T>],
    path: &NormalizationPath,
    policy: BaselinePolicy,
) -> Result<SeriesStats> {
    let values: Vec<f64> = j_prime_series(rounds, path, policy)?
        .iter()
        .map(|r| r.j.max(r.j_prime))
        .collect();
    series_stats(&values)
}

/// Accumulates all rounds first and normalizes the totals as one round.
pub fn normalize_total<T: Count>(
    rounds: &[RoundData<T>],
    path: &NormalizationPath,
    policy: BaselinePolicy,
) -> Result<RoundNormalization> {
    let total = RoundData::accumulate(rounds)
        .ok_or_else(|| Error::Domain("cannot normalize the total of zero rounds".into()))?;
    normalize_report(&total, path, policy)
}

/// One-sigma uncertainty of J' under independent Poisson statistics of the
/// twelve disjoint click classes (A-only, B-only, both) of a round, by
/// linear propagation with central differences.
pub fn j_prime_sigma<T: Count>(round: &RoundData<T>, path: &NormalizationPath, policy: BaselinePolicy) -> Result<f64> {
    let real = round.to_real();
    let classes: Vec<[f64; 3]> = real
        .blocks()
        .iter()
        .map(|b| [b.s_a - b.c_oo, b.s_b - b.c_oo, b.c_oo])
        .collect();
    let rebuild = |classes: &[[f64; 3]]| {
        RoundData::from_blocks(
            Combo::SEQUENCE
                .iter()
                .zip(classes)
                .map(|(&c, &[a, b, both])| CountsBlock::new(c, a + both, b + both, both)),
        )
    };
    let mut var = 0.0;
    for k in 0..12 {
        let (blk, cls) = (k / 3, k % 3);
        let v = classes[blk][cls];
        if v <= 0.0 {
            continue;
        }
        let h = (1e-4 * v).max(0.5).min(v);
        let mut up = classes.clone();
        let mut down = classes.clone();
        up[blk][cls] += h;
        down[blk][cls] -= h;
        let d = (j_prime(&rebuild(&up)?, path, policy)? - j_prime(&rebuild(&down)?, path, policy)?) / (2.0 * h);
        var += d * d * v;
    }
    Ok(var.sqrt())
}
