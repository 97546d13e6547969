//! Setting combinations, count blocks and rounds shared by every analysis stage.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::A => f.write_str("A"),
            Party::B => f.write_str("B"),
        }
    }
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Party::A),
            "B" | "b" => Ok(Party::B),
            other => Err(Error::Structure(format!("unknown party `{other}`"))),
        }
    }
}

/// One of the four local-setting pairs (alpha_i, beta_j).
///
/// The variant order is the experimental switching sequence, in which
/// consecutive combinations differ in one local setting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Combo {
    A1B1,
    A1B2,
    A2B2,
    A2B1,
}

impl Combo {
    /// Experimental sequence order.
    pub const SEQUENCE: [Combo; 4] = [Combo::A1B1, Combo::A1B2, Combo::A2B2, Combo::A2B1];

    /// Row order of the accumulated-singles table (alpha-major).
    pub const ALPHA_MAJOR: [Combo; 4] = [Combo::A1B1, Combo::A1B2, Combo::A2B1, Combo::A2B2];

    pub fn from_indices(alpha: u8, beta: u8) -> Result<Self> {
        match (alpha, beta) {
            (1, 1) => Ok(Combo::A1B1),
            (1, 2) => Ok(Combo::A1B2),
            (2, 2) => Ok(Combo::A2B2),
            (2, 1) => Ok(Combo::A2B1),
            _ => Err(Error::Structure(format!(
                "setting indices must be 1 or 2, got ({alpha}, {beta})"
            ))),
        }
    }

    pub fn alpha_index(self) -> u8 {
        match self {
            Combo::A1B1 | Combo::A1B2 => 1,
            Combo::A2B2 | Combo::A2B1 => 2,
        }
    }

    pub fn beta_index(self) -> u8 {
        match self {
            Combo::A1B1 | Combo::A2B1 => 1,
            Combo::A1B2 | Combo::A2B2 => 2,
        }
    }

    /// Local setting index of `party` in this combination.
    pub fn setting(self, party: Party) -> u8 {
        match party {
            Party::A => self.alpha_index(),
            Party::B => self.beta_index(),
        }
    }

    /// Position in [`Combo::SEQUENCE`].
    pub fn position(self) -> usize {
        match self {
            Combo::A1B1 => 0,
            Combo::A1B2 => 1,
            Combo::A2B2 => 2,
            Combo::A2B1 => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Combo::A1B1 => "a1b1",
            Combo::A1B2 => "a1b2",
            Combo::A2B2 => "a2b2",
            Combo::A2B1 => "a2b1",
        }
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Combo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix('f').unwrap_or(&t);
        match t {
            "a1b1" | "11" => Ok(Combo::A1B1),
            "a1b2" | "12" => Ok(Combo::A1B2),
            "a2b2" | "22" => Ok(Combo::A2B2),
            "a2b1" | "21" => Ok(Combo::A2B1),
            _ => Err(Error::Structure(format!("unknown setting combination `{s}`"))),
        }
    }
}

impl From<Combo> for String {
    fn from(c: Combo) -> String {
        c.label().to_owned()
    }
}

impl TryFrom<String> for Combo {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Scalar count type: exact integers for measured data, reals for model and
/// normalized data.
pub trait Count: Copy + PartialEq + PartialOrd + fmt::Debug + Add<Output = Self> + Default {
    /// Type of a signed combination of counts, such as the Eberhard value.
    type Signed: Copy + fmt::Debug + PartialOrd + Add<Output = Self::Signed> + Sub<Output = Self::Signed>;

    fn signed(self) -> Self::Signed;
    fn to_f64(self) -> f64;
}

impl Count for u64 {
    type Signed = i64;

    fn signed(self) -> i64 {
        i64::try_from(self).expect("count exceeds i64 range")
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Count for f64 {
    type Signed = f64;

    fn signed(self) -> f64 {
        self
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Singles and ordinary-ordinary coincidences recorded in one setting combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountsBlock<T = u64> {
    pub combo: Combo,
    #[serde(rename = "sA")]
    pub s_a: T,
    #[serde(rename = "sB")]
    pub s_b: T,
    #[serde(rename = "cOO")]
    pub c_oo: T,
}

impl<T: Count> CountsBlock<T> {
    pub fn new(combo: Combo, s_a: T, s_b: T, c_oo: T) -> Self {
        CountsBlock { combo, s_a, s_b, c_oo }
    }

    pub fn singles(&self, party: Party) -> T {
        match party {
            Party::A => self.s_a,
            Party::B => self.s_b,
        }
    }

    pub fn to_real(&self) -> CountsBlock<f64> {
        CountsBlock::new(self.combo, self.s_a.to_f64(), self.s_b.to_f64(), self.c_oo.to_f64())
    }

    /// Physical data has no more coincidences than singles on either side.
    pub fn is_physical(&self) -> bool {
        self.c_oo <= self.s_a && self.c_oo <= self.s_b
    }
}

impl CountsBlock<f64> {
    pub fn scaled(&self, factor: f64) -> Self {
        CountsBlock::new(self.combo, self.s_a * factor, self.s_b * factor, self.c_oo * factor)
    }
}

/// The four setting combinations of one measurement round, stored in
/// [`Combo::SEQUENCE`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundData<T = u64> {
    blocks: [CountsBlock<T>; 4],
}

impl<T: Count> RoundData<T> {
    /// Builds a round from blocks given in any order; every combination must
    /// appear exactly once.
    pub fn from_blocks(blocks: impl IntoIterator<Item = CountsBlock<T>>) -> Result<Self> {
        let mut slots: [Option<CountsBlock<T>>; 4] = [None; 4];
        for block in blocks {
            let slot = &mut slots[block.combo.position()];
            if slot.is_some() {
                return Err(Error::Structure(format!(
                    "setting combination {} appears more than once",
                    block.combo
                )));
            }
            *slot = Some(block);
        }
        let mut out = [CountsBlock::new(Combo::A1B1, T::default(), T::default(), T::default()); 4];
        for (combo, (dst, src)) in Combo::SEQUENCE.iter().zip(out.iter_mut().zip(slots)) {
            *dst = src.ok_or_else(|| Error::Structure(format!("setting combination {combo} is missing")))?;
        }
        Ok(RoundData { blocks: out })
    }

    pub fn block(&self, combo: Combo) -> &CountsBlock<T> {
        &self.blocks[combo.position()]
    }

    pub fn blocks(&self) -> &[CountsBlock<T>; 4] {
        &self.blocks
    }

    pub fn to_real(&self) -> RoundData<f64> {
        RoundData {
            blocks: self.blocks.map(|b| b.to_real()),
        }
    }

    /// Element-wise sum over rounds; `None` for an empty iterator.
    pub fn accumulate<'a, I>(rounds: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a RoundData<T>>,
        T: 'a,
    {
        rounds.into_iter().copied().reduce(|acc, r| acc + r)
    }

    pub fn map_blocks(&self, f: impl Fn(&CountsBlock<T>) -> CountsBlock<T>) -> Self {
        RoundData {
            blocks: self.blocks.each_ref().map(|b| {
                let out = f(b);
                debug_assert_eq!(out.combo, b.combo);
                out
            }),
        }
    }
}

impl<T: Count> Add for RoundData<T> {
    type Output = RoundData<T>;

    fn add(self, rhs: Self) -> Self {
        let mut blocks = self.blocks;
        for (b, r) in blocks.iter_mut().zip(rhs.blocks) {
            b.s_a = b.s_a + r.s_a;
            b.s_b = b.s_b + r.s_b;
            b.c_oo = b.c_oo + r.c_oo;
        }
        RoundData { blocks }
    }
}
