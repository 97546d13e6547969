//! Counts datasets (JSON) and detection-event logs (CSV).

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ExperimentConfig;
use crate::sim::{BlockId, EventRecord, EventStreams, IntensityProfile, LhvStrategy, Schedule};
use crate::types::{Combo, CountsBlock, Party, RoundData};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMeta {
    /// Alice's polarizer angle in degrees, when known.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub duration_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRound {
    pub counts: RoundData<u64>,
    /// Indexed by [`Combo::position`].
    pub meta: [BlockMeta; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationMeta {
    pub generator: String,
    pub rng: String,
    pub seed: u64,
    pub schedule: Schedule,
    pub profile: IntensityProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhv: Option<LhvStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_rate: Option<f64>,
    pub tau_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metadata {
    pub source: String,
    /// Order in which the combinations were measured within a round.
    pub sequence: Vec<Combo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationMeta>,
}

impl Default for Metadata {
    fn default() -> Self {
        Metadata {
            source: String::new(),
            sequence: Combo::SEQUENCE.to_vec(),
            simulation: None,
        }
    }
}

/// Rounds of counts with provenance; `totals`, when present, must equal the
/// element-wise sum of the rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub metadata: Metadata,
    pub rounds: Vec<DatasetRound>,
    pub totals: Option<DatasetRound>,
}

impl Dataset {
    pub fn round_counts(&self) -> Vec<RoundData<u64>> {
        self.rounds.iter().map(|r| r.counts).collect()
    }

    pub fn accumulated(&self) -> Option<RoundData<u64>> {
        RoundData::accumulate(self.rounds.iter().map(|r| &r.counts))
    }

    /// Checks the totals block against the rounds.
    pub fn validate(&self) -> Result<()> {
        let Some(totals) = &self.totals else {
            return Ok(());
        };
        let Some(sum) = self.accumulated() else {
            return Err(Error::validation("totals", "totals given for a dataset without rounds"));
        };
        let mut diffs = Vec::new();
        for combo in Combo::SEQUENCE {
            let (t, s) = (totals.counts.block(combo), sum.block(combo));
            for (name, tv, sv) in [("sA", t.s_a, s.s_a), ("sB", t.s_b, s.s_b), ("cOO", t.c_oo, s.c_oo)] {
                if tv != sv {
                    diffs.push(format!("{combo}.{name}: totals {tv} != sum of rounds {sv}"));
                }
            }
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::validation("totals", diffs.join("; ")))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        file.into_dataset()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&DatasetFile::from_dataset(self))?;
        s.push('\n');
        Ok(s)
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Dataset::from_json(&text)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset.to_json()?).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format_version: u32,
    metadata: Metadata,
    rounds: Vec<RoundFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    totals: Option<RoundFile>,
}

#[derive(Serialize, Deserialize)]
struct RoundFile {
    blocks: Vec<BlockFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct BlockFile {
    combo: Combo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(rename = "sA")]
    s_a: u64,
    #[serde(rename = "sB")]
    s_b: u64,
    #[serde(rename = "cOO")]
    c_oo: u64,
    duration_seconds: f64,
}

impl RoundFile {
    fn from_round(r: &DatasetRound) -> Self {
        RoundFile {
            blocks: r
                .counts
                .blocks()
                .iter()
                .map(|b| {
                    let m = r.meta[b.combo.position()];
                    BlockFile {
                        combo: b.combo,
                        alpha: m.alpha,
                        beta: m.beta,
                        s_a: b.s_a,
                        s_b: b.s_b,
                        c_oo: b.c_oo,
                        duration_seconds: m.duration_seconds,
                    }
                })
                .collect(),
        }
    }

    fn into_round(self, location: &str) -> Result<DatasetRound> {
        let mut meta = [BlockMeta {
            alpha: None,
            beta: None,
            duration_seconds: 0.0,
        }; 4];
        let mut blocks = Vec::with_capacity(4);
        for (i, b) in self.blocks.into_iter().enumerate() {
            if !(b.duration_seconds >= 0.0 && b.duration_seconds.is_finite()) {
                return Err(Error::validation(
                    format!("{location}.blocks[{i}]"),
                    format!(
                        "durationSeconds must be finite and non-negative, got {}",
                        b.duration_seconds
                    ),
                ));
            }
            meta[b.combo.position()] = BlockMeta {
                alpha: b.alpha,
                beta: b.beta,
                duration_seconds: b.duration_seconds,
            };
            blocks.push(CountsBlock::new(b.combo, b.s_a, b.s_b, b.c_oo));
        }
        let counts = RoundData::from_blocks(blocks).map_err(|e| Error::validation(location, e.to_string()))?;
        Ok(DatasetRound { counts, meta })
    }
}

impl DatasetFile {
    fn from_dataset(d: &Dataset) -> Self {
        DatasetFile {
            format_version: FORMAT_VERSION,
            metadata: d.metadata.clone(),
            rounds: d.rounds.iter().map(RoundFile::from_round).collect(),
            totals: d.totals.as_ref().map(RoundFile::from_round),
        }
    }

    fn into_dataset(self) -> Result<Dataset> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::validation(
                "format_version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", self.format_version),
            ));
        }
        let rounds = self
            .rounds
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.into_round(&format!("rounds[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let totals = self.totals.map(|t| t.into_round("totals")).transpose()?;
        let d = Dataset {
            metadata: self.metadata,
            rounds,
            totals,
        };
        d.validate()?;
        Ok(d)
    }
}

/// Click streams of one block as stored in an event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEvents {
    pub id: BlockId,
    pub streams: EventStreams,
}

#[derive(Serialize, Deserialize)]
struct EventRow {
    time_ns: u64,
    party: Party,
    block_id: String,
}

/// Writes `time_ns,party,block_id` rows, block by block, each block merged
/// in time order. Blocks without events leave no trace in the file.
pub fn write_events<W: std::io::Write>(writer: W, blocks: &[BlockEvents]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for b in blocks {
        for EventRecord {
            time_ns,
            party,
            block_id,
        } in b.streams.to_events(b.id)
        {
            w.serialize(EventRow {
                time_ns,
                party,
                block_id: block_id.to_string(),
            })?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Reads an event log; blocks come back in order of first appearance and
/// each party's stream must already be in time order.
pub fn read_events<R: std::io::Read>(reader: R) -> Result<Vec<BlockEvents>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut order: Vec<BlockEvents> = Vec::new();
    let mut index: HashMap<BlockId, usize> = HashMap::new();
    for (line, row) in r.deserialize::<EventRow>().enumerate() {
        let row = row?;
        let location = || format!("row {}", line + 2);
        let id: BlockId = row
            .block_id
            .parse()
            .map_err(|e: Error| Error::validation(location(), e.to_string()))?;
        let slot = *index.entry(id).or_insert_with(|| {
            order.push(BlockEvents {
                id,
                streams: EventStreams::default(),
            });
            order.len() - 1
        });
        let stream = match row.party {
            Party::A => &mut order[slot].streams.a,
            Party::B => &mut order[slot].streams.b,
        };
        if stream.last().is_some_and(|&last| row.time_ns < last) {
            return Err(Error::validation(
                location(),
                format!("{} timestamps of block {id} go backwards", row.party),
            ));
        }
        stream.push(row.time_ns);
    }
    Ok(order)
}

pub fn save_events(path: impl AsRef<Path>, blocks: &[BlockEvents]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    write_events(std::io::BufWriter::new(file), blocks)
}

pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<BlockEvents>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_events(std::io::BufReader::new(file))
}
