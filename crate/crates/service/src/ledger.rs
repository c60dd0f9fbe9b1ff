//! Append-only event ledger: one JSON record per line.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use dac_core::{Question, QuestionId, TradeSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, ServiceError};
use crate::state::{MarketConfig, MarketSnapshot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LedgerEvent {
    CreateMarket {
        market_id: u64,
        config: MarketConfig,
        questions: Vec<Question>,
    },
    CreateAccount {
        user: String,
        name: String,
    },
    Trade {
        user: String,
        trade: TradeSpec<f64>,
    },
    Resolve {
        question: QuestionId,
        state: usize,
    },
}

/// On disk as `{"sequence", "timestamp", "kind", "payload"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawRecord", try_from = "RawRecord")]
pub struct LedgerRecord {
    pub sequence: u64,
    /// RFC 3339, informational only.
    pub timestamp: String,
    pub event: LedgerEvent,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    sequence: u64,
    timestamp: String,
    kind: Value,
    payload: Value,
}

impl From<LedgerRecord> for RawRecord {
    fn from(r: LedgerRecord) -> Self {
        let mut tagged = match serde_json::to_value(&r.event) {
            Ok(Value::Object(map)) => map,
            _ => unreachable!("events serialize to objects"),
        };
        RawRecord {
            sequence: r.sequence,
            timestamp: r.timestamp,
            kind: tagged.remove("kind").unwrap_or(Value::Null),
            payload: tagged.remove("payload").unwrap_or(Value::Null),
        }
    }
}

impl TryFrom<RawRecord> for LedgerRecord {
    type Error = serde_json::Error;

    fn try_from(raw: RawRecord) -> std::result::Result<Self, Self::Error> {
        let mut tagged = serde_json::Map::new();
        tagged.insert("kind".into(), raw.kind);
        tagged.insert("payload".into(), raw.payload);
        Ok(LedgerRecord {
            sequence: raw.sequence,
            timestamp: raw.timestamp,
            event: serde_json::from_value(Value::Object(tagged))?,
        })
    }
}

impl LedgerRecord {
    pub fn new(sequence: u64, event: LedgerEvent) -> Self {
        LedgerRecord {
            sequence,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true),
            event,
        }
    }
}

/// Appends records to a ledger file, syncing after each one.
#[derive(Debug)]
pub struct LedgerWriter {
    file: File,
}

impl LedgerWriter {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(LedgerWriter { file })
    }

    pub fn append(&mut self, record: &LedgerRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Reads every record of a ledger file. A missing file is an empty ledger.
/// A torn final line (no trailing newline, unparsable) is ignored, since it
/// can only come from a crash mid-append.
pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRecord>> {
    Ok(read_valid_prefix(path)?.0)
}

/// Like [`read_ledger`], but also cuts a torn final line off the file so
/// that later appends start on a fresh line.
pub fn repair_ledger(path: &Path) -> Result<Vec<LedgerRecord>> {
    let (records, valid) = read_valid_prefix(path)?;
    if let Ok(meta) = fs::metadata(path) {
        if meta.len() > valid {
            tracing::warn!(path = %path.display(), "dropping torn ledger tail");
            OpenOptions::new().write(true).open(path)?.set_len(valid)?;
        }
    }
    Ok(records)
}

fn read_valid_prefix(path: &Path) -> Result<(Vec<LedgerRecord>, u64)> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(e.into()),
    };
    let mut records = Vec::new();
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut valid = 0u64;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        if line.trim().is_empty() {
            valid += n as u64;
            continue;
        }
        match serde_json::from_str::<LedgerRecord>(&line) {
            Ok(r) if line.ends_with('\n') => records.push(r),
            Ok(_) => break,
            Err(_) if !line.ends_with('\n') => break,
            Err(e) => {
                return Err(ServiceError::CorruptLedger {
                    sequence: records.len() as u64 + 1,
                    reason: e.to_string(),
                })
            }
        }
        valid += n as u64;
    }
    Ok((records, valid))
}

/// Rebuilds market state from a record sequence starting at genesis.
/// `None` for an empty ledger.
pub fn replay(records: &[LedgerRecord]) -> Result<Option<MarketSnapshot>> {
    let Some((first, rest)) = records.split_first() else {
        return Ok(None);
    };
    let mut snapshot = match &first.event {
        LedgerEvent::CreateMarket {
            market_id,
            config,
            questions,
        } if first.sequence == 1 => {
            MarketSnapshot::genesis(*market_id, questions.clone(), config.clone())?
        }
        _ => {
            return Err(ServiceError::CorruptLedger {
                sequence: first.sequence,
                reason: "ledger must start with CREATE_MARKET at sequence 1".into(),
            })
        }
    };
    replay_onto(&mut snapshot, rest)?;
    Ok(Some(snapshot))
}

/// Applies records that follow `snapshot.sequence`. Records already covered
/// by the snapshot are skipped.
pub fn replay_onto(snapshot: &mut MarketSnapshot, records: &[LedgerRecord]) -> Result<()> {
    for record in records {
        if record.sequence <= snapshot.sequence {
            continue;
        }
        if record.sequence != snapshot.sequence + 1 {
            return Err(ServiceError::CorruptLedger {
                sequence: record.sequence,
                reason: format!("expected sequence {}", snapshot.sequence + 1),
            });
        }
        snapshot
            .apply(&record.event)
            .map_err(|e| ServiceError::CorruptLedger {
                sequence: record.sequence,
                reason: e.to_string(),
            })?;
    }
    Ok(())
}
