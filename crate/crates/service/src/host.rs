//! Market hosting: one serialized writer per market, snapshot reads, and
//! on-disk persistence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dac_core::{Question, QuestionId, TradeSpec};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::ledger::{repair_ledger, replay, replay_onto, LedgerEvent, LedgerRecord, LedgerWriter};
use crate::state::{
    Account, EventOutcome, MarketConfig, MarketSnapshot, ResolutionReport, TradeReceipt,
};

const LEDGER_FILE: &str = "ledger.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub defaults: MarketConfig,
    pub admin_token: Option<String>,
    /// Write a full snapshot after this many records; 0 disables snapshots.
    pub snapshot_every: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: None,
            defaults: MarketConfig::default(),
            admin_token: None,
            snapshot_every: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewQuestion {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NewMarket {
    pub questions: Vec<NewQuestion>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub baseline: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub cell_cap: Option<usize>,
}

struct Writer {
    records: Vec<LedgerRecord>,
    ledger: Option<LedgerWriter>,
    dir: Option<PathBuf>,
    snapshot_every: u64,
    since_snapshot: u64,
}

impl Writer {
    fn write_snapshot(&mut self, snapshot: &MarketSnapshot) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec(snapshot)?)?;
        fs::rename(&tmp, dir.join(SNAPSHOT_FILE))?;
        self.since_snapshot = 0;
        Ok(())
    }
}

/// One market. Writers queue on a mutex; readers take the latest
/// committed snapshot without waiting for writers.
pub struct MarketHost {
    id: u64,
    current: RwLock<Arc<MarketSnapshot>>,
    writer: Mutex<Writer>,
}

impl MarketHost {
    fn from_parts(snapshot: MarketSnapshot, records: Vec<LedgerRecord>, writer: Writer) -> Self {
        MarketHost {
            id: snapshot.market_id,
            current: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(Writer { records, ..writer }),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Latest committed state.
    pub fn snapshot(&self) -> Arc<MarketSnapshot> {
        self.current.read().clone()
    }

    fn commit(&self, event: LedgerEvent) -> Result<EventOutcome> {
        let mut w = self.writer.lock();
        let mut next = MarketSnapshot::clone(&self.current.read());
        let outcome = next.apply(&event)?;
        let record = LedgerRecord::new(next.sequence, event);
        if let Some(ledger) = &mut w.ledger {
            ledger.append(&record)?;
        }
        w.records.push(record);
        w.since_snapshot += 1;
        let next = Arc::new(next);
        *self.current.write() = next.clone();
        if w.snapshot_every > 0 && w.since_snapshot >= w.snapshot_every {
            if let Err(e) = w.write_snapshot(&next) {
                // the ledger already holds the record; a stale snapshot only
                // costs replay time on restart
                tracing::warn!(market = self.id, error = %e, "snapshot write failed");
            }
        }
        Ok(outcome)
    }

    pub fn create_account(&self, user: &str, name: &str) -> Result<Account> {
        match self.commit(LedgerEvent::CreateAccount {
            user: user.to_string(),
            name: name.to_string(),
        })? {
            EventOutcome::AccountCreated(a) => Ok(a),
            other => unreachable!("account event produced {other:?}"),
        }
    }

    /// Validates and, unless `dry_run`, commits a trade.
    pub fn submit_trade(
        &self,
        user: &str,
        trade: TradeSpec<f64>,
        dry_run: bool,
    ) -> Result<TradeReceipt> {
        if dry_run {
            return self.snapshot().preview_trade(user, &trade);
        }
        match self.commit(LedgerEvent::Trade {
            user: user.to_string(),
            trade,
        })? {
            EventOutcome::Traded(r) => Ok(r),
            other => unreachable!("trade event produced {other:?}"),
        }
    }

    pub fn resolve(&self, question: QuestionId, state: usize) -> Result<ResolutionReport> {
        match self.commit(LedgerEvent::Resolve { question, state })? {
            EventOutcome::Resolved(r) => Ok(r),
            other => unreachable!("resolve event produced {other:?}"),
        }
    }

    /// Records with `sequence >= from`.
    pub fn records(&self, from: u64) -> Vec<LedgerRecord> {
        let w = self.writer.lock();
        let start = w.records.partition_point(|r| r.sequence < from);
        w.records[start..].to_vec()
    }

    /// Forces a snapshot to disk now.
    pub fn checkpoint(&self) -> Result<()> {
        let mut w = self.writer.lock();
        let snap = self.snapshot();
        w.write_snapshot(&snap)
    }
}

/// All markets of one server.
pub struct MarketService {
    config: ServiceConfig,
    markets: RwLock<BTreeMap<u64, Arc<MarketHost>>>,
    create: Mutex<()>,
}

impl MarketService {
    /// Opens the service, restoring every market found under the data
    /// directory.
    pub fn open(config: ServiceConfig) -> Result<Self> {
        let mut markets = BTreeMap::new();
        if let Some(root) = &config.data_dir {
            fs::create_dir_all(root)?;
            for entry in fs::read_dir(root)? {
                let entry = entry?;
                let Some(id) = entry
                    .file_name()
                    .to_str()
                    .and_then(|n| n.parse::<u64>().ok())
                else {
                    continue;
                };
                if !entry.file_type()?.is_dir() {
                    continue;
                }
                if let Some(host) = restore(&entry.path(), config.snapshot_every)? {
                    if host.id() != id {
                        return Err(ServiceError::CorruptLedger {
                            sequence: 1,
                            reason: format!("directory {id} holds market {}", host.id()),
                        });
                    }
                    tracing::info!(market = id, sequence = host.snapshot().sequence, "restored");
                    markets.insert(id, Arc::new(host));
                }
            }
        }
        Ok(MarketService {
            config,
            markets: RwLock::new(markets),
            create: Mutex::new(()),
        })
    }

    pub fn in_memory() -> Self {
        Self::open(ServiceConfig::default()).expect("no disk access without a data dir")
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn check_admin(&self, token: Option<&str>) -> Result<()> {
        match &self.config.admin_token {
            Some(want) if token != Some(want.as_str()) => Err(ServiceError::Unauthorized),
            _ => Ok(()),
        }
    }

    pub fn market(&self, id: u64) -> Result<Arc<MarketHost>> {
        self.markets
            .read()
            .get(&id)
            .cloned()
            .ok_or(ServiceError::UnknownMarket(id))
    }

    pub fn market_ids(&self) -> Vec<u64> {
        self.markets.read().keys().copied().collect()
    }

    pub fn create_market(&self, req: NewMarket) -> Result<Arc<MarketHost>> {
        let _guard = self.create.lock();
        let defaults = &self.config.defaults;
        let config = MarketConfig {
            b: req.b.unwrap_or(defaults.b),
            baseline: req.baseline.unwrap_or(defaults.baseline),
            epsilon: req.epsilon.unwrap_or(defaults.epsilon),
            cell_cap: req.cell_cap.unwrap_or(defaults.cell_cap),
            state_cap: defaults.state_cap,
        };
        let questions: Vec<Question> = req
            .questions
            .into_iter()
            .enumerate()
            .map(|(i, q)| Question::new(i as u32, q.name, q.cardinality))
            .collect();
        let id = self.markets.read().keys().next_back().map_or(1, |k| k + 1);
        let event = LedgerEvent::CreateMarket {
            market_id: id,
            config: config.clone(),
            questions: questions.clone(),
        };
        let snapshot = MarketSnapshot::genesis(id, questions, config)?;
        let genesis = LedgerRecord::new(1, event);

        let mut writer = Writer {
            records: Vec::new(),
            ledger: None,
            dir: None,
            snapshot_every: self.config.snapshot_every,
            since_snapshot: 1,
        };
        if let Some(root) = &self.config.data_dir {
            let dir = root.join(id.to_string());
            fs::create_dir_all(&dir)?;
            let mut ledger = LedgerWriter::open(&dir.join(LEDGER_FILE))?;
            ledger.append(&genesis)?;
            writer.ledger = Some(ledger);
            writer.dir = Some(dir);
        }
        let host = Arc::new(MarketHost::from_parts(snapshot, vec![genesis], writer));
        self.markets.write().insert(id, host.clone());
        tracing::info!(market = id, "created");
        Ok(host)
    }
}

/// Snapshot plus ledger tail; falls back to full replay when the snapshot
/// is missing, unreadable or ahead of the ledger.
fn restore(dir: &Path, snapshot_every: u64) -> Result<Option<MarketHost>> {
    let records = repair_ledger(&dir.join(LEDGER_FILE))?;
    let last = records.last().map_or(0, |r| r.sequence);
    let from_snapshot = fs::read(dir.join(SNAPSHOT_FILE))
        .ok()
        .and_then(|bytes| serde_json::from_slice::<MarketSnapshot>(&bytes).ok())
        .filter(|s| s.sequence <= last);
    let snapshot = match from_snapshot {
        Some(mut s) => {
            replay_onto(&mut s, &records)?;
            s
        }
        None => match replay(&records)? {
            Some(s) => s,
            None => return Ok(None),
        },
    };
    let writer = Writer {
        records: Vec::new(),
        ledger: Some(LedgerWriter::open(&dir.join(LEDGER_FILE))?),
        dir: Some(dir.to_path_buf()),
        snapshot_every,
        since_snapshot: 0,
    };
    Ok(Some(MarketHost::from_parts(snapshot, records, writer)))
}
