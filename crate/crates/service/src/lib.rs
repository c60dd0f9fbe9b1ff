//! Multi-user market server: accounts, validated trades, an append-only
//! ledger with periodic snapshots, and an HTTP API.

pub mod api;
pub mod error;
pub mod host;
pub mod ledger;
pub mod state;

pub use api::router;
pub use error::{Result, ServiceError};
pub use host::{MarketHost, MarketService, NewMarket, NewQuestion, ServiceConfig};
pub use ledger::{read_ledger, replay, LedgerEvent, LedgerRecord};
pub use state::{
    Account, EventOutcome, MarketConfig, MarketSnapshot, ResolutionReport, TradeReceipt, UserReport,
};
