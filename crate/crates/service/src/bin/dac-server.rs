use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use dac_service::{router, MarketConfig, MarketService, ServiceConfig};
use tracing_subscriber::EnvFilter;

/// Combinatorial prediction market server.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    #[arg(long, env = "DAC_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "DAC_BIND", default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    /// Ledgers and snapshots live here; omit to run in memory.
    #[arg(long, env = "DAC_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Liquidity parameter for new markets.
    #[arg(long, env = "DAC_DEFAULT_B", default_value_t = 100.0)]
    default_b: f64,
    /// Starting points for each new account.
    #[arg(long, env = "DAC_DEFAULT_BASELINE", default_value_t = 100.0)]
    default_baseline: f64,
    /// Required in `x-admin-token` to resolve questions.
    #[arg(long, env = "DAC_ADMIN_TOKEN")]
    admin_token: Option<String>,
    #[arg(long, env = "DAC_SNAPSHOT_EVERY", default_value_t = 256)]
    snapshot_every: u64,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let config = ServiceConfig {
        data_dir: args.data_dir,
        defaults: MarketConfig {
            b: args.default_b,
            baseline: args.default_baseline,
            ..MarketConfig::default()
        },
        admin_token: args.admin_token,
        snapshot_every: args.snapshot_every,
    };
    if config.admin_token.is_none() {
        tracing::warn!("no admin token set; anyone can resolve questions");
    }
    let service = Arc::new(MarketService::open(config)?);
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
