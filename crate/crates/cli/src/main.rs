mod bench;
mod client;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dac_core::bench::BenchScenario;
use dac_core::oracle::ORACLE_STATE_CAP;
use serde_json::{json, Map, Value};

use crate::client::Client;

#[derive(Parser)]
#[command(
    name = "dac",
    version,
    about = "Market client and asset-computation benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Talk to a running market server.
    Market(MarketArgs),
    /// Time junction-tree min-assets against full enumeration.
    Bench(BenchArgs),
}

#[derive(Args)]
struct MarketArgs {
    #[arg(
        long,
        env = "DAC_SERVER",
        default_value = "http://127.0.0.1:8080",
        global = true
    )]
    server: String,
    #[arg(long, env = "DAC_ADMIN_TOKEN", global = true, hide_env_values = true)]
    admin_token: Option<String>,
    #[command(subcommand)]
    op: MarketOp,
}

#[derive(Subcommand)]
enum MarketOp {
    /// Create a market; questions as NAME or NAME:CARDINALITY.
    Create {
        #[arg(long = "question", short = 'q', required = true)]
        questions: Vec<String>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        baseline: Option<f64>,
    },
    /// Open an account.
    Account {
        #[arg(long, short)]
        market: u64,
        #[arg(long, short)]
        user: String,
        #[arg(long)]
        name: Option<String>,
    },
    /// Move x(target | assume) to a new distribution.
    Trade {
        #[arg(long, short)]
        market: u64,
        #[arg(long, short)]
        user: String,
        #[arg(long, short)]
        target: u32,
        /// Comma-separated QUESTION:STATE pairs.
        #[arg(long, default_value = "")]
        assume: String,
        /// Comma-separated probabilities, one per target state.
        #[arg(long)]
        dist: String,
        /// Report what would happen without trading.
        #[arg(long)]
        dry_run: bool,
    },
    /// Per-state bounds that keep cash nonnegative.
    Limits {
        #[arg(long, short)]
        market: u64,
        #[arg(long, short)]
        user: String,
        #[arg(long, short)]
        target: u32,
        #[arg(long, default_value = "")]
        assume: String,
    },
    /// Show a user's cash and blocks, or the question list without --user.
    Query {
        #[arg(long, short)]
        market: u64,
        #[arg(long, short)]
        user: Option<String>,
        /// Print the joint marginal over these questions instead.
        #[arg(long)]
        marginal: Option<String>,
    },
    /// Settle a question (needs the admin token if the server has one).
    Resolve {
        #[arg(long, short)]
        market: u64,
        #[arg(long)]
        question: u32,
        #[arg(long)]
        state: usize,
    },
    /// Dump ledger records as JSON lines.
    Ledger {
        #[arg(long, short)]
        market: u64,
        #[arg(long, default_value_t = 0)]
        from: u64,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 5, global = true)]
    reps: usize,
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Skip enumeration above this many joint states.
    #[arg(long, default_value_t = ORACLE_STATE_CAP, global = true)]
    oracle_cap: usize,
    #[command(subcommand)]
    scenario: BenchScenarioArg,
}

#[derive(Subcommand)]
enum BenchScenarioArg {
    /// Blocks {Q1,Q2}, {Q2,Q3}, ... for each chain length n.
    Chain {
        /// Inclusive range such as 2..20.
        #[arg(long)]
        n: String,
    },
    /// Two blocks of k questions sharing `overlap` of them.
    Twoblock {
        #[arg(long)]
        k: String,
        #[arg(long, default_value_t = 0)]
        overlap: usize,
    },
}

fn parse_question(text: &str) -> Result<Value> {
    let (name, card) = match text.rsplit_once(':') {
        Some((n, c)) => (
            n,
            c.parse::<usize>()
                .with_context(|| format!("bad cardinality in {text:?}"))?,
        ),
        None => (text, 2),
    };
    if name.is_empty() {
        bail!("question needs a name: {text:?}");
    }
    Ok(json!({"name": name, "cardinality": card}))
}

fn parse_dist(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad probability {s:?}"))
        })
        .collect()
}

fn parse_assume(text: &str) -> Result<Map<String, Value>> {
    let mut out = Map::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (q, s) = part
            .split_once(':')
            .with_context(|| format!("assumption {part:?} is not QUESTION:STATE"))?;
        let state: usize = s
            .trim()
            .parse()
            .with_context(|| format!("bad state in {part:?}"))?;
        let q: u32 = q
            .trim()
            .parse()
            .with_context(|| format!("bad question in {part:?}"))?;
        out.insert(q.to_string(), json!(state));
    }
    Ok(out)
}

fn print(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn market(args: MarketArgs) -> Result<()> {
    let c = Client::new(&args.server, args.admin_token);
    match args.op {
        MarketOp::Create {
            questions,
            b,
            baseline,
        } => {
            let qs = questions
                .iter()
                .map(|q| parse_question(q))
                .collect::<Result<Vec<_>>>()?;
            print(&c.post(
                "/markets",
                &json!({"questions": qs, "b": b, "baseline": baseline}),
            )?)
        }
        MarketOp::Account { market, user, name } => print(&c.post(
            &format!("/markets/{market}/accounts"),
            &json!({"user": user, "name": name}),
        )?),
        MarketOp::Trade {
            market,
            user,
            target,
            assume,
            dist,
            dry_run,
        } => {
            let body = json!({
                "user": user,
                "target": target,
                "assumptions": parse_assume(&assume)?,
                "new_dist": parse_dist(&dist)?,
                "dry_run": dry_run,
            });
            let resp = c.post(&format!("/markets/{market}/trades"), &body)?;
            print(&resp)?;
            if resp["accepted"] == false {
                bail!("trade rejected");
            }
            Ok(())
        }
        MarketOp::Limits {
            market,
            user,
            target,
            assume,
        } => {
            parse_assume(&assume)?;
            print(&c.get(&format!(
                "/markets/{market}/users/{user}/edit-limits?target={target}&assume={assume}"
            ))?)
        }
        MarketOp::Query {
            market,
            user,
            marginal,
        } => match (user, marginal) {
            (_, Some(vars)) => print(&c.get(&format!("/markets/{market}/marginal?vars={vars}"))?),
            (Some(u), None) => print(&c.get(&format!("/markets/{market}/users/{u}"))?),
            (None, None) => print(&c.get(&format!("/markets/{market}/questions"))?),
        },
        MarketOp::Resolve {
            market,
            question,
            state,
        } => print(&c.post_admin(
            &format!("/markets/{market}/resolve"),
            &json!({"question": question, "state": state}),
        )?),
        MarketOp::Ledger { market, from } => {
            print!(
                "{}",
                c.get_text(&format!("/markets/{market}/ledger?from={from}"))?
            );
            Ok(())
        }
    }
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let scenarios: Vec<BenchScenario> = match &args.scenario {
        BenchScenarioArg::Chain { n } => bench::parse_range(n)?
            .map(|n| BenchScenario::chain(n, args.seed))
            .collect(),
        BenchScenarioArg::Twoblock { k, overlap } => bench::parse_range(k)?
            .map(|k| BenchScenario::two_block(k, *overlap, args.seed))
            .collect(),
    };
    let rows = bench::run(scenarios, args.reps, args.oracle_cap, args.csv.as_deref())?;
    if rows.iter().any(|r| r.results_equal == Some(false)) {
        bail!("junction tree and enumeration disagree");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Market(m) => market(m),
        Command::Bench(b) => run_bench(b),
    }
}
