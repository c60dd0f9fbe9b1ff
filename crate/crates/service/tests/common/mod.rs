//! Seeded random trading sessions shared by the integration targets.
#![allow(dead_code)]

use dac_core::{Assignment, Question, QuestionId, TradeScenario, TradeSpec};
use dac_service::{
    EventOutcome, LedgerEvent, LedgerRecord, MarketConfig, MarketSnapshot, ServiceError,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SessionOpts {
    pub questions: u32,
    pub users: usize,
    pub trades: usize,
    /// Chance that a step resolves a question instead of trading.
    pub resolve_chance: f64,
    pub b: f64,
    pub baseline: f64,
}

impl Default for SessionOpts {
    fn default() -> Self {
        SessionOpts {
            questions: 8,
            users: 2,
            trades: 25,
            resolve_chance: 0.08,
            b: 10.0,
            baseline: 100.0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SessionStats {
    /// UpdateExisting, CreateAndMerge, CreateSeparate, CreateOverlapping.
    pub scenarios: [usize; 4],
    pub accepted: usize,
    pub rejected: usize,
    pub resolutions: usize,
}

impl SessionStats {
    pub fn all_scenarios(&self) -> bool {
        self.scenarios.iter().all(|&n| n > 0)
    }

    pub fn absorb(&mut self, other: &SessionStats) {
        for (a, b) in self.scenarios.iter_mut().zip(other.scenarios) {
            *a += b;
        }
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.resolutions += other.resolutions;
    }
}

pub fn scenario_slot(s: &TradeScenario) -> usize {
    match s {
        TradeScenario::UpdateExisting(_) => 0,
        TradeScenario::CreateAndMerge(_) => 1,
        TradeScenario::CreateSeparate => 2,
        TradeScenario::CreateOverlapping(_) => 3,
    }
}

pub fn user_name(i: usize) -> String {
    format!("u{i}")
}

/// Genesis plus one account per user, as ledger records.
pub fn opening(opts: &SessionOpts) -> (MarketSnapshot, Vec<LedgerRecord>) {
    let questions: Vec<Question> = (0..opts.questions)
        .map(|i| Question::new(i, format!("q{i}"), 2))
        .collect();
    let config = MarketConfig {
        b: opts.b,
        baseline: opts.baseline,
        ..MarketConfig::default()
    };
    let mut records = vec![LedgerRecord::new(
        1,
        LedgerEvent::CreateMarket {
            market_id: 1,
            config: config.clone(),
            questions: questions.clone(),
        },
    )];
    let mut snap = MarketSnapshot::genesis(1, questions, config).unwrap();
    for i in 0..opts.users {
        let event = LedgerEvent::CreateAccount {
            user: user_name(i),
            name: String::new(),
        };
        snap.apply(&event).unwrap();
        records.push(LedgerRecord::new(snap.sequence, event));
    }
    (snap, records)
}

fn open_questions(snap: &MarketSnapshot) -> Vec<QuestionId> {
    snap.market.open_questions().map(|q| q.id).collect()
}

fn pick_subset(
    rng: &mut ChaCha8Rng,
    vars: &[QuestionId],
    min: usize,
    max: usize,
) -> Vec<QuestionId> {
    let max = max.min(vars.len());
    if max < min {
        return Vec::new();
    }
    let n = rng.gen_range(min..=max);
    let mut v: Vec<QuestionId> = vars.choose_multiple(rng, n).copied().collect();
    v.sort();
    v
}

/// Chooses a trade scope aimed at one of the four block scenarios.
fn pick_scope(rng: &mut ChaCha8Rng, snap: &MarketSnapshot, user: &str) -> Vec<QuestionId> {
    let open = open_questions(snap);
    let blocks: Vec<Vec<QuestionId>> = snap.users[user]
        .blocks()
        .iter()
        .map(|b| b.scope().vars().to_vec())
        .collect();
    let held: Vec<QuestionId> = blocks.iter().flatten().copied().collect();
    let free: Vec<QuestionId> = open.iter().copied().filter(|q| !held.contains(q)).collect();
    let block = blocks.choose(rng).cloned();
    let outside = |b: &[QuestionId]| -> Vec<QuestionId> {
        open.iter().copied().filter(|q| !b.contains(q)).collect()
    };
    let scope = match (rng.gen_range(0..4), block) {
        (0, Some(b)) => pick_subset(rng, &b, 1, b.len()),
        (1, Some(b)) if b.len() < 4 => {
            let mut s = b.clone();
            s.extend(pick_subset(rng, &outside(&b), 1, 1));
            s
        }
        (2, _) if !free.is_empty() => pick_subset(rng, &free, 1, 2),
        (3, Some(b)) if b.len() > 1 => {
            let mut s = pick_subset(rng, &b, 1, b.len() - 1);
            s.extend(pick_subset(rng, &outside(&b), 1, 2));
            s
        }
        _ => Vec::new(),
    };
    if scope.is_empty() {
        pick_subset(rng, &open, 1, 3)
    } else {
        scope
    }
}

pub fn random_trade(rng: &mut ChaCha8Rng, snap: &MarketSnapshot, user: &str) -> TradeSpec<f64> {
    let scope = pick_scope(rng, snap, user);
    let target = *scope.choose(rng).expect("scope is never empty");
    let assumptions: Assignment = scope
        .iter()
        .filter(|&&q| q != target)
        .map(|&q| (q, rng.gen_range(0..2)))
        .collect();
    let p1: f64 = rng.gen_range(0.05..0.95);
    TradeSpec::new(target, assumptions, vec![1.0 - p1, p1])
}

/// Random evidence over open questions, each included with chance 1/3.
pub fn random_evidence(rng: &mut ChaCha8Rng, snap: &MarketSnapshot) -> Assignment {
    let mut ev = Assignment::new();
    for q in open_questions(snap) {
        if rng.gen_bool(1.0 / 3.0) {
            ev.insert(q, rng.gen_range(0..2));
        }
    }
    ev
}

/// Draws the next event; resolutions sample the winning state from the
/// current marginal and always leave two questions open.
pub fn random_event(
    rng: &mut ChaCha8Rng,
    snap: &MarketSnapshot,
    opts: &SessionOpts,
) -> LedgerEvent {
    let open = open_questions(snap);
    if open.len() > 2 && rng.gen_bool(opts.resolve_chance) {
        let question = *open.choose(rng).unwrap();
        let p = snap.market.marginal(&[question]).unwrap();
        let state = usize::from(rng.gen::<f64>() >= p.values()[0]);
        return LedgerEvent::Resolve { question, state };
    }
    let user = user_name(rng.gen_range(0..opts.users));
    let trade = random_trade(rng, snap, &user);
    LedgerEvent::Trade { user, trade }
}

/// Runs one seeded session. `after` sees the state after every accepted
/// event. Returns the final state and the accepted ledger.
pub fn run_session(
    seed: u64,
    opts: &SessionOpts,
    mut after: impl FnMut(&MarketSnapshot, &mut ChaCha8Rng),
) -> (MarketSnapshot, Vec<LedgerRecord>, SessionStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut snap, mut records) = opening(opts);
    let mut stats = SessionStats::default();
    let mut trades = 0;
    while trades < opts.trades {
        let event = random_event(&mut rng, &snap, opts);
        if matches!(event, LedgerEvent::Trade { .. }) {
            trades += 1;
        }
        match snap.apply(&event) {
            Ok(outcome) => {
                match &outcome {
                    EventOutcome::Traded(r) => {
                        stats.scenarios[scenario_slot(&r.scenario)] += 1;
                        stats.accepted += 1;
                    }
                    EventOutcome::Resolved(_) => stats.resolutions += 1,
                    _ => {}
                }
                records.push(LedgerRecord::new(snap.sequence, event));
                after(&snap, &mut rng);
            }
            Err(ServiceError::Rejected { .. }) => stats.rejected += 1,
            Err(e) => panic!("seed {seed}: unexpected error {e}"),
        }
    }
    (snap, records, stats)
}
