//! Synthetic block generators and the DAC-vs-enumeration timing harness.

use std::time::Instant;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::{AssetBlock, AssetError, BlockId, UserAssetModel};
use crate::oracle::{oracle_min, OracleError, ORACLE_STATE_CAP};
use crate::scalar::approx_eq;
use crate::table::{Assignment, DenseTable, QuestionId, Scope, TableError};

/// Agreement required between the two engines.
pub const RESULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("size parameter must be at least {min}, got {got}")]
    InvalidSize { min: usize, got: usize },
    #[error("overlap {overlap} exceeds block size {k}")]
    OverlapTooLarge { k: usize, overlap: usize },
    #[error("at least one repetition is required")]
    ZeroRepetitions,
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Chain,
    TwoBlock,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::Chain => "chain",
            ScenarioKind::TwoBlock => "twoblock",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchScenario {
    pub kind: ScenarioKind,
    /// Chain length `n`, or block width `k`.
    pub size: usize,
    /// Shared variables between the two blocks; unused for chains.
    pub overlap: usize,
    pub states: usize,
    pub seed: u64,
}

impl BenchScenario {
    pub fn chain(n: usize, seed: u64) -> Self {
        BenchScenario {
            kind: ScenarioKind::Chain,
            size: n,
            overlap: 0,
            states: 2,
            seed,
        }
    }

    pub fn two_block(k: usize, overlap: usize, seed: u64) -> Self {
        BenchScenario {
            kind: ScenarioKind::TwoBlock,
            size: k,
            overlap,
            states: 2,
            seed,
        }
    }

    pub fn blocks(&self) -> Result<Vec<AssetBlock<f64>>, BenchError> {
        match self.kind {
            ScenarioKind::Chain => chain_blocks(self.size, self.states, self.seed),
            ScenarioKind::TwoBlock => {
                two_block_blocks(self.size, self.overlap, self.states, self.seed)
            }
        }
    }
}

fn random_blocks(scopes: Vec<Scope>, seed: u64) -> Vec<AssetBlock<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Uniform::new_inclusive(-50.0, 50.0);
    scopes
        .into_iter()
        .enumerate()
        .map(|(i, scope)| {
            let cells = (0..scope.size()).map(|_| values.sample(&mut rng)).collect();
            let table = DenseTable::new(scope, cells).expect("sized to scope");
            AssetBlock::new(BlockId(i as u64), table)
        })
        .collect()
}

fn question_scope(ids: impl Iterator<Item = usize>, states: usize) -> Result<Scope, TableError> {
    Scope::new(ids.map(|i| (QuestionId(i as u32), states)))
}

fn chain_blocks(n: usize, states: usize, seed: u64) -> Result<Vec<AssetBlock<f64>>, BenchError> {
    if n < 2 {
        return Err(BenchError::InvalidSize { min: 2, got: n });
    }
    let scopes = (1..n)
        .map(|i| question_scope([i, i + 1].into_iter(), states))
        .collect::<Result<_, _>>()?;
    Ok(random_blocks(scopes, seed))
}

fn two_block_blocks(
    k: usize,
    overlap: usize,
    states: usize,
    seed: u64,
) -> Result<Vec<AssetBlock<f64>>, BenchError> {
    if k < 1 {
        return Err(BenchError::InvalidSize { min: 1, got: k });
    }
    if overlap > k {
        return Err(BenchError::OverlapTooLarge { k, overlap });
    }
    let first = question_scope(1..=k, states)?;
    let start = k - overlap + 1;
    let second = question_scope(start..start + k, states)?;
    Ok(random_blocks(vec![first, second], seed))
}

/// Binary chain `{Q1,Q2}, {Q2,Q3}, …, {Q(n-1),Qn}` with values in `[-50, 50]`.
pub fn gen_chain(n: usize, seed: u64) -> Result<Vec<AssetBlock<f64>>, BenchError> {
    chain_blocks(n, 2, seed)
}

/// Two binary blocks of `k` variables sharing `overlap` of them.
pub fn gen_two_block(
    k: usize,
    overlap: usize,
    seed: u64,
) -> Result<Vec<AssetBlock<f64>>, BenchError> {
    two_block_blocks(k, overlap, 2, seed)
}

/// One CSV row of a benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub size: usize,
    pub overlap: usize,
    pub dac_micros: f64,
    /// `None` when the union state space exceeds the oracle cap.
    pub oracle_micros: Option<f64>,
    pub results_equal: Option<bool>,
    pub dac_min: f64,
    pub oracle_min: Option<f64>,
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

/// Times `f` once as warm-up, then `reps` more times; returns the median in
/// microseconds and the last result.
fn time_median<T>(reps: usize, mut f: impl FnMut() -> T) -> (f64, T) {
    let mut last = f();
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        last = f();
        samples.push(start.elapsed().as_secs_f64() * 1e6);
    }
    (median(samples), last)
}

pub fn run_bench(scenario: &BenchScenario, repetitions: usize) -> Result<BenchRow, BenchError> {
    run_bench_capped(scenario, repetitions, ORACLE_STATE_CAP)
}

/// Median wall time of DAC `min_assets` and of `oracle_min` on the same
/// blocks. The oracle column is skipped when its state space exceeds
/// `oracle_cap`.
pub fn run_bench_capped(
    scenario: &BenchScenario,
    repetitions: usize,
    oracle_cap: usize,
) -> Result<BenchRow, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::ZeroRepetitions);
    }
    let blocks = scenario.blocks()?;
    let mut model = UserAssetModel::new("bench", 0.0);
    for b in &blocks {
        model.ingest(b.table().clone())?;
    }
    let none = Assignment::new();
    let (dac_micros, dac) = time_median(repetitions, || model.min_assets(&none));
    let dac_min = dac?;

    let tables: Vec<&DenseTable<f64>> = blocks.iter().map(|b| b.table()).collect();
    let union_size = model.union_scope()?.size();
    let (oracle_micros, oracle_min_value) = if union_size <= oracle_cap {
        let (micros, r) = time_median(repetitions, || oracle_min(&tables, 0.0, &none));
        (Some(micros), Some(r?.min))
    } else {
        (None, None)
    };
    Ok(BenchRow {
        scenario: scenario.kind.label().to_string(),
        size: scenario.size,
        overlap: scenario.overlap,
        dac_micros,
        oracle_micros,
        results_equal: oracle_min_value.map(|o| approx_eq(dac_min, o, RESULT_TOLERANCE)),
        dac_min,
        oracle_min: oracle_min_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_shapes() {
        assert_eq!(gen_chain(2, 1).unwrap().len(), 1);
        let c = gen_chain(3, 1).unwrap();
        assert_eq!(c[0].scope().vars(), &[QuestionId(1), QuestionId(2)]);
        assert_eq!(c[1].scope().vars(), &[QuestionId(2), QuestionId(3)]);
        assert_eq!(gen_chain(5, 9).unwrap(), gen_chain(5, 9).unwrap());
        assert_ne!(gen_chain(5, 9).unwrap(), gen_chain(5, 10).unwrap());
        assert!(gen_chain(1, 0).is_err());
        assert!(c
            .iter()
            .flat_map(|b| b.table().values())
            .all(|v| (-50.0..=50.0).contains(v)));
    }

    #[test]
    fn two_block_shapes() {
        let b = gen_two_block(1, 0, 3).unwrap();
        assert_eq!(b[0].scope().vars(), &[QuestionId(1)]);
        assert_eq!(b[1].scope().vars(), &[QuestionId(2)]);
        let b = gen_two_block(3, 1, 3).unwrap();
        let ids = |b: &AssetBlock<f64>| b.scope().vars().iter().map(|q| q.0).collect::<Vec<_>>();
        assert_eq!(ids(&b[0]), vec![1, 2, 3]);
        assert_eq!(ids(&b[1]), vec![3, 4, 5]);
        let same = gen_two_block(3, 3, 3).unwrap();
        assert_eq!(same[0].scope(), same[1].scope());
        assert!(matches!(
            gen_two_block(2, 3, 0),
            Err(BenchError::OverlapTooLarge { .. })
        ));
    }

    #[test]
    fn bench_rows_agree() {
        let row = run_bench(&BenchScenario::chain(8, 4), 2).unwrap();
        assert_eq!(row.results_equal, Some(true));
        let row = run_bench(&BenchScenario::two_block(3, 3, 4), 1).unwrap();
        assert_eq!(row.results_equal, Some(true));
        assert!(matches!(
            run_bench(&BenchScenario::chain(3, 0), 0),
            Err(BenchError::ZeroRepetitions)
        ));
    }

    #[test]
    fn oracle_column_skipped_above_cap() {
        let row = run_bench_capped(&BenchScenario::chain(10, 0), 1, 64).unwrap();
        assert_eq!(row.oracle_micros, None);
        assert_eq!(row.results_equal, None);
    }
}
