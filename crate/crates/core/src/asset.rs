//! Per-user asset blocks and the queries answered from them.
//!
//! A user's state-contingent assets are `baseline + Σ block(state)`, where
//! each block covers the joint states of one trade scope `{T} ∪ U`. Trades
//! either add into an existing block, create a block that absorbs the blocks
//! it contains, or create a fresh block. Minimum assets are found by building
//! a junction forest over the block scopes and running min-propagation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jtree::{junction_forest, TreeError};
use crate::prob::{MarginalProvider, ProbError, TradeSpec};
use crate::scalar::Real;
use crate::table::{
    Assignment, CombineOp, DenseTable, QuestionId, Scope, TableError, DEFAULT_CELL_CAP,
};

/// Slack under which a post-trade minimum still counts as nonnegative.
pub const NONNEGATIVITY_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssetError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("probability at target state {0} must be positive")]
    NonPositiveProbability(usize),
    #[error("delta scope {delta} does not contain target {target}")]
    TargetOutsideScope { target: QuestionId, delta: Scope },
}

pub type Result<T, E = AssetError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub u64);

/// Asset table over the joint states of one trade scope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Real",
    deserialize = "F: Deserialize<'de> + Real"
))]
pub struct AssetBlock<F> {
    pub id: BlockId,
    table: DenseTable<F>,
}

impl<F: Real> AssetBlock<F> {
    pub fn new(id: BlockId, table: DenseTable<F>) -> Self {
        AssetBlock { id, table }
    }

    pub fn scope(&self) -> &Scope {
        self.table.scope()
    }

    pub fn table(&self) -> &DenseTable<F> {
        &self.table
    }
}

/// Which of the four block-maintenance cases a trade falls into.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TradeScenario {
    /// Trade scope is contained in this block's scope.
    UpdateExisting(BlockId),
    /// Trade scope strictly contains these blocks, which get absorbed.
    CreateAndMerge(Vec<BlockId>),
    /// Trade scope shares no variable with any block.
    CreateSeparate,
    /// Trade scope partially overlaps existing blocks on `K`.
    CreateOverlapping(Scope),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditLimit<F> {
    pub state: usize,
    pub lower: F,
    pub upper: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum TradeCheck<F> {
    Accept { min_after: F },
    Reject { worst_state: Assignment, deficit: F },
}

impl<F> TradeCheck<F> {
    pub fn is_accept(&self) -> bool {
        matches!(self, TradeCheck::Accept { .. })
    }
}

/// Minimum assets and one joint state attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct MinAssets<F> {
    pub value: F,
    pub argmin: Assignment,
}

/// LMSR asset change of a trade: `b · ln(x(t) / p(t | u))` on the states
/// with `U = u`, zero on every other state of `scope`.
pub fn asset_delta<F: Real>(
    trade: &TradeSpec<F>,
    p_cond: &DenseTable<F>,
    scope: &Scope,
    b: F,
) -> Result<DenseTable<F>> {
    let card = scope
        .card_of(trade.target)
        .ok_or_else(|| AssetError::TargetOutsideScope {
            target: trade.target,
            delta: scope.clone(),
        })?;
    let mut values = vec![F::zero(); scope.size()];
    for t in 0..card {
        let x = trade.new_dist.get(t).copied().unwrap_or_else(F::zero);
        let p = p_cond.values().get(t).copied().unwrap_or_else(F::zero);
        if !(x > F::zero() && p > F::zero()) {
            return Err(AssetError::NonPositiveProbability(t));
        }
        let cell = crate::table::index_of(scope, &trade.assumptions.clone().with(trade.target, t))?;
        values[cell] = b * (x / p).ln();
    }
    Ok(DenseTable::new(scope.clone(), values)?)
}

/// Decides how a trade over `scope` maintains the block set.
pub fn classify_trade<F: Real>(scope: &Scope, blocks: &[AssetBlock<F>]) -> TradeScenario {
    if let Some(host) = blocks
        .iter()
        .filter(|b| scope.is_subset_of(b.scope()))
        .min_by(|a, b| {
            (a.scope().size(), a.scope(), a.id).cmp(&(b.scope().size(), b.scope(), b.id))
        })
    {
        return TradeScenario::UpdateExisting(host.id);
    }
    let absorbed: Vec<BlockId> = blocks
        .iter()
        .filter(|b| b.scope().is_subset_of(scope))
        .map(|b| b.id)
        .collect();
    if !absorbed.is_empty() {
        return TradeScenario::CreateAndMerge(absorbed);
    }
    let shared = scope.without(|q| !blocks.iter().any(|b| b.scope().contains(q)));
    if shared.is_empty() {
        TradeScenario::CreateSeparate
    } else {
        TradeScenario::CreateOverlapping(shared)
    }
}

/// A user's baseline plus asset blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Real",
    deserialize = "F: Deserialize<'de> + Real"
))]
pub struct UserAssetModel<F> {
    user: String,
    baseline: F,
    blocks: Vec<AssetBlock<F>>,
    next_id: u64,
    cell_cap: usize,
}

impl<F: Real> UserAssetModel<F> {
    pub fn new(user: impl Into<String>, baseline: F) -> Self {
        UserAssetModel {
            user: user.into(),
            baseline,
            blocks: Vec::new(),
            next_id: 0,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }

    pub fn with_cell_cap(mut self, cap: usize) -> Self {
        self.cell_cap = cap;
        self
    }

    pub fn user(&self) -> &str {
        &self.user
    }

    pub fn baseline(&self) -> F {
        self.baseline
    }

    /// Blocks in creation order.
    pub fn blocks(&self) -> &[AssetBlock<F>] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> Option<&AssetBlock<F>> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// Adds an asset table without going through a trade, as
    /// [`apply_trade`](Self::apply_trade) would.
    pub fn ingest(&mut self, table: DenseTable<F>) -> Result<TradeScenario> {
        self.apply_trade(&table)
    }

    /// Folds a trade's asset delta into the block set.
    pub fn apply_trade(&mut self, delta: &DenseTable<F>) -> Result<TradeScenario> {
        let scenario = classify_trade(delta.scope(), &self.blocks);
        match &scenario {
            TradeScenario::UpdateExisting(id) => {
                let block = self
                    .blocks
                    .iter_mut()
                    .find(|b| b.id == *id)
                    .expect("classified block exists");
                block.table.combine_in_place(delta, CombineOp::Add)?;
            }
            TradeScenario::CreateAndMerge(absorbed) => {
                delta.scope().check_capacity(self.cell_cap)?;
                let mut table = delta.clone();
                for id in absorbed {
                    let block = self.block(*id).expect("classified block exists");
                    table.combine_in_place(&block.table, CombineOp::Add)?;
                }
                self.blocks.retain(|b| !absorbed.contains(&b.id));
                self.push_block(table);
            }
            TradeScenario::CreateSeparate | TradeScenario::CreateOverlapping(_) => {
                delta.scope().check_capacity(self.cell_cap)?;
                self.push_block(delta.clone());
            }
        }
        Ok(scenario)
    }

    fn push_block(&mut self, table: DenseTable<F>) {
        let id = BlockId(self.next_id);
        self.next_id += 1;
        self.blocks.push(AssetBlock { id, table });
    }

    /// Implied asset value at an assignment covering every block variable.
    pub fn value_at(&self, assignment: &Assignment) -> Result<F> {
        let mut total = self.baseline;
        for b in &self.blocks {
            total = total + b.table.value_at(assignment)?;
        }
        Ok(total)
    }

    /// Union of all block scopes.
    pub fn union_scope(&self) -> Result<Scope> {
        let mut scope = Scope::empty();
        for b in &self.blocks {
            scope = scope.union(b.scope())?;
        }
        Ok(scope)
    }

    /// Minimum assets over all joint states consistent with `evidence`.
    pub fn min_assets(&self, evidence: &Assignment) -> Result<F> {
        Ok(self.min_assets_detailed(evidence)?.value)
    }

    /// Minimum assets plus a minimising state over the block variables,
    /// merged with the evidence.
    pub fn min_assets_detailed(&self, evidence: &Assignment) -> Result<MinAssets<F>> {
        let mut value = self.baseline;
        let mut tables = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let sliced = block.table.slice(&evidence.restrict(block.scope()))?;
            match sliced.as_scalar() {
                Some(v) => value = value + v,
                None => tables.push(sliced),
            }
        }
        let mut argmin = evidence.clone();
        if tables.is_empty() {
            return Ok(MinAssets { value, argmin });
        }
        let mut forest = junction_forest(tables.iter().map(|t| t.scope()), self.cell_cap)?;
        forest.assign_blocks(&tables)?;
        for mut tree in forest.into_components() {
            let root = tree.default_root().expect("components are nonempty");
            let root_table = tree.collect_min(root)?;
            value = value + root_table.min_cell().1;
            argmin = argmin.merged(&tree.decode_argmin(root)?);
        }
        Ok(MinAssets { value, argmin })
    }

    /// Probability-weighted assets: `baseline + Σ_blocks Σ P(state | e) · v`.
    pub fn expected_assets(
        &self,
        provider: &impl MarginalProvider<F>,
        evidence: &Assignment,
    ) -> Result<F> {
        let mut total = self.baseline;
        for block in &self.blocks {
            let p = provider.posterior(block.scope(), evidence)?;
            total = total
                + p.values()
                    .iter()
                    .zip(block.table.values())
                    .fold(F::zero(), |acc, (&pi, &vi)| acc + pi * vi);
        }
        Ok(total)
    }

    /// Per-state bounds on a new conditional `x(target | given)` that keep
    /// minimum assets nonnegative. `lower(t) = p(t) · exp(-m(t) / b)` with
    /// `m(t)` the minimum assets given `target = t` and `given`; `upper(t)`
    /// is what remains after every other state takes its lower bound.
    pub fn edit_limits(
        &self,
        target: QuestionId,
        given: &Assignment,
        p_cond: &DenseTable<F>,
        b: F,
    ) -> Result<Vec<EditLimit<F>>> {
        let lowers = p_cond
            .values()
            .iter()
            .enumerate()
            .map(|(t, &p)| {
                let m = self.min_assets(&given.clone().with(target, t))?;
                Ok(p * (-m / b).exp())
            })
            .collect::<Result<Vec<F>>>()?;
        let total: F = lowers.iter().fold(F::zero(), |acc, &l| acc + l);
        Ok(lowers
            .iter()
            .enumerate()
            .map(|(state, &lower)| EditLimit {
                state,
                lower,
                upper: F::one() - (total - lower),
            })
            .collect())
    }

    /// Applies `delta` to a copy and reports the copy with its check result.
    pub fn simulate_trade(
        &self,
        delta: &DenseTable<F>,
    ) -> Result<(Self, TradeScenario, TradeCheck<F>)> {
        let mut next = self.clone();
        let scenario = next.apply_trade(delta)?;
        let min = next.min_assets_detailed(&Assignment::new())?;
        let check = if min.value >= -F::lit(NONNEGATIVITY_SLACK) {
            TradeCheck::Accept {
                min_after: min.value,
            }
        } else {
            TradeCheck::Reject {
                worst_state: min.argmin,
                deficit: -min.value,
            }
        };
        Ok((next, scenario, check))
    }

    /// Accepts iff the post-trade minimum assets stay nonnegative.
    pub fn validate_trade(
        &self,
        trade: &TradeSpec<F>,
        p_cond: &DenseTable<F>,
        scope: &Scope,
        b: F,
    ) -> Result<TradeCheck<F>> {
        let delta = asset_delta(trade, p_cond, scope, b)?;
        Ok(self.simulate_trade(&delta)?.2)
    }

    /// Settles `question` at `state` in every block, folding emptied blocks
    /// into the baseline and merging blocks that become nested.
    pub fn resolve(&mut self, question: QuestionId, state: usize) -> Result<()> {
        let evidence = Assignment::new().with(question, state);
        let mut kept = Vec::with_capacity(self.blocks.len());
        for block in std::mem::take(&mut self.blocks) {
            if !block.scope().contains(question) {
                kept.push(block);
                continue;
            }
            let table = block.table.slice(&evidence)?;
            match table.as_scalar() {
                Some(v) => self.baseline = self.baseline + v,
                None => kept.push(AssetBlock {
                    id: block.id,
                    table,
                }),
            }
        }
        self.blocks = kept;
        self.compact()
    }

    /// Merges every block whose scope is nested in another block's scope.
    fn compact(&mut self) -> Result<()> {
        loop {
            let mut merge = None;
            'search: for (i, inner) in self.blocks.iter().enumerate() {
                let host = self
                    .blocks
                    .iter()
                    .enumerate()
                    .filter(|&(j, outer)| {
                        j != i
                            && inner.scope().is_subset_of(outer.scope())
                            && (inner.scope() != outer.scope() || outer.id < inner.id)
                    })
                    .min_by(|(_, a), (_, b)| {
                        (a.scope().size(), a.scope(), a.id).cmp(&(
                            b.scope().size(),
                            b.scope(),
                            b.id,
                        ))
                    });
                if let Some((j, _)) = host {
                    merge = Some((i, j));
                    break 'search;
                }
            }
            let Some((i, j)) = merge else {
                return Ok(());
            };
            let inner = self.blocks[i].table.clone();
            self.blocks[j]
                .table
                .combine_in_place(&inner, CombineOp::Add)?;
            self.blocks.remove(i);
        }
    }
}
