//! Exact joint distribution of a market, LMSR trade updates and resolution.
//!
//! The joint is stored densely over every unresolved question. A trade
//! `x(T | U = u)` rescales only the joint states consistent with `u`, by the
//! ratio of the new conditional to the current one; every other state keeps
//! its probability bit for bit.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::table::{
    Assignment, DenseTable, QuestionId, Reducer, Scope, StridedIndices, TableError,
};

/// Default cap on joint states held by a market (≈ 20 binary questions).
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// Default clamp keeping trade probabilities inside the open simplex.
pub const DEFAULT_EPSILON: f64 = 1e-4;

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("a market needs at least one question")]
    NoQuestions,
    #[error("question id {0} used twice")]
    DuplicateQuestion(QuestionId),
    #[error("question {id} has cardinality {card}; at least 2 required")]
    InvalidCardinality { id: QuestionId, card: usize },
    #[error("scaling parameter b must be positive and finite, got {0}")]
    InvalidB(f64),
    #[error("probability clamp must lie in (0, 0.5), got {0}")]
    InvalidEpsilon(f64),
    #[error("joint needs {needed} states, cap is {cap}")]
    StateCapExceeded { needed: usize, cap: usize },
    #[error("unknown question {0}")]
    UnknownQuestion(QuestionId),
    #[error("question {0} is already resolved")]
    Resolved(QuestionId),
    #[error("target {0} also appears among the assumptions")]
    TargetInAssumptions(QuestionId),
    #[error("state {state} out of range for {id} (cardinality {card})")]
    StateOutOfRange {
        id: QuestionId,
        state: usize,
        card: usize,
    },
    #[error("new distribution has {found} entries, target has {expected} states")]
    DistLength { expected: usize, found: usize },
    #[error("new probability {value} at state {state} is outside [eps, 1 - eps]")]
    DistOutOfSimplex { state: usize, value: f64 },
    #[error("new distribution sums to {0}, not 1")]
    DistNotNormalized(f64),
    #[error("conditioning event has zero probability")]
    ZeroProbability,
    #[error("current conditional probability of target state {0} is zero")]
    ZeroConditional(usize),
}

pub type Result<T, E = ProbError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: QuestionId,
    pub name: String,
    pub cardinality: usize,
}

impl Question {
    pub fn new(id: u32, name: impl Into<String>, cardinality: usize) -> Self {
        Question {
            id: QuestionId(id),
            name: name.into(),
            cardinality,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketParams<F> {
    /// Liquidity (scaling) parameter, in points.
    pub b: F,
    /// Trade probabilities must lie in `[epsilon, 1 - epsilon]`.
    pub epsilon: F,
    pub state_cap: usize,
}

impl<F: Real> MarketParams<F> {
    pub fn with_b(b: F) -> Self {
        MarketParams {
            b,
            epsilon: F::lit(DEFAULT_EPSILON),
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// A conditional trade `x(target | assumptions)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeSpec<F> {
    pub target: QuestionId,
    #[serde(default)]
    pub assumptions: Assignment,
    pub new_dist: Vec<F>,
}

impl<F> TradeSpec<F> {
    pub fn new(target: QuestionId, assumptions: Assignment, new_dist: Vec<F>) -> Self {
        TradeSpec {
            target,
            assumptions,
            new_dist,
        }
    }
}

/// Distribution of a scope given evidence.
pub trait MarginalProvider<F> {
    /// `P(scope | evidence)` as a table over `scope`. Evidence variables may
    /// lie inside `scope`; inconsistent cells are then zero.
    fn posterior(&self, scope: &Scope, evidence: &Assignment) -> Result<DenseTable<F>>;
}

impl<F: Real> MarginalProvider<F> for DenseTable<F> {
    fn posterior(&self, scope: &Scope, evidence: &Assignment) -> Result<DenseTable<F>> {
        posterior_from_joint(self, scope, evidence)
    }
}

fn posterior_from_joint<F: Real>(
    joint: &DenseTable<F>,
    scope: &Scope,
    evidence: &Assignment,
) -> Result<DenseTable<F>> {
    for var in evidence.vars() {
        if !joint.scope().contains(var) {
            return Err(ProbError::UnknownQuestion(var));
        }
    }
    let ev_scope = joint.scope().without(|q| !evidence.contains(q));
    let wide = scope.union(&ev_scope)?;
    let mut mass = joint.project(&wide, Reducer::Sum)?;
    let wide_scope = mass.scope().clone();
    let masked: Vec<F> = mass
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if wide_scope.assignment_of(i).agrees_with(evidence) {
                v
            } else {
                F::zero()
            }
        })
        .collect();
    mass = DenseTable::new(wide_scope, masked)?;
    mass.project(scope, Reducer::Sum)?
        .normalize()
        .map_err(|e| match e {
            TableError::ZeroMass => ProbError::ZeroProbability,
            other => other.into(),
        })
}

/// Market catalog, exact joint over unresolved questions, and resolutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Real",
    deserialize = "F: Deserialize<'de> + Real"
))]
pub struct MarketState<F> {
    questions: Vec<Question>,
    joint: DenseTable<F>,
    resolutions: BTreeMap<QuestionId, usize>,
    params: MarketParams<F>,
}

impl<F: Real> MarketState<F> {
    /// New market with a uniform joint.
    pub fn create(questions: Vec<Question>, params: MarketParams<F>) -> Result<Self> {
        if questions.is_empty() {
            return Err(ProbError::NoQuestions);
        }
        let b = params.b;
        if !(b > F::zero() && b.is_finite()) {
            return Err(ProbError::InvalidB(b.to_f64_lossy()));
        }
        let eps = params.epsilon;
        if !(eps > F::zero() && eps < F::lit(0.5)) {
            return Err(ProbError::InvalidEpsilon(eps.to_f64_lossy()));
        }
        let mut seen = BTreeSet::new();
        for q in &questions {
            if !seen.insert(q.id) {
                return Err(ProbError::DuplicateQuestion(q.id));
            }
            if q.cardinality < 2 {
                return Err(ProbError::InvalidCardinality {
                    id: q.id,
                    card: q.cardinality,
                });
            }
        }
        let mut size = 1usize;
        for q in &questions {
            size = size
                .checked_mul(q.cardinality)
                .filter(|&s| s <= params.state_cap)
                .ok_or(ProbError::StateCapExceeded {
                    needed: size.saturating_mul(q.cardinality),
                    cap: params.state_cap,
                })?;
        }
        let scope = Scope::new(questions.iter().map(|q| (q.id, q.cardinality)))?;
        let n = F::from(scope.size()).ok_or(TableError::SizeOverflow)?;
        let joint = DenseTable::filled(scope, F::one() / n);
        Ok(MarketState {
            questions,
            joint,
            resolutions: BTreeMap::new(),
            params,
        })
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn question(&self, id: QuestionId) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn joint(&self) -> &DenseTable<F> {
        &self.joint
    }

    pub fn resolutions(&self) -> &BTreeMap<QuestionId, usize> {
        &self.resolutions
    }

    pub fn resolution(&self, id: QuestionId) -> Option<usize> {
        self.resolutions.get(&id).copied()
    }

    pub fn params(&self) -> &MarketParams<F> {
        &self.params
    }

    pub fn b(&self) -> F {
        self.params.b
    }

    pub fn open_questions(&self) -> impl Iterator<Item = &Question> {
        self.questions
            .iter()
            .filter(|q| !self.resolutions.contains_key(&q.id))
    }

    fn open_card(&self, id: QuestionId) -> Result<usize> {
        let q = self.question(id).ok_or(ProbError::UnknownQuestion(id))?;
        if self.resolutions.contains_key(&id) {
            return Err(ProbError::Resolved(id));
        }
        Ok(q.cardinality)
    }

    /// Scope over unresolved questions.
    pub fn scope_of(&self, vars: impl IntoIterator<Item = QuestionId>) -> Result<Scope> {
        let pairs = vars
            .into_iter()
            .map(|q| Ok((q, self.open_card(q)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scope::new(pairs)?)
    }

    /// Checks that every variable is unresolved and every state in range.
    pub fn check_assignment(&self, assignment: &Assignment) -> Result<()> {
        for (id, state) in assignment.iter() {
            let card = self.open_card(id)?;
            if state >= card {
                return Err(ProbError::StateOutOfRange { id, state, card });
            }
        }
        Ok(())
    }

    /// Scope `{T} ∪ U` of a trade.
    pub fn trade_scope(&self, trade: &TradeSpec<F>) -> Result<Scope> {
        self.scope_of(std::iter::once(trade.target).chain(trade.assumptions.vars()))
    }

    pub fn validate_spec(&self, trade: &TradeSpec<F>) -> Result<()> {
        let card = self.open_card(trade.target)?;
        if trade.assumptions.contains(trade.target) {
            return Err(ProbError::TargetInAssumptions(trade.target));
        }
        self.check_assignment(&trade.assumptions)?;
        if trade.new_dist.len() != card {
            return Err(ProbError::DistLength {
                expected: card,
                found: trade.new_dist.len(),
            });
        }
        let eps = self.params.epsilon;
        let mut total = F::zero();
        for (state, &x) in trade.new_dist.iter().enumerate() {
            if !(x.is_finite() && x >= eps && x <= F::one() - eps) {
                return Err(ProbError::DistOutOfSimplex {
                    state,
                    value: x.to_f64_lossy(),
                });
            }
            total = total + x;
        }
        if (total - F::one()).abs() > F::lit(NORMALIZATION_TOL) {
            return Err(ProbError::DistNotNormalized(total.to_f64_lossy()));
        }
        Ok(())
    }

    /// `p(target | U = u)`.
    pub fn conditional(&self, target: QuestionId, given: &Assignment) -> Result<DenseTable<F>> {
        if given.contains(target) {
            return Err(ProbError::TargetInAssumptions(target));
        }
        self.check_assignment(given)?;
        let scope = self.scope_of(std::iter::once(target).chain(given.vars()))?;
        self.joint
            .project(&scope, Reducer::Sum)?
            .slice(given)?
            .normalize()
            .map_err(|e| match e {
                TableError::ZeroMass => ProbError::ZeroProbability,
                other => other.into(),
            })
    }

    /// Applies a trade, returning the updated market.
    pub fn apply_trade(&self, trade: &TradeSpec<F>) -> Result<Self> {
        self.validate_spec(trade)?;
        let current = self.conditional(trade.target, &trade.assumptions)?;
        let ratios = trade
            .new_dist
            .iter()
            .zip(current.values())
            .enumerate()
            .map(|(t, (&x, &p))| {
                if p > F::zero() {
                    Ok(x / p)
                } else {
                    Err(ProbError::ZeroConditional(t))
                }
            })
            .collect::<Result<Vec<F>>>()?;

        let scope = self.joint.scope();
        let strides = scope.strides();
        let target_pos = scope.position(trade.target).expect("validated");
        let mut base = 0;
        for (var, state) in trade.assumptions.iter() {
            base += state * strides[scope.position(var).expect("validated")];
        }
        let free: Vec<usize> = (0..scope.len())
            .filter(|&i| i != target_pos && !trade.assumptions.contains(scope.vars()[i]))
            .collect();
        let free_cards: Vec<usize> = free.iter().map(|&i| scope.cards()[i]).collect();
        let free_strides: Vec<usize> = free.iter().map(|&i| strides[i]).collect();
        let free_size: usize = free_cards.iter().product();

        let mut values = self.joint.values().to_vec();
        for (t, &ratio) in ratios.iter().enumerate() {
            let start = base + t * strides[target_pos];
            for i in StridedIndices::new(&free_cards, free_strides.clone(), start, free_size) {
                values[i] = values[i] * ratio;
            }
        }
        let mut next = self.clone();
        next.joint = DenseTable::new(scope.clone(), values)?;
        Ok(next)
    }

    /// `P(vars)` as a SUM projection of the joint.
    pub fn marginal(&self, vars: &[QuestionId]) -> Result<DenseTable<F>> {
        let scope = self.scope_of(vars.iter().copied())?;
        Ok(self.joint.project(&scope, Reducer::Sum)?)
    }

    /// Settles `question` at `state`: conditions the joint and drops the variable.
    pub fn resolve(&self, question: QuestionId, state: usize) -> Result<Self> {
        let card = self.open_card(question)?;
        if state >= card {
            return Err(ProbError::StateOutOfRange {
                id: question,
                state,
                card,
            });
        }
        let sliced = self.joint.slice(&Assignment::new().with(question, state))?;
        let joint = sliced.normalize().map_err(|e| match e {
            TableError::ZeroMass => ProbError::ZeroProbability,
            other => other.into(),
        })?;
        let mut next = self.clone();
        next.joint = joint;
        next.resolutions.insert(question, state);
        Ok(next)
    }
}

impl<F: Real> MarginalProvider<F> for MarketState<F> {
    fn posterior(&self, scope: &Scope, evidence: &Assignment) -> Result<DenseTable<F>> {
        self.check_assignment(evidence)?;
        for var in scope.vars() {
            self.open_card(*var)?;
        }
        posterior_from_joint(&self.joint, scope, evidence)
    }
}
