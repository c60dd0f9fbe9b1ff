//! Dense potential tables over discrete variable scopes.
//!
//! Every table is laid out in canonical order: variables ascending by
//! [`QuestionId`], last variable fastest-varying. Persistence, the oracle and
//! the propagation kernels all rely on this single layout.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Real, Scalar};

/// Default cap on the number of cells a single table may hold.
pub const DEFAULT_CELL_CAP: usize = 1 << 22;

/// Identifier of a market question (a discrete random variable).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestionId(pub u32);

impl fmt::Display for QuestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("variable {0} appears more than once in a scope")]
    DuplicateVariable(QuestionId),
    #[error("variable {var} has cardinality {card}; at least 2 states are required")]
    InvalidCardinality { var: QuestionId, card: usize },
    #[error("variable {var} is given cardinality {found} but {expected} elsewhere")]
    CardinalityMismatch {
        var: QuestionId,
        expected: usize,
        found: usize,
    },
    #[error("state space size overflows")]
    SizeOverflow,
    #[error("table needs {needed} cells, cap is {cap}")]
    CapacityExceeded { needed: usize, cap: usize },
    #[error("table over {expected} cells given {found} values")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("variable {0} is not in the table scope")]
    UnknownVariable(QuestionId),
    #[error("assignment is missing variable {0}")]
    MissingVariable(QuestionId),
    #[error("state {state} out of range for {var} (cardinality {card})")]
    StateOutOfRange {
        var: QuestionId,
        state: usize,
        card: usize,
    },
    #[error("scope is not a subset of the table scope")]
    NotSubset,
    #[error("division of nonzero value by zero at cell {0}")]
    DivisionByZero(usize),
    #[error("negative probability at cell {0}")]
    NegativeMass(usize),
    #[error("table has zero total mass")]
    ZeroMass,
}

pub type Result<T, E = TableError> = std::result::Result<T, E>;

/// Ordered set of variables with their cardinalities, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<(QuestionId, usize)>",
    into = "Vec<(QuestionId, usize)>"
)]
pub struct Scope {
    vars: Vec<QuestionId>,
    cards: Vec<usize>,
    size: usize,
}

impl Scope {
    /// Builds a scope from `(variable, cardinality)` pairs in any order.
    pub fn new(pairs: impl IntoIterator<Item = (QuestionId, usize)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|&(q, _)| q);
        let mut size = 1usize;
        for (i, &(var, card)) in pairs.iter().enumerate() {
            if i > 0 && pairs[i - 1].0 == var {
                return Err(TableError::DuplicateVariable(var));
            }
            if card < 2 {
                return Err(TableError::InvalidCardinality { var, card });
            }
            size = size.checked_mul(card).ok_or(TableError::SizeOverflow)?;
        }
        let (vars, cards) = pairs.into_iter().unzip();
        Ok(Scope { vars, cards, size })
    }

    pub fn empty() -> Self {
        Scope {
            vars: Vec::new(),
            cards: Vec::new(),
            size: 1,
        }
    }

    pub fn vars(&self) -> &[QuestionId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn pairs(&self) -> impl Iterator<Item = (QuestionId, usize)> + '_ {
        self.vars.iter().copied().zip(self.cards.iter().copied())
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Number of joint states.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn position(&self, var: QuestionId) -> Option<usize> {
        self.vars.binary_search(&var).ok()
    }

    pub fn contains(&self, var: QuestionId) -> bool {
        self.position(var).is_some()
    }

    pub fn card_of(&self, var: QuestionId) -> Option<usize> {
        self.position(var).map(|i| self.cards[i])
    }

    pub fn is_subset_of(&self, other: &Scope) -> bool {
        self.pairs().all(|(q, c)| other.card_of(q) == Some(c))
    }

    pub fn intersects(&self, other: &Scope) -> bool {
        self.vars.iter().any(|&q| other.contains(q))
    }

    pub fn intersection(&self, other: &Scope) -> Scope {
        self.filtered(|q| other.contains(q))
    }

    /// Variables of `self` that are not in `vars`.
    pub fn without(&self, vars: impl Fn(QuestionId) -> bool) -> Scope {
        self.filtered(|q| !vars(q))
    }

    pub fn union(&self, other: &Scope) -> Result<Scope> {
        let mut merged: BTreeMap<QuestionId, usize> = self.pairs().collect();
        for (q, c) in other.pairs() {
            if let Some(&existing) = merged.get(&q) {
                if existing != c {
                    return Err(TableError::CardinalityMismatch {
                        var: q,
                        expected: existing,
                        found: c,
                    });
                }
            }
            merged.insert(q, c);
        }
        Scope::new(merged)
    }

    /// Row-major strides, last variable fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for i in (0..self.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// Strides of `self`'s variables inside `outer`, in `outer`'s variable
    /// order, zero for variables of `outer` that `self` lacks.
    fn strides_within(&self, outer: &Scope) -> Vec<usize> {
        let own = self.strides();
        outer
            .vars
            .iter()
            .map(|&q| self.position(q).map_or(0, |i| own[i]))
            .collect()
    }

    pub fn check_capacity(&self, cap: usize) -> Result<()> {
        if self.size > cap {
            Err(TableError::CapacityExceeded {
                needed: self.size,
                cap,
            })
        } else {
            Ok(())
        }
    }

    /// Every assignment of the scope in canonical index order.
    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        (0..self.size).map(move |i| self.assignment_of(i))
    }

    /// Inverse of [`index_of`].
    pub fn assignment_of(&self, mut index: usize) -> Assignment {
        let mut states = vec![0; self.len()];
        for i in (0..self.len()).rev() {
            states[i] = index % self.cards[i];
            index /= self.cards[i];
        }
        self.vars.iter().copied().zip(states).collect()
    }

    fn filtered(&self, keep: impl Fn(QuestionId) -> bool) -> Scope {
        let mut vars = Vec::new();
        let mut cards = Vec::new();
        let mut size = 1;
        for (q, c) in self.pairs() {
            if keep(q) {
                vars.push(q);
                cards.push(c);
                size *= c;
            }
        }
        Scope { vars, cards, size }
    }
}

impl TryFrom<Vec<(QuestionId, usize)>> for Scope {
    type Error = TableError;

    fn try_from(pairs: Vec<(QuestionId, usize)>) -> Result<Self> {
        Scope::new(pairs)
    }
}

impl From<Scope> for Vec<(QuestionId, usize)> {
    fn from(scope: Scope) -> Self {
        scope.pairs().collect()
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, q) in self.vars.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        f.write_str("}")
    }
}

/// Partial assignment of states to questions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<QuestionId, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: QuestionId, state: usize) -> Self {
        self.0.insert(var, state);
        self
    }

    pub fn insert(&mut self, var: QuestionId, state: usize) -> Option<usize> {
        self.0.insert(var, state)
    }

    pub fn remove(&mut self, var: QuestionId) -> Option<usize> {
        self.0.remove(&var)
    }

    pub fn get(&self, var: QuestionId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn contains(&self, var: QuestionId) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (QuestionId, usize)> + '_ {
        self.0.iter().map(|(&q, &s)| (q, s))
    }

    pub fn vars(&self) -> impl Iterator<Item = QuestionId> + '_ {
        self.0.keys().copied()
    }

    /// The part of the assignment over `scope`'s variables.
    pub fn restrict(&self, scope: &Scope) -> Assignment {
        self.iter().filter(|&(q, _)| scope.contains(q)).collect()
    }

    /// `true` if both assign the same state to every shared variable.
    pub fn agrees_with(&self, other: &Assignment) -> bool {
        self.iter()
            .all(|(q, s)| other.get(q).is_none_or(|t| t == s))
    }

    /// Union of two assignments; entries of `other` win on conflicts.
    pub fn merged(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        out.0.extend(other.0.iter());
        out
    }
}

impl FromIterator<(QuestionId, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (QuestionId, usize)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// Flat index of a full assignment of `scope`.
pub fn index_of(scope: &Scope, assignment: &Assignment) -> Result<usize> {
    if let Some(extra) = assignment.vars().find(|&q| !scope.contains(q)) {
        return Err(TableError::UnknownVariable(extra));
    }
    let mut index = 0;
    for (var, card) in scope.pairs() {
        let state = assignment
            .get(var)
            .ok_or(TableError::MissingVariable(var))?;
        if state >= card {
            return Err(TableError::StateOutOfRange { var, state, card });
        }
        index = index * card + state;
    }
    Ok(index)
}

/// Reduction used when projecting a table onto a smaller scope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reducer {
    Min,
    Sum,
}

/// Cell-wise operation used by [`DenseTable::combine`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Sub,
    Mul,
    /// Division with `0 / 0 = 0`.
    Div,
}

/// Walks `cards` in canonical order and yields `base + Σ state_i · strides_i`.
pub(crate) struct StridedIndices<'a> {
    cards: &'a [usize],
    strides: Vec<usize>,
    counters: Vec<usize>,
    current: usize,
    remaining: usize,
}

impl<'a> StridedIndices<'a> {
    pub(crate) fn new(cards: &'a [usize], strides: Vec<usize>, base: usize, total: usize) -> Self {
        StridedIndices {
            cards,
            strides,
            counters: vec![0; cards.len()],
            current: base,
            remaining: total,
        }
    }
}

impl Iterator for StridedIndices<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.current;
        for i in (0..self.cards.len()).rev() {
            self.counters[i] += 1;
            self.current += self.strides[i];
            if self.counters[i] < self.cards[i] {
                break;
            }
            self.current -= self.strides[i] * self.cards[i];
            self.counters[i] = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

#[derive(Deserialize)]
struct RawTable<S> {
    scope: Scope,
    values: Vec<S>,
}

impl<S: Scalar> TryFrom<RawTable<S>> for DenseTable<S> {
    type Error = TableError;

    fn try_from(raw: RawTable<S>) -> Result<Self> {
        DenseTable::new(raw.scope, raw.values)
    }
}

/// Numeric potential over a [`Scope`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawTable<S>",
    bound(deserialize = "S: Scalar + Deserialize<'de>")
)]
pub struct DenseTable<S> {
    scope: Scope,
    values: Vec<S>,
}

impl<S: Scalar> DenseTable<S> {
    pub fn new(scope: Scope, values: Vec<S>) -> Result<Self> {
        if values.len() != scope.size() {
            return Err(TableError::LengthMismatch {
                expected: scope.size(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite_value()) {
            return Err(TableError::NonFinite(i));
        }
        Ok(DenseTable { scope, values })
    }

    pub fn filled(scope: Scope, value: S) -> Self {
        let values = vec![value; scope.size()];
        DenseTable { scope, values }
    }

    pub fn zeros(scope: Scope) -> Self {
        Self::filled(scope, S::zero())
    }

    pub fn scalar(value: S) -> Self {
        Self::filled(Scope::empty(), value)
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The single value of an empty-scope table.
    pub fn as_scalar(&self) -> Option<S> {
        self.scope.is_empty().then(|| self.values[0])
    }

    pub fn index_of(&self, assignment: &Assignment) -> Result<usize> {
        index_of(&self.scope, assignment)
    }

    pub fn get(&self, assignment: &Assignment) -> Result<S> {
        Ok(self.values[self.index_of(assignment)?])
    }

    /// Value at the cell consistent with `assignment`, ignoring variables
    /// outside the scope.
    pub fn value_at(&self, assignment: &Assignment) -> Result<S> {
        self.get(&assignment.restrict(&self.scope))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        DenseTable {
            scope: self.scope.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> S {
        self.values.iter().fold(S::zero(), |acc, &v| acc + v)
    }

    /// Smallest cell and its index; the lowest index wins ties.
    pub fn min_cell(&self) -> (usize, S) {
        let mut best = (0, self.values[0]);
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Reduces the table onto `target` with `reducer`.
    pub fn project(&self, target: &Scope, reducer: Reducer) -> Result<Self> {
        if !target.is_subset_of(&self.scope) {
            return Err(TableError::NotSubset);
        }
        let strides = target.strides_within(&self.scope);
        let walk = StridedIndices::new(self.scope.cards(), strides, 0, self.len());
        let mut out: Vec<Option<S>> = vec![None; target.size()];
        for (&v, t) in self.values.iter().zip(walk) {
            out[t] = Some(match (out[t], reducer) {
                (None, _) => v,
                (Some(acc), Reducer::Sum) => acc + v,
                (Some(acc), Reducer::Min) => acc.min_value(v),
            });
        }
        Ok(DenseTable {
            scope: target.clone(),
            values: out.into_iter().map(|v| v.unwrap_or_else(S::zero)).collect(),
        })
    }

    /// Combines every cell with the cell of `src` at its projected assignment.
    pub fn combine(&self, src: &DenseTable<S>, op: CombineOp) -> Result<Self> {
        let mut out = self.clone();
        out.combine_in_place(src, op)?;
        Ok(out)
    }

    pub(crate) fn combine_in_place(&mut self, src: &DenseTable<S>, op: CombineOp) -> Result<()> {
        if !src.scope.is_subset_of(&self.scope) {
            return Err(TableError::NotSubset);
        }
        let strides = src.scope.strides_within(&self.scope);
        let walk = StridedIndices::new(self.scope.cards(), strides, 0, self.values.len());
        for (i, (cell, s)) in self.values.iter_mut().zip(walk).enumerate() {
            let rhs = src.values[s];
            *cell = match op {
                CombineOp::Add => *cell + rhs,
                CombineOp::Sub => *cell - rhs,
                CombineOp::Mul => *cell * rhs,
                CombineOp::Div => {
                    if rhs == S::zero() {
                        if *cell == S::zero() {
                            S::zero()
                        } else {
                            return Err(TableError::DivisionByZero(i));
                        }
                    } else {
                        *cell / rhs
                    }
                }
            };
        }
        Ok(())
    }

    /// Fixes the evidence variables and drops them from the scope.
    pub fn slice(&self, evidence: &Assignment) -> Result<Self> {
        if evidence.is_empty() {
            return Ok(self.clone());
        }
        let strides = self.scope.strides();
        let mut base = 0;
        for (var, state) in evidence.iter() {
            let pos = self
                .scope
                .position(var)
                .ok_or(TableError::UnknownVariable(var))?;
            let card = self.scope.cards()[pos];
            if state >= card {
                return Err(TableError::StateOutOfRange { var, state, card });
            }
            base += state * strides[pos];
        }
        let rest = self.scope.without(|q| evidence.contains(q));
        let rest_strides = self
            .scope
            .vars()
            .iter()
            .zip(&strides)
            .filter(|(q, _)| !evidence.contains(**q))
            .map(|(_, &s)| s)
            .collect();
        let values = StridedIndices::new(rest.cards(), rest_strides, base, rest.size())
            .map(|i| self.values[i])
            .collect();
        Ok(DenseTable {
            scope: rest,
            values,
        })
    }

    /// Same table viewed over a larger scope (constant along new variables).
    pub fn broadcast_to(&self, scope: &Scope) -> Result<Self> {
        DenseTable::zeros(scope.clone()).combine(self, CombineOp::Add)
    }
}

impl<F: Real> DenseTable<F> {
    /// Scales a nonnegative table to unit total mass.
    pub fn normalize(&self) -> Result<Self> {
        if let Some(i) = self.values.iter().position(|&v| v < F::zero()) {
            return Err(TableError::NegativeMass(i));
        }
        let total = self.sum();
        if total <= F::zero() {
            return Err(TableError::ZeroMass);
        }
        Ok(self.map(|v| v / total))
    }
}
