//! Brute-force enumeration of a user's joint asset function.
//!
//! Deliberately independent of the junction-tree code: it walks every joint
//! state of the union of block scopes and sums block cells directly.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::table::{Assignment, DenseTable, Scope, TableError};

/// Largest state space the oracle will enumerate.
pub const ORACLE_STATE_CAP: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{needed} joint states exceed the oracle cap of {cap}")]
    StateCapExceeded { needed: usize, cap: usize },
    #[error("evidence has zero probability")]
    ZeroProbability,
    #[error("joint does not cover block scope {0}")]
    JointTooSmall(Scope),
}

pub type Result<T, E = OracleError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<S> {
    pub min: S,
    /// Lowest-index minimiser over the union scope, merged with evidence.
    pub argmin: Assignment,
    pub expected: Option<S>,
    pub states_enumerated: usize,
}

struct Enumerator<'a, S> {
    scope: Scope,
    blocks: &'a [&'a DenseTable<S>],
    /// Per block: stride of each union variable inside that block (0 if absent).
    strides: Vec<Vec<usize>>,
}

impl<'a, S: Scalar> Enumerator<'a, S> {
    fn new(blocks: &'a [&'a DenseTable<S>], extra: Option<&Scope>, cap: usize) -> Result<Self> {
        let mut scope = extra.cloned().unwrap_or_else(Scope::empty);
        for b in blocks {
            scope = scope.union(b.scope())?;
        }
        if scope.size() > cap {
            return Err(OracleError::StateCapExceeded {
                needed: scope.size(),
                cap,
            });
        }
        let strides = blocks
            .iter()
            .map(|b| {
                let own = b.scope().strides();
                scope
                    .vars()
                    .iter()
                    .map(|&q| b.scope().position(q).map_or(0, |i| own[i]))
                    .collect()
            })
            .collect();
        Ok(Enumerator {
            scope,
            blocks,
            strides,
        })
    }

    /// Visits every state consistent with `evidence` as `(union index, states, value)`.
    fn for_each(
        &self,
        baseline: S,
        evidence: &Assignment,
        mut visit: impl FnMut(usize, &[usize], S),
    ) {
        let n = self.scope.len();
        let fixed: Vec<Option<usize>> =
            self.scope.vars().iter().map(|&q| evidence.get(q)).collect();
        let mut states = vec![0usize; n];
        for index in 0..self.scope.size() {
            let mut rem = index;
            for i in (0..n).rev() {
                let c = self.scope.cards()[i];
                states[i] = rem % c;
                rem /= c;
            }
            if fixed
                .iter()
                .zip(&states)
                .any(|(f, &s)| f.is_some_and(|f| f != s))
            {
                continue;
            }
            let mut value = baseline;
            for (block, strides) in self.blocks.iter().zip(&self.strides) {
                let cell: usize = states.iter().zip(strides).map(|(s, k)| s * k).sum();
                value = value + block.values()[cell];
            }
            visit(index, &states, value);
        }
    }

    fn assignment(&self, states: &[usize]) -> Assignment {
        self.scope
            .vars()
            .iter()
            .copied()
            .zip(states.iter().copied())
            .collect()
    }
}

/// Exact minimum of `baseline + Σ blocks` over states consistent with `evidence`.
pub fn oracle_min<S: Scalar>(
    blocks: &[&DenseTable<S>],
    baseline: S,
    evidence: &Assignment,
) -> Result<OracleResult<S>> {
    let en = Enumerator::new(blocks, None, ORACLE_STATE_CAP)?;
    let mut best: Option<(S, Vec<usize>)> = None;
    let mut count = 0;
    en.for_each(baseline, evidence, |_, states, v| {
        count += 1;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, states.to_vec()));
        }
    });
    let (min, argmin) = match best {
        Some((v, states)) => (v, evidence.merged(&en.assignment(&states))),
        // Evidence contradicts nothing but leaves no state: only possible
        // when evidence is out of range for some block variable.
        None => (baseline, evidence.clone()),
    };
    Ok(OracleResult {
        min,
        argmin,
        expected: None,
        states_enumerated: count,
    })
}

/// `Σ_i P(i | evidence) · (baseline + Σ blocks(i))` by full enumeration of
/// the joint's scope.
pub fn oracle_expected<S: Scalar>(
    blocks: &[&DenseTable<S>],
    baseline: S,
    joint: &DenseTable<S>,
    evidence: &Assignment,
) -> Result<S> {
    for b in blocks {
        if !b.scope().is_subset_of(joint.scope()) {
            return Err(OracleError::JointTooSmall(b.scope().clone()));
        }
    }
    let en = Enumerator::new(blocks, Some(joint.scope()), ORACLE_STATE_CAP)?;
    let mut mass = S::zero();
    let mut weighted = S::zero();
    en.for_each(baseline, evidence, |index, _, v| {
        let p = joint.values()[index];
        mass = mass + p;
        weighted = weighted + p * v;
    });
    if mass == S::zero() {
        return Err(OracleError::ZeroProbability);
    }
    Ok(weighted / mass)
}

/// Both quantities in one result.
pub fn oracle_evaluate<S: Scalar>(
    blocks: &[&DenseTable<S>],
    baseline: S,
    joint: &DenseTable<S>,
    evidence: &Assignment,
) -> Result<OracleResult<S>> {
    let mut out = oracle_min(blocks, baseline, evidence)?;
    out.expected = Some(oracle_expected(blocks, baseline, joint, evidence)?);
    Ok(out)
}
