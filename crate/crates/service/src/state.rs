//! Full state of one market at a ledger sequence point.

use std::collections::BTreeMap;

use dac_core::{
    asset_delta, Assignment, BlockId, EditLimit, MarketParams, MarketState, Question, QuestionId,
    Scope, TradeCheck, TradeScenario, TradeSpec, UserAssetModel,
};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::ledger::LedgerEvent;

/// Fixed when the market is created and recorded in its genesis record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub b: f64,
    pub baseline: f64,
    pub epsilon: f64,
    pub cell_cap: usize,
    pub state_cap: usize,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            b: 100.0,
            baseline: 100.0,
            epsilon: dac_core::prob::DEFAULT_EPSILON,
            cell_cap: dac_core::DEFAULT_CELL_CAP,
            state_cap: dac_core::prob::DEFAULT_STATE_CAP,
        }
    }
}

impl MarketConfig {
    fn params(&self) -> MarketParams<f64> {
        MarketParams {
            b: self.b,
            epsilon: self.epsilon,
            state_cap: self.state_cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub user: String,
    pub name: String,
    pub baseline: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketSnapshot {
    pub market_id: u64,
    pub sequence: u64,
    pub config: MarketConfig,
    pub market: MarketState<f64>,
    pub accounts: BTreeMap<String, Account>,
    pub users: BTreeMap<String, UserAssetModel<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeReceipt {
    pub sequence: u64,
    pub dry_run: bool,
    pub scenario: TradeScenario,
    pub new_conditional: Vec<f64>,
    pub cash: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub id: BlockId,
    pub scope: Scope,
    pub cells: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserReport {
    pub sequence: u64,
    pub user: String,
    pub name: String,
    pub baseline: f64,
    pub cash: f64,
    pub expected: f64,
    pub blocks: Vec<BlockSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitsReport {
    pub sequence: u64,
    pub target: QuestionId,
    pub assumptions: Assignment,
    pub current: Vec<f64>,
    pub limits: Vec<EditLimit<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionStatus {
    pub id: QuestionId,
    pub name: String,
    pub cardinality: usize,
    pub resolved: Option<usize>,
    pub marginal: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineChange {
    pub user: String,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub sequence: u64,
    pub question: QuestionId,
    pub state: usize,
    pub users: Vec<BaselineChange>,
}

/// What applying one ledger event produced.
#[derive(Clone, Debug, PartialEq)]
pub enum EventOutcome {
    MarketCreated,
    AccountCreated(Account),
    Traded(TradeReceipt),
    Resolved(ResolutionReport),
}

struct Evaluated {
    market: MarketState<f64>,
    user: UserAssetModel<f64>,
    receipt: TradeReceipt,
}

impl MarketSnapshot {
    /// State right after the genesis record (sequence 1).
    pub fn genesis(market_id: u64, questions: Vec<Question>, config: MarketConfig) -> Result<Self> {
        if !(config.baseline.is_finite() && config.baseline >= 0.0) {
            return Err(ServiceError::InvalidRequest(format!(
                "baseline must be a nonnegative number, got {}",
                config.baseline
            )));
        }
        let market = MarketState::create(questions, config.params())?;
        Ok(MarketSnapshot {
            market_id,
            sequence: 1,
            config,
            market,
            accounts: BTreeMap::new(),
            users: BTreeMap::new(),
        })
    }

    /// Applies a non-genesis event, bumping the sequence. On error the
    /// snapshot is left untouched.
    pub fn apply(&mut self, event: &LedgerEvent) -> Result<EventOutcome> {
        let outcome = match event {
            LedgerEvent::CreateMarket { .. } => {
                return Err(ServiceError::InvalidRequest("market already exists".into()))
            }
            LedgerEvent::CreateAccount { user, name } => {
                if user.is_empty() {
                    return Err(ServiceError::InvalidRequest("empty user id".into()));
                }
                if self.accounts.contains_key(user) {
                    return Err(ServiceError::DuplicateUser(user.clone()));
                }
                let account = Account {
                    user: user.clone(),
                    name: name.clone(),
                    baseline: self.config.baseline,
                };
                self.accounts.insert(user.clone(), account.clone());
                self.users.insert(
                    user.clone(),
                    UserAssetModel::new(user.clone(), self.config.baseline)
                        .with_cell_cap(self.config.cell_cap),
                );
                EventOutcome::AccountCreated(account)
            }
            LedgerEvent::Trade { user, trade } => {
                let mut done = self.evaluate_trade(user, trade)?;
                self.market = done.market;
                self.users.insert(user.clone(), done.user);
                done.receipt.sequence = self.sequence + 1;
                EventOutcome::Traded(done.receipt)
            }
            LedgerEvent::Resolve { question, state } => {
                let market = self.market.resolve(*question, *state)?;
                let mut users = self.users.clone();
                let mut changes = Vec::new();
                for (id, model) in users.iter_mut() {
                    let before = model.baseline();
                    model.resolve(*question, *state)?;
                    if model.baseline() != before {
                        changes.push(BaselineChange {
                            user: id.clone(),
                            before,
                            after: model.baseline(),
                        });
                    }
                }
                self.market = market;
                self.users = users;
                EventOutcome::Resolved(ResolutionReport {
                    sequence: self.sequence + 1,
                    question: *question,
                    state: *state,
                    users: changes,
                })
            }
        };
        self.sequence += 1;
        Ok(outcome)
    }

    fn model(&self, user: &str) -> Result<&UserAssetModel<f64>> {
        self.users
            .get(user)
            .ok_or_else(|| ServiceError::UnknownUser(user.to_string()))
    }

    fn evaluate_trade(&self, user: &str, trade: &TradeSpec<f64>) -> Result<Evaluated> {
        let model = self.model(user)?;
        self.market.validate_spec(trade)?;
        let p = self.market.conditional(trade.target, &trade.assumptions)?;
        let scope = self.market.trade_scope(trade)?;
        let delta = asset_delta(trade, &p, &scope, self.market.b())?;
        let (next_user, scenario, check) = model.simulate_trade(&delta)?;
        let cash = match check {
            TradeCheck::Accept { min_after } => min_after,
            TradeCheck::Reject {
                worst_state,
                deficit,
            } => {
                return Err(ServiceError::Rejected {
                    worst_state,
                    deficit,
                })
            }
        };
        let market = self.market.apply_trade(trade)?;
        let expected = next_user.expected_assets(&market, &Assignment::new())?;
        let new_conditional = market
            .conditional(trade.target, &trade.assumptions)?
            .into_values();
        Ok(Evaluated {
            market,
            user: next_user,
            receipt: TradeReceipt {
                sequence: self.sequence,
                dry_run: false,
                scenario,
                new_conditional,
                cash,
                expected,
            },
        })
    }

    /// What-if evaluation of a trade; nothing is committed.
    pub fn preview_trade(&self, user: &str, trade: &TradeSpec<f64>) -> Result<TradeReceipt> {
        let mut receipt = self.evaluate_trade(user, trade)?.receipt;
        receipt.dry_run = true;
        Ok(receipt)
    }

    pub fn user_report(&self, user: &str) -> Result<UserReport> {
        let model = self.model(user)?;
        let account = &self.accounts[user];
        let none = Assignment::new();
        Ok(UserReport {
            sequence: self.sequence,
            user: user.to_string(),
            name: account.name.clone(),
            baseline: model.baseline(),
            cash: model.min_assets(&none)?,
            expected: model.expected_assets(&self.market, &none)?,
            blocks: model
                .blocks()
                .iter()
                .map(|b| {
                    let values = b.table().values();
                    BlockSummary {
                        id: b.id,
                        scope: b.scope().clone(),
                        cells: values.len(),
                        min: values.iter().copied().fold(f64::INFINITY, f64::min),
                        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    }
                })
                .collect(),
        })
    }

    pub fn edit_limits(
        &self,
        user: &str,
        target: QuestionId,
        given: &Assignment,
    ) -> Result<LimitsReport> {
        let model = self.model(user)?;
        let p = self.market.conditional(target, given)?;
        let limits = model.edit_limits(target, given, &p, self.market.b())?;
        Ok(LimitsReport {
            sequence: self.sequence,
            target,
            assumptions: given.clone(),
            current: p.into_values(),
            limits,
        })
    }

    pub fn question_statuses(&self) -> Result<Vec<QuestionStatus>> {
        self.market
            .questions()
            .iter()
            .map(|q| {
                let resolved = self.market.resolution(q.id);
                let marginal = match resolved {
                    Some(_) => None,
                    None => Some(self.market.marginal(&[q.id])?.into_values()),
                };
                Ok(QuestionStatus {
                    id: q.id,
                    name: q.name.clone(),
                    cardinality: q.cardinality,
                    resolved,
                    marginal,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: QuestionId = QuestionId(0);

    fn snapshot() -> MarketSnapshot {
        let mut s = MarketSnapshot::genesis(
            1,
            vec![Question::new(0, "T", 2), Question::new(1, "U", 2)],
            MarketConfig::default(),
        )
        .unwrap();
        s.apply(&LedgerEvent::CreateAccount {
            user: "alice".into(),
            name: "Alice".into(),
        })
        .unwrap();
        s
    }

    fn trade(p1: f64) -> LedgerEvent {
        LedgerEvent::Trade {
            user: "alice".into(),
            trade: TradeSpec::new(T, Assignment::new(), vec![1.0 - p1, p1]),
        }
    }

    #[test]
    fn accepted_trade_reports_cash_and_expected() {
        let mut s = snapshot();
        let EventOutcome::Traded(r) = s.apply(&trade(0.6)).unwrap() else {
            panic!("expected a trade receipt");
        };
        // 100 + 100·ln(0.8) on the losing state
        assert!((r.cash - 77.685_644_868_579).abs() < 1e-9);
        let expected = 100.0 + 0.6 * 100.0 * 1.2f64.ln() + 0.4 * 100.0 * 0.8f64.ln();
        assert!((r.expected - expected).abs() < 1e-9);
        assert!((r.expected - 102.013_551_355_069).abs() < 1e-9);
        assert_eq!(r.sequence, 3);
        assert_eq!(s.sequence, 3);
    }

    #[test]
    fn repeating_the_same_quote_is_free() {
        let mut s = snapshot();
        s.apply(&trade(0.6)).unwrap();
        let cash = s.user_report("alice").unwrap().cash;
        let EventOutcome::Traded(r) = s.apply(&trade(0.6)).unwrap() else {
            panic!()
        };
        assert!((r.cash - cash).abs() < 1e-12);
        assert!(matches!(r.scenario, TradeScenario::UpdateExisting(_)));
    }

    #[test]
    fn rejected_trade_leaves_state_unchanged() {
        let mut s = snapshot();
        let before = s.clone();
        match s.apply(&trade(0.1)) {
            Err(ServiceError::Rejected {
                deficit,
                worst_state,
            }) => {
                assert!((deficit - (100.0 * 5f64.ln() - 100.0)).abs() < 1e-9);
                assert!((deficit - 60.943_791_243_410_03).abs() < 1e-9);
                assert_eq!(worst_state, Assignment::new().with(T, 1));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
        assert_eq!(s, before);
    }

    #[test]
    fn fresh_user_report() {
        let s = snapshot();
        let r = s.user_report("alice").unwrap();
        assert_eq!((r.cash, r.expected), (100.0, 100.0));
        assert!(matches!(
            s.user_report("bob"),
            Err(ServiceError::UnknownUser(_))
        ));
    }

    #[test]
    fn resolution_pays_out_the_winning_state() {
        let mut s = snapshot();
        s.apply(&trade(0.6)).unwrap();
        let EventOutcome::Resolved(rep) = s
            .apply(&LedgerEvent::Resolve {
                question: T,
                state: 1,
            })
            .unwrap()
        else {
            panic!()
        };
        assert!((rep.users[0].after - rep.users[0].before - 18.232_155_679_395_46).abs() < 1e-9);
        let r = s.user_report("alice").unwrap();
        assert!((r.cash - 118.232_155_679_395_46).abs() < 1e-9);
        assert_eq!(r.cash, r.expected);
        assert!(matches!(
            s.apply(&LedgerEvent::Resolve {
                question: T,
                state: 1
            }),
            Err(ServiceError::Market(dac_core::ProbError::Resolved(_)))
        ));
    }

    #[test]
    fn resolution_without_holders_only_moves_the_joint() {
        let mut s = snapshot();
        s.apply(&LedgerEvent::Resolve {
            question: QuestionId(1),
            state: 0,
        })
        .unwrap();
        assert_eq!(s.user_report("alice").unwrap().baseline, 100.0);
        assert_eq!(s.market.joint().scope().vars(), &[T]);
    }

    #[test]
    fn duplicate_accounts_are_refused() {
        let mut s = snapshot();
        let again = LedgerEvent::CreateAccount {
            user: "alice".into(),
            name: String::new(),
        };
        assert!(matches!(
            s.apply(&again),
            Err(ServiceError::DuplicateUser(_))
        ));
    }

    #[test]
    fn edit_limits_for_fresh_user() {
        let s = snapshot();
        let lim = s.edit_limits("alice", T, &Assignment::new()).unwrap();
        assert!((lim.limits[0].lower - 0.5 * (-1f64).exp()).abs() < 1e-15);
        assert!((lim.limits[0].upper - (1.0 - 0.5 * (-1f64).exp())).abs() < 1e-15);
    }
}
