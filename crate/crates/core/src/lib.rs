//! Asset management for combinatorial prediction markets.
//!
//! Each trade `x(T | U = u)` on a logarithmic market scoring rule market
//! changes the trader's state-contingent assets by `b · ln(x / p)` on the
//! joint states of `{T} ∪ U`. Those changes are kept as asset blocks; a
//! user's cash (minimum assets over all outcomes) is computed by building a
//! junction forest over the block scopes and running one-way
//! min-propagation, and checked against brute-force enumeration.
//!
//! The table, tree and oracle layers are generic over [`Scalar`], so the
//! same kernels run on `f64`, `f32`, integers or exact rationals. The type
//! aliases below fix the scalar for the common cases.

pub mod asset;
pub mod bench;
pub mod jtree;
pub mod oracle;
pub mod prob;
pub mod scalar;
pub mod table;

pub use asset::{
    asset_delta, classify_trade, AssetBlock, AssetError, BlockId, EditLimit, MinAssets, TradeCheck,
    TradeScenario, UserAssetModel,
};
pub use jtree::{
    build_graph, build_tree, junction_forest, triangulate, JunctionTree, TreeError, Triangulation,
    UndirectedGraph,
};
pub use oracle::{oracle_evaluate, oracle_expected, oracle_min, OracleError, OracleResult};
pub use prob::{MarginalProvider, MarketParams, MarketState, ProbError, Question, TradeSpec};
pub use scalar::{Real, Scalar};
pub use table::{
    index_of, Assignment, CombineOp, DenseTable, QuestionId, Reducer, Scope, TableError,
    DEFAULT_CELL_CAP,
};

/// Exact rational cell type.
pub type Exact = num_rational::Ratio<i64>;

pub type Table = DenseTable<f64>;
pub type ExactTable = DenseTable<Exact>;
pub type Tree = JunctionTree<f64>;
pub type ExactTree = JunctionTree<Exact>;
pub type Market = MarketState<f64>;
pub type Trade = TradeSpec<f64>;
pub type UserAssets = UserAssetModel<f64>;
pub type Block = AssetBlock<f64>;
pub type Limit = EditLimit<f64>;
pub type Check = TradeCheck<f64>;
