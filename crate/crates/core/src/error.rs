use thiserror::Error;

/// Errors produced by graph construction, estimation, solving and inference.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a structural contract (conflicting duplicate
    /// labels, unknown worker, label out of range, ...).
    #[error("data integrity: {0}")]
    DataIntegrity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The interaction graph has no edges.
    #[error("no interactions")]
    NoInteractions,

    /// An operation that requires every multi-worker component to be
    /// connected and non-bipartite was called on a graph that is not.
    #[error("not identifiable: {0}")]
    NotIdentifiable(String),

    /// A solver iterate became NaN or infinite.
    #[error("solver diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    /// A skill of exactly +-1 yields an infinite log-odds weight; apply
    /// boundary projection before inference.
    #[error("infinite weight for worker {worker}: |s| = 1; apply boundary projection")]
    InfiniteWeight { worker: usize },

    /// Sign propagation found too many non-tree edges whose correlation sign
    /// contradicts the tree assignment.
    #[error("sign-inconsistent data: edge ({i}, {j}) disagrees, agreement {agreement:.3}")]
    SignInconsistent { i: usize, j: usize, agreement: f64 },

    /// A correlation needed for sign propagation is exactly zero.
    #[error("ambiguous sign: correlation on edge ({i}, {j}) is zero")]
    AmbiguousSign { i: usize, j: usize },

    /// A cycle or path magnitude formula hit a zero correlation.
    #[error("degenerate {kind}: zero correlation on edge ({i}, {j})")]
    DegenerateEdge { kind: &'static str, i: usize, j: usize },

    #[error("numeric overflow: {0}")]
    Overflow(String),

    /// A synthetic-instance configuration cannot be realized.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
