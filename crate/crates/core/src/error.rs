use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// `p_critical` left [0,1] in strict mode.
    #[error("edge probability {raw} outside [0,1] for lambda={lambda}, n={n}")]
    InvalidWindow { lambda: f64, n: u64, raw: f64 },

    #[error("no component with canonical id {0}")]
    UnknownComponent(u32),

    /// Kernel contraction is only defined for surplus >= 2.
    #[error("component {component} has surplus {surplus}, kernel needs surplus >= 2")]
    NoKernel { component: u32, surplus: u32 },

    /// Operation needs a nonempty 2-core but the component is a tree.
    #[error("component {0} has an empty 2-core")]
    EmptyCore(u32),

    /// Tree components have no core; the caller must designate a root.
    #[error("component {0} is a tree; supply a root for trimming")]
    TreeNeedsRoot(u32),

    #[error("vertex {root} is not a vertex of component {component}")]
    RootOutsideComponent { component: u32, root: u32 },

    #[error("rooted trimming applies to tree components; component {0} has a cycle")]
    NotATree(u32),

    #[error("invalid process spec: {0}")]
    InvalidSpec(String),

    /// Time-change formulas need p <= p'.
    #[error("duality requires 0 < p <= p' < 1, got p={p}, p_prime={p_prime}")]
    DomainError { p: f64, p_prime: f64 },

    #[error("partition is not a disjoint cover of the mass indices: {0}")]
    BadPartition(String),

    /// No grid value satisfies the threshold hypotheses.
    #[error("threshold search unsatisfiable: {0}")]
    Unsatisfiable(String),

    #[error("instance too large for exhaustive verification: {0}")]
    InstanceTooLarge(String),

    #[error("component has {n_vertices} vertices, exceeding the cap {cap}")]
    TooLarge { n_vertices: u32, cap: u32 },

    #[error("exact GHP mode caps size(A)*size(B) at {cap}, got {product}")]
    TooLargeForExact { product: usize, cap: usize },

    #[error("relation does not cover {0}")]
    NotACorrespondence(String),

    #[error("invalid measured space: {0}")]
    InvalidSpace(String),

    #[error("surplus annotation missing on an input space")]
    MissingSurplus,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
