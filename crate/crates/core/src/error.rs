use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("colour {0} does not belong to chain {1}")]
    ChainMismatch(String, String),
    #[error("colour {new} must exceed {current}")]
    ColourOrder { current: String, new: String },
    #[error("not a free tree: {0}")]
    NotATree(String),
    #[error("relation fails axiom {axiom} at {witness}")]
    Axiom {
        axiom: &'static str,
        witness: String,
    },
    #[error("vertices must be pairwise distinct: {0}")]
    NotDistinct(String),
    #[error("invalid tree of B-sets: {0}")]
    Invalid(String),
    #[error("nodes are not ordered: {0}")]
    NotBelow(String),
    #[error("triple {0} is not in L")]
    NotInL(String),
    #[error("not a strong substructure: {0}")]
    NotStrong(String),
    #[error("not a one-point extension: {0}")]
    NotOnePoint(String),
    #[error("map is not an L-isomorphism: {0}")]
    NotLIso(String),
    #[error("invalid morphism: {0}")]
    BadMorphism(String),
    #[error("size guard exceeded: {got} > {limit}")]
    SizeGuard { limit: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Other(String),
}

impl Error {
    /// Stable machine-readable code used on `ERR <code>:` lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownVertex(_) => "unknown-vertex",
            Error::UnknownNode(_) => "unknown-node",
            Error::ChainMismatch(..) => "chain-mismatch",
            Error::ColourOrder { .. } => "colour-order",
            Error::NotATree(_) => "not-a-tree",
            Error::Axiom { .. } => "axiom",
            Error::NotDistinct(_) => "not-distinct",
            Error::Invalid(_) => "invalid",
            Error::NotBelow(_) => "not-below",
            Error::NotInL(_) => "not-in-l",
            Error::NotStrong(_) => "not-strong",
            Error::NotOnePoint(_) => "not-one-point",
            Error::NotLIso(_) => "not-l-iso",
            Error::BadMorphism(_) => "bad-morphism",
            Error::SizeGuard { .. } => "size-guard",
            Error::Parse { .. } => "parse",
            Error::Other(_) => "other",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
