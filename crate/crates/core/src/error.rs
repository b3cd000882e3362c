use thiserror::Error;

/// Errors raised while building or querying the objects of this crate.
///
/// Scale indices in messages are 1-based, coarsest first.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("scale {0} is not symmetric")]
    NonSymmetric(usize),
    #[error("scale {0} is not reflexive")]
    NonReflexive(usize),
    #[error("scale {next} is not contained in scale {0}", next = .0 + 1)]
    NotNested(usize),
    #[error("hausdorff flag set but the finest scale is not the diagonal")]
    HausdorffViolated,
    #[error("a filtered space needs at least one scale")]
    NoScales,
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("scale index {0} out of range")]
    BadScale(usize),
    #[error("scale pair ({0}, {1}) is not finer-to-coarser")]
    BadScalePair(usize, usize),
    #[error("distance matrix is not square")]
    NonSquareMatrix,
    #[error("distance matrix is not symmetric with zero diagonal")]
    AsymmetricMatrix,
    #[error("radii must be strictly decreasing")]
    NonDecreasingRadii,
    #[error("radii must be nonnegative and finite")]
    NegativeRadius,
    #[error("chain must be nonempty")]
    EmptyChain,
    #[error("sequence is not a chain at scale {0}")]
    NotAChain(usize),
    #[error("chains live at different scales")]
    ScaleMismatch,
    #[error("chain endpoints do not match")]
    EndpointMismatch,
    #[error("chain leaves the basepoint's component")]
    OutsideComponent,
    #[error("chain is not a loop at the basepoint")]
    NotALoop,
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("map is not uniformly continuous at target scale {0}")]
    NotUniformlyContinuous(usize),
    #[error("assignment has wrong length or leaves the target")]
    BadAssignment,
    #[error("not a permutation of the point set")]
    NotAPermutation,
    #[error("group closure exceeds {0} elements")]
    GroupTooLarge(usize),
    #[error("action is not faithful")]
    NotFaithful,
    #[error("thread enumeration exceeds the product bound {0}")]
    ProductTooLarge(usize),
    #[error("no integer solution at step {0}")]
    Unsolvable(usize),
    #[error("inconsistent tower: {0}")]
    BadTower(String),
    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),
}

pub type Result<T> = std::result::Result<T, Error>;
