use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // -- mesh validation --
    #[error("face list is empty")]
    EmptyMesh,
    #[error("vertex index {0} out of range")]
    InvalidVertex(usize),
    #[error("need at least 7 vertices for a simplicial torus, got {0}")]
    TooFewVertices(usize),
    #[error("face {face} repeats a vertex: {vertices:?}")]
    NotSimplicial { face: usize, vertices: [usize; 3] },
    #[error("edge {0}-{1} borders {2} faces, expected 2")]
    NonManifoldEdge(usize, usize, usize),
    #[error("both faces at edge {0}-{1} traverse it in the same direction")]
    BadOrientation(usize, usize),
    #[error("link of vertex {0} is not a single cycle")]
    NonManifoldVertex(usize),
    #[error("Euler characteristic is {0}, expected 0")]
    EulerCharacteristic(i64),
    #[error("shift closure fails on face {face}: sum is ({sum_x}, {sum_y})")]
    CocycleViolation { face: usize, sum_x: i64, sum_y: i64 },
    #[error("shifts of {0}->{1} and {1}->{0} are not opposite")]
    ShiftAntisymmetry(usize, usize),
    #[error("shift given for {0}->{1}, which is not an edge")]
    UnknownEdge(usize, usize),
    #[error("duplicate shift entry for {0}->{1}")]
    DuplicateShift(usize, usize),
    #[error("one-skeleton is disconnected")]
    Disconnected,
    #[error("shift cocycle has degree {0}, expected the identity class (degree 1)")]
    HomotopyClass(i64),
    #[error("no loop with shift sum ({0}, {1}) exists")]
    NoGeneratorLoop(i64, i64),

    // -- geometry --
    #[error("placement has {got} points, mesh has {expected} vertices")]
    PlacementSize { expected: usize, got: usize },
    #[error("placement coordinate of vertex {0} is not finite")]
    NonFiniteCoordinate(usize),
    #[error("face {0} is degenerate")]
    DegenerateFace(usize),
    #[error("vertex {0} is not incident to face {1}")]
    NotACorner(usize, usize),

    // -- weights and solving --
    #[error("weight count {got} does not match {expected} directed edges")]
    WeightSize { expected: usize, got: usize },
    #[error("weight on {0}->{1} is not positive: {2}")]
    NonPositiveWeight(usize, usize, f64),
    #[error("no weight given for {0}->{1}")]
    MissingWeight(usize, usize),
    #[error("reduced balance system is singular")]
    SingularSystem,
    #[error("weights are not admissible: energy {energy:e} above tolerance {tol:e}")]
    NotAdmissible { energy: f64, tol: f64 },
    #[error("balanced placement failed the embedding check (energy {energy:e}, min area {min_area:e})")]
    EmbeddingCheckFailed { energy: f64, min_area: f64 },
    #[error("placement is not an embedding")]
    NotEmbedded,

    // -- flow --
    #[error("flow field is undefined on admissible weights")]
    AdmissibleInput,
    #[error("non-finite state at step {0}")]
    NonFiniteState(usize),
    #[error("retraction failed at t = {t}: {reason}")]
    RetractFailed { t: f64, reason: String },

    // -- one-forms --
    #[error("one-form is not antisymmetric on edge {0}-{1}")]
    NotAntisymmetric(usize, usize),
    #[error("vertex {0} is degenerate for this one-form")]
    DegenerateVertex(usize),

    // -- misc --
    #[error("perturbation failed to stay embedded after {0} halvings")]
    PerturbFailed(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from malformed or invalid input rather than a
    /// numerical breakdown. The CLI maps these to exit code 2, others to 3.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SingularSystem
                | Error::NotAdmissible { .. }
                | Error::EmbeddingCheckFailed { .. }
                | Error::AdmissibleInput
                | Error::NonFiniteState(_)
                | Error::RetractFailed { .. }
                | Error::PerturbFailed(_)
                | Error::DegenerateFace(_)
        )
    }
}
