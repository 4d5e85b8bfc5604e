use thiserror::Error;

/// Coarse grouping used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Format,
    Generation,
    Evaluation,
    Execution,
    Validation,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {kind} value `{value}`")]
    UnknownValue { kind: &'static str, value: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("validation failed for {subject}: {detail}")]
    Validation { subject: String, detail: String },

    // scenes
    #[error("scene sampling exhausted after {attempts} attempts placing object {object}: {constraint}")]
    SamplingExhausted {
        object: usize,
        attempts: usize,
        constraint: String,
    },
    #[error("object {0} does not exist in the scene")]
    InvalidReference(usize),

    // render
    #[error("object {0} is off-screen; its occlusion ratio is undefined")]
    OffScreen(usize),

    // program structure
    #[error("program has no nodes")]
    EmptyProgram,
    #[error("node {index}: unknown function `{name}`")]
    UnknownFunction { index: usize, name: String },
    #[error("node {index}: `{function}` takes {expected} input(s), got {found}")]
    Arity {
        index: usize,
        function: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("node {index}: bad value inputs for `{function}`: {detail}")]
    ValueInputs {
        index: usize,
        function: &'static str,
        detail: String,
    },
    #[error("node {index}: input {input} does not exist")]
    DanglingInput { index: usize, input: usize },
    #[error("node {index} participates in a cycle")]
    Cycle { index: usize },
    #[error("node {index} reads node {input}, which is not earlier in the list")]
    NotTopological { index: usize, input: usize },
    #[error("node {index} is not reachable from the root")]
    Unreachable { index: usize },

    // execution
    #[error("unique expects exactly one object, got {0}")]
    NonUniqueReferent(usize),
    #[error("ordinal rank {rank} exceeds set size {size}")]
    RankOutOfRange { rank: usize, size: usize },
    #[error("`{function}` requires a single-object input, got {size}")]
    SingletonRequired { function: &'static str, size: usize },
    #[error("`visible` needs a render result")]
    MissingRender,
    #[error("node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    // generation
    #[error("template `{family}`: {detail}")]
    Template { family: String, detail: String },
    #[error("expression generation exhausted after {attempts} attempts on scene {scene_id}")]
    GenerationExhausted { scene_id: usize, attempts: usize },

    // masks and scoring
    #[error("mask dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("corrupt mask: {0}")]
    CorruptMask(String),
    #[error("no prediction for expression {0}")]
    MissingPrediction(usize),
    #[error("duplicate prediction for expression {0}")]
    DuplicatePrediction(usize),
    #[error("prediction references unknown expression {0}")]
    UnknownExpression(usize),
    #[error("expression {0} refers to more than one object; detection scoring only covers single-object expressions")]
    MultiObjectDetection(usize),
    #[error("expression {expression}: candidate {candidate} is not an object of scene {scene_id}")]
    BadCandidate {
        expression: usize,
        candidate: usize,
        scene_id: usize,
    },
    #[error("expression {0}: prediction is for the wrong track")]
    WrongTrack(usize),
    #[error("expression {expression}: {found} step masks for a {expected}-node program")]
    TraceLength {
        expression: usize,
        expected: usize,
        found: usize,
    },

    // files
    #[error("unsupported format version {found} (this build reads {supported}.x)")]
    UnsupportedVersion { found: String, supported: u32 },
    #[error("malformed document: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_node(node: usize, source: Error) -> Self {
        Error::AtNode {
            node,
            source: Box::new(source),
        }
    }

    /// Innermost error, skipping node annotations.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtNode { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::UnknownValue { .. } => ErrorClass::Config,
            Error::Validation { .. } => ErrorClass::Validation,
            Error::SamplingExhausted { .. } | Error::GenerationExhausted { .. } | Error::Template { .. } => {
                ErrorClass::Generation
            }
            Error::EmptyProgram
            | Error::UnknownFunction { .. }
            | Error::Arity { .. }
            | Error::ValueInputs { .. }
            | Error::DanglingInput { .. }
            | Error::Cycle { .. }
            | Error::NotTopological { .. }
            | Error::Unreachable { .. }
            | Error::CorruptMask(_)
            | Error::UnsupportedVersion { .. }
            | Error::Format(_)
            | Error::Json(_)
            | Error::Io(_) => ErrorClass::Format,
            Error::MissingPrediction(_)
            | Error::DuplicatePrediction(_)
            | Error::UnknownExpression(_)
            | Error::MultiObjectDetection(_)
            | Error::BadCandidate { .. }
            | Error::WrongTrack(_)
            | Error::TraceLength { .. }
            | Error::DimensionMismatch(..) => ErrorClass::Evaluation,
            Error::AtNode { source, .. } => source.class(),
            Error::InvalidReference(_)
            | Error::OffScreen(_)
            | Error::NonUniqueReferent(_)
            | Error::RankOutOfRange { .. }
            | Error::SingletonRequired { .. }
            | Error::MissingRender => ErrorClass::Execution,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
