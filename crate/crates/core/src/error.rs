use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while reading one of the text formats. Every variant carries
/// the 1-based line number of the offending line.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: edge ({p}, {q}) references a node outside 0..{n}")]
    DanglingEdgeEndpoint {
        line: usize,
        p: usize,
        q: usize,
        n: usize,
    },
    #[error("line {line}: duplicate edge ({p}, {q})")]
    DuplicateEdge { line: usize, p: usize, q: usize },
    #[error("line {line}: self-loop on node {p}")]
    SelfLoop { line: usize, p: usize },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: boundary length {value} is not positive")]
    NonPositiveBoundaryLength { line: usize, value: f64 },
    #[error("unexpected end of input after line {line}: {msg}")]
    UnexpectedEof { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("dimension mismatch: {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("labeling length {found} does not match {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("graph has no ground truth labeling")]
    MissingGroundTruth,
    #[error("pairwise mode {0} requires a co-occurrence table")]
    MissingTable(&'static str),
    #[error("exhaustive inference over {num_labels}^{num_nodes} states exceeds the 2^20 cap")]
    StateSpaceTooLarge { num_nodes: usize, num_labels: usize },
    #[error("training corpus contains a single class")]
    SingleClassCorpus,
    #[error("inconsistent corpus: {0}")]
    InconsistentCorpus(String),
    #[error("image has {pixels} pixels, fewer than the {target} requested superpixels")]
    ImageTooSmall { pixels: usize, target: usize },
    #[error("empty confusion matrix")]
    EmptyMatrix,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
