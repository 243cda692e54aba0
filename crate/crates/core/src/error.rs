use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid POMDP specification: {0}")]
    InvalidSpec(String),

    #[error("action {action} is out of range (|A| = {n_actions})")]
    InvalidAction { action: usize, n_actions: usize },

    #[error("cannot step terminal state {0}")]
    SteppedTerminal(usize),

    #[error("observation has zero probability under the current belief")]
    ImpossibleEvidence,

    #[error("reward {0} is neither promoted nor covered by the residual map")]
    UncoveredReward(f64),

    #[error("empty trajectory corpus")]
    EmptyCorpus,

    #[error("test length must be 1 or 2, got {0}")]
    InvalidTestLength(usize),

    #[error("rank {k} exceeds matrix dimensions {rows}x{cols}")]
    RankTooLarge { k: usize, rows: usize, cols: usize },

    #[error("degenerate Hankel estimates: {0}")]
    DegenerateEstimates(String),

    #[error("impossible transition: normalizer {0:e} below threshold")]
    ImpossibleTransition(f64),

    #[error("pair (action {action}, observation {obs}) is not part of the model")]
    UnknownPair { action: usize, obs: usize },

    #[error("action {0} has no observations seen in training data")]
    NoSeenObservation(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty group in metrics table")]
    EmptyGroup,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
