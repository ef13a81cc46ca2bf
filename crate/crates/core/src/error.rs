use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node index {index} out of range (graph has {len} nodes)")]
    NodeOutOfRange { index: usize, len: usize },
    #[error("directed cycle through edge {from} -> {to}")]
    Cycle { from: usize, to: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("edge budget {requested} exceeds the {capacity} available forward pairs")]
    EdgeCapacity { requested: usize, capacity: usize },
    #[error("{what}: gave up after {attempts} attempts")]
    RetriesExhausted { what: &'static str, attempts: usize },
    #[error("exact inference would enumerate {hidden} hidden nodes (limit {limit})")]
    EnumerationBound { hidden: usize, limit: usize },
    #[error("training data contains a single outcome class")]
    SingleClass,
    #[error("loss became non-finite at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("dataset is empty")]
    EmptyData,
    #[error("every one of the {0} rows gave an undefined intervention effect")]
    AllUndefined(usize),
    #[error("invalid dataset: {0}")]
    Data(String),
}
