use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice size must be at least 2, got {0}")]
    InvalidLatticeSize(usize),

    #[error("{what}: expected length {expected}, got {actual}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("syndrome is not trivial ({defects} defects); logical class is undefined")]
    NontrivialSyndrome { defects: usize },

    #[error("odd number of defects ({0}) cannot be paired on the torus")]
    OddDefectCount(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration would visit {requested} items, above the cap of {cap}")]
    CapExceeded { requested: u128, cap: u128 },

    #[error("model file rejected: {0}")]
    ModelFormat(String),

    #[error("training diverged: non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: u64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::SizeMismatch {
            what,
            expected,
            actual,
        })
    }
}
