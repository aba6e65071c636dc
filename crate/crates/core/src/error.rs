use alloc::string::String;

use crate::joints::JointId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("missing joint channel: {0}")]
    MissingJoint(JointId),
    #[error("no dominant frequency: signal has no power at or above {min_hz} Hz")]
    NoDominantFrequency { min_hz: f64 },
    #[error("undefined phase: negligible energy at {frequency} Hz")]
    UndefinedPhase { frequency: f64 },
    #[error("curation error: {0}")]
    Curation(String),
    #[error("training diverged at step {step}: non-finite {quantity}")]
    Diverged { step: usize, quantity: &'static str },
}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
