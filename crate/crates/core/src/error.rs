use thiserror::Error;

use crate::stream::ArmId;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BanditError {
    #[error("no current arm: the cursor is not positioned on an arm")]
    NoCurrentArm,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
    #[error("arm {0} does not exist in this instance")]
    UnknownArm(ArmId),
    #[error("session has already been used (pass count {0})")]
    StaleSession(u64),
    #[error("elimination did not converge within {0} rounds")]
    RoundCapExceeded(u32),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BanditError>;
