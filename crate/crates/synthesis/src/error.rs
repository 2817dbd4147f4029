use crate::backend::BackendError;

#[derive(Debug, thiserror::Error)]
pub enum SynthesisError {
    #[error("backend failed after {attempts} attempt(s): {last}")]
    Backend { attempts: u32, last: BackendError },
    #[error("iteration {iteration}: reviewer output unparseable after re-ask: {message}")]
    ReviewParse { iteration: u32, message: String, output: String },
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl SynthesisError {
    pub fn kind(&self) -> &'static str {
        match self {
            SynthesisError::Backend { .. } => "BackendError",
            SynthesisError::ReviewParse { .. } => "ReviewParseError",
            SynthesisError::InvalidConfig(_) => "InvalidConfig",
            SynthesisError::InvalidInput(_) => "InvalidInput",
        }
    }
}
