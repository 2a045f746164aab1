use cryptopred::augment::AugmentError;
use cryptopred::corpus::CorpusError;
use cryptopred::emotion::EmotionError;
use cryptopred::eval::EvalError;
use cryptopred::features::FeatureError;
use cryptopred::models::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("provider: {0}")]
    Provider(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) | ModelError::UnknownKind(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EmotionError> for CliError {
    fn from(e: EmotionError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::Provider(_)
            | AugmentError::MissingApiKey(_)
            | AugmentError::Unparseable { .. }
            | AugmentError::InvalidConfig(_) => CliError::Provider(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}
