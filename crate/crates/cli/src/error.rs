use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },
    #[error("preset {name}: {message}")]
    Preset { name: String, message: String },
    #[error("experiment {name}: {source}")]
    Experiment {
        name: String,
        #[source]
        source: bbmlab::Error,
    },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn experiment(name: &str) -> impl FnOnce(bbmlab::Error) -> CliError + '_ {
        move |source| CliError::Experiment {
            name: name.to_string(),
            source,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
