use scour_core::data::DataError;
use scour_core::model::ModelError;
use scour_core::swarm::SwarmError;
use scour_core::workbench::WorkbenchError;
use thiserror::Error;

/// Process exit codes: 0 success, 1 usage, 2 data validation, 3 numerical failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownSpec { .. } | ModelError::Spec { .. } => {
                CliError::Usage(e.to_string())
            }
            ModelError::Swarm(SwarmError::DegenerateObjective { .. })
            | ModelError::ConstantFeature { .. } => CliError::Numerical(e.to_string()),
            ModelError::Swarm(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<WorkbenchError> for CliError {
    fn from(e: WorkbenchError) -> Self {
        match e {
            WorkbenchError::Model(m) => m.into(),
            WorkbenchError::Data(d) => d.into(),
            WorkbenchError::AllFitsFailed(_) | WorkbenchError::Metrics(_) => {
                CliError::Numerical(e.to_string())
            }
            WorkbenchError::NoSpecs => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
