use std::fmt;

use qhermit::dynamics::DynamicsError;
use qhermit::flow::FlowError;
use qhermit::io::IoError;
use qhermit::matrixkit::MatrixError;
use qhermit::metric::MetricError;
use qhermit::models::ModelError;

/// Input problems exit with 2, failures of the mathematics with 1.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
            CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Empty | MatrixError::Shape { .. } | MatrixError::NotSquare { .. } | MatrixError::DimensionMismatch { .. } | MatrixError::NonFinite => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Matrix(m) => m.into(),
            ModelError::NoOracle { .. } | ModelError::Kink { .. } => CliError::Domain(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Matrix(m) => m.into(),
            MetricError::KappaLength { .. } | MetricError::InvalidKappa | MetricError::NotTridiagonal(..) => CliError::Input(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Model(m) => m.into(),
            FlowError::Matrix(m) => m.into(),
            FlowError::InvalidRange { .. } | FlowError::TooFewSteps(_) | FlowError::InvalidTolerance => CliError::Input(e.to_string()),
            FlowError::NotInSpectrum { .. } | FlowError::NoData => CliError::Domain(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Matrix(m) => m.into(),
            DynamicsError::Metric(m) => m.into(),
            DynamicsError::NoSteps | DynamicsError::NonFinite | DynamicsError::StateLength { .. } | DynamicsError::MissingG => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e.to_string())
    }
}
