use qubit_lgti::analytic::AnalyticError;
use qubit_lgti::lgti::LgtiError;
use qubit_lgti::oracle::OracleError;
use qubit_lgti::params::ParamsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("physics check failed: {0}")]
    Physics(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Physics(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ParamsError> for CliError {
    fn from(e: ParamsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Params(p) => p.into(),
            other => CliError::Physics(other.to_string()),
        }
    }
}

impl From<LgtiError> for CliError {
    fn from(e: LgtiError) -> Self {
        match e {
            LgtiError::Analytic(a) => a.into(),
            LgtiError::InvalidSharpness(_)
            | LgtiError::InvalidRange(..)
            | LgtiError::TooFewSamples(_) => CliError::Config(e.to_string()),
            other => CliError::Physics(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Params(p) => p.into(),
            OracleError::InvalidInput(msg) => CliError::Config(msg),
            other => CliError::Physics(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let params: CliError = ParamsError::NegativeSqueezing(-1.0).into();
        assert_eq!(params.exit_code(), 1);
        let nested: CliError =
            LgtiError::Analytic(AnalyticError::Params(ParamsError::NonPositiveRabi(0.0))).into();
        assert_eq!(nested.exit_code(), 1);
        let mismatch: CliError = AnalyticError::PropagatorMismatch {
            t: 1.0,
            deviation: 1e-6,
        }
        .into();
        assert_eq!(mismatch.exit_code(), 2);
        let unphysical: CliError = OracleError::Physicality("negative eigenvalue".into()).into();
        assert_eq!(unphysical.exit_code(), 2);
        let weak: CliError = LgtiError::WeakRouteMismatch(1e-9).into();
        assert_eq!(weak.exit_code(), 2);
        assert_eq!(CliError::Io("disk full".into()).exit_code(), 3);
    }
}
