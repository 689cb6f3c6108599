use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    CoordinateOutOfRange { lat: f64, lon: f64 },
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("feature {name} = {value} outside [0, 1]")]
    FeatureOutOfRange { name: &'static str, value: f64 },
    #[error("knn model has no samples")]
    EmptyModel,
    #[error("invalid knn parameter: {0}")]
    InvalidKnn(&'static str),
    #[error("invalid transaction context: {0}")]
    InvalidContext(&'static str),
    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(&'static str),
}
