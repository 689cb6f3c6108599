//! Adaptive risk engine.
//!
//! Per-transaction evidence ([`TransactionContext`]) is reduced to a fixed
//! five-feature vector, scored by a weighted rule (plus a global posture
//! offset) and classified LOW / MEDIUM / HIGH, either by thresholds or by an
//! incrementally trained k-nearest-neighbour model. [`decide`] maps the class
//! and protocol stage to the action the servers take.

pub mod context;
pub mod decision;
pub mod engine;
pub mod error;
pub mod features;
pub mod geo;
pub mod knn;
pub mod score;

pub use context::{LastSeen, TransactionContext};
pub use decision::{decide, is_elevated, Action, Decision, Stage, ELEVATED_SUFFIX};
pub use engine::{ClassifierMode, EngineConfig, RiskAssessment, RiskEngine, ScoreSource};
pub use error::EngineError;
pub use features::{extract_features, extract_features_with, FeatureConfig, FeatureVector, FEATURE_NAMES};
pub use geo::{haversine_km, GeoPoint, EARTH_RADIUS_KM};
pub use knn::KnnModel;
pub use radaa_token::RiskClass;
pub use score::{classify, classify_with, rule_score, rule_score_with, GlobalPosture, RiskWeights, Thresholds};
