use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::context::{LastSeen, TransactionContext};
use crate::error::EngineError;
use crate::features::{extract_features_with, FeatureConfig, FeatureVector};
use crate::knn::{KnnModel, DEFAULT_CAPACITY, DEFAULT_K};
use crate::score::{classify_with, rule_score_with, GlobalPosture, RiskWeights, Thresholds};
use radaa_token::RiskClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierMode {
    /// Weighted rule plus thresholds.
    #[default]
    Rule,
    /// KNN over labelled history; falls back to the rule while the model is empty.
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ScoreSource {
    Rule,
    Knn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub score: f64,
    pub class: RiskClass,
    pub features: FeatureVector,
    pub source: ScoreSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub weights: RiskWeights,
    pub thresholds: Thresholds,
    pub mode: ClassifierMode,
    pub k: usize,
    pub capacity: usize,
    pub features: FeatureConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            weights: RiskWeights::default(),
            thresholds: Thresholds::default(),
            mode: ClassifierMode::Rule,
            k: DEFAULT_K,
            capacity: DEFAULT_CAPACITY,
            features: FeatureConfig::default(),
        }
    }
}

/// Shared engine instance. `assess` takes a read lock on the model and
/// `observe` a write lock, so a classification never sees a half-appended sample.
#[derive(Debug)]
pub struct RiskEngine {
    config: EngineConfig,
    posture: RwLock<GlobalPosture>,
    model: RwLock<KnnModel>,
}

impl RiskEngine {
    pub fn new(config: EngineConfig) -> Result<Self, EngineError> {
        let model = KnnModel::new(config.k, config.capacity)?;
        Ok(Self {
            config,
            posture: RwLock::new(GlobalPosture::Normal),
            model: RwLock::new(model),
        })
    }

    pub fn with_model(config: EngineConfig, model: KnnModel) -> Self {
        Self {
            config,
            posture: RwLock::new(GlobalPosture::Normal),
            model: RwLock::new(model),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn posture(&self) -> GlobalPosture {
        *self.posture.read()
    }

    pub fn set_posture(&self, posture: GlobalPosture) {
        *self.posture.write() = posture;
    }

    pub fn assess(
        &self,
        ctx: &TransactionContext,
        last_seen: Option<&LastSeen>,
    ) -> Result<RiskAssessment, EngineError> {
        let features = extract_features_with(ctx, last_seen, &self.config.features)?;
        self.assess_features(features)
    }

    pub fn assess_features(&self, features: FeatureVector) -> Result<RiskAssessment, EngineError> {
        let score = rule_score_with(&features, self.posture(), &self.config.weights);
        if self.config.mode == ClassifierMode::Knn {
            let model = self.model.read();
            if !model.is_empty() {
                return Ok(RiskAssessment {
                    score,
                    class: model.classify(&features)?,
                    features,
                    source: ScoreSource::Knn,
                });
            }
        }
        Ok(RiskAssessment {
            score,
            class: classify_with(score, &self.config.thresholds)?,
            features,
            source: ScoreSource::Rule,
        })
    }

    pub fn observe(&self, features: FeatureVector, label: RiskClass) {
        self.model.write().observe(features, label);
    }

    pub fn model_snapshot(&self) -> Vec<(FeatureVector, RiskClass)> {
        self.model.read().snapshot()
    }

    pub fn model_len(&self) -> usize {
        self.model.read().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;

    fn ctx() -> TransactionContext {
        TransactionContext {
            subject: "alice".into(),
            client_id: "web".into(),
            ip: "198.51.100.1".into(),
            ip_reputation: 0.0,
            geo: GeoPoint { lat: 51.5, lon: -0.12 },
            timestamp: 10,
            device_id: "d".into(),
            device_known: true,
            nids_malicious: false,
            tal: 0,
        }
    }

    #[test]
    fn rule_mode_and_posture() {
        let e = RiskEngine::new(EngineConfig::default()).unwrap();
        let a = e.assess(&ctx(), None).unwrap();
        assert_eq!((a.class, a.source), (RiskClass::Low, ScoreSource::Rule));
        assert!((a.score - 0.15).abs() < 1e-12);
        e.set_posture(GlobalPosture::Critical);
        assert_eq!(e.assess(&ctx(), None).unwrap().class, RiskClass::Medium);
    }

    #[test]
    fn knn_mode_falls_back_until_trained() {
        let cfg = EngineConfig {
            mode: ClassifierMode::Knn,
            k: 1,
            ..Default::default()
        };
        let e = RiskEngine::new(cfg).unwrap();
        let a = e.assess(&ctx(), None).unwrap();
        assert_eq!(a.source, ScoreSource::Rule);
        e.observe(a.features, RiskClass::High);
        let b = e.assess(&ctx(), None).unwrap();
        assert_eq!((b.class, b.source), (RiskClass::High, ScoreSource::Knn));
        assert_eq!(b.score, a.score);
    }

    #[test]
    fn invalid_context_rejected() {
        let e = RiskEngine::new(EngineConfig::default()).unwrap();
        let mut c = ctx();
        c.ip_reputation = 1.5;
        assert!(e.assess(&c, None).is_err());
    }
}
