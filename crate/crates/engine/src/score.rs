use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::features::FeatureVector;
use radaa_token::RiskClass;

/// Per-feature weights, in feature order. Non-negative, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct RiskWeights([f64; 5]);

impl RiskWeights {
    pub fn new(w: [f64; 5]) -> Result<Self, EngineError> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(EngineError::InvalidWeights("weights must be non-negative"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(EngineError::InvalidWeights("weights must sum to 1.0"));
        }
        Ok(Self(w))
    }

    pub fn values(&self) -> &[f64; 5] {
        &self.0
    }
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self([0.25, 0.25, 0.15, 0.20, 0.15])
    }
}

impl TryFrom<[f64; 5]> for RiskWeights {
    type Error = EngineError;

    fn try_from(w: [f64; 5]) -> Result<Self, Self::Error> {
        Self::new(w)
    }
}

impl From<RiskWeights> for [f64; 5] {
    fn from(w: RiskWeights) -> Self {
        w.0
    }
}

/// Class boundaries; a score equal to a boundary falls in the riskier class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub medium: f64,
    pub high: f64,
}

impl Thresholds {
    pub fn new(medium: f64, high: f64) -> Result<Self, EngineError> {
        if !(0.0 < medium && medium < high && high < 1.0) {
            return Err(EngineError::InvalidThresholds("require 0 < medium < high < 1"));
        }
        Ok(Self { medium, high })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            medium: 0.35,
            high: 0.70,
        }
    }
}

/// Deployment-wide risk elevation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GlobalPosture {
    #[default]
    Normal,
    Elevated,
    Critical,
}

impl GlobalPosture {
    pub fn offset(&self) -> f64 {
        match self {
            GlobalPosture::Normal => 0.0,
            GlobalPosture::Elevated => 0.2,
            GlobalPosture::Critical => 0.4,
        }
    }
}

pub fn rule_score(f: &FeatureVector, posture: GlobalPosture) -> f64 {
    rule_score_with(f, posture, &RiskWeights::default())
}

pub fn rule_score_with(f: &FeatureVector, posture: GlobalPosture, weights: &RiskWeights) -> f64 {
    let raw: f64 = f
        .values()
        .iter()
        .zip(weights.values())
        .map(|(x, w)| x * w)
        .sum::<f64>()
        + posture.offset();
    raw.clamp(0.0, 1.0)
}

pub fn classify(score: f64) -> Result<RiskClass, EngineError> {
    classify_with(score, &Thresholds::default())
}

pub fn classify_with(score: f64, t: &Thresholds) -> Result<RiskClass, EngineError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(EngineError::ScoreOutOfRange(score));
    }
    Ok(if score >= t.high {
        RiskClass::High
    } else if score >= t.medium {
        RiskClass::Medium
    } else {
        RiskClass::Low
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: [f64; 5]) -> FeatureVector {
        FeatureVector::new(v).unwrap()
    }

    #[test]
    fn zero_and_one_vectors() {
        assert_eq!(rule_score(&fv([0.0; 5]), GlobalPosture::Normal), 0.0);
        assert!((rule_score(&fv([1.0; 5]), GlobalPosture::Normal) - 1.0).abs() < 1e-12);
        assert_eq!(rule_score(&fv([1.0; 5]), GlobalPosture::Critical), 1.0);
    }

    #[test]
    fn hand_computed_score() {
        // 0.25 * 0.8 + 0.25 * 1 = 0.45
        let s = rule_score(&fv([0.8, 1.0, 0.0, 0.0, 0.0]), GlobalPosture::Normal);
        assert!((s - 0.45).abs() <= 1e-9, "{s}");
    }

    #[test]
    fn critical_posture_lifts_clean_tal0_to_medium() {
        let clean_tal0 = fv([0.0, 0.0, 0.0, 0.0, 1.0]);
        let base = rule_score(&clean_tal0, GlobalPosture::Normal);
        assert!((base - 0.15).abs() < 1e-12);
        assert_eq!(classify(base).unwrap(), RiskClass::Low);
        assert_eq!(classify(rule_score(&clean_tal0, GlobalPosture::Critical)).unwrap(), RiskClass::Medium);
    }

    #[test]
    fn thresholds() {
        assert_eq!(classify(0.20).unwrap(), RiskClass::Low);
        assert_eq!(classify(0.35).unwrap(), RiskClass::Medium);
        assert_eq!(classify(0.35 - 1e-12).unwrap(), RiskClass::Low);
        assert_eq!(classify(0.70).unwrap(), RiskClass::High);
        assert_eq!(classify(0.70 - 1e-12).unwrap(), RiskClass::Medium);
        assert_eq!(classify(0.90).unwrap(), RiskClass::High);
        assert!(classify(1.01).is_err());
        assert!(classify(-0.01).is_err());
        assert!(classify(f64::NAN).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(RiskWeights::new([0.2, 0.2, 0.2, 0.2, 0.1]).is_err());
        assert!(RiskWeights::new([1.2, -0.2, 0.0, 0.0, 0.0]).is_err());
        assert!(RiskWeights::new([0.2; 5]).is_ok());
        assert!(Thresholds::new(0.7, 0.35).is_err());
    }
}
