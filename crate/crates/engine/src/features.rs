use serde::{Deserialize, Serialize};

use crate::context::{LastSeen, TransactionContext};
use crate::error::EngineError;
use crate::geo::haversine_km;

pub const FEATURE_NAMES: [&str; 5] = [
    "ip_reputation",
    "impossible_travel",
    "unknown_device",
    "nids_malicious",
    "trust_deficit",
];

/// `[ip_reputation, impossible_travel, unknown_device, nids_malicious, trust_deficit]`, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct FeatureVector([f64; 5]);

impl FeatureVector {
    pub const LEN: usize = 5;

    pub fn new(values: [f64; 5]) -> Result<Self, EngineError> {
        for (name, v) in FEATURE_NAMES.iter().zip(values) {
            if !(0.0..=1.0).contains(&v) {
                return Err(EngineError::FeatureOutOfRange { name, value: v });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self([0.0; 5])
    }

    pub fn values(&self) -> &[f64; 5] {
        &self.0
    }

    pub fn ip_reputation(&self) -> f64 {
        self.0[0]
    }

    pub fn impossible_travel(&self) -> f64 {
        self.0[1]
    }

    pub fn unknown_device(&self) -> f64 {
        self.0[2]
    }

    pub fn nids_malicious(&self) -> f64 {
        self.0[3]
    }

    pub fn trust_deficit(&self) -> f64 {
        self.0[4]
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl TryFrom<[f64; 5]> for FeatureVector {
    type Error = EngineError;

    fn try_from(values: [f64; 5]) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<FeatureVector> for [f64; 5] {
    fn from(f: FeatureVector) -> Self {
        f.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Highest trust assurance level in the deployment.
    pub tal_max: u8,
    /// Travel faster than this between two observations is impossible.
    pub max_speed_kmh: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            tal_max: 1,
            max_speed_kmh: 1000.0,
        }
    }
}

pub fn extract_features(
    ctx: &TransactionContext,
    last_seen: Option<&LastSeen>,
) -> Result<FeatureVector, EngineError> {
    extract_features_with(ctx, last_seen, &FeatureConfig::default())
}

pub fn extract_features_with(
    ctx: &TransactionContext,
    last_seen: Option<&LastSeen>,
    cfg: &FeatureConfig,
) -> Result<FeatureVector, EngineError> {
    ctx.validate()?;
    let impossible_travel = match last_seen {
        None => false,
        Some(prev) => {
            let km = haversine_km(prev.geo, ctx.geo)?;
            let dt = ctx.timestamp - prev.timestamp;
            if dt <= 0 {
                km > 0.0
            } else {
                km / (dt as f64 / 3600.0) > cfg.max_speed_kmh
            }
        }
    };
    let trust_deficit = if cfg.tal_max == 0 {
        0.0
    } else {
        1.0 - f64::from(ctx.tal.min(cfg.tal_max)) / f64::from(cfg.tal_max)
    };
    FeatureVector::new([
        ctx.ip_reputation,
        flag(impossible_travel),
        flag(!ctx.device_known),
        flag(ctx.nids_malicious),
        trust_deficit,
    ])
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
