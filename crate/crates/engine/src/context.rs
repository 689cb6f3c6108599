use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::geo::GeoPoint;

/// Everything the engine knows about one transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionContext {
    pub subject: String,
    pub client_id: String,
    pub ip: String,
    /// 0 = clean, 1 = worst.
    pub ip_reputation: f64,
    pub geo: GeoPoint,
    pub timestamp: i64,
    pub device_id: String,
    pub device_known: bool,
    pub nids_malicious: bool,
    pub tal: u8,
}

impl TransactionContext {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.geo.validate()?;
        if !(0.0..=1.0).contains(&self.ip_reputation) {
            return Err(EngineError::InvalidContext("ip_reputation must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Where and when a subject was last observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LastSeen {
    pub geo: GeoPoint,
    pub timestamp: i64,
}
