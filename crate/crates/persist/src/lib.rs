//! Deployment plumbing: JSON configuration, file-backed stores with per-key
//! versioned check-and-set, the JSONL audit trail and key files.

pub mod audit;
pub mod config;
pub mod keyfile;
pub mod store;

pub use audit::{AuditError, AuditLog, AuditRecord, RiskSummary};
pub use config::{
    is_valid_redirect_uri, ClientConfig, Config, ConfigError, IdpConfig, IdpUser, KnnSettings, Lifetimes, ListenConfig,
    RateLimits, ResourceConfig, ResourceServerConfig, RiskSettings, ThresholdSettings,
    WeightSettings,
};
pub use keyfile::{KeyFile, KeyFileError};
pub use store::{Namespace, Store, StoreError, Update, Versioned};
