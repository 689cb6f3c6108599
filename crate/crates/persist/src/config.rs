//! Deployment configuration (JSON). Every tunable has a default, so a file
//! holding only `issuer_id` is a valid configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use radaa_engine::{
    ClassifierMode, EngineConfig, FeatureConfig, GlobalPosture, RiskWeights, Thresholds,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub issuer_id: String,
    #[serde(default)]
    pub listen: ListenConfig,
    #[serde(default)]
    pub lifetimes: Lifetimes,
    #[serde(default)]
    pub risk: RiskSettings,
    #[serde(default)]
    pub knn: KnnSettings,
    /// Static reputation table: address -> [0, 1], 1 = worst. Unlisted addresses score 0.
    #[serde(default)]
    pub ip_reputation: BTreeMap<String, f64>,
    #[serde(default)]
    pub identity_providers: Vec<IdpConfig>,
    #[serde(default)]
    pub clients: Vec<ClientConfig>,
    #[serde(default)]
    pub resource_servers: Vec<ResourceServerConfig>,
    #[serde(default)]
    pub rate_limits: RateLimits,
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    #[serde(default)]
    pub audit_log: Option<PathBuf>,
    /// Key file for the token signing key; generated at startup when absent.
    #[serde(default)]
    pub signing_key: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ListenConfig {
    pub auth_server: String,
    pub resource_server: String,
}

impl Default for ListenConfig {
    fn default() -> Self {
        Self {
            auth_server: "127.0.0.1:8080".into(),
            resource_server: "127.0.0.1:8081".into(),
        }
    }
}

/// Seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lifetimes {
    pub tal0_access: i64,
    pub tal1_access: i64,
    pub refresh: i64,
    pub par: i64,
    pub code: i64,
    pub step_up: i64,
}

impl Default for Lifetimes {
    fn default() -> Self {
        Self {
            tal0_access: 300,
            tal1_access: 900,
            refresh: 28_800,
            par: 60,
            code: 60,
            step_up: 300,
        }
    }
}

impl Lifetimes {
    pub fn access_for(&self, tal: u8) -> i64 {
        if tal >= 1 {
            self.tal1_access
        } else {
            self.tal0_access
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSettings {
    pub medium: f64,
    pub high: f64,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        let t = Thresholds::default();
        Self {
            medium: t.medium,
            high: t.high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSettings {
    pub ip_reputation: f64,
    pub impossible_travel: f64,
    pub unknown_device: f64,
    pub nids_malicious: f64,
    pub trust_deficit: f64,
}

impl Default for WeightSettings {
    fn default() -> Self {
        let [ip_reputation, impossible_travel, unknown_device, nids_malicious, trust_deficit] =
            *RiskWeights::default().values();
        Self {
            ip_reputation,
            impossible_travel,
            unknown_device,
            nids_malicious,
            trust_deficit,
        }
    }
}

impl WeightSettings {
    fn as_array(&self) -> [f64; 5] {
        [
            self.ip_reputation,
            self.impossible_travel,
            self.unknown_device,
            self.nids_malicious,
            self.trust_deficit,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskSettings {
    pub thresholds: ThresholdSettings,
    pub weights: WeightSettings,
    pub posture: GlobalPosture,
    pub mode: ClassifierMode,
    pub max_speed_kmh: f64,
    pub tal_max: u8,
}

impl Default for RiskSettings {
    fn default() -> Self {
        let f = FeatureConfig::default();
        Self {
            thresholds: ThresholdSettings::default(),
            weights: WeightSettings::default(),
            posture: GlobalPosture::Normal,
            mode: ClassifierMode::Rule,
            max_speed_kmh: f.max_speed_kmh,
            tal_max: f.tal_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnSettings {
    pub k: usize,
    pub capacity: usize,
}

impl Default for KnnSettings {
    fn default() -> Self {
        Self {
            k: 5,
            capacity: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateLimits {
    pub par_per_minute: u32,
}

impl Default for RateLimits {
    fn default() -> Self {
        Self { par_per_minute: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdpUser {
    pub username: String,
    pub secret: String,
    /// Local subject this external identity is linked to.
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdpConfig {
    pub idp_id: String,
    #[serde(default)]
    pub users: Vec<IdpUser>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    pub client_id: String,
    #[serde(default)]
    pub display_name: String,
    pub redirect_uris: BTreeSet<String>,
    pub scopes: BTreeSet<String>,
    /// Ed25519 public key (base64url). Operator-provisioned keys grant TAL 1.
    #[serde(default)]
    pub public_key_b64: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    pub path: String,
    pub required_scope: String,
    #[serde(default)]
    pub elevated: bool,
    #[serde(default)]
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceServerConfig {
    /// Audience identifier; also the public base URL proofs are bound to.
    pub id: String,
    pub scopes: BTreeSet<String>,
    /// 32-byte AES key (base64url) for sealed cross-ecosystem tokens.
    #[serde(default)]
    pub sealing_key_b64: Option<String>,
    /// Ed25519 public key (base64url) the server authenticates to /introspect with.
    #[serde(default)]
    pub public_key_b64: Option<String>,
    #[serde(default)]
    pub resources: Vec<ResourceConfig>,
}

/// http(s), has a host, no fragment.
pub fn is_valid_redirect_uri(uri: &str) -> bool {
    match url::Url::parse(uri) {
        Ok(u) => matches!(u.scheme(), "https" | "http") && u.has_host() && u.fragment().is_none() && !uri.contains('#'),
        Err(_) => false,
    }
}

impl Config {
    pub fn minimal(issuer_id: impl Into<String>) -> Self {
        Self {
            issuer_id: issuer_id.into(),
            listen: ListenConfig::default(),
            lifetimes: Lifetimes::default(),
            risk: RiskSettings::default(),
            knn: KnnSettings::default(),
            ip_reputation: BTreeMap::new(),
            identity_providers: Vec::new(),
            clients: Vec::new(),
            resource_servers: Vec::new(),
            rate_limits: RateLimits::default(),
            data_dir: None,
            audit_log: None,
            signing_key: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_json(&text)?;
        // relative paths in the file are relative to the file
        if let Some(base) = path.parent() {
            for p in [&mut config.data_dir, &mut config.audit_log, &mut config.signing_key]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Config = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.issuer_id.trim().is_empty() {
            return Err(ConfigError::invalid("issuer_id", "must be non-empty"));
        }
        Thresholds::new(self.risk.thresholds.medium, self.risk.thresholds.high)
            .map_err(|e| ConfigError::invalid("risk.thresholds", e.to_string()))?;
        RiskWeights::new(self.risk.weights.as_array())
            .map_err(|e| ConfigError::invalid("risk.weights", e.to_string()))?;
        if !(self.risk.max_speed_kmh > 0.0) {
            return Err(ConfigError::invalid("risk.max_speed_kmh", "must be positive"));
        }
        if self.risk.tal_max == 0 {
            return Err(ConfigError::invalid("risk.tal_max", "must be at least 1"));
        }
        if self.knn.k == 0 || self.knn.k % 2 == 0 {
            return Err(ConfigError::invalid("knn.k", "must be an odd positive integer"));
        }
        if self.knn.capacity == 0 {
            return Err(ConfigError::invalid("knn.capacity", "must be positive"));
        }
        let l = &self.lifetimes;
        for (name, v) in [
            ("lifetimes.tal0_access", l.tal0_access),
            ("lifetimes.tal1_access", l.tal1_access),
            ("lifetimes.refresh", l.refresh),
            ("lifetimes.par", l.par),
            ("lifetimes.code", l.code),
            ("lifetimes.step_up", l.step_up),
        ] {
            if v <= 0 {
                return Err(ConfigError::invalid(name, "must be positive"));
            }
        }
        if self.rate_limits.par_per_minute == 0 {
            return Err(ConfigError::invalid("rate_limits.par_per_minute", "must be positive"));
        }
        for (ip, r) in &self.ip_reputation {
            if !(0.0..=1.0).contains(r) {
                return Err(ConfigError::invalid(format!("ip_reputation.{ip}"), "must be in [0, 1]"));
            }
        }
        let mut idps = BTreeSet::new();
        for idp in &self.identity_providers {
            if !idps.insert(&idp.idp_id) {
                return Err(ConfigError::invalid("identity_providers", format!("duplicate idp {}", idp.idp_id)));
            }
            let mut subjects = BTreeSet::new();
            let mut names = BTreeSet::new();
            for u in &idp.users {
                if !names.insert(&u.username) {
                    return Err(ConfigError::invalid(
                        format!("identity_providers.{}.users", idp.idp_id),
                        format!("duplicate username {}", u.username),
                    ));
                }
                if !subjects.insert(&u.subject) {
                    return Err(ConfigError::invalid(
                        format!("identity_providers.{}.users", idp.idp_id),
                        format!("subject {} linked twice", u.subject),
                    ));
                }
            }
        }
        let mut ids = BTreeSet::new();
        for c in &self.clients {
            let field = format!("clients.{}", c.client_id);
            if !ids.insert(&c.client_id) {
                return Err(ConfigError::invalid(field, "duplicate client_id"));
            }
            if c.redirect_uris.is_empty() {
                return Err(ConfigError::invalid(field + ".redirect_uris", "at least one required"));
            }
            if let Some(bad) = c.redirect_uris.iter().find(|u| !is_valid_redirect_uri(u)) {
                return Err(ConfigError::invalid(field + ".redirect_uris", format!("{bad} is not an absolute http(s) uri without fragment")));
            }
            if c.scopes.is_empty() {
                return Err(ConfigError::invalid(field + ".scopes", "must be non-empty"));
            }
        }
        let mut rs_ids = BTreeSet::new();
        for rs in &self.resource_servers {
            let field = format!("resource_servers.{}", rs.id);
            if !rs_ids.insert(&rs.id) {
                return Err(ConfigError::invalid(field, "duplicate id"));
            }
            if rs.scopes.is_empty() {
                return Err(ConfigError::invalid(field + ".scopes", "must be non-empty"));
            }
            for r in &rs.resources {
                if r.required_scope.is_empty() {
                    return Err(ConfigError::invalid(field + ".resources", format!("{} has empty required_scope", r.path)));
                }
                if r.elevated != radaa_engine::is_elevated(&r.required_scope) {
                    return Err(ConfigError::invalid(
                        field + ".resources",
                        format!("{}: elevated resources need a scope ending in :elevated, and only they may use one", r.path),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            weights: RiskWeights::new(self.risk.weights.as_array()).expect("validated"),
            thresholds: Thresholds::new(self.risk.thresholds.medium, self.risk.thresholds.high)
                .expect("validated"),
            mode: self.risk.mode,
            k: self.knn.k,
            capacity: self.knn.capacity,
            features: FeatureConfig {
                tal_max: self.risk.tal_max,
                max_speed_kmh: self.risk.max_speed_kmh,
            },
        }
    }
}
