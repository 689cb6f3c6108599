//! Values kept in the store, one type per namespace.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use radaa_engine::LastSeen;
use radaa_token::encoding::b64url_decode;
use radaa_token::{derive_thumbprint, PkceChallenge, RiskClass};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientRecord {
    pub client_id: String,
    pub display_name: String,
    pub redirect_uris: BTreeSet<String>,
    pub scopes: BTreeSet<String>,
    /// Ed25519 public key, base64url. Present exactly when `tal == 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub public_key: Option<String>,
    pub tal: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sealing_key: Option<String>,
}

impl ClientRecord {
    pub fn thumbprint(&self) -> Option<String> {
        let key = b64url_decode(self.public_key.as_deref()?)?;
        derive_thumbprint(&key).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParRecord {
    pub request_uri: String,
    pub client_id: String,
    pub pkce: PkceChallenge,
    pub redirect_uri: String,
    pub scopes: BTreeSet<String>,
    pub audience: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    pub created: i64,
    pub expires_in: i64,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeRecord {
    pub code: String,
    pub par_ref: String,
    pub client_id: String,
    pub subject: String,
    /// Consented scopes.
    pub scopes: BTreeSet<String>,
    pub pkce: PkceChallenge,
    pub audience: String,
    pub issued: i64,
    pub ttl: i64,
    pub redeemed: bool,
    pub step_up_satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeState {
    Pending,
    Satisfied,
    /// A wrong answer was given.
    Voided,
    /// Satisfied and spent on an authorization or issuance.
    Used,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepUpChallenge {
    pub challenge_id: String,
    pub subject: String,
    pub expected_answer: String,
    pub expires: i64,
    pub state: ChallengeState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefreshState {
    Active,
    Rotated,
    Revoked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefreshRecord {
    pub grant_id: String,
    pub client_id: String,
    pub subject: String,
    pub scopes: BTreeSet<String>,
    pub audience: String,
    pub cnf_thumbprint: Option<String>,
    pub exp: i64,
    pub state: RefreshState,
    #[serde(default)]
    pub rotated_at: Option<i64>,
}

/// Issued access token, kept so revocation can find it by grant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub grant_id: String,
    pub client_id: String,
    pub exp: i64,
    pub risk_class: RiskClass,
}

/// Everything issued from one authorization code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantRecord {
    pub client_id: String,
    pub subject: String,
    pub revoked: bool,
    pub access_jtis: Vec<String>,
    pub refresh_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationRecord {
    pub revoked_at: i64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub last_seen: Option<LastSeen>,
    pub devices: BTreeSet<String>,
}

/// Fixed one-minute window counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateWindow {
    pub window: i64,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Escalation {
    pub until: i64,
}

pub(crate) fn refresh_key(id: &str) -> String {
    format!("rt:{id}")
}

pub(crate) fn access_key(jti: &str) -> String {
    format!("at:{jti}")
}

pub(crate) fn rate_key(client_id: &str) -> String {
    format!("par:{client_id}")
}

pub(crate) fn escalation_key(client_id: &str) -> String {
    format!("escalated:{client_id}")
}
