use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::is_b64url_of_len;
use crate::error::TokenError;

/// Transaction risk class. Ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RiskClass {
    Low,
    Medium,
    High,
}

impl RiskClass {
    pub const ALL: [RiskClass; 3] = [RiskClass::Low, RiskClass::Medium, RiskClass::High];

    pub fn as_str(&self) -> &'static str {
        match self {
            RiskClass::Low => "LOW",
            RiskClass::Medium => "MEDIUM",
            RiskClass::High => "HIGH",
        }
    }
}

impl fmt::Display for RiskClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LOW" => Ok(RiskClass::Low),
            "MEDIUM" => Ok(RiskClass::Medium),
            "HIGH" => Ok(RiskClass::High),
            other => Err(format!("unknown risk class {other:?}")),
        }
    }
}

/// Audience-bound, optionally sender-constrained claim set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenClaims {
    pub iss: String,
    pub sub: String,
    pub aud: String,
    pub client_id: String,
    pub scope: BTreeSet<String>,
    pub iat: i64,
    pub exp: i64,
    pub jti: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnf_thumbprint: Option<String>,
    pub tal: u8,
    pub risk_class: RiskClass,
}

impl TokenClaims {
    pub fn validate(&self) -> Result<(), TokenError> {
        if self.exp <= self.iat {
            return Err(TokenError::InvalidClaims("exp must be after iat"));
        }
        if self.scope.is_empty() || self.scope.iter().any(|s| s.is_empty()) {
            return Err(TokenError::InvalidClaims("scope must be non-empty"));
        }
        if !is_b64url_of_len(&self.jti, 16) {
            return Err(TokenError::InvalidClaims("jti must be a 128-bit base64url id"));
        }
        match &self.cnf_thumbprint {
            None if self.tal >= 1 => {
                return Err(TokenError::InvalidClaims(
                    "cnf_thumbprint required for tal >= 1",
                ))
            }
            Some(t) if !is_b64url_of_len(t, 32) => {
                return Err(TokenError::InvalidClaims("cnf_thumbprint must be a SHA-256"));
            }
            _ => {}
        }
        for (field, value) in [
            ("iss", &self.iss),
            ("sub", &self.sub),
            ("aud", &self.aud),
            ("client_id", &self.client_id),
        ] {
            if value.is_empty() {
                return Err(TokenError::InvalidClaims(match field {
                    "iss" => "iss must be non-empty",
                    "sub" => "sub must be non-empty",
                    "aud" => "aud must be non-empty",
                    _ => "client_id must be non-empty",
                }));
            }
        }
        Ok(())
    }

    pub fn is_expired(&self, now: i64) -> bool {
        now >= self.exp
    }

    /// Bearer tokens carry no key confirmation.
    pub fn is_bearer(&self) -> bool {
        self.cnf_thumbprint.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::new_jti;

    fn claims() -> TokenClaims {
        TokenClaims {
            iss: "https://as.example".into(),
            sub: "alice".into(),
            aud: "https://rs.example".into(),
            client_id: "web".into(),
            scope: ["data:read".to_string()].into(),
            iat: 100,
            exp: 200,
            jti: new_jti(),
            cnf_thumbprint: None,
            tal: 0,
            risk_class: RiskClass::Low,
        }
    }

    #[test]
    fn tal1_requires_cnf() {
        let mut c = claims();
        c.tal = 1;
        assert!(c.validate().is_err());
        c.cnf_thumbprint = Some(crate::encoding::sha256_b64url([0u8; 32]));
        c.validate().unwrap();
    }

    #[test]
    fn empty_scope_rejected() {
        let mut c = claims();
        c.scope.clear();
        assert_eq!(
            c.validate(),
            Err(TokenError::InvalidClaims("scope must be non-empty"))
        );
    }

    #[test]
    fn risk_class_orders_by_severity() {
        assert!(RiskClass::Low < RiskClass::Medium && RiskClass::Medium < RiskClass::High);
        assert_eq!(serde_json::to_string(&RiskClass::Medium).unwrap(), "\"MEDIUM\"");
        assert_eq!("high".parse::<RiskClass>().unwrap(), RiskClass::High);
    }
}
