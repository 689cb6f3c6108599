//! Proof Key for Code Exchange, S256 only.

use serde::{Deserialize, Serialize};

use crate::encoding::{is_b64url_of_len, sha256_b64url};
use crate::error::PkceError;

pub const S256: &str = "S256";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PkceChallenge {
    pub method: String,
    pub challenge: String,
}

impl PkceChallenge {
    /// Accepts a challenge pushed by a client.
    pub fn parse(method: &str, challenge: &str) -> Result<Self, PkceError> {
        if method != S256 {
            return Err(PkceError::UnsupportedMethod);
        }
        if !is_b64url_of_len(challenge, 32) {
            return Err(PkceError::MalformedChallenge);
        }
        Ok(Self {
            method: S256.to_string(),
            challenge: challenge.to_string(),
        })
    }
}

fn verifier_is_valid(verifier: &str) -> bool {
    (43..=128).contains(&verifier.len())
        && verifier
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~'))
}

pub fn make_pkce_challenge(verifier: &str) -> Result<PkceChallenge, PkceError> {
    if !verifier_is_valid(verifier) {
        return Err(PkceError::InvalidVerifier);
    }
    Ok(PkceChallenge {
        method: S256.to_string(),
        challenge: sha256_b64url(verifier.as_bytes()),
    })
}

/// True iff `challenge` is the S256 transform of `verifier`.
pub fn verify_pkce(verifier: &str, challenge: &PkceChallenge) -> Result<bool, PkceError> {
    if challenge.method != S256 {
        return Err(PkceError::UnsupportedMethod);
    }
    let recomputed = make_pkce_challenge(verifier)?;
    Ok(recomputed.challenge == challenge.challenge)
}

/// Fresh random verifier (43 chars).
pub fn new_verifier() -> String {
    crate::encoding::random_id(32)
}
