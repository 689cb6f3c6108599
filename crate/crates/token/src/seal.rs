//! AES-256-GCM wrapper around an already signed envelope (sign-then-seal).

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce};
use rand::rngs::OsRng;
use rand::RngCore;

use crate::encoding::{b64url, b64url_decode};
use crate::envelope::SignedToken;
use crate::error::SealError;

const NONCE_LEN: usize = 12;
const TAG_LEN: usize = 16;

/// `nonce (12 bytes) || ciphertext || tag`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedEnvelope(Vec<u8>);

impl SealedEnvelope {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    /// Single base64url segment (no dots), distinguishable from a signed envelope.
    pub fn to_wire(&self) -> String {
        b64url(&self.0)
    }

    pub fn from_wire(wire: &str) -> Result<Self, SealError> {
        b64url_decode(wire).map(Self).ok_or(SealError::Truncated)
    }
}

pub fn seal_envelope(token: &SignedToken, audience_secret: &[u8]) -> Result<SealedEnvelope, SealError> {
    let cipher = Aes256Gcm::new_from_slice(audience_secret).map_err(|_| SealError::BadKey)?;
    let mut nonce = [0u8; NONCE_LEN];
    OsRng.fill_bytes(&mut nonce);
    let ct = cipher
        .encrypt(Nonce::from_slice(&nonce), token.as_str().as_bytes())
        .map_err(|_| SealError::BadKey)?;
    let mut out = Vec::with_capacity(NONCE_LEN + ct.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&ct);
    Ok(SealedEnvelope(out))
}

pub fn unseal_envelope(sealed: &SealedEnvelope, audience_secret: &[u8]) -> Result<SignedToken, SealError> {
    let cipher = Aes256Gcm::new_from_slice(audience_secret).map_err(|_| SealError::BadKey)?;
    if sealed.0.len() < NONCE_LEN + TAG_LEN {
        return Err(SealError::Truncated);
    }
    let (nonce, ct) = sealed.0.split_at(NONCE_LEN);
    let plain = cipher
        .decrypt(Nonce::from_slice(nonce), ct)
        .map_err(|_| SealError::TagMismatch)?;
    let wire = String::from_utf8(plain).map_err(|_| SealError::NotAnEnvelope)?;
    Ok(SignedToken::from_wire(wire))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_wrong_key() {
        let t = SignedToken::from_wire("aGVhZGVy.Y2xhaW1z.c2ln");
        let k = [9u8; 32];
        let sealed = seal_envelope(&t, &k).unwrap();
        assert_eq!(unseal_envelope(&sealed, &k).unwrap(), t);
        assert_eq!(unseal_envelope(&sealed, &[8u8; 32]), Err(SealError::TagMismatch));
        assert!(!sealed.to_wire().contains('.'));
    }

    #[test]
    fn truncated_and_bad_key() {
        let k = [1u8; 32];
        let short = SealedEnvelope::from_bytes(vec![0; 27]);
        assert_eq!(unseal_envelope(&short, &k), Err(SealError::Truncated));
        let t = SignedToken::from_wire("a.b.c");
        assert_eq!(seal_envelope(&t, &[0u8; 16]), Err(SealError::BadKey));
    }
}
