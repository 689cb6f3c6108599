//! Key material and the verification-key registry.

use std::collections::HashMap;
use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use hmac::{Hmac, Mac};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::encoding::sha256_b64url;
use crate::error::TokenError;

type HmacSha256 = Hmac<Sha256>;

pub const ED25519_KEY_LEN: usize = 32;
pub const MIN_HMAC_KEY_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    Ed25519,
    HmacSha256,
}

impl Algorithm {
    /// Name carried in envelope headers.
    pub fn header_name(&self) -> &'static str {
        match self {
            Algorithm::Ed25519 => "EdDSA",
            Algorithm::HmacSha256 => "HS256",
        }
    }

    pub fn from_header_name(name: &str) -> Result<Self, TokenError> {
        match name {
            "EdDSA" => Ok(Algorithm::Ed25519),
            "HS256" => Ok(Algorithm::HmacSha256),
            other => Err(TokenError::UnsupportedAlgorithm(other.to_string())),
        }
    }
}

/// A signing key. For HMAC the "public" half is the shared secret itself.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub key_id: String,
    pub algorithm: Algorithm,
    pub public_key: Vec<u8>,
    pub private_key: Vec<u8>,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("key_id", &self.key_id)
            .field("algorithm", &self.algorithm)
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn generate_ed25519(key_id: impl Into<String>) -> Self {
        let signing = SigningKey::generate(&mut OsRng);
        Self {
            key_id: key_id.into(),
            algorithm: Algorithm::Ed25519,
            public_key: signing.verifying_key().to_bytes().to_vec(),
            private_key: signing.to_bytes().to_vec(),
        }
    }

    /// Rebuilds an Ed25519 pair from its 32-byte seed.
    pub fn ed25519_from_seed(key_id: impl Into<String>, seed: &[u8]) -> Result<Self, TokenError> {
        let seed: [u8; 32] = seed
            .try_into()
            .map_err(|_| TokenError::MalformedKey("ed25519 seed must be 32 bytes"))?;
        let signing = SigningKey::from_bytes(&seed);
        Ok(Self {
            key_id: key_id.into(),
            algorithm: Algorithm::Ed25519,
            public_key: signing.verifying_key().to_bytes().to_vec(),
            private_key: seed.to_vec(),
        })
    }

    pub fn hmac(key_id: impl Into<String>, secret: Vec<u8>) -> Result<Self, TokenError> {
        if secret.len() < MIN_HMAC_KEY_LEN {
            return Err(TokenError::MalformedKey("hmac key must be at least 32 bytes"));
        }
        Ok(Self {
            key_id: key_id.into(),
            algorithm: Algorithm::HmacSha256,
            public_key: secret.clone(),
            private_key: secret,
        })
    }

    pub fn generate_hmac(key_id: impl Into<String>) -> Self {
        let mut secret = vec![0u8; MIN_HMAC_KEY_LEN];
        OsRng.fill_bytes(&mut secret);
        Self::hmac(key_id, secret).expect("generated secret has valid length")
    }

    pub fn verification_key(&self) -> VerificationKey {
        VerificationKey {
            algorithm: self.algorithm,
            key: self.public_key.clone(),
        }
    }

    pub fn thumbprint(&self) -> Result<String, TokenError> {
        match self.algorithm {
            Algorithm::Ed25519 => derive_thumbprint(&self.public_key),
            Algorithm::HmacSha256 => Err(TokenError::UnsupportedAlgorithm(
                "hmac keys have no public thumbprint".into(),
            )),
        }
    }

    pub fn sign(&self, message: &[u8]) -> Result<Vec<u8>, TokenError> {
        match self.algorithm {
            Algorithm::Ed25519 => {
                let seed: [u8; 32] = self
                    .private_key
                    .as_slice()
                    .try_into()
                    .map_err(|_| TokenError::MalformedKey("ed25519 private key must be 32 bytes"))?;
                Ok(SigningKey::from_bytes(&seed).sign(message).to_bytes().to_vec())
            }
            Algorithm::HmacSha256 => {
                if self.private_key.len() < MIN_HMAC_KEY_LEN {
                    return Err(TokenError::MalformedKey("hmac key must be at least 32 bytes"));
                }
                let mut mac = HmacSha256::new_from_slice(&self.private_key)
                    .map_err(|_| TokenError::MalformedKey("hmac key"))?;
                mac.update(message);
                Ok(mac.finalize().into_bytes().to_vec())
            }
        }
    }
}

/// Public half of a key, as held by verifiers.
#[derive(Clone, PartialEq, Eq)]
pub struct VerificationKey {
    pub algorithm: Algorithm,
    pub key: Vec<u8>,
}

impl fmt::Debug for VerificationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VerificationKey")
            .field("algorithm", &self.algorithm)
            .finish_non_exhaustive()
    }
}

impl VerificationKey {
    pub fn ed25519(public_key: &[u8]) -> Result<Self, TokenError> {
        if public_key.len() != ED25519_KEY_LEN {
            return Err(TokenError::MalformedKey("ed25519 public key must be 32 bytes"));
        }
        Ok(Self {
            algorithm: Algorithm::Ed25519,
            key: public_key.to_vec(),
        })
    }

    pub fn verify(&self, message: &[u8], signature: &[u8]) -> Result<(), TokenError> {
        match self.algorithm {
            Algorithm::Ed25519 => {
                let public: [u8; 32] = self
                    .key
                    .as_slice()
                    .try_into()
                    .map_err(|_| TokenError::MalformedKey("ed25519 public key must be 32 bytes"))?;
                let vk = VerifyingKey::from_bytes(&public)
                    .map_err(|_| TokenError::MalformedKey("ed25519 public key"))?;
                let sig = ed25519_dalek::Signature::from_slice(signature)
                    .map_err(|_| TokenError::SignatureMismatch)?;
                vk.verify(message, &sig)
                    .map_err(|_| TokenError::SignatureMismatch)
            }
            Algorithm::HmacSha256 => {
                let mut mac = HmacSha256::new_from_slice(&self.key)
                    .map_err(|_| TokenError::MalformedKey("hmac key"))?;
                mac.update(message);
                mac.verify_slice(signature)
                    .map_err(|_| TokenError::SignatureMismatch)
            }
        }
    }
}

/// Verification keys by `kid`.
#[derive(Debug, Clone, Default)]
pub struct KeyRegistry {
    keys: HashMap<String, VerificationKey>,
}

impl KeyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_key(mut self, key: &KeyPair) -> Self {
        self.insert(key);
        self
    }

    /// Registers the public half of `key`. Returns false if the kid was taken.
    pub fn insert(&mut self, key: &KeyPair) -> bool {
        self.insert_verification(key.key_id.clone(), key.verification_key())
    }

    pub fn insert_verification(&mut self, kid: String, key: VerificationKey) -> bool {
        if self.keys.contains_key(&kid) {
            return false;
        }
        self.keys.insert(kid, key);
        true
    }

    pub fn get(&self, kid: &str) -> Option<&VerificationKey> {
        self.keys.get(kid)
    }
}

/// base64url(SHA-256(raw public key)), no padding.
pub fn derive_thumbprint(public_key: &[u8]) -> Result<String, TokenError> {
    if public_key.len() != ED25519_KEY_LEN {
        return Err(TokenError::MalformedKey("public key must be 32 bytes"));
    }
    Ok(sha256_b64url(public_key))
}
