//! `gen-keys` output: `{key_id, algorithm, public_key_b64, private_key_b64}`.

use std::path::Path;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use radaa_token::{Algorithm, KeyPair, TokenError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub key_id: String,
    pub algorithm: Algorithm,
    pub public_key_b64: String,
    pub private_key_b64: String,
}

#[derive(Debug, Error)]
pub enum KeyFileError {
    #[error("key file io: {0}")]
    Io(#[from] std::io::Error),
    #[error("key file json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("key file field {0} is not base64url")]
    Encoding(&'static str),
    #[error("key file holds an invalid key: {0}")]
    Key(#[from] TokenError),
}

impl KeyFile {
    pub fn from_key(key: &KeyPair) -> Self {
        Self {
            key_id: key.key_id.clone(),
            algorithm: key.algorithm,
            public_key_b64: URL_SAFE_NO_PAD.encode(&key.public_key),
            private_key_b64: URL_SAFE_NO_PAD.encode(&key.private_key),
        }
    }

    pub fn to_key(&self) -> Result<KeyPair, KeyFileError> {
        let private = URL_SAFE_NO_PAD
            .decode(&self.private_key_b64)
            .map_err(|_| KeyFileError::Encoding("private_key_b64"))?;
        let public = URL_SAFE_NO_PAD
            .decode(&self.public_key_b64)
            .map_err(|_| KeyFileError::Encoding("public_key_b64"))?;
        let key = match self.algorithm {
            Algorithm::Ed25519 => KeyPair::ed25519_from_seed(self.key_id.clone(), &private)?,
            Algorithm::HmacSha256 => KeyPair::hmac(self.key_id.clone(), private)?,
        };
        if key.public_key != public {
            return Err(KeyFileError::Key(TokenError::MalformedKey(
                "public key does not match private key",
            )));
        }
        Ok(key)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), KeyFileError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, KeyFileError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
