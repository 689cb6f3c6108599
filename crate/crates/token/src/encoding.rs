//! Padding-free base64url and random identifier helpers.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Digest, Sha256};

pub fn b64url(bytes: impl AsRef<[u8]>) -> String {
    URL_SAFE_NO_PAD.encode(bytes)
}

pub fn b64url_decode(text: &str) -> Option<Vec<u8>> {
    URL_SAFE_NO_PAD.decode(text).ok()
}

/// base64url(SHA-256(bytes)).
pub fn sha256_b64url(bytes: impl AsRef<[u8]>) -> String {
    b64url(Sha256::digest(bytes.as_ref()))
}

/// `len` random bytes from the OS, base64url encoded.
pub fn random_id(len: usize) -> String {
    let mut buf = vec![0u8; len];
    OsRng.fill_bytes(&mut buf);
    b64url(buf)
}

/// 128-bit token identifier.
pub fn new_jti() -> String {
    random_id(16)
}

/// True if `text` is base64url (no padding) decoding to exactly `len` bytes.
pub fn is_b64url_of_len(text: &str, len: usize) -> bool {
    b64url_decode(text).is_some_and(|b| b.len() == len)
}
