//! DPoP-style sender proofs: a per-request signature by the key a token is bound to.
//!
//! Wire form mirrors the token envelope:
//! `b64url({"alg":"EdDSA","typ":"radaa+proof","key":<b64url public key>}).b64url({"htm","htu","iat","jti","ath"}).b64url(sig)`.
//! `ath` is omitted when the proof is not presented alongside an access token
//! (client authentication at the token endpoint, for example).

use serde::{Deserialize, Serialize};

use crate::encoding::{b64url, b64url_decode, random_id, sha256_b64url};
use crate::error::{ProofError, TokenError};
use crate::keys::{derive_thumbprint, Algorithm, KeyPair, VerificationKey};
use crate::replay::ReplayCache;

pub const PROOF_TYP: &str = "radaa+proof";
pub const PROOF_FRESHNESS_SECS: i64 = 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ProofHeader {
    alg: String,
    typ: String,
    key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofClaims {
    pub htm: String,
    pub htu: String,
    pub iat: i64,
    pub jti: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ath: Option<String>,
}

/// A parsed (not yet verified) sender proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderProof {
    pub claims: ProofClaims,
    pub public_key: Vec<u8>,
    signature: Vec<u8>,
    wire: String,
}

impl SenderProof {
    pub fn parse(wire: &str) -> Result<Self, ProofError> {
        let mut parts = wire.split('.');
        let (Some(h), Some(c), Some(s), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(ProofError::Malformed);
        };
        let header: ProofHeader = decode_json(h)?;
        if header.typ != PROOF_TYP || header.alg != Algorithm::Ed25519.header_name() {
            return Err(ProofError::Malformed);
        }
        let public_key = b64url_decode(&header.key).ok_or(ProofError::Malformed)?;
        if public_key.len() != 32 {
            return Err(ProofError::Malformed);
        }
        let claims: ProofClaims = decode_json(c)?;
        let signature = b64url_decode(s).ok_or(ProofError::Malformed)?;
        Ok(Self {
            claims,
            public_key,
            signature,
            wire: wire.to_string(),
        })
    }

    pub fn as_str(&self) -> &str {
        &self.wire
    }

    /// Thumbprint of the embedded key.
    pub fn thumbprint(&self) -> String {
        derive_thumbprint(&self.public_key).expect("length checked at parse")
    }

    fn signing_input(&self) -> &[u8] {
        let end = self.wire.rfind('.').expect("three segments");
        &self.wire.as_bytes()[..end]
    }
}

/// What a proof must match at the point of verification.
#[derive(Debug, Clone, Copy)]
pub struct ProofTarget<'a> {
    pub method: &'a str,
    pub uri: &'a str,
    /// The access token the proof accompanies, if any.
    pub token_wire: Option<&'a str>,
    /// Thumbprint the proof key must hash to.
    pub cnf_thumbprint: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptedProof {
    pub jti: String,
    pub thumbprint: String,
    pub iat: i64,
}

/// Strips query and fragment from a request URI.
pub fn normalize_htu(uri: &str) -> &str {
    let end = uri.find(['?', '#']).unwrap_or(uri.len());
    &uri[..end]
}

pub fn make_sender_proof(
    method: &str,
    uri: &str,
    token_wire: Option<&str>,
    key: &KeyPair,
    now: i64,
) -> Result<SenderProof, TokenError> {
    make_sender_proof_with_jti(method, uri, token_wire, key, now, random_id(12))
}

/// As [`make_sender_proof`] with a caller-chosen nonce.
pub fn make_sender_proof_with_jti(
    method: &str,
    uri: &str,
    token_wire: Option<&str>,
    key: &KeyPair,
    now: i64,
    jti: String,
) -> Result<SenderProof, TokenError> {
    if key.algorithm != Algorithm::Ed25519 {
        return Err(TokenError::UnsupportedAlgorithm(
            "sender proofs require an ed25519 key".into(),
        ));
    }
    let header = ProofHeader {
        alg: Algorithm::Ed25519.header_name().to_string(),
        typ: PROOF_TYP.to_string(),
        key: b64url(&key.public_key),
    };
    let claims = ProofClaims {
        htm: method.to_ascii_uppercase(),
        htu: normalize_htu(uri).to_string(),
        iat: now,
        jti,
        ath: token_wire.map(sha256_b64url),
    };
    let h = b64url(serde_json::to_vec(&header).expect("header serializes"));
    let c = b64url(serde_json::to_vec(&claims).expect("claims serialize"));
    let input = format!("{h}.{c}");
    let signature = key.sign(input.as_bytes())?;
    let wire = format!("{input}.{}", b64url(&signature));
    Ok(SenderProof {
        claims,
        public_key: key.public_key.clone(),
        signature,
        wire,
    })
}

/// All stateless checks: signature, binding, method/uri, token hash, freshness.
pub fn check_sender_proof(
    proof: &SenderProof,
    target: &ProofTarget<'_>,
    now: i64,
) -> Result<AcceptedProof, ProofError> {
    let vk = VerificationKey::ed25519(&proof.public_key).map_err(|_| ProofError::Malformed)?;
    vk.verify(proof.signing_input(), &proof.signature)
        .map_err(|_| ProofError::Signature)?;
    let thumbprint = proof.thumbprint();
    if thumbprint != target.cnf_thumbprint {
        return Err(ProofError::Binding);
    }
    if proof.claims.htm != target.method.to_ascii_uppercase()
        || proof.claims.htu != normalize_htu(target.uri)
    {
        return Err(ProofError::MethodUri);
    }
    let expected_ath = target.token_wire.map(sha256_b64url);
    if proof.claims.ath != expected_ath {
        return Err(ProofError::TokenHash);
    }
    if (now - proof.claims.iat).abs() > PROOF_FRESHNESS_SECS {
        return Err(ProofError::Freshness);
    }
    if proof.claims.jti.is_empty() {
        return Err(ProofError::Malformed);
    }
    Ok(AcceptedProof {
        jti: proof.claims.jti.clone(),
        thumbprint,
        iat: proof.claims.iat,
    })
}

/// Full verification: [`check_sender_proof`] and then the replay cache.
/// On acceptance the proof's jti is recorded, keyed by the proof key thumbprint.
pub fn verify_sender_proof(
    proof_wire: &str,
    target: &ProofTarget<'_>,
    cache: &ReplayCache,
    now: i64,
) -> Result<AcceptedProof, ProofError> {
    let proof = SenderProof::parse(proof_wire)?;
    let accepted = check_sender_proof(&proof, target, now)?;
    if !cache.check_and_insert(&accepted.thumbprint, &accepted.jti, now) {
        return Err(ProofError::Replay);
    }
    Ok(accepted)
}

fn decode_json<T: for<'de> Deserialize<'de>>(segment: &str) -> Result<T, ProofError> {
    let bytes = b64url_decode(segment).ok_or(ProofError::Malformed)?;
    serde_json::from_slice(&bytes).map_err(|_| ProofError::Malformed)
}
