use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("invalid claims: {0}")]
    InvalidClaims(&'static str),
    #[error("unsupported algorithm: {0}")]
    UnsupportedAlgorithm(String),
    #[error("malformed key: {0}")]
    MalformedKey(&'static str),
    #[error("malformed token: {0}")]
    Malformed(&'static str),
    #[error("unknown key id {0:?}")]
    UnknownKid(String),
    #[error("signature mismatch")]
    SignatureMismatch,
}

impl TokenError {
    pub fn code(&self) -> &'static str {
        match self {
            TokenError::InvalidClaims(_) => "invalid_claims",
            TokenError::UnsupportedAlgorithm(_) => "unsupported_algorithm",
            TokenError::MalformedKey(_) => "malformed_key",
            TokenError::Malformed(_) => "malformed_token",
            TokenError::UnknownKid(_) => "unknown_kid",
            TokenError::SignatureMismatch => "signature_mismatch",
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SealError {
    #[error("sealing key must be 32 bytes")]
    BadKey,
    #[error("sealed payload truncated")]
    Truncated,
    #[error("authentication tag mismatch")]
    TagMismatch,
    #[error("unsealed payload is not a token envelope")]
    NotAnEnvelope,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PkceError {
    #[error("code verifier must be 43-128 unreserved characters")]
    InvalidVerifier,
    #[error("challenge method must be S256")]
    UnsupportedMethod,
    #[error("malformed code challenge")]
    MalformedChallenge,
}

/// Rejection reasons for a sender proof. Each has a distinct wire code.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ProofError {
    #[error("sender proof is malformed")]
    Malformed,
    #[error("sender proof signature invalid")]
    Signature,
    #[error("proof key does not match the bound key")]
    Binding,
    #[error("proof method or uri mismatch")]
    MethodUri,
    #[error("proof access-token hash mismatch")]
    TokenHash,
    #[error("proof is not fresh")]
    Freshness,
    #[error("proof replayed")]
    Replay,
}

impl ProofError {
    pub fn code(&self) -> &'static str {
        match self {
            ProofError::Malformed => "proof_malformed",
            ProofError::Signature => "proof_signature",
            ProofError::Binding => "proof_binding",
            ProofError::MethodUri => "proof_method_uri",
            ProofError::TokenHash => "proof_token_hash",
            ProofError::Freshness => "proof_freshness",
            ProofError::Replay => "proof_replay",
        }
    }
}
