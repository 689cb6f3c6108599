//! Cryptographic substrate: token envelopes, sealing, PKCE, sender proofs and replay protection.
//!
//! Everything that touches key material lives here: the three-segment signed
//! claim envelope, the AES-GCM confidentiality wrapper, PKCE (S256 only),
//! DPoP-style sender proofs and the replay cache that backs them.

pub mod claims;
pub mod clock;
pub mod encoding;
pub mod envelope;
pub mod error;
pub mod keys;
pub mod pkce;
pub mod proof;
pub mod replay;
pub mod seal;

pub use claims::{RiskClass, TokenClaims};
pub use clock::{Clock, ManualClock, SystemClock};
pub use envelope::{sign_token, verify_token, SignedToken, TokenHeader, TOKEN_TYP};
pub use error::{PkceError, ProofError, SealError, TokenError};
pub use keys::{derive_thumbprint, Algorithm, KeyPair, KeyRegistry, VerificationKey};
pub use pkce::{make_pkce_challenge, verify_pkce, PkceChallenge};
pub use proof::{
    check_sender_proof, make_sender_proof, verify_sender_proof, AcceptedProof, ProofTarget,
    SenderProof, PROOF_FRESHNESS_SECS,
};
pub use replay::ReplayCache;
pub use seal::{seal_envelope, unseal_envelope, SealedEnvelope};
