//! Three-segment signed envelope: `b64url(header).b64url(claims).b64url(signature)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::claims::TokenClaims;
use crate::encoding::{b64url, b64url_decode};
use crate::error::TokenError;
use crate::keys::{Algorithm, KeyPair, KeyRegistry};

pub const TOKEN_TYP: &str = "radaa+token";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHeader {
    pub alg: String,
    pub typ: String,
    pub kid: String,
}

/// A signed token in wire form.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedToken(String);

impl SignedToken {
    /// Wraps a wire string without checking it. Verification happens in [`verify_token`].
    pub fn from_wire(wire: impl Into<String>) -> Self {
        Self(wire.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// Decodes the header without verifying anything.
    pub fn header(&self) -> Result<TokenHeader, TokenError> {
        let (h, _, _) = split(&self.0)?;
        decode_json(h)
    }
}

impl fmt::Debug for SignedToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: String = self.0.chars().take(16).collect();
        write!(f, "SignedToken({shown}...)")
    }
}

impl fmt::Display for SignedToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn sign_token(claims: &TokenClaims, key: &KeyPair) -> Result<SignedToken, TokenError> {
    claims.validate()?;
    sign_unchecked(claims, key)
}

/// Signs without validating the claim invariants. Lets tests build tokens
/// that `sign_token` would refuse, e.g. already expired ones.
#[cfg(feature = "test-hooks")]
pub fn sign_token_unchecked(claims: &TokenClaims, key: &KeyPair) -> Result<SignedToken, TokenError> {
    sign_unchecked(claims, key)
}

fn sign_unchecked(claims: &TokenClaims, key: &KeyPair) -> Result<SignedToken, TokenError> {
    let header = TokenHeader {
        alg: key.algorithm.header_name().to_string(),
        typ: TOKEN_TYP.to_string(),
        kid: key.key_id.clone(),
    };
    let header_seg = b64url(serde_json::to_vec(&header).expect("header serializes"));
    let claims_seg = b64url(serde_json::to_vec(claims).expect("claims serialize"));
    let signing_input = format!("{header_seg}.{claims_seg}");
    let signature = key.sign(signing_input.as_bytes())?;
    Ok(SignedToken(format!("{signing_input}.{}", b64url(signature))))
}

/// Checks the signature under the key named by `kid` and returns the claims.
/// Expiry is not checked here.
pub fn verify_token(wire: &str, keys: &KeyRegistry) -> Result<TokenClaims, TokenError> {
    let (h, c, s) = split(wire)?;
    let header: TokenHeader = decode_json(h)?;
    if header.typ != TOKEN_TYP {
        return Err(TokenError::Malformed("unexpected typ"));
    }
    let alg = Algorithm::from_header_name(&header.alg)?;
    let key = keys
        .get(&header.kid)
        .ok_or_else(|| TokenError::UnknownKid(header.kid.clone()))?;
    if key.algorithm != alg {
        return Err(TokenError::SignatureMismatch);
    }
    let signature = b64url_decode(s).ok_or(TokenError::Malformed("signature segment"))?;
    let signing_input_len = h.len() + 1 + c.len();
    key.verify(&wire.as_bytes()[..signing_input_len], &signature)?;
    decode_json(c)
}

fn split(wire: &str) -> Result<(&str, &str, &str), TokenError> {
    let mut parts = wire.split('.');
    match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(h), Some(c), Some(s), None) if !h.is_empty() && !c.is_empty() && !s.is_empty() => {
            Ok((h, c, s))
        }
        _ => Err(TokenError::Malformed("expected three segments")),
    }
}

fn decode_json<T: for<'de> Deserialize<'de>>(segment: &str) -> Result<T, TokenError> {
    let bytes = b64url_decode(segment).ok_or(TokenError::Malformed("segment is not base64url"))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| TokenError::Malformed("segment is not utf-8"))?;
    serde_json::from_str(text).map_err(|_| TokenError::Malformed("segment is not the expected json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::RiskClass;
    use crate::encoding::new_jti;

    fn claims() -> TokenClaims {
        TokenClaims {
            iss: "https://as.example".into(),
            sub: "alice".into(),
            aud: "https://rs.example".into(),
            client_id: "web".into(),
            scope: ["a".to_string(), "b".to_string()].into(),
            iat: 1_000,
            exp: 1_900,
            jti: new_jti(),
            cnf_thumbprint: None,
            tal: 0,
            risk_class: RiskClass::Low,
        }
    }

    #[test]
    fn round_trip() {
        let key = KeyPair::generate_ed25519("as-1");
        let reg = KeyRegistry::new().with_key(&key);
        let c = claims();
        let t = sign_token(&c, &key).unwrap();
        assert_eq!(verify_token(t.as_str(), &reg).unwrap(), c);
    }

    #[test]
    fn header_fields() {
        let key = KeyPair::generate_ed25519("as-1");
        let t = sign_token(&claims(), &key).unwrap();
        let h = t.header().unwrap();
        assert_eq!((h.alg.as_str(), h.typ.as_str(), h.kid.as_str()), ("EdDSA", "radaa+token", "as-1"));
        assert!(!t.as_str().contains('='));
    }

    #[test]
    fn keys_are_separated() {
        let k1 = KeyPair::generate_ed25519("k1");
        let k2 = KeyPair::generate_ed25519("k2");
        let c = claims();
        let t1 = sign_token(&c, &k1).unwrap();
        let t2 = sign_token(&c, &k2).unwrap();
        assert_ne!(t1, t2);
        let r1 = KeyRegistry::new().with_key(&k1);
        let r2 = KeyRegistry::new().with_key(&k2);
        verify_token(t1.as_str(), &r1).unwrap();
        verify_token(t2.as_str(), &r2).unwrap();
        assert_eq!(
            verify_token(t1.as_str(), &r2),
            Err(TokenError::UnknownKid("k1".into()))
        );
        // same kid, different key material
        let imposter = KeyPair::generate_ed25519("k1");
        let r3 = KeyRegistry::new().with_key(&imposter);
        assert_eq!(verify_token(t1.as_str(), &r3), Err(TokenError::SignatureMismatch));
    }

    #[test]
    fn exp_before_iat_rejected_at_sign_time() {
        let key = KeyPair::generate_ed25519("k");
        let mut c = claims();
        c.exp = c.iat - 1;
        assert!(matches!(sign_token(&c, &key), Err(TokenError::InvalidClaims(_))));
    }

    #[test]
    fn flipped_claim_character_fails() {
        let key = KeyPair::generate_ed25519("k");
        let reg = KeyRegistry::new().with_key(&key);
        let t = sign_token(&claims(), &key).unwrap();
        let wire = t.as_str();
        let dot = wire.find('.').unwrap();
        let mut bytes = wire.as_bytes().to_vec();
        let i = dot + 5;
        bytes[i] = if bytes[i] == b'A' { b'B' } else { b'A' };
        let tampered = String::from_utf8(bytes).unwrap();
        assert!(verify_token(&tampered, &reg).is_err());
    }

    #[test]
    fn hmac_round_trip_and_alg_confusion() {
        let hmac = KeyPair::generate_hmac("intro");
        let reg = KeyRegistry::new().with_key(&hmac);
        let t = sign_token(&claims(), &hmac).unwrap();
        assert_eq!(t.header().unwrap().alg, "HS256");
        verify_token(t.as_str(), &reg).unwrap();

        // An EdDSA token naming an HMAC kid must not verify.
        let ed = KeyPair {
            key_id: "intro".into(),
            ..KeyPair::generate_ed25519("x")
        };
        let forged = sign_token(&claims(), &ed).unwrap();
        assert_eq!(verify_token(forged.as_str(), &reg), Err(TokenError::SignatureMismatch));
    }

    #[test]
    fn malformed_wire() {
        let reg = KeyRegistry::new();
        for w in ["", "a.b", "a.b.c.d", "..", "!!.??.##"] {
            assert!(matches!(verify_token(w, &reg), Err(TokenError::Malformed(_))), "{w}");
        }
    }
}
