//! Resource-owner authentication is delegated to identity providers behind
//! [`IdentityProvider`]; the token path never sees credentials.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;

use radaa_persist::IdpConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FederationError {
    UnknownIdp(String),
    BadCredentials,
}

impl fmt::Display for FederationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FederationError::UnknownIdp(id) => write!(f, "identity provider {id} is not registered"),
            FederationError::BadCredentials => f.write_str("credentials rejected"),
        }
    }
}

impl std::error::Error for FederationError {}

pub trait IdentityProvider: Send + Sync {
    fn idp_id(&self) -> &str;
    /// Returns the local subject linked to the authenticated external identity.
    fn authenticate(&self, username: &str, secret: &str) -> Result<String, FederationError>;
}

/// Static username/secret table.
#[derive(Debug, Clone)]
pub struct StubIdentityProvider {
    idp_id: String,
    users: HashMap<String, (String, String)>,
}

impl StubIdentityProvider {
    pub fn new(idp_id: impl Into<String>) -> Self {
        Self {
            idp_id: idp_id.into(),
            users: HashMap::new(),
        }
    }

    pub fn with_user(mut self, username: &str, secret: &str, subject: &str) -> Self {
        self.users
            .insert(username.to_string(), (secret.to_string(), subject.to_string()));
        self
    }

    pub fn from_config(cfg: &IdpConfig) -> Self {
        cfg.users.iter().fold(Self::new(&cfg.idp_id), |idp, u| {
            idp.with_user(&u.username, &u.secret, &u.subject)
        })
    }
}

impl IdentityProvider for StubIdentityProvider {
    fn idp_id(&self) -> &str {
        &self.idp_id
    }

    fn authenticate(&self, username: &str, secret: &str) -> Result<String, FederationError> {
        match self.users.get(username) {
            Some((expected, subject)) if constant_time_eq(expected.as_bytes(), secret.as_bytes()) => {
                Ok(subject.clone())
            }
            _ => Err(FederationError::BadCredentials),
        }
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Registered identity providers by id. Providers can be added or replaced
/// at runtime.
#[derive(Default)]
pub struct FederationRegistry {
    providers: RwLock<HashMap<String, Arc<dyn IdentityProvider>>>,
}

impl fmt::Debug for FederationRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ids: Vec<_> = self.providers.read().keys().cloned().collect();
        ids.sort();
        f.debug_struct("FederationRegistry").field("providers", &ids).finish()
    }
}

impl FederationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the provider previously registered under the same id, if any.
    pub fn register(&self, idp: Arc<dyn IdentityProvider>) -> Option<Arc<dyn IdentityProvider>> {
        self.providers.write().insert(idp.idp_id().to_string(), idp)
    }

    pub fn remove(&self, idp_id: &str) -> Option<Arc<dyn IdentityProvider>> {
        self.providers.write().remove(idp_id)
    }

    pub fn authenticate_owner(&self, idp_id: &str, username: &str, secret: &str) -> Result<String, FederationError> {
        let idp = self
            .providers
            .read()
            .get(idp_id)
            .cloned()
            .ok_or_else(|| FederationError::UnknownIdp(idp_id.to_string()))?;
        idp.authenticate(username, secret)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> FederationRegistry {
        let r = FederationRegistry::new();
        r.register(Arc::new(StubIdentityProvider::new("corp").with_user("alice", "pw-a", "user-1")));
        r.register(Arc::new(StubIdentityProvider::new("social").with_user("alice@social", "pw-s", "user-1")));
        r
    }

    #[test]
    fn table_lookup() {
        let r = registry();
        assert_eq!(r.authenticate_owner("corp", "alice", "pw-a").unwrap(), "user-1");
        assert_eq!(r.authenticate_owner("corp", "alice", "nope"), Err(FederationError::BadCredentials));
        assert_eq!(r.authenticate_owner("corp", "bob", "pw-a"), Err(FederationError::BadCredentials));
    }

    #[test]
    fn unknown_idp() {
        assert_eq!(
            registry().authenticate_owner("ldap", "alice", "pw-a"),
            Err(FederationError::UnknownIdp("ldap".into()))
        );
    }

    #[test]
    fn two_idps_one_subject() {
        let r = registry();
        let a = r.authenticate_owner("corp", "alice", "pw-a").unwrap();
        let b = r.authenticate_owner("social", "alice@social", "pw-s").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn provider_swap() {
        let r = registry();
        let old = r.register(Arc::new(StubIdentityProvider::new("corp").with_user("alice", "rotated", "user-1")));
        assert!(old.is_some());
        assert!(r.authenticate_owner("corp", "alice", "pw-a").is_err());
        assert_eq!(r.authenticate_owner("corp", "alice", "rotated").unwrap(), "user-1");
    }
}
