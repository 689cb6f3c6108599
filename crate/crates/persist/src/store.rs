//! Namespaced key/value store with per-key versions.
//!
//! Every write goes through [`Store::checked_put`]: it succeeds only when the
//! caller's expected prior version matches the current one, which is what
//! single-use artifacts (codes, request URIs, refresh tokens) are built on.
//! With a backing directory each namespace is one JSON file, rewritten
//! atomically (temp file + rename) under the namespace write lock.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use parking_lot::RwLock;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Namespace {
    Clients,
    Par,
    Codes,
    Tokens,
    Revocations,
    KnnModel,
    SubjectHistory,
    Grants,
    StepUp,
    Nonces,
    RateLimits,
}

impl Namespace {
    pub const ALL: [Namespace; 11] = [
        Namespace::Clients,
        Namespace::Par,
        Namespace::Codes,
        Namespace::Tokens,
        Namespace::Revocations,
        Namespace::KnnModel,
        Namespace::SubjectHistory,
        Namespace::Grants,
        Namespace::StepUp,
        Namespace::Nonces,
        Namespace::RateLimits,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Namespace::Clients => "clients",
            Namespace::Par => "par",
            Namespace::Codes => "codes",
            Namespace::Tokens => "tokens",
            Namespace::Revocations => "revocations",
            Namespace::KnnModel => "knn-model",
            Namespace::SubjectHistory => "subject-history",
            Namespace::Grants => "grants",
            Namespace::StepUp => "step-up",
            Namespace::Nonces => "nonces",
            Namespace::RateLimits => "rate-limits",
        }
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Namespace {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Namespace::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| StoreError::UnknownNamespace(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned {
    pub version: u64,
    pub value: Value,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("version conflict (current version {current:?})")]
    Conflict { current: Option<u64> },
    #[error("unknown namespace {0:?}")]
    UnknownNamespace(String),
    #[error("stored value does not match the requested type: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("store io: {0}")]
    Io(#[from] io::Error),
}

/// Outcome of an [`Store::update`] closure.
pub enum Update<T, R> {
    Write(T, R),
    Abort(R),
}

type Space = BTreeMap<String, Versioned>;

#[derive(Debug)]
pub struct Store {
    dir: Option<PathBuf>,
    spaces: HashMap<Namespace, RwLock<Space>>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            spaces: Namespace::ALL
                .into_iter()
                .map(|n| (n, RwLock::new(Space::new())))
                .collect(),
        }
    }

    /// Opens (creating if needed) a directory-backed store and loads every namespace file.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut spaces = HashMap::new();
        for ns in Namespace::ALL {
            let path = dir.join(format!("{}.json", ns.as_str()));
            let space: Space = match fs::read(&path) {
                Ok(bytes) => serde_json::from_slice(&bytes)?,
                Err(e) if e.kind() == io::ErrorKind::NotFound => Space::new(),
                Err(e) => return Err(e.into()),
            };
            spaces.insert(ns, RwLock::new(space));
        }
        Ok(Self {
            dir: Some(dir),
            spaces,
        })
    }

    fn space(&self, ns: Namespace) -> &RwLock<Space> {
        self.spaces.get(&ns).expect("all namespaces initialised")
    }

    pub fn get(&self, ns: Namespace, key: &str) -> Option<Versioned> {
        self.space(ns).read().get(key).cloned()
    }

    pub fn get_typed<T: DeserializeOwned>(&self, ns: Namespace, key: &str) -> Result<Option<(T, u64)>, StoreError> {
        match self.get(ns, key) {
            None => Ok(None),
            Some(v) => Ok(Some((serde_json::from_value(v.value)?, v.version))),
        }
    }

    pub fn keys(&self, ns: Namespace) -> Vec<String> {
        self.space(ns).read().keys().cloned().collect()
    }

    pub fn len(&self, ns: Namespace) -> usize {
        self.space(ns).read().len()
    }

    /// Writes `value` iff the key's current version equals `expected_prior`
    /// (`None` = key absent). Returns the new version.
    pub fn checked_put(
        &self,
        ns: Namespace,
        key: &str,
        expected_prior: Option<u64>,
        value: Value,
    ) -> Result<u64, StoreError> {
        let mut space = self.space(ns).write();
        let current = space.get(key).map(|v| v.version);
        if current != expected_prior {
            return Err(StoreError::Conflict { current });
        }
        let version = current.map_or(1, |v| v + 1);
        space.insert(key.to_string(), Versioned { version, value });
        self.persist(ns, &space)?;
        Ok(version)
    }

    pub fn checked_put_typed<T: Serialize>(
        &self,
        ns: Namespace,
        key: &str,
        expected_prior: Option<u64>,
        value: &T,
    ) -> Result<u64, StoreError> {
        self.checked_put(ns, key, expected_prior, serde_json::to_value(value)?)
    }

    /// Read-modify-write with retry on conflict.
    pub fn update<T, R>(
        &self,
        ns: Namespace,
        key: &str,
        mut f: impl FnMut(Option<T>) -> Update<T, R>,
    ) -> Result<R, StoreError>
    where
        T: Serialize + DeserializeOwned,
    {
        loop {
            let current = self.get_typed::<T>(ns, key)?;
            let version = current.as_ref().map(|(_, v)| *v);
            match f(current.map(|(t, _)| t)) {
                Update::Abort(r) => return Ok(r),
                Update::Write(next, r) => match self.checked_put_typed(ns, key, version, &next) {
                    Ok(_) => return Ok(r),
                    Err(StoreError::Conflict { .. }) => continue,
                    Err(e) => return Err(e),
                },
            }
        }
    }

    fn persist(&self, ns: Namespace, space: &Space) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = dir.join(format!("{}.json", ns.as_str()));
        let tmp = dir.join(format!(".{}.json.tmp", ns.as_str()));
        fs::write(&tmp, serde_json::to_vec(space)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::sync::Arc;

    #[test]
    fn put_on_absent_then_stale_prior_conflicts() {
        let s = Store::in_memory();
        assert_eq!(s.checked_put(Namespace::Codes, "c1", None, json!(1)).unwrap(), 1);
        assert!(matches!(
            s.checked_put(Namespace::Codes, "c1", None, json!(2)),
            Err(StoreError::Conflict { current: Some(1) })
        ));
        assert_eq!(s.checked_put(Namespace::Codes, "c1", Some(1), json!(2)).unwrap(), 2);
        assert!(matches!(
            s.checked_put(Namespace::Codes, "c1", Some(1), json!(3)),
            Err(StoreError::Conflict { current: Some(2) })
        ));
        assert_eq!(s.get(Namespace::Codes, "c1").unwrap().value, json!(2));
    }

    #[test]
    fn concurrent_puts_one_winner() {
        for _ in 0..50 {
            let s = Arc::new(Store::in_memory());
            let wins: usize = std::thread::scope(|sc| {
                (0..16)
                    .map(|i| {
                        let s = Arc::clone(&s);
                        sc.spawn(move || s.checked_put(Namespace::Par, "k", None, json!(i)).is_ok() as usize)
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .map(|h| h.join().unwrap())
                    .sum()
            });
            assert_eq!(wins, 1);
        }
    }

    #[test]
    fn update_retries_until_applied() {
        let s = Arc::new(Store::in_memory());
        std::thread::scope(|sc| {
            for _ in 0..8 {
                let s = Arc::clone(&s);
                sc.spawn(move || {
                    for _ in 0..100 {
                        s.update::<u64, ()>(Namespace::RateLimits, "n", |c| Update::Write(c.unwrap_or(0) + 1, ()))
                            .unwrap();
                    }
                });
            }
        });
        assert_eq!(s.get_typed::<u64>(Namespace::RateLimits, "n").unwrap().unwrap().0, 800);
    }

    #[test]
    fn namespace_names_round_trip() {
        for n in Namespace::ALL {
            assert_eq!(n.as_str().parse::<Namespace>().unwrap(), n);
        }
        assert!(matches!("bogus".parse::<Namespace>(), Err(StoreError::UnknownNamespace(_))));
    }
}
