//! One authorization server, its resource servers and everything they share:
//! store, audit log, clock, risk engine, replay cache and signing key.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use parking_lot::Mutex;
use rand::Rng;

use radaa_engine::{
    decide, Decision, FeatureVector, GeoPoint, KnnModel, LastSeen, RiskAssessment, RiskEngine, Stage,
    TransactionContext,
};
use radaa_persist::{
    AuditLog, AuditRecord, Config, Namespace, ResourceServerConfig, RiskSummary, Store, StoreError,
    Update,
};
use radaa_token::encoding::{b64url_decode, random_id};
use radaa_token::{
    check_sender_proof, derive_thumbprint, AcceptedProof, Clock, KeyPair, KeyRegistry, ProofError,
    ProofTarget, ReplayCache, RiskClass, SenderProof,
};

use crate::auth::AuthServer;
use crate::context::RequestMeta;
use crate::error::ApiError;
use crate::federation::{FederationRegistry, StubIdentityProvider};
use crate::mitigations::Mitigations;
use crate::records::*;
use crate::resource::ResourceServer;

const MODEL_KEY: &str = "samples";

#[derive(Debug)]
pub enum DeploymentError {
    Store(StoreError),
    InvalidKey { owner: String, reason: &'static str },
    Engine(String),
}

impl std::fmt::Display for DeploymentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeploymentError::Store(e) => write!(f, "store: {e}"),
            DeploymentError::InvalidKey { owner, reason } => write!(f, "key for {owner}: {reason}"),
            DeploymentError::Engine(e) => write!(f, "risk engine: {e}"),
        }
    }
}

impl std::error::Error for DeploymentError {}

impl From<StoreError> for DeploymentError {
    fn from(e: StoreError) -> Self {
        DeploymentError::Store(e)
    }
}

pub struct DeploymentOptions {
    pub clock: Arc<dyn Clock>,
    pub store: Arc<Store>,
    pub audit: Arc<AuditLog>,
    pub signing_key: KeyPair,
    pub mitigations: Mitigations,
}

impl DeploymentOptions {
    /// In-memory store and audit log with a fresh signing key.
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            store: Arc::new(Store::in_memory()),
            audit: Arc::new(AuditLog::in_memory()),
            signing_key: KeyPair::generate_ed25519("as-signing"),
            mitigations: Mitigations::default(),
        }
    }
}

/// A step-up code handed to the out-of-band channel (stands in for SMS / push).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutOfBandMessage {
    pub subject: String,
    pub challenge_id: String,
    pub code: String,
}

#[derive(Debug, Default)]
pub struct Outbox(Mutex<Vec<OutOfBandMessage>>);

impl Outbox {
    pub fn deliver(&self, msg: OutOfBandMessage) {
        tracing::info!(subject = %msg.subject, challenge = %msg.challenge_id, "step-up code delivered");
        self.0.lock().push(msg);
    }

    /// Removes and returns the messages for `subject`.
    pub fn take(&self, subject: &str) -> Vec<OutOfBandMessage> {
        let mut all = self.0.lock();
        let (mine, rest) = all.drain(..).partition(|m| m.subject == subject);
        *all = rest;
        mine
    }
}

#[derive(Debug)]
pub(crate) struct RsEntry {
    pub config: ResourceServerConfig,
    pub thumbprint: Option<String>,
    pub sealing_key: Option<Vec<u8>>,
}

pub(crate) struct Inner {
    pub config: Config,
    pub issuer: String,
    pub store: Arc<Store>,
    pub audit: Arc<AuditLog>,
    pub clock: Arc<dyn Clock>,
    pub engine: RiskEngine,
    pub replay: ReplayCache,
    pub signing_key: KeyPair,
    pub verification: KeyRegistry,
    pub mitigations: Mitigations,
    pub federation: FederationRegistry,
    pub outbox: Outbox,
    pub resource_servers: BTreeMap<String, RsEntry>,
}

#[derive(Clone)]
pub struct Deployment(pub(crate) Arc<Inner>);

impl std::fmt::Debug for Deployment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Deployment")
            .field("issuer", &self.0.issuer)
            .field("mitigations", &self.0.mitigations)
            .finish_non_exhaustive()
    }
}

/// Collects what one request's audit record needs.
#[derive(Debug, Default)]
pub(crate) struct Trace {
    pub actor: String,
    pub risk: Option<RiskSummary>,
}

pub(crate) struct Risk {
    pub assessment: RiskAssessment,
    pub decision: Decision,
}

/// Why a sender proof was not accepted.
pub(crate) enum ProofFailure {
    Missing,
    Invalid(ProofError),
}

impl Deployment {
    pub fn new(config: Config, opts: DeploymentOptions) -> Result<Self, DeploymentError> {
        let engine_config = config.engine_config();
        let snapshot: Option<(Vec<(FeatureVector, RiskClass)>, u64)> =
            opts.store.get_typed(Namespace::KnnModel, MODEL_KEY)?;
        let model = KnnModel::from_snapshot(
            engine_config.k,
            engine_config.capacity,
            snapshot.map(|(s, _)| s).unwrap_or_default(),
        )
        .map_err(|e| DeploymentError::Engine(e.to_string()))?;
        let engine = RiskEngine::with_model(engine_config, model);
        engine.set_posture(config.risk.posture);

        let federation = FederationRegistry::new();
        for idp in &config.identity_providers {
            federation.register(Arc::new(StubIdentityProvider::from_config(idp)));
        }

        let mut resource_servers = BTreeMap::new();
        for rs in &config.resource_servers {
            let thumbprint = match &rs.public_key_b64 {
                None => None,
                Some(k) => Some(key_thumbprint(k).ok_or(DeploymentError::InvalidKey {
                    owner: rs.id.clone(),
                    reason: "public_key_b64 is not a 32-byte base64url key",
                })?),
            };
            let sealing_key = match &rs.sealing_key_b64 {
                None => None,
                Some(k) => Some(b64url_decode(k).filter(|b| b.len() == 32).ok_or(
                    DeploymentError::InvalidKey {
                        owner: rs.id.clone(),
                        reason: "sealing_key_b64 is not a 32-byte base64url key",
                    },
                )?),
            };
            resource_servers.insert(
                rs.id.clone(),
                RsEntry {
                    config: rs.clone(),
                    thumbprint,
                    sealing_key,
                },
            );
        }

        for c in &config.clients {
            if let Some(k) = &c.public_key_b64 {
                key_thumbprint(k).ok_or(DeploymentError::InvalidKey {
                    owner: c.client_id.clone(),
                    reason: "public_key_b64 is not a 32-byte base64url key",
                })?;
            }
            // operator-provisioned keys are trusted without a possession proof
            let record = ClientRecord {
                client_id: c.client_id.clone(),
                display_name: c.display_name.clone(),
                redirect_uris: c.redirect_uris.clone(),
                scopes: c.scopes.clone(),
                public_key: c.public_key_b64.clone(),
                tal: u8::from(c.public_key_b64.is_some()),
                sealing_key: None,
            };
            opts.store.update(Namespace::Clients, &c.client_id, |cur: Option<ClientRecord>| {
                if cur.as_ref() == Some(&record) {
                    Update::Abort(())
                } else {
                    Update::Write(record.clone(), ())
                }
            })?;
        }

        let verification = KeyRegistry::new().with_key(&opts.signing_key);
        Ok(Self(Arc::new(Inner {
            issuer: config.issuer_id.trim_end_matches('/').to_string(),
            config,
            store: opts.store,
            audit: opts.audit,
            clock: opts.clock,
            engine,
            replay: ReplayCache::default(),
            signing_key: opts.signing_key,
            verification,
            mitigations: opts.mitigations,
            federation,
            outbox: Outbox::default(),
            resource_servers,
        })))
    }

    pub fn auth_server(&self) -> AuthServer {
        AuthServer::new(self.clone())
    }

    pub fn resource_server(&self, id: &str) -> Option<ResourceServer> {
        self.0
            .resource_servers
            .contains_key(id)
            .then(|| ResourceServer::new(self.clone(), id.to_string()))
    }

    pub fn resource_server_ids(&self) -> Vec<String> {
        self.0.config.resource_servers.iter().map(|r| r.id.clone()).collect()
    }

    pub fn issuer(&self) -> &str {
        &self.0.issuer
    }

    pub fn config(&self) -> &Config {
        &self.0.config
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.0.store
    }

    pub fn audit(&self) -> &Arc<AuditLog> {
        &self.0.audit
    }

    pub fn engine(&self) -> &RiskEngine {
        &self.0.engine
    }

    pub fn federation(&self) -> &FederationRegistry {
        &self.0.federation
    }

    pub fn outbox(&self) -> &Outbox {
        &self.0.outbox
    }

    pub fn mitigations(&self) -> Mitigations {
        self.0.mitigations
    }

    pub fn verification_keys(&self) -> &KeyRegistry {
        &self.0.verification
    }

    pub fn signing_public_key(&self) -> &[u8] {
        &self.0.signing_key.public_key
    }

    pub fn now(&self) -> i64 {
        self.0.clock.now()
    }

    pub fn client(&self, client_id: &str) -> Result<Option<ClientRecord>, ApiError> {
        Ok(self
            .0
            .store
            .get_typed(Namespace::Clients, client_id)?
            .map(|(c, _)| c))
    }

    pub fn is_revoked(&self, jti: &str) -> bool {
        self.0.store.get(Namespace::Revocations, jti).is_some()
    }

    /// Idempotent.
    pub fn revoke_jti(&self, jti: &str, reason: &str) -> Result<(), ApiError> {
        let record = RevocationRecord {
            revoked_at: self.now(),
            reason: reason.to_string(),
        };
        match self.0.store.checked_put_typed(Namespace::Revocations, jti, None, &record) {
            Ok(_) | Err(StoreError::Conflict { .. }) => Ok(()),
            Err(e) => Err(e.into()),
        }
    }

    /// Revokes every access and refresh token issued under `grant_id`.
    pub fn revoke_grant(&self, grant_id: &str, reason: &str) -> Result<(), ApiError> {
        let grant = self.0.store.update(Namespace::Grants, grant_id, |g: Option<GrantRecord>| match g {
            None => Update::Abort(None),
            Some(mut g) => {
                g.revoked = true;
                Update::Write(g.clone(), Some(g))
            }
        })?;
        let Some(grant) = grant else { return Ok(()) };
        for jti in &grant.access_jtis {
            self.revoke_jti(jti, reason)?;
        }
        for id in &grant.refresh_ids {
            self.0.store.update(Namespace::Tokens, &refresh_key(id), |r: Option<RefreshRecord>| match r {
                Some(mut r) if r.state != RefreshState::Revoked => {
                    r.state = RefreshState::Revoked;
                    Update::Write(r, ())
                }
                _ => Update::Abort(()),
            })?;
        }
        Ok(())
    }

    pub(crate) fn resource_entry(&self, id: &str) -> Option<&RsEntry> {
        self.0.resource_servers.get(id)
    }

    /// Runs one allow/deny decision and writes exactly one audit record for it.
    pub(crate) fn audited<T>(
        &self,
        action: &str,
        f: impl FnOnce(&mut Trace) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let mut trace = Trace::default();
        let result = f(&mut trace);
        let outcome = match &result {
            Ok(_) => "allow".to_string(),
            Err(e) => e.detail().to_string(),
        };
        let record = AuditRecord {
            ts: self.now(),
            actor: if trace.actor.is_empty() { "anonymous".into() } else { trace.actor },
            action: action.to_string(),
            risk: trace.risk,
            outcome,
        };
        if let Err(e) = self.0.audit.append(record) {
            tracing::error!(error = %e, "audit append failed");
            return Err(ApiError::internal("audit log unavailable"));
        }
        result
    }

    pub(crate) fn context(
        &self,
        subject: &str,
        client_id: &str,
        tal: u8,
        meta: &RequestMeta,
    ) -> Result<(TransactionContext, Option<LastSeen>), ApiError> {
        let now = self.now();
        let history: SubjectRecord = self
            .0
            .store
            .get_typed(Namespace::SubjectHistory, subject)?
            .map(|(h, _)| h)
            .unwrap_or_default();
        let ip = meta.ip.clone().unwrap_or_else(|| "unknown".into());
        let ip_reputation = self.0.config.ip_reputation.get(&ip).copied().unwrap_or(0.0);
        let device_known = meta
            .device
            .as_ref()
            .is_some_and(|d| history.devices.contains(d));
        let ctx = TransactionContext {
            subject: subject.to_string(),
            client_id: client_id.to_string(),
            ip,
            ip_reputation,
            geo: meta.geo.unwrap_or(GeoPoint { lat: 0.0, lon: 0.0 }),
            timestamp: now,
            device_id: meta.device.clone().unwrap_or_default(),
            device_known,
            nids_malicious: meta.nids_malicious || self.is_escalated(client_id, now),
            tal,
        };
        // no location evidence, no travel evidence
        let last_seen = history
            .last_seen
            .filter(|l| meta.geo.is_some() && l.timestamp <= now);
        Ok((ctx, last_seen))
    }

    pub(crate) fn assess(
        &self,
        trace: &mut Trace,
        subject: &str,
        client_id: &str,
        tal: u8,
        meta: &RequestMeta,
        stage: Stage,
        scopes: &BTreeSet<String>,
    ) -> Result<Risk, ApiError> {
        let (ctx, last_seen) = self.context(subject, client_id, tal, meta)?;
        let assessment = self
            .0
            .engine
            .assess(&ctx, last_seen.as_ref())
            .map_err(|e| ApiError::bad_request("invalid_request", format!("transaction context: {e}")))?;
        trace.risk = Some(RiskSummary {
            score: assessment.score,
            class: assessment.class,
        });
        let decision = decide(&assessment, stage, scopes);
        Ok(Risk { assessment, decision })
    }

    /// Labels a blocked attack for incremental learning.
    pub(crate) fn observe_attack(&self, features: FeatureVector) {
        self.observe(features, RiskClass::High);
    }

    pub(crate) fn observe(&self, features: FeatureVector, label: RiskClass) {
        self.0.engine.observe(features, label);
        let snapshot = self.0.engine.model_snapshot();
        let _ = self.0.store.update(Namespace::KnnModel, MODEL_KEY, |_: Option<Vec<(FeatureVector, RiskClass)>>| {
            Update::Write(snapshot.clone(), ())
        });
    }

    /// Features of the current request, for labelling rejections.
    pub(crate) fn features_of(&self, subject: &str, client_id: &str, tal: u8, meta: &RequestMeta) -> Option<FeatureVector> {
        let (ctx, last_seen) = self.context(subject, client_id, tal, meta).ok()?;
        self.0.engine.assess(&ctx, last_seen.as_ref()).ok().map(|a| a.features)
    }

    /// Records location and, when `enroll`, the device as known for `subject`.
    pub(crate) fn note_seen(&self, subject: &str, meta: &RequestMeta, enroll: bool) -> Result<(), ApiError> {
        let now = self.now();
        self.0.store.update(Namespace::SubjectHistory, subject, |h: Option<SubjectRecord>| {
            let mut h = h.unwrap_or_default();
            if let Some(geo) = meta.geo {
                h.last_seen = Some(LastSeen { geo, timestamp: now });
            }
            if enroll {
                if let Some(d) = &meta.device {
                    h.devices.insert(d.clone());
                }
            }
            Update::Write(h, ())
        })?;
        Ok(())
    }

    fn is_escalated(&self, client_id: &str, now: i64) -> bool {
        matches!(
            self.0.store.get_typed::<Escalation>(Namespace::RateLimits, &escalation_key(client_id)),
            Ok(Some((e, _))) if e.until > now
        )
    }

    /// Counts one PAR against the client's per-minute budget. On the first
    /// breach in a window the client is escalated (its transactions are
    /// scored as NIDS-flagged for five minutes).
    pub(crate) fn charge_par(&self, client_id: &str) -> Result<bool, ApiError> {
        let now = self.now();
        let limit = self.0.config.rate_limits.par_per_minute;
        let window = now.div_euclid(60);
        let (allowed, first_breach) =
            self.0.store.update(Namespace::RateLimits, &rate_key(client_id), |w: Option<RateWindow>| {
                let count = match w {
                    Some(w) if w.window == window => w.count,
                    _ => 0,
                } + 1;
                Update::Write(RateWindow { window, count }, (count <= limit, count == limit + 1))
            })?;
        if first_breach {
            let until = now + 300;
            self.0.store.update(Namespace::RateLimits, &escalation_key(client_id), |_: Option<Escalation>| {
                Update::Write(Escalation { until }, ())
            })?;
            tracing::warn!(client_id, "PAR rate limit exceeded; client escalated");
        }
        Ok(allowed)
    }

    /// Sender-proof check honouring the mitigation switches. `Ok(None)` means
    /// proofs are switched off.
    pub(crate) fn check_proof(
        &self,
        proof: Option<&str>,
        method: &str,
        uri: &str,
        token_wire: Option<&str>,
        expected_thumbprint: &str,
    ) -> Result<Option<AcceptedProof>, ProofFailure> {
        let m = self.0.mitigations;
        if !m.sender_proof {
            return Ok(None);
        }
        let wire = proof.ok_or(ProofFailure::Missing)?;
        let parsed = SenderProof::parse(wire).map_err(ProofFailure::Invalid)?;
        let own = parsed.thumbprint();
        let target = ProofTarget {
            method,
            uri,
            token_wire,
            cnf_thumbprint: if m.binding { expected_thumbprint } else { &own },
        };
        let now = self.now();
        let accepted = check_sender_proof(&parsed, &target, now).map_err(ProofFailure::Invalid)?;
        if m.replay_cache && !self.0.replay.check_and_insert(&accepted.thumbprint, &accepted.jti, now) {
            return Err(ProofFailure::Invalid(ProofError::Replay));
        }
        Ok(Some(accepted))
    }

    /// Issues a step-up challenge for `subject` and delivers its code out of band.
    pub(crate) fn new_challenge(&self, subject: &str) -> Result<String, ApiError> {
        let challenge_id = random_id(16);
        let code = format!("{:06}", rand::thread_rng().gen_range(0..1_000_000));
        let ch = StepUpChallenge {
            challenge_id: challenge_id.clone(),
            subject: subject.to_string(),
            expected_answer: code.clone(),
            expires: self.now() + self.0.config.lifetimes.step_up,
            state: ChallengeState::Pending,
        };
        self.0.store.checked_put_typed(Namespace::StepUp, &challenge_id, None, &ch)?;
        self.0.outbox.deliver(OutOfBandMessage {
            subject: subject.to_string(),
            challenge_id: challenge_id.clone(),
            code,
        });
        Ok(challenge_id)
    }
}

pub(crate) fn key_thumbprint(b64: &str) -> Option<String> {
    derive_thumbprint(&b64url_decode(b64)?).ok()
}
