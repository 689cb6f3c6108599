//! Authorization server operations. Each public method is one endpoint and
//! writes one audit record.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use radaa_engine::{is_elevated, Action, Stage};
use radaa_persist::{is_valid_redirect_uri, Namespace, StoreError, Update};
use radaa_token::encoding::random_id;
use radaa_token::{
    make_pkce_challenge, seal_envelope, sign_token, verify_pkce, verify_token, AcceptedProof,
    PkceChallenge, PkceError, RiskClass, TokenClaims, VerificationKey,
};

use crate::context::RequestMeta;
use crate::deployment::{Deployment, ProofFailure};
use crate::error::ApiError;
use crate::federation::FederationError;
use crate::records::*;

pub const REQUEST_URI_PREFIX: &str = "urn:radaa:request:";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct ParParams {
    pub client_id: Option<String>,
    pub scope: Option<String>,
    pub redirect_uri: Option<String>,
    pub code_challenge: Option<String>,
    pub code_challenge_method: Option<String>,
    pub state: Option<String>,
    /// Target resource server (audience). Defaults to the first configured one.
    pub resource: Option<String>,
    /// Never accepted from clients; request references are minted here only.
    pub request_uri: Option<String>,
    pub request: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParResponse {
    pub request_uri: String,
    pub expires_in: i64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct AuthorizeParams {
    pub request_uri: Option<String>,
    pub client_id: Option<String>,
    pub idp: Option<String>,
    pub username: Option<String>,
    pub password: Option<String>,
    /// Space-separated approved scopes.
    pub consent: Option<String>,
    /// A satisfied step-up challenge id.
    pub step_up: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorizeResponse {
    pub code: String,
    pub iss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    pub redirect_uri: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct TokenParams {
    pub grant_type: Option<String>,
    pub code: Option<String>,
    pub code_verifier: Option<String>,
    pub client_id: Option<String>,
    pub step_up: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenResponse {
    pub access_token: String,
    pub token_type: String,
    pub expires_in: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refresh_token: Option<String>,
    pub granted_scopes: BTreeSet<String>,
    /// True when `access_token` is a sealed (encrypted) envelope.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sealed: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct RefreshParams {
    pub refresh_token: Option<String>,
    pub client_id: Option<String>,
    pub step_up: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct RevokeParams {
    pub token: Option<String>,
    pub client_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevokeResponse {
    pub acknowledged: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct IntrospectParams {
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntrospectResponse {
    pub active: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claims: Option<TokenClaims>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct ExchangeParams {
    pub subject_token: Option<String>,
    pub audience: Option<String>,
    pub client_id: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct StepUpParams {
    pub challenge_id: Option<String>,
    pub answer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepUpResponse {
    pub result: String,
}

/// Client metadata for runtime registration.
#[derive(Debug, Clone, Default)]
pub struct ClientMetadata {
    pub client_id: String,
    pub display_name: String,
    pub redirect_uris: BTreeSet<String>,
    pub scopes: BTreeSet<String>,
}

/// Public key plus its signature over a server-issued registration nonce.
#[derive(Debug, Clone)]
pub struct PossessionProof {
    pub public_key: Vec<u8>,
    pub nonce: String,
    pub signature: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registration {
    pub record: ClientRecord,
    /// Set when a key was offered but its possession proof failed.
    pub warning: Option<String>,
}

fn required<'a>(v: &'a Option<String>, name: &str) -> Result<&'a str, ApiError> {
    v.as_deref()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ApiError::bad_request("invalid_request", format!("missing parameter {name}")))
}

/// RFC 6749 scope-token characters, minus angle brackets.
fn parse_scopes(raw: &str) -> Result<BTreeSet<String>, ApiError> {
    let ok = |s: &str| s.bytes().all(|b| (0x21..=0x7e).contains(&b) && !matches!(b, b'"' | b'\\' | b'<' | b'>'));
    let scopes: BTreeSet<String> = raw.split_whitespace().map(str::to_string).collect();
    if scopes.iter().any(|s| !ok(s)) {
        return Err(ApiError::bad_request("invalid_scope", "scope contains disallowed characters"));
    }
    Ok(scopes)
}

/// Opaque client state: printable ASCII without markup characters.
fn valid_state(state: &str) -> bool {
    state.len() <= 512
        && state
            .bytes()
            .all(|b| (0x21..=0x7e).contains(&b) && !matches!(b, b'<' | b'>' | b'"' | b'\'' | b'`' | b'\\'))
}

fn proof_error(failure: ProofFailure) -> ApiError {
    match failure {
        ProofFailure::Missing => ApiError::unauthorized("invalid_client", "sender proof required"),
        ProofFailure::Invalid(e) => ApiError::unauthorized(e.code(), format!("sender proof rejected: {e}")),
    }
}

#[derive(Debug, Clone)]
pub struct AuthServer {
    d: Deployment,
}

impl AuthServer {
    pub fn new(deployment: Deployment) -> Self {
        Self { d: deployment }
    }

    pub fn deployment(&self) -> &Deployment {
        &self.d
    }

    pub fn issuer(&self) -> &str {
        self.d.issuer()
    }

    /// Absolute URI of an endpoint path, as bound into sender proofs.
    pub fn endpoint(&self, path: &str) -> String {
        format!("{}{}", self.d.issuer(), path)
    }

    fn load_client(&self, client_id: &str) -> Result<ClientRecord, ApiError> {
        self.d
            .client(client_id)?
            .ok_or_else(|| ApiError::unauthorized("invalid_client", "unknown client"))
    }

    /// TAL 1 clients prove possession of their registered key; TAL 0 clients
    /// cannot authenticate.
    fn authenticate_client(
        &self,
        client: &ClientRecord,
        proof: Option<&str>,
        path: &str,
        token_wire: Option<&str>,
    ) -> Result<Option<AcceptedProof>, ApiError> {
        let Some(tp) = client.thumbprint() else {
            return Ok(None);
        };
        self.d
            .check_proof(proof, "POST", &self.endpoint(path), token_wire, &tp)
            .map_err(proof_error)
    }

    /// One-time nonce a registering client signs to prove key possession.
    pub fn registration_nonce(&self) -> Result<String, ApiError> {
        let nonce = random_id(16);
        self.d
            .store()
            .checked_put(Namespace::Nonces, &nonce, None, serde_json::json!({ "issued": self.d.now() }))?;
        Ok(nonce)
    }

    pub fn register_client(
        &self,
        meta: ClientMetadata,
        key: Option<PossessionProof>,
    ) -> Result<Registration, ApiError> {
        self.d.audited("register", |trace| {
            trace.actor = meta.client_id.clone();
            if meta.client_id.is_empty() {
                return Err(ApiError::bad_request("invalid_client_metadata", "client_id required"));
            }
            if meta.redirect_uris.is_empty() || !meta.redirect_uris.iter().all(|u| is_valid_redirect_uri(u)) {
                return Err(ApiError::bad_request(
                    "invalid_redirect_uri",
                    "at least one absolute http(s) redirect uri without fragment required",
                ));
            }
            if meta.scopes.is_empty() {
                return Err(ApiError::bad_request("invalid_client_metadata", "scopes required"));
            }
            let mut warning = None;
            let public_key = match key {
                None => None,
                Some(p) => match self.check_possession(&p) {
                    Ok(()) => Some(radaa_token::encoding::b64url(&p.public_key)),
                    Err(reason) => {
                        tracing::warn!(client_id = %meta.client_id, reason, "key possession proof failed; registering at TAL 0");
                        warning = Some(reason.to_string());
                        None
                    }
                },
            };
            let record = ClientRecord {
                client_id: meta.client_id.clone(),
                display_name: meta.display_name,
                redirect_uris: meta.redirect_uris,
                scopes: meta.scopes,
                tal: u8::from(public_key.is_some()),
                public_key,
                sealing_key: None,
            };
            match self.d.store().checked_put_typed(Namespace::Clients, &record.client_id, None, &record) {
                Ok(_) => Ok(Registration { record, warning }),
                Err(StoreError::Conflict { .. }) => Err(ApiError::bad_request("invalid_client_metadata", "client_id already registered")),
                Err(e) => Err(e.into()),
            }
        })
    }

    fn check_possession(&self, p: &PossessionProof) -> Result<(), &'static str> {
        let vk = VerificationKey::ed25519(&p.public_key).map_err(|_| "malformed public key")?;
        // nonce is single use whether or not the signature verifies
        let store = self.d.store();
        let cur = store.get(Namespace::Nonces, &p.nonce).ok_or("unknown or spent nonce")?;
        if cur.value.get("spent").is_some() {
            return Err("unknown or spent nonce");
        }
        store
            .checked_put(Namespace::Nonces, &p.nonce, Some(cur.version), serde_json::json!({ "spent": true }))
            .map_err(|_| "unknown or spent nonce")?;
        vk.verify(p.nonce.as_bytes(), &p.signature).map_err(|_| "nonce signature invalid")
    }

    pub fn par(&self, params: &ParParams, proof: Option<&str>, meta: &RequestMeta) -> Result<ParResponse, ApiError> {
        self.d.audited("par", |trace| {
            let client_id = required(&params.client_id, "client_id")?;
            trace.actor = client_id.to_string();
            let client = self.load_client(client_id)?;
            self.authenticate_client(&client, proof, "/par", None)?;
            // never dereferenced, so rejected before it costs budget
            if params.request_uri.is_some() || params.request.is_some() {
                return Err(ApiError::bad_request(
                    "invalid_request_uri",
                    "request references are issued by this server only",
                ));
            }
            if self.d.mitigations().rate_limit && !self.d.charge_par(client_id)? {
                return Err(ApiError::new(429, "rate_limited", "pushed authorization request budget exhausted"));
            }
            let redirect_uri = required(&params.redirect_uri, "redirect_uri")?;
            if !client.redirect_uris.contains(redirect_uri) {
                return Err(ApiError::bad_request("invalid_redirect", "redirect_uri is not registered"));
            }
            let pkce = PkceChallenge::parse(
                required(&params.code_challenge_method, "code_challenge_method")?,
                required(&params.code_challenge, "code_challenge")?,
            )
            .map_err(|e| match e {
                PkceError::UnsupportedMethod => ApiError::bad_request("invalid_request", "only S256 is supported"),
                _ => ApiError::bad_request("invalid_request", "malformed code_challenge"),
            })?;
            let scopes = parse_scopes(required(&params.scope, "scope")?)?;
            if !scopes.is_subset(&client.scopes) {
                return Err(ApiError::bad_request("invalid_scope", "scope not registered for client"));
            }
            let audience = match params.resource.as_deref() {
                Some(r) => r.to_string(),
                None => self.d.resource_server_ids().into_iter().next().ok_or_else(|| {
                    ApiError::bad_request("invalid_target", "no resource server configured")
                })?,
            };
            let rs = self
                .d
                .resource_entry(&audience)
                .ok_or_else(|| ApiError::bad_request("invalid_target", "unknown resource"))?;
            if !scopes.is_subset(&rs.config.scopes) {
                return Err(ApiError::bad_request("invalid_scope", "scope not offered by resource"));
            }
            if let Some(s) = &params.state {
                if !valid_state(s) {
                    return Err(ApiError::bad_request("invalid_request", "state contains disallowed characters"));
                }
            }
            let subject = format!("client:{client_id}");
            let risk = self.d.assess(trace, &subject, client_id, client.tal, meta, Stage::Authn, &scopes)?;
            if matches!(risk.decision.action, Action::Deny | Action::DenyAndRevoke) {
                self.d.observe_attack(risk.assessment.features);
                return Err(ApiError::forbidden("risk_denied", "request denied by risk policy"));
            }
            let now = self.d.now();
            let lifetime = self.d.config().lifetimes.par;
            let record = ParRecord {
                request_uri: format!("{REQUEST_URI_PREFIX}{}", random_id(16)),
                client_id: client_id.to_string(),
                pkce,
                redirect_uri: redirect_uri.to_string(),
                scopes,
                audience,
                state: params.state.clone(),
                created: now,
                expires_in: lifetime,
                used: false,
            };
            self.d.store().checked_put_typed(Namespace::Par, &record.request_uri, None, &record)?;
            self.d.note_seen(&subject, meta, true)?;
            Ok(ParResponse {
                request_uri: record.request_uri,
                expires_in: lifetime,
            })
        })
    }

    /// Ok when a satisfied challenge for `subject` is presented (and spends
    /// it); otherwise issues a fresh challenge and fails with its id.
    fn require_step_up(&self, subject: &str, presented: Option<&str>) -> Result<(), ApiError> {
        if let Some(id) = presented {
            let store = self.d.store();
            if let Some((ch, version)) = store.get_typed::<StepUpChallenge>(Namespace::StepUp, id)? {
                if ch.subject == subject {
                    match ch.state {
                        ChallengeState::Satisfied => {
                            let used = StepUpChallenge { state: ChallengeState::Used, ..ch };
                            if store.checked_put_typed(Namespace::StepUp, id, Some(version), &used).is_ok() {
                                return Ok(());
                            }
                        }
                        ChallengeState::Pending if ch.expires > self.d.now() => {
                            return Err(ApiError::step_up_required(id.to_string()));
                        }
                        _ => {}
                    }
                }
            }
        }
        Err(ApiError::step_up_required(self.d.new_challenge(subject)?))
    }

    pub fn authorize(&self, params: &AuthorizeParams, meta: &RequestMeta) -> Result<AuthorizeResponse, ApiError> {
        self.d.audited("authorize", |trace| {
            let request_uri = required(&params.request_uri, "request_uri")?;
            let store = self.d.store();
            let (par, version) = store
                .get_typed::<ParRecord>(Namespace::Par, request_uri)?
                .ok_or_else(|| ApiError::bad_request("invalid_request_uri", "unknown request_uri"))?;
            trace.actor = par.client_id.clone();
            if params.client_id.as_deref().is_some_and(|c| c != par.client_id) {
                return Err(ApiError::bad_request("invalid_request_uri", "request_uri belongs to another client"));
            }
            if par.used {
                return Err(ApiError::bad_request("one_time_use", "request_uri already used"));
            }
            if self.d.now() >= par.created + par.expires_in {
                return Err(ApiError::bad_request("expired_request_uri", "request_uri expired"));
            }
            let subject = self
                .d
                .federation()
                .authenticate_owner(
                    required(&params.idp, "idp")?,
                    required(&params.username, "username")?,
                    required(&params.password, "password")?,
                )
                .map_err(|e| match e {
                    FederationError::UnknownIdp(_) => ApiError::bad_request("unknown_idp", e.to_string()),
                    FederationError::BadCredentials => ApiError::unauthorized("access_denied", "authentication failed"),
                })?;
            trace.actor = subject.clone();
            let consent = parse_scopes(params.consent.as_deref().unwrap_or(""))?;
            let approved: BTreeSet<String> = consent.intersection(&par.scopes).cloned().collect();
            if approved.is_empty() {
                return Err(ApiError::bad_request("consent_required", "no requested scope was approved"));
            }
            let client = self.load_client(&par.client_id)?;
            let risk = self.d.assess(trace, &subject, &par.client_id, client.tal, meta, Stage::Authn, &approved)?;
            let mut step_up_satisfied = false;
            match risk.decision.action {
                Action::Proceed | Action::LimitScopes => {}
                Action::StepUp => {
                    self.require_step_up(&subject, params.step_up.as_deref())?;
                    step_up_satisfied = true;
                }
                Action::Deny | Action::DenyAndRevoke => {
                    return Err(ApiError::forbidden("risk_denied", "authorization denied by risk policy"));
                }
            }
            let used = ParRecord { used: true, ..par.clone() };
            if let Err(e) = store.checked_put_typed(Namespace::Par, request_uri, Some(version), &used) {
                return Err(match e {
                    StoreError::Conflict { .. } => ApiError::bad_request("one_time_use", "request_uri already used"),
                    other => other.into(),
                });
            }
            let code = CodeRecord {
                code: random_id(16),
                par_ref: request_uri.to_string(),
                client_id: par.client_id.clone(),
                subject: subject.clone(),
                scopes: approved,
                pkce: par.pkce.clone(),
                audience: par.audience.clone(),
                issued: self.d.now(),
                ttl: self.d.config().lifetimes.code,
                redeemed: false,
                step_up_satisfied,
            };
            store.checked_put_typed(Namespace::Codes, &code.code, None, &code)?;
            self.d.note_seen(&subject, meta, true)?;
            Ok(AuthorizeResponse {
                code: code.code,
                iss: self.d.issuer().to_string(),
                state: par.state,
                redirect_uri: par.redirect_uri,
            })
        })
    }

    pub fn complete_step_up(&self, params: &StepUpParams) -> Result<StepUpResponse, ApiError> {
        self.d.audited("step_up", |trace| {
            let id = required(&params.challenge_id, "challenge_id")?;
            let answer = params.answer.as_deref().unwrap_or("");
            let now = self.d.now();
            let result = self.d.store().update(Namespace::StepUp, id, |ch: Option<StepUpChallenge>| {
                let Some(ch) = ch else {
                    return Update::Abort(Err(ApiError::bad_request("unknown_challenge", "unknown challenge")));
                };
                if ch.state != ChallengeState::Pending {
                    return Update::Abort(Err(ApiError::bad_request("challenge_voided", "challenge no longer open")));
                }
                if now >= ch.expires {
                    return Update::Abort(Err(ApiError::bad_request("challenge_expired", "challenge expired")));
                }
                if ch.expected_answer == answer {
                    Update::Write(StepUpChallenge { state: ChallengeState::Satisfied, ..ch.clone() }, Ok(ch.subject))
                } else {
                    Update::Write(
                        StepUpChallenge { state: ChallengeState::Voided, ..ch.clone() },
                        Err(ApiError::forbidden("challenge_failed", "wrong answer; challenge voided")),
                    )
                }
            })?;
            let subject = result?;
            trace.actor = subject;
            Ok(StepUpResponse { result: "pass".into() })
        })
    }

    pub fn token(&self, params: &TokenParams, proof: Option<&str>, meta: &RequestMeta) -> Result<TokenResponse, ApiError> {
        self.d.audited("token", |trace| {
            if params.grant_type.as_deref().is_some_and(|g| g != "authorization_code") {
                return Err(ApiError::bad_request("unsupported_grant_type", "use /refresh or /exchange"));
            }
            let client_id = required(&params.client_id, "client_id")?;
            trace.actor = client_id.to_string();
            let client = self.load_client(client_id)?;
            let accepted = match self.authenticate_client(&client, proof, "/token", None) {
                Ok(a) => a,
                Err(e) => {
                    self.observe_rejection(&client, meta);
                    return Err(e);
                }
            };
            let code_id = required(&params.code, "code")?;
            let store = self.d.store();
            let invalid = |why: &str| ApiError::bad_request("invalid_grant", why.to_string());
            let (code, version) = store
                .get_typed::<CodeRecord>(Namespace::Codes, code_id)?
                .ok_or_else(|| invalid("unknown code"))?;
            if code.client_id != client_id {
                return Err(invalid("code was issued to another client"));
            }
            if code.redeemed {
                return Err(invalid("code already redeemed"));
            }
            if self.d.now() >= code.issued + code.ttl {
                return Err(invalid("code expired"));
            }
            if self.d.mitigations().pkce {
                let verifier = params.code_verifier.as_deref().unwrap_or("");
                if !verify_pkce(verifier, &code.pkce).unwrap_or(false) {
                    self.observe_rejection(&client, meta);
                    return Err(invalid("code_verifier does not match challenge"));
                }
            }
            let granted: BTreeSet<String> = if client.tal == 0 {
                code.scopes.iter().filter(|s| !is_elevated(s)).cloned().collect()
            } else {
                code.scopes.clone()
            };
            if granted.is_empty() {
                return Err(ApiError::bad_request("invalid_scope", "no scope grantable at this trust level"));
            }
            let risk = self.d.assess(trace, &code.subject, client_id, client.tal, meta, Stage::TokenIssue, &granted)?;
            match risk.decision.action {
                Action::Proceed | Action::LimitScopes => {}
                Action::StepUp if code.step_up_satisfied => {}
                Action::StepUp => self.require_step_up(&code.subject, params.step_up.as_deref())?,
                Action::Deny | Action::DenyAndRevoke => {
                    return Err(ApiError::forbidden("risk_denied", "issuance denied by risk policy"));
                }
            }
            let redeemed = CodeRecord { redeemed: true, ..code.clone() };
            if let Err(e) = store.checked_put_typed(Namespace::Codes, code_id, Some(version), &redeemed) {
                return Err(match e {
                    StoreError::Conflict { .. } => invalid("code already redeemed"),
                    other => other.into(),
                });
            }
            let cnf = accepted.map(|a| a.thumbprint).or_else(|| client.thumbprint());
            let response = self.issue(
                &client,
                &code.subject,
                granted,
                &code.audience,
                cnf,
                risk.assessment.class,
                None,
                None,
            )?;
            self.d.note_seen(&code.subject, meta, false)?;
            Ok(response)
        })
    }

    fn observe_rejection(&self, client: &ClientRecord, meta: &RequestMeta) {
        if let Some(f) = self.d.features_of(&format!("client:{}", client.client_id), &client.client_id, client.tal, meta) {
            self.d.observe_attack(f);
        }
    }

    /// Signs a new access token (and, at TAL 1, a refresh token) under
    /// `grant_id`, creating the grant when absent.
    #[allow(clippy::too_many_arguments)]
    fn issue(
        &self,
        client: &ClientRecord,
        subject: &str,
        scopes: BTreeSet<String>,
        audience: &str,
        cnf: Option<String>,
        risk_class: RiskClass,
        grant_id: Option<String>,
        max_exp: Option<i64>,
    ) -> Result<TokenResponse, ApiError> {
        let now = self.d.now();
        let tal = client.tal;
        let lifetimes = self.d.config().lifetimes;
        let mut exp = now + lifetimes.access_for(tal);
        if let Some(cap) = max_exp {
            exp = exp.min(cap);
        }
        let claims = TokenClaims {
            iss: self.d.issuer().to_string(),
            sub: subject.to_string(),
            aud: audience.to_string(),
            client_id: client.client_id.clone(),
            scope: scopes.clone(),
            iat: now,
            exp,
            jti: radaa_token::encoding::new_jti(),
            cnf_thumbprint: if tal >= 1 { cnf.clone() } else { None },
            tal,
            risk_class,
        };
        let signed = sign_token(&claims, &self.d.0.signing_key)
            .map_err(|e| ApiError::internal(format!("signing failed: {e}")))?;

        let store = self.d.store();
        let grant_id = grant_id.unwrap_or_else(|| random_id(12));
        let refresh = (tal >= 1 && max_exp.is_none()).then(|| random_id(16));
        store.checked_put_typed(
            Namespace::Tokens,
            &access_key(&claims.jti),
            None,
            &AccessRecord {
                grant_id: grant_id.clone(),
                client_id: client.client_id.clone(),
                exp,
                risk_class,
            },
        )?;
        if let Some(id) = &refresh {
            store.checked_put_typed(
                Namespace::Tokens,
                &refresh_key(id),
                None,
                &RefreshRecord {
                    grant_id: grant_id.clone(),
                    client_id: client.client_id.clone(),
                    subject: subject.to_string(),
                    scopes: scopes.clone(),
                    audience: audience.to_string(),
                    cnf_thumbprint: claims.cnf_thumbprint.clone(),
                    exp: now + lifetimes.refresh,
                    state: RefreshState::Active,
                    rotated_at: None,
                },
            )?;
        }
        let revoked = store.update(Namespace::Grants, &grant_id, |g: Option<GrantRecord>| {
            let mut g = g.unwrap_or_else(|| GrantRecord {
                client_id: client.client_id.clone(),
                subject: subject.to_string(),
                ..GrantRecord::default()
            });
            g.access_jtis.push(claims.jti.clone());
            g.refresh_ids.extend(refresh.clone());
            let revoked = g.revoked;
            Update::Write(g, revoked)
        })?;
        if revoked {
            // grant was revoked concurrently; what was just issued dies with it
            self.d.revoke_grant(&grant_id, "grant revoked")?;
            return Err(ApiError::bad_request("invalid_grant", "grant revoked"));
        }

        let (access_token, sealed) = match self.d.resource_entry(audience).and_then(|rs| rs.sealing_key.clone()) {
            Some(key) if max_exp.is_some() => {
                let sealed = seal_envelope(&signed, &key)
                    .map_err(|e| ApiError::internal(format!("sealing failed: {e}")))?;
                (sealed.to_wire(), true)
            }
            _ => (signed.into_string(), false),
        };
        Ok(TokenResponse {
            access_token,
            token_type: if claims.cnf_thumbprint.is_some() { "radaa-pop" } else { "bearer" }.into(),
            expires_in: exp - now,
            refresh_token: refresh,
            granted_scopes: scopes,
            sealed,
        })
    }

    pub fn refresh(&self, params: &RefreshParams, proof: Option<&str>, meta: &RequestMeta) -> Result<TokenResponse, ApiError> {
        self.d.audited("refresh", |trace| {
            let client_id = required(&params.client_id, "client_id")?;
            trace.actor = client_id.to_string();
            let client = self.load_client(client_id)?;
            let accepted = self.authenticate_client(&client, proof, "/refresh", None)?;
            let id = required(&params.refresh_token, "refresh_token")?;
            let store = self.d.store();
            let invalid = |why: &str| ApiError::bad_request("invalid_grant", why.to_string());
            let (rt, version) = store
                .get_typed::<RefreshRecord>(Namespace::Tokens, &refresh_key(id))?
                .ok_or_else(|| invalid("unknown refresh token"))?;
            if rt.client_id != client_id {
                return Err(invalid("refresh token was issued to another client"));
            }
            match rt.state {
                RefreshState::Active => {}
                // a presentation in the same second as the rotation lost a race
                RefreshState::Rotated if rt.rotated_at == Some(self.d.now()) => {
                    return Err(invalid("refresh token already used"));
                }
                RefreshState::Rotated => {
                    self.d.revoke_grant(&rt.grant_id, "refresh token reuse")?;
                    return Err(invalid("refresh token reuse; grant revoked"));
                }
                RefreshState::Revoked => return Err(invalid("refresh token revoked")),
            }
            if self.d.now() >= rt.exp {
                return Err(invalid("refresh token expired"));
            }
            let risk = self.d.assess(trace, &rt.subject, client_id, client.tal, meta, Stage::TokenIssue, &rt.scopes)?;
            match risk.decision.action {
                Action::Proceed | Action::LimitScopes => {}
                Action::StepUp => self.require_step_up(&rt.subject, params.step_up.as_deref())?,
                Action::Deny | Action::DenyAndRevoke => {
                    return Err(ApiError::forbidden("risk_denied", "refresh denied by risk policy"));
                }
            }
            let rotated = RefreshRecord {
                state: RefreshState::Rotated,
                rotated_at: Some(self.d.now()),
                ..rt.clone()
            };
            match store.checked_put_typed(Namespace::Tokens, &refresh_key(id), Some(version), &rotated) {
                Ok(_) => {}
                Err(StoreError::Conflict { .. }) => return Err(invalid("refresh token already used")),
                Err(e) => return Err(e.into()),
            }
            let cnf = accepted.map(|a| a.thumbprint).or(rt.cnf_thumbprint.clone());
            let response = self.issue(
                &client,
                &rt.subject,
                rt.scopes.clone(),
                &rt.audience,
                cnf,
                risk.assessment.class,
                Some(rt.grant_id.clone()),
                None,
            )?;
            self.d.note_seen(&rt.subject, meta, false)?;
            Ok(response)
        })
    }

    /// Identifies the caller of /revoke and /introspect: a resource server by
    /// its key, or a client (by key at TAL 1, by id alone at TAL 0).
    fn identify_caller(
        &self,
        client_id: Option<&str>,
        proof: Option<&str>,
        path: &str,
    ) -> Result<Caller, ApiError> {
        if let Some(wire) = proof {
            if let Ok(p) = radaa_token::SenderProof::parse(wire) {
                let tp = p.thumbprint();
                let rs = self
                    .d
                    .0
                    .resource_servers
                    .values()
                    .find(|rs| rs.thumbprint.as_deref() == Some(tp.as_str()));
                if let Some(rs) = rs {
                    self.d
                        .check_proof(Some(wire), "POST", &self.endpoint(path), None, &tp)
                        .map_err(proof_error)?;
                    return Ok(Caller::ResourceServer(rs.config.id.clone()));
                }
            }
        }
        let client_id = client_id.ok_or_else(|| ApiError::unauthorized("invalid_client", "caller not authenticated"))?;
        let client = self.load_client(client_id)?;
        self.authenticate_client(&client, proof, path, None)?;
        Ok(Caller::Client(client.client_id))
    }

    pub fn revoke(&self, params: &RevokeParams, proof: Option<&str>) -> Result<RevokeResponse, ApiError> {
        self.d.audited("revoke", |trace| {
            let caller = self.identify_caller(params.client_id.as_deref(), proof, "/revoke")?;
            trace.actor = caller.id().to_string();
            let token = required(&params.token, "token")?;
            let store = self.d.store();
            if let Ok(claims) = verify_token(token, self.d.verification_keys()) {
                if !caller.may_manage(&claims.client_id, &claims.aud) {
                    return Err(ApiError::forbidden("unauthorized_client", "token was not issued to caller"));
                }
                self.d.revoke_jti(&claims.jti, "revoked by request")?;
            } else if let Some((rt, _)) = store.get_typed::<RefreshRecord>(Namespace::Tokens, &refresh_key(token))? {
                if !caller.may_manage(&rt.client_id, &rt.audience) {
                    return Err(ApiError::forbidden("unauthorized_client", "token was not issued to caller"));
                }
                self.d.revoke_grant(&rt.grant_id, "refresh token revoked")?;
            }
            Ok(RevokeResponse { acknowledged: true })
        })
    }

    pub fn introspect(&self, params: &IntrospectParams, proof: Option<&str>) -> Result<IntrospectResponse, ApiError> {
        self.d.audited("introspect", |trace| {
            let caller = match self.identify_caller(None, proof, "/introspect")? {
                Caller::ResourceServer(id) => id,
                Caller::Client(_) => unreachable!("no client id supplied"),
            };
            trace.actor = caller;
            let token = required(&params.token, "token")?;
            Ok(match verify_token(token, self.d.verification_keys()) {
                Ok(claims) if self.d.now() < claims.exp && !self.d.is_revoked(&claims.jti) => IntrospectResponse {
                    active: true,
                    claims: Some(claims),
                },
                _ => IntrospectResponse { active: false, claims: None },
            })
        })
    }

    pub fn exchange(&self, params: &ExchangeParams, proof: Option<&str>, meta: &RequestMeta) -> Result<TokenResponse, ApiError> {
        self.d.audited("exchange", |trace| {
            let client_id = required(&params.client_id, "client_id")?;
            trace.actor = client_id.to_string();
            let client = self.load_client(client_id)?;
            let wire = required(&params.subject_token, "subject_token")?;
            let claims = verify_token(wire, self.d.verification_keys())
                .map_err(|_| ApiError::bad_request("invalid_grant", "subject_token is not a valid token"))?;
            if self.d.now() >= claims.exp || self.d.is_revoked(&claims.jti) {
                return Err(ApiError::bad_request("invalid_grant", "subject_token is not active"));
            }
            if claims.client_id != client_id {
                return Err(ApiError::bad_request("invalid_grant", "subject_token was issued to another client"));
            }
            if let Some(cnf) = &claims.cnf_thumbprint {
                self.d
                    .check_proof(proof, "POST", &self.endpoint("/exchange"), Some(wire), cnf)
                    .map_err(proof_error)?;
            }
            let audience = required(&params.audience, "audience")?;
            let target = self
                .d
                .resource_entry(audience)
                .ok_or_else(|| ApiError::bad_request("invalid_target", "unknown audience"))?;
            let scopes: BTreeSet<String> = claims.scope.intersection(&target.config.scopes).cloned().collect();
            if scopes.is_empty() {
                return Err(ApiError::bad_request("invalid_scope", "empty scope intersection with audience"));
            }
            let risk = self.d.assess(trace, &claims.sub, client_id, client.tal, meta, Stage::TokenIssue, &scopes)?;
            match risk.decision.action {
                Action::Proceed | Action::LimitScopes => {}
                Action::StepUp => {
                    return Err(ApiError::step_up_required(self.d.new_challenge(&claims.sub)?));
                }
                Action::Deny | Action::DenyAndRevoke => {
                    return Err(ApiError::forbidden("risk_denied", "exchange denied by risk policy"));
                }
            }
            let grant_id = self
                .d
                .store()
                .get_typed::<AccessRecord>(Namespace::Tokens, &access_key(&claims.jti))?
                .map(|(a, _)| a.grant_id);
            self.issue(
                &client,
                &claims.sub,
                scopes,
                audience,
                claims.cnf_thumbprint.clone(),
                risk.assessment.class,
                grant_id,
                Some(claims.exp),
            )
        })
    }

    /// Verifier/challenge pair helper for in-process clients.
    pub fn pkce_pair() -> (String, PkceChallenge) {
        let verifier = radaa_token::pkce::new_verifier();
        let challenge = make_pkce_challenge(&verifier).expect("generated verifier is valid");
        (verifier, challenge)
    }
}

enum Caller {
    ResourceServer(String),
    Client(String),
}

impl Caller {
    fn id(&self) -> &str {
        match self {
            Caller::ResourceServer(id) | Caller::Client(id) => id,
        }
    }

    fn may_manage(&self, client_id: &str, audience: &str) -> bool {
        match self {
            Caller::ResourceServer(id) => id == audience,
            Caller::Client(id) => id == client_id,
        }
    }
}
