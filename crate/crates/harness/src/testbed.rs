//! A seeded in-process deployment reached over its HTTP routers, plus the
//! scripted clients that talk to it.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, HeaderMap, Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use radaa_persist::{ClientConfig, Config, IdpConfig, IdpUser, ResourceConfig, ResourceServerConfig};
use radaa_server::context::SENDER_PROOF_HEADER;
use radaa_server::{
    auth_router, resource_router, Deployment, DeploymentError, DeploymentOptions, Mitigations,
    RequestMeta,
};
use radaa_token::encoding::b64url;
use radaa_token::{make_pkce_challenge, make_sender_proof, pkce, KeyPair, ManualClock};

pub const ISSUER: &str = "https://as.radaa.test";
pub const ROGUE_ISSUER: &str = "https://as.attacker.test";
pub const RS_MAIN: &str = "https://rs.radaa.test";
pub const RS_PARTNER: &str = "https://partner.radaa.test";
pub const REDIRECT: &str = "https://app.example/cb";
pub const ATTACKER_REDIRECT: &str = "https://attacker.example/cb";
pub const START_TIME: i64 = 1_700_000_000;

pub const HONEST_CLIENT: &str = "honest-app";
pub const PUBLIC_CLIENT: &str = "public-app";
pub const ATTACKER_CLIENT: &str = "attacker-app";

pub fn honest_key() -> KeyPair {
    KeyPair::ed25519_from_seed(HONEST_CLIENT, &[1; 32]).expect("32-byte seed")
}

pub fn attacker_key() -> KeyPair {
    KeyPair::ed25519_from_seed(ATTACKER_CLIENT, &[9; 32]).expect("32-byte seed")
}

pub fn rs_key() -> KeyPair {
    KeyPair::ed25519_from_seed("rs-main", &[5; 32]).expect("32-byte seed")
}

pub fn victim_meta() -> RequestMeta {
    RequestMeta::from_values(Some("192.0.2.10"), Some("48.85,2.35"), Some("alice-laptop"), None)
        .expect("static meta parses")
}

/// Unlisted address, own device, no location: LOW risk, so only the
/// protocol mitigations stand between the attacker and the payload.
pub fn attacker_meta() -> RequestMeta {
    RequestMeta::from_values(Some("198.51.100.66"), None, Some("mallory-box"), None).expect("static meta parses")
}

/// One TAL 1 honest client, one TAL 0 public client and one TAL 1 client the
/// attacker controls; two resource servers.
pub fn seeded_config() -> Config {
    let mut c = Config::minimal(ISSUER);
    c.identity_providers = vec![IdpConfig {
        idp_id: "corp".into(),
        users: vec![
            IdpUser { username: "alice".into(), secret: "alice-pw".into(), subject: "alice".into() },
            IdpUser { username: "mallory".into(), secret: "mallory-pw".into(), subject: "mallory".into() },
        ],
    }];
    let scopes = || ["data:read", "admin:elevated"].map(String::from).into();
    let client = |id: &str, redirect: &str, key: Option<&KeyPair>| ClientConfig {
        client_id: id.into(),
        display_name: id.into(),
        redirect_uris: [redirect.to_string()].into(),
        scopes: scopes(),
        public_key_b64: key.map(|k| b64url(&k.public_key)),
    };
    c.clients = vec![
        client(HONEST_CLIENT, REDIRECT, Some(&honest_key())),
        client(PUBLIC_CLIENT, REDIRECT, None),
        client(ATTACKER_CLIENT, ATTACKER_REDIRECT, Some(&attacker_key())),
    ];
    let resource = |path: &str, scope: &str| ResourceConfig {
        path: path.into(),
        required_scope: scope.into(),
        elevated: scope.ends_with(":elevated"),
        payload: format!("protected {path}"),
    };
    c.resource_servers = vec![
        ResourceServerConfig {
            id: RS_MAIN.into(),
            scopes: scopes(),
            sealing_key_b64: Some(b64url([7u8; 32])),
            public_key_b64: Some(b64url(&rs_key().public_key)),
            resources: vec![resource("data", "data:read"), resource("admin", "admin:elevated")],
        },
        ResourceServerConfig {
            id: RS_PARTNER.into(),
            scopes: ["data:read".to_string()].into(),
            sealing_key_b64: Some(b64url([8u8; 32])),
            public_key_b64: None,
            resources: vec![resource("data", "data:read")],
        },
    ];
    c
}

/// A response as a client sees it.
#[derive(Debug, Clone)]
pub struct Reply {
    pub status: u16,
    pub headers: HeaderMap,
    pub body: Value,
}

impl Reply {
    pub fn ok(&self) -> bool {
        (200..300).contains(&self.status)
    }

    /// The most specific error label: `reason` if present, else `error`.
    pub fn code(&self) -> String {
        if self.ok() {
            return "ok".into();
        }
        self.body
            .get("reason")
            .or_else(|| self.body.get("error"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("http_{}", self.status))
    }

    pub fn str(&self, field: &str) -> Option<String> {
        self.body.get(field).and_then(Value::as_str).map(str::to_string)
    }

    pub fn header(&self, name: impl header::AsHeaderName) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

/// An axum router reached in-process.
#[derive(Clone)]
pub struct Endpoint {
    base: String,
    router: Router,
}

impl Endpoint {
    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn send(&self, req: Request<Body>) -> Reply {
        let res = match self.router.clone().oneshot(req).await {
            Ok(res) => res,
            Err(never) => match never {},
        };
        let status = res.status().as_u16();
        let headers = res.headers().clone();
        let bytes = res.into_body().collect().await.map(|b| b.to_bytes()).unwrap_or_default();
        let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        Reply { status, headers, body }
    }

    pub async fn request(
        &self,
        method: Method,
        path: &str,
        form: Option<&[(&str, &str)]>,
        headers: &[(&str, String)],
    ) -> Reply {
        let mut b = Request::builder().method(method).uri(path);
        for (k, v) in headers {
            b = b.header(*k, v);
        }
        let body = match form {
            Some(pairs) => {
                b = b.header(header::CONTENT_TYPE, "application/x-www-form-urlencoded");
                Body::from(encode(pairs))
            }
            None => Body::empty(),
        };
        let req = b.body(body).expect("request parts are valid");
        self.send(req).await
    }
}

pub fn encode(pairs: &[(&str, &str)]) -> String {
    let mut s = url::form_urlencoded::Serializer::new(String::new());
    for (k, v) in pairs {
        s.append_pair(k, v);
    }
    s.finish()
}

/// One isolated deployment: fresh in-memory store, manual clock, seeded clients.
pub struct Testbed {
    pub deployment: Deployment,
    pub clock: Arc<ManualClock>,
    pub mitigations: Mitigations,
    pub auth: Endpoint,
    pub resources: BTreeMap<String, Endpoint>,
}

impl Testbed {
    pub fn new(mitigations: Mitigations) -> Result<Self, DeploymentError> {
        Self::with_config(seeded_config(), mitigations)
    }

    pub fn with_config(config: Config, mitigations: Mitigations) -> Result<Self, DeploymentError> {
        let clock = Arc::new(ManualClock::new(START_TIME));
        let mut opts = DeploymentOptions::in_memory(clock.clone());
        opts.signing_key = KeyPair::ed25519_from_seed("as-signing", &[3; 32]).expect("32-byte seed");
        opts.mitigations = mitigations;
        let deployment = Deployment::new(config, opts)?;
        let auth = Endpoint { base: ISSUER.into(), router: auth_router(deployment.auth_server()) };
        let mut resources = BTreeMap::new();
        for id in deployment.resource_server_ids() {
            let rs = deployment.resource_server(&id).expect("listed id resolves");
            resources.insert(id.clone(), Endpoint { base: id, router: resource_router(rs) });
        }
        Ok(Self { deployment, clock, mitigations, auth, resources })
    }

    pub fn rs(&self, id: &str) -> &Endpoint {
        &self.resources[id]
    }

    pub fn now(&self) -> i64 {
        self.deployment.now()
    }

    pub fn honest(&self) -> Party<'_> {
        Party::new(self, HONEST_CLIENT, Some(honest_key()), victim_meta())
    }

    pub fn victim_public(&self) -> Party<'_> {
        Party::new(self, PUBLIC_CLIENT, None, victim_meta())
    }

    pub fn attacker(&self) -> Party<'_> {
        Party::new(self, ATTACKER_CLIENT, Some(attacker_key()), attacker_meta())
    }

    /// Asks the authorization server, as the main resource server, whether a
    /// token is still active.
    pub async fn is_active(&self, token: &str) -> bool {
        let proof = make_sender_proof("POST", &self.auth.url("/introspect"), None, &rs_key(), self.now())
            .expect("proof over static inputs");
        let r = self
            .auth
            .request(
                Method::POST,
                "/introspect",
                Some(&[("token", token)]),
                &[(SENDER_PROOF_HEADER, proof.as_str().to_string())],
            )
            .await;
        r.body.get("active").and_then(Value::as_bool).unwrap_or(false)
    }
}

/// An authorization in progress, as the client remembers it.
#[derive(Debug, Clone)]
pub struct Session {
    pub verifier: String,
    pub request_uri: String,
    pub state: String,
    /// Issuer the client believes it is talking to.
    pub expected_issuer: String,
}

/// A client application driven by a script: who it claims to be, which key it
/// holds (if any) and where its traffic appears to come from.
pub struct Party<'a> {
    pub tb: &'a Testbed,
    pub client_id: String,
    pub key: Option<KeyPair>,
    pub meta: RequestMeta,
}

impl<'a> Party<'a> {
    pub fn new(tb: &'a Testbed, client_id: &str, key: Option<KeyPair>, meta: RequestMeta) -> Self {
        Self { tb, client_id: client_id.into(), key, meta }
    }

    pub fn with_key(mut self, key: Option<KeyPair>) -> Self {
        self.key = key;
        self
    }

    pub fn with_client_id(mut self, client_id: &str) -> Self {
        self.client_id = client_id.into();
        self
    }

    fn headers(&self, proof: Option<String>) -> Vec<(&'static str, String)> {
        let mut h = self.meta.header_pairs();
        if let Some(p) = proof {
            h.push((SENDER_PROOF_HEADER, p));
        }
        h
    }

    pub fn proof(&self, method: &str, uri: &str, token: Option<&str>) -> Option<String> {
        self.key.as_ref().map(|k| {
            make_sender_proof(method, uri, token, k, self.tb.now())
                .expect("proof over valid inputs")
                .as_str()
                .to_string()
        })
    }

    pub async fn post_as(&self, path: &str, form: &[(&str, &str)]) -> Reply {
        let proof = self.proof("POST", &self.tb.auth.url(path), None);
        self.tb.auth.request(Method::POST, path, Some(form), &self.headers(proof)).await
    }

    /// Pushes an authorization request. `extra` is appended verbatim.
    pub async fn push(
        &self,
        scope: &str,
        redirect_uri: &str,
        resource: Option<&str>,
        state: &str,
        challenge: &str,
        extra: &[(&str, &str)],
    ) -> Reply {
        let mut form = vec![
            ("client_id", self.client_id.as_str()),
            ("scope", scope),
            ("redirect_uri", redirect_uri),
            ("code_challenge", challenge),
            ("code_challenge_method", "S256"),
            ("state", state),
        ];
        if let Some(r) = resource {
            form.push(("resource", r));
        }
        form.extend_from_slice(extra);
        self.post_as("/par", &form).await
    }

    /// Starts an authorization with a fresh PKCE pair.
    pub async fn start(&self, scope: &str, resource: Option<&str>) -> Result<Session, Reply> {
        let verifier = pkce::new_verifier();
        let challenge = make_pkce_challenge(&verifier).expect("generated verifier is valid");
        let state = radaa_token::encoding::random_id(8);
        let r = self.push(scope, redirect_for(&self.client_id), resource, &state, &challenge.challenge, &[]).await;
        match r.str("request_uri") {
            Some(request_uri) if r.ok() => Ok(Session { verifier, request_uri, state, expected_issuer: ISSUER.into() }),
            _ => Err(r),
        }
    }

    /// The resource owner signs in at the authorization server and consents.
    pub async fn authorize(&self, request_uri: &str, user: &str, password: &str, consent: &str) -> Reply {
        self.authorize_via("corp", request_uri, user, password, consent).await
    }

    pub async fn authorize_via(&self, idp: &str, request_uri: &str, user: &str, password: &str, consent: &str) -> Reply {
        let query = encode(&[
            ("request_uri", request_uri),
            ("client_id", &self.client_id),
            ("idp", idp),
            ("username", user),
            ("password", password),
            ("consent", consent),
        ]);
        self.tb
            .auth
            .request(Method::GET, &format!("/authorize?{query}"), None, &self.meta.header_pairs())
            .await
    }

    pub async fn redeem(&self, code: &str, verifier: &str) -> Reply {
        self.post_as(
            "/token",
            &[
                ("grant_type", "authorization_code"),
                ("code", code),
                ("code_verifier", verifier),
                ("client_id", &self.client_id),
            ],
        )
        .await
    }

    /// Calls a protected resource: PoP with a proof when the party holds a
    /// key, Bearer otherwise.
    pub async fn fetch(&self, rs: &str, path: &str, token: &str) -> Reply {
        let (req, _) = self.fetch_request(rs, path, token);
        self.tb.rs(rs).send(req).await
    }

    /// Builds (but does not send) a resource request, so it can be captured.
    pub fn fetch_request(&self, rs: &str, path: &str, token: &str) -> (Request<Body>, Option<String>) {
        let ep = self.tb.rs(rs);
        let uri = ep.url(&format!("/resource/{path}"));
        let proof = self.proof("GET", &uri, Some(token));
        let scheme = if proof.is_some() { "PoP" } else { "Bearer" };
        let mut b = Request::get(format!("/resource/{path}")).header(header::AUTHORIZATION, format!("{scheme} {token}"));
        for (k, v) in self.headers(proof.clone()) {
            b = b.header(k, v);
        }
        (b.body(Body::empty()).expect("request parts are valid"), proof)
    }

    /// Runs the whole authorization code flow as `user` and returns the token
    /// response, or the step and reply where it stopped.
    pub async fn obtain_token(
        &self,
        user: &str,
        password: &str,
        scope: &str,
        resource: Option<&str>,
    ) -> Result<Reply, (&'static str, Reply)> {
        let s = self.start(scope, resource).await.map_err(|r| ("par", r))?;
        let auth = self.authorize(&s.request_uri, user, password, scope).await;
        if !auth.ok() {
            return Err(("authorize", auth));
        }
        if auth.str("iss").as_deref() != Some(s.expected_issuer.as_str()) && self.tb.mitigations.iss_check {
            return Err(("authorize", auth));
        }
        let code = auth.str("code").unwrap_or_default();
        let tok = self.redeem(&code, &s.verifier).await;
        if !tok.ok() {
            return Err(("token", tok));
        }
        Ok(tok)
    }
}

fn redirect_for(client_id: &str) -> &'static str {
    if client_id == ATTACKER_CLIENT {
        ATTACKER_REDIRECT
    } else {
        REDIRECT
    }
}
