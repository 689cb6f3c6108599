#![allow(dead_code)]

use std::sync::Arc;

use radaa_persist::{
    ClientConfig, Config, IdpConfig, IdpUser, ResourceConfig, ResourceServerConfig,
};
use radaa_server::*;
use radaa_token::encoding::b64url;
use radaa_token::{make_pkce_challenge, make_sender_proof, KeyPair, ManualClock};

pub const ISSUER: &str = "https://as.radaa.test";
pub const RS_MAIN: &str = "https://rs.radaa.test";
pub const RS_PARTNER: &str = "https://partner.radaa.test";
pub const RS_ARCHIVE: &str = "https://archive.radaa.test";
pub const T0: i64 = 1_700_000_000;
pub const REDIRECT: &str = "https://app.example/cb";
pub const BAD_IP: &str = "203.0.113.9";

pub fn key(kid: &str, seed: u8) -> KeyPair {
    KeyPair::ed25519_from_seed(kid, &[seed; 32]).unwrap()
}

pub fn honest_key() -> KeyPair {
    key("honest-app", 1)
}

pub fn attacker_key() -> KeyPair {
    key("attacker-app", 9)
}

pub fn rs_key() -> KeyPair {
    key("rs-main", 5)
}

fn client(id: &str, key: Option<&KeyPair>) -> ClientConfig {
    ClientConfig {
        client_id: id.into(),
        display_name: id.into(),
        redirect_uris: [REDIRECT.to_string()].into(),
        scopes: ["data:read", "admin:elevated"].map(String::from).into(),
        public_key_b64: key.map(|k| b64url(&k.public_key)),
    }
}

fn resource(path: &str, scope: &str) -> ResourceConfig {
    ResourceConfig {
        path: path.into(),
        required_scope: scope.into(),
        elevated: scope.ends_with(":elevated"),
        payload: format!("payload of {path}"),
    }
}

pub fn config() -> Config {
    let mut c = Config::minimal(ISSUER);
    c.ip_reputation.insert(BAD_IP.into(), 0.9);
    c.identity_providers = vec![
        IdpConfig {
            idp_id: "corp".into(),
            users: vec![
                IdpUser { username: "alice".into(), secret: "alice-pw".into(), subject: "alice".into() },
                IdpUser { username: "mallory".into(), secret: "mallory-pw".into(), subject: "mallory".into() },
            ],
        },
        IdpConfig {
            idp_id: "partner-idp".into(),
            users: vec![IdpUser { username: "alice@partner".into(), secret: "p-pw".into(), subject: "alice".into() }],
        },
    ];
    c.clients = vec![
        client("honest-app", Some(&honest_key())),
        client("public-app", None),
        client("attacker-app", Some(&attacker_key())),
    ];
    c.resource_servers = vec![
        ResourceServerConfig {
            id: RS_MAIN.into(),
            scopes: ["data:read", "admin:elevated"].map(String::from).into(),
            sealing_key_b64: Some(b64url([7u8; 32])),
            public_key_b64: Some(b64url(&rs_key().public_key)),
            resources: vec![resource("data", "data:read"), resource("admin", "admin:elevated")],
        },
        ResourceServerConfig {
            id: RS_PARTNER.into(),
            scopes: ["data:read", "partner:read"].map(String::from).into(),
            sealing_key_b64: Some(b64url([8u8; 32])),
            public_key_b64: None,
            resources: vec![resource("data", "data:read")],
        },
        ResourceServerConfig {
            id: RS_ARCHIVE.into(),
            scopes: ["archive:read"].map(String::from).into(),
            sealing_key_b64: None,
            public_key_b64: None,
            resources: vec![resource("old", "archive:read")],
        },
    ];
    c.validate().unwrap();
    c
}

pub fn honest_meta() -> RequestMeta {
    RequestMeta::from_values(Some("192.0.2.10"), Some("48.85,2.35"), Some("alice-laptop"), None).unwrap()
}

/// Bad IP reputation plus an unseen device: MEDIUM for a TAL 1 client.
pub fn medium_meta() -> RequestMeta {
    RequestMeta::from_values(Some(BAD_IP), Some("48.85,2.35"), Some("new-phone"), None).unwrap()
}

/// Everything wrong at once: HIGH.
pub fn high_meta() -> RequestMeta {
    RequestMeta::from_values(Some(BAD_IP), Some("-33.86,151.2"), Some("unknown-box"), Some("1")).unwrap()
}

pub struct Fx {
    pub d: Deployment,
    pub clock: Arc<ManualClock>,
    pub asrv: AuthServer,
}

#[derive(Debug)]
pub struct Flow {
    pub verifier: String,
    pub request_uri: String,
}

impl Fx {
    pub fn new() -> Self {
        Self::build(config(), Mitigations::default())
    }

    pub fn build(config: Config, mitigations: Mitigations) -> Self {
        let clock = Arc::new(ManualClock::new(T0));
        let mut opts = DeploymentOptions::in_memory(clock.clone());
        opts.mitigations = mitigations;
        let d = Deployment::new(config, opts).unwrap();
        let asrv = d.auth_server();
        Self { d, clock, asrv }
    }

    pub fn rs(&self, id: &str) -> ResourceServer {
        self.d.resource_server(id).unwrap()
    }

    pub fn now(&self) -> i64 {
        self.d.now()
    }

    pub fn proof(&self, key: &KeyPair, method: &str, uri: &str, token: Option<&str>) -> String {
        make_sender_proof(method, uri, token, key, self.now()).unwrap().as_str().to_string()
    }

    pub fn as_proof(&self, key: Option<&KeyPair>, path: &str) -> Option<String> {
        key.map(|k| self.proof(k, "POST", &format!("{ISSUER}{path}"), None))
    }

    pub fn par_with(
        &self,
        client_id: &str,
        key: Option<&KeyPair>,
        scope: &str,
        resource: Option<&str>,
        meta: &RequestMeta,
    ) -> Result<Flow, ApiError> {
        let verifier = radaa_token::pkce::new_verifier();
        let ch = make_pkce_challenge(&verifier).unwrap();
        let params = ParParams {
            client_id: Some(client_id.into()),
            scope: Some(scope.into()),
            redirect_uri: Some(REDIRECT.into()),
            code_challenge: Some(ch.challenge),
            code_challenge_method: Some("S256".into()),
            state: Some("xyz".into()),
            resource: resource.map(String::from),
            ..Default::default()
        };
        let r = self.asrv.par(&params, self.as_proof(key, "/par").as_deref(), meta)?;
        Ok(Flow { verifier, request_uri: r.request_uri })
    }

    pub fn authorize(&self, flow: &Flow, user: &str, pw: &str, consent: &str, meta: &RequestMeta) -> Result<AuthorizeResponse, ApiError> {
        self.authorize_at("corp", flow, user, pw, consent, None, meta)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn authorize_at(
        &self,
        idp: &str,
        flow: &Flow,
        user: &str,
        pw: &str,
        consent: &str,
        step_up: Option<&str>,
        meta: &RequestMeta,
    ) -> Result<AuthorizeResponse, ApiError> {
        self.asrv.authorize(
            &AuthorizeParams {
                request_uri: Some(flow.request_uri.clone()),
                idp: Some(idp.into()),
                username: Some(user.into()),
                password: Some(pw.into()),
                consent: Some(consent.into()),
                step_up: step_up.map(String::from),
                ..Default::default()
            },
            meta,
        )
    }

    pub fn token(&self, client_id: &str, key: Option<&KeyPair>, code: &str, verifier: &str, meta: &RequestMeta) -> Result<TokenResponse, ApiError> {
        self.asrv.token(
            &TokenParams {
                code: Some(code.into()),
                code_verifier: Some(verifier.into()),
                client_id: Some(client_id.into()),
                ..Default::default()
            },
            self.as_proof(key, "/token").as_deref(),
            meta,
        )
    }

    /// PAR, authorize as alice, redeem.
    pub fn issue(&self, client_id: &str, key: Option<&KeyPair>, scope: &str) -> TokenResponse {
        let m = honest_meta();
        let flow = self.par_with(client_id, key, scope, None, &m).unwrap();
        let auth = self.authorize(&flow, "alice", "alice-pw", scope, &m).unwrap();
        self.token(client_id, key, &auth.code, &flow.verifier, &m).unwrap()
    }

    pub fn access(&self, rs: &str, path: &str, token: &TokenResponse, key: Option<&KeyPair>, meta: &RequestMeta) -> Result<ResourceResponse, ApiError> {
        let rs = self.rs(rs);
        let (auth, proof) = match key {
            Some(k) => (
                format!("PoP {}", token.access_token),
                Some(self.proof(k, "GET", &rs.resource_uri(path), Some(&token.access_token))),
            ),
            None => (format!("Bearer {}", token.access_token), None),
        };
        rs.access("GET", path, Some(&auth), proof.as_deref(), meta)
    }

    pub fn introspect(&self, wire: &str) -> IntrospectResponse {
        let proof = self.proof(&rs_key(), "POST", &format!("{ISSUER}/introspect"), None);
        self.asrv
            .introspect(&IntrospectParams { token: Some(wire.into()) }, Some(&proof))
            .unwrap()
    }

    pub fn refresh(&self, client_id: &str, key: &KeyPair, rt: &str) -> Result<TokenResponse, ApiError> {
        self.asrv.refresh(
            &RefreshParams {
                refresh_token: Some(rt.into()),
                client_id: Some(client_id.into()),
                ..Default::default()
            },
            self.as_proof(Some(key), "/refresh").as_deref(),
            &honest_meta(),
        )
    }
}
