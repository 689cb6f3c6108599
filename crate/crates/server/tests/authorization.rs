mod common;

use std::collections::BTreeSet;

use common::*;
use radaa_persist::Namespace;
use radaa_server::*;
use radaa_token::{verify_token, KeyPair};

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn tal1_low_risk_flow_issues_bound_token() {
    let fx = Fx::new();
    let m = honest_meta();
    let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read admin:elevated", None, &m).unwrap();
    assert!(flow.request_uri.starts_with(REQUEST_URI_PREFIX));
    assert_eq!(flow.request_uri.len(), REQUEST_URI_PREFIX.len() + 22);

    let auth = fx.authorize(&flow, "alice", "alice-pw", "data:read admin:elevated", &m).unwrap();
    assert_eq!(auth.iss, ISSUER);
    assert_eq!(auth.state.as_deref(), Some("xyz"));

    let tok = fx.token("honest-app", Some(&honest_key()), &auth.code, &flow.verifier, &m).unwrap();
    assert_eq!(tok.expires_in, 900);
    assert_eq!(tok.token_type, "radaa-pop");
    assert!(tok.refresh_token.is_some());
    let claims = verify_token(&tok.access_token, fx.d.verification_keys()).unwrap();
    assert_eq!(claims.cnf_thumbprint, Some(honest_key().thumbprint().unwrap()));
    assert_eq!(claims.exp - claims.iat, 900);
    assert_eq!(claims.aud, RS_MAIN);
    assert_eq!(claims.sub, "alice");
    assert_eq!(claims.scope, set(&["data:read", "admin:elevated"]));
}

#[test]
fn tal0_gets_short_bearer_without_refresh_or_elevated_scopes() {
    let fx = Fx::new();
    let tok = fx.issue("public-app", None, "data:read admin:elevated");
    assert_eq!(tok.expires_in, 300);
    assert_eq!(tok.token_type, "bearer");
    assert_eq!(tok.refresh_token, None);
    assert_eq!(tok.granted_scopes, set(&["data:read"]));
    let claims = verify_token(&tok.access_token, fx.d.verification_keys()).unwrap();
    assert_eq!(claims.exp - claims.iat, 300);
    assert!(claims.cnf_thumbprint.is_none());
}

#[test]
fn lifetimes_follow_config() {
    let mut cfg = config();
    cfg.lifetimes.tal1_access = 600;
    cfg.lifetimes.tal0_access = 120;
    let fx = Fx::build(cfg, Mitigations::default());
    assert_eq!(fx.issue("honest-app", Some(&honest_key()), "data:read").expires_in, 600);
    assert_eq!(fx.issue("public-app", None, "data:read").expires_in, 120);
}

#[test]
fn scope_chain_is_narrowing() {
    let fx = Fx::new();
    let m = honest_meta();
    let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read admin:elevated", None, &m).unwrap();
    // consent names an unrequested scope and omits one requested
    let auth = fx.authorize(&flow, "alice", "alice-pw", "data:read partner:read", &m).unwrap();
    let tok = fx.token("honest-app", Some(&honest_key()), &auth.code, &flow.verifier, &m).unwrap();
    assert_eq!(tok.granted_scopes, set(&["data:read"]));

    let err = fx.par_with("honest-app", Some(&honest_key()), "data:read partner:read", None, &m).unwrap_err();
    assert_eq!(err.code, "invalid_scope");
}

#[test]
fn par_rejections() {
    let fx = Fx::new();
    let m = honest_meta();
    let base = ParParams {
        client_id: Some("public-app".into()),
        scope: Some("data:read".into()),
        redirect_uri: Some(REDIRECT.into()),
        code_challenge: Some(radaa_token::make_pkce_challenge(&"v".repeat(43)).unwrap().challenge),
        code_challenge_method: Some("S256".into()),
        ..Default::default()
    };
    assert!(fx.asrv.par(&base, None, &m).is_ok());

    let bad_redirect = ParParams { redirect_uri: Some("https://evil.example/cb".into()), ..base.clone() };
    assert_eq!(fx.asrv.par(&bad_redirect, None, &m).unwrap_err().code, "invalid_redirect");

    let plain = ParParams { code_challenge_method: Some("plain".into()), ..base.clone() };
    assert_eq!(fx.asrv.par(&plain, None, &m).unwrap_err().code, "invalid_request");

    let external = ParParams { request_uri: Some("https://evil.example/req".into()), ..base.clone() };
    assert_eq!(fx.asrv.par(&external, None, &m).unwrap_err().code, "invalid_request_uri");

    let script_state = ParParams { state: Some("<script>alert(1)</script>".into()), ..base.clone() };
    assert_eq!(fx.asrv.par(&script_state, None, &m).unwrap_err().code, "invalid_request");

    let unknown = ParParams { client_id: Some("nobody".into()), ..base.clone() };
    assert_eq!(fx.asrv.par(&unknown, None, &m).unwrap_err().code, "invalid_client");

    // TAL 1 clients must prove their key
    let tal1 = ParParams { client_id: Some("honest-app".into()), ..base };
    assert_eq!(fx.asrv.par(&tal1, None, &m).unwrap_err().code, "invalid_client");
    let wrong = fx.as_proof(Some(&attacker_key()), "/par");
    assert_eq!(fx.asrv.par(&tal1, wrong.as_deref(), &m).unwrap_err().code, "proof_binding");
}

#[test]
fn request_uri_single_use_and_ttl() {
    let fx = Fx::new();
    let m = honest_meta();
    let flow = fx.par_with("public-app", None, "data:read", None, &m).unwrap();
    fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap();
    assert_eq!(fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap_err().code, "one_time_use");

    let late = fx.par_with("public-app", None, "data:read", None, &m).unwrap();
    fx.clock.advance(61);
    assert_eq!(fx.authorize(&late, "alice", "alice-pw", "data:read", &m).unwrap_err().code, "expired_request_uri");
}

#[test]
fn authorize_rejections() {
    let fx = Fx::new();
    let m = honest_meta();
    let flow = fx.par_with("public-app", None, "data:read", None, &m).unwrap();
    assert_eq!(fx.authorize(&flow, "alice", "wrong", "data:read", &m).unwrap_err().code, "access_denied");
    assert_eq!(
        fx.authorize_at("ldap", &flow, "alice", "alice-pw", "data:read", None, &m).unwrap_err().code,
        "unknown_idp"
    );
    assert_eq!(fx.authorize(&flow, "alice", "alice-pw", "", &m).unwrap_err().code, "consent_required");
    // failures do not consume the request
    assert!(fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).is_ok());
}

#[test]
fn code_is_pkce_bound_and_single_use() {
    let fx = Fx::new();
    let m = honest_meta();
    let flow = fx.par_with("public-app", None, "data:read", None, &m).unwrap();
    let auth = fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap();
    let other = radaa_token::pkce::new_verifier();
    assert_eq!(fx.token("public-app", None, &auth.code, &other, &m).unwrap_err().code, "invalid_grant");
    fx.token("public-app", None, &auth.code, &flow.verifier, &m).unwrap();
    assert_eq!(
        fx.token("public-app", None, &auth.code, &flow.verifier, &m).unwrap_err().code,
        "invalid_grant"
    );

    let flow = fx.par_with("public-app", None, "data:read", None, &m).unwrap();
    let auth = fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap();
    fx.clock.advance(60);
    assert_eq!(fx.token("public-app", None, &auth.code, &flow.verifier, &m).unwrap_err().code, "invalid_grant");
}

#[test]
fn stolen_code_with_other_key_fails_binding() {
    let fx = Fx::new();
    let m = honest_meta();
    let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &m).unwrap();
    let auth = fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap();
    let err = fx.token("honest-app", Some(&attacker_key()), &auth.code, &flow.verifier, &m).unwrap_err();
    assert_eq!(err.code, "proof_binding");
    let err = fx.token("honest-app", None, &auth.code, &flow.verifier, &m).unwrap_err();
    assert_eq!(err.code, "invalid_client");
    // the code survives failed client authentication
    fx.token("honest-app", Some(&honest_key()), &auth.code, &flow.verifier, &m).unwrap();
}

#[test]
fn medium_risk_requires_step_up_once() {
    let fx = Fx::new();
    let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &honest_meta()).unwrap();
    let m = medium_meta();
    let err = fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap_err();
    assert_eq!(err.code, "step_up_required");
    let first = err.challenge_id.unwrap();
    let msgs = fx.d.outbox().take("alice");
    assert_eq!(msgs.len(), 1);
    assert_eq!(msgs[0].challenge_id, first);

    // one attempt per challenge
    let wrong = fx.asrv.complete_step_up(&StepUpParams { challenge_id: Some(first.clone()), answer: Some("nope".into()) });
    assert_eq!(wrong.unwrap_err().code, "challenge_failed");
    let again = fx.asrv.complete_step_up(&StepUpParams { challenge_id: Some(first.clone()), answer: Some(msgs[0].code.clone()) });
    assert_eq!(again.unwrap_err().code, "challenge_voided");

    let err = fx.authorize_at("corp", &flow, "alice", "alice-pw", "data:read", Some(&first), &m).unwrap_err();
    let second = err.challenge_id.unwrap();
    assert_ne!(second, first);
    let code = fx.d.outbox().take("alice").pop().unwrap().code;
    let ok = fx.asrv.complete_step_up(&StepUpParams { challenge_id: Some(second.clone()), answer: Some(code) }).unwrap();
    assert_eq!(ok.result, "pass");

    let auth = fx.authorize_at("corp", &flow, "alice", "alice-pw", "data:read", Some(&second), &m).unwrap();
    // the satisfied step-up carries to issuance
    let tok = fx.token("honest-app", Some(&honest_key()), &auth.code, &flow.verifier, &m).unwrap();
    assert_eq!(tok.expires_in, 900);
}

#[test]
fn step_up_answer_after_expiry() {
    let fx = Fx::new();
    let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &honest_meta()).unwrap();
    let id = fx.authorize(&flow, "alice", "alice-pw", "data:read", &medium_meta()).unwrap_err().challenge_id.unwrap();
    let code = fx.d.outbox().take("alice").pop().unwrap().code;
    fx.clock.advance(fx.d.config().lifetimes.step_up);
    let err = fx.asrv.complete_step_up(&StepUpParams { challenge_id: Some(id), answer: Some(code) }).unwrap_err();
    assert_eq!(err.code, "challenge_expired");
}

#[test]
fn risk_class_changes_authorization_outcome() {
    let fx = Fx::new();
    fx.issue("honest-app", Some(&honest_key()), "data:read");
    let outcome = |meta: &RequestMeta| {
        let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &honest_meta()).unwrap();
        match fx.authorize(&flow, "alice", "alice-pw", "data:read", meta) {
            Ok(_) => "ok",
            Err(e) => e.code,
        }
    };
    assert_eq!(outcome(&honest_meta()), "ok");
    assert_eq!(outcome(&medium_meta()), "step_up_required");
    // last seen in Paris a moment ago, now in Sydney with every other flag raised
    assert_eq!(outcome(&high_meta()), "risk_denied");
}

#[test]
fn refresh_rotates_and_reuse_revokes_chain() {
    let fx = Fx::new();
    let k = honest_key();
    let first = fx.issue("honest-app", Some(&k), "data:read");
    let rt1 = first.refresh_token.clone().unwrap();
    let second = fx.refresh("honest-app", &k, &rt1).unwrap();
    let rt2 = second.refresh_token.clone().unwrap();
    assert_ne!(rt1, rt2);
    assert_eq!(second.expires_in, 900);
    assert!(fx.introspect(&second.access_token).active);

    // a late replay of the rotated token is reuse
    fx.clock.advance(1);
    let err = fx.refresh("honest-app", &k, &rt1).unwrap_err();
    assert_eq!(err.code, "invalid_grant");
    assert!(!fx.introspect(&first.access_token).active);
    assert!(!fx.introspect(&second.access_token).active);
    assert_eq!(fx.refresh("honest-app", &k, &rt2).unwrap_err().code, "invalid_grant");
}

#[test]
fn refresh_race_loser_does_not_revoke() {
    let fx = Fx::new();
    let k = honest_key();
    let tok = fx.issue("honest-app", Some(&k), "data:read");
    let rt = tok.refresh_token.unwrap();
    let fresh = fx.refresh("honest-app", &k, &rt).unwrap();
    assert_eq!(fx.refresh("honest-app", &k, &rt).unwrap_err().code, "invalid_grant");
    assert!(fx.introspect(&fresh.access_token).active);
}

#[test]
fn refresh_requires_bound_key() {
    let fx = Fx::new();
    let tok = fx.issue("honest-app", Some(&honest_key()), "data:read");
    let rt = tok.refresh_token.unwrap();
    assert_eq!(fx.refresh("honest-app", &attacker_key(), &rt).unwrap_err().code, "proof_binding");
    assert_eq!(fx.refresh("attacker-app", &attacker_key(), &rt).unwrap_err().code, "invalid_grant");
    assert!(fx.refresh("honest-app", &honest_key(), &rt).is_ok());
}

#[test]
fn introspection_reports_activity() {
    let fx = Fx::new();
    let tok = fx.issue("honest-app", Some(&honest_key()), "data:read");
    let r = fx.introspect(&tok.access_token);
    assert!(r.active);
    assert_eq!(r.claims.unwrap().sub, "alice");

    fx.clock.advance(899);
    assert!(fx.introspect(&tok.access_token).active);
    fx.clock.advance(1);
    assert!(!fx.introspect(&tok.access_token).active);

    let unauth = fx.asrv.introspect(&IntrospectParams { token: Some(tok.access_token.clone()) }, None);
    assert_eq!(unauth.unwrap_err().status, 401);
    let client_proof = fx.as_proof(Some(&honest_key()), "/introspect");
    let as_client = fx.asrv.introspect(&IntrospectParams { token: Some(tok.access_token) }, client_proof.as_deref());
    assert_eq!(as_client.unwrap_err().status, 401);
}

#[test]
fn revocation_is_idempotent_and_permanent() {
    let fx = Fx::new();
    let k = honest_key();
    let tok = fx.issue("honest-app", Some(&k), "data:read");
    let revoke = |token: &str| {
        fx.asrv.revoke(
            &RevokeParams { token: Some(token.into()), client_id: Some("honest-app".into()) },
            fx.as_proof(Some(&k), "/revoke").as_deref(),
        )
    };
    assert!(revoke(&tok.access_token).unwrap().acknowledged);
    assert!(revoke(&tok.access_token).unwrap().acknowledged);
    assert!(revoke("no-such-token").unwrap().acknowledged);
    assert!(!fx.introspect(&tok.access_token).active);
    let err = fx.access(RS_MAIN, "data", &tok, Some(&k), &honest_meta()).unwrap_err();
    assert_eq!(err.reason, Some("revoked"));
    for _ in 0..5 {
        fx.clock.advance(10);
        assert!(!fx.introspect(&tok.access_token).active);
    }
}

#[test]
fn revocation_needs_an_authenticated_owner() {
    let fx = Fx::new();
    let tok = fx.issue("honest-app", Some(&honest_key()), "data:read");
    let no_proof = fx.asrv.revoke(&RevokeParams { token: Some(tok.access_token.clone()), client_id: Some("honest-app".into()) }, None);
    assert_eq!(no_proof.unwrap_err().code, "invalid_client");
    let other = fx.asrv.revoke(
        &RevokeParams { token: Some(tok.access_token.clone()), client_id: Some("attacker-app".into()) },
        fx.as_proof(Some(&attacker_key()), "/revoke").as_deref(),
    );
    assert_eq!(other.unwrap_err().code, "unauthorized_client");
    assert!(fx.introspect(&tok.access_token).active);

    // the audience resource server may revoke
    let rs_proof = fx.proof(&rs_key(), "POST", &format!("{ISSUER}/revoke"), None);
    fx.asrv.revoke(&RevokeParams { token: Some(tok.access_token.clone()), client_id: None }, Some(&rs_proof)).unwrap();
    assert!(!fx.introspect(&tok.access_token).active);
}

#[test]
fn revoking_refresh_token_kills_grant() {
    let fx = Fx::new();
    let k = honest_key();
    let tok = fx.issue("honest-app", Some(&k), "data:read");
    fx.asrv
        .revoke(
            &RevokeParams { token: tok.refresh_token.clone(), client_id: Some("honest-app".into()) },
            fx.as_proof(Some(&k), "/revoke").as_deref(),
        )
        .unwrap();
    assert!(!fx.introspect(&tok.access_token).active);
    assert_eq!(fx.refresh("honest-app", &k, tok.refresh_token.as_ref().unwrap()).unwrap_err().code, "invalid_grant");
}

fn exchange(fx: &Fx, tok: &TokenResponse, audience: &str, key: &KeyPair) -> Result<TokenResponse, ApiError> {
    let proof = fx.proof(key, "POST", &format!("{ISSUER}/exchange"), Some(&tok.access_token));
    fx.asrv.exchange(
        &ExchangeParams {
            subject_token: Some(tok.access_token.clone()),
            audience: Some(audience.into()),
            client_id: Some("honest-app".into()),
        },
        Some(&proof),
        &honest_meta(),
    )
}

#[test]
fn exchange_preserves_subject_and_never_widens() {
    let fx = Fx::new();
    let k = honest_key();
    let tok = fx.issue("honest-app", Some(&k), "data:read admin:elevated");
    fx.clock.advance(300);
    let ex = exchange(&fx, &tok, RS_PARTNER, &k).unwrap();
    assert!(ex.sealed);
    assert!(!ex.access_token.contains('.'));
    assert_eq!(ex.granted_scopes, set(&["data:read"]));
    assert_eq!(ex.refresh_token, None);
    assert!(ex.expires_in <= 600);

    // the partner opens it; sub survives, aud is the partner
    let res = fx.access(RS_PARTNER, "data", &ex, Some(&k), &honest_meta()).unwrap();
    assert_eq!(res.payload, "payload of data");
    let incoming = verify_token(&tok.access_token, fx.d.verification_keys()).unwrap();
    let sealed = radaa_token::SealedEnvelope::from_wire(&ex.access_token).unwrap();
    let inner = radaa_token::unseal_envelope(&sealed, &[8u8; 32]).unwrap();
    let out = verify_token(inner.as_str(), fx.d.verification_keys()).unwrap();
    assert_eq!(out.sub, incoming.sub);
    assert_eq!(out.aud, RS_PARTNER);
    assert!(out.exp <= incoming.exp);
    assert!(out.scope.is_subset(&incoming.scope));
    // the main server's key cannot open it
    assert!(radaa_token::unseal_envelope(&sealed, &[7u8; 32]).is_err());
}

#[test]
fn exchange_rejections() {
    let fx = Fx::new();
    let k = honest_key();
    let tok = fx.issue("honest-app", Some(&k), "data:read");
    assert_eq!(exchange(&fx, &tok, RS_ARCHIVE, &k).unwrap_err().code, "invalid_scope");
    assert_eq!(exchange(&fx, &tok, "https://unknown.example", &k).unwrap_err().code, "invalid_target");
    assert_eq!(exchange(&fx, &tok, RS_PARTNER, &attacker_key()).unwrap_err().code, "proof_binding");
    fx.clock.advance(900);
    assert_eq!(exchange(&fx, &tok, RS_PARTNER, &k).unwrap_err().code, "invalid_grant");
}

#[test]
fn federated_identities_reach_one_subject() {
    let fx = Fx::new();
    let m = honest_meta();
    let mut subjects = Vec::new();
    for (idp, user, pw) in [("corp", "alice", "alice-pw"), ("partner-idp", "alice@partner", "p-pw")] {
        let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &m).unwrap();
        let auth = fx.authorize_at(idp, &flow, user, pw, "data:read", None, &m).unwrap();
        let tok = fx.token("honest-app", Some(&honest_key()), &auth.code, &flow.verifier, &m).unwrap();
        subjects.push(verify_token(&tok.access_token, fx.d.verification_keys()).unwrap().sub);
    }
    assert_eq!(subjects, ["alice", "alice"]);
}

#[test]
fn identity_provider_swap_leaves_token_path_alone() {
    let fx = Fx::new();
    let before = fx.issue("honest-app", Some(&honest_key()), "data:read");
    let replacement = StubIdentityProvider::new("corp").with_user("alice", "new-secret", "alice");
    assert!(fx.d.federation().register(std::sync::Arc::new(replacement)).is_some());

    let m = honest_meta();
    let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &m).unwrap();
    assert_eq!(fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap_err().code, "access_denied");
    let auth = fx.authorize(&flow, "alice", "new-secret", "data:read", &m).unwrap();
    let after = fx.token("honest-app", Some(&honest_key()), &auth.code, &flow.verifier, &m).unwrap();
    let c1 = verify_token(&before.access_token, fx.d.verification_keys()).unwrap();
    let c2 = verify_token(&after.access_token, fx.d.verification_keys()).unwrap();
    assert_eq!((c1.sub, c1.aud, c1.exp - c1.iat), (c2.sub, c2.aud, c2.exp - c2.iat));
}

#[test]
fn runtime_registration_assigns_trust_level() {
    let fx = Fx::new();
    let meta = |id: &str| ClientMetadata {
        client_id: id.into(),
        display_name: id.into(),
        redirect_uris: set(&["https://new.example/cb"]),
        scopes: set(&["data:read"]),
    };
    let k = key("new", 42);
    let nonce = fx.asrv.registration_nonce().unwrap();
    let proof = PossessionProof { public_key: k.public_key.clone(), signature: k.sign(nonce.as_bytes()).unwrap(), nonce };
    let r = fx.asrv.register_client(meta("keyed"), Some(proof.clone())).unwrap();
    assert_eq!(r.record.tal, 1);
    assert!(r.record.public_key.is_some());
    assert!(r.warning.is_none());

    // nonce already spent
    let r = fx.asrv.register_client(meta("replayed"), Some(proof)).unwrap();
    assert_eq!(r.record.tal, 0);

    assert_eq!(fx.asrv.register_client(meta("keyless"), None).unwrap().record.tal, 0);

    let nonce = fx.asrv.registration_nonce().unwrap();
    let forged = PossessionProof { public_key: k.public_key.clone(), signature: vec![0; 64], nonce };
    let r = fx.asrv.register_client(meta("forged"), Some(forged)).unwrap();
    assert_eq!(r.record.tal, 0);
    assert!(r.record.public_key.is_none());
    assert!(r.warning.is_some());

    let bad = ClientMetadata { redirect_uris: set(&["https://x.example/cb#frag"]), ..meta("frag") };
    assert_eq!(fx.asrv.register_client(bad, None).unwrap_err().code, "invalid_redirect_uri");
    assert!(fx.d.store().get(Namespace::Clients, "keyed").is_some());
}

#[test]
fn every_decision_is_audited_once() {
    let fx = Fx::new();
    let before = fx.d.audit().appended();
    let k = honest_key();
    let m = honest_meta();
    let flow = fx.par_with("honest-app", Some(&k), "data:read", None, &m).unwrap();
    let _ = fx.authorize(&flow, "alice", "wrong", "data:read", &m);
    let auth = fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap();
    let _ = fx.token("honest-app", None, &auth.code, &flow.verifier, &m);
    let tok = fx.token("honest-app", Some(&k), &auth.code, &flow.verifier, &m).unwrap();
    fx.access(RS_MAIN, "data", &tok, Some(&k), &m).unwrap();
    let _ = fx.access(RS_MAIN, "admin", &tok, Some(&k), &m);
    assert_eq!(fx.d.audit().appended() - before, 7);
    let records = fx.d.audit().records().unwrap();
    let outcomes: Vec<_> = records.iter().map(|r| (r.action.as_str(), r.outcome.as_str())).collect();
    assert_eq!(
        outcomes,
        [
            ("par", "allow"),
            ("authorize", "access_denied"),
            ("authorize", "allow"),
            ("token", "invalid_client"),
            ("token", "allow"),
            ("resource", "allow"),
            ("resource", "insufficient_scope"),
        ]
    );
    assert!(records[2].risk.is_some());
}
