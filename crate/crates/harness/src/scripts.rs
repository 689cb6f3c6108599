//! The scripted flows. Each returns whether its goal was reached: the
//! attacker's final success condition, or for the baseline the honest
//! client's. Protocol rejections are outcomes, not errors; only a failed
//! setup step (something the script needs before the attack) is an error.

use axum::body::Body;
use axum::http::{header, HeaderMap, Method, Request};
use tokio::task::JoinSet;

use radaa_server::CSP_VALUE;
use radaa_token::{make_pkce_challenge, make_sender_proof, pkce, verify_token, Clock};

use crate::scenario::{Evidence, HarnessError, ScenarioId};
use crate::testbed::*;

pub(crate) struct Outcome {
    pub goal_reached: bool,
    pub attempted: u32,
    pub evidence: Vec<Evidence>,
}

#[derive(Default)]
struct Log {
    attempted: u32,
    evidence: Vec<Evidence>,
}

impl Log {
    fn note(&mut self, step: impl Into<String>, observed: impl Into<String>) {
        self.evidence.push(Evidence { step: step.into(), observed: observed.into() });
    }

    /// Records an attack step; returns whether it went through.
    fn attempt(&mut self, step: &str, reply: &Reply) -> bool {
        self.attempted += 1;
        self.note(step, reply.code());
        reply.ok()
    }

    fn finish(self, goal_reached: bool) -> Outcome {
        Outcome { goal_reached, attempted: self.attempted, evidence: self.evidence }
    }
}

fn setup(scenario: ScenarioId, step: &str, reply: &Reply) -> HarnessError {
    HarnessError::Setup { scenario, step: step.into(), observed: reply.code() }
}

fn expect_ok(scenario: ScenarioId, step: &str, reply: Reply) -> Result<Reply, HarnessError> {
    if reply.ok() {
        Ok(reply)
    } else {
        Err(setup(scenario, step, &reply))
    }
}

fn payload_of(reply: &Reply) -> Option<String> {
    reply.ok().then(|| reply.str("payload")).flatten()
}

/// Benign baseline: the TAL 1 client runs the whole flow and reads the resource.
pub(crate) async fn honest_flow(tb: &Testbed) -> Outcome {
    let mut log = Log::default();
    let client = tb.honest();
    let tok = match client.obtain_token("alice", "alice-pw", "data:read", None).await {
        Ok(t) => t,
        Err((step, r)) => {
            log.attempted += 1;
            log.note(step, r.code());
            return log.finish(false);
        }
    };
    log.attempted += 3;
    log.note("token", tok.code());
    let at = tok.str("access_token").unwrap_or_default();
    let res = client.fetch(RS_MAIN, "data", &at).await;
    log.attempted += 1;
    log.note("resource", res.code());
    let ok = payload_of(&res).as_deref() == Some("protected data");
    log.finish(ok)
}

/// The attacker holds the honest client's code and verifier (leaked from the
/// front channel) and claims the honest client_id, but not its key.
pub(crate) async fn client_impersonation(tb: &Testbed) -> Result<Outcome, HarnessError> {
    const ID: ScenarioId = ScenarioId::ClientImpersonation;
    let mut log = Log::default();
    let keyless = tb.attacker().with_client_id(HONEST_CLIENT).with_key(None);
    match keyless.start("data:read", None).await {
        Ok(_) => log.note("par_without_key", "ok"),
        Err(r) => log.note("par_without_key", r.code()),
    }
    log.attempted += 1;

    let victim = tb.honest();
    let s = victim.start("data:read", None).await.map_err(|r| setup(ID, "victim_par", &r))?;
    let auth = expect_ok(ID, "victim_authorize", victim.authorize(&s.request_uri, "alice", "alice-pw", "data:read").await)?;
    let code = auth.str("code").unwrap_or_default();

    let imposter = tb.attacker().with_client_id(HONEST_CLIENT);
    let tok = imposter.redeem(&code, &s.verifier).await;
    if !log.attempt("token_with_foreign_key", &tok) {
        return Ok(log.finish(false));
    }
    let at = tok.str("access_token").unwrap_or_default();
    let res = imposter.fetch(RS_MAIN, "data", &at).await;
    let got = log.attempt("resource_with_foreign_key", &res);
    Ok(log.finish(got && payload_of(&res).is_some()))
}

/// Mallory signs in as herself and plants her code in the victim's client,
/// which redeems it with its own session's verifier. Client-side state checking
/// is not modelled, so PKCE is the defence under test. Success: the victim's
/// client holds a token for Mallory's account.
pub(crate) async fn csrf(tb: &Testbed) -> Result<Outcome, HarnessError> {
    const ID: ScenarioId = ScenarioId::Csrf;
    let mut log = Log::default();
    let mallory = Party::new(tb, PUBLIC_CLIENT, None, attacker_meta());
    let ms = mallory.start("data:read", None).await.map_err(|r| setup(ID, "attacker_par", &r))?;
    let mauth = expect_ok(
        ID,
        "attacker_authorize",
        mallory.authorize(&ms.request_uri, "mallory", "mallory-pw", "data:read").await,
    )?;
    let injected = mauth.str("code").unwrap_or_default();

    let victim = tb.victim_public();
    let vs = victim.start("data:read", None).await.map_err(|r| setup(ID, "victim_par", &r))?;
    let tok = victim.redeem(&injected, &vs.verifier).await;
    if !log.attempt("token_with_injected_code", &tok) {
        return Ok(log.finish(false));
    }
    let at = tok.str("access_token").unwrap_or_default();
    let sub = verify_token(&at, tb.deployment.verification_keys()).map(|c| c.sub).unwrap_or_default();
    log.note("victim_session_subject", sub.clone());
    Ok(log.finish(sub == "mallory"))
}

/// The client starts at an attacker-operated issuer, which relays the request
/// to the honest issuer under the public client's id. The user signs in at
/// the honest issuer; the response carries its iss. A client that checks iss
/// aborts; one that does not sends code and verifier to the rogue token
/// endpoint. Success: the rogue reads the user's resource.
pub(crate) async fn mixup(tb: &Testbed) -> Result<Outcome, HarnessError> {
    const ID: ScenarioId = ScenarioId::Mixup;
    let mut log = Log::default();
    let victim = tb.victim_public();
    let verifier = pkce::new_verifier();
    let challenge = make_pkce_challenge(&verifier).expect("generated verifier is valid");
    let session_issuer = ROGUE_ISSUER;

    let rogue = Party::new(tb, PUBLIC_CLIENT, None, attacker_meta());
    let relayed = rogue.push("data:read", REDIRECT, None, "m1", &challenge.challenge, &[]).await;
    let request_uri = relayed.str("request_uri").ok_or_else(|| setup(ID, "rogue_relay_par", &relayed))?;
    let auth = expect_ok(ID, "victim_authorize", victim.authorize(&request_uri, "alice", "alice-pw", "data:read").await)?;

    let iss = auth.str("iss").unwrap_or_default();
    log.attempted += 1;
    if tb.mitigations.iss_check && iss != session_issuer {
        log.note("client_iss_check", "iss_mismatch");
        return Ok(log.finish(false));
    }
    log.note("client_iss_check", "skipped_or_matched");
    // the client posts code and verifier to the token endpoint of the issuer it
    // believes it used; the rogue replays them at the honest issuer
    let code = auth.str("code").unwrap_or_default();
    let tok = rogue.redeem(&code, &verifier).await;
    if !log.attempt("rogue_redeems_leaked_code", &tok) {
        return Ok(log.finish(false));
    }
    let at = tok.str("access_token").unwrap_or_default();
    let res = rogue.fetch(RS_MAIN, "data", &at).await;
    let got = log.attempt("rogue_reads_resource", &res);
    Ok(log.finish(got && payload_of(&res).is_some()))
}

const EVIL_ORIGIN: &str = "https://evil.example";

fn grants_cross_origin(r: &Reply) -> bool {
    r.headers.contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN)
        || r.headers.contains_key(header::ACCESS_CONTROL_ALLOW_CREDENTIALS)
}

/// A page on another origin can send requests carrying the victim's token but
/// cannot sign proofs. Success: any cross-origin grant header, any probe that
/// succeeds, or the victim's token ending up revoked.
pub(crate) async fn cors_probe(tb: &Testbed) -> Result<Outcome, HarnessError> {
    const ID: ScenarioId = ScenarioId::CorsProbe;
    let mut log = Log::default();
    let tok = tb
        .honest()
        .obtain_token("alice", "alice-pw", "data:read", None)
        .await
        .map_err(|(step, r)| setup(ID, step, &r))?;
    let at = tok.str("access_token").unwrap_or_default();
    let origin = || (header::ORIGIN.as_str(), EVIL_ORIGIN.to_string());
    let mut leaked = false;

    for (ep, path) in [
        (&tb.auth, "/introspect"),
        (&tb.auth, "/revoke"),
        (&tb.auth, "/token"),
        (tb.rs(RS_MAIN), "/resource/data"),
    ] {
        let pre = ep
            .request(
                Method::OPTIONS,
                path,
                None,
                &[
                    origin(),
                    (header::ACCESS_CONTROL_REQUEST_METHOD.as_str(), "POST".into()),
                    (header::ACCESS_CONTROL_REQUEST_HEADERS.as_str(), "authorization, sender-proof".into()),
                ],
            )
            .await;
        log.attempt(&format!("preflight {path}"), &pre);
        leaked |= pre.ok() || grants_cross_origin(&pre);
    }

    let form: &[(&str, &str)] = &[("token", &at), ("client_id", HONEST_CLIENT)];
    for path in ["/introspect", "/revoke"] {
        let r = tb.auth.request(Method::POST, path, Some(form), &[origin()]).await;
        leaked |= log.attempt(&format!("forged-origin {path}"), &r) || grants_cross_origin(&r);
    }
    let r = tb
        .rs(RS_MAIN)
        .request(Method::GET, "/resource/data", None, &[origin(), (header::AUTHORIZATION.as_str(), format!("Bearer {at}"))])
        .await;
    leaked |= log.attempt("forged-origin /resource/data", &r) || grants_cross_origin(&r);

    let active = tb.is_active(&at).await;
    log.note("victim_token_active", active.to_string());
    Ok(log.finish(leaked || !active))
}

/// Collects responses of every kind (success, client error, not found, wrong
/// method) from both servers and checks each for the CSP header, then sends
/// script-bearing parameters. Success: any response without the header, any
/// script-bearing input accepted, or any reflected into a body.
pub(crate) async fn xss_header(tb: &Testbed) -> Outcome {
    let mut log = Log::default();
    let mut replies: Vec<(String, Reply)> = Vec::new();
    let honest = tb.honest();

    if let Ok(s) = honest.start("data:read", None).await {
        let auth = honest.authorize(&s.request_uri, "alice", "alice-pw", "data:read").await;
        let tok = honest.redeem(&auth.str("code").unwrap_or_default(), &s.verifier).await;
        let res = honest.fetch(RS_MAIN, "data", &tok.str("access_token").unwrap_or_default()).await;
        replies.push(("authorize".into(), auth));
        replies.push(("token".into(), tok));
        replies.push(("resource".into(), res));
    }
    replies.push(("token_unknown_client".into(), tb.attacker().with_client_id("nobody").redeem("x", "y").await));
    replies.push(("as_not_found".into(), tb.auth.request(Method::GET, "/admin", None, &[]).await));
    replies.push(("as_wrong_method".into(), tb.auth.request(Method::DELETE, "/token", None, &[]).await));
    replies.push(("rs_unauthenticated".into(), tb.rs(RS_MAIN).request(Method::GET, "/resource/data", None, &[]).await));
    replies.push(("rs_not_found".into(), tb.rs(RS_MAIN).request(Method::GET, "/index.html", None, &[]).await));

    let script = "<script>alert(1)</script>";
    let challenge = make_pkce_challenge(&pkce::new_verifier()).expect("generated verifier is valid").challenge;
    let mut injected = Vec::new();
    injected.push(("state_script", honest.push("data:read", REDIRECT, None, script, &challenge, &[]).await));
    injected.push(("redirect_javascript", honest.push("data:read", "javascript:alert(1)", None, "s", &challenge, &[]).await));
    injected.push(("scope_markup", honest.push("data:read <img>", REDIRECT, None, "s", &challenge, &[]).await));
    injected.push(("username_script", honest.authorize("urn:radaa:request:none", script, "x", "data:read").await));

    let mut accepted = false;
    for (step, r) in &injected {
        accepted |= log.attempt(step, r);
        replies.push((step.to_string(), r.clone()));
    }

    let mut missing = false;
    let mut reflected = false;
    for (step, r) in &replies {
        let has_csp = r.header(header::CONTENT_SECURITY_POLICY) == Some(CSP_VALUE);
        missing |= !has_csp;
        reflected |= r.body.to_string().contains("<script");
        log.note(format!("csp {step}"), if has_csp { "present" } else { "missing" });
    }
    log.note("reflected_markup", reflected.to_string());
    log.finish(missing || accepted || reflected)
}

pub const FLOOD_SIZE: usize = 200;

/// Every fourth flood request points at an external request object.
fn flood_request(ep: &Endpoint, clock: &dyn Clock, i: usize) -> Request<Body> {
    let key = attacker_key();
    let proof = make_sender_proof("POST", &ep.url("/par"), None, &key, clock.now()).expect("proof over valid inputs");
    let challenge = make_pkce_challenge(&pkce::new_verifier()).expect("generated verifier is valid").challenge;
    let mut form = vec![
        ("client_id", ATTACKER_CLIENT),
        ("scope", "data:read"),
        ("redirect_uri", ATTACKER_REDIRECT),
        ("code_challenge", challenge.as_str()),
        ("code_challenge_method", "S256"),
    ];
    if i % 4 == 0 {
        form.push(("request_uri", "https://attacker.example/request.jwt"));
    }
    let mut b = Request::post("/par")
        .header(header::CONTENT_TYPE, "application/x-www-form-urlencoded")
        .header(radaa_server::context::SENDER_PROOF_HEADER, proof.as_str());
    for (k, v) in attacker_meta().header_pairs() {
        b = b.header(k, v);
    }
    b.body(Body::from(encode(&form))).expect("request parts are valid")
}

/// Floods /par concurrently from the attacker's (authenticated) client.
/// Success: more PARs admitted than the per-minute budget, or any external
/// request_uri admitted. The honest flow afterwards is checked by the caller.
pub(crate) async fn ddos_par(tb: &Testbed) -> Outcome {
    let mut log = Log::default();
    let mut set = JoinSet::new();
    for i in 0..FLOOD_SIZE {
        let ep = tb.auth.clone();
        let req = flood_request(&ep, tb.clock.as_ref(), i);
        set.spawn(async move { (i % 4 == 0, ep.send(req).await) });
    }
    let mut admitted = 0usize;
    let mut external_admitted = 0usize;
    let mut codes = std::collections::BTreeMap::<String, usize>::new();
    while let Some(joined) = set.join_next().await {
        let (external, reply) = joined.expect("flood task does not panic");
        *codes.entry(reply.code()).or_default() += 1;
        if reply.ok() {
            admitted += 1;
            external_admitted += usize::from(external);
        }
    }
    log.attempted = FLOOD_SIZE as u32;
    for (code, n) in &codes {
        log.note(format!("flood {code}"), n.to_string());
    }
    let budget = tb.deployment.config().rate_limits.par_per_minute as usize;
    log.finish(admitted > budget || external_admitted > 0)
}

/// (a) The honest client's bound token leaks and the attacker's client, a
/// legitimate registered client, presents it with its own proof. (b) The
/// attacker's own token for the partner server is presented to the main one.
/// Success: either reads the main server's resource.
pub(crate) async fn token_injection(tb: &Testbed) -> Result<Outcome, HarnessError> {
    const ID: ScenarioId = ScenarioId::TokenInjection;
    let mut log = Log::default();
    let leaked = tb
        .honest()
        .obtain_token("alice", "alice-pw", "data:read", None)
        .await
        .map_err(|(step, r)| setup(ID, step, &r))?;
    let attacker = tb.attacker();
    let r = attacker.fetch(RS_MAIN, "data", &leaked.str("access_token").unwrap_or_default()).await;
    let leaked_used = log.attempt("leaked_token_other_client", &r) && payload_of(&r).is_some();

    let own = attacker
        .obtain_token("mallory", "mallory-pw", "data:read", Some(RS_PARTNER))
        .await
        .map_err(|(step, r)| setup(ID, step, &r))?;
    let r = attacker.fetch(RS_MAIN, "data", &own.str("access_token").unwrap_or_default()).await;
    let cross_audience = log.attempt("partner_token_at_main", &r) && payload_of(&r).is_some();
    Ok(log.finish(leaked_used || cross_audience))
}

fn copy_request(path: &str, headers: &HeaderMap) -> Request<Body> {
    let mut req = Request::get(path).body(Body::empty()).expect("request parts are valid");
    *req.headers_mut() = headers.clone();
    req
}

/// An on-path observer captures one honest resource request, proof
/// included, and sends it again unchanged inside the freshness window.
/// Success: the replay is served.
pub(crate) async fn token_replay(tb: &Testbed) -> Result<Outcome, HarnessError> {
    const ID: ScenarioId = ScenarioId::TokenReplay;
    let mut log = Log::default();
    let honest = tb.honest();
    let tok = honest
        .obtain_token("alice", "alice-pw", "data:read", None)
        .await
        .map_err(|(step, r)| setup(ID, step, &r))?;
    let (req, _) = honest.fetch_request(RS_MAIN, "data", &tok.str("access_token").unwrap_or_default());
    let path = req.uri().to_string();
    let captured = req.headers().clone();
    let original = tb.rs(RS_MAIN).send(req).await;
    log.note("original", original.code());
    if !original.ok() {
        return Err(setup(ID, "original", &original));
    }
    let replay = tb.rs(RS_MAIN).send(copy_request(&path, &captured)).await;
    let served = log.attempt("verbatim_replay", &replay) && payload_of(&replay).is_some();
    Ok(log.finish(served))
}

