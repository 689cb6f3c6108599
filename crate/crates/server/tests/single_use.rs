//! Artifacts that must be consumed at most once, hammered from many threads.

mod common;

use std::sync::{Arc, Barrier};
use std::thread;

use common::*;
use radaa_persist::{AuditLog, Store};
use radaa_server::*;
use radaa_token::ManualClock;

const THREADS: usize = 16;
const ROUNDS: usize = 50;

fn race<F>(f: F) -> usize
where
    F: Fn() -> bool + Send + Sync + 'static,
{
    let f = Arc::new(f);
    let barrier = Arc::new(Barrier::new(THREADS));
    let handles: Vec<_> = (0..THREADS)
        .map(|_| {
            let f = f.clone();
            let barrier = barrier.clone();
            thread::spawn(move || {
                barrier.wait();
                f()
            })
        })
        .collect();
    handles.into_iter().map(|h| h.join().unwrap()).filter(|ok| *ok).count()
}

#[test]
fn authorization_code_redeemed_once() {
    let fx = Arc::new(Fx::new());
    let m = honest_meta();
    for _ in 0..ROUNDS {
        // stay under the pushed-request rate limit
        fx.clock.advance(3);
        let flow = fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &m).unwrap();
        let auth = fx.authorize(&flow, "alice", "alice-pw", "data:read", &m).unwrap();
        let fx2 = fx.clone();
        let wins = race(move || {
            fx2.token("honest-app", Some(&honest_key()), &auth.code, &flow.verifier, &honest_meta()).is_ok()
        });
        assert_eq!(wins, 1);
    }
}

#[test]
fn request_uri_consumed_once() {
    let fx = Arc::new(Fx::new());
    let m = honest_meta();
    for _ in 0..ROUNDS {
        // stay under the pushed-request rate limit
        fx.clock.advance(3);
        let flow = Arc::new(fx.par_with("honest-app", Some(&honest_key()), "data:read", None, &m).unwrap());
        let fx2 = fx.clone();
        let wins = race(move || fx2.authorize(&flow, "alice", "alice-pw", "data:read", &honest_meta()).is_ok());
        assert_eq!(wins, 1);
    }
}

#[test]
fn refresh_token_rotated_once() {
    let fx = Arc::new(Fx::new());
    for _ in 0..ROUNDS {
        // stay under the pushed-request rate limit
        fx.clock.advance(3);
        let tok = fx.issue("honest-app", Some(&honest_key()), "data:read");
        let rt = tok.refresh_token.unwrap();
        let fx2 = fx.clone();
        let wins = race(move || fx2.refresh("honest-app", &honest_key(), &rt).is_ok());
        assert_eq!(wins, 1);
    }
}

#[test]
fn state_survives_restart_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(T0));
    let open = |clock: Arc<ManualClock>| {
        let mut opts = DeploymentOptions::in_memory(clock);
        opts.store = Arc::new(Store::open(dir.path().join("data")).unwrap());
        opts.audit = Arc::new(AuditLog::open(dir.path().join("audit.log")).unwrap());
        opts.signing_key = radaa_token::KeyPair::ed25519_from_seed("as", &[3; 32]).unwrap();
        Deployment::new(config(), opts).unwrap()
    };

    let (wire, model_len) = {
        let d = open(clock.clone());
        let fx = Fx { asrv: d.auth_server(), d, clock: clock.clone() };
        let tok = fx.issue("honest-app", Some(&honest_key()), "data:read");
        fx.access(RS_MAIN, "data", &tok, Some(&honest_key()), &honest_meta()).unwrap();
        let jti = radaa_token::verify_token(&tok.access_token, fx.d.verification_keys()).unwrap().jti;
        fx.d.revoke_jti(&jti, "test").unwrap();
        (tok.access_token, fx.d.engine().model_len())
    };

    let d = open(clock.clone());
    let fx = Fx { asrv: d.auth_server(), d, clock };
    assert!(!fx.introspect(&wire).active);
    assert_eq!(fx.d.engine().model_len(), model_len);
    assert!(fx.d.audit().records().unwrap().len() >= 4);
}
