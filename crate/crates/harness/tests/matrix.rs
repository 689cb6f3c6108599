use proptest::prelude::*;
use radaa_harness::*;
use radaa_server::{Fault, Mitigations};

fn rt() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap()
}

#[test]
fn default_deployment_blocks_every_attack() {
    let m = run_blocking(&ScenarioId::ALL, Mitigations::default()).unwrap();
    let text = render_matrix(&m).unwrap();
    println!("{text}");
    for r in &m.results {
        assert!(r.passed(), "{:?}", r);
    }
    assert!(m.pass);
    assert!(m.get(ScenarioId::HonestFlow).is_some_and(|r| !r.blocked));
}

#[test]
fn each_fault_flips_its_rows() {
    for fault in Fault::ALL {
        let rows = ScenarioId::guarded_by(fault);
        let m = run_blocking(rows, Mitigations::default().without(fault)).unwrap();
        for id in rows {
            let r = m.get(*id).unwrap();
            assert!(!r.passed(), "{fault} left {id} passing: {r:?}");
            assert!(!r.blocked, "{fault}: {id} still blocked");
        }
    }
}

#[test]
fn evidence_names_the_mitigation() {
    let m = run_blocking(&ScenarioId::ALL, Mitigations::default()).unwrap();
    let observed = |id: ScenarioId, step: &str| {
        m.get(id).unwrap().evidence.iter().find(|e| e.step == step).map(|e| e.observed.clone())
    };
    assert_eq!(observed(ScenarioId::Csrf, "token_with_injected_code").as_deref(), Some("invalid_grant"));
    assert_eq!(observed(ScenarioId::TokenReplay, "verbatim_replay").as_deref(), Some("proof_replay"));
    assert_eq!(observed(ScenarioId::ClientImpersonation, "par_without_key").as_deref(), Some("invalid_client"));
    assert_eq!(observed(ScenarioId::ClientImpersonation, "token_with_foreign_key").as_deref(), Some("proof_binding"));
    assert_eq!(observed(ScenarioId::TokenInjection, "leaked_token_other_client").as_deref(), Some("proof_binding"));
    assert_eq!(observed(ScenarioId::TokenInjection, "partner_token_at_main").as_deref(), Some("audience"));
    assert_eq!(observed(ScenarioId::Mixup, "client_iss_check").as_deref(), Some("iss_mismatch"));
    assert_eq!(observed(ScenarioId::DdosPar, "flood ok").as_deref(), Some("20"));
    assert_eq!(observed(ScenarioId::DdosPar, "flood invalid_request_uri").as_deref(), Some("50"));
    assert_eq!(observed(ScenarioId::DdosPar, "flood rate_limited").as_deref(), Some("130"));
    assert_eq!(observed(ScenarioId::XssHeader, "state_script").as_deref(), Some("invalid_request"));
    assert_eq!(observed(ScenarioId::XssHeader, "redirect_javascript").as_deref(), Some("invalid_redirect"));
}

#[test]
fn scenario_order_does_not_matter() {
    let forward = run_blocking(&ScenarioId::ALL, Mitigations::default()).unwrap();
    let mut reversed_ids = ScenarioId::ALL;
    reversed_ids.reverse();
    let reversed = run_blocking(&reversed_ids, Mitigations::default()).unwrap();
    let rotated_ids: Vec<_> = ScenarioId::ALL.iter().cycle().skip(4).take(9).copied().collect();
    let rotated = run_blocking(&rotated_ids, Mitigations::default()).unwrap();
    assert_eq!(forward, reversed);
    assert_eq!(forward, rotated);
}

#[test]
fn reports_are_deterministic() {
    let a = run_blocking(&ScenarioId::ALL, Mitigations::default()).unwrap();
    let b = run_blocking(&ScenarioId::ALL, Mitigations::default()).unwrap();
    assert_eq!(render_matrix(&a).unwrap(), render_matrix(&b).unwrap());
    assert_eq!(render_json(&a).unwrap(), render_json(&b).unwrap());
    let text = render_matrix(&a).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS") && !l.starts_with("overall")).count(), 9);
    assert_eq!(parse_json(&render_json(&a).unwrap()).unwrap(), a);
}

#[test]
fn failing_row_is_marked_alone() {
    let m = run_blocking(&ScenarioId::ALL, Mitigations::default().without(Fault::Pkce)).unwrap();
    assert!(!m.pass);
    assert_eq!(m.disabled, ["pkce"]);
    let text = render_matrix(&m).unwrap();
    let failing: Vec<_> = text.lines().filter(|l| l.ends_with("FAIL") && !l.starts_with("overall")).collect();
    assert_eq!(failing.len(), 1, "{text}");
    assert!(failing[0].starts_with("CSRF "));
    assert!(text.ends_with("overall: FAIL\n"));
}

#[test]
fn incomplete_matrix_is_not_rendered() {
    let m = run_blocking(&[ScenarioId::TokenReplay], Mitigations::default()).unwrap();
    assert!(matches!(render_matrix(&m), Err(RenderError::Incomplete)));
    assert!(matches!(render_json(&m), Err(RenderError::Incomplete)));
}

#[test]
fn single_scenario_against_given_testbed() {
    rt().block_on(async {
        let tb = Testbed::new(Mitigations::default()).unwrap();
        let r = run_scenario(ScenarioId::TokenReplay, &tb).await.unwrap();
        assert!(r.blocked && r.honest_ok);
        assert_eq!(r.attempted, 1);
    });
}

#[test]
fn attack_traffic_feeds_the_model() {
    rt().block_on(async {
        let tb = Testbed::new(Mitigations::default()).unwrap();
        let before = tb.deployment.engine().model_len();
        run_scenario(ScenarioId::TokenInjection, &tb).await.unwrap();
        let snapshot = tb.deployment.engine().model_snapshot();
        assert!(snapshot.len() > before);
        assert!(snapshot.iter().any(|(_, label)| *label == radaa_token::RiskClass::High));
    });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_orderings_agree(order in Just(ScenarioId::ALL.to_vec()).prop_shuffle()) {
        let shuffled = run_blocking(&order, Mitigations::default()).unwrap();
        let reference = run_blocking(&ScenarioId::ALL, Mitigations::default()).unwrap();
        prop_assert_eq!(shuffled, reference);
    }
}
