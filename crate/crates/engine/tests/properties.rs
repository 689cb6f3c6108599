use std::collections::BTreeSet;

use proptest::prelude::*;
use radaa_engine::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn arb_features() -> impl Strategy<Value = FeatureVector> {
    prop::array::uniform5(0.0f64..=1.0).prop_map(|v| FeatureVector::new(v).unwrap())
}

fn arb_posture() -> impl Strategy<Value = GlobalPosture> {
    prop_oneof![
        Just(GlobalPosture::Normal),
        Just(GlobalPosture::Elevated),
        Just(GlobalPosture::Critical)
    ]
}

fn arb_geo() -> impl Strategy<Value = GeoPoint> {
    (-90.0f64..=90.0, -180.0f64..=180.0).prop_map(|(lat, lon)| GeoPoint { lat, lon })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn raising_posture_never_lowers_class(f in arb_features(), a in arb_posture(), b in arb_posture()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c_lo = classify(rule_score(&f, lo)).unwrap();
        let c_hi = classify(rule_score(&f, hi)).unwrap();
        prop_assert!(c_hi >= c_lo);
    }

    #[test]
    fn raising_one_feature_never_lowers_score(f in arb_features(), idx in 0usize..5, bump in 0.0f64..=1.0, p in arb_posture()) {
        let mut v = *f.values();
        v[idx] = (v[idx] + bump).min(1.0);
        let g = FeatureVector::new(v).unwrap();
        prop_assert!(rule_score(&g, p) >= rule_score(&f, p));
    }

    #[test]
    fn haversine_symmetric_and_reflexive(a in arb_geo(), b in arb_geo()) {
        let ab = haversine_km(a, b).unwrap();
        let ba = haversine_km(b, a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ab >= 0.0);
        prop_assert!(ab <= std::f64::consts::PI * EARTH_RADIUS_KM + 1e-6);
        prop_assert_eq!(haversine_km(a, a).unwrap(), 0.0);
    }

    #[test]
    fn knn_k1_recovers_training_labels(samples in prop::collection::vec((arb_features(), 0usize..3), 1..40)) {
        let mut m = KnnModel::new(1, 100).unwrap();
        for (f, l) in &samples {
            m.observe(*f, RiskClass::ALL[*l]);
        }
        // with duplicate vectors the earliest inserted label wins
        for (f, _) in &samples {
            let first = samples.iter().find(|(g, _)| g == f).unwrap().1;
            prop_assert_eq!(m.classify(f).unwrap(), RiskClass::ALL[first]);
        }
    }

    #[test]
    fn limit_scopes_only_removes(scopes in prop::collection::btree_set("[a-z]{1,6}(:elevated)?", 0..8), class in 0usize..3) {
        let a = RiskAssessment { score: 0.5, class: RiskClass::ALL[class], features: FeatureVector::zeros(), source: ScoreSource::Rule };
        let d = decide(&a, Stage::ResourceAccess, &scopes);
        prop_assert!(d.stripped_scopes.is_subset(&scopes));
        prop_assert!(d.effective_scopes(&scopes).is_subset(&scopes));
    }
}

#[test]
fn assessment_is_deterministic() {
    let ctx = TransactionContext {
        subject: "alice".into(),
        client_id: "web".into(),
        ip: "203.0.113.9".into(),
        ip_reputation: 0.4,
        geo: GeoPoint { lat: 48.85, lon: 2.35 },
        timestamp: 5_000,
        device_id: "phone".into(),
        device_known: false,
        nids_malicious: false,
        tal: 1,
    };
    let prev = LastSeen { geo: GeoPoint { lat: 40.71, lon: -74.0 }, timestamp: 1_000 };
    let engine = RiskEngine::new(EngineConfig::default()).unwrap();
    let a = engine.assess(&ctx, Some(&prev)).unwrap();
    let b = engine.assess(&ctx, Some(&prev)).unwrap();
    assert_eq!(a, b);
    let scopes = BTreeSet::from(["x".to_string()]);
    assert_eq!(decide(&a, Stage::TokenIssue, &scopes), decide(&b, Stage::TokenIssue, &scopes));
}

/// Random context plus optional history, drawn uniformly over each input.
fn random_case(rng: &mut StdRng) -> (TransactionContext, Option<LastSeen>) {
    let geo = GeoPoint { lat: rng.gen_range(-60.0..60.0), lon: rng.gen_range(-180.0..180.0) };
    let ctx = TransactionContext {
        subject: "s".into(),
        client_id: "c".into(),
        ip: "192.0.2.1".into(),
        ip_reputation: rng.gen_range(0.0..=1.0),
        geo,
        timestamp: 100_000,
        device_id: "d".into(),
        device_known: rng.gen_bool(0.5),
        nids_malicious: rng.gen_bool(0.5),
        tal: rng.gen_range(0..=1),
    };
    let last_seen = rng.gen_bool(0.5).then(|| LastSeen {
        geo: GeoPoint { lat: rng.gen_range(-60.0..60.0), lon: rng.gen_range(-180.0..180.0) },
        timestamp: 100_000 - rng.gen_range(0..200_000).min(100_000),
    });
    (ctx, last_seen)
}

#[test]
fn knn_agrees_with_rule_labels() {
    for seed in 0..5u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut data: Vec<(FeatureVector, RiskClass)> = (0..500)
            .map(|_| {
                let (ctx, prev) = random_case(&mut rng);
                let f = extract_features(&ctx, prev.as_ref()).unwrap();
                (f, classify(rule_score(&f, GlobalPosture::Normal)).unwrap())
            })
            .collect();
        data.shuffle(&mut rng);
        let (train, test) = data.split_at(400);
        let mut model = KnnModel::new(5, 10_000).unwrap();
        for (f, l) in train {
            model.observe(*f, *l);
        }
        let agree = test.iter().filter(|(f, l)| model.classify(f).unwrap() == *l).count();
        let rate = agree as f64 / test.len() as f64;
        assert!(rate >= 0.90, "seed {seed}: agreement {rate}");
    }
}
