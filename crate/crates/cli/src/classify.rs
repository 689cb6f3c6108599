use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use serde::{Deserialize, Serialize};

use radaa_engine::{
    decide, Decision, FeatureVector, KnnModel, LastSeen, RiskClass, RiskEngine, ScoreSource, Stage,
    TransactionContext, FEATURE_NAMES,
};
use radaa_persist::Config;

use crate::CliResult;

#[derive(Deserialize)]
struct Input {
    #[serde(flatten)]
    context: TransactionContext,
    #[serde(default)]
    last_seen: Option<LastSeen>,
}

#[derive(Serialize)]
struct Output {
    score: f64,
    class: RiskClass,
    source: ScoreSource,
    features: BTreeMap<&'static str, f64>,
    decision: Decision,
}

fn read_input(input: &str) -> Result<String, String> {
    if input == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
        Ok(s)
    } else {
        std::fs::read_to_string(input).map_err(|e| format!("{input}: {e}"))
    }
}

pub fn run(input: &str, stage: Stage, scopes: &str, config: Option<&Path>, model: Option<&Path>) -> CliResult {
    let config = match config {
        Some(p) => Config::load(p).map_err(|e| e.to_string())?,
        None => Config::minimal("urn:radaa:classify"),
    };
    let ec = config.engine_config();
    let samples: Vec<(FeatureVector, RiskClass)> = match model {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Vec::new(),
    };
    let model = KnnModel::from_snapshot(ec.k, ec.capacity, samples).map_err(|e| e.to_string())?;
    let engine = RiskEngine::with_model(ec, model);
    engine.set_posture(config.risk.posture);

    let parsed: Input = serde_json::from_str(&read_input(input)?).map_err(|e| format!("context: {e}"))?;
    let assessment = engine
        .assess(&parsed.context, parsed.last_seen.as_ref())
        .map_err(|e| e.to_string())?;
    let scopes: BTreeSet<String> = scopes.split_whitespace().map(str::to_string).collect();
    let decision = decide(&assessment, stage, &scopes);
    let out = Output {
        score: assessment.score,
        class: assessment.class,
        source: assessment.source,
        features: FEATURE_NAMES.iter().copied().zip(assessment.features.values().iter().copied()).collect(),
        decision,
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?);
    Ok(ExitCode::SUCCESS)
}
