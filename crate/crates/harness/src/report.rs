//! Text and JSON renderings of a resilience matrix.

use std::fmt::Write;

use crate::scenario::{ResilienceMatrix, ScenarioId, ScenarioResult};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("matrix does not cover every scenario exactly once")]
    Incomplete,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn label(blocked: bool) -> &'static str {
    if blocked {
        "blocked"
    } else {
        "completed"
    }
}

const HEADER: [&str; 5] = ["scenario", "expected", "observed", "honest", "result"];

fn row(cells: [&str; 5]) -> String {
    let width = ScenarioId::ALL.iter().map(|id| id.as_str().len()).max().unwrap_or(0);
    let [a, b, c, d, e] = cells;
    format!("{a:<width$}  {b:<9}  {c:<9}  {d:<6}  {e}\n")
}

/// Header plus one row per result, in the order given. Usable for partial runs.
pub fn render_results(results: &[ScenarioResult]) -> String {
    let mut out = row(HEADER);
    for r in results {
        out.push_str(&row([
            r.id.as_str(),
            label(r.expected_blocked),
            label(r.blocked),
            if r.honest_ok { "ok" } else { "broken" },
            if r.passed() { "PASS" } else { "FAIL" },
        ]));
    }
    out
}

/// Plain-text table, one row per threat vector. Deterministic: rows follow
/// scenario order and contain no timings or random values.
pub fn render_matrix(m: &ResilienceMatrix) -> Result<String, RenderError> {
    if !m.is_complete() {
        return Err(RenderError::Incomplete);
    }
    let disabled = if m.disabled.is_empty() { "none".to_string() } else { m.disabled.join(", ") };
    let rows: Vec<ScenarioResult> = ScenarioId::ALL
        .iter()
        .map(|id| m.get(*id).cloned().ok_or(RenderError::Incomplete))
        .collect::<Result<_, _>>()?;
    let mut out = format!("disabled mitigations: {disabled}\n");
    out.push_str(&render_results(&rows));
    let _ = writeln!(out, "overall: {}", if m.pass { "PASS" } else { "FAIL" });
    Ok(out)
}

pub fn render_json(m: &ResilienceMatrix) -> Result<String, RenderError> {
    if !m.is_complete() {
        return Err(RenderError::Incomplete);
    }
    Ok(serde_json::to_string_pretty(m)?)
}

/// Reads a matrix back from [`render_json`] output.
pub fn parse_json(s: &str) -> Result<ResilienceMatrix, RenderError> {
    Ok(serde_json::from_str(s)?)
}
