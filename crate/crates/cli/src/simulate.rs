use std::path::Path;
use std::process::ExitCode;

use radaa_harness::{parse_json, render_json, render_matrix, render_results, run_blocking, ResilienceMatrix, ScenarioId};
use radaa_server::{Fault, Mitigations};

use crate::CliResult;

/// Full matrices get the matrix layout; a scenario subset is listed as rows.
fn render(matrix: &ResilienceMatrix) -> Result<String, String> {
    if matrix.is_complete() {
        render_matrix(matrix).map_err(|e| e.to_string())
    } else {
        Ok(render_results(&matrix.results))
    }
}

pub fn run(scenario: &str, faults: &[String], report: Option<&Path>) -> CliResult {
    let mut mitigations = Mitigations::default();
    for f in faults {
        mitigations = mitigations.without(f.parse::<Fault>()?);
    }
    let order: Vec<ScenarioId> = if scenario.eq_ignore_ascii_case("all") {
        ScenarioId::ALL.to_vec()
    } else {
        vec![scenario.parse()?]
    };
    let matrix = run_blocking(&order, mitigations).map_err(|e| e.to_string())?;

    let text = render(&matrix)?;
    print!("{text}");
    if let Some(path) = report {
        std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display()))?;
        let json = if matrix.is_complete() {
            render_json(&matrix).map_err(|e| e.to_string())?
        } else {
            serde_json::to_string_pretty(&matrix).map_err(|e| e.to_string())?
        };
        let json_path = format!("{}.json", path.display());
        std::fs::write(&json_path, json).map_err(|e| format!("{json_path}: {e}"))?;
    }
    Ok(if matrix.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn report(path: &Path) -> CliResult {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let matrix = parse_json(&text).map_err(|e| e.to_string())?;
    print!("{}", render(&matrix)?);
    Ok(if matrix.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
