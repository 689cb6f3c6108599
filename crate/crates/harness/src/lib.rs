//! Threat harness: scripted honest and adversarial flows against an
//! in-process deployment, summarised as a resilience matrix.
//!
//! Every scenario gets a fresh [`Testbed`] (in-memory store, manual clock,
//! seeded clients). Attacks are judged by their final success condition
//! (usually: reading a protected payload), never by which error came back
//! first, and each attack run also replays the honest flow so a defence that
//! breaks legitimate use shows up as a failure.

mod report;
mod scenario;
mod scripts;
pub mod testbed;

pub use report::{parse_json, render_json, render_matrix, render_results, RenderError};
pub use scenario::{
    run_all, run_blocking, run_in_order, run_scenario, Evidence, HarnessError, ResilienceMatrix, ScenarioId,
    ScenarioResult,
};
pub use scripts::FLOOD_SIZE;
pub use testbed::Testbed;
