//! Threat scenarios, their results and the resilience matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use radaa_server::{DeploymentError, Fault, Mitigations};

use crate::scripts;
use crate::testbed::Testbed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScenarioId {
    HonestFlow,
    ClientImpersonation,
    Csrf,
    Mixup,
    CorsProbe,
    XssHeader,
    DdosPar,
    TokenInjection,
    TokenReplay,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 9] = [
        ScenarioId::HonestFlow,
        ScenarioId::ClientImpersonation,
        ScenarioId::Csrf,
        ScenarioId::Mixup,
        ScenarioId::CorsProbe,
        ScenarioId::XssHeader,
        ScenarioId::DdosPar,
        ScenarioId::TokenInjection,
        ScenarioId::TokenReplay,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::HonestFlow => "HONEST_FLOW",
            ScenarioId::ClientImpersonation => "CLIENT_IMPERSONATION",
            ScenarioId::Csrf => "CSRF",
            ScenarioId::Mixup => "MIXUP",
            ScenarioId::CorsProbe => "CORS_PROBE",
            ScenarioId::XssHeader => "XSS_HEADER",
            ScenarioId::DdosPar => "DDOS_PAR",
            ScenarioId::TokenInjection => "TOKEN_INJECTION",
            ScenarioId::TokenReplay => "TOKEN_REPLAY",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ScenarioId::HonestFlow => "TAL 1 client completes PAR, sign-in, token and resource access",
            ScenarioId::ClientImpersonation => {
                "attacker claims the honest client_id and redeems its leaked code and verifier with another key"
            }
            ScenarioId::Csrf => "attacker's own code injected into the victim client, redeemed with the victim's verifier",
            ScenarioId::Mixup => {
                "attacker-operated issuer lets the client receive a response from the honest issuer and collects the code"
            }
            ScenarioId::CorsProbe => "cross-origin requests with a forged Origin against introspection, revocation and resources",
            ScenarioId::XssHeader => "every response carries the CSP header; script-bearing parameters are rejected",
            ScenarioId::DdosPar => "200 concurrent PARs, some pointing at external request_uri, while the honest client runs",
            ScenarioId::TokenInjection => {
                "leaked bound token replayed by another client; token for one audience presented to another"
            }
            ScenarioId::TokenReplay => "captured resource request and proof replayed verbatim",
        }
    }

    /// Only the benign baseline is expected to go through.
    pub fn expected_blocked(&self) -> bool {
        *self != ScenarioId::HonestFlow
    }

    /// Rows a disabled mitigation is expected to break.
    pub fn guarded_by(fault: Fault) -> &'static [ScenarioId] {
        match fault {
            Fault::Pkce => &[ScenarioId::Csrf],
            Fault::IssCheck => &[ScenarioId::Mixup],
            Fault::SenderProof => &[
                ScenarioId::ClientImpersonation,
                ScenarioId::TokenInjection,
                ScenarioId::TokenReplay,
            ],
            Fault::ReplayCache => &[ScenarioId::TokenReplay],
            Fault::AudienceCheck => &[ScenarioId::TokenInjection],
            Fault::RateLimit => &[ScenarioId::DdosPar],
            Fault::CspHeader => &[ScenarioId::XssHeader],
            Fault::Binding => &[ScenarioId::ClientImpersonation, ScenarioId::TokenInjection],
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == norm)
            .ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

/// One observation: which step ran and what came back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub step: String,
    pub observed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub id: ScenarioId,
    pub expected_blocked: bool,
    /// Attack attempts made (for the honest baseline: protocol steps).
    pub attempted: u32,
    /// The attacker's final success condition was not reached.
    pub blocked: bool,
    /// The honest flow, run in the same deployment, still completed.
    pub honest_ok: bool,
    pub evidence: Vec<Evidence>,
}

impl ScenarioResult {
    /// Outcome as expected, and not bought by breaking legitimate use.
    pub fn passed(&self) -> bool {
        self.blocked == self.expected_blocked && self.honest_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResilienceMatrix {
    /// Mitigations switched off for this run.
    pub disabled: Vec<String>,
    pub results: Vec<ScenarioResult>,
    pub pass: bool,
}

impl ResilienceMatrix {
    pub fn new(mitigations: Mitigations, mut results: Vec<ScenarioResult>) -> Self {
        results.sort_by_key(|r| r.id);
        let disabled = Fault::ALL
            .into_iter()
            .filter(|f| mitigations.without(*f) == mitigations)
            .map(|f| f.as_str().to_string())
            .collect();
        let pass = results.iter().all(ScenarioResult::passed);
        Self { disabled, results, pass }
    }

    pub fn get(&self, id: ScenarioId) -> Option<&ScenarioResult> {
        self.results.iter().find(|r| r.id == id)
    }

    /// Every scenario present exactly once.
    pub fn is_complete(&self) -> bool {
        self.results.len() == ScenarioId::ALL.len()
            && ScenarioId::ALL.iter().all(|id| self.results.iter().filter(|r| r.id == *id).count() == 1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("deployment unavailable: {0}")]
    Deployment(#[from] DeploymentError),
    #[error("{scenario}: setup step {step} failed with {observed}")]
    Setup { scenario: ScenarioId, step: String, observed: String },
}

/// Runs one scenario against `tb`. The deployment should be fresh; scripts
/// assume no earlier traffic.
pub async fn run_scenario(id: ScenarioId, tb: &Testbed) -> Result<ScenarioResult, HarnessError> {
    let outcome = match id {
        ScenarioId::HonestFlow => scripts::honest_flow(tb).await,
        ScenarioId::ClientImpersonation => scripts::client_impersonation(tb).await?,
        ScenarioId::Csrf => scripts::csrf(tb).await?,
        ScenarioId::Mixup => scripts::mixup(tb).await?,
        ScenarioId::CorsProbe => scripts::cors_probe(tb).await?,
        ScenarioId::XssHeader => scripts::xss_header(tb).await,
        ScenarioId::DdosPar => scripts::ddos_par(tb).await,
        ScenarioId::TokenInjection => scripts::token_injection(tb).await?,
        ScenarioId::TokenReplay => scripts::token_replay(tb).await?,
    };
    let mut evidence = outcome.evidence;
    let honest_ok = if id == ScenarioId::HonestFlow {
        outcome.goal_reached
    } else {
        let honest = scripts::honest_flow(tb).await;
        evidence.extend(honest.evidence.into_iter().map(|e| Evidence { step: format!("honest/{}", e.step), ..e }));
        honest.goal_reached
    };
    Ok(ScenarioResult {
        id,
        expected_blocked: id.expected_blocked(),
        attempted: outcome.attempted,
        // for the baseline, "success" is the honest client's
        blocked: !outcome.goal_reached,
        honest_ok,
        evidence,
    })
}

/// Runs `order` with a fresh deployment per scenario.
pub async fn run_in_order(order: &[ScenarioId], mitigations: Mitigations) -> Result<ResilienceMatrix, HarnessError> {
    let mut results = Vec::with_capacity(order.len());
    for id in order {
        let tb = Testbed::new(mitigations)?;
        results.push(run_scenario(*id, &tb).await?);
    }
    Ok(ResilienceMatrix::new(mitigations, results))
}

pub async fn run_all(mitigations: Mitigations) -> Result<ResilienceMatrix, HarnessError> {
    run_in_order(&ScenarioId::ALL, mitigations).await
}

/// [`run_in_order`] on a private multi-threaded runtime, for synchronous callers.
pub fn run_blocking(order: &[ScenarioId], mitigations: Mitigations) -> Result<ResilienceMatrix, HarnessError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime starts")
        .block_on(run_in_order(order, mitigations))
}
