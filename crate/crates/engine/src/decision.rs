use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::RiskAssessment;
use radaa_token::RiskClass;

/// Scopes ending in this marker are withheld under elevated risk.
pub const ELEVATED_SUFFIX: &str = ":elevated";

pub fn is_elevated(scope: &str) -> bool {
    scope.ends_with(ELEVATED_SUFFIX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Authn,
    TokenIssue,
    ResourceAccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    Proceed,
    StepUp,
    LimitScopes,
    Deny,
    DenyAndRevoke,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    /// Non-empty only for `LimitScopes`.
    pub stripped_scopes: BTreeSet<String>,
}

impl Decision {
    fn plain(action: Action) -> Self {
        Self {
            action,
            stripped_scopes: BTreeSet::new(),
        }
    }

    /// `requested` minus whatever this decision strips.
    pub fn effective_scopes(&self, requested: &BTreeSet<String>) -> BTreeSet<String> {
        requested.difference(&self.stripped_scopes).cloned().collect()
    }
}

pub fn decide(assessment: &RiskAssessment, stage: Stage, requested_scopes: &BTreeSet<String>) -> Decision {
    match (assessment.class, stage) {
        (RiskClass::Low, _) => Decision::plain(Action::Proceed),
        (RiskClass::Medium, Stage::Authn | Stage::TokenIssue) => Decision::plain(Action::StepUp),
        (RiskClass::Medium, Stage::ResourceAccess) => Decision {
            action: Action::LimitScopes,
            stripped_scopes: requested_scopes
                .iter()
                .filter(|s| is_elevated(s))
                .cloned()
                .collect(),
        },
        (RiskClass::High, Stage::Authn | Stage::TokenIssue) => Decision::plain(Action::Deny),
        (RiskClass::High, Stage::ResourceAccess) => Decision::plain(Action::DenyAndRevoke),
    }
}
