use serde::Serialize;

use radaa_persist::StoreError;

/// Protocol error returned to callers as `{"error", "error_description"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    #[serde(rename = "error")]
    pub code: &'static str,
    #[serde(rename = "error_description")]
    pub description: String,
    /// Finer-grained cause for `invalid_token` rejections.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub challenge_id: Option<String>,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, description: impl Into<String>) -> Self {
        Self {
            status,
            code,
            description: description.into(),
            reason: None,
            challenge_id: None,
        }
    }

    pub fn bad_request(code: &'static str, description: impl Into<String>) -> Self {
        Self::new(400, code, description)
    }

    pub fn unauthorized(code: &'static str, description: impl Into<String>) -> Self {
        Self::new(401, code, description)
    }

    pub fn forbidden(code: &'static str, description: impl Into<String>) -> Self {
        Self::new(403, code, description)
    }

    pub fn invalid_token(reason: &'static str, description: impl Into<String>) -> Self {
        Self {
            reason: Some(reason),
            ..Self::unauthorized("invalid_token", description)
        }
    }

    pub fn step_up_required(challenge_id: String) -> Self {
        Self {
            challenge_id: Some(challenge_id),
            ..Self::forbidden("step_up_required", "additional verification required")
        }
    }

    pub fn internal(description: impl Into<String>) -> Self {
        Self::new(500, "server_error", description)
    }

    /// The most specific code available: `reason` when set, else `code`.
    pub fn detail(&self) -> &'static str {
        self.reason.unwrap_or(self.code)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status, self.code, self.description)
    }
}

impl std::error::Error for ApiError {}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::internal(format!("store: {e}"))
    }
}
