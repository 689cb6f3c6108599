//! Resource server: token and proof validation, then risk-gated scope checks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use radaa_engine::{Action, Stage};
use radaa_persist::{ResourceConfig, ResourceServerConfig};
use radaa_token::{unseal_envelope, verify_token, RiskClass, SealedEnvelope, TokenClaims};

use crate::context::RequestMeta;
use crate::deployment::{Deployment, ProofFailure};
use crate::error::ApiError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceResponse {
    pub path: String,
    pub payload: String,
    pub effective_scopes: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Pop,
    Bearer,
}

#[derive(Debug, Clone)]
pub struct ResourceServer {
    d: Deployment,
    id: String,
}

impl ResourceServer {
    pub(crate) fn new(d: Deployment, id: String) -> Self {
        Self { d, id }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn deployment(&self) -> &Deployment {
        &self.d
    }

    pub fn config(&self) -> &ResourceServerConfig {
        &self.d.resource_entry(&self.id).expect("constructed for a configured server").config
    }

    /// Absolute URI of a resource, as bound into sender proofs.
    pub fn resource_uri(&self, path: &str) -> String {
        format!("{}/resource/{}", self.id.trim_end_matches('/'), path.trim_start_matches('/'))
    }

    fn find(&self, path: &str) -> Option<&ResourceConfig> {
        let path = path.trim_start_matches('/');
        self.config()
            .resources
            .iter()
            .find(|r| r.path.trim_start_matches('/') == path)
    }

    /// Unseals (if needed) and verifies the presented token.
    fn open_token(&self, presented: &str) -> Result<TokenClaims, ApiError> {
        let wire = if presented.contains('.') {
            presented.to_string()
        } else {
            let key = self
                .d
                .resource_entry(&self.id)
                .and_then(|e| e.sealing_key.as_deref())
                .ok_or_else(|| ApiError::invalid_token("malformed", "sealed token but no sealing key"))?;
            let sealed = SealedEnvelope::from_wire(presented)
                .map_err(|_| ApiError::invalid_token("malformed", "token is not a valid envelope"))?;
            unseal_envelope(&sealed, key)
                .map_err(|_| ApiError::invalid_token("unseal", "sealed token could not be opened"))?
                .into_string()
        };
        verify_token(&wire, self.d.verification_keys())
            .map_err(|e| ApiError::invalid_token("signature", format!("token rejected: {e}")))
    }

    pub fn access(
        &self,
        method: &str,
        path: &str,
        authorization: Option<&str>,
        proof: Option<&str>,
        meta: &RequestMeta,
    ) -> Result<ResourceResponse, ApiError> {
        self.d.audited("resource", |trace| {
            let (scheme, presented) = match authorization.and_then(|h| h.split_once(' ')) {
                Some(("PoP", t)) => (Scheme::Pop, t.trim()),
                Some(("Bearer", t)) => (Scheme::Bearer, t.trim()),
                _ => return Err(ApiError::invalid_token("missing", "PoP or Bearer authorization required")),
            };
            let resource = self
                .find(path)
                .ok_or_else(|| ApiError::new(404, "not_found", "no such resource"))?;
            let claims = self.open_token(presented)?;
            trace.actor = claims.client_id.clone();
            let now = self.d.now();
            if now >= claims.exp {
                return Err(ApiError::invalid_token("expired", "token expired"));
            }
            if self.d.mitigations().audience_check && claims.aud != self.id {
                return Err(ApiError::invalid_token("audience", "token audience is another server"));
            }
            if self.d.is_revoked(&claims.jti) {
                return Err(ApiError::invalid_token("revoked", "token revoked"));
            }
            match (&claims.cnf_thumbprint, scheme) {
                (Some(cnf), _) => {
                    if scheme == Scheme::Bearer && self.d.mitigations().sender_proof {
                        return Err(ApiError::invalid_token("binding", "sender-constrained token presented as bearer"));
                    }
                    let uri = self.resource_uri(path);
                    if let Err(f) = self.d.check_proof(proof, method, &uri, Some(presented), cnf) {
                        if let Some(feat) = self.d.features_of(&claims.sub, &claims.client_id, claims.tal, meta) {
                            self.d.observe_attack(feat);
                        }
                        return Err(match f {
                            ProofFailure::Missing => ApiError::invalid_token("proof_missing", "sender proof required"),
                            ProofFailure::Invalid(e) => ApiError::invalid_token(e.code(), format!("sender proof rejected: {e}")),
                        });
                    }
                }
                (None, Scheme::Pop) => {
                    return Err(ApiError::invalid_token("binding", "bearer token presented with PoP scheme"));
                }
                (None, Scheme::Bearer) => {}
            }
            let risk = self.d.assess(
                trace,
                &claims.sub,
                &claims.client_id,
                claims.tal,
                meta,
                Stage::ResourceAccess,
                &claims.scope,
            )?;
            let effective = match risk.decision.action {
                Action::DenyAndRevoke | Action::Deny => {
                    self.d.revoke_jti(&claims.jti, "high-risk resource access")?;
                    self.d.observe_attack(risk.assessment.features);
                    return Err(ApiError::forbidden("risk_denied", "access denied by risk policy; token revoked"));
                }
                _ => risk.decision.effective_scopes(&claims.scope),
            };
            if !effective.contains(&resource.required_scope) {
                return Err(if claims.scope.contains(&resource.required_scope) {
                    ApiError::forbidden(
                        "risk_denied",
                        format!(
                            "scope withheld under elevated risk; effective scopes: {}",
                            effective.iter().cloned().collect::<Vec<_>>().join(" ")
                        ),
                    )
                } else {
                    ApiError::forbidden("insufficient_scope", "token lacks the required scope")
                });
            }
            if risk.assessment.class == RiskClass::Low {
                self.d.observe(risk.assessment.features, RiskClass::Low);
            }
            self.d.note_seen(&claims.sub, meta, false)?;
            Ok(ResourceResponse {
                path: resource.path.clone(),
                payload: resource.payload.clone(),
                effective_scopes: effective,
            })
        })
    }
}
