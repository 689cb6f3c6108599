//! Authorization server and resource servers of a deployment, with their HTTP surface.
//!
//! The protocol logic is synchronous and lives in [`AuthServer`] and
//! [`ResourceServer`]; [`http`] exposes both as axum routers. A
//! [`Deployment`] holds the state they share (store, audit log, risk engine,
//! replay cache, signing key) and the [`Mitigations`] switches used for fault
//! injection.

pub mod auth;
pub mod context;
pub mod deployment;
pub mod error;
pub mod federation;
pub mod http;
pub mod mitigations;
pub mod records;
pub mod resource;

pub use auth::{
    AuthServer, AuthorizeParams, AuthorizeResponse, ClientMetadata, ExchangeParams,
    IntrospectParams, IntrospectResponse, ParParams, ParResponse, PossessionProof, RefreshParams,
    Registration, RevokeParams, RevokeResponse, StepUpParams, StepUpResponse, TokenParams,
    TokenResponse, REQUEST_URI_PREFIX,
};
pub use context::RequestMeta;
pub use deployment::{Deployment, DeploymentError, DeploymentOptions, OutOfBandMessage, Outbox};
pub use error::ApiError;
pub use federation::{FederationError, FederationRegistry, IdentityProvider, StubIdentityProvider};
pub use http::{auth_router, resource_router, CSP_VALUE};
pub use mitigations::{Fault, Mitigations};
pub use resource::{ResourceResponse, ResourceServer};
