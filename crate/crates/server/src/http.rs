//! HTTP+JSON surface. Handlers only translate between HTTP and the domain
//! operations in [`crate::auth`] and [`crate::resource`].

use axum::extract::rejection::FormRejection;
use axum::extract::{Path, Query, State};
use axum::http::header::{HeaderValue, AUTHORIZATION, CONTENT_SECURITY_POLICY};
use axum::http::{HeaderMap, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{middleware, Form, Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::auth::AuthServer;
use crate::context::*;
use crate::error::ApiError;
use crate::resource::ResourceServer;

pub const CSP_VALUE: &str = "default-src 'none'";

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

fn header<'a>(headers: &'a HeaderMap, name: &str) -> Option<&'a str> {
    headers.get(name).and_then(|v| v.to_str().ok())
}

fn meta(headers: &HeaderMap) -> Result<RequestMeta, ApiError> {
    RequestMeta::from_values(
        header(headers, CLIENT_IP_HEADER),
        header(headers, GEO_HEADER),
        header(headers, DEVICE_HEADER),
        header(headers, NIDS_HEADER),
    )
}

fn form<T: DeserializeOwned>(f: Result<Form<T>, FormRejection>) -> Result<T, ApiError> {
    f.map(|Form(t)| t)
        .map_err(|_| ApiError::bad_request("invalid_request", "expected an application/x-www-form-urlencoded body"))
}

fn reply<T: Serialize>(status: StatusCode, r: Result<T, ApiError>) -> Response {
    match r {
        Ok(body) => (status, Json(body)).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Adds the CSP header to every response when `enabled`. No cross-origin
/// headers are ever emitted.
fn with_csp(router: Router, enabled: bool) -> Router {
    if !enabled {
        return router;
    }
    router.layer(middleware::map_response(|mut res: Response| async move {
        res.headers_mut()
            .insert(CONTENT_SECURITY_POLICY, HeaderValue::from_static(CSP_VALUE));
        res
    }))
}

pub fn auth_router(server: AuthServer) -> Router {
    let csp = server.deployment().mitigations().csp_header;
    let router = Router::new()
        .route("/par", post(par))
        .route("/authorize", get(authorize_get).post(authorize_post))
        .route("/token", post(token))
        .route("/refresh", post(refresh))
        .route("/revoke", post(revoke))
        .route("/introspect", post(introspect))
        .route("/exchange", post(exchange))
        .route("/step-up", post(step_up))
        .fallback(not_found)
        .with_state(server);
    with_csp(router, csp)
}

pub fn resource_router(server: ResourceServer) -> Router {
    let csp = server.deployment().mitigations().csp_header;
    let router = Router::new()
        .route("/resource/{*path}", get(resource))
        .fallback(not_found)
        .with_state(server);
    with_csp(router, csp)
}

async fn not_found() -> Response {
    ApiError::new(404, "not_found", "no such endpoint").into_response()
}

async fn par(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    body: Result<Form<crate::auth::ParParams>, FormRejection>,
) -> Response {
    let r = meta(&headers).and_then(|m| s.par(&form(body)?, header(&headers, SENDER_PROOF_HEADER), &m));
    reply(StatusCode::CREATED, r)
}

async fn authorize_get(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    Query(params): Query<crate::auth::AuthorizeParams>,
) -> Response {
    reply(StatusCode::OK, meta(&headers).and_then(|m| s.authorize(&params, &m)))
}

async fn authorize_post(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    body: Result<Form<crate::auth::AuthorizeParams>, FormRejection>,
) -> Response {
    reply(StatusCode::OK, meta(&headers).and_then(|m| s.authorize(&form(body)?, &m)))
}

async fn token(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    body: Result<Form<crate::auth::TokenParams>, FormRejection>,
) -> Response {
    let r = meta(&headers).and_then(|m| s.token(&form(body)?, header(&headers, SENDER_PROOF_HEADER), &m));
    reply(StatusCode::OK, r)
}

async fn refresh(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    body: Result<Form<crate::auth::RefreshParams>, FormRejection>,
) -> Response {
    let r = meta(&headers).and_then(|m| s.refresh(&form(body)?, header(&headers, SENDER_PROOF_HEADER), &m));
    reply(StatusCode::OK, r)
}

async fn revoke(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    body: Result<Form<crate::auth::RevokeParams>, FormRejection>,
) -> Response {
    let r = form(body).and_then(|p| s.revoke(&p, header(&headers, SENDER_PROOF_HEADER)));
    reply(StatusCode::OK, r)
}

async fn introspect(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    body: Result<Form<crate::auth::IntrospectParams>, FormRejection>,
) -> Response {
    let r = form(body).and_then(|p| s.introspect(&p, header(&headers, SENDER_PROOF_HEADER)));
    reply(StatusCode::OK, r)
}

async fn exchange(
    State(s): State<AuthServer>,
    headers: HeaderMap,
    body: Result<Form<crate::auth::ExchangeParams>, FormRejection>,
) -> Response {
    let r = meta(&headers).and_then(|m| s.exchange(&form(body)?, header(&headers, SENDER_PROOF_HEADER), &m));
    reply(StatusCode::OK, r)
}

async fn step_up(
    State(s): State<AuthServer>,
    body: Result<Form<crate::auth::StepUpParams>, FormRejection>,
) -> Response {
    reply(StatusCode::OK, form(body).and_then(|p| s.complete_step_up(&p)))
}

async fn resource(
    State(s): State<ResourceServer>,
    method: Method,
    headers: HeaderMap,
    Path(path): Path<String>,
) -> Response {
    let r = meta(&headers).and_then(|m| {
        s.access(
            method.as_str(),
            &path,
            header(&headers, AUTHORIZATION.as_str()),
            header(&headers, SENDER_PROOF_HEADER),
            &m,
        )
    });
    reply(StatusCode::OK, r)
}
