use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use axum::Router;

use radaa_persist::{AuditLog, Config, KeyFile, Store};
use radaa_server::{auth_router, resource_router, Deployment, DeploymentOptions};
use radaa_token::{KeyPair, SystemClock};

use crate::CliResult;

/// Mounts each resource server under the path part of its id, so that the
/// URI a client signs (`<id>/resource/<path>`) is the one the listener serves.
fn resource_routes(d: &Deployment) -> Result<Router, String> {
    let mut mounts: BTreeMap<String, Router> = BTreeMap::new();
    for id in d.resource_server_ids() {
        let url = url::Url::parse(&id).map_err(|e| format!("resource server id {id}: {e}"))?;
        let prefix = url.path().trim_end_matches('/').to_string();
        let rs = d.resource_server(&id).ok_or_else(|| format!("resource server {id} missing"))?;
        if mounts.insert(prefix.clone(), resource_router(rs)).is_some() {
            return Err(format!("two resource servers share the path {prefix:?}"));
        }
    }
    let mut root = mounts.remove("").unwrap_or_default();
    for (prefix, r) in mounts {
        root = root.nest(&prefix, r);
    }
    Ok(root)
}

fn signing_key(config: &Config) -> Result<KeyPair, String> {
    match &config.signing_key {
        Some(path) => KeyFile::read(path)
            .and_then(|f| f.to_key())
            .map_err(|e| format!("{}: {e}", path.display())),
        None => {
            tracing::warn!("no signing_key configured; tokens will not verify after restart");
            Ok(KeyPair::generate_ed25519("as-signing"))
        }
    }
}

pub fn run(config_path: &Path) -> CliResult {
    let config = Config::load(config_path).map_err(|e| e.to_string())?;
    let store = match &config.data_dir {
        Some(dir) => Store::open(dir).map_err(|e| format!("{}: {e}", dir.display()))?,
        None => {
            tracing::warn!("no data_dir configured; state is kept in memory");
            Store::in_memory()
        }
    };
    let audit = match &config.audit_log {
        Some(path) => AuditLog::open(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => {
            tracing::warn!("no audit_log configured; audit records are kept in memory");
            AuditLog::in_memory()
        }
    };
    let mut opts = DeploymentOptions::in_memory(Arc::new(SystemClock));
    opts.store = Arc::new(store);
    opts.audit = Arc::new(audit);
    opts.signing_key = signing_key(&config)?;
    let as_addr = config.listen.auth_server.clone();
    let rs_addr = config.listen.resource_server.clone();
    let deployment = Deployment::new(config, opts).map_err(|e| e.to_string())?;
    let as_app = auth_router(deployment.auth_server());
    let rs_app = resource_routes(&deployment)?;

    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let as_listener = tokio::net::TcpListener::bind(&as_addr)
            .await
            .map_err(|e| format!("bind {as_addr}: {e}"))?;
        let rs_listener = tokio::net::TcpListener::bind(&rs_addr)
            .await
            .map_err(|e| format!("bind {rs_addr}: {e}"))?;
        eprintln!("authorization server on {as_addr}, resource servers on {rs_addr}");
        tokio::try_join!(axum::serve(as_listener, as_app), axum::serve(rs_listener, rs_app))
            .map_err(|e| e.to_string())?;
        Ok(ExitCode::SUCCESS)
    })
}
