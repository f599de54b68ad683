//! Session-oriented HTTP service: upload an image, paint masks, inpaint,
//! reclassify, undo and fetch class activation maps.

pub mod api;
pub mod config;
pub mod error;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::time::Duration;

use thiserror::Error;
use tokio::net::TcpListener;
use whatif_core::{ModelError, ModelGraph};

pub use api::{router, AppState};
pub use config::{BusyMode, ServiceConfig};
pub use error::ServiceError;
pub use session::{EditRecord, Session, SessionSnapshot};
pub use store::SessionStore;

const EVICTION_INTERVAL: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("loading model: {0}")]
    Model(#[from] ModelError),
    #[error("binding {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[from] std::io::Error),
}

/// Loads the model named in `config` and serves until the process exits.
pub async fn serve(config: ServiceConfig) -> Result<(), StartupError> {
    let graph = ModelGraph::load_path(&config.model_path)?;
    let addr = SocketAddr::new(config.host, config.port);
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| StartupError::Bind { addr, source })?;
    let state = AppState::new(graph, config);
    let _evictor = state.store.spawn_evictor(EVICTION_INTERVAL);
    tracing::info!(%addr, model = state.graph.name(), "listening");
    axum::serve(listener, router(state)).await?;
    Ok(())
}
