//! Technician-facing HTTP service: search, task preview and outcome timing
//! over an immutable index snapshot.

pub mod api;
pub mod clock;
pub mod config;
pub mod sessions;
pub mod state;

use std::sync::Arc;

use axum::Router;
use thiserror::Error;
use tower_http::services::ServeDir;

pub use api::router;
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::ServiceConfig;
pub use sessions::{SearchSession, SessionError, SessionStore};
pub use state::{load_index, AppState, Snapshot};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] ataseek_core::ingest::IngestError),
    #[error(transparent)]
    Index(#[from] ataseek_core::index::IndexError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// API routes, plus the web console assets when a static directory is set.
pub fn app(state: Arc<AppState>, static_dir: Option<&std::path::Path>) -> Router {
    let api = router(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::from_config(&config)?);
    if state.current().is_none() {
        tracing::warn!("KB_PATH not set; search returns 503 until a snapshot is installed");
    }
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app(state, config.static_dir.as_deref())).await?;
    Ok(())
}
