//! HTTP facade over the recommendation engine.
//!
//! Serves the questionnaire, records answers per session in a durable log
//! and turns completed sessions into recommendation lists. All routes other
//! than `/healthz` live under `/api/v1`.

pub mod app;
pub mod error;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use app::{router, AppState, Engine, ServiceConfig, COMPARISON_PAIRS, FEEDBACK_PROMPTS};
pub use error::{ApiError, ServiceError};
pub use store::{LogRecord, Session, SessionStatus, SessionStore};

/// Runs the service on `listener` until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    let app = router(state).into_make_service_with_connect_info::<SocketAddr>();
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        })
        .await
}
