//! HTTP tutor service: per-level model registry, sessions, webhooks and
//! the speech-provider seam.

pub mod api;
pub mod registry;
pub mod sessions;
pub mod speech;
pub mod webhook;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::http::{header, HeaderValue, Method};
use axum::Router;
use tokio::net::TcpListener;
use tokio::task::JoinSet;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::trace::{DefaultMakeSpan, DefaultOnResponse, TraceLayer};

use crate::error::{Error, Result};

pub use api::{ApiError, ErrorBody, WebhookPayload};
pub use registry::{LevelInfo, LoadedModel, ModelRegistry};
pub use sessions::{SessionRecord, SessionStore, Turn};
pub use speech::{AudioFormat, MockSpeechProvider, SpeechError, SpeechProvider};
pub use webhook::{Delivery, WebhookDispatcher, DEFAULT_RETRY_DELAYS};

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub models_dir: PathBuf,
    /// Session files go here; `None` keeps sessions in memory only.
    pub data_dir: Option<PathBuf>,
    pub port: u16,
    pub cors_origin: Option<String>,
    pub webhook_retry_delays: Vec<Duration>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            models_dir: PathBuf::from("models"),
            data_dir: Some(PathBuf::from("data")),
            port: DEFAULT_PORT,
            cors_origin: None,
            webhook_retry_delays: DEFAULT_RETRY_DELAYS.to_vec(),
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `LEXITUTOR_MODELS_DIR`, `LEXITUTOR_DATA_DIR`,
    /// `LEXITUTOR_PORT` and `LEXITUTOR_CORS_ORIGIN`.
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut cfg = ServiceConfig::default();
        if let Some(v) = get("LEXITUTOR_MODELS_DIR") {
            cfg.models_dir = v.into();
        }
        if let Some(v) = get("LEXITUTOR_DATA_DIR") {
            cfg.data_dir = Some(v.into());
        }
        if let Some(v) = get("LEXITUTOR_PORT") {
            cfg.port = v
                .parse()
                .map_err(|_| Error::config(format!("LEXITUTOR_PORT must be a port number, got {v:?}")))?;
        }
        cfg.cors_origin = get("LEXITUTOR_CORS_ORIGIN").filter(|v| !v.is_empty());
        Ok(cfg)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<ModelRegistry>,
    pub sessions: Arc<SessionStore>,
    pub webhooks: WebhookDispatcher,
    pub speech: Arc<dyn SpeechProvider>,
    background: Arc<Mutex<JoinSet<()>>>,
}

impl AppState {
    pub fn new(registry: ModelRegistry, sessions: SessionStore, webhooks: WebhookDispatcher, speech: Arc<dyn SpeechProvider>) -> Self {
        AppState {
            registry: Arc::new(registry),
            sessions: Arc::new(sessions),
            webhooks,
            speech,
            background: Arc::new(Mutex::new(JoinSet::new())),
        }
    }

    /// Loads models and sessions as configured, with the mock speech provider.
    pub fn from_config(cfg: &ServiceConfig) -> Result<Self> {
        let registry = ModelRegistry::load_dir(&cfg.models_dir)?;
        let sessions = match &cfg.data_dir {
            Some(dir) => SessionStore::open(dir)?,
            None => SessionStore::in_memory(),
        };
        Ok(AppState::new(
            registry,
            sessions,
            WebhookDispatcher::new(cfg.webhook_retry_delays.clone()),
            Arc::new(MockSpeechProvider::default()),
        ))
    }

    pub(crate) fn spawn_background(&self, task: impl Future<Output = ()> + Send + 'static) {
        let mut set = self.background.lock().expect("background set poisoned");
        while set.try_join_next().is_some() {}
        set.spawn(task);
    }

    /// Waits for outstanding webhook deliveries, up to `limit`.
    pub async fn drain_background(&self, limit: Duration) {
        let mut set = std::mem::take(&mut *self.background.lock().expect("background set poisoned"));
        if set.is_empty() {
            return;
        }
        tracing::info!(pending = set.len(), "waiting for background deliveries");
        if tokio::time::timeout(limit, async { while set.join_next().await.is_some() {} }).await.is_err() {
            tracing::warn!("background deliveries still running at shutdown; aborting them");
            set.abort_all();
        }
    }
}

pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router> {
    let trace = TraceLayer::new_for_http()
        .make_span_with(DefaultMakeSpan::new().level(tracing::Level::INFO))
        .on_response(DefaultOnResponse::new().level(tracing::Level::INFO));
    let mut app = api::routes().with_state(state).layer(trace);
    if let Some(origin) = cors_origin {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            let values = origin
                .split(',')
                .map(|o| HeaderValue::from_str(o.trim()).map_err(|_| Error::config(format!("bad CORS origin {o:?}"))))
                .collect::<Result<Vec<_>>>()?;
            AllowOrigin::list(values)
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

/// Serves on an already-bound listener until `shutdown` resolves, then
/// waits for pending webhooks.
pub async fn serve_on(
    listener: TcpListener,
    state: AppState,
    cors_origin: Option<&str>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<()> {
    let app = router(state.clone(), cors_origin)?;
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    state.drain_background(Duration::from_secs(10)).await;
    tracing::info!("service stopped");
    Ok(())
}

/// Binds `0.0.0.0:<port>` and serves until Ctrl-C.
pub async fn serve(cfg: ServiceConfig) -> Result<()> {
    let state = AppState::from_config(&cfg)?;
    let addr = SocketAddr::from(([0, 0, 0, 0], cfg.port));
    let listener = TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, models = state.registry.len(), "listening");
    serve_on(listener, state, cfg.cors_origin.as_deref(), async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("interrupt received, shutting down");
    })
    .await
}
