//! Spawns the service on an ephemeral port, plus a stub webhook receiver.

use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use lexitutor::corpus::{Level, Vocabulary};
use lexitutor::model::{build_model, save_checkpoint, LanguageModel, ModelConfig, Preset};
use lexitutor::nn::RngState;
use lexitutor::service::{serve_on, AppState, MockSpeechProvider, ModelRegistry, SessionStore, SpeechProvider, WebhookDispatcher};
use tokio::sync::oneshot;

pub struct TestServer {
    pub base: String,
    pub state: AppState,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<()>>,
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// Graceful shutdown, waiting for pending webhooks.
    pub async fn stop(mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.task.take() {
            t.await.unwrap();
        }
    }
}

pub async fn spawn_server(state: AppState, cors: Option<&str>) -> TestServer {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = oneshot::channel::<()>();
    let cors = cors.map(str::to_owned);
    let st = state.clone();
    let task = tokio::spawn(async move {
        serve_on(listener, st, cors.as_deref(), async {
            let _ = rx.await;
        })
        .await
        .unwrap();
    });
    TestServer {
        base,
        state,
        stop: Some(tx),
        task: Some(task),
    }
}

/// Small untrained model whose vocabulary is level-specific.
pub fn level_model(level: Level, seed: u64) -> LanguageModel {
    let words: Vec<String> = ["i", "like", "tea", "you", "go", "home", "we", "read"]
        .iter()
        .map(|w| w.to_string())
        .collect();
    let cfg = ModelConfig {
        preset: Preset::Stacked,
        vocab_size: words.len() + 2,
        embed_dim: 6,
        hidden: 8,
        window: 4,
        dropout_rate: 0.5,
        bidirectional_first_layer: false,
        use_attention: false,
    };
    let mut m: LanguageModel = build_model(cfg, Vocabulary::from_words(words).unwrap(), &mut RngState::new(seed)).unwrap();
    m.set_level(Some(level));
    m
}

pub fn write_models(dir: &Path, levels: &[Level]) {
    for (i, &level) in levels.iter().enumerate() {
        save_checkpoint(&level_model(level, i as u64 + 1), &dir.join(format!("{level}.ckpt"))).unwrap();
    }
}

pub fn state_with(models_dir: &Path, data_dir: Option<&Path>, speech: Arc<dyn SpeechProvider>) -> AppState {
    let registry = ModelRegistry::load_dir(models_dir).unwrap();
    let sessions = match data_dir {
        Some(d) => SessionStore::open(d).unwrap(),
        None => SessionStore::in_memory(),
    };
    AppState::new(registry, sessions, WebhookDispatcher::new(vec![Duration::from_millis(20); 3]), speech)
}

pub fn mock() -> Arc<dyn SpeechProvider> {
    Arc::new(MockSpeechProvider::default())
}

/// Records every JSON body POSTed to `/hook`; answers `status`.
pub struct WebhookReceiver {
    pub url: String,
    pub received: Arc<Mutex<Vec<serde_json::Value>>>,
}

impl WebhookReceiver {
    pub async fn start(status: StatusCode) -> Self {
        let received = Arc::new(Mutex::new(Vec::new()));
        let app = Router::new()
            .route(
                "/hook",
                post(|State((store, status)): State<(Arc<Mutex<Vec<serde_json::Value>>>, StatusCode)>, Json(v): Json<serde_json::Value>| async move {
                    store.lock().unwrap().push(v);
                    status
                }),
            )
            .with_state((received.clone(), status));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let url = format!("http://{}/hook", listener.local_addr().unwrap());
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        WebhookReceiver { url, received }
    }

    pub fn count(&self) -> usize {
        self.received.lock().unwrap().len()
    }

    /// Polls until at least `n` webhooks arrived or `timeout` passes.
    pub async fn wait_for(&self, n: usize, timeout: Duration) -> Vec<serde_json::Value> {
        let deadline = tokio::time::Instant::now() + timeout;
        while self.count() < n && tokio::time::Instant::now() < deadline {
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
        self.received.lock().unwrap().clone()
    }
}

/// A `multipart/form-data` body with one file part.
pub fn multipart_body(boundary: &str, field: &str, file_name: &str, content_type: &str, data: &[u8]) -> Vec<u8> {
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"{field}\"; filename=\"{file_name}\"\r\nContent-Type: {content_type}\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(data);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    body
}
