use std::time::Duration;

use serde::Serialize;

/// Delays before each retry. Three retries after the first attempt.
pub const DEFAULT_RETRY_DELAYS: [Duration; 3] = [Duration::from_secs(1), Duration::from_secs(2), Duration::from_secs(4)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    Delivered { attempts: usize },
    Failed { attempts: usize, last_error: String },
}

#[derive(Debug, Clone)]
pub struct WebhookDispatcher {
    client: reqwest::Client,
    retry_delays: Vec<Duration>,
}

impl WebhookDispatcher {
    pub fn new(retry_delays: Vec<Duration>) -> Self {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .expect("http client");
        WebhookDispatcher { client, retry_delays }
    }

    pub fn retry_delays(&self) -> &[Duration] {
        &self.retry_delays
    }

    /// POSTs `payload` as JSON until a 2xx response, retrying after each
    /// configured delay.
    pub async fn deliver<P: Serialize + ?Sized>(&self, url: &str, payload: &P) -> Delivery {
        let mut attempts = 0;
        let mut last_error = String::new();
        for delay in std::iter::once(None).chain(self.retry_delays.iter().map(Some)) {
            if let Some(d) = delay {
                tokio::time::sleep(*d).await;
            }
            attempts += 1;
            match self.client.post(url).json(payload).send().await {
                Ok(resp) if resp.status().is_success() => return Delivery::Delivered { attempts },
                Ok(resp) => last_error = format!("receiver answered {}", resp.status()),
                Err(e) => last_error = e.to_string(),
            }
            tracing::warn!(url, attempts, error = %last_error, "webhook attempt failed");
        }
        Delivery::Failed { attempts, last_error }
    }
}

impl Default for WebhookDispatcher {
    fn default() -> Self {
        Self::new(DEFAULT_RETRY_DELAYS.to_vec())
    }
}
