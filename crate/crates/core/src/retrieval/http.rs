use std::time::Duration;

use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub url: String,
    pub timeout: Duration,
    /// Extra attempts after the first one.
    pub retries: u32,
    pub backoff: Duration,
}

impl ServiceConfig {
    pub fn new(url: impl Into<String>) -> ServiceConfig {
        ServiceConfig {
            url: url.into(),
            timeout: Duration::from_secs(30),
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }
}

fn attempt<T: DeserializeOwned>(cfg: &ServiceConfig, body: &impl Serialize) -> Result<T> {
    let err = |message: String, retriable: bool| Error::Service {
        endpoint: cfg.url.clone(),
        message,
        retriable,
    };
    let agent = ureq::AgentBuilder::new().timeout(cfg.timeout).build();
    match agent.post(&cfg.url).send_json(body) {
        Ok(resp) => resp
            .into_json::<T>()
            .map_err(|e| err(format!("malformed response: {e}"), false)),
        Err(ureq::Error::Status(code, resp)) => {
            let text = resp.into_string().unwrap_or_default();
            let retriable = code == 429 || code >= 500;
            Err(err(format!("HTTP {code}: {}", text.trim()), retriable))
        }
        Err(e) => Err(err(e.to_string(), true)),
    }
}

/// POSTs `body` as JSON, retrying retriable failures with doubling backoff.
pub fn post_json<T: DeserializeOwned>(cfg: &ServiceConfig, body: &impl Serialize) -> Result<T> {
    let mut delay = cfg.backoff;
    let mut tries = 0;
    loop {
        match attempt(cfg, body) {
            Err(Error::Service {
                retriable: true,
                message,
                ..
            }) if tries < cfg.retries => {
                tries += 1;
                warn!("{} failed ({message}); retry {tries} in {delay:?}", cfg.url);
                std::thread::sleep(delay);
                delay *= 2;
            }
            other => return other,
        }
    }
}
