//! HTTP transports. The downloader only needs a blocking GET.

use super::DownloadError;
use std::io::Read;
use std::sync::Mutex;
use std::time::Duration;

const MAX_BODY_BYTES: u64 = 512 * 1024 * 1024;

pub trait Transport: Send + Sync {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<Vec<u8>, DownloadError>;
}

/// Blocking HTTPS client.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(60))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<Vec<u8>, DownloadError> {
        let mut req = self.agent.get(url);
        for (k, v) in headers {
            req = req.set(k, v);
        }
        let resp = match req.call() {
            Ok(r) => r,
            Err(ureq::Error::Status(status, _)) => {
                return Err(DownloadError::Http { url: url.to_string(), status })
            }
            Err(e) => return Err(DownloadError::Network { url: url.to_string(), msg: e.to_string() }),
        };
        let mut body = Vec::new();
        resp.into_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut body)
            .map_err(|e| DownloadError::Network { url: url.to_string(), msg: e.to_string() })?;
        Ok(body)
    }
}

/// Refuses every request; for cache-only work.
#[derive(Debug, Default, Clone, Copy)]
pub struct Offline;

impl Transport for Offline {
    fn get(&self, url: &str, _: &[(String, String)]) -> Result<Vec<u8>, DownloadError> {
        Err(DownloadError::Network { url: url.to_string(), msg: "network disabled".into() })
    }
}

/// Wraps a transport and records every URL requested.
pub struct Recording<T> {
    inner: T,
    log: Mutex<Vec<String>>,
}

impl<T: Transport> Recording<T> {
    pub fn new(inner: T) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn requests(&self) -> Vec<String> {
        self.log.lock().map(|l| l.clone()).unwrap_or_default()
    }
}

impl<T: Transport> Transport for Recording<T> {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<Vec<u8>, DownloadError> {
        if let Ok(mut l) = self.log.lock() {
            l.push(url.to_string());
        }
        self.inner.get(url, headers)
    }
}
