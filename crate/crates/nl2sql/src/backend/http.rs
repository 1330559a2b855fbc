use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, TranslationRequest, Translator, PROTO_HEADER, PROTO_VERSION};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Serialize)]
pub(crate) struct WireRequest<'a> {
    pub question: &'a str,
    pub db_id: &'a str,
    pub schema: &'a str,
}

#[derive(Deserialize)]
pub(crate) struct WireResponse {
    pub sql: String,
}

/// Client for an external model server.
pub struct HttpBackend {
    url: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    /// `endpoint` is the server base URL; `/translate` is appended unless
    /// already present.
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/translate") { base.to_owned() } else { format!("{base}/translate") };
        HttpBackend { url, agent: ureq::AgentBuilder::new().timeout(timeout).build() }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<String, Attempt> {
        let response =
            self.agent.post(&self.url).set(PROTO_HEADER, PROTO_VERSION).send_json(body).map_err(|e| match e {
                ureq::Error::Status(status, resp) => {
                    Attempt::Final(BackendError::Backend { status, body: resp.into_string().unwrap_or_default() })
                }
                ureq::Error::Transport(t) => Attempt::Retry(BackendError::Transport(t.to_string())),
            })?;
        let parsed: WireResponse = response
            .into_json()
            .map_err(|e| Attempt::Final(BackendError::Transport(format!("unreadable response: {e}"))))?;
        Ok(parsed.sql)
    }
}

enum Attempt {
    Retry(BackendError),
    Final(BackendError),
}

impl Translator for HttpBackend {
    fn id(&self) -> &str {
        "http"
    }

    /// One retry on transport failure; server errors are returned as is.
    fn translate_raw(&self, req: &TranslationRequest) -> Result<String, BackendError> {
        let body = WireRequest { question: &req.question, db_id: &req.db_id, schema: &req.schema_serialization };
        match self.attempt(&body) {
            Ok(sql) => Ok(sql),
            Err(Attempt::Final(e)) => Err(e),
            Err(Attempt::Retry(_)) => match self.attempt(&body) {
                Ok(sql) => Ok(sql),
                Err(Attempt::Final(e) | Attempt::Retry(e)) => Err(e),
            },
        }
    }
}
