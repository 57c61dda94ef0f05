//! Provider traits plus an OpenAI-compatible HTTP backend.
//!
//! Credentials come from `VALUELEX_<PROVIDER>_KEY` environment variables;
//! the mock providers in [`super::mock`] need none.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::gateway::{GenerationRequest, Respondent};

pub trait TextProvider: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, respondent: &Respondent, request: &GenerationRequest) -> Result<String>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    /// Model identifier recorded in cache keys and run manifests.
    fn model(&self) -> &str;
    fn embed(&self, terms: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Reads the conventional credential variable for a provider name.
pub fn credential_from_env(provider: &str) -> Option<String> {
    let var = format!(
        "VALUELEX_{}_KEY",
        provider.to_ascii_uppercase().replace('-', "_")
    );
    std::env::var(var).ok()
}

/// Chat-completions provider speaking the OpenAI-compatible JSON protocol.
pub struct HttpTextProvider {
    name: String,
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpTextProvider {
    pub fn new(name: &str, base_url: &str, api_key: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Self {
            name: name.to_string(),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }

    pub fn from_env(name: &str, base_url: &str) -> Result<Self> {
        Self::new(name, base_url, credential_from_env(name))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

fn classify_status(status: reqwest::StatusCode, retry_after: Option<Duration>) -> Error {
    if status.as_u16() == 429 {
        return Error::Throttled { retry_after };
    }
    if status.is_client_error() {
        Error::Config(format!("provider rejected request: HTTP {status}"))
    } else {
        Error::Transport(format!("HTTP {status}"))
    }
}

fn retry_after_hint(resp: &reqwest::blocking::Response) -> Option<Duration> {
    resp.headers()
        .get("retry-after")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok())
        .map(Duration::from_secs)
}

impl TextProvider for HttpTextProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, respondent: &Respondent, request: &GenerationRequest) -> Result<String> {
        let mut body = json!({
            "model": respondent.model_name,
            "messages": [{"role": "user", "content": request.prompt_text}],
            "temperature": respondent.sampling.temperature,
            "top_p": respondent.sampling.top_p,
            "max_tokens": respondent.sampling.max_tokens,
        });
        if let Some(seed) = respondent.sampling.seed {
            // Mix the repetition index into the seed so repetitions differ
            // while staying replayable.
            body["seed"] = json!(seed.wrapping_add(request.repetition_index as u64));
        }
        let mut req = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::Transport(format!("{}: {e}", self.name)))?;
        if !resp.status().is_success() {
            let hint = retry_after_hint(&resp);
            return Err(classify_status(resp.status(), hint));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| Error::Transport(format!("bad provider payload: {e}")))?;
        Ok(parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .unwrap_or_default())
    }
}

/// Embeddings provider speaking the OpenAI-compatible JSON protocol.
pub struct HttpEmbeddingProvider {
    name: String,
    model: String,
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEmbeddingProvider {
    pub fn new(name: &str, model: &str, base_url: &str, api_key: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Self {
            name: name.to_string(),
            model: model.to_string(),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }

    pub fn from_env(name: &str, model: &str, base_url: &str) -> Result<Self> {
        Self::new(name, model, base_url, credential_from_env(name))
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn embed(&self, terms: &[String]) -> Result<Vec<Vec<f64>>> {
        let body = json!({ "model": self.model, "input": terms });
        let mut req = self
            .client
            .post(format!("{}/embeddings", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::Transport(format!("{}: {e}", self.name)))?;
        if !resp.status().is_success() {
            let hint = retry_after_hint(&resp);
            return Err(classify_status(resp.status(), hint));
        }
        let parsed: EmbeddingResponse = resp
            .json()
            .map_err(|e| Error::Transport(format!("bad provider payload: {e}")))?;
        let mut data = parsed.data;
        data.sort_by_key(|d| d.index);
        Ok(data.into_iter().map(|d| d.embedding).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{AlignmentLevel, SamplingConfig};
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn respondent(provider: &str) -> Respondent {
        Respondent {
            id: "m@t0-p1".into(),
            provider: provider.into(),
            model_name: "m".into(),
            alignment_level: AlignmentLevel::Aligned,
            size_billions: None,
            sampling: SamplingConfig {
                temperature: 0.0,
                top_p: 1.0,
                max_tokens: 64,
                seed: None,
            },
        }
    }

    /// One-shot loopback HTTP stub returning a fixed response.
    fn serve_once(status_line: &'static str, body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            if let Ok((mut stream, _)) = listener.accept() {
                let mut buf = [0u8; 8192];
                let _ = stream.read(&mut buf);
                let resp = format!(
                    "HTTP/1.1 {status_line}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        format!("http://{addr}")
    }

    #[test]
    fn parses_chat_completion() {
        let base = serve_once(
            "200 OK",
            r#"{"choices":[{"message":{"role":"assistant","content":"Fairness, Accuracy"}}]}"#,
        );
        let p = HttpTextProvider::new("stub", &base, None).unwrap();
        let req = GenerationRequest::new("m@t0-p1", "List your values:", 0).unwrap();
        assert_eq!(
            p.generate(&respondent("stub"), &req).unwrap(),
            "Fairness, Accuracy"
        );
    }

    #[test]
    fn status_429_maps_to_throttled_with_hint() {
        let base = serve_once("429 Too Many Requests", "{}");
        let p = HttpTextProvider::new("stub", &base, None).unwrap();
        let req = GenerationRequest::new("m@t0-p1", "hi", 0).unwrap();
        match p.generate(&respondent("stub"), &req) {
            Err(Error::Throttled { .. }) => {}
            other => panic!("expected throttled, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        // Port 9 (discard) on localhost is almost certainly closed.
        let p = HttpTextProvider::new("stub", "http://127.0.0.1:9", None).unwrap();
        let req = GenerationRequest::new("m@t0-p1", "hi", 0).unwrap();
        assert!(matches!(
            p.generate(&respondent("stub"), &req),
            Err(Error::Transport(_))
        ));
    }

    #[test]
    fn parses_embeddings_in_index_order() {
        let base = serve_once(
            "200 OK",
            r#"{"data":[{"index":1,"embedding":[0.5,0.5]},{"index":0,"embedding":[1.0,0.0]}]}"#,
        );
        let p = HttpEmbeddingProvider::new("stub", "emb-model", &base, None).unwrap();
        let out = p.embed(&["a".into(), "b".into()]).unwrap();
        assert_eq!(out, vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
    }
}
