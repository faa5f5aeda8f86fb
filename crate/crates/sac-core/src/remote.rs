//! HTTP backends: chat completions for summarization and an embeddings
//! endpoint mirroring the common `/v1/embeddings` wire shape.
//!
//! Both retry transport failures, HTTP 429, and 5xx responses with
//! exponential backoff. API keys come from `SAC_LLM_API_KEY` /
//! `SAC_EMBED_API_KEY` and are sent as bearer tokens when present.

use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::embedding::{EmbeddingProvider, EmbeddingProviderConfig, Vector};
use crate::error::{Error, Result};
use crate::summary::{ChatBackend, ChatRequest};

pub const LLM_API_KEY_VAR: &str = "SAC_LLM_API_KEY";
pub const EMBED_API_KEY_VAR: &str = "SAC_EMBED_API_KEY";

const DEFAULT_MAX_RETRIES: u32 = 4;
const BASE_BACKOFF_MS: u64 = 250;

fn should_retry(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed => true,
        _ => false,
    }
}

/// POST `body` as JSON, retrying transient failures with exponential backoff.
fn post_json(
    agent: &ureq::Agent,
    url: &str,
    bearer: Option<&str>,
    body: &serde_json::Value,
    max_retries: u32,
) -> std::result::Result<serde_json::Value, ureq::Error> {
    let mut attempt = 0;
    loop {
        let mut request = agent.post(url);
        if let Some(token) = bearer {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let outcome = request
            .send_json(body)
            .and_then(|mut response| response.body_mut().read_json::<serde_json::Value>());
        match outcome {
            Ok(value) => return Ok(value),
            Err(err) if attempt < max_retries && should_retry(&err) => {
                let delay = BASE_BACKOFF_MS << attempt;
                log::warn!("{url}: attempt {} failed ({err}); retrying in {delay} ms", attempt + 1);
                std::thread::sleep(Duration::from_millis(delay));
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

/// Chat-completion backend speaking `POST <base>/v1/chat/completions`.
pub struct HttpChatBackend {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    max_retries: u32,
}

impl HttpChatBackend {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpChatBackend {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: std::env::var(LLM_API_KEY_VAR).ok(),
            agent: ureq::Agent::new_with_defaults(),
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }

    pub fn with_max_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String> {
        let mut body = json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        let url = format!("{}/v1/chat/completions", self.base_url);
        let response = post_json(
            &self.agent,
            &url,
            self.api_key.as_deref(),
            &body,
            self.max_retries,
        )
        .map_err(|e| Error::Backend {
            doc_id: request.doc_id.to_string(),
            message: e.to_string(),
        })?;
        response["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Backend {
                doc_id: request.doc_id.to_string(),
                message: "response carries no choices[0].message.content".into(),
            })
    }
}

/// Embedding provider speaking `POST <base>/v1/embeddings` with
/// `{"model": ..., "input": [...]}` and reading `data[i].embedding`.
pub struct RemoteEmbedder {
    base_url: String,
    model: String,
    batch_size: usize,
    concurrency: usize,
    api_key: Option<String>,
    agent: ureq::Agent,
    max_retries: u32,
}

impl RemoteEmbedder {
    pub fn from_config(config: &EmbeddingProviderConfig) -> Result<Self> {
        config.validate()?;
        Ok(RemoteEmbedder {
            base_url: config
                .base_url
                .as_deref()
                .expect("validated")
                .trim_end_matches('/')
                .to_string(),
            model: config.model_id.clone().expect("validated"),
            batch_size: config.batch_size,
            concurrency: config.concurrency.max(1),
            api_key: std::env::var(EMBED_API_KEY_VAR).ok(),
            agent: ureq::Agent::new_with_defaults(),
            max_retries: DEFAULT_MAX_RETRIES,
        })
    }

    fn embed_one_batch(&self, batch_index: usize, texts: &[String]) -> Result<Vec<Vector>> {
        #[derive(Deserialize)]
        struct Row {
            embedding: Vec<f32>,
        }
        #[derive(Deserialize)]
        struct Payload {
            data: Vec<Row>,
        }
        let url = format!("{}/v1/embeddings", self.base_url);
        let body = json!({"model": self.model, "input": texts});
        let response = post_json(
            &self.agent,
            &url,
            self.api_key.as_deref(),
            &body,
            self.max_retries,
        )
        .map_err(|e| Error::Provider(format!("embeddings batch {batch_index}: {e}")))?;
        let payload: Payload = serde_json::from_value(response).map_err(|e| {
            Error::Provider(format!("embeddings batch {batch_index}: malformed response: {e}"))
        })?;
        if payload.data.len() != texts.len() {
            return Err(Error::Provider(format!(
                "embeddings batch {batch_index}: {} vectors for {} inputs",
                payload.data.len(),
                texts.len()
            )));
        }
        Ok(payload
            .data
            .into_iter()
            .map(|row| {
                let mut v = Vector::new(row.embedding);
                v.normalize();
                v
            })
            .collect())
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let batches: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let mut results: Vec<Option<Result<Vec<Vector>>>> = (0..batches.len()).map(|_| None).collect();

        if self.concurrency <= 1 || batches.len() <= 1 {
            for (i, batch) in batches.iter().enumerate() {
                results[i] = Some(self.embed_one_batch(i, batch));
            }
        } else {
            let next = Mutex::new(0usize);
            let slots = Mutex::new(&mut results);
            std::thread::scope(|scope| {
                for _ in 0..self.concurrency.min(batches.len()) {
                    scope.spawn(|| loop {
                        let i = {
                            let mut guard = next.lock().unwrap();
                            let i = *guard;
                            if i >= batches.len() {
                                break;
                            }
                            *guard += 1;
                            i
                        };
                        let out = self.embed_one_batch(i, batches[i]);
                        slots.lock().unwrap()[i] = Some(out);
                    });
                }
            });
        }

        let mut vectors = Vec::with_capacity(texts.len());
        let mut dim: Option<usize> = None;
        for slot in results {
            let batch = slot.expect("all batches processed")?;
            for v in batch {
                if let Some(d) = dim {
                    if v.dim() != d {
                        return Err(Error::DimensionMismatch {
                            left: d,
                            right: v.dim(),
                        });
                    }
                } else {
                    dim = Some(v.dim());
                }
                vectors.push(v);
            }
        }
        Ok(vectors)
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}", self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Minimal scripted HTTP server: answers each connection with the next
    /// canned (status, body) pair and records request bodies.
    fn spawn_server(
        responses: Vec<(u16, String)>,
    ) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(rest) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = rest.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut payload = vec![0; content_length];
                reader.read_exact(&mut payload).unwrap();
                seen.push(String::from_utf8(payload).unwrap());
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
            seen
        });
        (format!("http://{addr}"), handle)
    }

    fn chat_request<'a>(user: &'a str) -> ChatRequest<'a> {
        ChatRequest {
            model: "test-model",
            system: "sys",
            user,
            seed: Some(7),
            target_chars: 150,
            doc_id: "d.txt",
            document_text: "doc",
        }
    }

    #[test]
    fn chat_backend_extracts_message_content() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"a short summary"}}]}"#;
        let (url, handle) = spawn_server(vec![(200, body.into())]);
        let backend = HttpChatBackend::new(url).with_max_retries(0);
        let out = backend.complete(&chat_request("hello")).unwrap();
        assert_eq!(out, "a short summary");
        let seen = handle.join().unwrap();
        let sent: serde_json::Value = serde_json::from_str(&seen[0]).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["messages"][1]["content"], "hello");
        assert_eq!(sent["seed"], 7);
    }

    #[test]
    fn chat_backend_retries_server_errors() {
        let ok = r#"{"choices":[{"message":{"content":"recovered"}}]}"#;
        let (url, handle) = spawn_server(vec![(500, "{}".into()), (200, ok.into())]);
        let backend = HttpChatBackend::new(url).with_max_retries(2);
        let out = backend.complete(&chat_request("q")).unwrap();
        assert_eq!(out, "recovered");
        assert_eq!(handle.join().unwrap().len(), 2);
    }

    #[test]
    fn chat_backend_reports_missing_content() {
        let (url, _handle) = spawn_server(vec![(200, r#"{"choices":[]}"#.into())]);
        let backend = HttpChatBackend::new(url).with_max_retries(0);
        let err = backend.complete(&chat_request("q")).unwrap_err();
        assert!(err.to_string().contains("choices[0].message.content"));
    }

    fn embed_config(url: &str, batch_size: usize) -> EmbeddingProviderConfig {
        EmbeddingProviderConfig {
            kind: crate::embedding::ProviderKind::Remote,
            model_id: Some("embed-model".into()),
            base_url: Some(url.to_string()),
            batch_size,
            concurrency: 1,
            ..EmbeddingProviderConfig::default()
        }
    }

    #[test]
    fn remote_embedder_batches_and_normalizes() {
        let batch1 = r#"{"data":[{"embedding":[3.0,4.0]},{"embedding":[1.0,0.0]}]}"#;
        let batch2 = r#"{"data":[{"embedding":[0.0,2.0]}]}"#;
        let (url, handle) = spawn_server(vec![(200, batch1.into()), (200, batch2.into())]);
        let embedder = RemoteEmbedder::from_config(&embed_config(&url, 2)).unwrap();
        let texts: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let vectors = embedder.embed_batch(&texts).unwrap();
        assert_eq!(vectors.len(), 3);
        assert!((vectors[0].values()[0] - 0.6).abs() < 1e-6);
        assert!((vectors[0].values()[1] - 0.8).abs() < 1e-6);
        assert!((vectors[2].l2_norm() - 1.0).abs() < 1e-6);
        let seen = handle.join().unwrap();
        assert_eq!(seen.len(), 2, "3 texts split into batches of 2");
        let first: serde_json::Value = serde_json::from_str(&seen[0]).unwrap();
        assert_eq!(first["input"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn remote_embedder_rejects_count_mismatch() {
        let bad = r#"{"data":[{"embedding":[1.0,0.0]}]}"#;
        let (url, _handle) = spawn_server(vec![(200, bad.into())]);
        let embedder = RemoteEmbedder::from_config(&embed_config(&url, 8)).unwrap();
        let texts: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let err = embedder.embed_batch(&texts).unwrap_err();
        assert!(err.to_string().contains("batch 0"));
    }
}
