use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::suite::file_stem;

pub const DEFAULT_API_KEY_ENV: &str = "CHEMPROG_API_KEY";

/// One request to a language model.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub class_id: String,
    /// 1-based attempt number within the class.
    pub attempt: u32,
    pub model: String,
    pub system: String,
    pub user: String,
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Decode(String),
    #[error("credential variable {0} is not set")]
    MissingCredential(String),
    #[error("scripted response unavailable: {0}")]
    Script(String),
}

/// A text-completion backend. Implementations must be usable from several
/// threads at once.
pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError>;
}

impl<F> LlmClient for F
where
    F: Fn(&LlmRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        self(request)
    }
}

/// A prompt, the raw reply, and the reply split into program and prose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub prompt: String,
    pub raw_response: String,
    pub extracted_program: Option<String>,
    pub reasoning_prose: String,
}

/// Splits a reply into its last fenced code block and the remaining prose.
/// Unterminated fences do not count as code.
pub fn extract_program(raw: &str) -> (Option<String>, String) {
    let lines: Vec<&str> = raw.lines().collect();
    let mut last: Option<(usize, usize)> = None;
    let mut open: Option<usize> = None;
    for (i, line) in lines.iter().enumerate() {
        if line.trim_start().starts_with("```") {
            match open {
                None => open = Some(i),
                Some(start) => {
                    last = Some((start, i));
                    open = None;
                }
            }
        }
    }
    let Some((start, end)) = last else {
        return (None, raw.trim().to_string());
    };
    let mut code = lines[start + 1..end].join("\n");
    code.push('\n');
    let prose: Vec<&str> = lines[..start].iter().chain(&lines[end + 1..]).copied().collect();
    (Some(code), prose.join("\n").trim().to_string())
}

/// Sends `request` and splits the reply.
pub fn complete(client: &dyn LlmClient, request: &LlmRequest) -> Result<LlmExchange, LlmError> {
    let raw = client.complete(request)?;
    let (extracted_program, reasoning_prose) = extract_program(&raw);
    Ok(LlmExchange { prompt: request.user.clone(), raw_response: raw, extracted_program, reasoning_prose })
}

/// Replays responses from `<dir>/<class>/<attempt>.txt`, where `<class>` is
/// the class id with unsafe characters replaced by `_`.
#[derive(Debug, Clone)]
pub struct ScriptedClient {
    pub dir: PathBuf,
}

impl ScriptedClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ScriptedClient { dir: dir.into() }
    }

    pub fn response_path(&self, class_id: &str, attempt: u32) -> PathBuf {
        self.dir.join(file_stem(class_id)).join(format!("{attempt}.txt"))
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let path = self.response_path(&request.class_id, request.attempt);
        fs::read_to_string(&path).map_err(|e| LlmError::Script(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpClientConfig {
    pub endpoint: String,
    /// Environment variable holding a bearer token; no header when `None`.
    pub api_key_env: Option<String>,
    /// Request body. String values `$MODEL`, `$SYSTEM` and `$USER` are
    /// replaced; request parameters are merged into the top-level object.
    pub request_template: Value,
    /// Dotted path to the generated text, e.g. `choices.0.message.content`.
    pub response_path: String,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub min_request_interval: Duration,
    pub timeout: Duration,
}

impl HttpClientConfig {
    /// Chat-completions style endpoint.
    pub fn chat_completions(endpoint: &str) -> Self {
        HttpClientConfig {
            endpoint: endpoint.to_string(),
            api_key_env: Some(DEFAULT_API_KEY_ENV.to_string()),
            request_template: serde_json::json!({
                "model": "$MODEL",
                "messages": [
                    {"role": "system", "content": "$SYSTEM"},
                    {"role": "user", "content": "$USER"}
                ]
            }),
            response_path: "choices.0.message.content".to_string(),
            max_retries: 5,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
            min_request_interval: Duration::ZERO,
            timeout: Duration::from_secs(600),
        }
    }
}

pub struct HttpClient {
    config: HttpClientConfig,
    http: reqwest::blocking::Client,
    api_key: Option<String>,
    next_slot: Mutex<Instant>,
}

fn substitute(template: &Value, request: &LlmRequest) -> Value {
    match template {
        Value::String(s) => match s.as_str() {
            "$MODEL" => Value::String(request.model.clone()),
            "$SYSTEM" => Value::String(request.system.clone()),
            "$USER" => Value::String(request.user.clone()),
            _ => template.clone(),
        },
        Value::Array(items) => Value::Array(items.iter().map(|v| substitute(v, request)).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), substitute(v, request))).collect()),
        other => other.clone(),
    }
}

/// Follows a dotted path through objects (by key) and arrays (by index).
pub(crate) fn lookup_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').filter(|s| !s.is_empty()).try_fold(value, |v, key| match v {
        Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get(i)),
        Value::Object(map) => map.get(key),
        _ => None,
    })
}

impl HttpClient {
    /// Reads the credential from the configured environment variable.
    pub fn new(config: HttpClientConfig) -> Result<Self, LlmError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| LlmError::MissingCredential(var.clone()))?),
            None => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpClient { config, http, api_key, next_slot: Mutex::new(Instant::now()) })
    }

    pub fn request_body(&self, request: &LlmRequest) -> Value {
        let mut body = substitute(&self.config.request_template, request);
        if let Value::Object(map) = &mut body {
            for (k, v) in &request.params {
                map.insert(k.clone(), v.clone());
            }
        }
        body
    }

    fn wait_for_slot(&self) {
        if self.config.min_request_interval.is_zero() {
            return;
        }
        let wait = {
            let mut next = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.config.min_request_interval;
            slot - now
        };
        thread::sleep(wait);
    }

    fn send_once(&self, body: &Value) -> Result<String, (LlmError, bool)> {
        self.wait_for_slot();
        let mut builder = self
            .http
            .post(&self.config.endpoint)
            .header("content-type", "application/json")
            .body(serde_json::to_vec(body).expect("serializable body"));
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| (LlmError::Transport(e.to_string()), true))?;
        let status = response.status();
        let text = response.text().map_err(|e| (LlmError::Transport(e.to_string()), true))?;
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err((LlmError::Status { status: status.as_u16(), body: text }, retryable));
        }
        let json: Value = serde_json::from_str(&text).map_err(|e| (LlmError::Decode(e.to_string()), false))?;
        match lookup_path(&json, &self.config.response_path) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(other) => {
                Err((LlmError::Decode(format!("{} is not a string: {other}", self.config.response_path)), false))
            }
            None => Err((LlmError::Decode(format!("no value at {}", self.config.response_path)), false)),
        }
    }
}

impl LlmClient for HttpClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let body = self.request_body(request);
        let mut backoff = self.config.initial_backoff;
        let mut retries = 0;
        loop {
            match self.send_once(&body) {
                Ok(text) => return Ok(text),
                Err((err, true)) if retries < self.config.max_retries => {
                    log::warn!(
                        "request for {} attempt {} failed ({err}); retrying in {backoff:?}",
                        request.class_id,
                        request.attempt
                    );
                    thread::sleep(backoff);
                    backoff = (backoff * 2).min(self.config.max_backoff);
                    retries += 1;
                }
                Err((err, _)) => return Err(err),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn request() -> LlmRequest {
        LlmRequest {
            class_id: "CHEBI:1".into(),
            attempt: 1,
            model: "m".into(),
            system: "sys".into(),
            user: "hello".into(),
            params: BTreeMap::from([("temperature".to_string(), serde_json::json!(0.0))]),
        }
    }

    #[test]
    fn extraction() {
        let (code, prose) = extract_program("Thinking.\n```\nfirst\n```\nMore.\n```c3p\nsecond\n```\nDone.");
        assert_eq!(code.as_deref(), Some("second\n"));
        assert_eq!(prose, "Thinking.\n```\nfirst\n```\nMore.\nDone.");
        assert_eq!(extract_program("no code here"), (None, "no code here".to_string()));
        assert_eq!(extract_program("```\nunterminated").0, None);
    }

    #[test]
    fn scripted_client_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let client = ScriptedClient::new(dir.path());
        let path = client.response_path("CHEBI:1", 1);
        assert!(path.ends_with("CHEBI_1/1.txt"));
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, "reply").unwrap();
        assert_eq!(client.complete(&request()).unwrap(), "reply");
        let mut second = request();
        second.attempt = 2;
        assert!(matches!(client.complete(&second), Err(LlmError::Script(_))));
    }

    /// Serves canned HTTP responses in order, recording request bodies.
    fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let hits = Arc::new(AtomicUsize::new(0));
        let (bodies2, hits2) = (bodies.clone(), hits.clone());
        thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                bodies2.lock().unwrap().push(String::from_utf8(buf).unwrap());
                hits2.fetch_add(1, Ordering::SeqCst);
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1/chat"), bodies, hits)
    }

    fn config(endpoint: String) -> HttpClientConfig {
        HttpClientConfig {
            api_key_env: None,
            initial_backoff: Duration::from_millis(1),
            max_backoff: Duration::from_millis(5),
            timeout: Duration::from_secs(10),
            ..HttpClientConfig::chat_completions(&endpoint)
        }
    }

    #[test]
    fn http_round_trip_with_retry() {
        let ok = r#"{"choices":[{"message":{"content":"the answer"}}]}"#.to_string();
        let (endpoint, bodies, hits) = serve(vec![(429, "{}".into()), (503, "{}".into()), (200, ok)]);
        let client = HttpClient::new(config(endpoint)).unwrap();
        assert_eq!(client.complete(&request()).unwrap(), "the answer");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
        let sent: Value = serde_json::from_str(&bodies.lock().unwrap()[2]).unwrap();
        assert_eq!(sent["model"], "m");
        assert_eq!(sent["messages"][0]["content"], "sys");
        assert_eq!(sent["messages"][1]["content"], "hello");
        assert_eq!(sent["temperature"], 0.0);
    }

    #[test]
    fn http_client_errors_are_not_retried() {
        let (endpoint, _, hits) = serve(vec![(400, "bad".into())]);
        let client = HttpClient::new(config(endpoint)).unwrap();
        assert_eq!(client.complete(&request()), Err(LlmError::Status { status: 400, body: "bad".into() }));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn http_retries_are_bounded() {
        let (endpoint, _, hits) = serve(vec![(500, "a".into()), (500, "b".into())]);
        let client = HttpClient::new(HttpClientConfig { max_retries: 1, ..config(endpoint) }).unwrap();
        assert!(matches!(client.complete(&request()), Err(LlmError::Status { status: 500, .. })));
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn response_path_lookup() {
        let v = serde_json::json!({"a": [{"b": "x"}]});
        assert_eq!(lookup_path(&v, "a.0.b"), Some(&Value::String("x".into())));
        assert_eq!(lookup_path(&v, "a.1.b"), None);
    }

    #[test]
    fn missing_credential() {
        let cfg = HttpClientConfig {
            api_key_env: Some("CHEMPROG_TEST_UNSET_VARIABLE".into()),
            ..HttpClientConfig::chat_completions("http://127.0.0.1:1")
        };
        assert!(matches!(HttpClient::new(cfg), Err(LlmError::MissingCredential(_))));
    }
}
