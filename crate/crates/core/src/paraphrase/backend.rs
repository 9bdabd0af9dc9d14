//! Translation backends: an offline fixture-driven mock and a configurable
//! HTTP adapter.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A machine-translation provider returning every suggested translation.
pub trait TranslationBackend: Send + Sync {
    fn translate(&self, text: &str, from: &str, to: &str) -> Result<Vec<String>>;
}

/// Deterministic in-memory backend keyed by `(from, to, text)`. Unknown
/// inputs translate to nothing; languages listed as failing return an error.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    table: HashMap<(String, String, String), Vec<String>>,
    failing: Vec<String>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: &str, to: &str, text: &str, translations: &[&str]) -> &mut Self {
        self.table
            .entry((from.into(), to.into(), text.into()))
            .or_default()
            .extend(translations.iter().map(|s| s.to_string()));
        self
    }

    /// Every request touching `lang` fails.
    pub fn fail_language(&mut self, lang: &str) -> &mut Self {
        self.failing.push(lang.to_string());
        self
    }

    /// Reads `from\tto\ttext\ttranslation` lines; repeated keys accumulate
    /// translations in file order.
    pub fn from_reader<R: Read>(source: R) -> Result<Self> {
        let mut mock = MockBackend::new();
        for (i, line) in BufReader::new(source).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: "expected `from\\tto\\ttext\\ttranslation`".into(),
                });
            }
            mock.insert(f[0], f[1], f[2], &[f[3]]);
        }
        Ok(mock)
    }
}

impl TranslationBackend for MockBackend {
    fn translate(&self, text: &str, from: &str, to: &str) -> Result<Vec<String>> {
        if self.failing.iter().any(|l| l == from || l == to) {
            return Err(Error::Backend(format!("mock failure for {from}->{to}")));
        }
        Ok(self
            .table
            .get(&(from.to_string(), to.to_string(), text.to_string()))
            .cloned()
            .unwrap_or_default())
    }
}

/// Request shape for an HTTP translation provider.
///
/// `endpoint_template` is appended to `base_url`; `{from}` and `{to}` are
/// substituted. `body_template` is a JSON document where `{text}`, `{from}`
/// and `{to}` are replaced by JSON string literals. The candidates are read
/// from `response_pointer` (a JSON pointer to an array), taking
/// `response_field` from each element when it is an object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpBackendConfig {
    pub base_url: String,
    pub endpoint_template: String,
    pub body_template: String,
    pub response_pointer: String,
    #[serde(default)]
    pub response_field: Option<String>,
    /// Environment variable holding a bearer token, if any.
    #[serde(default)]
    pub auth_token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    30
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self> {
        let token = match &config.auth_token_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| Error::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Backend(e.to_string()))?;
        Ok(HttpBackend { config, token, client })
    }

    fn render_body(&self, text: &str, from: &str, to: &str) -> String {
        let lit = |s: &str| serde_json::Value::String(s.to_string()).to_string();
        self.config
            .body_template
            .replace("{text}", &lit(text))
            .replace("{from}", &lit(from))
            .replace("{to}", &lit(to))
    }

    fn extract(&self, body: &serde_json::Value) -> Result<Vec<String>> {
        let arr = body
            .pointer(&self.config.response_pointer)
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Backend(format!("response has no array at `{}`", self.config.response_pointer)))?;
        arr.iter()
            .map(|item| {
                let v = match &self.config.response_field {
                    Some(f) => item.get(f).unwrap_or(&serde_json::Value::Null),
                    None => item,
                };
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Backend("translation entry is not a string".into()))
            })
            .collect()
    }
}

impl TranslationBackend for HttpBackend {
    fn translate(&self, text: &str, from: &str, to: &str) -> Result<Vec<String>> {
        let url = format!(
            "{}{}",
            self.config.base_url.trim_end_matches('/'),
            self.config.endpoint_template.replace("{from}", from).replace("{to}", to)
        );
        let mut req = self
            .client
            .post(&url)
            .header("Content-Type", "application/json")
            .body(self.render_body(text, from, to));
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| Error::Backend(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Backend(format!("{url} returned {status}")));
        }
        let text = resp.text().map_err(|e| Error::Backend(e.to_string()))?;
        let body: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Backend(format!("invalid JSON response: {e}")))?;
        self.extract(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;
    use std::net::TcpListener;
    use std::thread;

    #[test]
    fn mock_reads_fixture_lines() {
        let text = "en\tfr\tbaby oil\thuile pour bébé\nfr\ten\thuile pour bébé\toil for baby\nfr\ten\thuile pour bébé\tbaby oil\n";
        let mock = MockBackend::from_reader(text.as_bytes()).unwrap();
        assert_eq!(mock.translate("baby oil", "en", "fr").unwrap(), vec!["huile pour bébé"]);
        assert_eq!(
            mock.translate("huile pour bébé", "fr", "en").unwrap(),
            vec!["oil for baby", "baby oil"]
        );
        assert!(mock.translate("x", "en", "it").unwrap().is_empty());
        assert!(MockBackend::from_reader("en\tfr\n".as_bytes()).is_err());
    }

    fn serve_once(response: &'static str) -> (String, thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = vec![0u8; 8192];
            let mut request = Vec::new();
            loop {
                let n = stream.read(&mut buf).unwrap();
                request.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&request);
                if let Some(pos) = text.find("\r\n\r\n") {
                    let len = text
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    if request.len() >= pos + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                response.len(),
                response
            )
            .unwrap();
            String::from_utf8(request).unwrap()
        });
        (format!("http://{addr}"), handle)
    }

    #[test]
    fn http_backend_renders_request_and_parses_response() {
        let (url, handle) = serve_once(r#"{"translations":[{"text":"huile pour bébé"},{"text":"huile de bébé"}]}"#);
        std::env::set_var("NC_EMBED_TEST_TOKEN", "secret");
        let backend = HttpBackend::new(HttpBackendConfig {
            base_url: url,
            endpoint_template: "/v2/translate?src={from}&dst={to}".into(),
            body_template: r#"{"q": {text}, "source": {from}, "target": {to}}"#.into(),
            response_pointer: "/translations".into(),
            response_field: Some("text".into()),
            auth_token_env: Some("NC_EMBED_TEST_TOKEN".into()),
            timeout_secs: 5,
        })
        .unwrap();
        let out = backend.translate("baby \"oil\"", "en", "fr").unwrap();
        assert_eq!(out, vec!["huile pour bébé", "huile de bébé"]);
        let request = handle.join().unwrap();
        assert!(request.starts_with("POST /v2/translate?src=en&dst=fr "));
        assert!(request.to_ascii_lowercase().contains("authorization: bearer secret"));
        assert!(request.contains(r#"{"q": "baby \"oil\"", "source": "en", "target": "fr"}"#));
    }

    #[test]
    fn http_backend_missing_token_env_is_config_error() {
        let cfg = HttpBackendConfig {
            base_url: "http://127.0.0.1:9".into(),
            endpoint_template: "/".into(),
            body_template: "{}".into(),
            response_pointer: "/t".into(),
            response_field: None,
            auth_token_env: Some("NC_EMBED_DEFINITELY_UNSET".into()),
            timeout_secs: 1,
        };
        assert!(matches!(HttpBackend::new(cfg), Err(Error::Config(_))));
    }
}
