use std::collections::HashSet;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{normalize_text, AugmentError, ParaphraseProvider, Result};
use crate::corpus::Task;

/// Connection settings for a chat-completion style endpoint.
///
/// Requests are `{"model", "messages": [{"role": "user", "content"}],
/// "temperature"}`; the reply text is read from
/// `choices[0].message.content`, falling back to `choices[0].text`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key. Empty sends
    /// no authorization header.
    pub api_key_env: String,
    pub model: String,
    pub request_delay_ms: u64,
    pub max_retries: usize,
    pub timeout_secs: u64,
    pub temperature: f64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            model: "gpt-4o".to_string(),
            request_delay_ms: 1000,
            max_retries: 3,
            timeout_secs: 60,
            temperature: 0.7,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.endpoint.trim().is_empty() {
            return Err(AugmentError::InvalidConfig("endpoint is empty".into()));
        }
        if self.timeout_secs == 0 {
            return Err(AugmentError::InvalidConfig(
                "timeout_secs must be positive".into(),
            ));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(AugmentError::InvalidConfig(
                "temperature must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One prompt in, one reply text out.
pub trait CompletionClient {
    fn complete(&mut self, prompt: &str) -> Result<String>;

    /// Attempts allowed when a reply cannot be used.
    fn max_attempts(&self) -> usize {
        1
    }
}

/// Blocking HTTP client that keeps one request in flight and waits
/// `request_delay_ms` between consecutive requests.
pub struct HttpClient {
    config: ProviderConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    last_request: Option<Instant>,
}

impl HttpClient {
    pub fn new(config: ProviderConfig) -> Result<Self> {
        config.validate()?;
        let api_key = if config.api_key_env.is_empty() {
            None
        } else {
            Some(
                std::env::var(&config.api_key_env)
                    .map_err(|_| AugmentError::MissingApiKey(config.api_key_env.clone()))?,
            )
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpClient {
            config,
            api_key,
            agent,
            last_request: None,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn wait_turn(&mut self) {
        let delay = Duration::from_millis(self.config.request_delay_ms);
        if let Some(last) = self.last_request {
            let elapsed = last.elapsed();
            if elapsed < delay {
                thread::sleep(delay - elapsed);
            }
        }
        self.last_request = Some(Instant::now());
    }

    fn send_once(&mut self, prompt: &str) -> std::result::Result<String, (bool, String)> {
        self.wait_turn();
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        let mut request = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| (true, e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err((true, format!("http status {status}")));
        }
        if status >= 400 {
            return Err((false, format!("http status {status}")));
        }
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| (false, format!("invalid response body: {e}")))?;
        reply_text(&value).ok_or_else(|| (false, "response has no choices[0] text".to_string()))
    }
}

impl CompletionClient for HttpClient {
    /// Retries transport errors, 429 and 5xx up to `max_retries` times.
    fn complete(&mut self, prompt: &str) -> Result<String> {
        let mut attempt = 0;
        loop {
            match self.send_once(prompt) {
                Ok(text) => return Ok(text),
                Err((retryable, msg)) => {
                    if !retryable || attempt >= self.config.max_retries {
                        return Err(AugmentError::Provider(msg));
                    }
                    attempt += 1;
                }
            }
        }
    }

    fn max_attempts(&self) -> usize {
        self.config.max_retries + 1
    }
}

fn reply_text(v: &Value) -> Option<String> {
    let choice = v.get("choices")?.get(0)?;
    choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .or_else(|| choice.get("text").and_then(Value::as_str))
        .map(str::to_string)
}

pub fn default_paraphrase_template() -> &'static str {
    "Rewrite the tweet below {n} times. Keep its meaning, its stance on the \
     coin and any ticker symbols, but change the wording. Reply with one \
     rewrite per line and nothing else.\n\nTweet: {text}"
}

/// Annotation prompt with `{text}` as the tweet placeholder.
pub fn default_label_template(task: Task) -> &'static str {
    match task {
        Task::Task1 => {
            "You label cryptocurrency tweets.\n\
             Answer 1 (Predictive) if the author forecasts where a coin's price \
             or market is heading, for example \"should hit a new high by \
             summer\", \"set up for a breakout\", \"about to tank\", \"won't \
             move much this week\".\n\
             Answer 0 (Non-Predictive) for news, facts about the past, \
             questions, promotions, jokes or opinions with no forecast.\n\
             Judge only what the text says. Reply with the single digit.\n\n\
             Tweet: {text}"
        }
        Task::Task2 => {
            "You label predictive cryptocurrency tweets by the direction they forecast.\n\
             Answer 1 (Incremental) when the price is expected to go up, for \
             example \"heading higher\", \"breakout coming\", \"buy before it \
             flies\".\n\
             Answer 2 (Decremental) when the price is expected to go down, for \
             example \"headed lower\", \"sell before the drop\", \"support will \
             break\".\n\
             Answer 3 (Neutral) when no real move is expected, for example \
             \"will trade in a range\", \"flat for now\", \"nothing big until \
             the update\".\n\
             Reply with the single digit.\n\n\
             Tweet: {text}"
        }
    }
}

/// First integer in `reply` that is a label code of `task`.
pub fn parse_label(reply: &str, task: Task) -> Option<u8> {
    let mut digits = String::new();
    let chars: Vec<char> = reply.chars().chain(std::iter::once(' ')).collect();
    for c in chars {
        if c.is_ascii_digit() {
            digits.push(c);
            continue;
        }
        if !digits.is_empty() {
            if let Ok(n) = digits.parse::<i64>() {
                if task.is_valid_code(n) {
                    return Some(n as u8);
                }
            }
            digits.clear();
        }
    }
    None
}

/// Asks the model for a label. Unusable replies are retried up to the
/// client's attempt budget.
pub fn llm_label<C: CompletionClient + ?Sized>(
    client: &mut C,
    task: Task,
    text: &str,
    template: &str,
) -> Result<u8> {
    let prompt = template.replace("{text}", text);
    let attempts = client.max_attempts().max(1);
    let mut last = String::new();
    for _ in 0..attempts {
        last = client.complete(&prompt)?;
        if let Some(code) = parse_label(&last, task) {
            return Ok(code);
        }
    }
    Err(AugmentError::Unparseable { attempts, last })
}

/// Paraphrases through a completion client, one line per rewrite.
pub struct RemoteParaphraser<C> {
    client: C,
    template: String,
}

impl<C: CompletionClient> RemoteParaphraser<C> {
    pub fn new(client: C) -> Self {
        RemoteParaphraser {
            client,
            template: default_paraphrase_template().to_string(),
        }
    }

    pub fn with_template(mut self, template: impl Into<String>) -> Self {
        self.template = template.into();
        self
    }

    pub fn into_client(self) -> C {
        self.client
    }
}

fn strip_list_marker(line: &str) -> &str {
    let line = line.trim();
    let after_number = line.trim_start_matches(|c: char| c.is_ascii_digit());
    let line = if after_number.len() < line.len() {
        after_number.trim_start_matches(['.', ')', ':'])
    } else {
        line.trim_start_matches(['-', '*', '•'])
    };
    line.trim().trim_matches('"').trim()
}

impl<C: CompletionClient> ParaphraseProvider for RemoteParaphraser<C> {
    /// The seed is not used; sampling is controlled by the temperature.
    fn paraphrase(&mut self, text: &str, n: usize, _seed: u64) -> Result<Vec<String>> {
        if text.trim().is_empty() {
            return Err(AugmentError::EmptyText);
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let prompt = self
            .template
            .replace("{n}", &n.to_string())
            .replace("{text}", text);
        let reply = self.client.complete(&prompt)?;
        let mut seen = HashSet::from([normalize_text(text)]);
        Ok(reply
            .lines()
            .map(strip_list_marker)
            .filter(|l| !l.is_empty())
            .filter(|l| seen.insert(normalize_text(l)))
            .take(n)
            .map(str::to_string)
            .collect())
    }
}
