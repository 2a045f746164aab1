use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use cryptopred::augment::{
    llm_label, AugmentError, CompletionClient, HttpClient, ParaphraseProvider, ProviderConfig,
    RemoteParaphraser,
};
use cryptopred::corpus::Task;

#[derive(Clone, Debug, Default)]
struct Seen {
    auth: Option<String>,
    body: String,
    at: Option<Instant>,
}

/// Serves `replies` in order, repeating the last one, and records requests.
fn stub(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let log = Arc::new(Mutex::new(Vec::new()));
    let seen = log.clone();
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut req = Seen {
                at: Some(Instant::now()),
                ..Seen::default()
            };
            let mut length = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    match k.to_ascii_lowercase().as_str() {
                        "content-length" => length = v.trim().parse().unwrap(),
                        "authorization" => req.auth = Some(v.trim().to_string()),
                        _ => {}
                    }
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            req.body = String::from_utf8(body).unwrap();
            let n = {
                let mut log = seen.lock().unwrap();
                log.push(req);
                log.len()
            };
            let (status, reply) = replies[(n - 1).min(replies.len() - 1)].clone();
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    (url, log)
}

fn content(text: &str) -> (u16, String) {
    (
        200,
        serde_json::json!({"choices": [{"message": {"content": text}}]}).to_string(),
    )
}

fn config(url: &str) -> ProviderConfig {
    ProviderConfig {
        endpoint: url.to_string(),
        api_key_env: String::new(),
        request_delay_ms: 0,
        max_retries: 2,
        timeout_secs: 5,
        ..ProviderConfig::default()
    }
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, log) = stub(vec![
        (500, "{}".into()),
        (429, "{}".into()),
        content("fine"),
    ]);
    let mut client = HttpClient::new(config(&url)).unwrap();
    assert_eq!(client.complete("hi").unwrap(), "fine");
    let log = log.lock().unwrap();
    assert_eq!(log.len(), 3);
    let body: serde_json::Value = serde_json::from_str(&log[0].body).unwrap();
    assert_eq!(body["model"], "gpt-4o");
    assert_eq!(body["messages"][0]["content"], "hi");
    assert!(log[0].auth.is_none());
}

#[test]
fn client_errors_are_not_retried() {
    let (url, log) = stub(vec![(400, "{}".into()), content("never")]);
    let mut client = HttpClient::new(config(&url)).unwrap();
    assert!(matches!(
        client.complete("hi"),
        Err(AugmentError::Provider(_))
    ));
    assert_eq!(log.lock().unwrap().len(), 1);
}

#[test]
fn gives_up_after_max_retries() {
    let (url, log) = stub(vec![(503, "{}".into())]);
    let mut client = HttpClient::new(config(&url)).unwrap();
    assert!(client.complete("hi").is_err());
    assert_eq!(log.lock().unwrap().len(), 3);
}

#[test]
fn sends_bearer_key_and_spaces_requests() {
    std::env::set_var("CRYPTOPRED_TEST_KEY", "sk-test");
    let (url, log) = stub(vec![content("a"), content("b")]);
    let cfg = ProviderConfig {
        api_key_env: "CRYPTOPRED_TEST_KEY".into(),
        request_delay_ms: 150,
        ..config(&url)
    };
    let mut client = HttpClient::new(cfg).unwrap();
    client.complete("one").unwrap();
    client.complete("two").unwrap();
    let log = log.lock().unwrap();
    assert_eq!(log[0].auth.as_deref(), Some("Bearer sk-test"));
    let gap = log[1].at.unwrap() - log[0].at.unwrap();
    assert!(gap >= Duration::from_millis(140), "{gap:?}");

    let missing = ProviderConfig {
        api_key_env: "CRYPTOPRED_SURELY_UNSET".into(),
        ..config(&url)
    };
    assert!(matches!(
        HttpClient::new(missing),
        Err(AugmentError::MissingApiKey(_))
    ));
}

#[test]
fn labels_and_paraphrases_over_http() {
    let legacy = (
        200,
        serde_json::json!({"choices": [{"text": "Label: 1"}]}).to_string(),
    );
    let (url, _) = stub(vec![
        content("not sure"),
        content("3"),
        legacy,
        content("1) ADA up\n2) \"ADA higher\"\n3) ADA up"),
    ]);
    let mut client = HttpClient::new(config(&url)).unwrap();
    assert_eq!(
        llm_label(&mut client, Task::Task2, "ADA flat", "{text}").unwrap(),
        3
    );
    assert_eq!(
        llm_label(&mut client, Task::Task1, "ADA flat", "{text}").unwrap(),
        1
    );
    let mut p = RemoteParaphraser::new(client);
    assert_eq!(
        p.paraphrase("ADA rises", 3, 0).unwrap(),
        vec!["ADA up", "ADA higher"]
    );
}
