#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use cryptopred::corpus::{
    save_dataset, Coin, DataFormat, Dataset, Document, Task1Label, Task2Label,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FILLER: &[&str] = &[
    "market",
    "chart",
    "volume",
    "trader",
    "wallet",
    "exchange",
    "block",
    "chain",
    "fees",
    "staking",
    "network",
    "update",
    "community",
    "whale",
    "order",
    "ledger",
    "token",
    "listing",
    "airdrop",
    "validator",
    "bridge",
    "liquidity",
    "protocol",
    "swap",
    "mainnet",
    "node",
    "governance",
    "yield",
    "supply",
    "burn",
    "mint",
    "holder",
    "portfolio",
    "candle",
    "support",
    "resistance",
    "weekly",
    "daily",
    "thread",
    "news",
];

const COINS: [Coin; 5] = [Coin::Bnb, Coin::Matic, Coin::Ada, Coin::Ftm, Coin::Xrp];

fn filler_words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<&'static str> {
    let n = rng.random_range(lo..=hi);
    (0..n).map(|_| *FILLER.choose(rng).unwrap()).collect()
}

/// 3116 documents: 2000 non-predictive and 1116 predictive, the latter split
/// 570 / 434 / 112 across incremental, decremental and neutral.
pub fn full_size_corpus() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut docs = Vec::with_capacity(3116);
    let doc = |i: usize, words: Vec<&str>| {
        let coin = COINS[i % 5].clone();
        let text = format!("{} {} {}", coin, words.join(" "), i);
        Document::new(format!("t{i:04}"), text).with_coin(coin)
    };
    for i in 0..2000 {
        let w = filler_words(&mut rng, 4, 8);
        docs.push(doc(i, w).with_task1(Task1Label::NonPredictive));
    }
    for (label, count, cue) in [
        (Task2Label::Incremental, 570, "price will rise soon"),
        (Task2Label::Decremental, 434, "price will drop soon"),
        (Task2Label::Neutral, 112, "price stays stable"),
    ] {
        for _ in 0..count {
            let mut w = filler_words(&mut rng, 3, 6);
            w.push(cue);
            docs.push(doc(docs.len(), w).with_task2(label));
        }
    }
    Dataset::new("full-size", docs, None).unwrap()
}

/// Task 2 corpus where each class carries its own marker token; `counts`
/// gives the incremental, decremental and neutral sizes.
pub fn planted_corpus(counts: [usize; 3], seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let markers = [
        (Task2Label::Incremental, "upmarker"),
        (Task2Label::Decremental, "downmarker"),
        (Task2Label::Neutral, "flatmarker"),
    ];
    let mut docs = Vec::new();
    for (c, &(label, marker)) in markers.iter().enumerate() {
        for _ in 0..counts[c] {
            let i = docs.len();
            let mut w = filler_words(&mut rng, 3, 8);
            let at = rng.random_range(0..=w.len());
            w.insert(at, marker);
            docs.push(
                Document::new(format!("p{i:03}"), w.join(" "))
                    .with_task2(label)
                    .with_coin(COINS[i % 5].clone()),
            );
        }
    }
    Dataset::new("planted", docs, None).unwrap()
}

pub const CUES: &[&str] = &[
    "will",
    "expect",
    "soon",
    "target",
    "breakout",
    "headed",
    "forecast",
    "projected",
];

/// Task 1 corpus with a 9:1 class ratio where forecast cue words are
/// frequent but not decisive.
pub fn imbalanced_corpus(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    for i in 0..500 {
        let predictive = i % 10 == 0;
        let mut w = filler_words(&mut rng, 5, 9);
        for _ in 0..2 {
            let p = if predictive { 0.6 } else { 0.06 };
            if rng.random_bool(p) {
                let at = rng.random_range(0..=w.len());
                w.insert(at, CUES.choose(&mut rng).unwrap());
            }
        }
        let label = if predictive {
            Task1Label::Predictive
        } else {
            Task1Label::NonPredictive
        };
        docs.push(Document::new(format!("m{i}"), w.join(" ")).with_task1(label));
    }
    Dataset::new("imbalanced", docs, None).unwrap()
}

pub fn write_jsonl(ds: &Dataset, path: &Path) {
    save_dataset(ds, path, DataFormat::Jsonl).unwrap();
}

pub fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cryptopred"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CRYPTOPRED_STUB_KEY")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Minimal HTTP/1.1 server on 127.0.0.1 answering every POST with the
/// status and body produced by `respond(request_body)`.
pub struct StubServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start<F>(respond: F) -> StubServer
    where
        F: Fn(&str) -> (u16, String) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let respond = Arc::new(respond);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                counter.fetch_add(1, Ordering::SeqCst);
                let respond = respond.clone();
                thread::spawn(move || serve(stream, &*respond));
            }
        });
        StubServer { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, respond: &dyn Fn(&str) -> (u16, String)) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).unwrap();
    let (status, reply) = respond(&String::from_utf8_lossy(&body));
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} STUB\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    );
    let _ = stream.flush();
}

/// Chat-completion reply carrying `content`.
pub fn chat_reply(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]})
        .to_string()
}

/// Tweet text embedded in a request built from the default paraphrase prompt.
pub fn prompt_tweet(request_body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(request_body).unwrap();
    let prompt = v["messages"][0]["content"].as_str().unwrap_or_default();
    prompt
        .rsplit_once("Tweet: ")
        .map(|(_, t)| t.to_string())
        .unwrap_or_default()
}
