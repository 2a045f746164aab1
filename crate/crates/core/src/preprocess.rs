//! Tweet text cleaning and tokenization.
//!
//! The pipeline order is fixed: URL removal, special characters replaced by
//! spaces, lowercasing, Unicode NFC, whitespace tokenization, then short tokens
//! are dropped.

use std::ops::Deref;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("valid url pattern"));

static PUNCT_OR_SYMBOL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}\p{S}]").expect("valid class pattern"));

/// Characters treated as noise and replaced by spaces.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialChars {
    /// Every Unicode punctuation (`P*`) and symbol (`S*`) character.
    #[default]
    Unicode,
    /// Exactly the characters of the string.
    Custom(String),
}

impl SpecialChars {
    pub fn contains(&self, c: char) -> bool {
        match self {
            SpecialChars::Unicode => {
                let mut buf = [0u8; 4];
                PUNCT_OR_SYMBOL.is_match(c.encode_utf8(&mut buf))
            }
            SpecialChars::Custom(set) => set.contains(c),
        }
    }

    fn replace(&self, text: &str) -> String {
        match self {
            SpecialChars::Unicode => PUNCT_OR_SYMBOL.replace_all(text, " ").into_owned(),
            SpecialChars::Custom(set) => text
                .chars()
                .map(|c| if set.contains(c) { ' ' } else { c })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    pub special_chars: SpecialChars,
    /// Tokens shorter than this many characters are dropped.
    pub min_token_length: usize,
    pub lowercase: bool,
    pub strip_digit_only_tokens: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            special_chars: SpecialChars::Unicode,
            min_token_length: 3,
            lowercase: true,
            strip_digit_only_tokens: false,
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_token_length < 1 {
            return Err("min_token_length must be at least 1".into());
        }
        Ok(())
    }
}

/// Ordered tokens of one cleaned document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenList {
    type Target = [String];
    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for TokenList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenList(iter.into_iter().map(Into::into).collect())
    }
}

/// Removes `http(s)://…` and `www.…` runs up to the next whitespace.
pub fn strip_urls(text: &str) -> String {
    URL.replace_all(text, "").into_owned()
}

pub fn preprocess(text: &str, cfg: &CleanConfig) -> TokenList {
    let no_urls = strip_urls(text);
    let cleaned = cfg.special_chars.replace(&no_urls);
    let cased = if cfg.lowercase {
        cleaned.to_lowercase()
    } else {
        cleaned
    };
    let normalized: String = cased.nfc().collect();
    normalized
        .split_whitespace()
        .filter(|t| t.chars().count() >= cfg.min_token_length)
        .filter(|t| !(cfg.strip_digit_only_tokens && t.chars().all(|c| c.is_numeric())))
        .map(str::to_string)
        .collect()
}
