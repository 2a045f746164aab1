use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normalize_text, AugmentError, ParaphraseProvider, Result};

const SYNONYMS: &[(&str, &[&str])] = &[
    ("rise", &["increase", "climb", "go up"]),
    ("rising", &["climbing", "going up"]),
    ("increase", &["rise", "climb"]),
    ("pump", &["surge", "rally"]),
    ("surge", &["jump", "spike"]),
    ("rally", &["surge", "run up"]),
    ("fall", &["drop", "decline"]),
    ("falling", &["dropping", "sliding"]),
    ("drop", &["fall", "dip"]),
    ("dump", &["crash", "plunge"]),
    ("crash", &["collapse", "plunge"]),
    ("decline", &["fall", "slide"]),
    ("decrease", &["decline", "drop"]),
    ("price", &["value"]),
    ("soon", &["shortly", "before long"]),
    ("bullish", &["optimistic"]),
    ("bearish", &["pessimistic"]),
    ("expect", &["anticipate", "foresee"]),
    ("think", &["believe", "reckon"]),
    ("big", &["huge", "large"]),
    ("huge", &["massive", "big"]),
    ("good", &["great", "solid"]),
    ("bad", &["poor", "weak"]),
    ("buy", &["purchase", "grab"]),
    ("coin", &["token"]),
    ("crypto", &["cryptocurrency"]),
    ("stable", &["steady"]),
    ("growth", &["gains"]),
    ("gains", &["growth", "profits"]),
    ("likely", &["probably"]),
    ("maybe", &["perhaps"]),
    ("quickly", &["fast", "rapidly"]),
    ("massive", &["huge", "enormous"]),
    ("today", &["this day"]),
    ("now", &["right now"]),
];

const PREFIXES: &[&str] = &[
    "I think",
    "In my view,",
    "Honestly,",
    "Looks like",
    "Heads up:",
];
const SUFFIXES: &[&str] = &["imo", "if you ask me", "for what it's worth"];

/// Upper bound on candidate renderings examined per call.
const CANDIDATE_CAP: usize = 50_000;

/// Deterministic rule-based paraphraser: synonym swaps, hedge phrases and
/// swapping two clauses joined by "and".
#[derive(Clone, Debug, Default)]
pub struct OfflineParaphraser;

impl ParaphraseProvider for OfflineParaphraser {
    fn paraphrase(&mut self, text: &str, n: usize, seed: u64) -> Result<Vec<String>> {
        if text.trim().is_empty() {
            return Err(AugmentError::EmptyText);
        }
        Ok(variants(text, n, seed))
    }
}

/// `n` distinct paraphrases of `text`; fails when fewer are reachable.
pub fn offline_paraphrase(text: &str, n: usize, seed: u64) -> Result<Vec<String>> {
    let out = OfflineParaphraser.paraphrase(text, n, seed)?;
    if out.len() < n {
        return Err(AugmentError::InsufficientVariants {
            requested: n,
            achievable: out.len(),
        });
    }
    Ok(out)
}

fn synonyms_of(word: &str) -> Option<&'static [&'static str]> {
    let lower = word.to_lowercase();
    SYNONYMS
        .iter()
        .find(|(w, _)| *w == lower)
        .map(|(_, alts)| *alts)
}

fn match_case(original: &str, replacement: &str) -> String {
    let mut chars = original.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() && chars.all(|c| !c.is_uppercase()) => {
            let mut r = replacement.chars();
            r.next()
                .map(|f| f.to_uppercase().chain(r).collect())
                .unwrap_or_default()
        }
        _ => replacement.to_string(),
    }
}

/// Splits a token into leading punctuation, word and trailing punctuation.
fn split_token(token: &str) -> (&str, &str, &str) {
    let start = token.find(char::is_alphanumeric).unwrap_or(token.len());
    let end = token
        .rfind(char::is_alphanumeric)
        .map(|i| i + token[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(start);
    (&token[..start], &token[start..end], &token[end..])
}

enum Slot {
    Word {
        index: usize,
        alternatives: Vec<String>,
    },
    Prefix,
    Suffix,
    Reorder,
}

impl Slot {
    fn options(&self) -> usize {
        match self {
            Slot::Word { alternatives, .. } => alternatives.len(),
            Slot::Prefix => PREFIXES.len(),
            Slot::Suffix => SUFFIXES.len(),
            Slot::Reorder => 1,
        }
    }
}

fn swap_clauses(text: &str) -> Option<String> {
    let lower = text.to_lowercase();
    let at = lower.find(" and ")?;
    if lower[at + 5..].contains(" and ") {
        return None;
    }
    let (a, b) = (text[..at].trim(), text[at + 5..].trim());
    let tail_len = b.len() - b.trim_end_matches(|c: char| ".!?".contains(c)).len();
    let (b_body, tail) = b.split_at(b.len() - tail_len);
    if a.is_empty() || b_body.is_empty() {
        return None;
    }
    Some(format!("{b_body} and {a}{tail}"))
}

fn lower_first(text: &str) -> String {
    let first = text.split_whitespace().next().unwrap_or("");
    let titled = first.chars().count() > 1
        && first.chars().next().is_some_and(char::is_uppercase)
        && first.chars().skip(1).all(|c| !c.is_uppercase());
    if !titled {
        return text.to_string();
    }
    let mut chars = text.chars();
    chars
        .next()
        .map(|c| c.to_lowercase().chain(chars).collect())
        .unwrap_or_default()
}

struct Template {
    tokens: Vec<String>,
    slots: Vec<Slot>,
}

impl Template {
    fn new(text: &str) -> Self {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let mut slots = Vec::new();
        for (index, token) in tokens.iter().enumerate() {
            let (_, word, _) = split_token(token);
            if let Some(alts) = synonyms_of(word) {
                slots.push(Slot::Word {
                    index,
                    alternatives: alts.iter().map(|a| match_case(word, a)).collect(),
                });
            }
        }
        if swap_clauses(text).is_some() {
            slots.push(Slot::Reorder);
        }
        slots.push(Slot::Prefix);
        slots.push(Slot::Suffix);
        Template { tokens, slots }
    }

    /// `choice[i]` is the option picked for slot `i`, or `None` to leave it.
    fn render(&self, choice: &[Option<usize>]) -> String {
        let mut tokens = self.tokens.clone();
        let (mut prefix, mut suffix, mut reorder) = (None, None, false);
        for (slot, pick) in self.slots.iter().zip(choice) {
            let Some(pick) = *pick else { continue };
            match slot {
                Slot::Word {
                    index,
                    alternatives,
                } => {
                    let (lead, _, trail) = split_token(&self.tokens[*index]);
                    tokens[*index] = format!("{lead}{}{trail}", alternatives[pick]);
                }
                Slot::Prefix => prefix = Some(PREFIXES[pick]),
                Slot::Suffix => suffix = Some(SUFFIXES[pick]),
                Slot::Reorder => reorder = true,
            }
        }
        let mut text = tokens.join(" ");
        if reorder {
            text = swap_clauses(&text).unwrap_or(text);
        }
        if let Some(s) = suffix {
            let body = text.trim_end_matches(|c: char| ".!?".contains(c));
            let tail = &text[body.len()..];
            text = format!("{body} {s}{tail}");
        }
        if let Some(p) = prefix {
            text = format!("{p} {}", lower_first(&text));
        }
        text
    }
}

/// Every way of editing exactly `size` of `n_slots` slots.
fn combinations(n_slots: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n_slots, size, &mut Vec::new(), &mut out);
    out
}

/// Candidates grouped by how many edits they apply; fewer edits come first
/// and each group is shuffled with the seed.
fn variants(text: &str, n: usize, seed: u64) -> Vec<String> {
    if n == 0 {
        return Vec::new();
    }
    let template = Template::new(text);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<String> = HashSet::from([normalize_text(text)]);
    let mut out = Vec::new();
    let mut examined = 0usize;
    for size in 1..=template.slots.len() {
        let mut level: Vec<Vec<Option<usize>>> = Vec::new();
        for combo in combinations(template.slots.len(), size) {
            let mut picks: Vec<Vec<Option<usize>>> = vec![vec![None; template.slots.len()]];
            for &s in &combo {
                picks = picks
                    .into_iter()
                    .flat_map(|p| {
                        (0..template.slots[s].options()).map(move |o| {
                            let mut q = p.clone();
                            q[s] = Some(o);
                            q
                        })
                    })
                    .collect();
            }
            level.extend(picks);
            if examined + level.len() >= CANDIDATE_CAP {
                break;
            }
        }
        examined += level.len();
        level.shuffle(&mut rng);
        for choice in level {
            let candidate = template.render(&choice);
            if seen.insert(normalize_text(&candidate)) {
                out.push(candidate);
                if out.len() == n {
                    return out;
                }
            }
        }
        if examined >= CANDIDATE_CAP {
            break;
        }
    }
    out
}
