//! Lexicon-based emotion tagging and per-coin, per-direction aggregation.
//!
//! Lexicon files are JSON:
//!
//! ```json
//! {
//!   "grouping": {"joy": "DelightJoy", "fear": "FearAnxiety"},
//!   "entries": [
//!     {"term": "thrilled", "emotions": [{"emotion": "joy", "weight": 0.9}]}
//!   ]
//! }
//! ```
//!
//! Terms may be phrases. They are cleaned with the same pipeline as the
//! documents, so matching works on token sequences.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Coin, Dataset, Source, Task2Label};
use crate::preprocess::{preprocess, CleanConfig};

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon: {0}")]
    Json(#[from] serde_json::Error),
    #[error("lexicon entry {term:?} uses emotion {emotion:?} which has no grouping")]
    Ungrouped { term: String, emotion: String },
    #[error("lexicon term {0:?} appears more than once")]
    DuplicateTerm(String),
    #[error("lexicon entry {term:?}: {reason}")]
    Malformed { term: String, reason: String },
}

pub type Result<T> = std::result::Result<T, EmotionError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmotionCategory {
    DelightJoy,
    EnthusiasmEagerness,
    DelightPleasantness,
    GriefSadness,
    FearAnxiety,
    RageAnger,
}

impl EmotionCategory {
    /// Report column order.
    pub const ALL: [EmotionCategory; 6] = [
        EmotionCategory::DelightJoy,
        EmotionCategory::EnthusiasmEagerness,
        EmotionCategory::DelightPleasantness,
        EmotionCategory::GriefSadness,
        EmotionCategory::FearAnxiety,
        EmotionCategory::RageAnger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmotionCategory::DelightJoy => "Delight and Joy",
            EmotionCategory::EnthusiasmEagerness => "Enthusiasm and Eagerness",
            EmotionCategory::DelightPleasantness => "Delight and Pleasantness",
            EmotionCategory::GriefSadness => "Grief and Sadness",
            EmotionCategory::FearAnxiety => "Fear and Anxiety",
            EmotionCategory::RageAnger => "Rage and Anger",
        }
    }
}

impl fmt::Display for EmotionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEmotion {
    pub emotion: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub term: String,
    pub emotions: Vec<WeightedEmotion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LexiconFile {
    grouping: BTreeMap<String, EmotionCategory>,
    entries: Vec<LexiconEntry>,
}

/// Validated lexicon keyed by cleaned token sequences.
#[derive(Clone, Debug)]
pub struct EmotionLexicon {
    grouping: BTreeMap<String, EmotionCategory>,
    entries: Vec<LexiconEntry>,
    index: HashMap<Vec<String>, Vec<(EmotionCategory, f64)>>,
    longest: usize,
    clean: CleanConfig,
}

impl EmotionLexicon {
    pub fn new(
        grouping: BTreeMap<String, EmotionCategory>,
        entries: Vec<LexiconEntry>,
    ) -> Result<Self> {
        let clean = CleanConfig::default();
        let mut index = HashMap::new();
        let mut longest = 0;
        for e in &entries {
            let malformed = |reason: &str| EmotionError::Malformed {
                term: e.term.clone(),
                reason: reason.to_string(),
            };
            let key = preprocess(&e.term, &clean).into_inner();
            if key.is_empty() {
                return Err(malformed("term has no tokens after cleaning"));
            }
            if e.emotions.is_empty() {
                return Err(malformed("no emotions listed"));
            }
            let mut mapped = Vec::with_capacity(e.emotions.len());
            for w in &e.emotions {
                if !(0.0..=1.0).contains(&w.weight) {
                    return Err(malformed("weights must lie in [0, 1]"));
                }
                let category = grouping
                    .get(&w.emotion)
                    .ok_or_else(|| EmotionError::Ungrouped {
                        term: e.term.clone(),
                        emotion: w.emotion.clone(),
                    })?;
                mapped.push((*category, w.weight));
            }
            longest = longest.max(key.len());
            if index.insert(key, mapped).is_some() {
                return Err(EmotionError::DuplicateTerm(e.term.clone()));
            }
        }
        Ok(EmotionLexicon {
            grouping,
            entries,
            index,
            longest,
            clean,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: LexiconFile = serde_json::from_str(json)?;
        Self::new(file.grouping, file.entries)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LexiconFile {
            grouping: self.grouping.clone(),
            entries: self.entries.clone(),
        })?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Matched `(category, weight)` pairs, scanning left to right and taking
    /// the longest term at each position.
    pub fn matches(&self, text: &str) -> Vec<(EmotionCategory, f64)> {
        let tokens = preprocess(text, &self.clean).into_inner();
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let max = self.longest.min(tokens.len() - i);
            let hit = (1..=max)
                .rev()
                .find_map(|len| self.index.get(&tokens[i..i + len]).map(|m| (len, m)));
            match hit {
                Some((len, m)) => {
                    out.extend_from_slice(m);
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }
}

pub fn load_lexicon(path: &Path) -> Result<EmotionLexicon> {
    let json = fs::read_to_string(path).map_err(|source| EmotionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    EmotionLexicon::from_json(&json)
}

/// Categories with at least one matched weight above `threshold`.
pub fn tag_text(text: &str, lex: &EmotionLexicon, threshold: f64) -> BTreeSet<EmotionCategory> {
    lex.matches(text)
        .into_iter()
        .filter(|&(_, w)| w > threshold)
        .map(|(c, _)| c)
        .collect()
}

/// Percentage with exactly two decimals, kept as an integer count of hundredths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Percent(u32);

impl Percent {
    /// `100 · part / whole`, rounded half up to hundredths.
    pub fn of(part: usize, whole: usize) -> Percent {
        assert!(whole > 0 && part <= whole, "percentage of {part}/{whole}");
        let (p, w) = (part as u64, whole as u64);
        Percent(((20_000 * p + w) / (2 * w)) as u32)
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 100.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(0.0..=100.0).contains(&v) {
            return Err(serde::de::Error::custom(format!(
                "percentage {v} out of range"
            )));
        }
        Ok(Percent((v * 100.0).round() as u32))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionProfile {
    pub documents: usize,
    pub counts: BTreeMap<EmotionCategory, usize>,
    pub percentages: BTreeMap<EmotionCategory, Percent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionCell {
    pub coin: Coin,
    pub label: Task2Label,
    pub profile: EmotionProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionReport {
    pub threshold: f64,
    /// Ordered by coin, then Incremental, Decremental, Neutral.
    pub cells: Vec<EmotionCell>,
}

impl EmotionReport {
    pub fn cell(&self, coin: &Coin, label: Task2Label) -> Option<&EmotionProfile> {
        self.cells
            .iter()
            .find(|c| &c.coin == coin && c.label == label)
            .map(|c| &c.profile)
    }

    /// Markdown table; zero percentages are shown as "–".
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Cryptocurrency | Task 2 Label |");
        for c in EmotionCategory::ALL {
            let _ = write!(out, " {} |", c.name());
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---|".repeat(EmotionCategory::ALL.len()));
        out.push('\n');
        for cell in &self.cells {
            let _ = write!(out, "| {} | {} |", cell.coin, cell.label.name());
            for c in EmotionCategory::ALL {
                let p = cell.profile.percentages[&c];
                if p.is_zero() {
                    out.push_str(" – |");
                } else {
                    let _ = write!(out, " {p} |");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Share of documents showing each category per (coin, direction) cell.
/// Only original documents with both a coin and a direction label count.
pub fn aggregate(ds: &Dataset, lex: &EmotionLexicon, threshold: f64) -> EmotionReport {
    let mut cells: BTreeMap<(Coin, Task2Label), (usize, BTreeMap<EmotionCategory, usize>)> =
        BTreeMap::new();
    for doc in ds
        .documents()
        .iter()
        .filter(|d| d.source == Source::Original)
    {
        let (Some(coin), Some(label)) = (&doc.coin, doc.task2) else {
            continue;
        };
        let entry = cells
            .entry((coin.clone(), label))
            .or_insert_with(|| (0, EmotionCategory::ALL.iter().map(|&c| (c, 0)).collect()));
        entry.0 += 1;
        for c in tag_text(&doc.text, lex, threshold) {
            *entry.1.get_mut(&c).expect("all categories present") += 1;
        }
    }
    let cells = cells
        .into_iter()
        .map(|((coin, label), (documents, counts))| EmotionCell {
            coin,
            label,
            profile: EmotionProfile {
                documents,
                percentages: counts
                    .iter()
                    .map(|(&c, &n)| (c, Percent::of(n, documents)))
                    .collect(),
                counts,
            },
        })
        .collect();
    EmotionReport { threshold, cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    const FIXTURE: &str = include_str!("../data/fixture_lexicon.json");

    fn lex() -> EmotionLexicon {
        EmotionLexicon::from_json(FIXTURE).unwrap()
    }

    fn small_lexicon(entries: &str) -> Result<EmotionLexicon> {
        EmotionLexicon::from_json(&format!(
            r#"{{"grouping": {{"joy": "DelightJoy", "fear": "FearAnxiety"}}, "entries": {entries}}}"#
        ))
    }

    #[test]
    fn fixture_loads() {
        let l = lex();
        assert_eq!(l.len(), 10);
        let back = EmotionLexicon::from_json(&l.to_json().unwrap()).unwrap();
        assert_eq!(back.len(), 10);
    }

    #[test]
    fn lexicon_errors() {
        let err = small_lexicon(
            r#"[{"term": "keen", "emotions": [{"emotion": "zeal", "weight": 0.5}]}]"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("zeal"));
        let dup = small_lexicon(
            r#"[{"term": "Glad", "emotions": [{"emotion": "joy", "weight": 0.5}]},
                {"term": "glad!", "emotions": [{"emotion": "joy", "weight": 0.6}]}]"#,
        );
        assert!(matches!(dup, Err(EmotionError::DuplicateTerm(_))));
        let heavy =
            small_lexicon(r#"[{"term": "glad", "emotions": [{"emotion": "joy", "weight": 1.5}]}]"#);
        assert!(matches!(heavy, Err(EmotionError::Malformed { .. })));
        let empty =
            small_lexicon(r#"[{"term": "a!", "emotions": [{"emotion": "joy", "weight": 0.5}]}]"#);
        assert!(matches!(empty, Err(EmotionError::Malformed { .. })));
        assert!(matches!(small_lexicon("[{]"), Err(EmotionError::Json(_))));
    }

    #[test]
    fn threshold_rule() {
        let l = small_lexicon(
            r#"[{"term": "thrilled", "emotions": [{"emotion": "joy", "weight": 0.9}]},
                {"term": "terrified", "emotions": [{"emotion": "fear", "weight": 0.8}]}]"#,
        )
        .unwrap();
        let text = "thrilled but terrified";
        assert_eq!(
            tag_text(text, &l, 0.0),
            BTreeSet::from([EmotionCategory::DelightJoy, EmotionCategory::FearAnxiety])
        );
        assert_eq!(
            tag_text(text, &l, 0.85),
            BTreeSet::from([EmotionCategory::DelightJoy])
        );
        assert!(tag_text("nothing relevant here", &l, 0.0).is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let l = lex();
        // "moon mission" carries joy; "moon" alone only enthusiasm
        let tags = tag_text("BNB moon mission!", &l, 0.0);
        assert!(tags.contains(&EmotionCategory::DelightJoy));
        let tags = tag_text("BNB moon", &l, 0.0);
        assert_eq!(tags, BTreeSet::from([EmotionCategory::EnthusiasmEagerness]));
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(Percent::of(2, 3).to_string(), "66.67");
        assert_eq!(Percent::of(1, 3).to_string(), "33.33");
        assert_eq!(Percent::of(1, 8).to_string(), "12.50");
        assert_eq!(Percent::of(1, 1600).to_string(), "0.06");
        // exactly 0.005 rounds up
        assert_eq!(Percent::of(1, 20_000).to_string(), "0.01");
        assert_eq!(Percent::of(1, 40_000).to_string(), "0.00");
        assert_eq!(Percent::of(0, 5).to_string(), "0.00");
        assert_eq!(Percent::of(5, 5).to_string(), "100.00");
        assert_eq!(serde_json::to_string(&Percent::of(2, 3)).unwrap(), "66.67");
    }

    #[test]
    fn aggregation_cells_and_rendering() {
        let docs = vec![
            Document::new("1", "so happy and thrilled")
                .with_task2(Task2Label::Incremental)
                .with_coin(Coin::Ada),
            Document::new("2", "happy days")
                .with_task2(Task2Label::Incremental)
                .with_coin(Coin::Ada),
            Document::new("3", "flat market")
                .with_task2(Task2Label::Incremental)
                .with_coin(Coin::Ada),
            Document::new("4", "terrified")
                .with_task2(Task2Label::Neutral)
                .with_coin(Coin::Bnb),
            Document::new("5", "happy").with_task2(Task2Label::Neutral),
        ];
        let ds = Dataset::new("t", docs, None).unwrap();
        let r = aggregate(&ds, &lex(), 0.0);
        assert_eq!(r.cells.len(), 2);
        assert_eq!(r.cells[0].coin, Coin::Bnb);
        let ada = r.cell(&Coin::Ada, Task2Label::Incremental).unwrap();
        assert_eq!(ada.documents, 3);
        assert_eq!(
            ada.percentages[&EmotionCategory::DelightJoy].to_string(),
            "66.67"
        );
        let md = r.to_markdown();
        assert!(md.contains("| ADA | Incremental | 66.67 |"), "{md}");
        assert!(
            md.contains("| BNB | Neutral | – | – | – | – | 100.00 | – |"),
            "{md}"
        );
    }

    #[test]
    fn unmatched_document_only_moves_denominator() {
        let base = vec![Document::new("1", "thrilled")
            .with_task2(Task2Label::Neutral)
            .with_coin(Coin::Xrp)];
        let mut more = base.clone();
        more.push(
            Document::new("2", "plain words")
                .with_task2(Task2Label::Neutral)
                .with_coin(Coin::Xrp),
        );
        let a = aggregate(&Dataset::new("a", base, None).unwrap(), &lex(), 0.0);
        let b = aggregate(&Dataset::new("b", more, None).unwrap(), &lex(), 0.0);
        assert_eq!(a.cells[0].profile.counts, b.cells[0].profile.counts);
        assert_eq!(b.cells[0].profile.documents, 2);
    }

    #[test]
    fn no_eligible_documents() {
        let ds = Dataset::new("e", vec![Document::new("1", "thrilled")], None).unwrap();
        assert!(aggregate(&ds, &lex(), 0.0).cells.is_empty());
    }
}
