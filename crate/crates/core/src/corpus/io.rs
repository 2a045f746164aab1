//! JSONL (canonical) and CSV dataset files.
//!
//! A JSONL file holds one document object per line:
//!
//! ```text
//! {"id": str, "text": str, "coin": str|null, "task1": 0|1|null, "task2": 1|2|3|null,
//!  "source": "original"|"synthetic", "parent_id": str|null,
//!  "annotations": [{"annotator": str, "task": 1|2, "label": int}]}
//! ```
//!
//! An optional first line `{"_dataset": {"name": str, "seed": int|null}}` carries
//! dataset metadata and may add a free-form `"meta"` object. CSV files use the header
//! `id,text,coin,task1,task2,source,parent_id,annotations` where an empty cell is
//! null and `annotations` holds the JSON array.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Annotation, Coin, CorpusError, Dataset, Document, Result, Source, Task, Task1Label, Task2Label,
};

const CSV_HEADER: [&str; 8] = [
    "id",
    "text",
    "coin",
    "task1",
    "task2",
    "source",
    "parent_id",
    "annotations",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Jsonl,
    Csv,
}

impl DataFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Jsonl,
        }
    }
}

#[derive(Deserialize)]
struct RawAnnotation {
    annotator: String,
    task: i64,
    label: i64,
}

#[derive(Deserialize)]
struct RawRow {
    id: String,
    text: String,
    #[serde(default)]
    coin: Option<String>,
    #[serde(default)]
    task1: Option<i64>,
    #[serde(default)]
    task2: Option<i64>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    parent_id: Option<String>,
    #[serde(default)]
    annotations: Vec<RawAnnotation>,
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    name: String,
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    #[serde(rename = "_dataset")]
    dataset: DatasetHeader,
}

fn parse_err(line: usize, message: impl ToString) -> CorpusError {
    CorpusError::Parse {
        line,
        message: message.to_string(),
    }
}

impl RawRow {
    fn into_document(self, line: usize) -> Result<Document> {
        let task1 = match self.task1 {
            None => None,
            Some(code) => Some(
                u8::try_from(code)
                    .ok()
                    .and_then(|c| Task1Label::try_from(c).ok())
                    .ok_or(CorpusError::UnknownLabel {
                        line,
                        field: "task1",
                        code,
                    })?,
            ),
        };
        let task2 = match self.task2 {
            None => None,
            Some(code) => Some(
                u8::try_from(code)
                    .ok()
                    .and_then(|c| Task2Label::try_from(c).ok())
                    .ok_or(CorpusError::UnknownLabel {
                        line,
                        field: "task2",
                        code,
                    })?,
            ),
        };
        let source = match self.source.as_deref().map(str::trim) {
            None | Some("") => Source::Original,
            Some(s) if s.eq_ignore_ascii_case("original") => Source::Original,
            Some(s) if s.eq_ignore_ascii_case("synthetic") => Source::Synthetic,
            Some(s) => return Err(parse_err(line, format!("unknown source {s:?}"))),
        };
        let mut annotations = Vec::with_capacity(self.annotations.len());
        for a in self.annotations {
            let task = u8::try_from(a.task)
                .ok()
                .and_then(Task::from_number)
                .ok_or_else(|| {
                    parse_err(line, format!("annotation task {} is not 1 or 2", a.task))
                })?;
            if !task.is_valid_code(a.label) {
                return Err(CorpusError::UnknownLabel {
                    line,
                    field: "annotations.label",
                    code: a.label,
                });
            }
            annotations.push(Annotation {
                annotator: a.annotator,
                task: task.number(),
                label: a.label as u8,
            });
        }
        let doc = Document {
            id: self.id,
            text: self.text,
            coin: self.coin.filter(|c| !c.trim().is_empty()).map(Coin::from),
            task1,
            task2,
            source,
            parent_id: self.parent_id.filter(|p| !p.is_empty()),
            annotations,
        };
        doc.validate()?;
        Ok(doc)
    }
}

fn default_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string()
}

/// Loads and validates a dataset. Invalid rows are errors, never skipped.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = default_name(path);
    match format {
        DataFormat::Jsonl => parse_jsonl(&content, &name),
        DataFormat::Csv => parse_csv(&content, &name),
    }
}

pub(crate) fn parse_jsonl(content: &str, default_name: &str) -> Result<Dataset> {
    let mut name = default_name.to_string();
    let mut seed = None;
    let mut docs = Vec::new();
    for (i, raw_line) in content.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if docs.is_empty() && trimmed.starts_with("{\"_dataset\"") {
            let header: HeaderLine =
                serde_json::from_str(trimmed).map_err(|e| parse_err(line, e))?;
            name = header.dataset.name;
            seed = header.dataset.seed;
            continue;
        }
        let row: RawRow = serde_json::from_str(trimmed).map_err(|e| parse_err(line, e))?;
        docs.push(row.into_document(line)?);
    }
    Dataset::new(name, docs, seed)
}

fn optional_int(cell: &str, line: usize, field: &str) -> Result<Option<i64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|_| parse_err(line, format!("{field}: {cell:?} is not an integer")))
}

fn optional_string(cell: &str) -> Option<String> {
    if cell.is_empty() {
        None
    } else {
        Some(cell.to_string())
    }
}

pub(crate) fn parse_csv(content: &str, name: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(1, e))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != CSV_HEADER {
        return Err(parse_err(
            1,
            format!(
                "expected header {}, got {}",
                CSV_HEADER.join(","),
                names.join(",")
            ),
        ));
    }
    let mut docs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e)
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |i: usize| record.get(i).unwrap_or("");
        let annotations = if cell(7).trim().is_empty() {
            Vec::new()
        } else {
            serde_json::from_str(cell(7))
                .map_err(|e| parse_err(line, format!("annotations: {e}")))?
        };
        let row = RawRow {
            id: cell(0).to_string(),
            text: cell(1).to_string(),
            coin: optional_string(cell(2)),
            task1: optional_int(cell(3), line, "task1")?,
            task2: optional_int(cell(4), line, "task2")?,
            source: optional_string(cell(5)),
            parent_id: optional_string(cell(6)),
            annotations,
        };
        docs.push(row.into_document(line)?);
    }
    Dataset::new(name, docs, None)
}

pub(crate) fn to_jsonl(ds: &Dataset) -> String {
    jsonl_with_meta(ds, None)
}

/// JSONL text whose header line also carries `meta`, e.g. the run that produced it.
/// Readers ignore the extra header field.
pub fn jsonl_with_meta(ds: &Dataset, meta: Option<serde_json::Value>) -> String {
    let header = HeaderLine {
        dataset: DatasetHeader {
            name: ds.name().to_string(),
            seed: ds.seed(),
            meta,
        },
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for d in ds.documents() {
        out.push_str(&serde_json::to_string(d).expect("document serializes"));
        out.push('\n');
    }
    out
}

pub(crate) fn to_csv(ds: &Dataset) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for d in ds.documents() {
        let annotations = if d.annotations.is_empty() {
            String::new()
        } else {
            serde_json::to_string(&d.annotations).expect("annotations serialize")
        };
        let source = match d.source {
            Source::Original => "original",
            Source::Synthetic => "synthetic",
        };
        w.write_record([
            d.id.as_str(),
            d.text.as_str(),
            d.coin.as_ref().map(Coin::symbol).unwrap_or(""),
            &d.task1.map(|l| u8::from(l).to_string()).unwrap_or_default(),
            &d.task2.map(|l| u8::from(l).to_string()).unwrap_or_default(),
            source,
            d.parent_id.as_deref().unwrap_or(""),
            &annotations,
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn save_dataset(ds: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let bytes = match format {
        DataFormat::Jsonl => to_jsonl(ds).into_bytes(),
        DataFormat::Csv => to_csv(ds),
    };
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(&bytes).map_err(io_err)?;
    Ok(())
}
