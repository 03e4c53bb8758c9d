//! Comment-dump ingestion, tokenization and slicing by author and month.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use chrono::{DateTime, Datelike};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

const MIN_TOKEN_CHARS: usize = 2;
const MAX_TOKEN_CHARS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub author: String,
    #[serde(rename = "ts")]
    pub timestamp: i64,
    pub community: String,
    pub tokens: Vec<String>,
}

/// Time-ordered collection of documents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    span: (i64, i64),
}

impl Corpus {
    /// Builds a corpus, sorting documents by timestamp. The sort is stable, so
    /// documents sharing a timestamp keep their input order.
    pub fn new(mut documents: Vec<Document>) -> Self {
        documents.sort_by_key(|d| d.timestamp);
        let span = match (documents.first(), documents.last()) {
            (Some(first), Some(last)) => (first.timestamp, last.timestamp),
            _ => (0, 0),
        };
        Corpus { documents, span }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn span(&self) -> (i64, i64) {
        self.span
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    pub fn communities(&self) -> BTreeSet<&str> {
        self.documents.iter().map(|d| d.community.as_str()).collect()
    }

    /// Sub-corpus of a single community.
    pub fn community(&self, name: &str) -> Corpus {
        Corpus::new(
            self.documents
                .iter()
                .filter(|d| d.community == name)
                .cloned()
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFilter {
    pub communities: Option<BTreeSet<String>>,
    pub min_timestamp: Option<i64>,
    pub max_timestamp: Option<i64>,
    pub min_doc_tokens: usize,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        CorpusFilter {
            communities: None,
            min_timestamp: None,
            max_timestamp: None,
            min_doc_tokens: 3,
        }
    }
}

impl CorpusFilter {
    pub fn validate(&self) -> Result<()> {
        if let (Some(lo), Some(hi)) = (self.min_timestamp, self.max_timestamp) {
            if lo > hi {
                return Err(Error::invalid(format!(
                    "min_timestamp {lo} exceeds max_timestamp {hi}"
                )));
            }
        }
        Ok(())
    }

    fn admits(&self, doc: &Document) -> bool {
        if let Some(set) = &self.communities {
            if !set.contains(&doc.community) {
                return false;
            }
        }
        if self.min_timestamp.is_some_and(|lo| doc.timestamp < lo) {
            return false;
        }
        if self.max_timestamp.is_some_and(|hi| doc.timestamp > hi) {
            return false;
        }
        !doc.tokens.is_empty() && doc.tokens.len() >= self.min_doc_tokens
    }
}

/// Line counts from one ingestion pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub lines: usize,
    pub malformed: usize,
    pub deleted: usize,
    pub filtered: usize,
}

impl IngestStats {
    pub fn skipped(&self) -> usize {
        self.malformed + self.deleted + self.filtered
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub stats: IngestStats,
}

#[derive(Deserialize)]
struct RawComment {
    author: String,
    created_utc: Value,
    subreddit: String,
    body: String,
}

fn parse_created(value: &Value) -> Option<i64> {
    let ts = match value {
        Value::Number(n) => n.as_i64().or_else(|| {
            n.as_f64()
                .filter(|f| f.is_finite() && f.fract() == 0.0)
                .map(|f| f as i64)
        }),
        Value::String(s) => {
            let s = s.trim();
            s.parse::<i64>().ok().or_else(|| {
                s.parse::<f64>()
                    .ok()
                    .filter(|f| f.is_finite() && f.fract() == 0.0)
                    .map(|f| f as i64)
            })
        }
        _ => None,
    }?;
    (ts >= 0).then_some(ts)
}

/// Reads a Reddit-style JSONL dump. Malformed lines and deleted or removed
/// comments are counted and skipped.
pub fn ingest_jsonl<R: BufRead>(reader: R, filter: &CorpusFilter) -> Result<Ingested> {
    filter.validate()?;
    let mut stats = IngestStats::default();
    let mut documents = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let raw: RawComment = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(_) => {
                stats.malformed += 1;
                continue;
            }
        };
        let Some(timestamp) = parse_created(&raw.created_utc) else {
            stats.malformed += 1;
            continue;
        };
        let body = raw.body.trim();
        if body == "[deleted]" || body == "[removed]" {
            stats.deleted += 1;
            continue;
        }
        let doc = Document {
            author: raw.author,
            timestamp,
            community: raw.subreddit,
            tokens: tokenize(body),
        };
        if filter.admits(&doc) {
            documents.push(doc);
        } else {
            stats.filtered += 1;
        }
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Ingested { corpus: Corpus::new(documents), stats })
}

fn is_url_start(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://") || s.starts_with("www.")
}

/// Lowercases, strips URLs, splits on non-alphanumerics and drops tokens
/// shorter than 2 or longer than 50 characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut cleaned = String::with_capacity(lower.len());
    let mut rest = lower.as_str();
    while let Some(c) = rest.chars().next() {
        if is_url_start(rest) {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            rest = &rest[end..];
            cleaned.push(' ');
        } else {
            cleaned.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    cleaned
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| {
            let n = t.chars().count();
            (MIN_TOKEN_CHARS..=MAX_TOKEN_CHARS).contains(&n)
        })
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonthWindow {
    pub year: i32,
    pub month: u32,
    pub corpus: Corpus,
}

impl MonthWindow {
    pub fn key(&self) -> String {
        month_key(self.year, self.month)
    }
}

pub fn month_key(year: i32, month: u32) -> String {
    format!("{year:04}-{month:02}")
}

/// UTC calendar month of a timestamp.
pub fn month_of(timestamp: i64) -> (i32, u32) {
    let dt = DateTime::from_timestamp(timestamp, 0).unwrap_or_default();
    (dt.year(), dt.month())
}

/// Partitions the corpus by UTC calendar month; empty months are omitted.
pub fn window_by_month(corpus: &Corpus) -> Vec<MonthWindow> {
    let mut months: BTreeMap<(i32, u32), Vec<Document>> = BTreeMap::new();
    for doc in &corpus.documents {
        months.entry(month_of(doc.timestamp)).or_default().push(doc.clone());
    }
    months
        .into_iter()
        .map(|((year, month), docs)| MonthWindow { year, month, corpus: Corpus::new(docs) })
        .collect()
}

/// The `k` authors with the most tokens (ties broken by name), each with
/// their own sub-corpus.
pub fn top_users(corpus: &Corpus, k: usize) -> Result<Vec<(String, Corpus)>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut totals: HashMap<&str, usize> = HashMap::new();
    for doc in &corpus.documents {
        *totals.entry(doc.author.as_str()).or_default() += doc.tokens.len();
    }
    let mut ranked: Vec<(&str, usize)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(k);
    Ok(ranked
        .into_iter()
        .map(|(author, _)| {
            let docs = corpus
                .documents
                .iter()
                .filter(|d| d.author == author)
                .cloned()
                .collect();
            (author.to_owned(), Corpus::new(docs))
        })
        .collect())
}

/// Writes the corpus as JSONL with fields `author`, `ts`, `community`, `tokens`.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for doc in &corpus.documents {
        serde_json::to_writer(&mut out, doc).map_err(|e| Error::format("corpus", e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a corpus previously produced by [`write_jsonl`]. Unlike dump
/// ingestion, any malformed line is an error.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut documents = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::format("corpus", format!("line {}: {e}", i + 1)))?;
        documents.push(doc);
    }
    Ok(Corpus::new(documents))
}
