//! Readers and writers for every on-disk format of the pipeline.
//!
//! * articles: records separated by a `%%%%` line; first line title, rest body.
//! * categories TSV: `entity<TAB>category`.
//! * prior TSV: `mention<TAB>entity<TAB>count`, any line order.
//! * vocab: one category per line in rank order; line number - 1 is the id.
//! * mentions JSONL, candidates JSONL, predictions JSONL.
//! * model JSON, see [`ModelFile`].

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::category::CategoryVocab;
use crate::error::{Error, Result};
use crate::example::MentionExample;
use crate::ingest::{CategoryAssignment, RawArticle};
use crate::prior::{CandidateSet, PriorTable};
use crate::typing::{ModelFile, TypingModel};

pub const RECORD_SEPARATOR: &str = "%%%%";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>> + '_> {
    let reader = open(path)?;
    Ok(reader
        .lines()
        .enumerate()
        .map(move |(i, l)| l.map(|l| (i + 1, l)).map_err(|e| Error::io(path, e))))
}

/// Buffered writer that reports the path on failure.
pub struct OutFile<'a> {
    path: &'a Path,
    inner: BufWriter<File>,
}

impl<'a> OutFile<'a> {
    pub fn create(path: &'a Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(OutFile {
            path,
            inner: BufWriter::new(file),
        })
    }

    pub fn line(&mut self, s: &str) -> Result<()> {
        self.inner
            .write_all(s.as_bytes())
            .and_then(|_| self.inner.write_all(b"\n"))
            .map_err(|e| Error::io(self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(self.path, e))
    }
}

pub fn read_articles(path: &Path) -> Result<Vec<RawArticle>> {
    let mut out = Vec::new();
    let mut record: Vec<(usize, String)> = Vec::new();
    let mut finish = |record: &mut Vec<(usize, String)>| -> Result<()> {
        let lines = std::mem::take(record);
        if lines.iter().all(|(_, l)| l.trim().is_empty()) {
            return Ok(());
        }
        let (line_no, title) = &lines[0];
        let title = title.trim();
        if title.is_empty() {
            return Err(Error::parse(
                path,
                *line_no,
                "article record must start with a title",
            ));
        }
        let body: Vec<&str> = lines[1..].iter().map(|(_, l)| l.as_str()).collect();
        out.push(RawArticle::new(title, body.join("\n"))?);
        Ok(())
    };
    for item in lines(path)? {
        let (n, line) = item?;
        let line = line.trim_end_matches('\r').to_string();
        if line == RECORD_SEPARATOR {
            finish(&mut record)?;
        } else {
            record.push((n, line));
        }
    }
    finish(&mut record)?;
    Ok(out)
}

pub fn write_articles(path: &Path, articles: &[RawArticle]) -> Result<()> {
    let mut out = OutFile::create(path)?;
    for (i, a) in articles.iter().enumerate() {
        if i > 0 {
            out.line(RECORD_SEPARATOR)?;
        }
        out.line(&a.title)?;
        for l in a.body.lines() {
            out.line(l)?;
        }
    }
    out.finish()
}

fn split_tsv<'l>(path: &Path, n: usize, line: &'l str, fields: usize) -> Result<Vec<&'l str>> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != fields {
        return Err(Error::parse(
            path,
            n,
            format!(
                "expected {fields} tab-separated fields, found {}",
                parts.len()
            ),
        ));
    }
    Ok(parts)
}

pub fn read_categories(path: &Path) -> Result<HashMap<String, CategoryAssignment>> {
    let mut out: HashMap<String, CategoryAssignment> = HashMap::new();
    for item in lines(path)? {
        let (n, line) = item?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parts = split_tsv(path, n, line, 2)?;
        let (entity, category) = (parts[0], parts[1]);
        if entity.is_empty() || category.trim().is_empty() {
            return Err(Error::parse(path, n, "empty entity or category"));
        }
        out.entry(entity.to_string())
            .or_insert_with(|| CategoryAssignment {
                entity: entity.to_string(),
                raw_categories: BTreeSet::new(),
            })
            .raw_categories
            .insert(category.to_string());
    }
    Ok(out)
}

fn check_tsv_field(s: &str) -> Result<()> {
    if s.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!(
            "{s:?} cannot be written to a TSV field"
        )));
    }
    Ok(())
}

pub fn write_categories(path: &Path, assignments: &[(String, String)]) -> Result<()> {
    let mut out = OutFile::create(path)?;
    for (e, c) in assignments {
        check_tsv_field(e)?;
        check_tsv_field(c)?;
        out.line(&format!("{e}\t{c}"))?;
    }
    out.finish()
}

pub fn read_prior(path: &Path) -> Result<PriorTable> {
    let mut table = PriorTable::new();
    for item in lines(path)? {
        let (n, line) = item?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let parts = split_tsv(path, n, line, 3)?;
        let count: u64 = parts[2]
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, n, format!("bad count {:?}: {e}", parts[2])))?;
        if count == 0 {
            return Err(Error::parse(path, n, "counts must be positive"));
        }
        table.add(parts[0], parts[1], count);
    }
    Ok(table)
}

/// Sorted by mention then entity, so equal tables give equal files.
pub fn write_prior(path: &Path, table: &PriorTable) -> Result<()> {
    let mut out = OutFile::create(path)?;
    for (m, e, c) in table.triples() {
        check_tsv_field(m)?;
        check_tsv_field(e)?;
        out.line(&format!("{m}\t{e}\t{c}"))?;
    }
    out.finish()
}

pub fn read_vocab(path: &Path) -> Result<CategoryVocab> {
    let mut entries = Vec::new();
    for item in lines(path)? {
        let (n, line) = item?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            return Err(Error::parse(path, n, "empty category line"));
        }
        entries.push(line.to_string());
    }
    CategoryVocab::new(entries).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn write_vocab(path: &Path, vocab: &CategoryVocab) -> Result<()> {
    let mut out = OutFile::create(path)?;
    for c in vocab.entries() {
        if c.contains(['\n', '\r']) {
            return Err(Error::InvalidArgument(format!(
                "category {c:?} contains a newline"
            )));
        }
        out.line(c)?;
    }
    out.finish()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in lines(path)? {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, n, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_jsonl<'t, T, I>(path: &Path, items: I) -> Result<()>
where
    T: Serialize + 't,
    I: IntoIterator<Item = &'t T>,
{
    let mut out = OutFile::create(path)?;
    for item in items {
        let s = serde_json::to_string(item).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        out.line(&s)?;
    }
    out.finish()
}

/// Reads mention examples and checks every record invariant.
pub fn read_mentions(path: &Path) -> Result<Vec<MentionExample>> {
    let mut out = Vec::new();
    for item in lines(path)? {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: MentionExample =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, n, e.to_string()))?;
        ex.validate().map_err(|m| Error::parse(path, n, m))?;
        out.push(ex);
    }
    Ok(out)
}

pub fn write_mentions(path: &Path, examples: &[MentionExample]) -> Result<()> {
    write_jsonl(path, examples)
}

/// Precomputed candidate lists, one line per evaluation example.
pub fn read_candidates(path: &Path) -> Result<Vec<CandidateSet>> {
    let raw: Vec<CandidateSet> = read_jsonl(path)?;
    Ok(raw
        .into_iter()
        .map(|c| CandidateSet::new(c.mention, c.candidates))
        .collect())
}

/// One line of the predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub mention: String,
    /// `None` when the example had no candidates.
    pub chosen: Option<String>,
    pub used_backoff: bool,
    pub scores: Vec<(String, f64)>,
}

pub fn read_model(path: &Path) -> Result<TypingModel> {
    let file: ModelFile = serde_json::from_reader(open(path)?)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    TypingModel::from_file(file)
}

pub fn write_model(path: &Path, model: &TypingModel) -> Result<()> {
    let mut out = OutFile::create(path)?;
    let json = serde_json::to_string(&model.to_file())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    out.line(&json)?;
    out.finish()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = OutFile::create(path)?;
    let json =
        serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    out.line(&json)?;
    out.finish()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = OutFile::create(path)?;
    out.line(text.trim_end_matches('\n'))?;
    out.finish()
}
