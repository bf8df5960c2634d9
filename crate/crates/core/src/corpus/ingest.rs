use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::{ArticleRecord, EditTriple};
use crate::error::{Error, Result};

/// Malformed input lines, by 1-based line number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub total_lines: usize,
    pub errors: Vec<LineError>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl IngestReport {
    fn check_threshold(&self, path: &Path) -> Result<()> {
        // more than 10% malformed is a hard failure
        if self.errors.len() * 10 > self.total_lines {
            return Err(Error::TooManyMalformed {
                path: path.to_path_buf(),
                malformed: self.errors.len(),
                total: self.total_lines,
            });
        }
        Ok(())
    }
}

/// Lowercase, split on non-alphanumeric characters, drop pure-digit tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !t.chars().all(|c| c.is_ascii_digit()))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Deserialize)]
struct RawArticle {
    id: String,
    title: String,
    text: String,
}

pub fn ingest_articles(path: &Path) -> Result<(Vec<ArticleRecord>, IngestReport)> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (records, report) = parse_articles(&content);
    report.check_threshold(path)?;
    Ok((records, report))
}

/// Parses line-delimited `{id, title, text}` objects. Blank lines are ignored;
/// duplicate ids keep the first occurrence.
pub fn parse_articles(content: &str) -> (Vec<ArticleRecord>, IngestReport) {
    let lines: Vec<(usize, &str)> = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();

    let parsed: Vec<(usize, std::result::Result<ArticleRecord, String>)> = lines
        .par_iter()
        .map(|&(line, text)| {
            let rec = serde_json::from_str::<RawArticle>(text)
                .map(|raw| ArticleRecord::new(raw.id, raw.title, &raw.text))
                .map_err(|e| e.to_string());
            (line, rec)
        })
        .collect();

    let mut report = IngestReport {
        total_lines: lines.len(),
        errors: Vec::new(),
    };
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, rec) in parsed {
        match rec {
            Ok(r) if seen.insert(r.article_id.clone()) => records.push(r),
            Ok(r) => report.errors.push(LineError {
                line,
                message: format!("duplicate article id {}", r.article_id),
            }),
            Err(message) => report.errors.push(LineError { line, message }),
        }
    }
    (records, report)
}

pub fn ingest_edits(path: &Path) -> Result<(Vec<EditTriple>, IngestReport)> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
    let (edits, report) = parse_edits(&content);
    report.check_threshold(path)?;
    Ok((edits, report))
}

/// Parses `user \t article \t count` lines and sums duplicate pairs.
pub fn parse_edits(content: &str) -> (Vec<EditTriple>, IngestReport) {
    let mut report = IngestReport::default();
    let mut raw = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        let err = |message: String| LineError {
            line: i + 1,
            message,
        };
        if fields.len() != 3 {
            report
                .errors
                .push(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            continue;
        }
        match fields[2].trim().parse::<i64>() {
            Ok(n) if n > 0 => raw.push(EditTriple::new(fields[0], fields[1], n as u64)),
            Ok(n) => report.errors.push(err(format!("non-positive count {n}"))),
            Err(_) => report
                .errors
                .push(err(format!("non-numeric count {:?}", fields[2]))),
        }
    }
    (aggregate_edits(raw), report)
}

/// Sums counts of duplicate (user, article) pairs; output sorted by pair.
pub fn aggregate_edits(edits: impl IntoIterator<Item = EditTriple>) -> Vec<EditTriple> {
    let mut totals: BTreeMap<(String, String), u64> = BTreeMap::new();
    for e in edits {
        *totals.entry((e.user_id, e.article_id)).or_default() += e.edit_count;
    }
    totals
        .into_iter()
        .map(|((u, a), n)| EditTriple::new(u, a, n))
        .collect()
}
