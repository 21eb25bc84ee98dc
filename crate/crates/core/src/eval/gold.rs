//! Gold-standard file readers.
//!
//! Tokens may be written in canonical form (`<iri>`, `"lit"`, `<< … >>`) or
//! as bare IRIs, which are wrapped in angle brackets.

use std::fs;
use std::io;
use std::path::Path;

use super::EvalError;

/// Canonical token for a gold-file entry.
pub fn normalize_token(raw: &str) -> String {
    let t = raw.trim();
    if t.starts_with('<') || t.starts_with('"') {
        t.to_string()
    } else {
        format!("<{t}>")
    }
}

fn malformed(file: &str, line: usize, message: impl Into<String>) -> EvalError {
    EvalError::MalformedGold { file: file.to_string(), line, message: message.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub records: Vec<(String, String)>,
}

impl LabeledSet {
    pub fn parse(text: &str, name: &str) -> Result<LabeledSet, EvalError> {
        let mut records: Vec<(String, String)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in content_lines(text) {
            let (token, label) = line.split_once('\t').ok_or_else(|| malformed(name, n, "expected token<TAB>label"))?;
            let token = normalize_token(token);
            if !seen.insert(token.clone()) {
                return Err(malformed(name, n, format!("duplicate token {token}")));
            }
            records.push((token, label.trim().to_string()));
        }
        Ok(LabeledSet { records })
    }

    pub fn labels(&self) -> Vec<String> {
        let mut l: Vec<String> = self.records.iter().map(|r| r.1.clone()).collect();
        l.sort();
        l.dedup();
        l
    }

    pub fn to_tsv(&self) -> String {
        self.records.iter().map(|(t, l)| format!("{t}\t{l}\n")).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelatednessGold {
    /// Seed and its candidates, most related first.
    pub records: Vec<(String, Vec<String>)>,
}

pub const CANDIDATES_PER_SEED: usize = 10;

impl RelatednessGold {
    pub fn parse(text: &str, name: &str) -> Result<RelatednessGold, EvalError> {
        let mut records: Vec<(String, Vec<String>)> = Vec::new();
        for (n, line) in content_lines(text) {
            if line.starts_with([' ', '\t']) {
                let (_, cands) = records.last_mut().ok_or_else(|| malformed(name, n, "candidate before any seed"))?;
                cands.push(normalize_token(line));
            } else {
                if let Some((seed, cands)) = records.last() {
                    if cands.len() != CANDIDATES_PER_SEED {
                        return Err(malformed(name, n, format!("seed {seed} has {} candidates", cands.len())));
                    }
                }
                records.push((normalize_token(line), Vec::new()));
            }
        }
        if let Some((seed, cands)) = records.last() {
            if cands.len() != CANDIDATES_PER_SEED {
                return Err(malformed(name, text.lines().count(), format!("seed {seed} has {} candidates", cands.len())));
            }
        }
        Ok(RelatednessGold { records })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (seed, cands) in &self.records {
            out.push_str(seed);
            out.push('\n');
            for c in cands {
                out.push('\t');
                out.push_str(c);
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGold {
    pub records: Vec<(String, String, f64)>,
}

impl SimilarityGold {
    pub fn parse(text: &str, name: &str) -> Result<SimilarityGold, EvalError> {
        let mut records = Vec::new();
        for (n, line) in content_lines(text) {
            let cols: Vec<&str> = line.split('\t').collect();
            let [a, b, score] = cols[..] else {
                return Err(malformed(name, n, "expected qt1<TAB>qt2<TAB>avg"));
            };
            let score: f64 = score.trim().parse().map_err(|_| malformed(name, n, format!("bad score {score:?}")))?;
            records.push((normalize_token(a), normalize_token(b), score));
        }
        Ok(SimilarityGold { records })
    }

    pub fn to_tsv(&self) -> String {
        self.records.iter().map(|(a, b, s)| format!("{a}\t{b}\t{s}\n")).collect()
    }
}

pub fn read_to_string(path: &Path) -> Result<String, EvalError> {
    fs::read_to_string(path).map_err(|e: io::Error| EvalError::Io(format!("{}: {e}", path.display())))
}
