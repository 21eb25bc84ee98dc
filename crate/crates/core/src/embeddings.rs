//! Token vectors and the embedding file format.
//!
//! ```text
//! #qtwalk-emb v1 count=<|W|> dim=<d> mode=<classic|structured>
//! token<TAB>f1 f2 ... fd
//! ```
//!
//! Output matrices may follow, each introduced by
//! `#qtwalk-out pos=<relative position, 0 for classic> rows=<|W|>` and
//! listing rows in the same token order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::train::{EmbeddingModel, Mode};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Token vectors with lookup by token.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    tokens: Vec<String>,
    vectors: Vec<f64>,
    index: HashMap<String, usize>,
}

impl Embeddings {
    pub fn new(dim: usize, tokens: Vec<String>, vectors: Vec<f64>) -> Embeddings {
        assert_eq!(tokens.len() * dim, vectors.len(), "vector storage does not match token count");
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Embeddings { dim, tokens, vectors, index }
    }

    pub fn from_rows<S: Into<String>>(rows: impl IntoIterator<Item = (S, Vec<f64>)>) -> Embeddings {
        let mut tokens = Vec::new();
        let mut vectors = Vec::new();
        let mut dim = None;
        for (t, v) in rows {
            assert_eq!(*dim.get_or_insert(v.len()), v.len(), "rows differ in length");
            tokens.push(t.into());
            vectors.extend(v);
        }
        Embeddings::new(dim.unwrap_or(0), tokens, vectors)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|i| self.row(*i))
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Embeddings {
        Embeddings::new(self.dim, self.tokens.clone(), self.vectors.iter().map(|x| x * factor).collect())
    }
}

fn write_row(w: &mut impl Write, token: &str, row: &[f64]) -> io::Result<()> {
    w.write_all(token.as_bytes())?;
    w.write_all(b"\t")?;
    for (i, x) in row.iter().enumerate() {
        if i > 0 {
            w.write_all(b" ")?;
        }
        // Debug formatting is the shortest string that parses back exactly
        write!(w, "{x:?}")?;
    }
    w.write_all(b"\n")
}

/// Writes input vectors and, when `with_outputs`, the output matrices.
pub fn write_model(model: &EmbeddingModel, mut w: impl Write, with_outputs: bool) -> io::Result<()> {
    writeln!(w, "#qtwalk-emb v1 count={} dim={} mode={}", model.vocab_size(), model.dim, model.mode)?;
    for (i, t) in model.tokens.iter().enumerate() {
        write_row(&mut w, t, model.input_row(i as u32))?;
    }
    if with_outputs {
        let positions: Vec<i32> = match model.mode {
            Mode::Classic => vec![0],
            Mode::Structured => {
                let c = model.window as i32;
                (-c..=c).filter(|r| *r != 0).collect()
            }
        };
        for (m, pos) in positions.iter().enumerate() {
            writeln!(w, "#qtwalk-out pos={pos} rows={}", model.vocab_size())?;
            for (i, t) in model.tokens.iter().enumerate() {
                let s = i * model.dim;
                write_row(&mut w, t, &model.outputs[m][s..s + model.dim])?;
            }
        }
    }
    w.flush()
}

pub fn save_embeddings(model: &EmbeddingModel, path: &Path, with_outputs: bool) -> io::Result<()> {
    write_model(model, BufWriter::new(File::create(path)?), with_outputs)
}

struct Header {
    count: usize,
    dim: usize,
    mode: Mode,
}

fn parse_header(line: &str) -> Result<Header, EmbeddingError> {
    let bad = || EmbeddingError::Malformed { line: 1, message: format!("bad header {line:?}") };
    let rest = line.strip_prefix("#qtwalk-emb v1 ").ok_or_else(bad)?;
    let fields: HashMap<&str, &str> = rest.split(' ').filter_map(|kv| kv.split_once('=')).collect();
    Ok(Header {
        count: fields.get("count").and_then(|v| v.parse().ok()).ok_or_else(bad)?,
        dim: fields.get("dim").and_then(|v| v.parse().ok()).ok_or_else(bad)?,
        mode: fields.get("mode").and_then(|v| v.parse().ok()).ok_or_else(bad)?,
    })
}

fn parse_row(text: &str, line: usize, dim: usize) -> Result<(String, Vec<f64>), EmbeddingError> {
    let malformed = |message: String| EmbeddingError::Malformed { line, message };
    let (token, floats) = text.split_once('\t').ok_or_else(|| malformed("missing TAB".into()))?;
    let row = floats
        .split(' ')
        .map(|f| f.parse::<f64>().map_err(|_| malformed(format!("bad float {f:?}"))))
        .collect::<Result<Vec<f64>, _>>()?;
    if row.len() != dim {
        return Err(EmbeddingError::DimensionMismatch { expected: dim, found: row.len() });
    }
    Ok((token.to_string(), row))
}

/// Reads a full model: input vectors plus any output matrices.
pub fn read_model(r: impl BufRead) -> Result<EmbeddingModel, EmbeddingError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or(EmbeddingError::Malformed { line: 1, message: "empty file".into() })?;
    let header = parse_header(&first?)?;
    let mut tokens = Vec::with_capacity(header.count);
    let mut input = Vec::with_capacity(header.count * header.dim);
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    for (n, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        if line.starts_with("#qtwalk-out ") {
            outputs.push(Vec::with_capacity(header.count * header.dim));
            continue;
        }
        let (token, row) = parse_row(&line, n, header.dim)?;
        match outputs.last_mut() {
            None => {
                tokens.push(token);
                input.extend(row);
            }
            Some(m) => {
                let i = m.len() / header.dim;
                if tokens.get(i) != Some(&token) {
                    return Err(EmbeddingError::Malformed { line: n, message: format!("unexpected output row {token:?}") });
                }
                m.extend(row);
            }
        }
    }
    if tokens.len() != header.count {
        return Err(EmbeddingError::Malformed {
            line: 1,
            message: format!("header declares {} tokens, file has {}", header.count, tokens.len()),
        });
    }
    if outputs.iter().any(|m| m.len() != input.len()) {
        return Err(EmbeddingError::Malformed { line: 1, message: "incomplete output matrix".into() });
    }
    let window = match header.mode {
        Mode::Classic => 0,
        Mode::Structured => outputs.len() / 2,
    };
    Ok(EmbeddingModel { mode: header.mode, dim: header.dim, window, tokens, input, outputs })
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel, EmbeddingError> {
    read_model(BufReader::new(File::open(path)?))
}

/// Reads the token vectors of an embedding file.
pub fn load_embeddings(path: &Path) -> Result<Embeddings, EmbeddingError> {
    Ok(load_model(path)?.embeddings())
}
