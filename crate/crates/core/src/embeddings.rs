//! Word-embedding spaces: the textual `count dim` format, frequency sidecars,
//! lookups, and seeded synthetic spaces for fixtures.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vocabulary of unique tokens, one dense vector per token, and optional
/// corpus frequencies. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
    frequencies: HashMap<String, u64>,
}

fn validate_token(token: &str) -> Result<()> {
    if token.is_empty() || token.chars().any(char::is_whitespace) {
        return Err(Error::InvalidToken(token.to_string()));
    }
    Ok(())
}

impl EmbeddingSpace {
    /// Builds a space from `(token, vector)` rows.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut space = EmbeddingSpace::empty(dim)?;
        for (token, vector) in rows {
            space.push(token.into(), &vector, None)?;
        }
        Ok(space)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(EmbeddingSpace {
            tokens: Vec::new(),
            index: HashMap::new(),
            dim,
            data: Vec::new(),
            frequencies: HashMap::new(),
        })
    }

    fn push(&mut self, token: String, vector: &[f64], line: Option<usize>) -> Result<()> {
        validate_token(&token)?;
        let line_no = line.unwrap_or(self.tokens.len() + 1);
        if vector.len() != self.dim {
            return Err(Error::RowLength {
                line: line_no,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                line: line_no,
                value: bad.to_string(),
            });
        }
        if self.index.contains_key(&token) {
            return Err(Error::DuplicateToken {
                line: line_no,
                token,
            });
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    /// Attaches corpus frequencies; tokens missing from the map count as 0.
    pub fn with_frequencies(mut self, frequencies: HashMap<String, u64>) -> Self {
        self.frequencies = frequencies;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// The stored row for `token`, or `None` when it is out of vocabulary.
    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frequency(&self, token: &str) -> u64 {
        self.frequencies.get(token).copied().unwrap_or(0)
    }

    pub fn frequencies(&self) -> &HashMap<String, u64> {
        &self.frequencies
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens
            .iter()
            .enumerate()
            .map(move |(i, t)| (t.as_str(), self.row(i)))
    }
}

/// Reads the textual format: a `count dim` header, then `token v1 .. vd` rows.
pub fn read_embeddings<R: Read>(source: R) -> Result<EmbeddingSpace> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();
    let (count, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::MalformedHeader {
                line: 1,
                reason: "empty input".into(),
            });
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        break parse_header(&line, i + 1)?;
    };
    let mut space = EmbeddingSpace::empty(dim).map_err(|_| Error::MalformedHeader {
        line: 1,
        reason: "dimension must be positive".into(),
    })?;
    for (i, line) in lines {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default().to_string();
        let mut vector = Vec::with_capacity(dim);
        for field in fields {
            let value: f64 = field.parse().map_err(|_| Error::NonNumeric {
                line: line_no,
                value: field.to_string(),
            })?;
            vector.push(value);
        }
        if space.len() == count {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("more rows than the {count} declared in the header"),
            });
        }
        space.push(token, &vector, Some(line_no))?;
    }
    if space.len() != count {
        return Err(Error::Parse {
            line: space.len() + 2,
            reason: format!("header declares {count} rows, found {}", space.len()),
        });
    }
    Ok(space)
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::MalformedHeader {
            line: line_no,
            reason: format!("expected `<count> <dim>`, found `{line}`"),
        });
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::MalformedHeader {
            line: line_no,
            reason: format!("`{s}` is not a non-negative integer"),
        })
    };
    let count = parse(fields[0])?;
    let dim = parse(fields[1])?;
    if dim == 0 {
        return Err(Error::MalformedHeader {
            line: line_no,
            reason: "dimension must be positive".into(),
        });
    }
    Ok((count, dim))
}

/// Writes the textual format. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_embeddings<W: Write>(space: &EmbeddingSpace, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    writeln!(out, "{} {}", space.len(), space.dim())?;
    for (token, vector) in space.iter() {
        out.write_all(token.as_bytes())?;
        for v in vector {
            write!(out, " {v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a `token\tcount` frequency sidecar.
pub fn read_frequencies<R: Read>(source: R) -> Result<HashMap<String, u64>> {
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (token, count) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: "expected `<token>\\t<count>`".into(),
        })?;
        let count: u64 = count.trim().parse().map_err(|_| Error::NonNumeric {
            line: i + 1,
            value: count.to_string(),
        })?;
        map.insert(token.to_string(), count);
    }
    Ok(map)
}

pub fn write_frequencies<W: Write>(space: &EmbeddingSpace, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    for token in space.tokens() {
        if let Some(c) = space.frequencies.get(token) {
            writeln!(out, "{token}\t{c}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Sidecar path convention: `<embeddings>.freq`.
pub fn frequency_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".freq");
    PathBuf::from(s)
}

/// Opens an embedding file, attaching the `.freq` sidecar when present.
/// With `expect_frequencies` a missing sidecar is an error.
pub fn open_embeddings(path: &Path, expect_frequencies: bool) -> Result<EmbeddingSpace> {
    let file = File::open(path).map_err(|_| Error::MissingResource(path.to_path_buf()))?;
    let space = read_embeddings(file)?;
    let sidecar = frequency_sidecar(path);
    match File::open(&sidecar) {
        Ok(f) => Ok(space.with_frequencies(read_frequencies(f)?)),
        Err(_) if expect_frequencies => Err(Error::MissingResource(sidecar)),
        Err(_) => Ok(space),
    }
}

/// A deterministic space with standard-normal entries.
pub fn synthetic_space(
    seed: u64,
    vocab: &[String],
    dim: usize,
    frequency_plan: &HashMap<String, u64>,
) -> Result<EmbeddingSpace> {
    if vocab.is_empty() {
        return Err(Error::InvalidArgument("vocabulary must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut space = EmbeddingSpace::empty(dim)?;
    for token in vocab {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        space.push(token.clone(), &v, None)?;
    }
    let freqs = vocab
        .iter()
        .filter_map(|t| frequency_plan.get(t).map(|c| (t.clone(), *c)))
        .collect();
    Ok(space.with_frequencies(freqs))
}

/// A binary noun compound `w1 w2`, surfaced as the single token `w1_w2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NounCompound {
    w1: String,
    w2: String,
    surface: String,
    pub frequency: u64,
}

impl NounCompound {
    pub fn new(w1: impl Into<String>, w2: impl Into<String>) -> Result<Self> {
        let w1 = w1.into();
        let w2 = w2.into();
        for w in [&w1, &w2] {
            if w.is_empty() || w.contains('_') || w.chars().any(char::is_whitespace) {
                return Err(Error::InvalidToken(w.clone()));
            }
        }
        let surface = format!("{w1}_{w2}");
        Ok(NounCompound {
            w1,
            w2,
            surface,
            frequency: 0,
        })
    }

    pub fn with_frequency(mut self, frequency: u64) -> Self {
        self.frequency = frequency;
        self
    }

    /// Parses a `w1_w2` surface form.
    pub fn from_surface(surface: &str) -> Result<Self> {
        let (w1, w2) = surface
            .split_once('_')
            .ok_or_else(|| Error::InvalidToken(surface.to_string()))?;
        NounCompound::new(w1, w2)
    }

    pub fn w1(&self) -> &str {
        &self.w1
    }

    pub fn w2(&self) -> &str {
        &self.w2
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn constituents(&self) -> [&str; 2] {
        [&self.w1, &self.w2]
    }
}

impl fmt::Display for NounCompound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.w1, self.w2)
    }
}

/// Reads `w1\tw2` compound lines; frequencies come from `space` when given.
pub fn read_compounds<R: Read>(source: R, space: Option<&EmbeddingSpace>) -> Result<Vec<NounCompound>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: i + 1,
                reason: "expected `w1\\tw2`".into(),
            });
        }
        let nc = NounCompound::new(fields[0].trim(), fields[1].trim()).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let freq = space.map_or(0, |s| s.frequency(nc.surface()));
        out.push(nc.with_frequency(freq));
    }
    Ok(out)
}
