use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adapter::JsonLineProcess;
use crate::error::{Error, Result};

pub const DEFAULT_SENTENCE_DIM: usize = 768;
pub const DEFAULT_PART_DIM: usize = 300;

/// Produces one fixed-size vector per sentence.
pub trait SentenceEncoder: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn encode(&self, text: &str) -> Result<Vec<f64>>;

    /// Same as [`SentenceEncoder::encode`], for backends keyed by sentence id.
    fn encode_sentence(&self, id: &str, text: &str) -> Result<Vec<f64>> {
        let _ = id;
        self.encode(text)
    }
}

/// Word-vector lookup plus the tokenizer used to split triple parts.
pub trait WordVectors: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Total: unknown tokens get a defined vector (zero for file-backed
    /// tables).
    fn lookup(&self, token: &str) -> Vec<f64>;

    fn tokenize(&self, text: &str) -> Vec<String> {
        whitespace_tokenize(text)
    }
}

/// Splits on whitespace and strips punctuation from token edges. Case is
/// kept.
pub fn whitespace_tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Fills `dim` values in [-1, 1) from SHA-256 in counter mode over
/// (domain, seed, counter, key).
fn hashed_values(domain: &[u8], seed: u64, key: &[u8], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    let mut counter = 0u64;
    while out.len() < dim {
        let mut h = Sha256::new();
        h.update(domain);
        h.update(seed.to_le_bytes());
        h.update(counter.to_le_bytes());
        h.update(key);
        let digest = h.finalize();
        for chunk in digest.chunks_exact(8) {
            if out.len() == dim {
                break;
            }
            let word = u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            // 53 high bits -> [0, 1) -> [-1, 1)
            let unit = (word >> 11) as f64 / (1u64 << 53) as f64;
            out.push(2.0 * unit - 1.0);
        }
        counter += 1;
    }
    out
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Deterministic stand-in for a transformer encoder: a unit vector derived
/// from a keyed hash of the text. Carries no semantics.
#[derive(Debug, Clone)]
pub struct StubSentenceEncoder {
    seed: u64,
    dim: usize,
    name: String,
}

impl StubSentenceEncoder {
    pub fn new(seed: u64) -> Self {
        Self::with_dim(seed, DEFAULT_SENTENCE_DIM)
    }

    pub fn with_dim(seed: u64, dim: usize) -> Self {
        Self {
            seed,
            dim,
            name: format!("stub:{seed}"),
        }
    }
}

impl SentenceEncoder for StubSentenceEncoder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        Ok(normalize(hashed_values(b"cw-sentence", self.seed, text.as_bytes(), self.dim)))
    }
}

/// Deterministic word vectors: every token has a unit vector from a keyed
/// hash, so there is no out-of-vocabulary case.
#[derive(Debug, Clone)]
pub struct StubWordVectors {
    seed: u64,
    dim: usize,
    name: String,
}

impl StubWordVectors {
    pub fn new(seed: u64) -> Self {
        Self::with_dim(seed, DEFAULT_PART_DIM)
    }

    pub fn with_dim(seed: u64, dim: usize) -> Self {
        Self {
            seed,
            dim,
            name: format!("stub:{seed}"),
        }
    }
}

impl WordVectors for StubWordVectors {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn lookup(&self, token: &str) -> Vec<f64> {
        normalize(hashed_values(b"cw-word", self.seed, token.as_bytes(), self.dim))
    }
}

/// Word vectors loaded from the plain-text `token v1 ... vN` format. A
/// leading `count dim` header line (fastText `.vec`) is skipped.
/// Out-of-vocabulary tokens map to the zero vector.
#[derive(Debug, Clone)]
pub struct TextWordVectors {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
    name: String,
}

impl TextWordVectors {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        let reader = BufReader::new(fs::File::open(path)?);
        let mut table = HashMap::new();
        let mut dim = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values: Vec<&str> = fields.collect();
            if i == 0 && values.len() == 1 && token.parse::<usize>().is_ok() {
                continue;
            }
            let vector = values
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("bad vector value: {e}"),
                })?;
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(Error::Dimension(format!(
                        "{}:{}: expected {d} values, found {}",
                        path.display(),
                        i + 1,
                        vector.len()
                    )))
                }
                _ => {}
            }
            table.insert(token.to_owned(), vector);
        }
        let dim = dim.ok_or_else(|| Error::Config(format!("{}: no vectors", path.display())))?;
        Ok(Self {
            dim,
            table,
            name: format!("wordvec-file:{}", path.display()),
        })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl WordVectors for TextWordVectors {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn lookup(&self, token: &str) -> Vec<f64> {
        self.table.get(token).cloned().unwrap_or_else(|| vec![0.0; self.dim])
    }
}

#[derive(Serialize)]
struct EncodeRequest<'a> {
    id: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct EncodeResponse {
    id: String,
    vector: Vec<f64>,
}

/// Out-of-process sentence encoder: `{"id","text"}` in,
/// `{"id","vector":[...]}` out, one JSON object per line.
pub struct AdapterSentenceEncoder {
    dim: usize,
    name: String,
    process: JsonLineProcess,
}

impl AdapterSentenceEncoder {
    pub fn spawn(command: &str, dim: usize) -> Result<Self> {
        Ok(Self {
            dim,
            name: format!("encoder-adapter:{command}"),
            process: JsonLineProcess::spawn(command)?,
        })
    }
}

impl SentenceEncoder for AdapterSentenceEncoder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        self.encode_sentence("", text)
    }

    fn encode_sentence(&self, id: &str, text: &str) -> Result<Vec<f64>> {
        let resp: EncodeResponse = self
            .process
            .request(&EncodeRequest { id, text })
            .map_err(|e| Error::Config(format!("{}: {e}", self.name)))?;
        if resp.id != id {
            return Err(Error::Config(format!("{}: response id `{}` for request `{id}`", self.name, resp.id)));
        }
        if resp.vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "{} returned {} values, expected {}",
                self.name,
                resp.vector.len(),
                self.dim
            )));
        }
        Ok(resp.vector)
    }
}
