//! Embedding files: JSON-lines text and the `CCEMB1` binary layout.
//!
//! Binary layout (little-endian): magic `CCEMB1`, `u16` version, `u32`
//! dim, `u64` count, then per record a `u16` id length, the UTF-8 id and
//! `dim` `f32` values. Values are narrowed to `f32` on write.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use cornercase_core::{EmbeddingSet, EmbeddingVector};
use serde::Deserialize;

use crate::bytes::{put_string, Reader};
use crate::error::{read_file, write_file, Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 6] = b"CCEMB1";
pub const EMBEDDING_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

impl EmbeddingFormat {
    /// `.jsonl`, `.json` and `.txt` are text; everything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json" | "txt") => EmbeddingFormat::Text,
            _ => EmbeddingFormat::Binary,
        }
    }
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(EmbeddingFormat::Text),
            "binary" => Ok(EmbeddingFormat::Binary),
            _ => Err(Error::Config(format!("unknown embedding format {s:?}"))),
        }
    }
}

/// Renders `v` with 9 significant digits, positional when the exponent
/// is moderate and scientific otherwise.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.8e}");
    let (_, exp) = sci.split_once('e').expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=8).contains(&exp) {
        return sci;
    }
    let mut s = format!("{:.*}", (8 - exp) as usize, v);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.push('0');
        }
    } else {
        s.push_str(".0");
    }
    s
}

pub fn encode_text(set: &EmbeddingSet) -> String {
    let mut out = String::new();
    for r in set.iter() {
        let id = serde_json::to_string(&r.id).expect("strings always serialise");
        let vals: Vec<String> = r.values().iter().map(|&v| format_sig9(v)).collect();
        writeln!(out, "{{\"id\": {id}, \"vec\": [{}]}}", vals.join(", ")).unwrap();
    }
    out
}

#[derive(Deserialize)]
struct TextRecord {
    id: String,
    vec: Vec<f64>,
}

pub fn decode_text(text: &str, path: &Path) -> Result<EmbeddingSet> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TextRecord =
            serde_json::from_str(line).map_err(|e| Error::format(path, format!("line {}: {e}", lineno + 1)))?;
        let v = EmbeddingVector::new(rec.id, rec.vec).map_err(|e| Error::format(path, format!("line {}: {e}", lineno + 1)))?;
        records.push(v);
    }
    EmbeddingSet::new(records).map_err(|e| Error::format(path, e.to_string()))
}

pub fn encode_binary(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let dim = u32::try_from(set.dim()).map_err(|_| Error::Data("embedding dimension exceeds u32".into()))?;
    let mut out = Vec::with_capacity(20 + set.len() * (set.dim() * 4 + 8));
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    for r in set.iter() {
        put_string(&mut out, &r.id).map_err(Error::Data)?;
        for &v in r.values() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<EmbeddingSet> {
    let fail = |msg: String| Error::format(path, msg);
    let mut r = Reader::new(bytes);
    if r.take(6).map_err(fail)? != EMBEDDING_MAGIC {
        return Err(fail("bad magic bytes, not a CCEMB1 embedding file".into()));
    }
    let version = r.u16().map_err(fail)?;
    if version != EMBEDDING_VERSION {
        return Err(fail(format!("unsupported embedding file version {version} (expected {EMBEDDING_VERSION})")));
    }
    let dim = r.u32().map_err(fail)? as usize;
    let count = r.u64().map_err(fail)?;
    if count > 0 && dim == 0 {
        return Err(fail("records declared with dimension 0".into()));
    }
    let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
    for i in 0..count {
        let id = r.string().map_err(fail)?;
        let mut vals = Vec::with_capacity(dim);
        for _ in 0..dim {
            vals.push(f64::from(r.f32().map_err(fail)?));
        }
        records.push(EmbeddingVector::new(id, vals).map_err(|e| fail(format!("record {i}: {e}")))?);
    }
    r.finish().map_err(fail)?;
    EmbeddingSet::new(records).map_err(|e| fail(e.to_string()))
}

pub fn save_embeddings(set: &EmbeddingSet, path: &Path, format: EmbeddingFormat) -> Result<()> {
    let bytes = match format {
        EmbeddingFormat::Text => encode_text(set).into_bytes(),
        EmbeddingFormat::Binary => encode_binary(set)?,
    };
    write_file(path, &bytes)
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingSet> {
    let bytes = read_file(path)?;
    match format {
        EmbeddingFormat::Text => {
            let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "text embedding file is not UTF-8"))?;
            decode_text(&text, path)
        }
        EmbeddingFormat::Binary => decode_binary(&bytes, path),
    }
}
