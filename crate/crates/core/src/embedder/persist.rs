//! Versioned binary model files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "C2VMODEL" | u32 version
//! u64 len | config as JSON
//! u64 |V| | per word: u32 len, UTF-8 bytes, u64 count
//! u8 context_frozen
//! u8 has_chars | u64 n | n × u32 code point
//! u8 has_encoder | u8 has_attention | 5 × u64 encoder dims
//! u32 tensor count | per tensor: u32 name len, name, u64 rows, u64 cols, f64 data
//! SHA-256 of everything above
//! ```

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::encoder::{CharEncoder, EncoderDims};
use super::{Model, TrainConfig};
use crate::corpus::{CharVocab, Vocab};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 8] = b"C2VMODEL";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let bytes = to_bytes(model)?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

/// SHA-256 of the serialized model, hex encoded.
pub fn checksum_hex(model: &Model) -> Result<String> {
    let bytes = to_bytes(model)?;
    Ok(bytes[bytes.len() - DIGEST_LEN..]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

pub fn to_bytes(model: &Model) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    let config = serde_json::to_vec(&model.config)
        .map_err(|e| Error::Data(format!("serializing config: {e}")))?;
    put_u64(&mut out, config.len() as u64);
    out.extend_from_slice(&config);

    put_u64(&mut out, model.vocab.len() as u64);
    for (w, &c) in model.vocab.words().iter().zip(model.vocab.counts()) {
        put_u32(&mut out, w.len() as u32);
        out.extend_from_slice(w.as_bytes());
        put_u64(&mut out, c);
    }
    out.push(model.context_frozen as u8);

    match &model.chars {
        Some(cv) => {
            out.push(1);
            put_u64(&mut out, cv.chars().len() as u64);
            for &c in cv.chars() {
                put_u32(&mut out, c as u32);
            }
        }
        None => out.push(0),
    }

    let mut tensors: Vec<(String, usize, usize, &[f64])> = Vec::new();
    if let Some(t) = &model.target {
        tensors.push(("target".into(), t.rows(), t.cols(), t.as_slice()));
    }
    if let Some(c) = &model.context {
        tensors.push(("context".into(), c.rows(), c.cols(), c.as_slice()));
    }
    match &model.encoder {
        Some(enc) => {
            out.push(1);
            out.push(enc.has_attention() as u8);
            let d = enc.dims();
            for v in [d.chars, d.char_dim, d.lstm_dim, d.word_dim, d.attn_dim] {
                put_u64(&mut out, v as u64);
            }
            for (name, data) in enc.tensor_names().into_iter().zip(enc.tensors()) {
                tensors.push((format!("encoder.{name}"), 1, data.len(), data));
            }
        }
        None => out.push(0),
    }

    put_u32(&mut out, tensors.len() as u32);
    for (name, rows, cols, data) in tensors {
        put_u32(&mut out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        put_u64(&mut out, rows as u64);
        put_u64(&mut out, cols as u64);
        for x in data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }

    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 4 {
        return Err(Error::Checksum);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            supported: VERSION,
        });
    }
    if bytes.len() < 12 + DIGEST_LEN {
        return Err(Error::Checksum);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }

    let mut r = Reader { buf: body, pos: 12 };
    let config_len = r.u64()? as usize;
    let config: TrainConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| Error::Malformed(format!("config: {e}")))?;

    let n_words = r.u64()? as usize;
    let mut entries = Vec::with_capacity(n_words.min(1 << 24));
    for _ in 0..n_words {
        let len = r.u32()? as usize;
        let word = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Malformed("vocabulary word is not UTF-8".into()))?
            .to_string();
        entries.push((word, r.u64()?));
    }
    let vocab = Vocab::from_counts(entries);
    let context_frozen = r.u8()? != 0;

    let chars = if r.u8()? != 0 {
        let n = r.u64()? as usize;
        let mut cs = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let c = char::from_u32(r.u32()?)
                .ok_or_else(|| Error::Malformed("invalid character".into()))?;
            cs.push(c);
        }
        Some(CharVocab::from_chars(cs))
    } else {
        None
    };

    let mut encoder = if r.u8()? != 0 {
        let attention = r.u8()? != 0;
        let mut d = [0usize; 5];
        for v in d.iter_mut() {
            *v = r.u64()? as usize;
        }
        let dims = EncoderDims {
            chars: d[0],
            char_dim: d[1],
            lstm_dim: d[2],
            word_dim: d[3],
            attn_dim: d[4],
        };
        Some(CharEncoder::zeros(dims, attention))
    } else {
        None
    };

    let n_tensors = r.u32()? as usize;
    let mut target = None;
    let mut context = None;
    let mut loaded_encoder_tensors = 0;
    for _ in 0..n_tensors {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Malformed("tensor name".into()))?
            .to_string();
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Malformed("tensor size overflow".into()))?;
        let raw = r.take(
            len.checked_mul(8)
                .ok_or_else(|| Error::Malformed("tensor size".into()))?,
        )?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        match name.as_str() {
            "target" => target = Some(Matrix::from_vec(rows, cols, data)?),
            "context" => context = Some(Matrix::from_vec(rows, cols, data)?),
            other => {
                let enc = encoder
                    .as_mut()
                    .ok_or_else(|| Error::Malformed(format!("unexpected tensor {other}")))?;
                let key = other.strip_prefix("encoder.").unwrap_or(other);
                let idx = enc
                    .tensor_names()
                    .iter()
                    .position(|n| *n == key)
                    .ok_or_else(|| Error::Malformed(format!("unknown tensor {other}")))?;
                let mut slots = enc.tensors_mut();
                let slot = &mut slots[idx];
                if slot.len() != data.len() {
                    return Err(Error::Malformed(format!(
                        "tensor {other} has {} values, expected {}",
                        data.len(),
                        slot.len()
                    )));
                }
                slot.copy_from_slice(&data);
                loaded_encoder_tensors += 1;
            }
        }
    }
    if let Some(enc) = &encoder {
        if loaded_encoder_tensors != enc.tensor_names().len() {
            return Err(Error::Malformed("missing encoder tensors".into()));
        }
    }
    if r.pos != body.len() {
        return Err(Error::Malformed("trailing bytes".into()));
    }

    Ok(Model {
        config,
        vocab,
        target,
        context,
        context_frozen,
        chars,
        encoder,
    })
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Malformed("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Text vectors: a `<count> <dim>` header, then `word v1 … v_dim` per
/// vocabulary word in id order.
pub fn write_text_vectors<W: Write>(model: &Model, mut out: W) -> std::io::Result<()> {
    let table = model.vocab_matrix();
    writeln!(out, "{} {}", table.rows(), table.cols())?;
    for (id, word) in model.vocab.words().iter().enumerate() {
        write!(out, "{word}")?;
        for x in table.row(id) {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
