//! `CWFM` model files.
//!
//! ```text
//! magic "CWFM" | u8 version
//! u32 x 5: part_dim, 3*part_dim, sentence_dim, 2*sentence_dim, hidden
//! u64 init_seed | f64 init_scale | u8 pooling | u8 activation
//! f64 parameter blocks in canonical order
//! u32 crc32 of everything before it
//! ```
//! All integers and floats little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Activation, FusionHyper, FusionModel, FusionParams, TriplePooling};
use crate::embedding::PARTS;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"CWFM";
pub const MODEL_VERSION: u8 = 1;

pub fn model_to_bytes(m: &FusionModel) -> Vec<u8> {
    let h = &m.hyper;
    let mut buf = Vec::with_capacity(64 + m.params.len() * 8);
    buf.extend_from_slice(MODEL_MAGIC);
    buf.push(MODEL_VERSION);
    for d in [h.part_dim, PARTS * h.part_dim, h.sentence_dim, 2 * h.sentence_dim, h.hidden] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    buf.extend_from_slice(&h.init_seed.to_le_bytes());
    buf.extend_from_slice(&h.init_scale.to_le_bytes());
    buf.push(match h.pooling {
        TriplePooling::ValidOnly => 0,
        TriplePooling::PaddingInclusive => 1,
    });
    buf.push(match h.activation {
        Activation::Relu => 0,
        Activation::Identity => 1,
    });
    for block in m.params.blocks() {
        for x in block {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn save_model(m: &FusionModel, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&model_to_bytes(m))?;
    f.sync_all()?;
    Ok(())
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<FusionModel> {
    const HEAD: usize = 4 + 1 + 5 * 4 + 8 + 8 + 1 + 1;
    if bytes.len() < HEAD + 4 {
        return Err(format_err("file too short"));
    }
    if &bytes[..4] != MODEL_MAGIC {
        return Err(format_err("bad magic bytes"));
    }
    if bytes[4] != MODEL_VERSION {
        return Err(format_err(format!("unsupported version {}", bytes[4])));
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
        return Err(format_err("checksum mismatch"));
    }

    let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().expect("4 bytes")) as usize;
    let [part, proj_in, sentence, hid_in, hidden] = [5, 9, 13, 17, 21].map(u32_at);
    if proj_in != PARTS * part || hid_in != 2 * sentence || part == 0 || sentence == 0 || hidden == 0 {
        return Err(format_err(format!(
            "inconsistent dimensions ({part}, {proj_in}, {sentence}, {hid_in}, {hidden})"
        )));
    }
    let init_seed = u64::from_le_bytes(body[25..33].try_into().expect("8 bytes"));
    let init_scale = f64::from_le_bytes(body[33..41].try_into().expect("8 bytes"));
    let pooling = match body[41] {
        0 => TriplePooling::ValidOnly,
        1 => TriplePooling::PaddingInclusive,
        x => return Err(format_err(format!("unknown pooling code {x}"))),
    };
    let activation = match body[42] {
        0 => Activation::Relu,
        1 => Activation::Identity,
        x => return Err(format_err(format!("unknown activation code {x}"))),
    };

    let mut params = FusionParams::zeros(sentence, part, hidden);
    let expected = HEAD + params.len() * 8;
    if body.len() != expected {
        return Err(format_err(format!(
            "parameter payload is {} bytes, dimensions require {}",
            body.len() - HEAD,
            expected - HEAD
        )));
    }
    let mut values = body[HEAD..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for block in params.blocks_mut() {
        for x in block.iter_mut() {
            *x = values.next().expect("length checked");
        }
    }
    if !params.all_finite() {
        return Err(format_err("non-finite parameter"));
    }
    Ok(FusionModel {
        hyper: FusionHyper {
            sentence_dim: sentence,
            part_dim: part,
            hidden,
            init_seed,
            init_scale,
            pooling,
            activation,
        },
        params,
    })
}

pub fn load_model(path: &Path) -> Result<FusionModel> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    model_from_bytes(&fs::read(path)?)
}
