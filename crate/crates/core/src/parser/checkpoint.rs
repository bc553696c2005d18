//! Binary model files.
//!
//! Layout (little-endian): 8-byte magic, `u32` version, `u8` precision,
//! `u64` length plus a JSON header (configuration, vocabularies, optional
//! lexicon text), `u32` parameter count, then per parameter a `u32`-length
//! name, a trainable byte, `u32` rows and cols and the raw values.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{ParserModel, Vocabs};
use super::ParserConfig;
use crate::autodiff::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::{Precision, Scalar};
use crate::wordrep::Lexicon;

pub const MAGIC: &[u8; 8] = b"WTPARSE\0";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ParserConfig,
    vocabs: Vocabs,
    lexicon: Option<String>,
}

/// Human-readable configuration written next to a checkpoint.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl<T: Scalar> ParserModel<T> {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            config: self.config.clone(),
            vocabs: self.vocabs.clone(),
            lexicon: self.lexicon().map(Lexicon::to_wist).transpose()?,
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(json.len() + self.store.size() * size_of::<T>() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(match T::PRECISION {
            Precision::F32 => 0,
            Precision::F64 => 1,
        });
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(self.store.len() as u32).to_le_bytes());
        for (_, p) in self.store.iter() {
            out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.push(p.trainable as u8);
            let [r, c] = p.value.dims();
            out.extend_from_slice(&(r as u32).to_le_bytes());
            out.extend_from_slice(&(c as u32).to_le_bytes());
            out.extend_from_slice(&T::to_le_bytes_vec(p.value.data()));
        }
        Ok(out)
    }

    /// Reads a checkpoint of either precision, converting to `T`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("not a parser checkpoint".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let precision = match read_u8(&mut r)? {
            0 => Precision::F32,
            1 => Precision::F64,
            p => return Err(Error::Checkpoint(format!("unknown precision tag {p}"))),
        };
        let len = read_u64(&mut r)? as usize;
        if len > r.len() {
            return Err(Error::Checkpoint("truncated header".into()));
        }
        let header: Header = serde_json::from_slice(&r[..len])?;
        r = &r[len..];
        let count = read_u32(&mut r)?;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            read_exact(&mut r, &mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
            let trainable = read_u8(&mut r)? != 0;
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            let n = rows * cols;
            let width = precision.byte_width();
            if n * width > r.len() {
                return Err(Error::Checkpoint(format!("truncated values of {name}")));
            }
            let data: Vec<T> = r[..n * width]
                .chunks_exact(width)
                .map(|b| match precision {
                    Precision::F32 => T::lit(f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64),
                    Precision::F64 => T::lit(f64::from_le_bytes(b.try_into().expect("8 bytes"))),
                })
                .collect();
            r = &r[n * width..];
            if store.id(&name).is_some() {
                return Err(Error::Checkpoint(format!("duplicate parameter {name}")));
            }
            store.add(name, Tensor::matrix(rows, cols, data)?, trainable);
        }
        if !r.is_empty() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let lexicon = header.lexicon.as_deref().map(Lexicon::from_wist).transpose()?;
        ParserModel::from_parts(header.config, header.vocabs, store, lexicon)
    }

    /// Writes the checkpoint and its JSON configuration sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&self.config)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Checkpoint("unexpected end of checkpoint".into()))
}

fn read_u8(r: &mut &[u8]) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b)?;
    Ok(b[0])
}

fn read_u32(r: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut &[u8]) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}
