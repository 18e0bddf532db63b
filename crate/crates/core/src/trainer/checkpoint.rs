//! Binary checkpoint format.
//!
//! All integers are little-endian `u64`, floats little-endian `f64`:
//!
//! ```text
//! magic "INCDECKP" | version u32 = 1
//! time | dim | config_hash_len | config_hash bytes (utf-8)
//! step | beta1 | beta2 | epsilon
//! matrix: entities | matrix: relations | matrix: logits
//! known: entities | known: relations
//! matrix x6: Adam first/second moments of entities, relations, logits
//! sha256 of everything above (32 bytes)
//! ```
//!
//! A matrix is `rows | cols | rows*cols values`; a known mask is `len | len bytes (0/1)`.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::adam::{AdamConfig, Moments, OptimizerState};
use super::model::{EmbeddingTable, Matrix};
use super::train::IncdeModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"INCDECKP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: IncdeModel,
    pub config_hash: String,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn matrix(&mut self, m: &Matrix) {
        self.u64(m.rows() as u64);
        self.u64(m.cols() as u64);
        m.as_slice().iter().for_each(|&x| self.f64(x));
    }
    fn mask(&mut self, mask: &[bool]) {
        self.u64(mask.len() as u64);
        self.0.extend(mask.iter().map(|&b| b as u8));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> std::result::Result<usize, String> {
        let v = self.u64()?;
        usize::try_from(v).ok().filter(|&n| n <= self.buf.len()).ok_or_else(|| format!("bad length {v}"))
    }
    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn matrix(&mut self) -> std::result::Result<Matrix, String> {
        let rows = self.len()?;
        let cols = self.len()?;
        let n = rows.checked_mul(cols).ok_or("matrix too large")?;
        let bytes = self.take(n.checked_mul(8).ok_or("matrix too large")?)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Matrix::from_vec(rows, cols, data).expect("size checked"))
    }
    fn mask(&mut self) -> std::result::Result<Vec<bool>, String> {
        let n = self.len()?;
        self.take(n)?
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(format!("bad mask byte {b}")),
            })
            .collect()
    }
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let m = &ckpt.model;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&VERSION.to_le_bytes());
    w.u64(m.time as u64);
    w.u64(m.table.dim() as u64);
    w.u64(ckpt.config_hash.len() as u64);
    w.0.extend_from_slice(ckpt.config_hash.as_bytes());
    let opt = &m.optimizer;
    w.u64(opt.step);
    w.f64(opt.config.beta1);
    w.f64(opt.config.beta2);
    w.f64(opt.config.epsilon);
    w.matrix(&m.table.entities);
    w.matrix(&m.table.relations);
    w.matrix(&m.logits);
    w.mask(m.table.entity_mask());
    w.mask(m.table.relation_mask());
    for moments in [&opt.entities, &opt.relations, &opt.logits] {
        w.matrix(&moments.first);
        w.matrix(&moments.second);
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

pub fn decode_checkpoint(bytes: &[u8]) -> std::result::Result<Checkpoint, String> {
    if bytes.len() < MAGIC.len() + 4 + 32 {
        return Err("file too short".into());
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if &body[..8] != MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch".into());
    }
    let mut r = Reader { buf: body, pos: 12 };
    let time = r.len()?;
    let dim = r.len()?;
    let hash_len = r.len()?;
    let config_hash = String::from_utf8(r.take(hash_len)?.to_vec()).map_err(|e| e.to_string())?;
    let step = r.u64()?;
    let config = AdamConfig {
        beta1: r.f64()?,
        beta2: r.f64()?,
        epsilon: r.f64()?,
    };
    let entities = r.matrix()?;
    let relations = r.matrix()?;
    let logits = r.matrix()?;
    let entity_known = r.mask()?;
    let relation_known = r.mask()?;
    let mut moments = Vec::with_capacity(3);
    for _ in 0..3 {
        moments.push(Moments {
            first: r.matrix()?,
            second: r.matrix()?,
        });
    }
    if r.pos != body.len() {
        return Err("trailing bytes".into());
    }
    if entities.cols() != dim || relations.cols() != dim {
        return Err("embedding width differs from dim".into());
    }
    if entity_known.len() != entities.rows() || relation_known.len() != relations.rows() {
        return Err("known mask length differs from row count".into());
    }
    if logits.cols() != 1 {
        return Err("logits must have one column".into());
    }
    let mut moments = moments.into_iter();
    let optimizer = OptimizerState {
        config,
        step,
        entities: moments.next().unwrap(),
        relations: moments.next().unwrap(),
        logits: moments.next().unwrap(),
    };
    Ok(Checkpoint {
        model: IncdeModel {
            time,
            table: EmbeddingTable::from_parts(entities, relations, entity_known, relation_known),
            logits,
            optimizer,
        },
        config_hash,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, encode_checkpoint(ckpt)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|message| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}
