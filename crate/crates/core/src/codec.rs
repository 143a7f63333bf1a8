//! Binary records for partitions, trees and model files.
//!
//! All integers and floats are little-endian. The byte layout is documented
//! in `docs/model-format.md`; partitions are stored as their split sequence
//! and rebuilt by replay, so cell bounds are never written out.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::{Label, MinMax};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams, Strategy};
use crate::partition::{Mode, Partition};
use crate::scalar::Scalar;
use crate::tree::{Tree, TreeScore};

pub const MAGIC: [u8; 4] = *b"BSRF";
pub const MODEL_VERSION: u16 = 1;
pub const TREE_VERSION: u16 = 1;
pub const PARTITION_VERSION: u16 = 1;

const HEADER_LEN: usize = 16;
const CHECKSUM_LEN: usize = 32;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("count fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn scalar<T: Scalar>(&mut self, v: T) {
        v.write_le(&mut self.0);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let remaining = self.bytes.len() - self.pos;
        if remaining < n {
            return Err(Error::Truncated {
                needed: n - remaining,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn scalar<T: Scalar>(&mut self) -> Result<T> {
        Ok(T::read_le(self.take(T::WIDTH as usize)?))
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(Error::Corrupt(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )))
        }
    }
}

fn expect_version(found: u16, expected: u16, what: &'static str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::VersionMismatch {
            what,
            expected,
            found,
        })
    }
}

fn expect_width<T: Scalar>(found: u8) -> Result<()> {
    if found == T::WIDTH {
        Ok(())
    } else {
        Err(Error::Corrupt(format!(
            "record holds {}-byte scalars, reader expects {}",
            found,
            T::WIDTH
        )))
    }
}

fn mode_code(mode: Mode) -> u8 {
    match mode {
        Mode::Pure => 0,
        Mode::Adaptive => 1,
    }
}

fn mode_from(code: u8) -> Result<Mode> {
    match code {
        0 => Ok(Mode::Pure),
        1 => Ok(Mode::Adaptive),
        other => Err(Error::Corrupt(format!("unknown mode code {other}"))),
    }
}

fn write_partition<T: Scalar>(w: &mut Writer, part: &Partition<T>) {
    w.u16(PARTITION_VERSION);
    w.u32(part.dim());
    w.u32(part.split_count());
    w.u8(mode_code(part.mode()));
    w.u64(part.seed());
    w.f64(part.cut_width());
    w.u8(T::WIDTH);
    for rec in part.history() {
        w.u32(rec.leaf);
        w.u32(rec.dimension);
        w.scalar(rec.fraction);
    }
}

fn read_partition<T: Scalar>(r: &mut Reader<'_>) -> Result<Partition<T>> {
    expect_version(r.u16()?, PARTITION_VERSION, "partition record")?;
    let dim = r.u32()?;
    let p = r.u32()?;
    let mode = mode_from(r.u8()?)?;
    let seed = r.u64()?;
    let cut_width = r.f64()?;
    expect_width::<T>(r.u8()?)?;
    let mut part = Partition::unit(dim, mode, seed, cut_width)
        .map_err(|e| Error::Corrupt(format!("partition header: {e}")))?;
    for i in 0..p {
        let leaf = r.u32()?;
        let dimension = r.u32()?;
        let fraction = r.scalar::<T>()?;
        part.split(leaf, dimension, fraction)
            .map_err(|e| Error::Corrupt(format!("split {i}: {e}")))?;
    }
    Ok(part)
}

/// Flat record: header `(d, p, mode, seed, cut_width)` then the splits.
pub fn encode_partition<T: Scalar>(part: &Partition<T>) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    write_partition(&mut w, part);
    w.0
}

/// Rebuilds a partition by replaying the recorded splits.
pub fn decode_partition<T: Scalar>(bytes: &[u8]) -> Result<Partition<T>> {
    let mut r = Reader::new(bytes);
    let part = read_partition(&mut r)?;
    r.finish()?;
    Ok(part)
}

fn write_tree<T: Scalar>(w: &mut Writer, tree: &Tree<T>) {
    w.u16(TREE_VERSION);
    write_partition(w, tree.partition());
    match *tree.score() {
        TreeScore::Regularized {
            lambda,
            risk,
            objective,
        } => {
            w.u8(0);
            w.f64(lambda);
            w.scalar(risk);
            w.scalar(objective);
        }
        TreeScore::CrossValidated { cv_error, risk } => {
            w.u8(1);
            w.f64(0.0);
            w.scalar(risk);
            w.scalar(cv_error);
        }
    }
    w.u32(tree.leaf_labels().len());
    for &l in tree.leaf_labels() {
        w.u8(l.sign() as i8 as u8);
    }
}

fn read_tree<T: Scalar>(r: &mut Reader<'_>) -> Result<Tree<T>> {
    expect_version(r.u16()?, TREE_VERSION, "tree record")?;
    let partition = read_partition(r)?;
    let kind = r.u8()?;
    let lambda = r.f64()?;
    let risk = r.scalar::<T>()?;
    let criterion = r.scalar::<T>()?;
    let score = match kind {
        0 => TreeScore::Regularized {
            lambda,
            risk,
            objective: criterion,
        },
        1 => TreeScore::CrossValidated {
            cv_error: criterion,
            risk,
        },
        other => return Err(Error::Corrupt(format!("unknown score kind {other}"))),
    };
    let count = r.u32()?;
    let labels = r
        .take(count)?
        .iter()
        .map(|&b| match b as i8 {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::Corrupt(format!("label byte {other}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Tree::from_parts(partition, labels, score)
}

pub fn encode_tree<T: Scalar>(tree: &Tree<T>) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    write_tree(&mut w, tree);
    w.0
}

pub fn decode_tree<T: Scalar>(bytes: &[u8]) -> Result<Tree<T>> {
    let mut r = Reader::new(bytes);
    let tree = read_tree(&mut r)?;
    r.finish()?;
    Ok(tree)
}

/// Complete model file: header, payload, SHA-256 trailer.
pub fn encode_forest<T: Scalar>(forest: &Forest<T>) -> Vec<u8> {
    let params = forest.params();
    let mut w = Writer(Vec::new());
    w.u32(params.trees);
    w.u32(params.candidates);
    match params.strategy {
        Strategy::Regularized { lambda } => {
            w.u8(0);
            w.f64(lambda);
            w.u32(0);
            w.u32(0);
        }
        Strategy::CrossValidated { splits, folds } => {
            w.u8(1);
            w.f64(0.0);
            w.u32(splits);
            w.u32(folds);
        }
    }
    w.u8(mode_code(params.mode));
    w.f64(params.cut_width);
    w.u64(params.seed);
    w.u64(forest.train_size() as u64);
    w.u32(forest.dim());
    match forest.scaling() {
        Some(scaling) => {
            w.u8(1);
            for s in scaling {
                w.f64(s.min);
                w.f64(s.max);
            }
        }
        None => w.u8(0),
    }
    w.u32(forest.trees().len());
    for tree in forest.trees() {
        let record = encode_tree(tree);
        w.u32(record.len());
        w.0.extend_from_slice(&record);
    }
    let payload = w.0;

    let mut out = Writer(Vec::with_capacity(
        HEADER_LEN + payload.len() + CHECKSUM_LEN,
    ));
    out.0.extend_from_slice(&MAGIC);
    out.u16(MODEL_VERSION);
    out.u8(T::WIDTH);
    out.u8(0);
    out.u64(payload.len() as u64);
    out.0.extend_from_slice(&payload);
    let digest = Sha256::digest(&out.0);
    out.0.extend_from_slice(&digest);
    out.0
}

pub fn decode_forest<T: Scalar>(bytes: &[u8]) -> Result<Forest<T>> {
    let mut header = Reader::new(bytes);
    if header.array::<4>()? != MAGIC {
        return Err(Error::Corrupt("not a model file (bad magic)".into()));
    }
    expect_version(header.u16()?, MODEL_VERSION, "model file")?;
    expect_width::<T>(header.u8()?)?;
    header.u8()?;
    let payload_len = usize::try_from(header.u64()?)
        .map_err(|_| Error::Corrupt("payload length overflows".into()))?;
    let body_end = HEADER_LEN
        .checked_add(payload_len)
        .ok_or_else(|| Error::Corrupt("payload length overflows".into()))?;
    let total = body_end.saturating_add(CHECKSUM_LEN);
    if bytes.len() < total {
        return Err(Error::Truncated {
            needed: total - bytes.len(),
        });
    }
    if bytes.len() > total {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - total
        )));
    }
    let digest = Sha256::digest(&bytes[..body_end]);
    if digest.as_slice() != &bytes[body_end..] {
        return Err(Error::Checksum);
    }

    let mut r = Reader::new(&bytes[HEADER_LEN..body_end]);
    let trees = r.u32()?;
    let candidates = r.u32()?;
    let strategy_code = r.u8()?;
    let lambda = r.f64()?;
    let splits = r.u32()?;
    let folds = r.u32()?;
    let strategy = match strategy_code {
        0 => Strategy::Regularized { lambda },
        1 => Strategy::CrossValidated { splits, folds },
        other => return Err(Error::Corrupt(format!("unknown strategy code {other}"))),
    };
    let mode = mode_from(r.u8()?)?;
    let cut_width = r.f64()?;
    let seed = r.u64()?;
    let train_size = r.u64()? as usize;
    let dim = r.u32()?;
    let scaling = match r.u8()? {
        0 => None,
        1 => Some(
            (0..dim)
                .map(|_| {
                    Ok(MinMax {
                        min: r.f64()?,
                        max: r.f64()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        other => return Err(Error::Corrupt(format!("scaling flag {other}"))),
    };
    let count = r.u32()?;
    let params = ForestParams {
        trees,
        candidates,
        strategy,
        mode,
        cut_width,
        seed,
    };
    let mut decoded = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = r.u32()?;
        decoded.push(decode_tree::<T>(r.take(len)?)?);
    }
    r.finish()?;
    let forest = Forest::from_parts(decoded, params, train_size, scaling)?;
    if forest.dim() != dim {
        return Err(Error::Corrupt(format!(
            "header dimension {dim} disagrees with trees ({})",
            forest.dim()
        )));
    }
    Ok(forest)
}

pub fn save_model<T: Scalar>(forest: &Forest<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_forest(forest)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<Forest<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_forest(&bytes)
}

/// Scalar width recorded in a model file header, without decoding it.
pub fn model_scalar_width(bytes: &[u8]) -> Result<u8> {
    let mut r = Reader::new(bytes);
    if r.array::<4>()? != MAGIC {
        return Err(Error::Corrupt("not a model file (bad magic)".into()));
    }
    r.u16()?;
    r.u8()
}
