use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::gbdt::GbdtModel;
use super::tree::{Node, Tree};

pub const MODEL_MAGIC: &[u8; 8] = b"GSIPGBDT";
pub const MODEL_VERSION: u32 = 1;

const KIND_SPLIT: u8 = 0;
const KIND_LEAF: u8 = 1;

pub fn save_model(model: &GbdtModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GbdtModel> {
    read_model(&mut BufReader::new(File::open(path)?))
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::state(format!("{what} {v} does not fit in u32")))
}

/// Little-endian: magic, version, class count, feature width, learning
/// rate, max depth, class weights, tree count, then per tree its class,
/// node count and nodes. A node is a kind byte followed by feature,
/// threshold, left and right for splits or the value for leaves.
pub fn write_model(model: &GbdtModel, w: &mut impl Write) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    buf.extend_from_slice(&u32_of(model.num_classes, "class count")?.to_le_bytes());
    buf.extend_from_slice(&u32_of(model.feature_dim, "feature width")?.to_le_bytes());
    buf.extend_from_slice(&model.learning_rate.to_le_bytes());
    buf.extend_from_slice(&u32_of(model.max_depth, "max depth")?.to_le_bytes());
    for cw in &model.class_weights {
        buf.extend_from_slice(&cw.to_le_bytes());
    }
    buf.extend_from_slice(&u32_of(model.trees.len(), "tree count")?.to_le_bytes());
    for t in &model.trees {
        buf.extend_from_slice(&t.class().to_le_bytes());
        buf.extend_from_slice(&u32_of(t.nodes().len(), "node count")?.to_le_bytes());
        for n in t.nodes() {
            match *n {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    buf.push(KIND_SPLIT);
                    buf.extend_from_slice(&feature.to_le_bytes());
                    buf.extend_from_slice(&threshold.to_le_bytes());
                    buf.extend_from_slice(&left.to_le_bytes());
                    buf.extend_from_slice(&right.to_le_bytes());
                }
                Node::Leaf(v) => {
                    buf.push(KIND_LEAF);
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::format("truncated model file"));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn read_model(r: &mut impl Read) -> Result<GbdtModel> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, at: 0 };
    if c.take(8)? != MODEL_MAGIC {
        return Err(Error::format("bad magic, not a GSIPGBDT file"));
    }
    let version = c.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::format(format!("unsupported model version {version}")));
    }
    let num_classes = c.u32()? as usize;
    let feature_dim = c.u32()? as usize;
    let learning_rate = c.f32()?;
    let max_depth = c.u32()? as usize;
    if num_classes > 256 {
        return Err(Error::format(format!("{num_classes} classes")));
    }
    let class_weights = (0..num_classes).map(|_| c.f32()).collect::<Result<Vec<_>>>()?;
    let num_trees = c.u32()? as usize;
    let mut trees = Vec::new();
    for _ in 0..num_trees {
        let class = c.u32()?;
        let count = c.u32()? as usize;
        // every node takes at least 5 bytes
        if count > (bytes.len() - c.at) / 5 {
            return Err(Error::format("truncated model file"));
        }
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            nodes.push(match c.u8()? {
                KIND_SPLIT => Node::Split {
                    feature: c.u32()?,
                    threshold: c.f32()?,
                    left: c.u32()?,
                    right: c.u32()?,
                },
                KIND_LEAF => Node::Leaf(c.f32()?),
                k => return Err(Error::format(format!("unknown node kind {k}"))),
            });
        }
        trees.push(Tree::new(class, nodes)?);
    }
    if c.at != bytes.len() {
        return Err(Error::format("trailing bytes after model"));
    }
    GbdtModel::new(
        num_classes,
        feature_dim,
        learning_rate,
        max_depth,
        class_weights,
        trees,
    )
}
