//! Binary checkpoint format.
//!
//! Header `MZPCKPT1`, a little-endian `u32` array count, then per array: `u16`
//! name length, UTF-8 name, `u8` bytes per element (4 or 8), `u8` rank, `u32`
//! dimensions and little-endian data.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::network::{layer_dims, Dense, Network, NetworkShape, Params, LAYER_NAMES};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"MZPCKPT1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported element size {0}")]
    BadDtype(u8),
    #[error("array `{name}` has shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        got: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("expected array `{expected}`, found `{got}`")]
    UnexpectedArray { got: String, expected: String },
    #[error("expected {expected} arrays, found {got}")]
    ArrayCount { got: usize, expected: usize },
}

fn array_specs(shape: &NetworkShape) -> Vec<(String, Vec<usize>)> {
    layer_dims(shape)
        .into_iter()
        .zip(LAYER_NAMES)
        .flat_map(|((inp, out), name)| {
            [
                (format!("{name}.weight"), vec![out, inp]),
                (format!("{name}.bias"), vec![out]),
            ]
        })
        .collect()
}

impl<T: Scalar> Network<T> {
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<(), CheckpointError> {
        let specs = array_specs(self.shape());
        let width = std::mem::size_of::<T>() as u8;
        w.write_all(MAGIC)?;
        w.write_all(&(specs.len() as u32).to_le_bytes())?;
        let arrays = self
            .params()
            .layers
            .iter()
            .flat_map(|l| [&l.weights, &l.bias]);
        for ((name, dims), data) in specs.iter().zip(arrays) {
            w.write_all(&(name.len() as u16).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&[width, dims.len() as u8])?;
            for &d in dims {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            for &v in data {
                if width == 4 {
                    w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
                } else {
                    w.write_all(&v.as_f64().to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Reads parameters for a network of the given shape. Any array whose shape
    /// differs from what `shape` implies is rejected.
    pub fn read_checkpoint<R: Read>(
        shape: NetworkShape,
        mut r: R,
    ) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let specs = array_specs(&shape);
        let count = read_u32(&mut r)? as usize;
        if count != specs.len() {
            return Err(CheckpointError::ArrayCount {
                got: count,
                expected: specs.len(),
            });
        }
        let mut arrays: Vec<Vec<T>> = Vec::with_capacity(count);
        for (expected_name, expected_dims) in &specs {
            let mut b2 = [0u8; 2];
            r.read_exact(&mut b2)?;
            let mut name = vec![0u8; u16::from_le_bytes(b2) as usize];
            r.read_exact(&mut name)?;
            let name = String::from_utf8_lossy(&name).into_owned();
            if &name != expected_name {
                return Err(CheckpointError::UnexpectedArray {
                    got: name,
                    expected: expected_name.clone(),
                });
            }
            let mut hdr = [0u8; 2];
            r.read_exact(&mut hdr)?;
            let (width, rank) = (hdr[0], hdr[1] as usize);
            if width != 4 && width != 8 {
                return Err(CheckpointError::BadDtype(width));
            }
            let dims = (0..rank)
                .map(|_| read_u32(&mut r).map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            if &dims != expected_dims {
                return Err(CheckpointError::ShapeMismatch {
                    name,
                    got: dims,
                    expected: expected_dims.clone(),
                });
            }
            let n: usize = dims.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                let v = if width == 4 {
                    let mut b = [0u8; 4];
                    r.read_exact(&mut b)?;
                    f64::from(f32::from_le_bytes(b))
                } else {
                    let mut b = [0u8; 8];
                    r.read_exact(&mut b)?;
                    f64::from_le_bytes(b)
                };
                data.push(T::lit(v));
            }
            arrays.push(data);
        }
        let mut it = arrays.into_iter();
        let layers = layer_dims(&shape)
            .into_iter()
            .map(|(inputs, outputs)| Dense {
                inputs,
                outputs,
                weights: it.next().expect("weight array"),
                bias: it.next().expect("bias array"),
            })
            .collect();
        Ok(Network::from_params(shape, Params { layers }).expect("shapes checked above"))
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut buf = Vec::new();
        self.write_checkpoint(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(shape: NetworkShape, path: &Path) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path)?;
        Self::read_checkpoint(shape, bytes.as_slice())
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
