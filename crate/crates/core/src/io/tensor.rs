//! Raw little-endian tensor files described by manifest entries.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Float32,
    Float64,
    Uint8,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::Float32 => 4,
            Dtype::Float64 => 8,
            Dtype::Uint8 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ByteOrder {
    Little,
}

/// Manifest entry for one tensor file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRef {
    pub file: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub byte_order: ByteOrder,
}

impl TensorRef {
    pub fn new(file: impl Into<String>, dtype: Dtype, shape: Vec<usize>) -> Self {
        TensorRef {
            file: file.into(),
            dtype,
            shape,
            byte_order: ByteOrder::Little,
        }
    }

    fn element_count(&self, field: &str) -> Result<usize> {
        self.shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::load(&self.file, field, "shape product overflows"))
    }

    fn check(&self, field: &str, expected_shape: &[usize], allowed: &[Dtype]) -> Result<()> {
        if self.shape != expected_shape {
            return Err(Error::load(
                &self.file,
                format!("{field}.shape"),
                format!(
                    "manifest declares shape {:?}, expected {:?}",
                    self.shape, expected_shape
                ),
            ));
        }
        if !allowed.contains(&self.dtype) {
            return Err(Error::load(
                &self.file,
                format!("{field}.dtype"),
                format!(
                    "dtype {:?} not allowed here (expected one of {allowed:?})",
                    self.dtype
                ),
            ));
        }
        if self.file.is_empty()
            || Path::new(&self.file).is_absolute()
            || self.file.split(['/', '\\']).any(|c| c == "..")
        {
            return Err(Error::load(
                &self.file,
                format!("{field}.file"),
                "file must be a relative path inside the bundle",
            ));
        }
        Ok(())
    }

    fn read_bytes(&self, dir: &Path, field: &str) -> Result<Vec<u8>> {
        let path = dir.join(&self.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let count = self.element_count(field)?;
        let expected = count
            .checked_mul(self.dtype.size())
            .ok_or_else(|| Error::load(&self.file, field, "byte size overflows"))?;
        if bytes.len() != expected {
            return Err(Error::load(
                &self.file,
                format!("{field}.shape"),
                format!(
                    "shape {:?} of {:?} needs {expected} bytes ({count} values), file holds {} bytes",
                    self.shape,
                    self.dtype,
                    bytes.len()
                ),
            ));
        }
        Ok(bytes)
    }

    /// Reads a float tensor of the expected shape, widening to `f64`.
    pub fn read_f64(&self, dir: &Path, field: &str, expected_shape: &[usize]) -> Result<Vec<f64>> {
        self.check(field, expected_shape, &[Dtype::Float32, Dtype::Float64])?;
        let bytes = self.read_bytes(dir, field)?;
        Ok(match self.dtype {
            Dtype::Float32 => bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect(),
            Dtype::Float64 => bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
            Dtype::Uint8 => unreachable!("rejected by check"),
        })
    }

    pub fn read_u8(&self, dir: &Path, field: &str, expected_shape: &[usize]) -> Result<Vec<u8>> {
        self.check(field, expected_shape, &[Dtype::Uint8])?;
        self.read_bytes(dir, field)
    }
}

pub fn encode_f32(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values
        .into_iter()
        .flat_map(|v| (v as f32).to_le_bytes())
        .collect()
}

pub fn encode_f64(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Rejects non-finite entries, naming the first offending element.
pub fn require_finite(values: &[f64], file: &str, field: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::load(
            file,
            field,
            format!("element {i} is {} (must be finite)", values[i]),
        )),
        None => Ok(()),
    }
}
