//! Reader and writer for the big-endian IDX tensor container (unsigned-byte
//! payloads with one to three dimensions).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdxError {
    #[error("IDX header truncated: {0} bytes")]
    HeaderTruncated(usize),
    #[error("unrecognized IDX magic 0x{0:08X}")]
    BadMagic(u32),
    #[error("IDX dimension product overflows ({dims:?})")]
    DimensionOverflow { dims: Vec<u32> },
    #[error("payload shorter than header claims: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("payload longer than header claims: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: usize, found: usize },
    #[error("IDX shape {0:?} cannot be written")]
    Unwritable(Vec<usize>),
}

pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const IMAGES_MAGIC: u32 = 0x0000_0803;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxArray {
    pub shape: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn new(shape: Vec<usize>, data: Vec<u8>) -> Result<Self, IdxError> {
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        match n {
            Some(n) if n == data.len() && (1..=3).contains(&shape.len()) => Ok(IdxArray { shape, data }),
            _ => Err(IdxError::Unwritable(shape)),
        }
    }

    pub fn magic(&self) -> u32 {
        0x0000_0800 | self.shape.len() as u32
    }

    /// Number of items along the first axis.
    pub fn items(&self) -> usize {
        self.shape[0]
    }

    /// Elements per item.
    pub fn item_len(&self) -> usize {
        self.shape[1..].iter().product()
    }
}

/// Parses an unsigned-byte IDX buffer, validating the magic, the header and
/// the exact payload length.
pub fn parse(bytes: &[u8]) -> Result<IdxArray, IdxError> {
    if bytes.len() < 4 {
        return Err(IdxError::HeaderTruncated(bytes.len()));
    }
    let magic = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes"));
    let ndim = (magic & 0xFF) as usize;
    if magic & 0xFFFF_FF00 != 0x0000_0800 || !(1..=3).contains(&ndim) {
        return Err(IdxError::BadMagic(magic));
    }
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(IdxError::HeaderTruncated(bytes.len()));
    }
    let dims: Vec<u32> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .filter(|n| n.checked_add(header).is_some())
        .ok_or_else(|| IdxError::DimensionOverflow { dims: dims.clone() })?;
    let found = bytes.len() - header;
    if found < expected {
        return Err(IdxError::Truncated { expected, found });
    }
    if found > expected {
        return Err(IdxError::TrailingBytes { expected, found });
    }
    Ok(IdxArray {
        shape: dims.iter().map(|&d| d as usize).collect(),
        data: bytes[header..].to_vec(),
    })
}

pub fn serialize(a: &IdxArray) -> Result<Vec<u8>, IdxError> {
    if !(1..=3).contains(&a.shape.len()) || a.shape.iter().any(|&d| d > u32::MAX as usize) {
        return Err(IdxError::Unwritable(a.shape.clone()));
    }
    let mut out = Vec::with_capacity(4 + 4 * a.shape.len() + a.data.len());
    out.extend_from_slice(&a.magic().to_be_bytes());
    for &d in &a.shape {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&a.data);
    Ok(out)
}
