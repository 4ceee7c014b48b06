//! The IDX container used by the MNIST distribution.
//!
//! Images: magic `0x00000803`, then big-endian `u32` counts `n`, `rows`,
//! `cols`, then `n * rows * cols` unsigned bytes. Labels: magic
//! `0x00000801`, big-endian `u32` count, then one byte per label.

use byteorder::{BigEndian, ByteOrder};

use super::{ImageTensor, NUM_CLASSES};
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn header(bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let header_len = 4 * (1 + dims);
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let found = BigEndian::read_u32(&bytes[..4]);
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    if bytes.len() < header_len {
        return Err(Error::Truncated {
            expected: header_len,
            found: bytes.len(),
        });
    }
    Ok((0..dims)
        .map(|d| BigEndian::read_u32(&bytes[4 + 4 * d..8 + 4 * d]) as usize)
        .collect())
}

fn payload(bytes: &[u8], header_len: usize, count: usize) -> Result<&[u8]> {
    let expected = header_len + count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(&bytes[header_len..expected])
}

/// Parse an IDX image file; bytes map to `[0, 1]` as `v / 255`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImageTensor>> {
    let dims = header(bytes, IMAGE_MAGIC, 3)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let body = payload(bytes, 16, n * rows * cols)?;
    let per_image = rows * cols;
    if per_image == 0 {
        return Ok((0..n).map(|_| ImageTensor::zeros(rows, cols)).collect());
    }
    Ok(body
        .chunks_exact(per_image)
        .map(|chunk| {
            let pixels = chunk.iter().map(|&b| b as f64 / 255.0).collect();
            ImageTensor::new(rows, cols, pixels).expect("bytes map into [0, 1]")
        })
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let dims = header(bytes, LABEL_MAGIC, 1)?;
    let body = payload(bytes, 8, dims[0])?;
    if let Some((index, &value)) = body
        .iter()
        .enumerate()
        .find(|(_, &b)| b as usize >= NUM_CLASSES)
    {
        return Err(Error::LabelOutOfRange { index, value });
    }
    Ok(body.to_vec())
}

/// Inverse of [`parse_idx_images`]; pixels are quantized by `round(v * 255)`.
pub fn encode_idx_images(images: &[ImageTensor]) -> Result<Vec<u8>> {
    let (rows, cols) = images
        .first()
        .map(|im| (im.height(), im.width()))
        .unwrap_or((0, 0));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for im in images {
        if (im.height(), im.width()) != (rows, cols) {
            return Err(Error::ShapeMismatch(
                "IDX images must share one shape".into(),
            ));
        }
        out.extend(im.pixels().iter().map(|v| (v * 255.0).round() as u8));
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
