//! IDX image/label files as used by the MNIST distribution, and the labeled
//! dataset type built from them.

use std::fs;
use std::path::Path;

use crate::error::{Error, ParseError, Result};
use crate::tensor::Tensor;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images with pixel values in `[0, 1]` and their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl LabeledDataset {
    pub fn new(images: Vec<Tensor>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(ParseError::DimensionMismatch(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            ))
            .into());
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::contract(format!("label {l} out of range for {classes} classes")));
        }
        if images
            .iter()
            .any(|img| img.data().iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(Error::contract("image values must lie in [0, 1]"));
        }
        Ok(LabeledDataset {
            images,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Loads an IDX image/label pair. The class count is `max(label) + 1`.
    pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Self> {
        let images = load_idx_images(images)?;
        let labels = load_idx_labels(labels)?;
        let classes = labels.iter().max().map_or(0, |&l| l + 1);
        LabeledDataset::new(images, labels, classes)
    }
}

fn header(bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    if bytes.len() < 4 {
        return Err(ParseError::ShortRead {
            expected: 4,
            found: bytes.len(),
        }
        .into());
    }
    let found = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if found != magic {
        return Err(ParseError::BadMagic {
            expected: format!("{magic:#010x}"),
            found: format!("{found:#010x}"),
        }
        .into());
    }
    let header_len = 4 + 4 * dims;
    if bytes.len() < header_len {
        return Err(ParseError::ShortRead {
            expected: header_len,
            found: bytes.len(),
        }
        .into());
    }
    Ok(bytes[4..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect())
}

fn body(bytes: &[u8], header_len: usize, expected: usize) -> Result<&[u8]> {
    let body = &bytes[header_len..];
    match body.len() {
        n if n < expected => Err(ParseError::ShortRead {
            expected: header_len + expected,
            found: bytes.len(),
        }
        .into()),
        n if n > expected => Err(ParseError::DimensionMismatch(format!(
            "header declares {expected} data bytes, file has {n}"
        ))
        .into()),
        _ => Ok(body),
    }
}

/// Decodes an IDX3 image file into `[1, rows, cols]` tensors scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Tensor>> {
    let dims = header(bytes, IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    if rows == 0 || cols == 0 {
        return Err(ParseError::DimensionMismatch(format!("image size {rows}x{cols}")).into());
    }
    let pixels = rows * cols;
    let data = body(bytes, 16, count * pixels)?;
    data.chunks_exact(pixels)
        .map(|img| {
            Tensor::new(
                vec![1, rows, cols],
                img.iter().map(|&b| f64::from(b) / 255.0).collect(),
            )
        })
        .collect()
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let dims = header(bytes, LABELS_MAGIC, 1)?;
    Ok(body(bytes, 8, dims[0])?.iter().map(|&b| b as usize).collect())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<Tensor>> {
    let path = path.as_ref();
    parse_idx_images(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    parse_idx_labels(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Encodes images as IDX3. Pixels are rounded to the nearest byte.
pub fn encode_idx_images(images: &[Tensor]) -> Result<Vec<u8>> {
    let (rows, cols) = match images.first().map(Tensor::shape) {
        Some([1, r, c]) | Some([r, c]) => (*r, *c),
        Some(other) => {
            return Err(Error::contract(format!("cannot write {other:?} as an IDX image")))
        }
        None => (0, 0),
    };
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for d in [images.len(), rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    for img in images {
        if img.len() != rows * cols {
            return Err(ParseError::DimensionMismatch("images differ in size".into()).into());
        }
        out.extend(img.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        out.push(u8::try_from(l).map_err(|_| Error::contract(format!("label {l} exceeds 255")))?);
    }
    Ok(out)
}

pub fn save_idx_dataset(
    dataset: &LabeledDataset,
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
) -> Result<()> {
    let (images, labels) = (images.as_ref(), labels.as_ref());
    fs::write(images, encode_idx_images(&dataset.images)?).map_err(|e| Error::io(images, e))?;
    fs::write(labels, encode_idx_labels(&dataset.labels)?).map_err(|e| Error::io(labels, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bytes_are_bad_magic() {
        let err = parse_idx_images(&[0, 0, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::Parse(ParseError::BadMagic { .. })));
        let err = parse_idx_labels(&[0, 0, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::Parse(ParseError::BadMagic { .. })));
    }

    #[test]
    fn handwritten_two_images() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        let pixels = [0u8, 51, 102, 255, 1, 2, 3, 254];
        bytes.extend_from_slice(&pixels);
        let images = parse_idx_images(&bytes).unwrap();
        assert_eq!(images.len(), 2);
        assert_eq!(images[0].shape(), &[1, 2, 2]);
        for (i, img) in images.iter().enumerate() {
            for (j, v) in img.data().iter().enumerate() {
                assert_eq!(*v, f64::from(pixels[i * 4 + j]) / 255.0);
            }
        }
    }

    #[test]
    fn short_and_long_files() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        bytes.extend_from_slice(&[0; 7]);
        assert!(matches!(
            parse_idx_images(&bytes).unwrap_err(),
            Error::Parse(ParseError::ShortRead { .. })
        ));
        bytes.extend_from_slice(&[0; 2]);
        assert!(matches!(
            parse_idx_images(&bytes).unwrap_err(),
            Error::Parse(ParseError::DimensionMismatch(_))
        ));
        assert!(matches!(
            parse_idx_labels(&[0, 0, 8, 1, 0, 0]).unwrap_err(),
            Error::Parse(ParseError::ShortRead { .. })
        ));
    }

    #[test]
    fn labels_round_trip() {
        let labels = vec![3, 1, 4, 1, 5, 9];
        let bytes = encode_idx_labels(&labels).unwrap();
        assert_eq!(&bytes[..4], &[0, 0, 8, 1]);
        assert_eq!(parse_idx_labels(&bytes).unwrap(), labels);
    }

    #[test]
    fn dataset_rejects_count_mismatch() {
        let img = Tensor::filled(vec![1, 2, 2], 0.0).unwrap();
        let err = LabeledDataset::new(vec![img], vec![0, 1], 2).unwrap_err();
        assert!(matches!(err, Error::Parse(ParseError::DimensionMismatch(_))));
    }
}
