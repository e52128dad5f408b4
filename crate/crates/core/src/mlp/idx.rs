//! Big-endian IDX image/label containers.

use std::path::Path;

use super::{DataError, Dataset, Targets};
use crate::Scalar;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, DataError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(DataError::Truncated { expected: offset + 4, found: bytes.len() })
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

/// Loads an image file and its label file; pixels are scaled to `[0, 1]`.
pub fn load_idx<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset<T>, DataError> {
    let images = read_file(images_path.as_ref())?;
    let labels = read_file(labels_path.as_ref())?;
    let mut data = parse_idx(&images, &labels)?;
    data.name = images_path.as_ref().display().to_string();
    Ok(data)
}

pub fn parse_idx<T: Scalar>(images: &[u8], labels: &[u8]) -> Result<Dataset<T>, DataError> {
    let magic = read_u32(images, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(DataError::BadMagic { expected: IMAGE_MAGIC, found: magic });
    }
    let count = read_u32(images, 4)? as usize;
    let rows = read_u32(images, 8)? as usize;
    let cols = read_u32(images, 12)? as usize;
    let pixels = rows * cols;
    let expected = 16 + count * pixels;
    if images.len() < expected {
        return Err(DataError::Truncated { expected, found: images.len() });
    }

    let magic = read_u32(labels, 0)?;
    if magic != LABEL_MAGIC {
        return Err(DataError::BadMagic { expected: LABEL_MAGIC, found: magic });
    }
    let label_count = read_u32(labels, 4)? as usize;
    if label_count != count {
        return Err(DataError::CountMismatch { images: count, labels: label_count });
    }
    if labels.len() < 8 + count {
        return Err(DataError::Truncated { expected: 8 + count, found: labels.len() });
    }
    if count == 0 {
        return Err(DataError::Empty);
    }

    let full = T::lit(255.0);
    let inputs = images[16..expected]
        .chunks_exact(pixels)
        .map(|px| px.iter().map(|&b| T::lit(b as f64) / full).collect())
        .collect();
    let labels: Vec<usize> = labels[8..8 + count].iter().map(|&b| b as usize).collect();
    let classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new("idx", inputs, Targets::Labels { labels, classes })?.with_image_shape(rows, cols)
}

/// Encodes raw 8-bit images in the IDX image layout.
pub fn write_idx_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for v in [images.len(), rows, cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    for img in images {
        assert_eq!(img.len(), rows * cols, "image size");
        out.extend_from_slice(img);
    }
    out
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_images() -> (Vec<u8>, Vec<u8>) {
        let a: Vec<u8> = (0..9).map(|i| i * 30).collect();
        let b: Vec<u8> = (0..9).map(|i| 255 - i * 7).collect();
        (write_idx_images(3, 3, &[a, b]), write_idx_labels(&[4, 1]))
    }

    #[test]
    fn round_trip_through_files() {
        let (img, lab) = two_images();
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("images.idx3");
        let lp = dir.path().join("labels.idx1");
        std::fs::write(&ip, &img).unwrap();
        std::fs::write(&lp, &lab).unwrap();
        let d: Dataset<f64> = load_idx(&ip, &lp).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.image_shape(), Some((3, 3)));
        for (k, px) in d.inputs()[0].iter().enumerate() {
            assert_eq!(*px, (k as f64 * 30.0) / 255.0);
        }
        assert_eq!(d.inputs()[1][8], (255.0 - 56.0) / 255.0);
        assert_eq!(d.targets(), &Targets::Labels { labels: vec![4, 1], classes: 5 });
    }

    #[test]
    fn bad_magic() {
        let (mut img, lab) = two_images();
        img[..4].copy_from_slice(&0u32.to_be_bytes());
        let err = parse_idx::<f64>(&img, &lab).unwrap_err();
        assert!(matches!(err, DataError::BadMagic { found: 0, expected: IMAGE_MAGIC }));
    }

    #[test]
    fn count_mismatch() {
        let images: Vec<Vec<u8>> = (0..5).map(|_| vec![0; 4]).collect();
        let err = parse_idx::<f64>(&write_idx_images(2, 2, &images), &write_idx_labels(&[0; 4]))
            .unwrap_err();
        assert!(matches!(err, DataError::CountMismatch { images: 5, labels: 4 }));
    }

    #[test]
    fn truncated_payload() {
        let (img, lab) = two_images();
        let err = parse_idx::<f64>(&img[..20], &lab).unwrap_err();
        assert!(matches!(err, DataError::Truncated { .. }));
        let err = parse_idx::<f64>(&img, &lab[..9]).unwrap_err();
        assert!(matches!(err, DataError::Truncated { .. }));
    }

    #[test]
    fn missing_file() {
        let err = load_idx::<f64>("/nonexistent/a", "/nonexistent/b").unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }
}
