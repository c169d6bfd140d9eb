//! IDX binary files (the MNIST distribution format).
//!
//! ```text
//! images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | count*rows*cols u8
//! labels: u32 magic 0x00000801 | u32 count | count u8
//! ```
//! All integers are big-endian. Pixels are scaled to `[0, 1]` by dividing by
//! 255; each image is flattened row-major into one column.

use std::path::Path;

use ndarray::Array2;

use crate::dataset::Dataset;
use crate::error::{InaeError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn format_err(offset: usize, message: impl Into<String>) -> InaeError {
    InaeError::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err(bytes.len(), format!("truncated header while reading {what}")))
}

/// Parsed image file: `count` images of `rows × cols` bytes.
struct Images<'a> {
    count: usize,
    rows: usize,
    cols: usize,
    pixels: &'a [u8],
}

fn parse_images(bytes: &[u8]) -> Result<Images<'_>> {
    let magic = read_u32(bytes, 0, "magic")?;
    if magic != IMAGES_MAGIC {
        return Err(format_err(
            0,
            format!("bad image magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"),
        ));
    }
    let count = read_u32(bytes, 4, "image count")? as usize;
    let rows = read_u32(bytes, 8, "row count")? as usize;
    let cols = read_u32(bytes, 12, "column count")? as usize;
    let need = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| format_err(4, "image dimensions overflow"))?;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(format_err(
            bytes.len(),
            format!("truncated image data: need {need} bytes after header, found {}", body.len()),
        ));
    }
    Ok(Images {
        count,
        rows,
        cols,
        pixels: &body[..need],
    })
}

fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    let magic = read_u32(bytes, 0, "magic")?;
    if magic != LABELS_MAGIC {
        return Err(format_err(
            0,
            format!("bad label magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"),
        ));
    }
    let count = read_u32(bytes, 4, "label count")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(format_err(
            bytes.len(),
            format!("truncated label data: need {count} bytes after header, found {}", body.len()),
        ));
    }
    Ok(&body[..count])
}

/// Decodes an image/label byte pair into a labeled dataset.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let img = parse_images(images)?;
    let lab = parse_labels(labels)?;
    if lab.len() != img.count {
        return Err(format_err(
            4,
            format!(
                "count mismatch: {} images but {} labels",
                img.count,
                lab.len()
            ),
        ));
    }
    let dim = img.rows * img.cols;
    if dim == 0 {
        return Err(format_err(8, "zero-sized images"));
    }
    let mut samples = Array2::zeros((dim, img.count));
    for (i, chunk) in img.pixels.chunks_exact(dim).enumerate() {
        for (f, &p) in chunk.iter().enumerate() {
            samples[[f, i]] = f64::from(p) / 255.0;
        }
    }
    Dataset::new(samples, Some(lab.iter().map(|&l| l as usize).collect()))
}

pub fn load_idx(path_images: impl AsRef<Path>, path_labels: impl AsRef<Path>) -> Result<Dataset> {
    let images = std::fs::read(path_images)?;
    let labels = std::fs::read(path_labels)?;
    parse_idx(&images, &labels)
}

/// Encodes a labeled dataset with values in `[0, 1]` as IDX bytes. Images
/// are stored as `1 × D` unless `shape` gives `(rows, cols)`.
pub fn encode_idx(ds: &Dataset, shape: Option<(usize, usize)>) -> Result<(Vec<u8>, Vec<u8>)> {
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| InaeError::invalid("IDX export requires labels"))?;
    let (rows, cols) = shape.unwrap_or((1, ds.feature_dim()));
    if rows * cols != ds.feature_dim() {
        return Err(InaeError::shape(format!(
            "image shape {rows}×{cols} does not match feature dim {}",
            ds.feature_dim()
        )));
    }
    let mut img = Vec::with_capacity(16 + ds.samples.len());
    img.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    for col in ds.samples.columns() {
        for &v in col {
            if !(0.0..=1.0).contains(&v) {
                return Err(InaeError::invalid(format!("pixel value {v} outside [0, 1]")));
            }
            img.push((v * 255.0).round() as u8);
        }
    }
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        lab.push(u8::try_from(l).map_err(|_| InaeError::invalid(format!("label {l} exceeds 255")))?);
    }
    Ok((img, lab))
}

pub fn save_idx(
    ds: &Dataset,
    shape: Option<(usize, usize)>,
    path_images: impl AsRef<Path>,
    path_labels: impl AsRef<Path>,
) -> Result<()> {
    let (img, lab) = encode_idx(ds, shape)?;
    std::fs::write(path_images, img)?;
    std::fs::write(path_labels, lab)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        let mut v = magic.to_be_bytes().to_vec();
        for d in dims {
            v.extend_from_slice(&d.to_be_bytes());
        }
        v
    }

    #[test]
    fn parses_small_file() {
        let mut img = header(IMAGES_MAGIC, &[2, 2, 2]);
        img.extend_from_slice(&[0, 255, 51, 102, 1, 2, 3, 4]);
        let mut lab = header(LABELS_MAGIC, &[2]);
        lab.extend_from_slice(&[7, 3]);
        let ds = parse_idx(&img, &lab).unwrap();
        assert_eq!(ds.feature_dim(), 4);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples[[1, 0]], 1.0);
        assert_eq!(ds.samples[[2, 0]], 0.2);
        assert_eq!(ds.labels, Some(vec![7, 3]));
    }

    #[test]
    fn empty_file_is_format_error() {
        let lab = header(LABELS_MAGIC, &[0]);
        assert!(matches!(parse_idx(&[], &lab), Err(InaeError::Format { .. })));
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let img = header(0x0000_0802, &[0, 28, 28]);
        let lab = header(LABELS_MAGIC, &[0]);
        match parse_idx(&img, &lab) {
            Err(InaeError::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_images_are_rejected() {
        let mut img = header(IMAGES_MAGIC, &[3, 2, 2]);
        img.extend_from_slice(&[0; 11]);
        let mut lab = header(LABELS_MAGIC, &[3]);
        lab.extend_from_slice(&[0, 1, 2]);
        match parse_idx(&img, &lab) {
            Err(InaeError::Format { offset, .. }) => assert_eq!(offset, 27),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let mut img = header(IMAGES_MAGIC, &[10, 1, 1]);
        img.extend_from_slice(&[9; 10]);
        let mut lab = header(LABELS_MAGIC, &[9]);
        lab.extend_from_slice(&[1; 9]);
        let err = parse_idx(&img, &lab).unwrap_err();
        assert!(err.to_string().contains("count mismatch"), "{err}");
    }

    #[test]
    fn header_fields_drive_shape() {
        let mut img = header(IMAGES_MAGIC, &[3, 28, 28]);
        img.extend(std::iter::repeat_n(128u8, 3 * 784));
        let mut lab = header(LABELS_MAGIC, &[3]);
        lab.extend_from_slice(&[0, 5, 9]);
        let ds = parse_idx(&img, &lab).unwrap();
        assert_eq!((ds.feature_dim(), ds.len()), (784, 3));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = header(IMAGES_MAGIC, &[2, 1, 3]);
        img.extend_from_slice(&[0, 17, 255, 254, 1, 128]);
        let mut lab = header(LABELS_MAGIC, &[2]);
        lab.extend_from_slice(&[4, 2]);
        let ds = parse_idx(&img, &lab).unwrap();
        let (pi, pl) = (dir.path().join("i"), dir.path().join("l"));
        save_idx(&ds, Some((1, 3)), &pi, &pl).unwrap();
        assert_eq!(std::fs::read(&pi).unwrap(), img);
        assert_eq!(std::fs::read(&pl).unwrap(), lab);
        assert_eq!(load_idx(&pi, &pl).unwrap(), ds);
    }

    proptest! {
        #[test]
        fn load_after_save_is_bit_exact(
            pixels in proptest::collection::vec(any::<u8>(), 1..200),
            dim in 1usize..8,
        ) {
            let count = pixels.len() / dim;
            prop_assume!(count > 0);
            let mut img = header(IMAGES_MAGIC, &[count as u32, 1, dim as u32]);
            img.extend_from_slice(&pixels[..count * dim]);
            let mut lab = header(LABELS_MAGIC, &[count as u32]);
            lab.extend((0..count).map(|i| (i % 10) as u8));
            let ds = parse_idx(&img, &lab).unwrap();
            let (img2, lab2) = encode_idx(&ds, Some((1, dim))).unwrap();
            prop_assert_eq!(&img2, &img);
            prop_assert_eq!(&lab2, &lab);
            let back = parse_idx(&img2, &lab2).unwrap();
            prop_assert!(back.samples.iter().zip(ds.samples.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
