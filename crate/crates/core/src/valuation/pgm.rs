//! Portable graymap ingestion (plain `P2` and raw `P5`).

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::valuation::GrayImage;

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    read_pgm_bytes(&bytes).map_err(|e| match e {
        Error::Image { message, .. } => Error::Image {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Decodes a PGM image and scales samples to `[0, 1]` by the full range of
/// the sample depth (1/255 for 8-bit files).
pub fn read_pgm_bytes(bytes: &[u8]) -> Result<GrayImage> {
    let fail = |message: String| Error::Image {
        path: "<memory>".into(),
        message,
    };
    if !(bytes.starts_with(b"P2") || bytes.starts_with(b"P5")) {
        return Err(fail("not a grayscale PGM (expected P2 or P5 magic)".into()));
    }
    let decoded = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Pnm)
        .decode()
        .map_err(|e| fail(e.to_string()))?;
    let (cols, rows) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(buf) => GrayImage::from_u8(rows, cols, buf.as_raw()),
        DynamicImage::ImageLuma16(buf) => GrayImage::new(
            rows,
            cols,
            buf.as_raw().iter().map(|&s| s as f64 / 65535.0).collect(),
        ),
        other => Err(fail(format!(
            "unsupported pixel layout {:?}",
            other.color()
        ))),
    }
}
