//! Binary PGM (`P5`) reader and writer.
//!
//! The writer always emits the canonical form `P5\n{w} {h}\n255\n` followed by
//! the raw raster, so two images are equal iff their encodings are equal.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::GrayImage;
use crate::error::Result;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a binary PGM: bad magic {0:?}")]
    BadMagic(Vec<u8>),
    #[error("maxval {0} exceeds 255")]
    MaxvalTooLarge(u32),
    #[error("zero image dimension {0}x{1}")]
    ZeroDimension(usize, usize),
    #[error("truncated raster: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("malformed header: {0}")]
    BadHeader(&'static str),
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<u64, PgmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::BadHeader(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PgmError::BadHeader(what))
    }
}

/// Decode a binary PGM byte stream.
pub fn decode(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::BadMagic(bytes.iter().take(2).copied().collect()));
    }
    let mut hdr = Header { bytes, pos: 2 };
    match hdr.bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => return Err(PgmError::BadMagic(bytes.iter().take(3).copied().collect())),
    }
    let width = hdr.number("width")? as usize;
    let height = hdr.number("height")? as usize;
    let maxval = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::ZeroDimension(width, height));
    }
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge(maxval.min(u32::MAX as u64) as u32));
    }
    if maxval == 0 {
        return Err(PgmError::BadHeader("maxval"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(hdr.pos) {
        Some(b) if b.is_ascii_whitespace() => hdr.pos += 1,
        _ => return Err(PgmError::BadHeader("missing separator before raster")),
    }
    let expected = width
        .checked_mul(height)
        .ok_or(PgmError::BadHeader("dimensions overflow"))?;
    let raster = &bytes[hdr.pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            actual: raster.len(),
        });
    }
    Ok(GrayImage::new(width, height, raster[..expected].to_vec()).expect("dimensions validated above"))
}

/// Encode in canonical form.
pub fn encode(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.as_raw().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.as_raw());
    out
}

pub fn load(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| crate::Error::from(e).in_file(path))?;
    decode(&bytes).map_err(|e| crate::Error::from(e).in_file(path))
}

pub fn save(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), &encode(img))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_two_by_two() {
        let mut b = b"P5\n2 2\n255\n".to_vec();
        b.extend_from_slice(&[0, 128, 255, 7]);
        let img = decode(&b).unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.as_raw(), &[0, 128, 255, 7]);
        assert_eq!(img.get(1, 1), 7);
    }

    #[test]
    fn encodes_single_pixel() {
        let img = GrayImage::new(1, 1, vec![42]).unwrap();
        assert_eq!(encode(&img), b"P5\n1 1\n255\n\x2a".to_vec());
    }

    #[test]
    fn header_comments_and_spacing() {
        let mut b = b"P5 # comment\n# another\n 3\t1 # trailing\n200\n".to_vec();
        b.extend_from_slice(&[1, 2, 3]);
        let img = decode(&b).unwrap();
        assert_eq!(img.as_raw(), &[1, 2, 3]);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(decode(b"P6\n1 1\n255\n\0"), Err(PgmError::BadMagic(_))));
        assert!(matches!(decode(b"P2\n1 1\n255\n0"), Err(PgmError::BadMagic(_))));
        assert_eq!(decode(b"P5\n1 1\n65535\n\0\0"), Err(PgmError::MaxvalTooLarge(65535)));
        assert_eq!(
            decode(b"P5\n2 2\n255\n\0\0\0"),
            Err(PgmError::Truncated { expected: 4, actual: 3 })
        );
        assert_eq!(decode(b"P5\n0 2\n255\n"), Err(PgmError::ZeroDimension(0, 2)));
        assert!(matches!(decode(b"P5\nx 2\n255\n"), Err(PgmError::BadHeader(_))));
    }

    fn arb_image() -> impl Strategy<Value = GrayImage> {
        (1usize..40, 1usize..40).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h).prop_map(move |px| GrayImage::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn round_trip_is_bit_exact(img in arb_image()) {
            let bytes = encode(&img);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(&back, &img);
            prop_assert_eq!(encode(&back), bytes);
        }

        #[test]
        fn equal_iff_encodings_equal(a in arb_image(), b in arb_image()) {
            prop_assert_eq!(a == b, encode(&a) == encode(&b));
        }
    }
}
