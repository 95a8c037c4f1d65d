use std::path::Path;

use mlrm_core::signal::ImageFrame;

use super::{FormatError, IoError};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, FormatError> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::at(start, format!("expected {what}")))
    }
}

/// Parses a binary (P5) PGM with maxval 255.
pub fn decode_pgm(bytes: &[u8], timestamp: f64) -> Result<ImageFrame, FormatError> {
    if !bytes.starts_with(b"P5") {
        return Err(FormatError::at(0, "missing P5 magic"));
    }
    let mut c = Cursor { bytes, pos: 2 };
    let width = c.number("width")?;
    let height = c.number("height")?;
    c.skip_space();
    let maxval_at = c.pos;
    let maxval = c.number("maxval")?;
    if maxval != 255 {
        return Err(FormatError::at(maxval_at, format!("maxval {maxval} unsupported, need 255")));
    }
    if !bytes.get(c.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(FormatError::at(c.pos, "expected whitespace after header"));
    }
    let data = c.pos + 1;
    let need = width * height;
    if bytes.len() < data + need {
        return Err(FormatError::at(
            bytes.len(),
            format!("pixel data truncated: need {need} bytes"),
        ));
    }
    ImageFrame::new(width, height, bytes[data..data + need].to_vec(), timestamp)
        .map_err(|e| FormatError::at(data, e.to_string()))
}

pub fn encode_pgm(img: &ImageFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn read_pgm(path: &Path, timestamp: f64) -> Result<ImageFrame, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    Ok(decode_pgm(&bytes, timestamp).map_err(|e| e.with_path(path))?)
}

pub fn write_pgm(path: &Path, img: &ImageFrame) -> Result<(), IoError> {
    std::fs::write(path, encode_pgm(img)).map_err(|e| IoError::io(path, e))
}
