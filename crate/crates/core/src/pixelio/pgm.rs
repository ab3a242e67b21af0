//! PGM (P2 ASCII / P5 binary) with maxval 255.

use std::fmt::Write as _;

use thiserror::Error;

use super::Image;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgmError {
    #[error("byte {offset}: bad magic number, expected P2 or P5")]
    BadMagic { offset: usize },
    #[error("byte {offset}: malformed header ({reason})")]
    MalformedHeader { offset: usize, reason: &'static str },
    #[error("byte {offset}: unsupported maxval {maxval}, only 255 is accepted")]
    UnsupportedMaxval { offset: usize, maxval: u64 },
    #[error("byte {offset}: truncated payload, expected {expected} samples, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("byte {offset}: sample is not an integer in [0, 255]")]
    BadSample { offset: usize },
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Reads an unsigned decimal token; `None` if no digit is present.
    fn read_number(&mut self) -> Option<(u64, usize)> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value
                .saturating_mul(10)
                .saturating_add(u64::from(self.bytes[self.pos] - b'0'));
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        Some((value, start))
    }
}

pub fn load_pgm(bytes: &[u8]) -> Result<Image, PgmError> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(PgmError::BadMagic { offset: 0 }),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !matches!(bytes.get(2), Some(b) if b.is_ascii_whitespace() || *b == b'#') {
        return Err(PgmError::MalformedHeader {
            offset: 2,
            reason: "missing separator after magic",
        });
    }

    let mut header_field = |reason| {
        cur.skip_whitespace_and_comments();
        let offset = cur.pos;
        cur.read_number()
            .ok_or(PgmError::MalformedHeader { offset, reason })
    };
    let (width, w_at) = header_field("missing width")?;
    let (height, h_at) = header_field("missing height")?;
    let (maxval, m_at) = header_field("missing maxval")?;
    if width == 0 || width > u32::MAX as u64 {
        return Err(PgmError::MalformedHeader {
            offset: w_at,
            reason: "width out of range",
        });
    }
    if height == 0 || height > u32::MAX as u64 {
        return Err(PgmError::MalformedHeader {
            offset: h_at,
            reason: "height out of range",
        });
    }
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval {
            offset: m_at,
            maxval,
        });
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width * height;

    let pixels = if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => {
                return Err(PgmError::MalformedHeader {
                    offset: cur.pos,
                    reason: "missing separator before raster",
                })
            }
        }
        let raster = &bytes[cur.pos..];
        if raster.len() < expected {
            return Err(PgmError::Truncated {
                offset: bytes.len(),
                expected,
                found: raster.len(),
            });
        }
        raster[..expected].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(expected);
        while pixels.len() < expected {
            cur.skip_whitespace_and_comments();
            if cur.pos >= bytes.len() {
                return Err(PgmError::Truncated {
                    offset: bytes.len(),
                    expected,
                    found: pixels.len(),
                });
            }
            let offset = cur.pos;
            match cur.read_number() {
                Some((v, _)) if v <= 255 => pixels.push(v as u8),
                _ => return Err(PgmError::BadSample { offset }),
            }
        }
        pixels
    };

    Ok(Image::new(width, height, pixels).expect("header dimensions validated"))
}

/// Serializes as P5 when `binary`, otherwise as P2 with one image row per
/// line (wrapped at 70 columns).
pub fn save_pgm(image: &Image, binary: bool) -> Vec<u8> {
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    if binary {
        out.extend_from_slice(image.pixels());
        return out;
    }
    let mut text = String::new();
    for row in image.pixels().chunks(image.width()) {
        let mut line_len = 0;
        for (i, v) in row.iter().enumerate() {
            let token = v.to_string();
            if i > 0 {
                if line_len + 1 + token.len() > 70 {
                    text.push('\n');
                    line_len = 0;
                } else {
                    text.push(' ');
                    line_len += 1;
                }
            }
            let _ = write!(text, "{token}");
            line_len += token.len();
        }
        text.push('\n');
    }
    out.extend_from_slice(text.as_bytes());
    out
}
