use std::fmt;

use serde::{Serialize, Serializer};

use super::{Image, ImageError};

/// Peak signal-to-noise ratio in decibels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    /// The images are identical.
    Infinite,
}

impl Psnr {
    pub fn db(&self) -> f64 {
        match self {
            Psnr::Finite(v) => *v,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.1}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(v) => s.serialize_f64(*v),
            Psnr::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `10 log10(255^2 / MSE)`.
pub fn psnr(a: &Image, b: &Image) -> Result<Psnr, ImageError> {
    a.check_same_dims(b)?;
    let sse: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(Psnr::Infinite);
    }
    let mse = sse as f64 / a.len() as f64;
    Ok(Psnr::Finite(10.0 * (255.0f64 * 255.0 / mse).log10()))
}
