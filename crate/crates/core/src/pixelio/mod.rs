//! Images, fixed-point kernels, PGM I/O, noise injection and fidelity metrics.

mod kernel;
mod metrics;
mod noise;
mod pgm;

pub use kernel::{
    decompose_separable, gaussian_kernel, quantize_coefficient, quantize_kernel,
    separable_gaussian, FixedFormat, Kernel2D, KernelError, SeparableKernel,
};
pub use metrics::{psnr, Psnr};
pub use noise::{add_gaussian_noise, SplitMix64};
pub use pgm::{load_pgm, save_pgm, PgmError};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("pixel buffer holds {got} values, expected {expected}")]
    BufferLength { expected: usize, got: usize },
    #[error("dimension mismatch: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },
}

/// An 8-bit grayscale image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(ImageError::BufferLength {
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A `width` x `height` image with every pixel set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Returns the pixel at a signed coordinate, or 0 outside the image.
    #[inline]
    pub fn get_padded(&self, row: isize, col: isize) -> u8 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            0
        } else {
            self.get(row as usize, col as usize)
        }
    }

    /// First coordinate `(row, col)` where the two images differ.
    pub fn first_difference(&self, other: &Image) -> Result<Option<(usize, usize)>, ImageError> {
        self.check_same_dims(other)?;
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .position(|(a, b)| a != b)
            .map(|i| (i / self.width, i % self.width)))
    }

    pub(crate) fn check_same_dims(&self, other: &Image) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::DimensionMismatch {
                a_width: self.width,
                a_height: self.height,
                b_width: other.width,
                b_height: other.height,
            });
        }
        Ok(())
    }
}

/// Checkerboard with `tile`-sized squares; the top-left tile is white.
///
/// # Panics
///
/// Panics if `tile` is zero or either dimension is zero.
pub fn checkerboard(width: usize, height: usize, tile: usize) -> Image {
    assert!(tile >= 1, "checkerboard tile must be at least 1");
    Image::from_fn(width, height, |r, c| {
        if (r / tile + c / tile).is_multiple_of(2) {
            255
        } else {
            0
        }
    })
    .expect("checkerboard dimensions must be positive")
}

/// Diagonal ramp from 0 at the top-left corner to 255 at the bottom-right.
///
/// # Panics
///
/// Panics if either dimension is zero.
pub fn gradient(width: usize, height: usize) -> Image {
    let span = (width + height).saturating_sub(2).max(1) as i64;
    Image::from_fn(width, height, |r, c| {
        div_round_half_away(255 * (r + c) as i64, span) as u8
    })
    .expect("gradient dimensions must be positive")
}

/// Rounds to the nearest integer, ties away from zero.
#[inline]
pub(crate) fn round_half_away(x: f64) -> f64 {
    x.round()
}

/// Integer quotient `num / den` rounded to nearest, ties away from zero.
#[inline]
pub fn div_round_half_away(num: i64, den: i64) -> i64 {
    debug_assert!(den != 0);
    let negative = (num < 0) != (den < 0);
    let (n, d) = (num.unsigned_abs() as u128, den.unsigned_abs() as u128);
    let q = ((2 * n + d) / (2 * d)) as i64;
    if negative {
        -q
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_bad_buffers() {
        assert_eq!(
            Image::new(2, 2, vec![0; 3]),
            Err(ImageError::BufferLength {
                expected: 4,
                got: 3
            })
        );
        assert!(matches!(
            Image::new(0, 3, vec![]),
            Err(ImageError::EmptyImage { .. })
        ));
    }

    #[test]
    fn gradient_corners() {
        let g = gradient(150, 150);
        assert_eq!((g.get(0, 0), g.get(149, 149)), (0, 255));
        assert_eq!(g.get(0, 149), g.get(149, 0));
        assert_eq!(gradient(1, 1).pixels(), &[0]);
    }

    #[test]
    fn checkerboard_small() {
        assert_eq!(checkerboard(2, 2, 1).pixels(), &[255, 0, 0, 255]);
    }

    #[test]
    fn checkerboard_150_tiles() {
        let img = checkerboard(150, 150, 15);
        assert_eq!(img.get(0, 0), 255);
        assert_eq!(img.get(14, 14), 255);
        assert_eq!(img.get(0, 15), 0);
        assert_eq!(img.get(15, 0), 0);
        assert_eq!(img.get(149, 149), 255);
        // 10 tiles across
        let transitions = (1..150)
            .filter(|&c| img.get(0, c) != img.get(0, c - 1))
            .count();
        assert_eq!(transitions, 9);
        assert!(img.pixels().iter().all(|&p| p == 0 || p == 255));
    }

    #[test]
    fn rounding_division() {
        assert_eq!(div_round_half_away(900, 9), 100);
        assert_eq!(div_round_half_away(400, 9), 44);
        assert_eq!(div_round_half_away(5, 2), 3);
        assert_eq!(div_round_half_away(-5, 2), -3);
        assert_eq!(div_round_half_away(5, -2), -3);
        assert_eq!(div_round_half_away(7, 4), 2);
        assert_eq!(div_round_half_away(-7, 4), -2);
    }
}
