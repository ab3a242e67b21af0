//! Golden software convolution.
//!
//! The window is applied as a correlation (no kernel flip) with zero padding
//! outside the image, so the output has the input's dimensions. Every
//! simulated pipeline must reproduce these functions bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pixelio::{div_round_half_away, Image, Kernel2D, SeparableKernel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvError {
    #[error("kernel size {kernel} exceeds image dimensions {width}x{height}")]
    KernelTooLarge {
        kernel: usize,
        width: usize,
        height: usize,
    },
}

/// Running window sum of pixel x coefficient products.
///
/// 64 bits hold any 8-bit image filtered by 32-bit coefficients up to 15x15,
/// and the exact, unrounded separable intermediates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Accumulator(pub i64);

/// Order of the two 1-D passes of a separable convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassOrder {
    /// Vertical (column factor) pass first.
    ColFirst,
    /// Horizontal (row factor) pass first.
    RowFirst,
}

/// Scales an accumulated window sum back to an 8-bit pixel.
///
/// With a nonzero `coeff_sum` this is `acc / coeff_sum` rounded half away
/// from zero; zero-sum kernels (edge detectors) take `|acc| / 2^frac_bits`
/// instead. The result saturates to [0, 255].
pub fn normalize_and_clamp(acc: Accumulator, coeff_sum: i64, frac_bits: u32) -> u8 {
    let value = if coeff_sum != 0 {
        div_round_half_away(acc.0, coeff_sum)
    } else {
        div_round_half_away(acc.0.abs(), 1i64 << frac_bits)
    };
    value.clamp(0, 255) as u8
}

fn check_fits(image: &Image, size: usize) -> Result<(), ConvError> {
    if size > image.width() || size > image.height() {
        return Err(ConvError::KernelTooLarge {
            kernel: size,
            width: image.width(),
            height: image.height(),
        });
    }
    Ok(())
}

pub fn convolve_direct(image: &Image, kernel: &Kernel2D) -> Result<Image, ConvError> {
    let n = kernel.size();
    check_fits(image, n)?;
    let radius = kernel.radius() as isize;
    let frac_bits = kernel.format().frac_bits();
    let out = Image::from_fn(image.width(), image.height(), |r, c| {
        let mut acc = 0i64;
        for i in 0..n {
            for j in 0..n {
                let y = r as isize + i as isize - radius;
                let x = c as isize + j as isize - radius;
                acc += i64::from(image.get_padded(y, x)) * kernel.get(i, j);
            }
        }
        normalize_and_clamp(Accumulator(acc), kernel.coeff_sum(), frac_bits)
    })
    .expect("output has input dimensions");
    Ok(out)
}

/// Two 1-D passes with exact intermediates and a single final rounding.
///
/// Both orders compute the same integer window sum, so they agree with each
/// other and with [`convolve_direct`] on the outer-product kernel.
pub fn convolve_separable(
    image: &Image,
    sep: &SeparableKernel,
    order: PassOrder,
) -> Result<Image, ConvError> {
    let n = sep.size();
    check_fits(image, n)?;
    let (w, h) = (image.width(), image.height());
    let radius = (n / 2) as isize;

    // one 1-D pass over a wide-precision plane with zero padding
    let pass = |src: &[i64], taps: &[i64], vertical: bool| -> Vec<i64> {
        let mut dst = vec![0i64; w * h];
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0i64;
                for (k, &t) in taps.iter().enumerate() {
                    let off = k as isize - radius;
                    let (y, x) = if vertical {
                        (r as isize + off, c as isize)
                    } else {
                        (r as isize, c as isize + off)
                    };
                    if y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w {
                        acc += src[y as usize * w + x as usize] * t;
                    }
                }
                dst[r * w + c] = acc;
            }
        }
        dst
    };

    let plane: Vec<i64> = image.pixels().iter().map(|&p| i64::from(p)).collect();
    let sums = match order {
        PassOrder::ColFirst => pass(&pass(&plane, sep.col(), true), sep.row(), false),
        PassOrder::RowFirst => pass(&pass(&plane, sep.row(), false), sep.col(), true),
    };
    let coeff_sum = sep.coeff_sum();
    let frac_bits = sep.format().frac_bits();
    let pixels = sums
        .into_iter()
        .map(|s| normalize_and_clamp(Accumulator(s), coeff_sum, frac_bits))
        .collect();
    Ok(Image::new(w, h, pixels).expect("output has input dimensions"))
}
