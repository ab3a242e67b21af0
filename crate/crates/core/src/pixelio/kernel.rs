use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::round_half_away;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid fixed-point format: frac_bits={frac_bits}, total_bits={total_bits}")]
    InvalidFormat { frac_bits: u32, total_bits: u32 },
    #[error("kernel size must be odd and at least 1, got {0}")]
    InvalidSize(usize),
    #[error("kernel must be square: expected {expected} values, got {got}")]
    NotSquare { expected: usize, got: usize },
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("coefficient {value} does not fit in {total_bits} signed bits")]
    Overflow { value: f64, total_bits: u32 },
    #[error("coefficient at ({row}, {col}) quantizes to zero")]
    Underflow { row: usize, col: usize },
    #[error("not separable")]
    NotSeparable,
    #[error("separable factors must have equal odd length, got {col} and {row}")]
    FactorShape { col: usize, row: usize },
}

/// Signed fixed-point word layout for filter coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedFormat {
    frac_bits: u32,
    total_bits: u32,
}

impl Default for FixedFormat {
    fn default() -> Self {
        Self {
            frac_bits: 8,
            total_bits: 16,
        }
    }
}

impl FixedFormat {
    pub fn new(frac_bits: u32, total_bits: u32) -> Result<Self, KernelError> {
        if frac_bits >= total_bits || total_bits > 32 {
            return Err(KernelError::InvalidFormat {
                frac_bits,
                total_bits,
            });
        }
        Ok(Self {
            frac_bits,
            total_bits,
        })
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    /// Fixed-point representation of 1.0.
    pub fn one(&self) -> i64 {
        1i64 << self.frac_bits
    }

    pub fn max_value(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    pub fn min_value(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    pub fn contains(&self, value: i64) -> bool {
        (self.min_value()..=self.max_value()).contains(&value)
    }
}

/// A square, odd-sized kernel of quantized coefficients, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Kernel2D {
    size: usize,
    coeffs: Vec<i64>,
    format: FixedFormat,
    coeff_sum: i64,
}

impl Kernel2D {
    pub fn new(size: usize, coeffs: Vec<i64>, format: FixedFormat) -> Result<Self, KernelError> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(KernelError::InvalidSize(size));
        }
        if coeffs.len() != size * size {
            return Err(KernelError::NotSquare {
                expected: size * size,
                got: coeffs.len(),
            });
        }
        if let Some(&bad) = coeffs.iter().find(|&&c| !format.contains(c)) {
            return Err(KernelError::Overflow {
                value: bad as f64,
                total_bits: format.total_bits,
            });
        }
        let coeff_sum = coeffs.iter().sum();
        Ok(Self {
            size,
            coeffs,
            format,
            coeff_sum,
        })
    }

    /// The kernel whose only nonzero tap is a unit-gain centre.
    pub fn identity(size: usize, format: FixedFormat) -> Result<Self, KernelError> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(KernelError::InvalidSize(size));
        }
        let mut coeffs = vec![0; size * size];
        coeffs[(size / 2) * size + size / 2] = format.one();
        Self::new(size, coeffs, format)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Half-width of the window, `(size - 1) / 2`.
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn format(&self) -> FixedFormat {
        self.format
    }

    pub fn coeff_sum(&self) -> i64 {
        self.coeff_sum
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.coeffs[row * self.size + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.coeffs[row * self.size..(row + 1) * self.size]
    }

    /// True when the kernel is unchanged by both horizontal and vertical flips.
    pub fn is_mirror_symmetric(&self) -> bool {
        let n = self.size;
        (0..n).all(|r| {
            (0..n).all(|c| {
                let v = self.get(r, c);
                v == self.get(r, n - 1 - c) && v == self.get(n - 1 - r, c)
            })
        })
    }

    /// Distinct nonzero coefficient values in ascending order.
    pub fn distinct_nonzero(&self) -> Vec<i64> {
        let mut values: Vec<i64> = self.coeffs.iter().copied().filter(|&c| c != 0).collect();
        values.sort_unstable();
        values.dedup();
        values
    }

    /// Real-valued coefficients, `q / 2^frac_bits`.
    pub fn to_real(&self) -> Vec<f64> {
        let scale = self.format.one() as f64;
        self.coeffs.iter().map(|&c| c as f64 / scale).collect()
    }
}

/// A kernel written as the outer product `col * row`.
///
/// `format` is the fixed-point layout of the outer product, so the factors
/// themselves are plain integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeparableKernel {
    col: Vec<i64>,
    row: Vec<i64>,
    format: FixedFormat,
}

impl SeparableKernel {
    pub fn new(col: Vec<i64>, row: Vec<i64>, format: FixedFormat) -> Result<Self, KernelError> {
        if col.len() != row.len() || col.len().is_multiple_of(2) {
            return Err(KernelError::FactorShape {
                col: col.len(),
                row: row.len(),
            });
        }
        Ok(Self { col, row, format })
    }

    pub fn size(&self) -> usize {
        self.col.len()
    }

    pub fn col(&self) -> &[i64] {
        &self.col
    }

    pub fn row(&self) -> &[i64] {
        &self.row
    }

    pub fn format(&self) -> FixedFormat {
        self.format
    }

    pub fn coeff_sum(&self) -> i64 {
        self.col.iter().sum::<i64>() * self.row.iter().sum::<i64>()
    }

    pub fn outer(&self) -> Result<Kernel2D, KernelError> {
        let coeffs = self
            .col
            .iter()
            .flat_map(|&c| self.row.iter().map(move |&r| c * r))
            .collect();
        Kernel2D::new(self.size(), coeffs, self.format)
    }
}

/// Quantizes one real coefficient: `round_half_away(real * 2^frac_bits)`.
pub fn quantize_coefficient(real: f64, format: FixedFormat) -> Result<i64, KernelError> {
    let scaled = round_half_away(real * format.one() as f64);
    if !scaled.is_finite()
        || scaled > format.max_value() as f64
        || scaled < format.min_value() as f64
    {
        return Err(KernelError::Overflow {
            value: real,
            total_bits: format.total_bits,
        });
    }
    Ok(scaled as i64)
}

/// Quantizes a square matrix of real coefficients given as rows.
pub fn quantize_kernel(rows: &[Vec<f64>], format: FixedFormat) -> Result<Kernel2D, KernelError> {
    let size = rows.len();
    if size == 0 || size.is_multiple_of(2) {
        return Err(KernelError::InvalidSize(size));
    }
    let mut coeffs = Vec::with_capacity(size * size);
    for row in rows {
        if row.len() != size {
            return Err(KernelError::NotSquare {
                expected: size * size,
                got: rows.iter().map(Vec::len).sum(),
            });
        }
        for &v in row {
            coeffs.push(quantize_coefficient(v, format)?);
        }
    }
    Kernel2D::new(size, coeffs, format)
}

fn check_gaussian_args(size: usize, sigma: f64) -> Result<(), KernelError> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(KernelError::InvalidSize(size));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(KernelError::InvalidSigma(sigma));
    }
    Ok(())
}

/// Sampled 2-D Gaussian with its peak anchored at 1.0 (`2^frac_bits`).
///
/// Normalization by the coefficient sum happens at the pipeline output, so
/// the kernel keeps the full fractional precision of the format.
pub fn gaussian_kernel(
    size: usize,
    sigma: f64,
    format: FixedFormat,
) -> Result<Kernel2D, KernelError> {
    check_gaussian_args(size, sigma)?;
    let radius = (size / 2) as i64;
    let denom = 2.0 * sigma * sigma;
    let mut coeffs = Vec::with_capacity(size * size);
    for i in -radius..=radius {
        for j in -radius..=radius {
            let g = (-((i * i + j * j) as f64) / denom).exp();
            let q = quantize_coefficient(g, format)?;
            if q <= 0 {
                return Err(KernelError::Underflow {
                    row: (i + radius) as usize,
                    col: (j + radius) as usize,
                });
            }
            coeffs.push(q);
        }
    }
    Kernel2D::new(size, coeffs, format)
}

/// Separable Gaussian: both factors are the 1-D profile `exp(-i^2 / 2 sigma^2)`
/// quantized at `factor_format`.
///
/// Quantizing the 2-D samples directly almost never yields an exact integer
/// rank-1 matrix, so pipelines that need a separable Gaussian use this form.
/// The outer product carries `2 * frac_bits` fraction bits and
/// `min(2 * total_bits, 32)` total bits.
pub fn separable_gaussian(
    size: usize,
    sigma: f64,
    factor_format: FixedFormat,
) -> Result<SeparableKernel, KernelError> {
    check_gaussian_args(size, sigma)?;
    let product_format = FixedFormat::new(
        2 * factor_format.frac_bits,
        (2 * factor_format.total_bits).min(32),
    )?;
    let radius = (size / 2) as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps = Vec::with_capacity(size);
    for i in -radius..=radius {
        let q = quantize_coefficient((-((i * i) as f64) / denom).exp(), factor_format)?;
        if q <= 0 {
            return Err(KernelError::Underflow {
                row: (i + radius) as usize,
                col: (i + radius) as usize,
            });
        }
        taps.push(q);
    }
    let peak = taps[size / 2];
    if !product_format.contains(peak * peak) {
        return Err(KernelError::Overflow {
            value: (peak * peak) as f64,
            total_bits: product_format.total_bits,
        });
    }
    SeparableKernel::new(taps.clone(), taps, product_format)
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact integer rank-1 factorization of a kernel.
///
/// The column with the largest absolute sum (first on ties), divided by the
/// GCD of its entries and sign-normalized so its first nonzero entry is
/// positive, becomes `col`. `row` is solved by exact division against the
/// first nonzero entry of `col`; the outer product is then checked against
/// every coefficient.
pub fn decompose_separable(kernel: &Kernel2D) -> Result<SeparableKernel, KernelError> {
    let n = kernel.size();
    let column_abs_sum = |c: usize| (0..n).map(|r| kernel.get(r, c).abs()).sum::<i64>();
    let mut best = 0;
    for c in 1..n {
        if column_abs_sum(c) > column_abs_sum(best) {
            best = c;
        }
    }
    if column_abs_sum(best) == 0 {
        return Err(KernelError::NotSeparable);
    }

    let column: Vec<i64> = (0..n).map(|r| kernel.get(r, best)).collect();
    let g = column.iter().fold(0, |acc, &v| gcd(acc, v));
    let pivot = column
        .iter()
        .position(|&v| v != 0)
        .expect("nonzero column has a nonzero entry");
    let sign = column[pivot].signum();
    let col: Vec<i64> = column.iter().map(|&v| v / g * sign).collect();

    let mut row = Vec::with_capacity(n);
    for c in 0..n {
        let v = kernel.get(pivot, c);
        if v % col[pivot] != 0 {
            return Err(KernelError::NotSeparable);
        }
        row.push(v / col[pivot]);
    }

    for r in 0..n {
        for c in 0..n {
            if col[r] * row[c] != kernel.get(r, c) {
                return Err(KernelError::NotSeparable);
            }
        }
    }
    SeparableKernel::new(col, row, kernel.format())
}
