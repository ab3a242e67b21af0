//! Kernel selection from the command line and the kernel text format.
//!
//! A kernel file holds the size on its first line followed by `size` lines of
//! `size` whitespace-separated real coefficients. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use convsim_core::archs::KernelInput;
use convsim_core::{quantize_kernel, separable_gaussian, FixedFormat};

use crate::args::KernelArgs;
use crate::CliError;

/// What the report records about the kernel in use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSummary {
    pub source: String,
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub frac_bits: u32,
    pub total_bits: u32,
    pub coeff_sum: i64,
    pub coefficients: Vec<i64>,
}

/// Parses the kernel text format into rows of reals.
pub fn parse_kernel_text(text: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or("empty kernel file")?;
    let size: usize = header
        .parse()
        .map_err(|_| format!("first line must be the kernel size, found '{header}'"))?;
    if size == 0 || size.is_multiple_of(2) {
        return Err(format!(
            "kernel size must be odd and positive, found {size}"
        ));
    }
    let mut rows = Vec::with_capacity(size);
    for (i, line) in lines.enumerate() {
        if i >= size {
            return Err(format!("more than {size} coefficient rows"));
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| format!("row {}: bad coefficient '{t}'", i + 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != size {
            return Err(format!(
                "row {} has {} coefficients, expected {size}",
                i + 1,
                row.len()
            ));
        }
        rows.push(row);
    }
    if rows.len() != size {
        return Err(format!(
            "expected {size} coefficient rows, found {}",
            rows.len()
        ));
    }
    Ok(rows)
}

pub fn format_kernel_text(rows: &[Vec<f64>]) -> String {
    let mut out = format!("{}\n", rows.len());
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

/// Real 2-D Gaussian samples with the centre at 1.0.
pub fn gaussian_rows(size: usize, sigma: f64) -> Vec<Vec<f64>> {
    let r = (size / 2) as i64;
    (-r..=r)
        .map(|i| {
            (-r..=r)
                .map(|j| (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp())
                .collect()
        })
        .collect()
}

fn parse_gaussian(values: &[String]) -> Result<(usize, f64), CliError> {
    let size = values[0].parse::<usize>().map_err(|_| {
        CliError::Usage(format!(
            "--gaussian size must be an integer, found '{}'",
            values[0]
        ))
    })?;
    let sigma = values[1].parse::<f64>().map_err(|_| {
        CliError::Usage(format!(
            "--gaussian sigma must be a number, found '{}'",
            values[1]
        ))
    })?;
    Ok((size, sigma))
}

/// Builds the kernel selected by `args` and returns it with its summary and,
/// for file kernels, the file contents for hashing.
pub fn load(args: &KernelArgs) -> Result<(KernelInput, KernelSummary, Option<Vec<u8>>), CliError> {
    let format = FixedFormat::new(args.frac_bits, args.total_bits)?;
    if let Some(values) = &args.gaussian {
        let (size, sigma) = parse_gaussian(values)?;
        let sep = separable_gaussian(size, sigma, format)?;
        let dense = sep.outer()?;
        let summary = KernelSummary {
            source: "gaussian".into(),
            size,
            sigma: Some(sigma),
            frac_bits: sep.format().frac_bits(),
            total_bits: sep.format().total_bits(),
            coeff_sum: sep.coeff_sum(),
            coefficients: dense.coeffs().to_vec(),
        };
        return Ok((sep.into(), summary, None));
    }
    let path = args
        .kernel
        .as_deref()
        .ok_or_else(|| CliError::Usage("one of --gaussian or --kernel is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let kernel = kernel_from_bytes(path, &bytes, format)?;
    let summary = KernelSummary {
        source: "file".into(),
        size: kernel.size(),
        sigma: None,
        frac_bits: format.frac_bits(),
        total_bits: format.total_bits(),
        coeff_sum: kernel.coeff_sum(),
        coefficients: kernel.coeffs().to_vec(),
    };
    Ok((kernel.into(), summary, Some(bytes)))
}

fn kernel_from_bytes(
    path: &Path,
    bytes: &[u8],
    format: FixedFormat,
) -> Result<convsim_core::Kernel2D, CliError> {
    let bad = |reason: String| CliError::KernelFile {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::str::from_utf8(bytes).map_err(|_| bad("not UTF-8 text".into()))?;
    let rows = parse_kernel_text(text).map_err(bad)?;
    Ok(quantize_kernel(&rows, format)?)
}
