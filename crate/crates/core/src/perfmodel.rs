//! Frame-budget model, fps arithmetic and a design-space explorer.
//!
//! A frame of `M` pixels processed `N` times at `t_p` pixels per clock per
//! core costs `C = M * N / t_p + xi` cycles, where `xi` is the pipeline
//! latency, and takes `C / (n_core * f)` seconds.

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::archs::{operation_counts, ArchKind, CycleReport, OpCount};
use crate::pixelio::FixedFormat;

/// 30 frames per second.
pub const DEFAULT_BUDGET_S: f64 = 0.033;

/// Latency assumed for a 150x150 frame through a 5x5 kernel when nothing
/// was measured.
pub const REFERENCE_LATENCY_CYCLES: u64 = 350;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerfError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("throughput {0} pixels per clock is outside (0, 1]")]
    Throughput(Ratio<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerfParams {
    pub pixels_m: u64,
    pub iterations_n: u64,
    /// Pixels per clock per core.
    pub throughput_tp: Ratio<u64>,
    pub latency_xi: u64,
    pub clock_hz: f64,
    pub cores: u64,
}

impl PerfParams {
    /// One pass, one core.
    pub fn new(
        pixels_m: u64,
        throughput_tp: Ratio<u64>,
        latency_xi: u64,
        clock_hz: f64,
    ) -> Result<Self, PerfError> {
        let p = Self {
            pixels_m,
            iterations_n: 1,
            throughput_tp,
            latency_xi,
            clock_hz,
            cores: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PerfError> {
        if self.pixels_m == 0 {
            return Err(PerfError::NotPositive("pixel count"));
        }
        if self.iterations_n == 0 {
            return Err(PerfError::NotPositive("iteration count"));
        }
        if self.cores == 0 {
            return Err(PerfError::NotPositive("core count"));
        }
        // also rejects NaN
        if self.clock_hz.is_nan() || self.clock_hz <= 0.0 {
            return Err(PerfError::NotPositive("clock frequency"));
        }
        let tp = self.throughput_tp;
        if *tp.numer() == 0 || tp > Ratio::from_integer(1) {
            return Err(PerfError::Throughput(tp));
        }
        Ok(())
    }

    /// `C = M * N / t_p + xi`.
    pub fn total_cycles(&self) -> f64 {
        let tp = self.throughput_tp;
        (self.pixels_m * self.iterations_n) as f64 * *tp.denom() as f64 / *tp.numer() as f64
            + self.latency_xi as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerfReport {
    pub total_cycles_c: f64,
    pub frame_time_s: f64,
    pub fps: f64,
    pub budget_s: f64,
    pub meets_budget: bool,
}

impl PerfReport {
    fn from_cycles(total_cycles_c: f64, cores: u64, clock_hz: f64, budget_s: f64) -> Self {
        let frame_time_s = total_cycles_c / (cores as f64 * clock_hz);
        Self {
            total_cycles_c,
            frame_time_s,
            fps: 1.0 / frame_time_s,
            budget_s,
            meets_budget: frame_time_s <= budget_s,
        }
    }
}

/// Evaluates the frame-time model against `budget_s`.
///
/// `params` must satisfy [`PerfParams::validate`].
pub fn frame_time(params: &PerfParams, budget_s: f64) -> PerfReport {
    debug_assert!(params.validate().is_ok(), "{params:?}");
    PerfReport::from_cycles(
        params.total_cycles(),
        params.cores,
        params.clock_hz,
        budget_s,
    )
}

/// Frames per second for a `width x height` frame.
pub fn throughput_fps(
    clock_hz: f64,
    cycles_per_pixel: Ratio<u64>,
    width: usize,
    height: usize,
) -> f64 {
    let pixels_per_s =
        clock_hz * *cycles_per_pixel.denom() as f64 / *cycles_per_pixel.numer() as f64;
    pixels_per_s / (width * height) as f64
}

pub fn speedup(software_s: f64, hardware_s: f64) -> f64 {
    software_s / hardware_s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Derivation {
    Analytic,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub kind: ArchKind,
    pub op_count: OpCount,
    pub perf: PerfReport,
    pub derived_from: Derivation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constraints {
    pub budget_s: f64,
    pub max_multipliers: Option<u32>,
    pub width: usize,
    pub height: usize,
    pub clock_hz: f64,
}

impl Constraints {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            budget_s: DEFAULT_BUDGET_S,
            max_multipliers: None,
            width,
            height,
            clock_hz: 100e6,
        }
    }
}

/// Latency assumed by the analytic model: the reference figure for a 5x5
/// kernel on 150x150, otherwise line-buffer fill plus a bounded pipeline.
pub fn default_latency(size: usize, width: usize, height: usize) -> u64 {
    if (size, width, height) == (5, 150, 150) {
        REFERENCE_LATENCY_CYCLES
    } else {
        ((size - 1) * (width + 1) + 16) as u64
    }
}

/// Candidate built from the structure of `kind` alone.
pub fn analytic_candidate(
    kind: ArchKind,
    size: usize,
    format: FixedFormat,
    constraints: &Constraints,
) -> Candidate {
    let params = PerfParams {
        pixels_m: (constraints.width * constraints.height) as u64,
        iterations_n: 1,
        throughput_tp: Ratio::new(1, kind.nominal_cycles_per_pixel(size)),
        latency_xi: default_latency(size, constraints.width, constraints.height),
        clock_hz: constraints.clock_hz,
        cores: 1,
    };
    Candidate {
        kind,
        op_count: operation_counts(kind, size, constraints.width, format),
        perf: frame_time(&params, constraints.budget_s),
        derived_from: Derivation::Analytic,
    }
}

/// Candidate whose cycle count is the simulator's.
pub fn measured_candidate(
    kind: ArchKind,
    op_count: OpCount,
    report: &CycleReport,
    clock_hz: f64,
    budget_s: f64,
) -> Candidate {
    Candidate {
        kind,
        op_count,
        perf: PerfReport::from_cycles(report.total_cycles as f64, 1, clock_hz, budget_s),
        derived_from: Derivation::Measured,
    }
}

/// Model parameters recovered from a simulation: `t_p` is the inverse of the
/// steady-state cycles per pixel and `xi` the measured latency.
pub fn params_from_report(report: &CycleReport, clock_hz: f64) -> PerfParams {
    PerfParams {
        pixels_m: report.pixels,
        iterations_n: 1,
        throughput_tp: report.cycles_per_pixel_steady.recip(),
        latency_xi: report.latency_cycles,
        clock_hz,
        cores: 1,
    }
}

/// Keeps the candidates within the frame budget and multiplier cap, fewest
/// multipliers first, then fastest, then in architecture order.
pub fn explore(candidates: &[Candidate], constraints: &Constraints) -> Vec<Candidate> {
    let mut kept: Vec<Candidate> = candidates
        .iter()
        .filter(|c| c.perf.frame_time_s <= constraints.budget_s)
        .filter(|c| {
            constraints
                .max_multipliers
                .is_none_or(|cap| c.op_count.multipliers <= cap)
        })
        .cloned()
        .collect();
    kept.sort_by(|a, b| {
        a.op_count
            .multipliers
            .cmp(&b.op_count.multipliers)
            .then(a.perf.frame_time_s.total_cmp(&b.perf.frame_time_s))
            .then(a.kind.cmp(&b.kind))
    });
    kept
}
