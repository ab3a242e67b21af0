//! Streaming convolution architectures assembled from [`crate::clocksim`]
//! elements.
//!
//! Every architecture takes one pixel per data slot in raster order and
//! produces the zero-padded, same-size convolution. Borders are handled by
//! masking window taps that fall outside the frame, so no padding samples are
//! streamed and a frame costs `pixels * cycles_per_pixel + latency` cycles.

mod fully_parallel;
mod mac_fir;
mod opcount;
mod separable;
mod symmetry;
mod window;

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocksim::{Circuit, SimError, Simulator, TraceRecorder, Word};
use crate::pixelio::{
    decompose_separable, FixedFormat, Image, Kernel2D, KernelError, SeparableKernel,
};
use crate::refconv::PassOrder;

pub use opcount::{operation_counts, AdderGroup, LineBufferSpec, OpCount};
pub use symmetry::MAX_SYMMETRY_CLASSES;
pub(crate) use window::Frame;

/// Default clock period, 100 MHz.
pub const DEFAULT_CLOCK_PERIOD_NS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArchError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{kind} cannot use this kernel: {reason}")]
    Incompatible {
        kind: ArchKind,
        reason: &'static str,
    },
    #[error("symmetry class overflow: kernel has {classes} distinct coefficients, at most {MAX_SYMMETRY_CLASSES} supported")]
    SymmetryClassOverflow { classes: usize },
    #[error("image width {image_width} is smaller than kernel size {kernel_size}")]
    ImageTooNarrow {
        image_width: usize,
        kernel_size: usize,
    },
    #[error("image is {got}x{height}, instance was built for width {expected}")]
    WidthMismatch {
        expected: usize,
        got: usize,
        height: usize,
    },
    #[error("image height {height} is smaller than kernel size {kernel_size}")]
    ImageTooShort { height: usize, kernel_size: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The five streaming architectures, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchKind {
    /// Line buffers feed a full window, one multiplier per tap and an adder tree.
    FullyParallel,
    /// One MAC FIR engine per window row, each iterating over the row taps.
    #[serde(rename = "mac-fir")]
    MacFirIterating,
    /// Vertical 1-D pass, then horizontal.
    SeparableColRow,
    /// Horizontal 1-D pass, then vertical.
    SeparableRowCol,
    /// Taps sharing a coefficient are pre-added and multiplied once.
    SymmetryOptimized,
}

impl ArchKind {
    pub const ALL: [ArchKind; 5] = [
        ArchKind::FullyParallel,
        ArchKind::MacFirIterating,
        ArchKind::SeparableColRow,
        ArchKind::SeparableRowCol,
        ArchKind::SymmetryOptimized,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ArchKind::FullyParallel => "fully-parallel",
            ArchKind::MacFirIterating => "mac-fir",
            ArchKind::SeparableColRow => "separable-col-row",
            ArchKind::SeparableRowCol => "separable-row-col",
            ArchKind::SymmetryOptimized => "symmetry-optimized",
        }
    }

    /// Clock cycles per pixel in steady state for a `size`-tap kernel.
    pub fn nominal_cycles_per_pixel(&self, size: usize) -> u64 {
        match self {
            ArchKind::MacFirIterating => size as u64,
            _ => 1,
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArchKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ArchKind::ALL.iter().map(ArchKind::name).collect();
                format!(
                    "unknown architecture '{s}', expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// A kernel in either dense or factored form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelInput {
    Dense(Kernel2D),
    Separable(SeparableKernel),
}

impl KernelInput {
    pub fn size(&self) -> usize {
        match self {
            KernelInput::Dense(k) => k.size(),
            KernelInput::Separable(s) => s.size(),
        }
    }

    pub fn format(&self) -> FixedFormat {
        match self {
            KernelInput::Dense(k) => k.format(),
            KernelInput::Separable(s) => s.format(),
        }
    }

    pub fn dense(&self) -> Result<Kernel2D, KernelError> {
        match self {
            KernelInput::Dense(k) => Ok(k.clone()),
            KernelInput::Separable(s) => s.outer(),
        }
    }

    pub fn separable(&self) -> Result<SeparableKernel, KernelError> {
        match self {
            KernelInput::Dense(k) => decompose_separable(k),
            KernelInput::Separable(s) => Ok(s.clone()),
        }
    }
}

impl From<Kernel2D> for KernelInput {
    fn from(k: Kernel2D) -> Self {
        KernelInput::Dense(k)
    }
}

impl From<SeparableKernel> for KernelInput {
    fn from(s: SeparableKernel) -> Self {
        KernelInput::Separable(s)
    }
}

/// Timing measured over one processed frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    /// Cycles from the edge that accepts the first pixel to the edge that
    /// emits the first output.
    pub latency_cycles: u64,
    pub cycles_per_pixel_steady: Ratio<u64>,
    /// Clock edges until the last output is emitted.
    pub total_cycles: u64,
    pub pixels: u64,
    pub clock_period_ns: f64,
    /// Steady-state frame rate, `clock / cycles_per_pixel / pixels`.
    pub fps_at_clock: f64,
}

impl CycleReport {
    pub fn frame_time_s(&self) -> f64 {
        self.total_cycles as f64 * self.clock_period_ns * 1e-9
    }

    pub fn cycles_per_pixel_f64(&self) -> f64 {
        *self.cycles_per_pixel_steady.numer() as f64 / *self.cycles_per_pixel_steady.denom() as f64
    }
}

/// Per-cycle input: the pixel presented on the data port.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct PixelIn {
    pub value: u8,
    pub valid: bool,
}

/// Per-cycle output with the raster index of the pixel it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PixelOut {
    pub value: u8,
    pub index: i64,
    pub valid: bool,
}

impl PixelOut {
    pub const IDLE: PixelOut = PixelOut {
        value: 0,
        index: window::NO_PIXEL,
        valid: false,
    };
}

/// A streaming datapath. One call to `eval` + `commit` is one clock edge.
pub(crate) trait Pipeline: Send {
    fn eval(&mut self, input: PixelIn) -> Result<(), SimError>;
    fn commit(&mut self);
    /// Returns every element to its reset state and latches the frame size.
    fn reset(&mut self, frame: Frame);
    fn output(&self) -> PixelOut;
    fn initiation_interval(&self) -> u32;
    fn op_count(&self) -> OpCount;
    fn probe(&self, _sink: &mut dyn FnMut(&'static str, Word)) {}
}

struct PipelineCircuit<'a> {
    inner: &'a mut dyn Pipeline,
    frame: Frame,
}

impl Circuit for PipelineCircuit<'_> {
    type Input = PixelIn;
    type Output = PixelOut;

    fn eval(&mut self, input: &PixelIn) -> Result<(), SimError> {
        self.inner.eval(*input)
    }

    fn commit(&mut self) {
        self.inner.commit();
    }

    fn reset(&mut self) {
        self.inner.reset(self.frame);
    }

    fn output(&self) -> PixelOut {
        self.inner.output()
    }

    fn probe(&self, sink: &mut dyn FnMut(&'static str, Word)) {
        let out = self.inner.output();
        sink("out_valid", Word::from(out.valid));
        sink("out_pixel", Word::from(out.value));
        self.inner.probe(sink);
    }
}

/// A built architecture bound to an image width.
pub struct ArchInstance {
    kind: ArchKind,
    kernel: KernelInput,
    image_width: usize,
    clock_period_ns: f64,
    pipeline: Box<dyn Pipeline>,
}

impl fmt::Debug for ArchInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ArchInstance")
            .field("kind", &self.kind)
            .field("kernel", &self.kernel)
            .field("image_width", &self.image_width)
            .field("clock_period_ns", &self.clock_period_ns)
            .finish_non_exhaustive()
    }
}

/// Builds a reset pipeline of `kind` for images `image_width` pixels wide.
///
/// Separable kinds factor a dense kernel exactly and fail with
/// [`KernelError::NotSeparable`] when that is impossible; dense kinds expand a
/// factored kernel.
pub fn build(
    kind: ArchKind,
    kernel: impl Into<KernelInput>,
    image_width: usize,
) -> Result<ArchInstance, ArchError> {
    let kernel = kernel.into();
    let size = kernel.size();
    if image_width < size {
        return Err(ArchError::ImageTooNarrow {
            image_width,
            kernel_size: size,
        });
    }
    let pipeline: Box<dyn Pipeline> = match kind {
        ArchKind::FullyParallel => Box::new(fully_parallel::FullyParallel::new(
            &kernel.dense()?,
            image_width,
        )),
        ArchKind::MacFirIterating => Box::new(mac_fir::MacFir::new(&kernel.dense()?, image_width)),
        ArchKind::SeparableColRow => Box::new(separable::Separable::new(
            &kernel.separable()?,
            image_width,
            PassOrder::ColFirst,
        )),
        ArchKind::SeparableRowCol => Box::new(separable::Separable::new(
            &kernel.separable()?,
            image_width,
            PassOrder::RowFirst,
        )),
        ArchKind::SymmetryOptimized => Box::new(symmetry::SymmetryOptimized::new(
            &kernel.dense()?,
            image_width,
        )?),
    };
    Ok(ArchInstance {
        kind,
        kernel,
        image_width,
        clock_period_ns: DEFAULT_CLOCK_PERIOD_NS,
        pipeline,
    })
}

impl ArchInstance {
    pub fn kind(&self) -> ArchKind {
        self.kind
    }

    pub fn kernel(&self) -> &KernelInput {
        &self.kernel
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn clock_period_ns(&self) -> f64 {
        self.clock_period_ns
    }

    pub fn with_clock_period_ns(mut self, period_ns: f64) -> Self {
        assert!(period_ns > 0.0, "clock period must be positive");
        self.clock_period_ns = period_ns;
        self
    }

    /// Structural resource tally of this instance.
    pub fn op_count(&self) -> OpCount {
        self.pipeline.op_count()
    }

    pub fn process_image(&mut self, image: &Image) -> Result<(Image, CycleReport), ArchError> {
        let (out, report, _) = self.run(image, None)?;
        Ok((out, report))
    }

    /// Like [`ArchInstance::process_image`], recording signals into `trace`.
    pub fn process_image_traced(
        &mut self,
        image: &Image,
        trace: TraceRecorder,
    ) -> Result<(Image, CycleReport, TraceRecorder), ArchError> {
        let (out, report, trace) = self.run(image, Some(trace))?;
        Ok((out, report, trace.expect("trace was supplied")))
    }

    fn run(
        &mut self,
        image: &Image,
        trace: Option<TraceRecorder>,
    ) -> Result<(Image, CycleReport, Option<TraceRecorder>), ArchError> {
        let size = self.kernel.size();
        if image.width() != self.image_width {
            return Err(ArchError::WidthMismatch {
                expected: self.image_width,
                got: image.width(),
                height: image.height(),
            });
        }
        if image.height() < size {
            return Err(ArchError::ImageTooShort {
                height: image.height(),
                kernel_size: size,
            });
        }

        let frame = Frame::new(image.width(), image.height());
        let ii = u64::from(self.pipeline.initiation_interval());
        let pixels = image.len() as u64;
        // generous bound: every pixel slot plus several rows of fill and drain
        let max_steps = (pixels + (size as u64 + 2) * (image.width() as u64 + 2)) * ii + 256;

        let mut circuit = PipelineCircuit {
            inner: self.pipeline.as_mut(),
            frame,
        };
        circuit.reset();
        let mut sim = Simulator::new(circuit, self.clock_period_ns);
        if let Some(t) = trace {
            sim = sim.with_trace(t);
        }

        let mut out = Vec::with_capacity(image.len());
        let mut first_step = None;
        let mut last_step = 0;
        let mut step: u64 = 0;
        while (out.len() as u64) < pixels {
            if step >= max_steps {
                return Err(SimError::Stalled { cycles: step }.into());
            }
            let slot = step / ii;
            let input = match image.pixels().get(slot as usize) {
                Some(&value) => PixelIn { value, valid: true },
                None => PixelIn::default(),
            };
            let o = sim.step(&input)?;
            if o.valid {
                if o.index != out.len() as i64 {
                    return Err(SimError::OutOfOrder {
                        expected: out.len() as u64,
                        got: o.index,
                    }
                    .into());
                }
                out.push(o.value);
                first_step.get_or_insert(step);
                last_step = step;
            }
            step += 1;
        }

        let first_step = first_step.expect("at least one pixel");
        let total_cycles = sim.clock().cycles();
        let cycles_per_pixel_steady = if pixels > 1 {
            Ratio::new(last_step - first_step, pixels - 1)
        } else {
            Ratio::from_integer(ii)
        };
        let cpp = *cycles_per_pixel_steady.numer() as f64 / *cycles_per_pixel_steady.denom() as f64;
        let report = CycleReport {
            latency_cycles: first_step,
            cycles_per_pixel_steady,
            total_cycles,
            pixels,
            clock_period_ns: self.clock_period_ns,
            fps_at_clock: 1e9 / self.clock_period_ns / cpp / pixels as f64,
        };
        let trace = sim.take_trace();
        let image = Image::new(image.width(), image.height(), out).expect("one output per pixel");
        Ok((image, report, trace))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixelio::{gaussian_kernel, separable_gaussian};
    use crate::refconv::convolve_direct;

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |r, c| ((r * 37 + c * 11) % 256) as u8).unwrap()
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ArchKind::ALL {
            assert_eq!(kind.name().parse::<ArchKind>().unwrap(), kind);
        }
        assert!("systolic".parse::<ArchKind>().is_err());
        for kind in ArchKind::ALL {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
        assert!(ArchKind::FullyParallel < ArchKind::SymmetryOptimized);
    }

    #[test]
    fn every_kind_matches_reference_on_separable_gaussian() {
        let img = ramp(23, 17);
        for (size, sigma) in [(3, 0.8), (5, 20.0), (5, 1.5), (7, 2.0)] {
            let sep = separable_gaussian(size, sigma, FixedFormat::default()).unwrap();
            let expected = convolve_direct(&img, &sep.outer().unwrap()).unwrap();
            for kind in ArchKind::ALL {
                let mut inst = match build(kind, sep.clone(), 23) {
                    Ok(inst) => inst,
                    // profiles with three or more distinct taps give six or more products
                    Err(ArchError::SymmetryClassOverflow { .. }) if size > 3 && sigma < 10.0 => {
                        continue
                    }
                    Err(e) => panic!("{kind} {size}: {e}"),
                };
                let (out, report) = inst.process_image(&img).unwrap();
                assert_eq!(out, expected, "{kind} {size}");
                assert_eq!(
                    report.cycles_per_pixel_steady,
                    Ratio::from_integer(kind.nominal_cycles_per_pixel(size)),
                    "{kind}"
                );
            }
        }
    }

    #[test]
    fn rejects_mismatched_images() {
        let k = gaussian_kernel(3, 1.0, FixedFormat::default()).unwrap();
        assert!(matches!(
            build(ArchKind::FullyParallel, k.clone(), 2),
            Err(ArchError::ImageTooNarrow { .. })
        ));
        let mut inst = build(ArchKind::FullyParallel, k, 8).unwrap();
        assert!(matches!(
            inst.process_image(&ramp(9, 9)),
            Err(ArchError::WidthMismatch { .. })
        ));
        assert!(matches!(
            inst.process_image(&ramp(8, 2)),
            Err(ArchError::ImageTooShort { .. })
        ));
    }

    #[test]
    fn separable_kinds_reject_rank_two_kernels() {
        let k = gaussian_kernel(5, 20.0, FixedFormat::default()).unwrap();
        for kind in [ArchKind::SeparableColRow, ArchKind::SeparableRowCol] {
            assert_eq!(
                build(kind, k.clone(), 16).unwrap_err(),
                ArchError::Kernel(KernelError::NotSeparable)
            );
        }
    }

    #[test]
    fn instances_are_reusable() {
        let k = gaussian_kernel(3, 1.0, FixedFormat::default()).unwrap();
        let mut inst = build(ArchKind::MacFirIterating, k, 12).unwrap();
        let a = inst.process_image(&ramp(12, 9)).unwrap();
        let b = inst.process_image(&ramp(12, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_captures_output_strobe() {
        let k = gaussian_kernel(3, 1.0, FixedFormat::default()).unwrap();
        let mut inst = build(ArchKind::FullyParallel, k, 8).unwrap();
        let (_, report, trace) = inst
            .process_image_traced(&ramp(8, 4), TraceRecorder::new(["out_valid"]))
            .unwrap();
        assert_eq!(trace.rows().len() as u64, report.total_cycles);
        let strobes = trace.rows().iter().filter(|r| r.2 == 1).count();
        assert_eq!(strobes, 32);
    }
}
