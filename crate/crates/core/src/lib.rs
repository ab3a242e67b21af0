//! Cycle-accurate simulation of streaming 2-D convolution hardware.
//!
//! The crate is organised bottom-up:
//!
//! * [`pixelio`] builds images and fixed-point kernels, reads and writes PGM,
//!   injects Gaussian noise and measures PSNR.
//! * [`refconv`] is the golden software convolution every pipeline must match
//!   bit for bit.
//! * [`clocksim`] provides two-phase clocked elements (registers, line buffers,
//!   addressable shift registers, ROMs, MAC arithmetic, downsamplers) and trace
//!   capture.
//! * [`archs`] assembles five streaming architectures from those elements and
//!   measures their latency and throughput.
//! * [`perfmodel`] evaluates the frame-time budget model and ranks candidate
//!   architectures.

pub mod archs;
pub mod clocksim;
pub mod perfmodel;
pub mod pixelio;
pub mod refconv;

pub use archs::{
    build, operation_counts, AdderGroup, ArchError, ArchInstance, ArchKind, CycleReport,
    KernelInput, LineBufferSpec, OpCount,
};
pub use clocksim::{ClockCounter, SimError, TraceRecorder};
pub use perfmodel::{
    explore, frame_time, speedup, throughput_fps, Candidate, Constraints, Derivation, PerfParams,
    PerfReport,
};
pub use pixelio::{
    add_gaussian_noise, checkerboard, decompose_separable, gaussian_kernel, gradient, load_pgm,
    psnr, quantize_kernel, save_pgm, separable_gaussian, FixedFormat, Image, ImageError, Kernel2D,
    KernelError, PgmError, Psnr, SeparableKernel,
};
pub use refconv::{
    convolve_direct, convolve_separable, normalize_and_clamp, Accumulator, ConvError, PassOrder,
};
