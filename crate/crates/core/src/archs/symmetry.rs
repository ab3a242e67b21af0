//! Pre-adds window taps that share a coefficient, then multiplies once per
//! distinct coefficient value.

use super::opcount::Widths;
use super::window::{WindowGenerator, NO_PIXEL};
use super::{ArchError, ArchKind, Frame, OpCount, Pipeline, PixelIn, PixelOut};
use crate::clocksim::{Register, Sequential, SimError, Width, Word};
use crate::pixelio::Kernel2D;
use crate::refconv::{normalize_and_clamp, Accumulator};

/// Multiplier lanes in the fixed datapath.
pub const MAX_SYMMETRY_CLASSES: usize = 5;

struct Lane {
    coeff: Word,
    /// window taps `(row, col)` carrying this coefficient
    taps: Vec<(usize, usize)>,
    sum: Register<Word>,
    product: Register<Word>,
}

pub(crate) struct SymmetryOptimized {
    size: usize,
    image_width: usize,
    frame: Frame,
    coeff_sum: i64,
    frac_bits: u32,
    lane_sum: Width,
    lane_product: Width,
    total_width: Width,
    window: WindowGenerator,
    lanes: Vec<Lane>,
    sum_tag: Register<i64>,
    product_tag: Register<i64>,
    total: Register<(Word, i64)>,
    out: Register<PixelOut>,
}

impl SymmetryOptimized {
    pub fn new(kernel: &Kernel2D, image_width: usize) -> Result<Self, ArchError> {
        if !kernel.is_mirror_symmetric() {
            return Err(ArchError::Incompatible {
                kind: ArchKind::SymmetryOptimized,
                reason: "kernel is not mirror symmetric",
            });
        }
        let values = kernel.distinct_nonzero();
        if values.len() > MAX_SYMMETRY_CLASSES {
            return Err(ArchError::SymmetryClassOverflow {
                classes: values.len(),
            });
        }
        let n = kernel.size();
        let widths = Widths::new(kernel.format());
        let lane_sum = Width::PIXEL.sum_of(n * n);
        let lane_product = Width::product(lane_sum, widths.coeff);
        let mut lanes: Vec<Lane> = (0..MAX_SYMMETRY_CLASSES)
            .map(|k| Lane {
                coeff: values.get(k).copied().unwrap_or(0),
                taps: Vec::new(),
                sum: Register::new(0),
                product: Register::new(0),
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                let c = kernel.get(i, j);
                if let Some(k) = values.iter().position(|&v| v == c) {
                    lanes[k].taps.push((i, j));
                }
            }
        }
        Ok(Self {
            size: n,
            image_width,
            frame: Frame::new(image_width, 1),
            coeff_sum: kernel.coeff_sum(),
            frac_bits: kernel.format().frac_bits(),
            lane_sum,
            lane_product,
            total_width: lane_product.sum_of(MAX_SYMMETRY_CLASSES),
            window: WindowGenerator::new(n, image_width),
            lanes,
            sum_tag: Register::new(NO_PIXEL),
            product_tag: Register::new(NO_PIXEL),
            total: Register::new((0, NO_PIXEL)),
            out: Register::new(PixelOut::IDLE),
        })
    }
}

impl Pipeline for SymmetryOptimized {
    fn eval(&mut self, input: PixelIn) -> Result<(), SimError> {
        let h = (self.size / 2) as i64;

        let (total, index) = *self.total.get();
        self.out.set(if self.frame.contains(index) {
            PixelOut {
                value: normalize_and_clamp(Accumulator(total), self.coeff_sum, self.frac_bits),
                index,
                valid: true,
            }
        } else {
            PixelOut::IDLE
        });

        let total: i128 = self
            .lanes
            .iter()
            .map(|l| i128::from(*l.product.get()))
            .sum();
        self.total.set((
            self.total_width.check("output adder", total)?,
            *self.product_tag.get(),
        ));

        let center = self.window.center();
        for lane in &mut self.lanes {
            let p = i128::from(*lane.sum.get()) * i128::from(lane.coeff);
            lane.product
                .set(self.lane_product.check("lane multiplier", p)?);
            let sum: i128 = lane
                .taps
                .iter()
                .filter(|&&(i, j)| self.frame.tap_inside(center, i as i64 - h, j as i64 - h))
                .map(|&(i, j)| i128::from(self.window.tap(i, j)))
                .sum();
            lane.sum.set(self.lane_sum.check("pre-adder", sum)?);
        }
        self.product_tag.set(*self.sum_tag.get());
        self.sum_tag.set(center);

        self.window.eval(if input.valid { input.value } else { 0 })
    }

    fn commit(&mut self) {
        self.window.commit();
        for lane in &mut self.lanes {
            lane.sum.commit();
            lane.product.commit();
        }
        self.sum_tag.commit();
        self.product_tag.commit();
        self.total.commit();
        self.out.commit();
    }

    fn reset(&mut self, frame: Frame) {
        debug_assert_eq!(frame.width, self.image_width);
        self.frame = frame;
        self.window.reset();
        for lane in &mut self.lanes {
            lane.sum.reset();
            lane.product.reset();
        }
        self.sum_tag.reset();
        self.product_tag.reset();
        self.total.reset();
        self.out.reset();
    }

    fn output(&self) -> PixelOut {
        *self.out.get()
    }

    fn initiation_interval(&self) -> u32 {
        1
    }

    fn op_count(&self) -> OpCount {
        let lanes = self.lanes.len();
        let mut ops = OpCount {
            multipliers: lanes as u32,
            rom_words: lanes as u32,
            ..OpCount::default()
        };
        for lane in &self.lanes {
            ops.add_adders(lane.taps.len() as u32, 1);
        }
        ops.add_adders(lanes as u32, 1);
        for lb in self.window.line_buffers() {
            ops.add_line_buffers(1, lb.depth(), lb.width().bits);
        }
        ops.register_bits = self.window.register_bits();
        ops.add_registers(lanes, self.lane_sum);
        ops.add_registers(lanes, self.lane_product);
        ops.add_registers(1, self.total_width);
        ops.add_registers(1, Width::PIXEL);
        ops
    }

    fn probe(&self, sink: &mut dyn FnMut(&'static str, Word)) {
        sink("window_center", self.window.center());
        sink("lane_total", self.total.get().0);
    }
}
