//! One multiplier per window tap and a registered pairwise adder tree.

use super::opcount::{adder_tree_levels, Widths};
use super::window::{WindowGenerator, NO_PIXEL};
use super::{Frame, OpCount, Pipeline, PixelIn, PixelOut};
use crate::clocksim::{CoefficientRom, Register, Sequential, SimError, Width, Word};
use crate::pixelio::Kernel2D;
use crate::refconv::{normalize_and_clamp, Accumulator};

/// A row of registered words tagged with the raster index they belong to.
struct Stage {
    words: Vec<Register<Word>>,
    width: Width,
    tag: Register<i64>,
}

impl Stage {
    fn new(count: usize, width: Width) -> Self {
        Self {
            words: vec![Register::new(0); count],
            width,
            tag: Register::new(NO_PIXEL),
        }
    }

    fn commit(&mut self) {
        self.words.iter_mut().for_each(Sequential::commit);
        self.tag.commit();
    }

    fn reset(&mut self) {
        self.words.iter_mut().for_each(Sequential::reset);
        self.tag.reset();
    }
}

pub(crate) struct FullyParallel {
    size: usize,
    image_width: usize,
    frame: Frame,
    coeff_sum: i64,
    frac_bits: u32,
    rom: CoefficientRom,
    window: WindowGenerator,
    products: Stage,
    tree: Vec<Stage>,
    out: Register<PixelOut>,
    ops: OpCount,
}

impl FullyParallel {
    pub fn new(kernel: &Kernel2D, image_width: usize) -> Self {
        let n = kernel.size();
        let widths = Widths::new(kernel.format());
        let tree = adder_tree_levels(n * n, widths.product)
            .into_iter()
            .map(|(count, width)| Stage::new(count, width))
            .collect();
        let mut s = Self {
            size: n,
            image_width,
            frame: Frame::new(image_width, 1),
            coeff_sum: kernel.coeff_sum(),
            frac_bits: kernel.format().frac_bits(),
            rom: CoefficientRom::new(kernel.coeffs().to_vec()),
            window: WindowGenerator::new(n, image_width),
            products: Stage::new(n * n, widths.product),
            tree,
            out: Register::new(PixelOut::IDLE),
            ops: OpCount::default(),
        };
        s.ops = s.count_ops();
        s
    }

    fn count_ops(&self) -> OpCount {
        let n = self.size;
        let mut ops = OpCount {
            multipliers: (n * n) as u32,
            rom_words: self.rom.len() as u32,
            ..OpCount::default()
        };
        // a pairwise tree over n^2 leaves
        ops.add_adders(2, (n * n - 1) as u32);
        for lb in self.window.line_buffers() {
            ops.add_line_buffers(1, lb.depth(), lb.width().bits);
        }
        ops.register_bits = self.window.register_bits();
        ops.add_registers(self.products.words.len(), self.products.width);
        for stage in &self.tree {
            ops.add_registers(stage.words.len(), stage.width);
        }
        ops.add_registers(1, Width::PIXEL);
        ops
    }

    fn root(&self) -> Word {
        match self.tree.last() {
            Some(stage) => *stage.words[0].get(),
            None => *self.products.words[0].get(),
        }
    }

    fn root_tag(&self) -> i64 {
        match self.tree.last() {
            Some(stage) => *stage.tag.get(),
            None => *self.products.tag.get(),
        }
    }
}

impl Pipeline for FullyParallel {
    fn eval(&mut self, input: PixelIn) -> Result<(), SimError> {
        let n = self.size;
        let h = (n / 2) as i64;

        // output: normalize the tree root
        let tag = self.root_tag();
        self.out.set(if self.frame.contains(tag) {
            PixelOut {
                value: normalize_and_clamp(
                    Accumulator(self.root()),
                    self.coeff_sum,
                    self.frac_bits,
                ),
                index: tag,
                valid: true,
            }
        } else {
            PixelOut::IDLE
        });

        // adder tree, one registered level per clock
        for l in (0..self.tree.len()).rev() {
            let (src, src_tag): (Vec<Word>, i64) = if l == 0 {
                (
                    self.products.words.iter().map(|r| *r.get()).collect(),
                    *self.products.tag.get(),
                )
            } else {
                (
                    self.tree[l - 1].words.iter().map(|r| *r.get()).collect(),
                    *self.tree[l - 1].tag.get(),
                )
            };
            let stage = &mut self.tree[l];
            for (k, pair) in src.chunks(2).enumerate() {
                let sum: i128 = pair.iter().map(|&v| i128::from(v)).sum();
                stage.words[k].set(stage.width.check("adder tree", sum)?);
            }
            stage.tag.set(src_tag);
        }

        // multipliers on the masked window
        let center = self.window.center();
        for i in 0..n {
            for j in 0..n {
                let inside = self.frame.tap_inside(center, i as i64 - h, j as i64 - h);
                let tap = if inside { self.window.tap(i, j) } else { 0 };
                let p = i128::from(tap) * i128::from(self.rom.read(i * n + j));
                self.products.words[i * n + j].set(self.products.width.check("multiplier", p)?);
            }
        }
        self.products.tag.set(center);

        let pixel = if input.valid { input.value } else { 0 };
        self.window.eval(pixel)
    }

    fn commit(&mut self) {
        self.window.commit();
        self.products.commit();
        self.tree.iter_mut().for_each(Stage::commit);
        self.out.commit();
    }

    fn reset(&mut self, frame: Frame) {
        debug_assert_eq!(frame.width, self.image_width);
        self.frame = frame;
        self.window.reset();
        self.products.reset();
        self.tree.iter_mut().for_each(Stage::reset);
        self.out.reset();
    }

    fn output(&self) -> PixelOut {
        *self.out.get()
    }

    fn initiation_interval(&self) -> u32 {
        1
    }

    fn op_count(&self) -> OpCount {
        self.ops.clone()
    }

    fn probe(&self, sink: &mut dyn FnMut(&'static str, Word)) {
        sink("window_center", self.window.center());
        sink("tree_root", self.root());
    }
}
