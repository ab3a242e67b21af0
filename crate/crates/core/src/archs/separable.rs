//! Two cascaded 1-D FIR passes.
//!
//! Column-first: pixel line buffers feed a vertical multiplier column, whose
//! sums enter a horizontal shift register. Row-first: a pixel shift register
//! feeds the horizontal multipliers, whose sums are stored in wide line
//! buffers for the vertical pass. Both keep full precision between passes
//! and normalize once.

use super::opcount::Widths;
use super::window::NO_PIXEL;
use super::{Frame, OpCount, Pipeline, PixelIn, PixelOut};
use crate::clocksim::{CoefficientRom, LineBuffer, Register, Sequential, SimError, Width, Word};
use crate::pixelio::SeparableKernel;
use crate::refconv::{normalize_and_clamp, Accumulator, PassOrder};

/// Registered word plus the raster index of the output pixel it feeds.
type Tagged = (Word, i64);

const EMPTY: Tagged = (0, NO_PIXEL);

fn regs(n: usize) -> Vec<Register<Tagged>> {
    vec![Register::new(EMPTY); n]
}

fn commit_all(regs: &mut [Register<Tagged>]) {
    regs.iter_mut().for_each(Sequential::commit);
}

fn reset_all(regs: &mut [Register<Tagged>]) {
    regs.iter_mut().for_each(Sequential::reset);
}

fn sum_of(
    regs: &[Register<Tagged>],
    width: Width,
    element: &'static str,
) -> Result<Word, SimError> {
    width.check(element, regs.iter().map(|r| i128::from(r.get().0)).sum())
}

pub(crate) struct Separable {
    size: usize,
    image_width: usize,
    order: PassOrder,
    frame: Frame,
    coeff_sum: i64,
    frac_bits: u32,
    col: CoefficientRom,
    row: CoefficientRom,
    /// pixel product width
    first_product: Width,
    /// sum of one 1-D pass
    first_sum: Width,
    /// intermediate sum times coefficient
    second_product: Width,
    second_sum: Width,
    lines: Vec<LineBuffer>,
    accepted: Register<i64>,
    /// row-first only: pixel shift register, index 0 newest
    pixel_shift: Vec<Register<Tagged>>,
    first_products: Vec<Register<Tagged>>,
    first: Register<Tagged>,
    /// column-first only: shift register of vertical sums, index 0 newest
    sum_shift: Vec<Register<Tagged>>,
    second_products: Vec<Register<Tagged>>,
    second: Register<Tagged>,
    out: Register<PixelOut>,
}

impl Separable {
    pub fn new(kernel: &SeparableKernel, image_width: usize, order: PassOrder) -> Self {
        let n = kernel.size();
        let widths = Widths::new(kernel.format());
        let first_sum = widths.product.sum_of(n);
        let second_product = Width::product(first_sum, widths.coeff);
        let line_width = match order {
            PassOrder::ColFirst => Width::PIXEL,
            PassOrder::RowFirst => first_sum,
        };
        Self {
            size: n,
            image_width,
            order,
            frame: Frame::new(image_width, 1),
            coeff_sum: kernel.coeff_sum(),
            frac_bits: kernel.format().frac_bits(),
            col: CoefficientRom::new(kernel.col().to_vec()),
            row: CoefficientRom::new(kernel.row().to_vec()),
            first_product: widths.product,
            first_sum,
            second_product,
            second_sum: second_product.sum_of(n),
            lines: (0..n - 1)
                .map(|_| LineBuffer::new(image_width, line_width))
                .collect(),
            accepted: Register::new(0),
            pixel_shift: match order {
                PassOrder::ColFirst => Vec::new(),
                PassOrder::RowFirst => regs(n),
            },
            first_products: regs(n),
            first: Register::new(EMPTY),
            sum_shift: match order {
                PassOrder::ColFirst => regs(n),
                PassOrder::RowFirst => Vec::new(),
            },
            second_products: regs(n),
            second: Register::new(EMPTY),
            out: Register::new(PixelOut::IDLE),
        }
    }

    /// Vertical taps, top first: `size - 1` line buffer outputs and `live`.
    fn column(&self, live: Word) -> Vec<Word> {
        let n = self.size;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    live
                } else {
                    self.lines[n - 2 - i].read()
                }
            })
            .collect()
    }

    /// Advances the line-buffer chain by one word.
    fn push_lines(&mut self, live: Word) -> Result<(), SimError> {
        for k in 0..self.lines.len() {
            let v = if k == 0 {
                live
            } else {
                self.lines[k - 1].read()
            };
            self.lines[k].write(v)?;
        }
        Ok(())
    }

    /// Multiplies the taps of a column centred on `center` by the column
    /// coefficients, zeroing rows outside the frame.
    fn vertical(&self, taps: &[Word], center: i64, width: Width) -> Result<Vec<Tagged>, SimError> {
        let h = (self.size / 2) as i64;
        taps.iter()
            .enumerate()
            .map(|(i, &v)| {
                let v = if self.frame.tap_inside(center, i as i64 - h, 0) {
                    v
                } else {
                    0
                };
                let p = i128::from(v) * i128::from(self.col.read(i));
                Ok((width.check("vertical multiplier", p)?, center))
            })
            .collect()
    }

    /// Multiplies a shift register (index 0 newest) by the row coefficients
    /// around its middle element.
    fn horizontal(
        &self,
        shift: &[Register<Tagged>],
        width: Width,
    ) -> Result<Vec<Tagged>, SimError> {
        let n = self.size;
        let h = n / 2;
        let center = shift[h].get().1;
        (0..n)
            .map(|j| {
                let v = shift[n - 1 - j].get().0;
                let v = if self.frame.tap_inside(center, 0, j as i64 - h as i64) {
                    v
                } else {
                    0
                };
                let p = i128::from(v) * i128::from(self.row.read(j));
                Ok((width.check("horizontal multiplier", p)?, center))
            })
            .collect()
    }

    fn normalize(&mut self) {
        let (sum, index) = *self.second.get();
        self.out.set(if self.frame.contains(index) {
            PixelOut {
                value: normalize_and_clamp(Accumulator(sum), self.coeff_sum, self.frac_bits),
                index,
                valid: true,
            }
        } else {
            PixelOut::IDLE
        });
    }
}

impl Pipeline for Separable {
    fn eval(&mut self, input: PixelIn) -> Result<(), SimError> {
        let n = self.size;
        let h = (n / 2) as i64;
        let w = self.image_width as i64;
        let pixel = Word::from(if input.valid { input.value } else { 0 });
        let t = *self.accepted.get();

        self.normalize();
        let second = sum_of(&self.second_products, self.second_sum, "second adder")?;
        self.second.set((second, self.second_products[0].get().1));
        let first = sum_of(&self.first_products, self.first_sum, "first adder")?;
        let first_tag = self.first_products[0].get().1;
        self.first.set((first, first_tag));

        match self.order {
            PassOrder::ColFirst => {
                let hp = self.horizontal(&self.sum_shift, self.second_product)?;
                for (r, v) in self.second_products.iter_mut().zip(hp) {
                    r.set(v);
                }
                for k in (1..n).rev() {
                    let older = *self.sum_shift[k - 1].get();
                    self.sum_shift[k].set(older);
                }
                self.sum_shift[0].set(*self.first.get());

                let taps = self.column(pixel);
                let vp = self.vertical(&taps, t - h * w, self.first_product)?;
                for (r, v) in self.first_products.iter_mut().zip(vp) {
                    r.set(v);
                }
                self.push_lines(pixel)?;
            }
            PassOrder::RowFirst => {
                let (live, q) = *self.first.get();
                let taps = self.column(live);
                let vp = self.vertical(&taps, q - h * w, self.second_product)?;
                for (r, v) in self.second_products.iter_mut().zip(vp) {
                    r.set(v);
                }
                self.push_lines(live)?;

                let hp = self.horizontal(&self.pixel_shift, self.first_product)?;
                for (r, v) in self.first_products.iter_mut().zip(hp) {
                    r.set(v);
                }
                for k in (1..n).rev() {
                    let older = *self.pixel_shift[k - 1].get();
                    self.pixel_shift[k].set(older);
                }
                self.pixel_shift[0].set((pixel, t));
            }
        }
        self.accepted.set(t + 1);
        Ok(())
    }

    fn commit(&mut self) {
        self.lines.iter_mut().for_each(Sequential::commit);
        self.accepted.commit();
        commit_all(&mut self.pixel_shift);
        commit_all(&mut self.first_products);
        self.first.commit();
        commit_all(&mut self.sum_shift);
        commit_all(&mut self.second_products);
        self.second.commit();
        self.out.commit();
    }

    fn reset(&mut self, frame: Frame) {
        debug_assert_eq!(frame.width, self.image_width);
        self.frame = frame;
        self.lines.iter_mut().for_each(Sequential::reset);
        self.accepted.reset();
        reset_all(&mut self.pixel_shift);
        reset_all(&mut self.first_products);
        self.first.reset();
        reset_all(&mut self.sum_shift);
        reset_all(&mut self.second_products);
        self.second.reset();
        self.out.reset();
    }

    fn output(&self) -> PixelOut {
        *self.out.get()
    }

    fn initiation_interval(&self) -> u32 {
        1
    }

    fn op_count(&self) -> OpCount {
        let n = self.size;
        let mut ops = OpCount {
            multipliers: 2 * n as u32,
            rom_words: (self.col.len() + self.row.len()) as u32,
            ..OpCount::default()
        };
        ops.add_adders(2, 2 * (n as u32 - 1));
        for lb in &self.lines {
            ops.add_line_buffers(1, lb.depth(), lb.width().bits);
        }
        ops.add_registers(self.pixel_shift.len(), Width::PIXEL);
        ops.add_registers(n, self.first_product);
        ops.add_registers(1, self.first_sum);
        ops.add_registers(self.sum_shift.len(), self.first_sum);
        ops.add_registers(n, self.second_product);
        ops.add_registers(1, self.second_sum);
        ops.add_registers(1, Width::PIXEL);
        ops
    }

    fn probe(&self, sink: &mut dyn FnMut(&'static str, Word)) {
        sink("first_sum", self.first.get().0);
        sink("second_sum", self.second.get().0);
    }
}
