//! One MAC FIR engine per kernel row.
//!
//! A chain of `size` line buffers delays the stream by whole rows; engine `i`
//! shifts the row it is fed into a `size`-deep addressable shift register and
//! then walks the taps with a single multiplier, one tap per clock. A pixel
//! slot therefore lasts `size` clocks. The engines' accumulators are captured
//! every `size` valid clocks by a downsampler and summed.

use super::opcount::Widths;
use super::window::NO_PIXEL;
use super::{Frame, OpCount, Pipeline, PixelIn, PixelOut};
use crate::clocksim::{
    mac, AddressableShiftRegister, CoefficientRom, Downsampler, LineBuffer, Register, Sequential,
    SimError, Width, Word,
};
use crate::pixelio::Kernel2D;
use crate::refconv::{normalize_and_clamp, Accumulator};

/// Control word travelling with each MAC operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ctl {
    first: bool,
    center: i64,
    primed: bool,
}

const CTL_IDLE: Ctl = Ctl {
    first: false,
    center: NO_PIXEL,
    primed: false,
};

struct Engine {
    asr: AddressableShiftRegister,
    /// tap `a` holds the coefficient for shift-register address `a`
    rom: CoefficientRom,
    r0: Register<Word>,
    r1: Register<Word>,
    r2: Register<Word>,
    acc: Register<Word>,
}

impl Engine {
    fn commit(&mut self) {
        self.asr.commit();
        self.r0.commit();
        self.r1.commit();
        self.r2.commit();
        self.acc.commit();
    }

    fn reset(&mut self) {
        self.asr.reset();
        self.r0.reset();
        self.r1.reset();
        self.r2.reset();
        self.acc.reset();
    }
}

pub(crate) struct MacFir {
    size: usize,
    image_width: usize,
    frame: Frame,
    coeff_sum: i64,
    frac_bits: u32,
    widths: Widths,
    acc_width: Width,
    sum_width: Width,
    lines: Vec<LineBuffer>,
    engines: Vec<Engine>,
    phase: Register<u32>,
    /// pixel slots accepted so far
    pos: Register<i64>,
    slot_center: Register<i64>,
    ctl_a: Register<Ctl>,
    ctl_b: Register<Ctl>,
    ctl_c: Register<Ctl>,
    capture: Downsampler<(Vec<Word>, i64)>,
    combined: Register<Option<(Word, i64)>>,
    out: Register<PixelOut>,
}

impl MacFir {
    pub fn new(kernel: &Kernel2D, image_width: usize) -> Self {
        let n = kernel.size();
        let widths = Widths::new(kernel.format());
        let acc_width = widths.product.sum_of(n);
        let engines = (0..n)
            .map(|i| Engine {
                asr: AddressableShiftRegister::new(n, Width::PIXEL),
                // address 0 is the newest sample, i.e. the rightmost tap
                rom: CoefficientRom::new((0..n).map(|a| kernel.get(i, n - 1 - a)).collect()),
                r0: Register::new(0),
                r1: Register::new(0),
                r2: Register::new(0),
                acc: Register::new(0),
            })
            .collect();
        Self {
            size: n,
            image_width,
            frame: Frame::new(image_width, 1),
            coeff_sum: kernel.coeff_sum(),
            frac_bits: kernel.format().frac_bits(),
            widths,
            acc_width,
            sum_width: acc_width.sum_of(n),
            lines: (0..n)
                .map(|_| LineBuffer::new(image_width, Width::PIXEL))
                .collect(),
            engines,
            phase: Register::new(0),
            pos: Register::new(0),
            slot_center: Register::new(NO_PIXEL),
            ctl_a: Register::new(CTL_IDLE),
            ctl_b: Register::new(CTL_IDLE),
            ctl_c: Register::new(CTL_IDLE),
            capture: Downsampler::new(n as u32),
            combined: Register::new(None),
            out: Register::new(PixelOut::IDLE),
        }
    }
}

impl Pipeline for MacFir {
    fn eval(&mut self, input: PixelIn) -> Result<(), SimError> {
        let n = self.size;
        let h = (n / 2) as i64;
        let w = self.image_width as i64;

        // F: normalize
        self.out.set(match *self.combined.get() {
            Some((sum, center)) if self.frame.contains(center) => PixelOut {
                value: normalize_and_clamp(Accumulator(sum), self.coeff_sum, self.frac_bits),
                index: center,
                valid: true,
            },
            _ => PixelOut::IDLE,
        });

        // E: combine the captured row sums
        let combined = match self.capture.output() {
            Some((accs, center)) => {
                let sum: i128 = accs.iter().map(|&a| i128::from(a)).sum();
                Some((self.sum_width.check("row combiner", sum)?, *center))
            }
            None => None,
        };
        self.combined.set(combined);

        // D: capture every n-th accumulation
        let ctl_c = *self.ctl_c.get();
        self.capture.eval(ctl_c.primed.then(|| {
            (
                self.engines.iter().map(|e| *e.acc.get()).collect(),
                ctl_c.center,
            )
        }));

        // C: accumulate; B: multiply
        let ctl_b = *self.ctl_b.get();
        for e in &mut self.engines {
            let base = if ctl_b.first { 0 } else { *e.acc.get() };
            e.acc.set(mac(base, *e.r2.get(), 1, self.acc_width)?);
            let p = i128::from(*e.r0.get()) * i128::from(*e.r1.get());
            e.r2.set(self.widths.product.check("multiplier", p)?);
        }
        self.ctl_c.set(ctl_b);
        self.ctl_b.set(*self.ctl_a.get());

        // A: fetch one tap per engine
        let phase = *self.phase.get() as usize;
        let addr = (phase + n - 1) % n;
        let center = *self.slot_center.get();
        let col_offset = (n - 1 - addr) as i64 - h;
        for (i, e) in self.engines.iter_mut().enumerate() {
            let inside = self.frame.tap_inside(center, i as i64 - h, col_offset);
            e.r0.set(if inside { e.asr.read(addr) } else { 0 });
            e.r1.set(e.rom.read(addr));
        }
        self.ctl_a.set(Ctl {
            first: addr == 0,
            center,
            primed: *self.pos.get() >= 1,
        });

        // slot boundary: advance the line buffers and shift registers
        if phase == 0 {
            let pixel = Word::from(if input.valid { input.value } else { 0 });
            for k in 0..n {
                let v = if k == 0 {
                    pixel
                } else {
                    self.lines[k - 1].read()
                };
                self.lines[k].write(v)?;
            }
            for i in 0..n {
                let row = self.lines[n - 1 - i].read();
                self.engines[i].asr.shift_in(row)?;
            }
            let t = *self.pos.get();
            self.pos.set(t + 1);
            self.slot_center.set(t - h - (h + 1) * w);
        }
        self.phase.set(((phase + 1) % n) as u32);
        Ok(())
    }

    fn commit(&mut self) {
        self.lines.iter_mut().for_each(Sequential::commit);
        self.engines.iter_mut().for_each(Engine::commit);
        self.phase.commit();
        self.pos.commit();
        self.slot_center.commit();
        self.ctl_a.commit();
        self.ctl_b.commit();
        self.ctl_c.commit();
        self.capture.commit();
        self.combined.commit();
        self.out.commit();
    }

    fn reset(&mut self, frame: Frame) {
        debug_assert_eq!(frame.width, self.image_width);
        self.frame = frame;
        self.lines.iter_mut().for_each(Sequential::reset);
        self.engines.iter_mut().for_each(Engine::reset);
        self.phase.reset();
        self.pos.reset();
        self.slot_center.reset();
        self.ctl_a.reset();
        self.ctl_b.reset();
        self.ctl_c.reset();
        self.capture.reset();
        self.combined.reset();
        self.out.reset();
    }

    fn output(&self) -> PixelOut {
        *self.out.get()
    }

    fn initiation_interval(&self) -> u32 {
        self.size as u32
    }

    fn op_count(&self) -> OpCount {
        let n = self.size;
        let mut ops = OpCount {
            multipliers: n as u32,
            rom_words: self.engines.iter().map(|e| e.rom.len() as u32).sum(),
            ..OpCount::default()
        };
        // one accumulator adder per engine and the row combiner
        ops.add_adders(2, n as u32);
        ops.add_adders(n as u32, 1);
        for lb in &self.lines {
            ops.add_line_buffers(1, lb.depth(), lb.width().bits);
        }
        for e in &self.engines {
            ops.add_registers(e.asr.depth(), Width::PIXEL);
        }
        ops.add_registers(n, Width::PIXEL);
        ops.add_registers(n, self.widths.coeff);
        ops.add_registers(n, self.widths.product);
        ops.add_registers(2 * n, self.acc_width);
        ops.add_registers(1, self.sum_width);
        ops.add_registers(1, Width::PIXEL);
        ops
    }

    fn probe(&self, sink: &mut dyn FnMut(&'static str, Word)) {
        sink("phase", Word::from(*self.phase.get()));
        sink("slot_center", *self.slot_center.get());
        sink("acc0", *self.engines[0].acc.get());
    }
}
