//! Frame geometry and the line-buffered sliding window shared by the
//! full-window architectures.

use crate::clocksim::{LineBuffer, Register, Sequential, SimError, Width, Word};

/// Raster index carried by pipeline registers that hold no pixel yet.
pub(crate) const NO_PIXEL: i64 = i64::MIN / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Frame {
    pub width: usize,
    pub height: usize,
}

impl Frame {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, index: i64) -> bool {
        index >= 0 && index < (self.width * self.height) as i64
    }

    /// Whether the tap at offset `(dr, dc)` from the window centred on raster
    /// position `center` lies inside the frame. Centres outside the frame are
    /// resolved with Euclidean division so fill and drain cycles mask cleanly.
    pub fn tap_inside(&self, center: i64, dr: i64, dc: i64) -> bool {
        let w = self.width as i64;
        let r = center.div_euclid(w) + dr;
        let c = center.rem_euclid(w) + dc;
        r >= 0 && r < self.height as i64 && c >= 0 && c < w
    }
}

/// `size - 1` pixel line buffers and a `size x size` register window.
///
/// After the edge that accepts stream sample `t`, the window holds the
/// neighbourhood centred on raster position `t - r * (width + 1)` where `r`
/// is the kernel radius.
pub(crate) struct WindowGenerator {
    size: usize,
    width: usize,
    lines: Vec<LineBuffer>,
    /// Row-major, top row first; column 0 holds the newest sample.
    regs: Vec<Register<Word>>,
    accepted: Register<i64>,
}

impl WindowGenerator {
    pub fn new(size: usize, width: usize) -> Self {
        Self {
            size,
            width,
            lines: (0..size - 1)
                .map(|_| LineBuffer::new(width, Width::PIXEL))
                .collect(),
            regs: vec![Register::new(0); size * size],
            accepted: Register::new(0),
        }
    }

    pub fn eval(&mut self, pixel: u8) -> Result<(), SimError> {
        let n = self.size;
        let pixel = Word::from(pixel);
        // row n-1 is the live stream, row i comes out of line buffer n-2-i
        let mut row_inputs = vec![0; n];
        row_inputs[n - 1] = pixel;
        for i in 0..n - 1 {
            row_inputs[i] = self.lines[n - 2 - i].read();
        }
        for k in 0..self.lines.len() {
            let v = if k == 0 {
                pixel
            } else {
                self.lines[k - 1].read()
            };
            self.lines[k].write(v)?;
        }
        for i in 0..n {
            for j in (1..n).rev() {
                let older = *self.regs[i * n + j - 1].get();
                self.regs[i * n + j].set(older);
            }
            self.regs[i * n].set(row_inputs[i]);
        }
        self.accepted.set(self.accepted.get() + 1);
        Ok(())
    }

    /// Raster position of the current window centre.
    pub fn center(&self) -> i64 {
        let r = (self.size / 2) as i64;
        self.accepted.get() - 1 - r * (self.width as i64 + 1)
    }

    /// Window tap at `(row, col)` counted from the top-left corner.
    pub fn tap(&self, row: usize, col: usize) -> Word {
        *self.regs[row * self.size + (self.size - 1 - col)].get()
    }

    pub fn line_buffers(&self) -> &[LineBuffer] {
        &self.lines
    }

    pub fn register_bits(&self) -> u64 {
        (self.regs.len() as u64) * u64::from(Width::PIXEL.bits)
    }

    pub fn commit(&mut self) {
        self.lines.iter_mut().for_each(Sequential::commit);
        self.regs.iter_mut().for_each(Sequential::commit);
        self.accepted.commit();
    }

    pub fn reset(&mut self) {
        self.lines.iter_mut().for_each(Sequential::reset);
        self.regs.iter_mut().for_each(Sequential::reset);
        self.accepted.reset();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_tracks_neighbourhood() {
        let (w, h, n) = (6usize, 5usize, 3usize);
        let frame = Frame::new(w, h);
        let pixels: Vec<u8> = (0..(w * h) as u8).collect();
        let mut gen = WindowGenerator::new(n, w);
        for t in 0..w * h {
            gen.eval(pixels[t]).unwrap();
            gen.commit();
            let center = gen.center();
            if !frame.contains(center) {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    let (dr, dc) = (i as i64 - 1, j as i64 - 1);
                    if frame.tap_inside(center, dr, dc) {
                        let expected = center + dr * w as i64 + dc;
                        assert_eq!(gen.tap(i, j), expected, "t={t} tap=({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn tap_masks() {
        let f = Frame::new(4, 3);
        assert!(f.tap_inside(0, 0, 0));
        assert!(!f.tap_inside(0, -1, 0));
        assert!(!f.tap_inside(0, 0, -1));
        assert!(!f.tap_inside(3, 0, 1));
        assert!(f.tap_inside(3, 1, 0));
        assert!(!f.tap_inside(11, 1, 0));
        assert!(!f.tap_inside(-1, 0, 0));
        assert!(!f.tap_inside(NO_PIXEL, 0, 0));
        assert!(f.contains(11) && !f.contains(12) && !f.contains(-1));
    }
}
