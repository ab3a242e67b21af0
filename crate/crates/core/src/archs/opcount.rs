//! Analytic resource tallies.

use serde::Serialize;

use super::symmetry::MAX_SYMMETRY_CLASSES;
use super::ArchKind;
use crate::clocksim::Width;
use crate::pixelio::FixedFormat;

/// `count` adders, each summing `arity` operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AdderGroup {
    pub arity: u32,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LineBufferSpec {
    pub depth: usize,
    pub word_bits: u32,
}

/// Concurrent arithmetic units and storage of one architecture.
///
/// `register_bits` counts datapath registers (window, pipeline stages, shift
/// registers, accumulators, output); control counters are excluded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OpCount {
    pub multipliers: u32,
    /// Sorted by arity.
    pub adders: Vec<AdderGroup>,
    pub line_buffers: Vec<LineBufferSpec>,
    pub register_bits: u64,
    pub rom_words: u32,
}

impl OpCount {
    pub fn add_adders(&mut self, arity: u32, count: u32) {
        if count == 0 || arity < 2 {
            return;
        }
        match self.adders.iter_mut().find(|g| g.arity == arity) {
            Some(g) => g.count += count,
            None => {
                self.adders.push(AdderGroup { arity, count });
                self.adders.sort();
            }
        }
    }

    pub fn add_line_buffers(&mut self, count: usize, depth: usize, word_bits: u32) {
        self.line_buffers.extend(std::iter::repeat_n(
            LineBufferSpec { depth, word_bits },
            count,
        ));
    }

    pub fn add_registers(&mut self, count: usize, width: Width) {
        self.register_bits += count as u64 * u64::from(width.bits);
    }

    pub fn adders_total(&self) -> u32 {
        self.adders.iter().map(|g| g.count).sum()
    }

    pub fn adders_with_arity(&self, arity: u32) -> u32 {
        self.adders
            .iter()
            .filter(|g| g.arity == arity)
            .map(|g| g.count)
            .sum()
    }
}

/// Datapath word widths shared by the analytic counts and the built circuits.
pub(crate) struct Widths {
    pub coeff: Width,
    /// pixel x coefficient
    pub product: Width,
}

impl Widths {
    pub fn new(format: FixedFormat) -> Self {
        let coeff = Width::signed(format.total_bits());
        Self {
            coeff,
            product: Width::product(Width::PIXEL, coeff),
        }
    }
}

/// Widths of the successive levels of a pairwise adder tree over `leaves`
/// operands: `(word count, width)` per level.
pub(crate) fn adder_tree_levels(leaves: usize, leaf: Width) -> Vec<(usize, Width)> {
    let mut levels = Vec::new();
    let mut count = leaves;
    let mut width = leaf;
    while count > 1 {
        count = count.div_ceil(2);
        width = Width::signed(width.bits + 1);
        levels.push((count, width));
    }
    levels
}

/// Sizes of the orbits of the `size x size` window under flips and transposition.
pub(crate) fn symmetry_orbits(size: usize) -> Vec<usize> {
    let r = size / 2;
    let mut orbits = Vec::new();
    for a in 0..=r {
        for b in a..=r {
            orbits.push(match (a, b) {
                (0, 0) => 1,
                (0, _) => 4,
                (a, b) if a == b => 4,
                _ => 8,
            });
        }
    }
    orbits
}

/// Resource counts derived from the architecture structure alone.
///
/// For the symmetry-optimized kind the pre-adders follow the orbit structure
/// of a fully symmetric kernel of this size; the built instance reports the
/// grouping of its actual coefficients.
pub fn operation_counts(
    kind: ArchKind,
    size: usize,
    image_width: usize,
    format: FixedFormat,
) -> OpCount {
    let n = size;
    let w = Widths::new(format);
    let pixel = Width::PIXEL;
    let mut ops = OpCount::default();
    match kind {
        ArchKind::FullyParallel => {
            ops.multipliers = (n * n) as u32;
            ops.add_adders(2, (n * n - 1) as u32);
            ops.add_line_buffers(n - 1, image_width, pixel.bits);
            ops.add_registers(n * n, pixel);
            ops.add_registers(n * n, w.product);
            for (count, width) in adder_tree_levels(n * n, w.product) {
                ops.add_registers(count, width);
            }
            ops.add_registers(1, pixel);
            ops.rom_words = (n * n) as u32;
        }
        ArchKind::MacFirIterating => {
            let acc = w.product.sum_of(n);
            ops.multipliers = n as u32;
            ops.add_adders(2, n as u32);
            ops.add_adders(n as u32, 1);
            ops.add_line_buffers(n, image_width, pixel.bits);
            // per engine: shift register, r0 sample, r1 coefficient, r2 product,
            // accumulator and capture register
            ops.add_registers(n * n, pixel);
            ops.add_registers(n, pixel);
            ops.add_registers(n, w.coeff);
            ops.add_registers(n, w.product);
            ops.add_registers(2 * n, acc);
            ops.add_registers(1, acc.sum_of(n));
            ops.add_registers(1, pixel);
            ops.rom_words = (n * n) as u32;
        }
        ArchKind::SeparableColRow | ArchKind::SeparableRowCol => {
            let first = w.product.sum_of(n);
            let second = Width::product(first, w.coeff);
            ops.multipliers = 2 * n as u32;
            ops.add_adders(2, 2 * (n as u32 - 1));
            if kind == ArchKind::SeparableColRow {
                ops.add_line_buffers(n - 1, image_width, pixel.bits);
                ops.add_registers(n, w.product);
                ops.add_registers(1, first);
                ops.add_registers(n, first);
            } else {
                ops.add_registers(n, pixel);
                ops.add_registers(n, w.product);
                ops.add_registers(1, first);
                ops.add_line_buffers(n - 1, image_width, first.bits);
            }
            ops.add_registers(n, second);
            ops.add_registers(1, second.sum_of(n));
            ops.add_registers(1, pixel);
            ops.rom_words = 2 * n as u32;
        }
        ArchKind::SymmetryOptimized => {
            let lanes = MAX_SYMMETRY_CLASSES;
            let lane_sum = pixel.sum_of(n * n);
            let lane_product = Width::product(lane_sum, w.coeff);
            ops.multipliers = lanes as u32;
            for orbit in symmetry_orbits(n) {
                ops.add_adders(orbit as u32, 1);
            }
            ops.add_adders(lanes as u32, 1);
            ops.add_line_buffers(n - 1, image_width, pixel.bits);
            ops.add_registers(n * n, pixel);
            ops.add_registers(lanes, lane_sum);
            ops.add_registers(lanes, lane_product);
            ops.add_registers(1, lane_product.sum_of(lanes));
            ops.add_registers(1, pixel);
            ops.rom_words = lanes as u32;
        }
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_parallel_3x3() {
        let ops = operation_counts(ArchKind::FullyParallel, 3, 64, FixedFormat::default());
        assert_eq!(ops.multipliers, 9);
        assert_eq!(ops.adders_total(), 8);
        assert_eq!(ops.adders_with_arity(2), 8);
        assert_eq!(ops.line_buffers.len(), 2);
        assert_eq!(
            ops.line_buffers[0],
            LineBufferSpec {
                depth: 64,
                word_bits: 8
            }
        );
    }

    #[test]
    fn mac_fir_5x5() {
        let ops = operation_counts(ArchKind::MacFirIterating, 5, 150, FixedFormat::default());
        assert_eq!(ops.multipliers, 5);
        assert_eq!(ops.line_buffers.len(), 5);
        assert_eq!(ops.adders_with_arity(5), 1);
        assert_eq!(ops.rom_words, 25);
    }

    #[test]
    fn separable_is_linear_in_size() {
        for kind in [ArchKind::SeparableColRow, ArchKind::SeparableRowCol] {
            for n in [3, 5, 7, 9] {
                let ops = operation_counts(kind, n, 64, FixedFormat::default());
                assert_eq!(ops.multipliers as usize, 2 * n);
                let full = operation_counts(ArchKind::FullyParallel, n, 64, FixedFormat::default());
                assert_eq!(full.multipliers as usize, n * n);
                assert!(full.multipliers > ops.multipliers);
            }
        }
        let ops = operation_counts(ArchKind::SeparableColRow, 5, 64, FixedFormat::default());
        assert_eq!(ops.multipliers, 10);
    }

    #[test]
    fn separable_line_buffer_words() {
        // 8 pixel bits + 16 coefficient bits + ceil(log2 5)
        let ops = operation_counts(ArchKind::SeparableRowCol, 5, 32, FixedFormat::default());
        assert!(ops.line_buffers.iter().all(|lb| lb.word_bits == 27));
        let ops = operation_counts(ArchKind::SeparableColRow, 5, 32, FixedFormat::default());
        assert!(ops.line_buffers.iter().all(|lb| lb.word_bits == 8));
    }

    #[test]
    fn symmetry_optimized_3x3() {
        let ops = operation_counts(ArchKind::SymmetryOptimized, 3, 64, FixedFormat::default());
        assert_eq!(ops.multipliers, 5);
        assert_eq!(ops.adders_with_arity(4), 2);
        assert_eq!(ops.adders_with_arity(5), 1);
        assert_eq!(ops.adders_total(), 3);
    }

    #[test]
    fn orbit_structure() {
        assert_eq!(symmetry_orbits(1), vec![1]);
        assert_eq!(symmetry_orbits(3), vec![1, 4, 4]);
        let five = symmetry_orbits(5);
        assert_eq!(five.iter().sum::<usize>(), 25);
        assert_eq!(five.len(), 6);
    }

    #[test]
    fn tree_levels() {
        let levels = adder_tree_levels(9, Width::signed(24));
        let counts: Vec<usize> = levels.iter().map(|l| l.0).collect();
        assert_eq!(counts, vec![5, 3, 2, 1]);
        assert_eq!(levels.last().unwrap().1, Width::signed(28));
        assert!(adder_tree_levels(1, Width::signed(24)).is_empty());
    }
}
