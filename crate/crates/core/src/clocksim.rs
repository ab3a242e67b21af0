//! Two-phase clocked elements.
//!
//! Every element keeps a committed state, readable at any time, and a staged
//! next state. A clock step first evaluates all combinational logic against
//! committed state only (phase 1), then commits every staged value at once
//! (phase 2). Evaluation order inside phase 1 therefore cannot affect the
//! result. All state resets to zero.

use std::fmt::Write as _;

use thiserror::Error;

/// Datapath word. Declared hardware widths are tracked separately and checked.
pub type Word = i64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("{element}: value {value} overflows {width}")]
    Overflow {
        element: &'static str,
        value: i128,
        width: Width,
    },
    #[error("pipeline produced no output after {cycles} cycles")]
    Stalled { cycles: u64 },
    #[error("output for pixel {got} arrived out of order, expected pixel {expected}")]
    OutOfOrder { expected: u64, got: i64 },
}

/// Declared width of a hardware word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Width {
    pub bits: u32,
    pub signed: bool,
}

impl std::fmt::Display for Width {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = if self.signed { "signed" } else { "unsigned" };
        write!(f, "{} {kind} bits", self.bits)
    }
}

impl Width {
    pub const PIXEL: Width = Width::unsigned(8);

    pub const fn signed(bits: u32) -> Self {
        Self { bits, signed: true }
    }

    pub const fn unsigned(bits: u32) -> Self {
        Self {
            bits,
            signed: false,
        }
    }

    pub fn fits(&self, value: i128) -> bool {
        // widths beyond 64 bits are bounded by the i64 datapath word
        let bits = self.bits.min(64);
        if self.signed {
            let half = 1i128 << (bits - 1);
            (-half..half).contains(&value)
        } else {
            value >= 0 && value < (1i128 << bits) && value <= i64::MAX as i128
        }
    }

    /// Validates `value` against this width and narrows it to a [`Word`].
    pub fn check(&self, element: &'static str, value: i128) -> Result<Word, SimError> {
        if self.fits(value) {
            Ok(value as Word)
        } else {
            Err(SimError::Overflow {
                element,
                value,
                width: *self,
            })
        }
    }

    /// Width of a signed product of operands of these widths.
    pub fn product(a: Width, b: Width) -> Width {
        Width::signed(a.bits + b.bits + u32::from(!a.signed && !b.signed))
    }

    /// Width of a sum of `count` operands of this width.
    pub fn sum_of(self, count: usize) -> Width {
        Width::signed(self.bits + u32::from(!self.signed) + ceil_log2(count))
    }
}

pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Elapsed clock edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockCounter {
    cycles: u64,
    period_ns: f64,
}

impl Default for ClockCounter {
    fn default() -> Self {
        Self::new(10.0)
    }
}

impl ClockCounter {
    pub fn new(period_ns: f64) -> Self {
        Self {
            cycles: 0,
            period_ns,
        }
    }

    pub fn tick(&mut self) {
        self.cycles += 1;
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn period_ns(&self) -> f64 {
        self.period_ns
    }

    pub fn elapsed_ns(&self) -> f64 {
        self.cycles as f64 * self.period_ns
    }

    pub fn reset(&mut self) {
        self.cycles = 0;
    }
}

/// Phase-2 half of the clocking protocol.
pub trait Sequential {
    fn commit(&mut self);
    fn reset(&mut self);
}

/// Edge-triggered register. Holds its value when not driven.
#[derive(Debug, Clone)]
pub struct Register<T: Clone> {
    q: T,
    d: T,
    init: T,
}

impl<T: Clone> Register<T> {
    pub fn new(init: T) -> Self {
        Self {
            q: init.clone(),
            d: init.clone(),
            init,
        }
    }

    /// Committed output.
    pub fn get(&self) -> &T {
        &self.q
    }

    /// Stages the value loaded on the next edge.
    pub fn set(&mut self, value: T) {
        self.d = value;
    }
}

impl<T: Clone> Sequential for Register<T> {
    fn commit(&mut self) {
        self.q = self.d.clone();
    }

    fn reset(&mut self) {
        self.q = self.init.clone();
        self.d = self.init.clone();
    }
}

/// Single-port RAM used as a one-row delay line.
///
/// A read returns the word at the write pointer, i.e. the word written
/// `depth` writes earlier; the staged write lands at the same address on the
/// edge and the pointer advances.
#[derive(Debug, Clone)]
pub struct LineBuffer {
    width: Width,
    storage: Vec<Word>,
    write_index: usize,
    pending: Option<Word>,
}

impl LineBuffer {
    pub fn new(depth: usize, width: Width) -> Self {
        assert!(depth >= 1, "line buffer depth must be at least 1");
        Self {
            width,
            storage: vec![0; depth],
            write_index: 0,
            pending: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.storage.len()
    }

    pub fn width(&self) -> Width {
        self.width
    }

    pub fn read(&self) -> Word {
        self.storage[self.write_index]
    }

    pub fn write(&mut self, value: Word) -> Result<(), SimError> {
        self.pending = Some(self.width.check("line buffer", value.into())?);
        Ok(())
    }
}

impl Sequential for LineBuffer {
    fn commit(&mut self) {
        if let Some(v) = self.pending.take() {
            self.storage[self.write_index] = v;
            self.write_index = (self.write_index + 1) % self.storage.len();
        }
    }

    fn reset(&mut self) {
        self.storage.fill(0);
        self.write_index = 0;
        self.pending = None;
    }
}

/// Shift register whose taps are readable by address; address 0 is the
/// newest sample.
#[derive(Debug, Clone)]
pub struct AddressableShiftRegister {
    width: Width,
    taps: Vec<Word>,
    pending: Option<Word>,
}

impl AddressableShiftRegister {
    pub fn new(depth: usize, width: Width) -> Self {
        assert!(depth >= 1, "shift register depth must be at least 1");
        Self {
            width,
            taps: vec![0; depth],
            pending: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.taps.len()
    }

    pub fn read(&self, address: usize) -> Word {
        self.taps[address]
    }

    pub fn shift_in(&mut self, value: Word) -> Result<(), SimError> {
        self.pending = Some(self.width.check("shift register", value.into())?);
        Ok(())
    }
}

impl Sequential for AddressableShiftRegister {
    fn commit(&mut self) {
        if let Some(v) = self.pending.take() {
            self.taps.rotate_right(1);
            self.taps[0] = v;
        }
    }

    fn reset(&mut self) {
        self.taps.fill(0);
        self.pending = None;
    }
}

/// Read-only coefficient store with combinational reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientRom {
    words: Vec<Word>,
}

impl CoefficientRom {
    pub fn new(words: Vec<Word>) -> Self {
        Self { words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn read(&self, address: usize) -> Word {
        self.words[address]
    }
}

/// `acc + sample * coeff`, checked against the accumulator width.
pub fn mac(acc: Word, sample: Word, coeff: Word, width: Width) -> Result<Word, SimError> {
    let value = i128::from(acc) + i128::from(sample) * i128::from(coeff);
    width.check("mac", value)
}

/// One sample of a clocked stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Sample {
    pub value: Word,
    pub valid: bool,
}

impl Sample {
    pub fn valid(value: Word) -> Self {
        Self { value, valid: true }
    }

    pub const INVALID: Sample = Sample {
        value: 0,
        valid: false,
    };
}

/// One sample per clock.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PixelStream(pub Vec<Sample>);

impl PixelStream {
    pub fn from_values(values: impl IntoIterator<Item = Word>) -> Self {
        Self(values.into_iter().map(Sample::valid).collect())
    }

    pub fn valid_count(&self) -> usize {
        self.0.iter().filter(|s| s.valid).count()
    }

    pub fn valid_values(&self) -> Vec<Word> {
        self.0.iter().filter(|s| s.valid).map(|s| s.value).collect()
    }
}

/// Keeps the `factor`-th, `2 * factor`-th, ... valid samples, the ones that
/// close a `factor`-tap accumulation; all other clocks become invalid.
///
/// # Panics
///
/// Panics if `factor` is zero.
pub fn downsample(stream: &PixelStream, factor: usize) -> PixelStream {
    assert!(factor >= 1, "downsample factor must be at least 1");
    let mut seen = 0;
    PixelStream(
        stream
            .0
            .iter()
            .map(|s| {
                if !s.valid {
                    return Sample::INVALID;
                }
                seen += 1;
                if seen % factor == 0 {
                    *s
                } else {
                    Sample::INVALID
                }
            })
            .collect(),
    )
}

/// Capture register plus modulo-`factor` counter: the clocked form of
/// [`downsample`], carrying an arbitrary payload.
#[derive(Debug, Clone)]
pub struct Downsampler<T: Clone> {
    factor: u32,
    count: Register<u32>,
    capture: Register<Option<T>>,
}

impl<T: Clone> Downsampler<T> {
    pub fn new(factor: u32) -> Self {
        assert!(factor >= 1, "downsample factor must be at least 1");
        Self {
            factor,
            count: Register::new(0),
            capture: Register::new(None),
        }
    }

    pub fn eval(&mut self, input: Option<T>) {
        match input {
            Some(v) => {
                let c = *self.count.get();
                if c + 1 == self.factor {
                    self.capture.set(Some(v));
                    self.count.set(0);
                } else {
                    self.capture.set(None);
                    self.count.set(c + 1);
                }
            }
            None => self.capture.set(None),
        }
    }

    pub fn output(&self) -> Option<&T> {
        self.capture.get().as_ref()
    }
}

impl<T: Clone> Sequential for Downsampler<T> {
    fn commit(&mut self) {
        self.count.commit();
        self.capture.commit();
    }

    fn reset(&mut self) {
        self.count.reset();
        self.capture.reset();
    }
}

/// A composed clocked circuit.
pub trait Circuit {
    type Input;
    type Output;

    /// Phase 1: compute every staged value from committed state and `input`.
    fn eval(&mut self, input: &Self::Input) -> Result<(), SimError>;
    /// Phase 2: commit all staged values.
    fn commit(&mut self);
    fn reset(&mut self);
    /// Committed output.
    fn output(&self) -> Self::Output;
    /// Reports named signal values for tracing.
    fn probe(&self, _sink: &mut dyn FnMut(&'static str, Word)) {}
}

/// Per-cycle signal log, written as `cycle,signal_name,value` CSV.
#[derive(Debug, Clone, Default)]
pub struct TraceRecorder {
    watched: Vec<String>,
    rows: Vec<(u64, &'static str, Word)>,
}

impl TraceRecorder {
    /// Records only the named signals; an empty list records everything.
    pub fn new(watched: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            watched: watched.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn wants(&self, name: &str) -> bool {
        self.watched.is_empty() || self.watched.iter().any(|w| w == name)
    }

    pub fn record(&mut self, cycle: u64, name: &'static str, value: Word) {
        if self.wants(name) {
            self.rows.push((cycle, name, value));
        }
    }

    pub fn capture<C: Circuit + ?Sized>(&mut self, cycle: u64, circuit: &C) {
        circuit.probe(&mut |name, value| self.record(cycle, name, value));
    }

    pub fn rows(&self) -> &[(u64, &'static str, Word)] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,signal_name,value\n");
        for (cycle, name, value) in &self.rows {
            let _ = writeln!(out, "{cycle},{name},{value}");
        }
        out
    }
}

/// Drives a circuit one clock edge at a time.
pub struct Simulator<C: Circuit> {
    circuit: C,
    clock: ClockCounter,
    trace: Option<TraceRecorder>,
}

impl<C: Circuit> Simulator<C> {
    pub fn new(circuit: C, period_ns: f64) -> Self {
        Self {
            circuit,
            clock: ClockCounter::new(period_ns),
            trace: None,
        }
    }

    pub fn with_trace(mut self, trace: TraceRecorder) -> Self {
        self.trace = Some(trace);
        self
    }

    /// One clock edge; returns the output committed by it.
    pub fn step(&mut self, input: &C::Input) -> Result<C::Output, SimError> {
        self.circuit.eval(input)?;
        self.circuit.commit();
        self.clock.tick();
        if let Some(trace) = self.trace.as_mut() {
            trace.capture(self.clock.cycles(), &self.circuit);
        }
        Ok(self.circuit.output())
    }

    pub fn reset(&mut self) {
        self.circuit.reset();
        self.clock.reset();
    }

    pub fn clock(&self) -> &ClockCounter {
        &self.clock
    }

    pub fn circuit(&self) -> &C {
        &self.circuit
    }

    pub fn circuit_mut(&mut self) -> &mut C {
        &mut self.circuit
    }

    pub fn take_trace(&mut self) -> Option<TraceRecorder> {
        self.trace.take()
    }
}
