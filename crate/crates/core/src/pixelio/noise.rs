//! Additive white Gaussian noise with a pinned, portable generator.
//!
//! The generator is SplitMix64 seeded directly with the user seed. Each pair
//! of 64-bit draws `(a, b)` becomes two uniforms on (0, 1] via
//! `((x >> 11) + 1) * 2^-53`, and Box-Muller turns them into two standard
//! normals: `sqrt(-2 ln u1) * cos(2 pi u2)` for the even pixel and
//! `sqrt(-2 ln u1) * sin(2 pi u2)` for the odd pixel that follows it.

use std::f64::consts::TAU;

use super::{round_half_away, Image};

/// Vigna's SplitMix64.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on (0, 1] with 53 bits of resolution.
    pub fn next_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normal draws.
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_open_closed();
        let u2 = self.next_open_closed();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = TAU * u2;
        (radius * angle.cos(), radius * angle.sin())
    }
}

/// `out = clamp(round(in + 255 * sqrt(variance) * z), 0, 255)` per pixel,
/// with `variance` on the [0, 1] intensity scale. Zero variance is the
/// identity.
///
/// # Panics
///
/// Panics if `variance` is negative or not finite.
pub fn add_gaussian_noise(image: &Image, variance: f64, seed: u64) -> Image {
    assert!(
        variance >= 0.0 && variance.is_finite(),
        "noise variance must be a finite non-negative number"
    );
    if variance == 0.0 {
        return image.clone();
    }
    let sigma = 255.0 * variance.sqrt();
    let mut rng = SplitMix64::new(seed);
    let mut pixels = Vec::with_capacity(image.len());
    for pair in image.pixels().chunks(2) {
        let (z0, z1) = rng.next_normal_pair();
        for (&p, z) in pair.iter().zip([z0, z1]) {
            let v = round_half_away(f64::from(p) + sigma * z).clamp(0.0, 255.0);
            pixels.push(v as u8);
        }
    }
    Image::new(image.width(), image.height(), pixels).expect("dimensions unchanged")
}
