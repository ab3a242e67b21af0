//! The reference convolution against an independently written brute force.

use convsim_core::{
    convolve_direct, convolve_separable, FixedFormat, Image, Kernel2D, PassOrder, SeparableKernel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nearest integer to `a / b`, ties away from zero, via Euclidean division.
fn rounded_quotient(a: i128, b: i128) -> i128 {
    let (a, b) = if b < 0 { (-a, -b) } else { (a, b) };
    let q = a.div_euclid(b);
    let r = a.rem_euclid(b);
    // a/b = q + r/b with 0 <= r < b
    match (2 * r).cmp(&b) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        // exact tie: away from zero
        std::cmp::Ordering::Equal => {
            if q >= 0 {
                q + 1
            } else {
                q
            }
        }
    }
}

/// Quadruple loop over output pixels and window taps, zero outside the image.
fn brute_force(pixels: &[u8], w: usize, h: usize, k: &[i64], n: usize, frac: u32) -> Vec<u8> {
    let sum: i128 = k.iter().map(|&c| c as i128).sum();
    let half = (n / 2) as i64;
    let mut out = vec![0u8; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc: i128 = 0;
            for dy in -half..=half {
                for dx in -half..=half {
                    let (sy, sx) = (y + dy, x + dx);
                    if sy < 0 || sx < 0 || sy >= h as i64 || sx >= w as i64 {
                        continue;
                    }
                    let p = pixels[(sy as usize) * w + sx as usize] as i128;
                    let c = k[((dy + half) as usize) * n + (dx + half) as usize] as i128;
                    acc += p * c;
                }
            }
            let v = if sum != 0 {
                rounded_quotient(acc, sum)
            } else {
                rounded_quotient(acc.abs(), 1i128 << frac)
            };
            out[(y as usize) * w + x as usize] = v.clamp(0, 255) as u8;
        }
    }
    out
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
}

#[test]
fn direct_matches_brute_force_on_random_8x8() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let format = FixedFormat::default();
    for case in 0..150 {
        let img = random_image(&mut rng, 8, 8);
        let coeffs: Vec<i64> = (0..9)
            .map(|_| match case % 3 {
                0 => rng.random_range(0..=512),
                1 => rng.random_range(-300..=300),
                _ => rng.random_range(-4..=4),
            })
            .collect();
        let k = Kernel2D::new(3, coeffs.clone(), format).unwrap();
        let expected = brute_force(img.pixels(), 8, 8, &coeffs, 3, 8);
        assert_eq!(
            convolve_direct(&img, &k).unwrap().pixels(),
            &expected[..],
            "case {case}"
        );
    }
}

#[test]
fn direct_matches_brute_force_other_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (n, w, h) in [(1, 5, 3), (5, 9, 6), (7, 7, 11)] {
        for _ in 0..10 {
            let img = random_image(&mut rng, w, h);
            let coeffs: Vec<i64> = (0..n * n).map(|_| rng.random_range(-64..=255)).collect();
            let k = Kernel2D::new(n, coeffs.clone(), FixedFormat::new(6, 12).unwrap()).unwrap();
            let expected = brute_force(img.pixels(), w, h, &coeffs, n, 6);
            assert_eq!(convolve_direct(&img, &k).unwrap().pixels(), &expected[..]);
        }
    }
}

#[test]
fn zero_sum_kernels_use_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sobel = [-256, 0, 256, -512, 0, 512, -256, 0, 256];
    let k = Kernel2D::new(3, sobel.to_vec(), FixedFormat::default()).unwrap();
    assert_eq!(k.coeff_sum(), 0);
    for _ in 0..20 {
        let img = random_image(&mut rng, 10, 9);
        let expected = brute_force(img.pixels(), 10, 9, &sobel, 3, 8);
        assert_eq!(convolve_direct(&img, &k).unwrap().pixels(), &expected[..]);
    }
}

#[test]
fn separable_orders_agree_with_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..60 {
        let n = [1, 3, 5][case % 3];
        let col: Vec<i64> = (0..n).map(|_| rng.random_range(-20..=40)).collect();
        let row: Vec<i64> = (0..n).map(|_| rng.random_range(-20..=40)).collect();
        let sep = SeparableKernel::new(col, row, FixedFormat::new(4, 16).unwrap()).unwrap();
        let (w, h) = (rng.random_range(n..12), rng.random_range(n..12));
        let img = random_image(&mut rng, w, h);
        let direct = convolve_direct(&img, &sep.outer().unwrap()).unwrap();
        let col_first = convolve_separable(&img, &sep, PassOrder::ColFirst).unwrap();
        let row_first = convolve_separable(&img, &sep, PassOrder::RowFirst).unwrap();
        assert_eq!(col_first, row_first, "case {case}");
        assert_eq!(col_first, direct, "case {case}");
    }
}

#[test]
fn linear_when_nothing_rounds_or_clamps() {
    // coefficient sum 2; even pixels keep most window sums exactly divisible
    let k = Kernel2D::new(
        3,
        vec![0, 1, 0, 1, -2, 1, 0, 1, 0],
        FixedFormat::new(0, 8).unwrap(),
    )
    .unwrap();
    assert_eq!(k.coeff_sum(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let a = Image::new(
            6,
            6,
            (0..36).map(|_| 2 * rng.random_range(0..32u8)).collect(),
        )
        .unwrap();
        let b = Image::new(
            6,
            6,
            (0..36).map(|_| 2 * rng.random_range(0..32u8)).collect(),
        )
        .unwrap();
        let sum = Image::new(
            6,
            6,
            a.pixels()
                .iter()
                .zip(b.pixels())
                .map(|(x, y)| x + y)
                .collect(),
        )
        .unwrap();
        let fa = brute_sums(&a, &k);
        let fb = brute_sums(&b, &k);
        let fs = brute_sums(&sum, &k);
        for i in 0..36 {
            assert_eq!(fs[i], fa[i] + fb[i]);
        }
        let ca = convolve_direct(&a, &k).unwrap();
        let cb = convolve_direct(&b, &k).unwrap();
        let cs = convolve_direct(&sum, &k).unwrap();
        for i in 0..36 {
            let unclamped = |v: i64| (0..=255).contains(&(v / 2)) && v % 2 == 0;
            if unclamped(fa[i]) && unclamped(fb[i]) && unclamped(fs[i]) {
                assert_eq!(cs.pixels()[i], ca.pixels()[i] + cb.pixels()[i]);
            }
        }
    }
}

fn brute_sums(img: &Image, k: &Kernel2D) -> Vec<i64> {
    let mut out = Vec::new();
    for r in 0..img.height() as isize {
        for c in 0..img.width() as isize {
            let mut acc = 0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += i64::from(img.get_padded(r + i - 1, c + j - 1))
                        * k.get(i as usize, j as usize);
                }
            }
            out.push(acc);
        }
    }
    out
}
