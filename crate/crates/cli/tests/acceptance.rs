//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use convsim_core::archs::{build, operation_counts, ArchKind, KernelInput};
use convsim_core::perfmodel::{params_from_report, DEFAULT_BUDGET_S};
use convsim_core::{
    add_gaussian_noise, convolve_direct, frame_time, gaussian_kernel, gradient, psnr, save_pgm,
    separable_gaussian, speedup, throughput_fps, FixedFormat, Image, Kernel2D, PerfParams, Psnr,
    SeparableKernel,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
}

fn random_dense(rng: &mut ChaCha8Rng, n: usize) -> Kernel2D {
    let lo = if rng.random_bool(0.3) { -2000 } else { 0 };
    let coeffs = (0..n * n).map(|_| rng.random_range(lo..=4000)).collect();
    Kernel2D::new(n, coeffs, FixedFormat::default()).unwrap()
}

fn random_separable(rng: &mut ChaCha8Rng, n: usize) -> SeparableKernel {
    let lo = if rng.random_bool(0.3) { -60 } else { 0 };
    let factor = |rng: &mut ChaCha8Rng| -> Vec<i64> {
        let mut v: Vec<i64> = (0..n).map(|_| rng.random_range(lo..=180)).collect();
        if v.iter().all(|&x| x == 0) {
            v[n / 2] = 1;
        }
        v
    };
    let col = factor(rng);
    let row = factor(rng);
    SeparableKernel::new(col, row, FixedFormat::new(12, 28).unwrap()).unwrap()
}

/// Mirror-symmetric, at most five distinct values.
fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Kernel2D {
    let palette: Vec<i64> = (0..5).map(|_| rng.random_range(-500..=3000)).collect();
    let h = n / 2;
    let quadrant: Vec<i64> = (0..(h + 1) * (h + 1))
        .map(|_| palette[rng.random_range(0..palette.len())])
        .collect();
    let coeffs = (0..n * n)
        .map(|k| quadrant[(k / n).abs_diff(h) * (h + 1) + (k % n).abs_diff(h)])
        .collect();
    Kernel2D::new(n, coeffs, FixedFormat::default()).unwrap()
}

fn random_kernel_for(kind: ArchKind, rng: &mut ChaCha8Rng, n: usize) -> KernelInput {
    match kind {
        ArchKind::SeparableColRow | ArchKind::SeparableRowCol => random_separable(rng, n).into(),
        ArchKind::SymmetryOptimized => random_symmetric(rng, n).into(),
        ArchKind::FullyParallel | ArchKind::MacFirIterating => random_dense(rng, n).into(),
    }
}

fn gaussian_5x5() -> SeparableKernel {
    separable_gaussian(5, 20.0, FixedFormat::default()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    let mut cases = 0;
    for kind in ArchKind::ALL {
        for case in 0..100 {
            let n = [3, 5, 7, 1, 5][case % 5];
            let w = rng.random_range(16..=64);
            let h = rng.random_range(16..=64);
            let img = random_image(&mut rng, w, h);
            let kernel = random_kernel_for(kind, &mut rng, n);
            let expected = convolve_direct(&img, &kernel.dense().unwrap()).unwrap();
            let (out, _) = build(kind, kernel, w)
                .and_then(|mut inst| inst.process_image(&img))
                .map_err(|e| format!("{kind} case {case}: {e}"))?;
            if let Some((r, c)) = out.first_difference(&expected).unwrap() {
                return Err(format!(
                    "{kind} case {case} ({w}x{h}, {n}x{n}) differs at ({r}, {c})"
                ));
            }
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || {
        format!("{cases} cases took {secs:.1} s, limit 30 s")
    })?;
    Ok(format!("{cases} cases bit-identical"))
}

fn separable_commutativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0002);
    for case in 0..50 {
        let n = [3, 5, 7][case % 3];
        let w = rng.random_range(16..=48);
        let h = rng.random_range(16..=48);
        let img = random_image(&mut rng, w, h);
        let sep = random_separable(&mut rng, n);
        let direct = convolve_direct(&img, &sep.outer().unwrap()).unwrap();
        let run = |kind| {
            build(kind, sep.clone(), w)
                .unwrap()
                .process_image(&img)
                .unwrap()
                .0
        };
        let col_row = run(ArchKind::SeparableColRow);
        let row_col = run(ArchKind::SeparableRowCol);
        ensure(col_row == row_col, || {
            format!("case {case}: pass orders disagree")
        })?;
        ensure(col_row == direct, || {
            format!("case {case}: differs from direct convolution")
        })?;
    }
    Ok("50 cases, both orders equal the direct convolution".into())
}

fn timing_contracts() -> Outcome {
    let img = gradient(150, 150);
    let mut seen = Vec::new();
    for kind in ArchKind::ALL {
        let (_, report) = build(kind, gaussian_5x5(), 150)
            .unwrap()
            .process_image(&img)
            .unwrap();
        let want = if kind == ArchKind::MacFirIterating {
            5
        } else {
            1
        };
        ensure(
            report.cycles_per_pixel_steady == Ratio::from_integer(want),
            || {
                format!(
                    "{kind}: {} cycles/pixel, expected {want}",
                    report.cycles_per_pixel_steady
                )
            },
        )?;
        seen.push(format!("{kind}={}", report.cycles_per_pixel_steady));
    }
    Ok(seen.join(" "))
}

fn throughput_arithmetic() -> Outcome {
    let cases = [
        (5u64, 64usize, 4882.8, 4883.0),
        (5, 150, 888.9, 889.0),
        (1, 256, 1525.9, 1526.0),
        (1, 150, 4444.4, 4444.0),
    ];
    let mut shown = Vec::new();
    for (cpp, side, expected, printed) in cases {
        let fps = throughput_fps(1e8, Ratio::from_integer(cpp), side, side);
        ensure((fps - expected).abs() <= 0.1, || {
            format!("{side}x{side} @ {cpp}: {fps}")
        })?;
        ensure(fps.round() == printed, || {
            format!("{fps} does not round to {printed}")
        })?;
        shown.push(format!("{fps:.1}"));
    }
    Ok(shown.join(" "))
}

fn frame_budget_regression() -> Outcome {
    let p = PerfParams::new(22500, Ratio::from_integer(1), 350, 1e8).unwrap();
    let r = frame_time(&p, DEFAULT_BUDGET_S);
    ensure(r.total_cycles_c == 22850.0, || {
        format!("C = {}", r.total_cycles_c)
    })?;
    ensure(
        (r.frame_time_s - 2.285e-4).abs() <= 2.285e-4 * f64::EPSILON,
        || format!("t_frame = {}", r.frame_time_s),
    )?;
    ensure(r.meets_budget, || "misses the 33 ms budget".into())?;
    let s = speedup(0.008, r.frame_time_s);
    ensure((s - 35.01).abs() <= 0.01, || format!("speedup {s}"))?;
    Ok(format!("t_frame = {:e} s, speedup {s:.2}", r.frame_time_s))
}

fn operation_count_checks() -> Outcome {
    let format = FixedFormat::default();
    let fp = operation_counts(ArchKind::FullyParallel, 3, 150, format);
    ensure(fp.multipliers == 9 && fp.adders_total() == 8, || {
        format!(
            "fully parallel 3x3: {} / {}",
            fp.multipliers,
            fp.adders_total()
        )
    })?;
    for kind in [ArchKind::SeparableColRow, ArchKind::SeparableRowCol] {
        let m = operation_counts(kind, 5, 150, format).multipliers;
        ensure(m == 10, || format!("{kind} size 5: {m} multipliers"))?;
        let built = build(kind, gaussian_5x5(), 150)
            .unwrap()
            .op_count()
            .multipliers;
        ensure(built == 10, || format!("built {kind}: {built} multipliers"))?;
    }
    let k3 = gaussian_kernel(3, 0.8493218, format).unwrap();
    ensure(
        k3.coeffs() == [64, 128, 64, 128, 256, 128, 64, 128, 64],
        || format!("3x3 kernel {:?}", k3.coeffs()),
    )?;
    let sym = build(ArchKind::SymmetryOptimized, k3.clone(), 150)
        .unwrap()
        .op_count();
    ensure(
        sym.multipliers == 5 && sym.adders_with_arity(4) == 2,
        || {
            format!(
                "symmetry 3x3: {} multipliers, {:?}",
                sym.multipliers, sym.adders
            )
        },
    )?;
    let built_fp = build(ArchKind::FullyParallel, k3, 150).unwrap().op_count();
    ensure(built_fp == fp, || {
        "built fully parallel differs from the analytic count".into()
    })?;
    Ok("9/8, 10, 5 + 2x arity-4".into())
}

fn model_matches_simulation() -> Outcome {
    let img = gradient(150, 150);
    let clock_hz = 1e8;
    let mut worst: f64 = 0.0;
    for kind in ArchKind::ALL {
        let (_, report) = build(kind, gaussian_5x5(), 150)
            .unwrap()
            .process_image(&img)
            .unwrap();
        let model =
            frame_time(&params_from_report(&report, clock_hz), DEFAULT_BUDGET_S).frame_time_s;
        let simulated = report.total_cycles as f64 / clock_hz;
        let rel = (model - simulated).abs() / simulated;
        ensure(rel <= 1e-3, || {
            format!("{kind}: model {model} vs simulated {simulated}")
        })?;
        worst = worst.max(rel);
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn fidelity() -> Outcome {
    let start = Instant::now();
    let clean = gradient(150, 150);
    let noisy = add_gaussian_noise(&clean, 0.005, 2024);
    let before = psnr(&noisy, &clean).unwrap();
    let mut after: Option<Psnr> = None;
    for kind in ArchKind::ALL {
        let (out, _) = build(kind, gaussian_5x5(), 150)
            .unwrap()
            .process_image(&noisy)
            .unwrap();
        let p = psnr(&out, &clean).unwrap();
        ensure(p.db() - before.db() >= 3.0, || {
            format!("{kind}: {before} dB -> {p} dB")
        })?;
        if let Some(first) = after {
            ensure(first == p, || {
                format!("{kind}: {p} dB differs from {first} dB")
            })?;
        }
        after = Some(p);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.1} s, limit 5 s"))?;
    Ok(format!(
        "{before} dB -> {} dB on every architecture",
        after.unwrap()
    ))
}

fn compare_is_deterministic() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let input = dir.path().join("gradient.pgm");
    std::fs::write(&input, save_pgm(&gradient(64, 48), true)).map_err(|e| e.to_string())?;
    let input = input.to_string_lossy().into_owned();
    let argv = [
        "convsim",
        "compare",
        &input,
        "--gaussian",
        "5",
        "20",
        "--noise-variance",
        "0.005",
        "--seed",
        "42",
    ];
    let mut reports = Vec::new();
    for _ in 0..3 {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = convsim_cli::run(argv, &mut out, &mut err);
        ensure(code == 0, || {
            format!("exit {code}: {}", String::from_utf8_lossy(&err))
        })?;
        reports.push(out);
    }
    ensure(reports.iter().all(|r| r == &reports[0]), || {
        "reports differ between runs".into()
    })?;
    Ok(format!("3 runs, {} identical bytes", reports[0].len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("separable commutativity", separable_commutativity),
        ("timing contracts", timing_contracts),
        ("throughput arithmetic", throughput_arithmetic),
        ("frame budget regression", frame_budget_regression),
        ("operation counts", operation_count_checks),
        ("frame model vs simulation", model_matches_simulation),
        ("denoising fidelity", fidelity),
        ("report determinism", compare_is_deterministic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}) [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
