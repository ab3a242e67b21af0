use std::io::Write;
use std::path::Path;

use convsim_core::archs::{ArchInstance, KernelInput};
use convsim_core::perfmodel::{
    analytic_candidate, measured_candidate, params_from_report, DEFAULT_BUDGET_S,
};
use convsim_core::{
    add_gaussian_noise, build, convolve_direct, explore, frame_time, load_pgm, psnr, save_pgm,
    ArchError, ArchKind, Constraints, CycleReport, FixedFormat, Image, TraceRecorder,
};

use crate::args::{
    Command, CompareArgs, ExploreArgs, FilterArgs, GenKernelArgs, NoiseArgs, PsnrArgs,
};
use crate::kernel_spec::{self, format_kernel_text, gaussian_rows};
use crate::report::{
    sha256_hex, ArchRun, Exploration, NoiseSettings, PsnrPair, RunReport, Skipped,
};
use crate::{Cli, CliError};

pub fn dispatch(cli: Cli, echo: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Filter(a) => cmd_filter(&a, echo, out),
        Command::Compare(a) => cmd_compare(&a, echo, out),
        Command::Explore(a) => cmd_explore(&a, echo, out),
        Command::Noise(a) => cmd_noise(&a),
        Command::Psnr(a) => cmd_psnr(&a, out),
        Command::GenKernel(a) => cmd_gen_kernel(&a, out),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read_pgm(path: &Path) -> Result<(Image, Vec<u8>), CliError> {
    let bytes = read(path)?;
    let image = load_pgm(&bytes).map_err(|source| CliError::Pgm {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((image, bytes))
}

fn clock_hz(mhz: f64) -> Result<f64, CliError> {
    if mhz > 0.0 && mhz.is_finite() {
        Ok(mhz * 1e6)
    } else {
        Err(CliError::Usage(format!(
            "--clock-mhz must be positive, found {mhz}"
        )))
    }
}

fn check_variance(variance: f64) -> Result<(), CliError> {
    if variance >= 0.0 && variance.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "noise variance must be non-negative, found {variance}"
        )))
    }
}

fn emit(report: &RunReport, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let json = report.to_json()?;
    match path {
        Some(p) => write(p, json.as_bytes()),
        None => out
            .write_all(json.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn build_instance(
    kind: ArchKind,
    kernel: &KernelInput,
    width: usize,
    clock_hz: f64,
) -> Result<ArchInstance, ArchError> {
    Ok(build(kind, kernel.clone(), width)?.with_clock_period_ns(1e9 / clock_hz))
}

/// Result of one architecture checked against the reference output.
fn arch_run(
    inst: &ArchInstance,
    output: &Image,
    cycles: CycleReport,
    expected: &Image,
    reference: Option<(&Image, &Image)>,
    clock_hz: f64,
) -> Result<(ArchRun, Option<(usize, usize)>), CliError> {
    let diff = output.first_difference(expected)?;
    let psnr = match reference {
        Some((input, clean)) => Some(PsnrPair {
            input_db: psnr(input, clean)?,
            output_db: psnr(output, clean)?,
        }),
        None => None,
    };
    let op_count = inst.op_count();
    let measured = measured_candidate(
        inst.kind(),
        op_count.clone(),
        &cycles,
        clock_hz,
        DEFAULT_BUDGET_S,
    )
    .perf;
    let model = frame_time(&params_from_report(&cycles, clock_hz), DEFAULT_BUDGET_S);
    let run = ArchRun {
        kind: inst.kind(),
        oracle_match: diff.is_none(),
        output_sha256: sha256_hex(output.pixels()),
        cycle_report: cycles,
        op_count,
        measured,
        model,
        psnr,
    };
    Ok((run, diff))
}

pub fn cmd_filter(
    args: &FilterArgs,
    echo: Vec<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let clock_hz = clock_hz(args.clock_mhz)?;
    let (image, input_bytes) = read_pgm(&args.input)?;
    let (kernel, summary, kernel_bytes) = kernel_spec::load(&args.kernel)?;
    let mut report = RunReport::new("filter", echo);
    report.add_input("input", &args.input, &input_bytes);
    if let (Some(path), Some(bytes)) = (&args.kernel.kernel, &kernel_bytes) {
        report.add_input("kernel", path, bytes);
    }
    let clean = match &args.reference {
        Some(path) => {
            let (clean, bytes) = read_pgm(path)?;
            report.add_input("reference", path, &bytes);
            Some(clean)
        }
        None => None,
    };

    let mut inst = build_instance(args.arch, &kernel, image.width(), clock_hz)?;
    let (output, cycles) = match &args.trace {
        Some(path) => {
            let (output, cycles, trace) =
                inst.process_image_traced(&image, TraceRecorder::new(Vec::<String>::new()))?;
            write(path, trace.to_csv().as_bytes())?;
            (output, cycles)
        }
        None => inst.process_image(&image)?,
    };
    let expected =
        convolve_direct(&image, &kernel.dense()?).map_err(|e| CliError::Usage(e.to_string()))?;
    let (run, diff) = arch_run(
        &inst,
        &output,
        cycles,
        &expected,
        clean.as_ref().map(|c| (&image, c)),
        clock_hz,
    )?;

    write(&args.output, &save_pgm(&output, !args.ascii))?;
    report.kernel = Some(summary);
    report.clock_hz = Some(clock_hz);
    report.runs.push(run);
    emit(&report, args.report.as_deref(), out)?;
    match diff {
        Some((row, col)) => Err(CliError::Mismatch {
            kind: args.arch,
            row,
            col,
        }),
        None => Ok(()),
    }
}

/// Kernel rejections that mean "this architecture cannot run it" rather
/// than a bad invocation.
fn incompatible(e: &ArchError) -> bool {
    matches!(
        e,
        ArchError::Kernel(convsim_core::KernelError::NotSeparable)
            | ArchError::Incompatible { .. }
            | ArchError::SymmetryClassOverflow { .. }
    )
}

pub fn cmd_compare(
    args: &CompareArgs,
    echo: Vec<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let clock_hz = clock_hz(args.clock_mhz)?;
    let (clean, input_bytes) = read_pgm(&args.input)?;
    let (kernel, summary, kernel_bytes) = kernel_spec::load(&args.kernel)?;
    let mut report = RunReport::new("compare", echo);
    report.add_input("input", &args.input, &input_bytes);
    if let (Some(path), Some(bytes)) = (&args.kernel.kernel, &kernel_bytes) {
        report.add_input("kernel", path, bytes);
    }
    let image = match args.noise_variance {
        Some(variance) => {
            check_variance(variance)?;
            report.noise = Some(NoiseSettings {
                variance,
                seed: args.seed,
            });
            add_gaussian_noise(&clean, variance, args.seed)
        }
        None => clean.clone(),
    };

    let mut instances = Vec::new();
    for kind in ArchKind::ALL {
        match build_instance(kind, &kernel, image.width(), clock_hz) {
            Ok(inst) => instances.push(inst),
            Err(e) if incompatible(&e) => report.skipped.push(Skipped {
                kind,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    if instances.len() < 2 {
        return Err(CliError::Usage(format!(
            "kernel runs on {} architecture(s), compare needs at least two",
            instances.len()
        )));
    }

    let results: Vec<Result<(Image, CycleReport), ArchError>> = std::thread::scope(|s| {
        let handles: Vec<_> = instances
            .iter_mut()
            .map(|inst| s.spawn(|| inst.process_image(&image)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("architecture thread panicked"))
            .collect()
    });

    let expected =
        convolve_direct(&image, &kernel.dense()?).map_err(|e| CliError::Usage(e.to_string()))?;
    let reference = args.noise_variance.map(|_| (&image, &clean));
    let mut first_mismatch = None;
    for (inst, result) in instances.iter().zip(results) {
        let (output, cycles) = result?;
        let (run, diff) = arch_run(inst, &output, cycles, &expected, reference, clock_hz)?;
        if let (None, Some((row, col))) = (&first_mismatch, diff) {
            first_mismatch = Some(CliError::Mismatch {
                kind: inst.kind(),
                row,
                col,
            });
        }
        report.runs.push(run);
    }
    report.kernel = Some(summary);
    report.clock_hz = Some(clock_hz);
    emit(&report, args.report.as_deref(), out)?;
    match first_mismatch {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn cmd_explore(
    args: &ExploreArgs,
    echo: Vec<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let clock_hz = clock_hz(args.clock_mhz)?;
    if args.width == 0 || args.height == 0 {
        return Err(CliError::Usage(
            "--width and --height must be positive".into(),
        ));
    }
    if args.size.is_multiple_of(2) || args.size > args.width.min(args.height) {
        return Err(CliError::Usage(format!(
            "--size must be odd and fit the image, found {}",
            args.size
        )));
    }
    if args.budget_ms.is_nan() || args.budget_ms <= 0.0 {
        return Err(CliError::Usage("--budget-ms must be positive".into()));
    }
    let format = FixedFormat::new(args.frac_bits, args.total_bits)?;
    let constraints = Constraints {
        budget_s: args.budget_ms / 1e3,
        max_multipliers: args.max_mult,
        width: args.width,
        height: args.height,
        clock_hz,
    };
    let considered: Vec<_> = ArchKind::ALL
        .iter()
        .map(|&k| analytic_candidate(k, args.size, format, &constraints))
        .collect();
    let ranking = explore(&considered, &constraints)
        .iter()
        .map(|c| c.kind)
        .collect();
    let mut report = RunReport::new("explore", echo);
    report.clock_hz = Some(clock_hz);
    report.exploration = Some(Exploration {
        constraints,
        considered,
        ranking,
    });
    emit(&report, args.report.as_deref(), out)
}

pub fn cmd_noise(args: &NoiseArgs) -> Result<(), CliError> {
    check_variance(args.variance)?;
    let (image, _) = read_pgm(&args.input)?;
    let noisy = add_gaussian_noise(&image, args.variance, args.seed);
    write(&args.output, &save_pgm(&noisy, !args.ascii))
}

pub fn cmd_psnr(args: &PsnrArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (a, _) = read_pgm(&args.a)?;
    let (b, _) = read_pgm(&args.b)?;
    let value = psnr(&a, &b)?;
    writeln!(out, "{value}").map_err(|e| CliError::io("<stdout>", e))
}

pub fn cmd_gen_kernel(args: &GenKernelArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.size == 0 || args.size.is_multiple_of(2) {
        return Err(CliError::Usage(format!(
            "--size must be odd, found {}",
            args.size
        )));
    }
    if !(args.sigma > 0.0 && args.sigma.is_finite()) {
        return Err(CliError::Usage(format!(
            "--sigma must be positive, found {}",
            args.sigma
        )));
    }
    let text = format_kernel_text(&gaussian_rows(args.size, args.sigma));
    match &args.output {
        Some(path) => write(path, text.as_bytes()),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
