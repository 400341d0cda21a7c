//! `fuzzyseg`: multiphase segmentation of piecewise-constant images, robust
//! to impulse noise.
//!
//! Subcommands: `synth` (test phantoms), `noise` (seeded corruptions),
//! `segment` (one solver run), `bench` (accuracy tables over a noise grid).
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};

use fuzzyseg::baselines::{fcm, fcm_s2, FcmConfig};
use fuzzyseg::grid::{InitStrategy, SolverConfig};
use fuzzyseg::metrics::{defuzzify, reconstruct, segmentation_accuracy_masked};
use fuzzyseg::noise::{NoiseKind, NoiseSpec, PhantomKind, PhantomSpec};
use fuzzyseg::solver::{energy, run, run_l2fs, RunReport, SolveOutcome};
use fuzzyseg::{Image, LabelMap};

use fuzzyseg_cli::imageio;
use fuzzyseg_cli::report::{write_report, ReportFile};
use fuzzyseg_cli::{bench, CliError, CliResult};

#[derive(Parser)]
#[command(name = "fuzzyseg", version, about = "Fuzzy multiphase TV-L1 image segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic piecewise-constant phantom and its label map.
    Synth(SynthArgs),
    /// Corrupt an image with seeded noise; writes the 8-bit image plus a
    /// real-valued sidecar.
    Noise(NoiseArgs),
    /// Segment one image and write labels, reconstruction, and a report.
    Segment(SegmentArgs),
    /// Run a benchmark grid from a TOML spec; writes CSV and a text table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// two-phase-gray | five-phase-gray | six-phase-color
    #[arg(long)]
    kind: String,
    /// Grid height (defaults to the phantom's standard size).
    #[arg(long)]
    height: Option<usize>,
    /// Grid width (defaults to the phantom's standard size).
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    input: PathBuf,
    /// gn | spin | rvin | missing
    #[arg(long)]
    kind: String,
    /// Sigma for gn (intensity units), corrupted fraction for the others.
    #[arg(long)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// Read real-valued pixel data from `<input>.f64` instead of the 8-bit
    /// file.
    #[arg(long, default_value_t = false)]
    use_sidecar: bool,
    /// l1fs | l2fs | fcm | fcm-s2
    #[arg(long, default_value = "l1fs")]
    algo: String,
    #[arg(long)]
    classes: usize,
    /// Fidelity weight (defaults: 0.01 for l1fs, 0.0002 for l2fs).
    #[arg(long)]
    lambda: Option<f64>,
    /// ADMM penalty.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Stopping tolerance (defaults: 1e-6 two-phase, 1e-4 multiphase).
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// fcm | fcm-s2 | random-u-fcm-c | all-best
    #[arg(long, default_value = "fcm")]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground-truth label map (PGM of class indices); enables SA in the
    /// report.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML benchmark spec.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Parallel jobs; 0 means all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successful exits; everything else is a
            // usage error (exit 1 by this tool's convention).
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Noise(args) => cmd_noise(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fuzzyseg: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let kind = PhantomKind::parse(&args.kind).map_err(|e| CliError::usage(e.to_string()))?;
    let (dh, dw) = kind.default_size();
    let spec = PhantomSpec::with_size(kind, args.height.unwrap_or(dh), args.width.unwrap_or(dw));
    let (image, labels) = fuzzyseg::noise::make_phantom(&spec)?;
    ensure_dir(&args.output_dir)?;
    let ext = if kind.channels() == 1 { "pgm" } else { "ppm" };
    let img_path = args.output_dir.join(format!("phantom.{}", ext));
    imageio::write_image(&img_path, &image)?;
    imageio::write_labels(&args.output_dir.join("truth.pgm"), &labels)?;
    println!("wrote {}", img_path.display());
    Ok(())
}

fn cmd_noise(args: NoiseArgs) -> CliResult<()> {
    let kind = NoiseKind::parse(&args.kind).map_err(|e| CliError::usage(e.to_string()))?;
    let spec = NoiseSpec {
        kind,
        level: args.level,
        seed: args.seed,
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let image = imageio::read_image(&args.input)?;
    let (noisy, mask) = spec.apply(&image)?;
    ensure_dir(&args.output_dir)?;
    let ext = if noisy.channels() == 1 { "pgm" } else { "ppm" };
    let out_path = args.output_dir.join(format!("noisy.{}", ext));
    imageio::write_image(&out_path, &noisy)?;
    imageio::write_sidecar(&imageio::sidecar_path(&out_path), &noisy)?;
    if let Some(mask) = mask {
        let (h, w) = (noisy.height(), noisy.width());
        let mask_labels = LabelMap::from_data(h, w, mask.iter().map(|&m| m as u8).collect())?;
        imageio::write_labels(&args.output_dir.join("missing-mask.pgm"), &mask_labels)?;
    }
    println!("wrote {}", out_path.display());
    Ok(())
}

/// Picks which solver input to use: the 8-bit file or its sidecar.
fn load_input(args: &SegmentArgs) -> CliResult<Image> {
    if args.use_sidecar {
        imageio::read_sidecar(&imageio::sidecar_path(&args.input))
    } else {
        imageio::read_image(&args.input)
    }
}

fn run_tv(
    image: &Image,
    classes: usize,
    algo: &str,
    config: &SolverConfig,
) -> CliResult<SolveOutcome> {
    let out = match algo {
        "l1fs" => run(image, classes, config)?,
        "l2fs" => run_l2fs(image, classes, config)?,
        other => return Err(CliError::usage(format!("unknown algorithm '{}'", other))),
    };
    Ok(out)
}

fn cmd_segment(args: SegmentArgs) -> CliResult<()> {
    if args.classes < 2 {
        return Err(CliError::usage("--classes must be >= 2"));
    }
    let image = load_input(&args)?;
    let truth = args.truth.as_deref().map(imageio::read_labels).transpose()?;

    let lambda = args.lambda.unwrap_or(match args.algo.as_str() {
        "l2fs" => 0.0002,
        _ => 0.01,
    });
    let epsilon = args.eps.unwrap_or(SolverConfig::default_epsilon(args.classes));
    let base = SolverConfig {
        lambda,
        r: args.r,
        epsilon,
        max_iters: args.max_iters,
        init: InitStrategy::Fcm,
        seed: args.seed,
    };

    let (u, c, report): (_, _, Option<RunReport>) = match args.algo.as_str() {
        "fcm" => {
            let (u, c) = fcm(&image, args.classes, &FcmConfig::default(), args.seed)?;
            (u, c, None)
        }
        "fcm-s2" => {
            let (u, c) = fcm_s2(&image, args.classes, &FcmConfig::default(), args.seed)?;
            (u, c, None)
        }
        algo => {
            let outcome = if args.init == "all-best" {
                // Run all three initializers; prefer the best SA when truth
                // is available, the lowest energy otherwise.
                let mut best: Option<(f64, SolveOutcome)> = None;
                for init in InitStrategy::ALL {
                    let config = SolverConfig { init, ..base.clone() };
                    let out = run_tv(&image, args.classes, algo, &config)?;
                    let score = match &truth {
                        Some(t) => {
                            let labels = defuzzify(&out.u);
                            segmentation_accuracy_masked(&labels, t, args.classes, None)?.sa
                        }
                        None => -out.report.final_energy.total,
                    };
                    if best.as_ref().map_or(true, |(s, _)| score > *s) {
                        best = Some((score, out));
                    }
                }
                best.unwrap().1
            } else {
                let init = InitStrategy::parse(&args.init).map_err(|e| CliError::usage(e.to_string()))?;
                let config = SolverConfig { init, ..base.clone() };
                run_tv(&image, args.classes, algo, &config)?
            };
            (outcome.u.clone(), outcome.c.clone(), Some(outcome.report))
        }
    };

    let labels = defuzzify(&u);
    let recon = reconstruct(&labels, &c)?;
    ensure_dir(&args.output_dir)?;
    imageio::write_labels(&args.output_dir.join("labels.pgm"), &labels)?;
    let ext = if recon.channels() == 1 { "pgm" } else { "ppm" };
    imageio::write_image(&args.output_dir.join(format!("recon.{}", ext)), &recon)?;

    let sa = truth
        .as_ref()
        .map(|t| segmentation_accuracy_masked(&labels, t, args.classes, None).map(|r| r.sa))
        .transpose()?;

    let mut run_report = report.unwrap_or_else(|| {
        // Baseline runs still produce a report skeleton: energy of the
        // (U, C) they returned under the L1 objective.
        let e = energy(&image, &u, &c, lambda).unwrap();
        RunReport {
            algorithm: args.algo.clone(),
            classes: args.classes,
            config: base.clone(),
            iterations: 0,
            final_energy: e,
            final_kkt: fuzzyseg::solver::KktResiduals {
                primal_d: 0.0,
                primal_w: 0.0,
                dual_stationarity: 0.0,
            },
            centers: c.as_slice().to_vec(),
            wall_seconds: 0.0,
            sa: None,
        }
    });
    run_report.sa = sa;

    let report_file = ReportFile {
        input: args.input.display().to_string(),
        truth: args.truth.as_ref().map(|p| p.display().to_string()),
        used_sidecar: args.use_sidecar,
        run: run_report,
    };
    write_report(&args.output_dir.join("report.json"), &report_file)?;
    if let Some(sa) = sa {
        println!("SA = {}", sa);
    }
    println!("wrote {}", args.output_dir.join("report.json").display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let spec = bench::load_spec(&args.spec)?;
    let results = bench::run_bench(&spec, args.jobs)?;
    ensure_dir(&args.output_dir)?;
    let csv = bench::csv_string(&results);
    let table = bench::table_string(&results);
    std::fs::write(args.output_dir.join("results.csv"), &csv)?;
    std::fs::write(args.output_dir.join("results.txt"), &table)?;
    print!("{}", table);
    Ok(())
}
