//! Benchmark harness: runs a grid of (noise level x algorithm x seed) cells
//! on one phantom and tabulates segmentation accuracy.
//!
//! For the TV solvers each cell reports the best accuracy over the lambda
//! sweep and the three initialization strategies, mirroring the tuned-lambda,
//! best-initializer protocol of the accuracy tables this harness reproduces.
//! Cells are independent jobs; rows are emitted in spec order regardless of
//! completion order, and the CSV contains no timing data, so repeated runs of
//! the same spec are byte-identical.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fuzzyseg::baselines::{fcm, fcm_s2, FcmConfig};
use fuzzyseg::grid::{InitStrategy, SolverConfig};
use fuzzyseg::metrics::{defuzzify, segmentation_accuracy_masked};
use fuzzyseg::noise::{NoiseKind, NoiseSpec, PhantomKind, PhantomSpec};
use fuzzyseg::solver::{run, run_l2fs};
use fuzzyseg::{Image, LabelMap};

use crate::{CliError, CliResult};

/// Algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoName {
    L1fs,
    L2fs,
    Fcm,
    FcmS2,
}

impl AlgoName {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "l1fs" => Ok(AlgoName::L1fs),
            "l2fs" => Ok(AlgoName::L2fs),
            "fcm" => Ok(AlgoName::Fcm),
            "fcm-s2" => Ok(AlgoName::FcmS2),
            other => Err(CliError::usage(format!("unknown algorithm '{}'", other))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlgoName::L1fs => "l1fs",
            AlgoName::L2fs => "l2fs",
            AlgoName::Fcm => "fcm",
            AlgoName::FcmS2 => "fcm-s2",
        }
    }

    /// Documented tuning range for the fidelity weight.
    pub fn lambda_range(&self) -> Option<(f64, f64)> {
        match self {
            AlgoName::L1fs => Some((0.001, 0.05)),
            AlgoName::L2fs => Some((0.00005, 0.0005)),
            _ => None,
        }
    }

    pub fn default_sweep(&self) -> Vec<f64> {
        match self {
            AlgoName::L1fs => vec![0.002, 0.005, 0.01, 0.02, 0.05],
            AlgoName::L2fs => vec![0.00005, 0.0001, 0.0002, 0.0005],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct NoiseRow {
    pub kind: NoiseKind,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AlgoRow {
    pub name: AlgoName,
    /// Lambda sweep; TV solvers fall back to their default sweep.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
}

/// The benchmark grid, read from a TOML file.
#[derive(Debug, Clone, Deserialize)]
pub struct BenchSpec {
    pub phantom: PhantomKind,
    /// One repetition per seed; the seed drives noise and initializers.
    pub seeds: Vec<u64>,
    #[serde(rename = "noise")]
    pub noise_rows: Vec<NoiseRow>,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgoRow>,
}

impl BenchSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.algorithms.is_empty() {
            return Err(CliError::usage("bench spec needs at least one algorithm"));
        }
        if self.noise_rows.is_empty() || self.noise_rows.iter().any(|n| n.levels.is_empty()) {
            return Err(CliError::usage("bench spec needs at least one noise level"));
        }
        if self.seeds.is_empty() {
            return Err(CliError::usage("bench spec needs at least one seed"));
        }
        for algo in &self.algorithms {
            match (algo.name.lambda_range(), &algo.lambdas) {
                (Some((lo, hi)), Some(lams)) => {
                    if lams.is_empty() {
                        return Err(CliError::usage(format!("{}: empty lambda sweep", algo.name.name())));
                    }
                    for &l in lams {
                        if !(l >= lo && l <= hi) {
                            return Err(CliError::usage(format!(
                                "{}: lambda {} outside documented range [{}, {}]",
                                algo.name.name(),
                                l,
                                lo,
                                hi
                            )));
                        }
                    }
                }
                (None, Some(_)) => {
                    return Err(CliError::usage(format!(
                        "{} takes no lambda sweep",
                        algo.name.name()
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn load_spec(path: &Path) -> CliResult<BenchSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {}", path.display(), e)))?;
    let spec: BenchSpec = toml::from_str(&text).map_err(|e| CliError::usage(format!("bad bench spec: {}", e)))?;
    spec.validate()?;
    Ok(spec)
}

/// One (noise, level, algorithm, seed) cell of the results table.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub phantom: &'static str,
    pub algorithm: &'static str,
    pub noise: &'static str,
    pub level: f64,
    pub seed: u64,
    pub best_lambda: Option<f64>,
    pub best_init: Option<&'static str>,
    pub sa: Option<f64>,
    pub error: Option<String>,
}

struct Cell {
    kind: NoiseKind,
    level: f64,
    algo: AlgoRow,
    seed: u64,
}

fn run_cell(image: &Image, truth: &LabelMap, classes: usize, cell: &Cell) -> CellResult {
    let template = CellResult {
        phantom: "",
        algorithm: cell.algo.name.name(),
        noise: cell.kind.name(),
        level: cell.level,
        seed: cell.seed,
        best_lambda: None,
        best_init: None,
        sa: None,
        error: None,
    };
    let attempt = || -> CliResult<CellResult> {
        let spec = NoiseSpec {
            kind: cell.kind,
            level: cell.level,
            seed: cell.seed,
        };
        let (noisy, mask) = spec.apply(image)?;
        let exclude = mask.as_deref();
        let score = |labels: &LabelMap| -> CliResult<f64> {
            Ok(segmentation_accuracy_masked(labels, truth, classes, exclude)?.sa)
        };

        match cell.algo.name {
            AlgoName::Fcm => {
                let (u, _) = fcm(&noisy, classes, &FcmConfig::default(), cell.seed)?;
                Ok(CellResult {
                    sa: Some(score(&defuzzify(&u))?),
                    ..template.clone()
                })
            }
            AlgoName::FcmS2 => {
                let (u, _) = fcm_s2(&noisy, classes, &FcmConfig::default(), cell.seed)?;
                Ok(CellResult {
                    sa: Some(score(&defuzzify(&u))?),
                    ..template.clone()
                })
            }
            AlgoName::L1fs | AlgoName::L2fs => {
                let sweep = cell
                    .algo
                    .lambdas
                    .clone()
                    .unwrap_or_else(|| cell.algo.name.default_sweep());
                let mut best: Option<(f64, f64, InitStrategy)> = None;
                'sweep: for &lambda in &sweep {
                    for init in InitStrategy::ALL {
                        let config = SolverConfig {
                            lambda,
                            epsilon: SolverConfig::default_epsilon(classes),
                            init,
                            seed: cell.seed,
                            ..SolverConfig::default()
                        };
                        let out = match cell.algo.name {
                            AlgoName::L1fs => run(&noisy, classes, &config)?,
                            _ => run_l2fs(&noisy, classes, &config)?,
                        };
                        let sa = score(&defuzzify(&out.u))?;
                        if best.as_ref().map_or(true, |(b, _, _)| sa > *b) {
                            best = Some((sa, lambda, init));
                        }
                        // Accuracy cannot improve on 1; skip the rest.
                        if sa == 1.0 {
                            break 'sweep;
                        }
                    }
                }
                let (sa, lambda, init) = best.unwrap();
                Ok(CellResult {
                    best_lambda: Some(lambda),
                    best_init: Some(init.name()),
                    sa: Some(sa),
                    ..template.clone()
                })
            }
        }
    };
    match attempt() {
        Ok(res) => res,
        Err(e) => CellResult {
            error: Some(e.to_string()),
            ..template
        },
    }
}

/// Runs every cell of the spec; `jobs = 0` uses all cores.
pub fn run_bench(spec: &BenchSpec, jobs: usize) -> CliResult<Vec<CellResult>> {
    spec.validate()?;
    let phantom = PhantomSpec::new(spec.phantom);
    let (image, truth) = fuzzyseg::noise::make_phantom(&phantom)?;
    let classes = spec.phantom.classes();

    let mut cells = Vec::new();
    for row in &spec.noise_rows {
        for &level in &row.levels {
            for algo in &spec.algorithms {
                for &seed in &spec.seeds {
                    cells.push(Cell {
                        kind: row.kind,
                        level,
                        algo: algo.clone(),
                        seed,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::io(e.to_string()))?;
    let mut results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(&image, &truth, classes, cell))
            .collect()
    });
    for r in results.iter_mut() {
        r.phantom = spec.phantom.name();
    }
    Ok(results)
}

/// Machine-readable output: one line per cell, spec order.
pub fn csv_string(results: &[CellResult]) -> String {
    let mut out = String::from("phantom,algorithm,noise,level,seed,best_lambda,best_init,sa,error\n");
    for r in results {
        let fmt_opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.phantom,
            r.algorithm,
            r.noise,
            r.level,
            r.seed,
            fmt_opt(&r.best_lambda),
            r.best_init.unwrap_or(""),
            fmt_opt(&r.sa),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    out
}

/// Aligned human-readable rendering of the same rows.
pub fn table_string(results: &[CellResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:<8} {:<8} {:>8} {:>6} {:>12} {:<14} {:>10}\n",
        "phantom", "algo", "noise", "level", "seed", "lambda", "init", "SA"
    ));
    for r in results {
        let sa = match (&r.sa, &r.error) {
            (Some(sa), _) => format!("{:.4}", sa),
            (None, Some(_)) => "FAILED".to_string(),
            _ => String::new(),
        };
        out.push_str(&format!(
            "{:<16} {:<8} {:<8} {:>8} {:>6} {:>12} {:<14} {:>10}\n",
            r.phantom,
            r.algorithm,
            r.noise,
            r.level,
            r.seed,
            r.best_lambda.map(|l| l.to_string()).unwrap_or_default(),
            r.best_init.unwrap_or(""),
            sa,
        ));
    }
    out
}
