use fuzzyseg::grid::{InitStrategy, SolverConfig};
use fuzzyseg::metrics::{defuzzify, segmentation_accuracy};
use fuzzyseg::noise::{add_gaussian, add_rvin, add_spin, make_phantom, PhantomKind, PhantomSpec};
use fuzzyseg::solver::run;
use fuzzyseg::Image;

fn sweep(img: &Image, truth: &fuzzyseg::LabelMap, lambdas: &[f64], seed: u64, label: &str) {
    for &lambda in lambdas {
        let mut line = format!("[{}] lambda={:<6}", label, lambda);
        for init in [InitStrategy::Fcm, InitStrategy::FcmS2] {
            let config = SolverConfig {
                lambda,
                init,
                seed,
                max_iters: 1000,
                ..SolverConfig::default()
            };
            let out = run(img, 2, &config).unwrap();
            let labels = defuzzify(&out.u);
            let sa = segmentation_accuracy(&labels, truth, 2).unwrap();
            let wrong = ((1.0 - sa.sa) * (img.height() * img.width()) as f64).round();
            line.push_str(&format!(
                "  {}:SA={:.5}({:>4}px,it{})",
                init.name(),
                sa.sa,
                wrong,
                out.report.iterations
            ));
        }
        println!("{}", line);
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("spin");
    let (img, truth) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
    let fine = [0.004, 0.005, 0.006, 0.008, 0.01, 0.015];

    match which {
        "spin" => {
            for (frac, seed) in [(0.3, 33), (0.4, 34), (0.5, 35), (0.6, 36)] {
                println!("== SPIN {} seed {} ==", frac, seed);
                let noisy = add_spin(&img, frac, seed).unwrap();
                sweep(&noisy, &truth, &fine, seed, &format!("spin{}", frac));
            }
        }
        "rvin" => {
            for (frac, seed) in [(0.4, 54), (0.6, 56)] {
                println!("== RVIN {} seed {} ==", frac, seed);
                let noisy = add_rvin(&img, frac, seed).unwrap();
                sweep(&noisy, &truth, &fine, seed, &format!("rvin{}", frac));
            }
        }
        "gn" => {
            for (sigma, seed) in [(60.0, 46), (70.0, 47), (80.0, 48)] {
                println!("== GN {} seed {} ==", sigma, seed);
                let noisy = add_gaussian(&img, sigma, seed).unwrap();
                sweep(&noisy, &truth, &[0.005, 0.008, 0.01, 0.015, 0.02, 0.03], seed, &format!("gn{}", sigma));
            }
        }
        _ => {}
    }
}
