use fuzzyseg::grid::{InitStrategy, SolverConfig};
use fuzzyseg::metrics::{defuzzify, segmentation_accuracy};
use fuzzyseg::noise::{add_gaussian, add_rvin, add_spin, make_phantom, PhantomKind, PhantomSpec};
use fuzzyseg::solver::{run, run_l2fs};
use fuzzyseg::Image;

fn best_over(
    img: &Image,
    truth: &fuzzyseg::LabelMap,
    lambdas: &[f64],
    seed: u64,
    l2: bool,
    max_iters: usize,
) -> (f64, f64, InitStrategy, Vec<f64>) {
    let mut best = (0.0f64, 0.0, InitStrategy::Fcm, vec![]);
    for init in InitStrategy::ALL {
        for &lambda in lambdas {
            let config = SolverConfig { lambda, init, seed, max_iters, ..SolverConfig::default() };
            let out = if l2 { run_l2fs(img, 2, &config) } else { run(img, 2, &config) }.unwrap();
            let labels = defuzzify(&out.u);
            let sa = segmentation_accuracy(&labels, truth, 2).unwrap();
            if sa.sa > best.0 {
                best = (sa.sa, lambda, init, out.c.as_slice().iter().map(|c| c[0]).collect());
            }
            if best.0 == 1.0 {
                return best;
            }
        }
    }
    best
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");
    let (img, truth) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
    let l1_sweep = [0.005, 0.01, 0.02, 0.05];
    let l2_sweep = [0.00005, 0.0001, 0.0002, 0.0005];

    if which == "all" || which == "clean" {
        let b = best_over(&img, &truth, &l1_sweep, 0, false, 500);
        println!("clean:    SA={:.5} lambda={} init={} c={:?}", b.0, b.1, b.2.name(), b.3);
    }
    if which == "all" || which == "spin" {
        for (frac, seed) in [(0.1, 31), (0.3, 33), (0.4, 34), (0.5, 35), (0.6, 36)] {
            let noisy = add_spin(&img, frac, seed).unwrap();
            let b = best_over(&noisy, &truth, &l1_sweep, seed, false, 1000);
            println!("spin {:.1}: SA={:.5} lambda={} init={} c={:?}", frac, b.0, b.1, b.2.name(), b.3);
        }
    }
    if which == "all" || which == "gn" {
        for (sigma, seed) in [(10.0, 41), (30.0, 43), (50.0, 45), (80.0, 48)] {
            let noisy = add_gaussian(&img, sigma, seed).unwrap();
            let b = best_over(&noisy, &truth, &l1_sweep, seed, false, 1000);
            println!("gn {:>3}:   SA={:.5} lambda={} init={} c={:?}", sigma, b.0, b.1, b.2.name(), b.3);
        }
    }
    if which == "all" || which == "rvin" {
        for (frac, seed) in [(0.2, 52), (0.4, 54), (0.6, 56)] {
            let noisy = add_rvin(&img, frac, seed).unwrap();
            let b = best_over(&noisy, &truth, &l1_sweep, seed, false, 1000);
            println!("rvin {:.1}: SA={:.5} lambda={} init={} c={:?}", frac, b.0, b.1, b.2.name(), b.3);
        }
    }
    if which == "all" || which == "l2" {
        let noisy = add_spin(&img, 0.4, 34).unwrap();
        let b = best_over(&noisy, &truth, &l2_sweep, 34, true, 1000);
        println!("l2 spin 0.4: SA={:.5} lambda={} init={} c={:?}", b.0, b.1, b.2.name(), b.3);
        let noisy = add_gaussian(&img, 60.0, 46).unwrap();
        let b = best_over(&noisy, &truth, &l2_sweep, 46, true, 1000);
        println!("l2 gn 60:    SA={:.5} lambda={} init={} c={:?}", b.0, b.1, b.2.name(), b.3);
    }
}
