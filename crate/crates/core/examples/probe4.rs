use fuzzyseg::grid::{InitStrategy, SolverConfig};
use fuzzyseg::metrics::{defuzzify, segmentation_accuracy};
use fuzzyseg::noise::{add_spin, make_phantom, PhantomKind, PhantomSpec};
use fuzzyseg::solver::run_l2fs;

fn main() {
    let (img, truth) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
    let noisy = add_spin(&img, 0.4, 74).unwrap();
    for lambda in [0.00005, 0.0001, 0.0002, 0.0005] {
        for init in InitStrategy::ALL {
            let config = SolverConfig {
                lambda,
                init,
                seed: 74,
                max_iters: 4000,
                ..SolverConfig::default()
            };
            let out = run_l2fs(&noisy, 2, &config).unwrap();
            let sa = segmentation_accuracy(&defuzzify(&out.u), &truth, 2).unwrap();
            let last = out.trace.records.last().unwrap();
            let mut c: Vec<f64> = out.c.iter().map(|c| c[0]).collect();
            c.sort_by(f64::total_cmp);
            println!(
                "l={:<8} init={:<14} it={:<5} SA={:.5} centers=({:7.2},{:7.2}) ratio={:.3} primal_w={:.1e}",
                lambda,
                init.name(),
                out.report.iterations,
                sa.sa,
                c[0],
                c[1],
                (c[1] - c[0]) / 108.0,
                last.kkt.primal_w
            );
        }
    }
}
