use fuzzyseg::grid::{InitStrategy, SolverConfig};
use fuzzyseg::metrics::{defuzzify, segmentation_accuracy, LabelMap};
use fuzzyseg::noise::{add_gaussian, add_rvin, add_spin};
use fuzzyseg::solver::run;
use fuzzyseg::Image;

/// Two bars; the second one has rounded corners (quarter-disk arcs).
fn build_phantom(corner_radius: f64) -> (Image, LabelMap) {
    let (h, w) = (128usize, 128usize);
    let mut labels = vec![0u8; h * w];
    // Bar 1: plain rectangle.
    for i in 13..54 {
        for j in 15..113 {
            labels[i * w + j] = 1;
        }
    }
    // Bar 2: rectangle with rounded corners.
    let (r0, r1, c0, c1) = (70i64, 113i64, 15i64, 113i64);
    let rad = corner_radius;
    for i in r0..r1 {
        for j in c0..c1 {
            let corner_y = if (i as f64) < r0 as f64 + rad {
                Some(r0 as f64 + rad - 0.5)
            } else if (i as f64) >= r1 as f64 - rad {
                Some(r1 as f64 - rad - 0.5)
            } else {
                None
            };
            let corner_x = if (j as f64) < c0 as f64 + rad {
                Some(c0 as f64 + rad - 0.5)
            } else if (j as f64) >= c1 as f64 - rad {
                Some(c1 as f64 - rad - 0.5)
            } else {
                None
            };
            let inside = match (corner_y, corner_x) {
                (Some(cy), Some(cx)) => {
                    let dy = i as f64 - cy;
                    let dx = j as f64 - cx;
                    dy * dy + dx * dx <= rad * rad
                }
                _ => true,
            };
            if inside {
                labels[i as usize * w + j as usize] = 1;
            }
        }
    }
    let data: Vec<f64> = labels.iter().map(|&l| if l == 0 { 20.0 } else { 128.0 }).collect();
    (
        Image::from_data(h, w, 1, data).unwrap(),
        LabelMap::from_data(h, w, labels).unwrap(),
    )
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "spin".into());
    let (img, truth) = build_phantom(12.0);
    let fg = truth.labels().iter().filter(|&&l| l == 1).count();
    println!("fg fraction {:.3}", fg as f64 / 16384.0);

    let lambdas = [0.002, 0.003, 0.004, 0.005, 0.0065, 0.008];
    match which.as_str() {
        "spin" => {
            for frac in [0.3f64, 0.4, 0.5, 0.6] {
                let noisy = add_spin(&img, frac, (frac * 100.0) as u64).unwrap();
                let mut line = format!("spin {:<4}", frac);
                for &lambda in &lambdas {
                    let config = SolverConfig {
                        lambda,
                        init: InitStrategy::FcmS2,
                        seed: (frac * 100.0) as u64,
                        max_iters: 1500,
                        ..SolverConfig::default()
                    };
                    let out = run(&noisy, 2, &config).unwrap();
                    let sa = segmentation_accuracy(&defuzzify(&out.u), &truth, 2).unwrap();
                    line.push_str(&format!("  l{}:{:>4}px", lambda, ((1.0 - sa.sa) * 16384.0).round()));
                }
                println!("{}", line);
            }
        }
        "others" => {
            for sigma in [60.0, 80.0] {
                let noisy = add_gaussian(&img, sigma, sigma as u64).unwrap();
                let mut line = format!("gn {:<5}", sigma);
                for &lambda in &[0.004, 0.0065, 0.01, 0.015, 0.02] {
                    let config = SolverConfig {
                        lambda,
                        init: InitStrategy::FcmS2,
                        seed: sigma as u64,
                        max_iters: 1500,
                        ..SolverConfig::default()
                    };
                    let out = run(&noisy, 2, &config).unwrap();
                    let sa = segmentation_accuracy(&defuzzify(&out.u), &truth, 2).unwrap();
                    line.push_str(&format!("  l{}:{:>4}px", lambda, ((1.0 - sa.sa) * 16384.0).round()));
                }
                println!("{}", line);
            }
            for frac in [0.4f64, 0.6] {
                let noisy = add_rvin(&img, frac, (frac * 10.0) as u64).unwrap();
                let mut line = format!("rvin {:<4}", frac);
                for &lambda in &lambdas {
                    let config = SolverConfig {
                        lambda,
                        init: InitStrategy::FcmS2,
                        seed: (frac * 10.0) as u64,
                        max_iters: 1500,
                        ..SolverConfig::default()
                    };
                    let out = run(&noisy, 2, &config).unwrap();
                    let sa = segmentation_accuracy(&defuzzify(&out.u), &truth, 2).unwrap();
                    line.push_str(&format!("  l{}:{:>4}px", lambda, ((1.0 - sa.sa) * 16384.0).round()));
                }
                println!("{}", line);
            }
            // Noiseless sanity.
            let mut line = "clean    ".to_string();
            for &lambda in &[0.005, 0.01, 0.02, 0.05] {
                let config = SolverConfig {
                    lambda,
                    init: InitStrategy::Fcm,
                    seed: 0,
                    ..SolverConfig::default()
                };
                let out = run(&img, 2, &config).unwrap();
                let sa = segmentation_accuracy(&defuzzify(&out.u), &truth, 2).unwrap();
                line.push_str(&format!("  l{}:{:>4}px", lambda, ((1.0 - sa.sa) * 16384.0).round()));
            }
            println!("{}", line);
        }
        _ => {}
    }
}
