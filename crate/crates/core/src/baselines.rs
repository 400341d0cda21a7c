//! Fuzzy c-means clustering and its median-filter variant, used both as
//! comparison baselines and to initialize the ADMM solvers.
//!
//! FCM alternates closed-form membership updates
//! `u_i(x) = D_i(x)^{-1/(p-1)} / sum_j D_j(x)^{-1/(p-1)}` with
//! `D_i(x) = |I(x) - c_i|^2`, and weighted-mean center updates
//! `c_i = sum_x u_i^p I / sum_x u_i^p`. FCM_S2 augments the distance with a
//! median-filtered copy of the image: `D_i = |I - c_i|^2 + alpha |Ibar - c_i|^2`,
//! which buys impulse-noise robustness.
//!
//! Centers start at per-channel quantiles of the intensity histogram, so
//! both baselines are deterministic; the seed only matters for the
//! random-membership initialization strategy.

use crate::error::{Error, Result};
use crate::grid::{uniform_membership, ClassCenters, Image, InitStrategy, MembershipField, ScalarField};

/// Parameters shared by FCM and FCM_S2.
#[derive(Debug, Clone, PartialEq)]
pub struct FcmConfig {
    /// Fuzzifier exponent, >= 1.
    pub p: f64,
    /// Weight of the median-filtered term in FCM_S2, > 0.
    pub alpha: f64,
    /// Median filter window, odd and >= 3.
    pub median_window: usize,
    pub max_iters: usize,
    /// Stop when the relative center change drops below this.
    pub tol: f64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        FcmConfig {
            p: 2.0,
            alpha: 5.0,
            median_window: 5,
            max_iters: 300,
            tol: 1e-6,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::invalid(format!("fuzzifier p must be >= 1, got {}", self.p)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.median_window < 3 || self.median_window % 2 == 0 {
            return Err(Error::invalid(format!(
                "median window must be odd and >= 3, got {}",
                self.median_window
            )));
        }
        Ok(())
    }
}

/// Converged memberships and centers plus the per-iteration objective, which
/// alternating minimization drives monotonically down.
#[derive(Debug, Clone)]
pub struct FcmRun {
    pub u: MembershipField,
    pub c: ClassCenters,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// Per-channel sliding-window median with replicate padding at the edges.
pub fn median_filter(image: &Image, window: usize) -> Result<Image> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::invalid(format!(
            "median window must be odd and >= 3, got {}",
            window
        )));
    }
    let (h, w) = (image.height(), image.width());
    let half = window as isize / 2;
    let mut out = image.clone();
    let mut buf = Vec::with_capacity(window * window);
    for ch in 0..image.channels() {
        let plane = image.channel(ch).to_vec();
        let out_plane = out.channel_mut(ch);
        for i in 0..h as isize {
            for j in 0..w as isize {
                buf.clear();
                for di in -half..=half {
                    let ii = (i + di).clamp(0, h as isize - 1) as usize;
                    for dj in -half..=half {
                        let jj = (j + dj).clamp(0, w as isize - 1) as usize;
                        buf.push(plane[ii * w + jj]);
                    }
                }
                buf.sort_unstable_by(f64::total_cmp);
                out_plane[i as usize * w + j as usize] = buf[buf.len() / 2];
            }
        }
    }
    Ok(out)
}

/// Deterministic starting centers: per-channel quantiles at (i + 1/2) / N.
/// Quantiles of strongly skewed histograms can coincide, which would leave
/// two classes forever identical under the alternating updates; colliding
/// channels fall back to evenly spaced values over the intensity range.
fn quantile_centers(image: &Image, classes: usize) -> ClassCenters {
    let mut centers = vec![vec![0.0; image.channels()]; classes];
    for ch in 0..image.channels() {
        let mut sorted = image.channel(ch).to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut values: Vec<f64> = (0..classes)
            .map(|i| {
                let q = (i as f64 + 0.5) / classes as f64;
                let idx = ((q * sorted.len() as f64) as usize).min(sorted.len() - 1);
                sorted[idx]
            })
            .collect();
        let collided = values.windows(2).any(|p| p[0] == p[1]);
        if collided {
            let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
            for (i, v) in values.iter_mut().enumerate() {
                *v = lo + (hi - lo) * (i as f64 + 0.5) / classes as f64;
            }
        }
        for (i, center) in centers.iter_mut().enumerate() {
            center[ch] = values[i];
        }
    }
    ClassCenters::new(centers).unwrap()
}

/// Squared distance planes `D_i(x)` for the current centers; `filtered` adds
/// the FCM_S2 term when present.
fn distance_planes(
    image: &Image,
    filtered: Option<(&Image, f64)>,
    centers: &ClassCenters,
) -> Vec<Vec<f64>> {
    let n = image.pixel_count();
    (0..centers.classes())
        .map(|i| {
            let c = centers.center(i);
            let mut d = vec![0.0; n];
            for ch in 0..image.channels() {
                let plane = image.channel(ch);
                let cc = c[ch];
                for (dv, &v) in d.iter_mut().zip(plane) {
                    *dv += (v - cc) * (v - cc);
                }
            }
            if let Some((bar, alpha)) = filtered {
                for ch in 0..image.channels() {
                    let plane = bar.channel(ch);
                    let cc = c[ch];
                    for (dv, &v) in d.iter_mut().zip(plane) {
                        *dv += alpha * (v - cc) * (v - cc);
                    }
                }
            }
            d
        })
        .collect()
}

fn fcm_loop(image: &Image, filtered: Option<(&Image, f64)>, classes: usize, config: &FcmConfig) -> Result<FcmRun> {
    config.validate()?;
    if classes < 2 {
        return Err(Error::invalid(format!("need >= 2 classes, got {}", classes)));
    }
    let (h, w) = (image.height(), image.width());
    let n = image.pixel_count();
    let exponent = if config.p > 1.0 { 1.0 / (config.p - 1.0) } else { f64::INFINITY };
    let mut centers = quantile_centers(image, classes);
    let mut memberships = vec![vec![0.0; n]; classes];
    let mut objective_trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..config.max_iters {
        iterations += 1;
        let dist = distance_planes(image, filtered, &centers);

        // Membership update: u_i = D_i^{-1/(p-1)} normalized, with full
        // membership on a class at zero distance (shared if several).
        for idx in 0..n {
            let mut zero_count = 0usize;
            let mut min_d = f64::INFINITY;
            for d in dist.iter() {
                if d[idx] == 0.0 {
                    zero_count += 1;
                }
                min_d = min_d.min(d[idx]);
            }
            if zero_count > 0 {
                let share = 1.0 / zero_count as f64;
                for (i, d) in dist.iter().enumerate() {
                    memberships[i][idx] = if d[idx] == 0.0 { share } else { 0.0 };
                }
            } else {
                // (min_d / d)^e is <= 1, so the normalization never overflows.
                let mut sum = 0.0;
                for (i, d) in dist.iter().enumerate() {
                    let v = (min_d / d[idx]).powf(exponent);
                    memberships[i][idx] = v;
                    sum += v;
                }
                for m in memberships.iter_mut() {
                    m[idx] /= sum;
                }
            }
        }

        // Center update: weighted means with weights u^p; the FCM_S2 variant
        // averages the image and its filtered copy.
        let previous = centers.clone();
        for i in 0..classes {
            let mut mass = 0.0;
            let powed: Vec<f64> = memberships[i].iter().map(|&u| u.powf(config.p)).collect();
            for &v in &powed {
                mass += v;
            }
            if mass <= 0.0 {
                continue;
            }
            for ch in 0..image.channels() {
                let plane = image.channel(ch);
                let mut num: f64 = plane.iter().zip(&powed).map(|(&v, &u)| v * u).sum();
                let mut denom = mass;
                if let Some((bar, alpha)) = filtered {
                    let bp = bar.channel(ch);
                    num += alpha * bp.iter().zip(&powed).map(|(&v, &u)| v * u).sum::<f64>();
                    denom *= 1.0 + alpha;
                }
                centers.center_mut(i)[ch] = num / denom;
            }
        }

        // Objective with the fresh centers (distances recomputed so the
        // trace reflects the post-update pair).
        let dist = distance_planes(image, filtered, &centers);
        let mut objective = 0.0;
        for (i, d) in dist.iter().enumerate() {
            for idx in 0..n {
                objective += d[idx] * memberships[i][idx].powf(config.p);
            }
        }
        objective_trace.push(objective);

        let mut change = 0.0;
        let mut scale = 0.0;
        for i in 0..classes {
            for ch in 0..image.channels() {
                let delta = centers.center(i)[ch] - previous.center(i)[ch];
                change += delta * delta;
                scale += previous.center(i)[ch] * previous.center(i)[ch];
            }
        }
        if (change / scale.max(1.0)).sqrt() < config.tol {
            break;
        }
    }

    let fields = memberships
        .into_iter()
        .map(|m| ScalarField::from_data(h, w, m).unwrap())
        .collect();
    Ok(FcmRun {
        u: MembershipField::from_fields(fields)?,
        c: centers,
        objective_trace,
        iterations,
    })
}

/// FCM with the per-iteration objective trace.
pub fn fcm_run(image: &Image, classes: usize, config: &FcmConfig, _seed: u64) -> Result<FcmRun> {
    fcm_loop(image, None, classes, config)
}

/// Fuzzy c-means clustering of the image intensities.
pub fn fcm(image: &Image, classes: usize, config: &FcmConfig, seed: u64) -> Result<(MembershipField, ClassCenters)> {
    let run = fcm_run(image, classes, config, seed)?;
    Ok((run.u, run.c))
}

/// FCM_S2 with the per-iteration objective trace.
pub fn fcm_s2_run(image: &Image, classes: usize, config: &FcmConfig, _seed: u64) -> Result<FcmRun> {
    config.validate()?;
    let filtered = median_filter(image, config.median_window)?;
    fcm_loop(image, Some((&filtered, config.alpha)), classes, config)
}

/// FCM_S2: fuzzy c-means on the distance augmented with a median-filtered
/// copy of the image.
pub fn fcm_s2(image: &Image, classes: usize, config: &FcmConfig, seed: u64) -> Result<(MembershipField, ClassCenters)> {
    let run = fcm_s2_run(image, classes, config, seed)?;
    Ok((run.u, run.c))
}

/// Produces `(U^0, C^0)` for the ADMM solvers according to the strategy.
pub fn init_from(
    strategy: InitStrategy,
    image: &Image,
    classes: usize,
    config: &FcmConfig,
    seed: u64,
) -> Result<(MembershipField, ClassCenters)> {
    match strategy {
        InitStrategy::Fcm => fcm(image, classes, config, seed),
        InitStrategy::FcmS2 => fcm_s2(image, classes, config, seed),
        InitStrategy::RandomUFcmC => {
            let (_, c) = fcm(image, classes, config, seed)?;
            let u = uniform_membership(image.height(), image.width(), classes, seed)?;
            Ok((u, c))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_value_image() -> Image {
        let mut data = vec![20.0; 64];
        for v in data.iter_mut().skip(32) {
            *v = 128.0;
        }
        Image::from_data(8, 8, 1, data).unwrap()
    }

    #[test]
    fn fcm_recovers_two_point_masses() {
        let img = two_value_image();
        let (_, c) = fcm(&img, 2, &FcmConfig::default(), 0).unwrap();
        let mut vals: Vec<f64> = c.iter().map(|c| c[0]).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 20.0).abs() < 1e-6, "{:?}", vals);
        assert!((vals[1] - 128.0).abs() < 1e-6, "{:?}", vals);
    }

    #[test]
    fn fcm_memberships_on_simplex() {
        let img = two_value_image();
        let (u, _) = fcm(&img, 3, &FcmConfig::default(), 0).unwrap();
        assert!(u.simplex_violation() < 1e-12);
    }

    #[test]
    fn fcm_objective_monotone() {
        let mut data = Vec::new();
        for i in 0..100 {
            data.push(20.0 + (i % 13) as f64 * 7.0);
        }
        let img = Image::from_data(10, 10, 1, data).unwrap();
        let run = fcm_run(&img, 3, &FcmConfig::default(), 0).unwrap();
        for pair in run.objective_trace.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-9),
                "objective rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn fcm_s2_noiseless_matches_fcm_partition() {
        let img = two_value_image();
        let (u1, _) = fcm(&img, 2, &FcmConfig::default(), 0).unwrap();
        let (u2, _) = fcm_s2(&img, 2, &FcmConfig::default(), 0).unwrap();
        let l1 = crate::metrics::defuzzify(&u1);
        let l2 = crate::metrics::defuzzify(&u2);
        let sa = crate::metrics::segmentation_accuracy(&l1, &l2, 2).unwrap();
        assert_eq!(sa.sa, 1.0);
    }

    #[test]
    fn median_filter_constant_fixed_point() {
        let img = Image::new(6, 6, 1, 9.0).unwrap();
        let out = median_filter(&img, 3).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn median_filter_removes_single_impulse() {
        let mut img = Image::new(7, 7, 1, 50.0).unwrap();
        img.set(3, 3, 0, 255.0);
        let out = median_filter(&img, 3).unwrap();
        assert!(out.values().iter().all(|&v| v == 50.0));
    }

    #[test]
    fn median_filter_rejects_even_window() {
        let img = Image::new(4, 4, 1, 0.0).unwrap();
        assert!(median_filter(&img, 4).is_err());
        assert!(median_filter(&img, 1).is_err());
    }

    #[test]
    fn median_filter_matches_naive_oracle() {
        // Deterministic pseudo-random 7x7 content.
        let mut data = Vec::new();
        for i in 0..49u64 {
            data.push(((i * 2654435761) % 256) as f64);
        }
        let img = Image::from_data(7, 7, 1, data.clone()).unwrap();
        let out = median_filter(&img, 3).unwrap();
        for i in 0..7i64 {
            for j in 0..7i64 {
                let mut window = Vec::new();
                for di in -1..=1i64 {
                    for dj in -1..=1i64 {
                        let ii = (i + di).clamp(0, 6) as usize;
                        let jj = (j + dj).clamp(0, 6) as usize;
                        window.push(data[ii * 7 + jj]);
                    }
                }
                window.sort_by(f64::total_cmp);
                assert_eq!(out.at(i as usize, j as usize, 0), window[4]);
            }
        }
    }

    #[test]
    fn init_from_delegates() {
        let img = two_value_image();
        let cfg = FcmConfig::default();
        let (u_a, c_a) = init_from(InitStrategy::Fcm, &img, 2, &cfg, 5).unwrap();
        let (u_b, c_b) = fcm(&img, 2, &cfg, 5).unwrap();
        assert_eq!(u_a, u_b);
        assert_eq!(c_a, c_b);

        let (u_r, c_r) = init_from(InitStrategy::RandomUFcmC, &img, 2, &cfg, 5).unwrap();
        assert_eq!(c_r, c_b);
        assert_eq!(u_r, crate::grid::uniform_membership(8, 8, 2, 5).unwrap());

        let (u_r2, _) = init_from(InitStrategy::RandomUFcmC, &img, 2, &cfg, 5).unwrap();
        assert_eq!(u_r, u_r2);
    }
}
