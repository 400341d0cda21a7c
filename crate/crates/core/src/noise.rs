//! Synthetic piecewise-constant phantoms and seeded noise corruptions.
//!
//! Three phantom layouts cover two-phase grayscale, five-phase grayscale,
//! and six-phase color segmentation. The shapes are fixed, deterministic,
//! give every class at least 5% of the pixels, and mix straight and curved
//! boundaries; the class intensities are the quantities the solvers must
//! recover.
//!
//! Noise generators are pure functions of (image, parameters, seed) on a
//! ChaCha8 stream. Gaussian noise is left unclipped: clamping would bias the
//! noise near 0 and 255 and silently change its standard deviation, and the
//! solvers accept real-valued input anyway. Quantization to 8 bits happens
//! only at image-file boundaries.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::metrics::LabelMap;

/// The three phantom layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    /// Intensities 20 and 128, default 128x128: a disk and a bar on a
    /// background.
    TwoPhaseGray,
    /// Intensities 0, 63, 127, 192, 255, default 235x237: nested disks on a
    /// rectangle on a background.
    FivePhaseGray,
    /// Six color patches in a 2x3 grid with a center disk, default 100x100.
    SixPhaseColor,
}

impl PhantomKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two-phase-gray" => Ok(PhantomKind::TwoPhaseGray),
            "five-phase-gray" => Ok(PhantomKind::FivePhaseGray),
            "six-phase-color" => Ok(PhantomKind::SixPhaseColor),
            other => Err(Error::invalid(format!("unknown phantom kind '{}'", other))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::TwoPhaseGray => "two-phase-gray",
            PhantomKind::FivePhaseGray => "five-phase-gray",
            PhantomKind::SixPhaseColor => "six-phase-color",
        }
    }

    pub fn default_size(&self) -> (usize, usize) {
        match self {
            PhantomKind::TwoPhaseGray => (128, 128),
            PhantomKind::FivePhaseGray => (235, 237),
            PhantomKind::SixPhaseColor => (100, 100),
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            PhantomKind::TwoPhaseGray => 2,
            PhantomKind::FivePhaseGray => 5,
            PhantomKind::SixPhaseColor => 6,
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            PhantomKind::SixPhaseColor => 3,
            _ => 1,
        }
    }

    /// The ground-truth class intensities, one vector per class.
    pub fn intensities(&self) -> Vec<Vec<f64>> {
        match self {
            PhantomKind::TwoPhaseGray => vec![vec![20.0], vec![128.0]],
            PhantomKind::FivePhaseGray => {
                vec![vec![0.0], vec![63.0], vec![127.0], vec![192.0], vec![255.0]]
            }
            PhantomKind::SixPhaseColor => vec![
                vec![12.0, 11.0, 242.0],
                vec![242.0, 12.0, 11.0],
                vec![242.0, 241.0, 242.0],
                vec![243.0, 241.0, 12.0],
                vec![12.0, 12.0, 12.0],
                vec![12.0, 242.0, 12.0],
            ],
        }
    }
}

/// A phantom layout at a concrete size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub height: usize,
    pub width: usize,
}

impl PhantomSpec {
    /// The layout at its paper-matching default size.
    pub fn new(kind: PhantomKind) -> Self {
        let (height, width) = kind.default_size();
        PhantomSpec { kind, height, width }
    }

    pub fn with_size(kind: PhantomKind, height: usize, width: usize) -> Self {
        PhantomSpec { kind, height, width }
    }
}

/// The noise corruptions of the benchmark protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Additive zero-mean Gaussian; `level` is the standard deviation in
    /// intensity units.
    Gn,
    /// Salt-and-pepper impulse noise; `level` is the fraction of corrupted
    /// pixel sites in (0, 1].
    Spin,
    /// Random-valued impulse noise, values uniform on [0, 255); `level` as
    /// for SPIN.
    Rvin,
    /// Missing pixels reduced to salt-and-pepper; `level` in (0, 1).
    Missing,
}

impl NoiseKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gn" => Ok(NoiseKind::Gn),
            "spin" => Ok(NoiseKind::Spin),
            "rvin" => Ok(NoiseKind::Rvin),
            "missing" => Ok(NoiseKind::Missing),
            other => Err(Error::invalid(format!("unknown noise kind '{}'", other))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Gn => "gn",
            NoiseKind::Spin => "spin",
            NoiseKind::Rvin => "rvin",
            NoiseKind::Missing => "missing",
        }
    }
}

/// One corruption: kind, level (sigma or fraction), seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::Gn => {
                if !(self.level > 0.0) {
                    return Err(Error::invalid(format!("sigma must be > 0, got {}", self.level)));
                }
            }
            NoiseKind::Spin | NoiseKind::Rvin => {
                if !(self.level > 0.0 && self.level <= 1.0) {
                    return Err(Error::invalid(format!(
                        "fraction must be in (0, 1], got {}",
                        self.level
                    )));
                }
            }
            NoiseKind::Missing => {
                if !(self.level > 0.0 && self.level < 1.0) {
                    return Err(Error::invalid(format!(
                        "missing fraction must be in (0, 1), got {}",
                        self.level
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies this corruption; the mask is present for missing-data noise.
    pub fn apply(&self, image: &Image) -> Result<(Image, Option<Vec<bool>>)> {
        self.validate()?;
        match self.kind {
            NoiseKind::Gn => Ok((add_gaussian(image, self.level, self.seed)?, None)),
            NoiseKind::Spin => Ok((add_spin(image, self.level, self.seed)?, None)),
            NoiseKind::Rvin => Ok((add_rvin(image, self.level, self.seed)?, None)),
            NoiseKind::Missing => {
                let (img, mask) = mask_missing(image, self.level, self.seed)?;
                Ok((img, Some(mask)))
            }
        }
    }
}

fn paint_disk(labels: &mut [u8], h: usize, w: usize, cy: f64, cx: f64, radius: f64, class: u8) {
    for i in 0..h {
        for j in 0..w {
            let dy = i as f64 - cy;
            let dx = j as f64 - cx;
            if dy * dy + dx * dx <= radius * radius {
                labels[i * w + j] = class;
            }
        }
    }
}

fn paint_rect(labels: &mut [u8], w: usize, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, class: u8) {
    for i in rows {
        for j in cols.clone() {
            labels[i * w + j] = class;
        }
    }
}

/// Builds the phantom image and its ground-truth label map.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(Image, LabelMap)> {
    let (h, w) = (spec.height, spec.width);
    if h < 16 || w < 16 {
        return Err(Error::invalid("phantom grids below 16x16 degenerate"));
    }
    let mut labels = vec![0u8; h * w];
    match spec.kind {
        PhantomKind::TwoPhaseGray => {
            // Straight boundaries: a wide bar across the lower half carries
            // the bulk of the foreground area. Curved boundary: a small disk
            // in the upper left; its rim is kept short because every curved
            // staircase pixel is a potential single-pixel error under heavy
            // impulse noise.
            paint_disk(
                &mut labels,
                h,
                w,
                0.28 * (h - 1) as f64,
                0.30 * (w - 1) as f64,
                0.08 * h.min(w) as f64,
                1,
            );
            paint_rect(
                &mut labels,
                w,
                (55 * h / 100)..(86 * h / 100),
                (16 * w / 100)..(84 * w / 100),
                1,
            );
        }
        PhantomKind::FivePhaseGray => {
            paint_rect(&mut labels, w, (h / 10)..(9 * h / 10), (w / 10)..(9 * w / 10), 1);
            let (cy, cx) = (0.5 * (h - 1) as f64, 0.5 * (w - 1) as f64);
            let m = h.min(w) as f64;
            paint_disk(&mut labels, h, w, cy, cx, 0.32 * m, 2);
            paint_disk(&mut labels, h, w, cy, cx, 0.24 * m, 3);
            paint_disk(&mut labels, h, w, cy, cx, 0.13 * m, 4);
        }
        PhantomKind::SixPhaseColor => {
            // 2x3 grid of patches, plus a center disk of the last class for
            // a curved boundary.
            for i in 0..h {
                for j in 0..w {
                    let row = if i < h / 2 { 0 } else { 1 };
                    let col = (j * 3 / w).min(2);
                    labels[i * w + j] = (row * 3 + col) as u8;
                }
            }
            paint_disk(
                &mut labels,
                h,
                w,
                0.5 * (h - 1) as f64,
                0.5 * (w - 1) as f64,
                0.18 * h.min(w) as f64,
                5,
            );
        }
    }

    let intensities = spec.kind.intensities();
    let channels = spec.kind.channels();
    let mut img = Image::new(h, w, channels, 0.0)?;
    for ch in 0..channels {
        let plane = img.channel_mut(ch);
        for (idx, &lab) in labels.iter().enumerate() {
            plane[idx] = intensities[lab as usize][ch];
        }
    }
    Ok((img, LabelMap::from_data(h, w, labels)?))
}

/// Adds i.i.d. zero-mean Gaussian noise per pixel per channel, unclipped.
pub fn add_gaussian(image: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {}", sigma)));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = image.clone();
    for v in out.values_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}

/// Picks exactly `round(fraction * pixels)` distinct sites by a partial
/// Fisher-Yates shuffle of the pixel indices.
fn pick_sites(pixels: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let count = ((fraction * pixels as f64).round() as usize).min(pixels);
    let mut indices: Vec<usize> = (0..pixels).collect();
    for t in 0..count {
        let j = rng.random_range(t..pixels);
        indices.swap(t, j);
    }
    indices.truncate(count);
    indices
}

fn spin_like(image: &Image, fraction: f64, seed: u64) -> Result<(Image, Vec<bool>)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {}", fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = image.pixel_count();
    let sites = pick_sites(pixels, fraction, &mut rng);
    let mut out = image.clone();
    let mut mask = vec![false; pixels];
    for &site in &sites {
        mask[site] = true;
        if image.channels() == 1 {
            // One coin per site: the whole (grayscale) pixel goes dark or
            // bright.
            let v = if rng.random::<bool>() { 255.0 } else { 0.0 };
            out.channel_mut(0)[site] = v;
        } else {
            for ch in 0..image.channels() {
                let v = if rng.random::<bool>() { 255.0 } else { 0.0 };
                out.channel_mut(ch)[site] = v;
            }
        }
    }
    Ok((out, mask))
}

/// Salt-and-pepper impulse noise on exactly `round(fraction * pixels)`
/// sites; fair coin between 0 and 255, independent per channel for color
/// images.
pub fn add_spin(image: &Image, fraction: f64, seed: u64) -> Result<Image> {
    Ok(spin_like(image, fraction, seed)?.0)
}

/// Random-valued impulse noise: corrupted values drawn uniformly on
/// [0, 255), independent per channel for color images.
pub fn add_rvin(image: &Image, fraction: f64, seed: u64) -> Result<Image> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {}", fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = image.pixel_count();
    let sites = pick_sites(pixels, fraction, &mut rng);
    let mut out = image.clone();
    for &site in &sites {
        if image.channels() == 1 {
            out.channel_mut(0)[site] = rng.random::<f64>() * 255.0;
        } else {
            for ch in 0..image.channels() {
                out.channel_mut(ch)[site] = rng.random::<f64>() * 255.0;
            }
        }
    }
    Ok(out)
}

/// Missing data handled the way the C-update justifies: each missing site is
/// assigned 0 or 255 by a fair coin, i.e. reduced to salt-and-pepper noise,
/// and the mask of missing sites is returned for masked evaluation. Produces
/// bit-identical pixels to [`add_spin`] at the same fraction and seed.
pub fn mask_missing(image: &Image, fraction: f64, seed: u64) -> Result<(Image, Vec<bool>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "missing fraction must be in (0, 1), got {}",
            fraction
        )));
    }
    spin_like(image, fraction, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn support(values: &[f64]) -> BTreeSet<i64> {
        values.iter().map(|&v| v.round() as i64).collect()
    }

    #[test]
    fn two_phase_phantom_support_and_size() {
        let (img, labels) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
        assert_eq!((img.height(), img.width(), img.channels()), (128, 128, 1));
        assert_eq!(support(img.values()), BTreeSet::from([20, 128]));
        // Image and labels consistent.
        for (idx, &lab) in labels.labels().iter().enumerate() {
            let expected = if lab == 0 { 20.0 } else { 128.0 };
            assert_eq!(img.values()[idx], expected);
        }
    }

    #[test]
    fn five_phase_phantom_support() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::FivePhaseGray)).unwrap();
        assert_eq!((img.height(), img.width()), (235, 237));
        assert_eq!(support(img.values()), BTreeSet::from([0, 63, 127, 192, 255]));
    }

    #[test]
    fn six_phase_color_uses_exact_vectors() {
        let spec = PhantomSpec::new(PhantomKind::SixPhaseColor);
        let (img, labels) = make_phantom(&spec).unwrap();
        assert_eq!((img.height(), img.width(), img.channels()), (100, 100, 3));
        let colors = spec.kind.intensities();
        for (idx, &lab) in labels.labels().iter().enumerate() {
            for ch in 0..3 {
                assert_eq!(img.channel(ch)[idx], colors[lab as usize][ch]);
            }
        }
    }

    #[test]
    fn every_phantom_class_covers_five_percent() {
        for kind in [
            PhantomKind::TwoPhaseGray,
            PhantomKind::FivePhaseGray,
            PhantomKind::SixPhaseColor,
        ] {
            let spec = PhantomSpec::new(kind);
            let (_, labels) = make_phantom(&spec).unwrap();
            let total = (spec.height * spec.width) as f64;
            let mut counts = vec![0usize; kind.classes()];
            for &lab in labels.labels() {
                counts[lab as usize] += 1;
            }
            for (class, &count) in counts.iter().enumerate() {
                assert!(
                    count as f64 / total >= 0.05,
                    "{:?} class {} covers {:.3}",
                    kind,
                    class,
                    count as f64 / total
                );
            }
        }
    }

    #[test]
    fn gaussian_moments_and_determinism() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
        let sigma = 30.0;
        let noisy = add_gaussian(&img, sigma, 9).unwrap();
        let n = img.values().len() as f64;
        let mean: f64 = noisy
            .values()
            .iter()
            .zip(img.values())
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 3.0 * sigma / 128.0, "mean {}", mean);
        let var: f64 = noisy
            .values()
            .iter()
            .zip(img.values())
            .map(|(a, b)| (a - b - mean) * (a - b - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        assert!((std - sigma).abs() < 0.05 * sigma, "std {}", std);

        assert_eq!(noisy, add_gaussian(&img, sigma, 9).unwrap());
        assert_ne!(noisy, add_gaussian(&img, sigma, 10).unwrap());
    }

    #[test]
    fn spin_exact_count_and_values() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
        let noisy = add_spin(&img, 0.4, 3).unwrap();
        let changedable: usize = noisy
            .values()
            .iter()
            .zip(img.values())
            .filter(|(a, b)| a != b)
            .count();
        let corrupted: usize = noisy
            .values()
            .iter()
            .filter(|&&v| v == 0.0 || v == 255.0)
            .count();
        let expected = (0.4 * 16384.0_f64).round() as usize;
        // Sites set to 0/255 include any unchanged coincidences; changed
        // pixels are a lower bound, 0/255 pixels an upper bound around the
        // exact site count.
        assert!(changedable <= expected);
        assert!(corrupted >= expected);

        let zeros = noisy.values().iter().filter(|&&v| v == 0.0).count() as f64;
        let frac0 = zeros / expected as f64;
        assert!((frac0 - 0.5).abs() < 0.05, "pepper fraction {}", frac0);
    }

    #[test]
    fn spin_full_fraction_saturates() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
        let noisy = add_spin(&img, 1.0, 1).unwrap();
        assert!(noisy.values().iter().all(|&v| v == 0.0 || v == 255.0));
    }

    #[test]
    fn rvin_count_mean_and_untouched_sites() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
        let noisy = add_rvin(&img, 0.4, 17).unwrap();
        let expected = (0.4 * 16384.0_f64).round() as usize;
        let changed: Vec<f64> = noisy
            .values()
            .iter()
            .zip(img.values())
            .filter(|(a, b)| a != b)
            .map(|(a, _)| *a)
            .collect();
        // A uniform draw collides with a clean value with probability 0.
        assert_eq!(changed.len(), expected);
        let mean: f64 = changed.iter().sum::<f64>() / changed.len() as f64;
        assert!((mean - 127.5).abs() < 2.0, "mean {}", mean);
    }

    #[test]
    fn missing_equals_spin_and_counts_sites() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::TwoPhaseGray)).unwrap();
        let (masked, mask) = mask_missing(&img, 0.5, 21).unwrap();
        let spin = add_spin(&img, 0.5, 21).unwrap();
        assert_eq!(masked, spin);
        let sites = mask.iter().filter(|&&m| m).count();
        assert_eq!(sites, (0.5 * 16384.0_f64).round() as usize);
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec { kind: NoiseKind::Gn, level: 0.0, seed: 0 }.validate().is_err());
        assert!(NoiseSpec { kind: NoiseKind::Spin, level: 1.5, seed: 0 }.validate().is_err());
        assert!(NoiseSpec { kind: NoiseKind::Missing, level: 1.0, seed: 0 }.validate().is_err());
        assert!(NoiseSpec { kind: NoiseKind::Rvin, level: 0.2, seed: 0 }.validate().is_ok());
    }
}
