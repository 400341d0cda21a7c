//! Hard segmentations and how they are scored: defuzzification,
//! permutation-matched segmentation accuracy, piecewise-constant
//! reconstruction, and contrast reporting.
//!
//! The energy is invariant under any relabeling of the classes, so accuracy
//! is maximized over all label permutations. With at most 8 classes the
//! brute-force scan over a precomputed confusion matrix is exact and cheap.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ClassCenters, Image, MembershipField};

/// Maximum class count supported by permutation matching (8! = 40320).
pub const MAX_CLASSES: usize = 8;

/// Per-pixel class indices on an image grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn from_data(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "label map {}x{} needs {} entries, got {}",
                height,
                width,
                height * width,
                data.len()
            )));
        }
        Ok(LabelMap { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u8] {
        &self.data
    }

    pub fn max_label(&self) -> u8 {
        self.data.iter().copied().max().unwrap_or(0)
    }
}

/// Permutation-matched segmentation accuracy with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaReport {
    /// Correct pixels over evaluated pixels, in [0, 1].
    pub sa: f64,
    /// `permutation[p]` is the truth label matched to predicted label `p`.
    pub permutation: Vec<usize>,
    /// Row-major `n x n` counts: `confusion[p * n + t]`.
    pub confusion: Vec<u64>,
    pub classes: usize,
    /// Pixels that entered the count (all of them unless a mask excluded
    /// some).
    pub evaluated_pixels: u64,
}

/// Per-pixel argmax over classes; ties break toward the lowest class index.
pub fn defuzzify(u: &MembershipField) -> LabelMap {
    let n = u.height() * u.width();
    let mut data = vec![0u8; n];
    for (idx, lab) in data.iter_mut().enumerate() {
        let mut best = 0usize;
        let mut best_v = u.class(0).values()[idx];
        for i in 1..u.classes() {
            let v = u.class(i).values()[idx];
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        *lab = best as u8;
    }
    LabelMap {
        height: u.height(),
        width: u.width(),
        data,
    }
}

/// Segmentation accuracy of `pred` against `truth`, maximized over all
/// permutations of the predicted labels.
pub fn segmentation_accuracy(pred: &LabelMap, truth: &LabelMap, classes: usize) -> Result<SaReport> {
    segmentation_accuracy_masked(pred, truth, classes, None)
}

/// Like [`segmentation_accuracy`], but pixels where `exclude` is true (for
/// example missing-data sites) do not enter the count.
pub fn segmentation_accuracy_masked(
    pred: &LabelMap,
    truth: &LabelMap,
    classes: usize,
    exclude: Option<&[bool]>,
) -> Result<SaReport> {
    if classes > MAX_CLASSES {
        return Err(Error::invalid(format!(
            "permutation matching supports at most {} classes, got {}",
            MAX_CLASSES, classes
        )));
    }
    if classes < 1 {
        return Err(Error::invalid("need at least one class"));
    }
    if (pred.height, pred.width) != (truth.height, truth.width) {
        return Err(Error::shape("label maps disagree on grid size"));
    }
    if let Some(mask) = exclude {
        if mask.len() != pred.data.len() {
            return Err(Error::shape("exclusion mask does not match grid"));
        }
    }

    let mut confusion = vec![0u64; classes * classes];
    let mut evaluated = 0u64;
    for idx in 0..pred.data.len() {
        if exclude.map_or(false, |m| m[idx]) {
            continue;
        }
        let (p, t) = (pred.data[idx] as usize, truth.data[idx] as usize);
        if p >= classes || t >= classes {
            return Err(Error::invalid(format!(
                "label out of range at pixel {}: pred {}, truth {}",
                idx, p, t
            )));
        }
        confusion[p * classes + t] += 1;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::invalid("no pixels left to evaluate"));
    }

    let mut best_correct = 0u64;
    let mut best_perm: Vec<usize> = (0..classes).collect();
    for perm in (0..classes).permutations(classes) {
        let correct: u64 = (0..classes).map(|p| confusion[p * classes + perm[p]]).sum();
        if correct > best_correct {
            best_correct = correct;
            best_perm = perm;
        }
    }

    Ok(SaReport {
        sa: best_correct as f64 / evaluated as f64,
        permutation: best_perm,
        confusion,
        classes,
        evaluated_pixels: evaluated,
    })
}

/// Piecewise-constant image `I(x) = c_{label(x)}`.
pub fn reconstruct(labels: &LabelMap, centers: &ClassCenters) -> Result<Image> {
    let classes = centers.classes();
    if labels.max_label() as usize >= classes {
        return Err(Error::invalid(format!(
            "label {} out of range for {} classes",
            labels.max_label(),
            classes
        )));
    }
    let mut img = Image::new(labels.height, labels.width, centers.channels(), 0.0)?;
    for ch in 0..centers.channels() {
        let plane = img.channel_mut(ch);
        for (idx, &lab) in labels.data.iter().enumerate() {
            plane[idx] = centers.center(lab as usize)[ch];
        }
    }
    Ok(img)
}

/// How far estimated centers sit from the truth, after matching classes by
/// the permutation minimizing total center distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    /// Per estimated class, the L1 distance to its matched true center.
    pub center_errors: Vec<f64>,
    /// (max - min) of estimated centers over (max - min) of true centers,
    /// averaged over channels. Below 1 means the estimate shrank the range.
    pub range_ratio: f64,
    /// `permutation[i]` is the true class matched to estimated class `i`.
    pub permutation: Vec<usize>,
}

pub fn contrast_report(estimated: &ClassCenters, truth: &ClassCenters) -> Result<ContrastReport> {
    let n = estimated.classes();
    if n != truth.classes() || estimated.channels() != truth.channels() {
        return Err(Error::shape("center sets disagree on classes or channels"));
    }
    if n > MAX_CLASSES {
        return Err(Error::invalid(format!(
            "permutation matching supports at most {} classes, got {}",
            MAX_CLASSES, n
        )));
    }
    let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum() };

    let mut best_perm: Vec<usize> = (0..n).collect();
    let mut best_total = f64::INFINITY;
    for perm in (0..n).permutations(n) {
        let total: f64 = (0..n).map(|i| dist(estimated.center(i), truth.center(perm[i]))).sum();
        if total < best_total {
            best_total = total;
            best_perm = perm;
        }
    }
    let center_errors: Vec<f64> = (0..n)
        .map(|i| dist(estimated.center(i), truth.center(best_perm[i])))
        .collect();

    let channels = estimated.channels();
    let mut ratio_sum = 0.0;
    for ch in 0..channels {
        let range = |c: &ClassCenters| -> (f64, f64) {
            let min = c.iter().map(|v| v[ch]).fold(f64::INFINITY, f64::min);
            let max = c.iter().map(|v| v[ch]).fold(f64::NEG_INFINITY, f64::max);
            (min, max)
        };
        let (emin, emax) = range(estimated);
        let (tmin, tmax) = range(truth);
        if tmax - tmin <= 0.0 {
            return Err(Error::invalid("true centers have zero range"));
        }
        ratio_sum += (emax - emin) / (tmax - tmin);
    }

    Ok(ContrastReport {
        center_errors,
        range_ratio: ratio_sum / channels as f64,
        permutation: best_perm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{MembershipField, ScalarField};

    fn labels(h: usize, w: usize, data: &[u8]) -> LabelMap {
        LabelMap::from_data(h, w, data.to_vec()).unwrap()
    }

    #[test]
    fn defuzzify_indicators_and_ties() {
        let u = MembershipField::from_fields(vec![
            ScalarField::from_data(1, 3, vec![0.5, 0.2, 1.0]).unwrap(),
            ScalarField::from_data(1, 3, vec![0.5, 0.3, 0.0]).unwrap(),
            ScalarField::from_data(1, 3, vec![0.0, 0.5, 0.0]).unwrap(),
        ])
        .unwrap();
        let lm = defuzzify(&u);
        // Tie at pixel 0 goes to class 0; argmax elsewhere.
        assert_eq!(lm.labels(), &[0, 2, 0]);
    }

    #[test]
    fn sa_exact_match_and_permutation_invariance() {
        let truth = labels(2, 2, &[0, 0, 1, 1]);
        let same = segmentation_accuracy(&truth, &truth, 2).unwrap();
        assert_eq!(same.sa, 1.0);

        let swapped = labels(2, 2, &[1, 1, 0, 0]);
        let report = segmentation_accuracy(&swapped, &truth, 2).unwrap();
        assert_eq!(report.sa, 1.0);
        assert_eq!(report.permutation, vec![1, 0]);
    }

    #[test]
    fn sa_counts_wrong_pixels() {
        // 164 wrong pixels out of 128*128 = 16384 must give exactly 0.9900.
        let n = 16384usize;
        let truth_data = vec![0u8; n / 2].into_iter().chain(vec![1u8; n / 2]).collect::<Vec<_>>();
        let mut pred_data = truth_data.clone();
        for p in pred_data.iter_mut().take(164) {
            *p = 1 - *p;
        }
        let truth = labels(128, 128, &truth_data);
        let pred = labels(128, 128, &pred_data);
        let report = segmentation_accuracy(&pred, &truth, 2).unwrap();
        assert!((report.sa - (1.0 - 164.0 / 16384.0)).abs() < 1e-15);
        assert!((report.sa - 0.9900).abs() < 5e-5);
    }

    #[test]
    fn sa_rejects_too_many_classes() {
        let truth = labels(1, 2, &[0, 1]);
        assert!(segmentation_accuracy(&truth, &truth, 9).is_err());
    }

    #[test]
    fn sa_mask_excludes_pixels() {
        let truth = labels(1, 4, &[0, 0, 1, 1]);
        let pred = labels(1, 4, &[0, 1, 1, 1]);
        let full = segmentation_accuracy(&pred, &truth, 2).unwrap();
        assert!((full.sa - 0.75).abs() < 1e-15);
        let mask = [false, true, false, false];
        let masked = segmentation_accuracy_masked(&pred, &truth, 2, Some(&mask)).unwrap();
        assert_eq!(masked.sa, 1.0);
        assert_eq!(masked.evaluated_pixels, 3);
    }

    #[test]
    fn reconstruct_paints_centers() {
        let lm = labels(1, 3, &[0, 1, 0]);
        let c = ClassCenters::new(vec![vec![10.0], vec![200.0]]).unwrap();
        let img = reconstruct(&lm, &c).unwrap();
        assert_eq!(img.values(), &[10.0, 200.0, 10.0]);

        let constant = reconstruct(&labels(1, 3, &[1, 1, 1]), &c).unwrap();
        assert!(constant.values().iter().all(|&v| v == 200.0));
    }

    #[test]
    fn reconstruct_rejects_out_of_range_label() {
        let lm = labels(1, 2, &[0, 3]);
        let c = ClassCenters::new(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(reconstruct(&lm, &c).is_err());
    }

    #[test]
    fn contrast_exact_centers() {
        let c = ClassCenters::new(vec![vec![20.0], vec![128.0]]).unwrap();
        let report = contrast_report(&c, &c).unwrap();
        assert_eq!(report.center_errors, vec![0.0, 0.0]);
        assert_eq!(report.range_ratio, 1.0);
    }

    #[test]
    fn contrast_detects_shrinkage_under_relabeling() {
        let truth = ClassCenters::new(vec![vec![20.0], vec![128.0]]).unwrap();
        let est = ClassCenters::new(vec![vec![120.0], vec![30.0]]).unwrap();
        let report = contrast_report(&est, &truth).unwrap();
        assert_eq!(report.permutation, vec![1, 0]);
        assert!((report.range_ratio - 90.0 / 108.0).abs() < 1e-12);
        assert_eq!(report.center_errors, vec![8.0, 10.0]);
    }
}
