//! Discrete operators used by the ADMM subproblems: forward-difference
//! gradient and its adjoint, isotropic shrinkage, Euclidean projection onto
//! the probability simplex, the weighted median, and an FFT-diagonalized
//! solver for `(grad^T grad + I) u = rhs`.
//!
//! The gradient uses periodic forward differences by default; that is what
//! makes `grad^T grad` circulant and therefore diagonal in the 2-D DFT basis.
//! Symmetric (Neumann) differences with a cosine-transform solve are
//! available behind [`BoundaryRule::Neumann`].

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};

/// Boundary handling for the forward-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryRule {
    /// Wrap-around differences; the screened Poisson solve uses the DFT.
    #[default]
    Periodic,
    /// Zero gradient across the image border; the solve uses the DCT.
    Neumann,
}

/// Forward-difference gradient stencils for one boundary rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gradient2D {
    rule: BoundaryRule,
}

impl Gradient2D {
    pub fn new(rule: BoundaryRule) -> Self {
        Gradient2D { rule }
    }

    pub fn periodic() -> Self {
        Gradient2D::new(BoundaryRule::Periodic)
    }

    pub fn rule(&self) -> BoundaryRule {
        self.rule
    }

    /// Forward differences: `x` is the horizontal component
    /// `u(i, j+1) - u(i, j)` and `y` the vertical `u(i+1, j) - u(i, j)`.
    pub fn grad(&self, u: &ScalarField) -> VectorField {
        let (h, w) = (u.height(), u.width());
        let mut out = VectorField::zeros(h, w);
        let uv = u.values();
        let gx = out.x.values_mut();
        for i in 0..h {
            let row = i * w;
            for j in 0..w {
                let right = match self.rule {
                    BoundaryRule::Periodic => uv[row + (j + 1) % w],
                    BoundaryRule::Neumann => {
                        if j + 1 < w {
                            uv[row + j + 1]
                        } else {
                            uv[row + j]
                        }
                    }
                };
                gx[row + j] = right - uv[row + j];
            }
        }
        let gy = out.y.values_mut();
        for i in 0..h {
            let below_row = match self.rule {
                BoundaryRule::Periodic => ((i + 1) % h) * w,
                BoundaryRule::Neumann => {
                    if i + 1 < h {
                        (i + 1) * w
                    } else {
                        i * w
                    }
                }
            };
            let row = i * w;
            for j in 0..w {
                gy[row + j] = uv[below_row + j] - uv[row + j];
            }
        }
        out
    }

    /// Exact algebraic adjoint of [`Gradient2D::grad`] under the standard
    /// inner product, so `<grad u, p> = <u, div_adjoint p>` for all fields.
    pub fn div_adjoint(&self, p: &VectorField) -> ScalarField {
        let (h, w) = (p.height(), p.width());
        let mut out = ScalarField::new(h, w, 0.0);
        let px = p.x.values();
        let py = p.y.values();
        let ov = out.values_mut();
        match self.rule {
            BoundaryRule::Periodic => {
                for i in 0..h {
                    let row = i * w;
                    let up_row = ((i + h - 1) % h) * w;
                    for j in 0..w {
                        let left = row + (j + w - 1) % w;
                        ov[row + j] = px[left] - px[row + j] + py[up_row + j] - py[row + j];
                    }
                }
            }
            BoundaryRule::Neumann => {
                for i in 0..h {
                    let row = i * w;
                    for j in 0..w {
                        let mut v = 0.0;
                        if j >= 1 {
                            v += px[row + j - 1];
                        }
                        if j + 1 < w {
                            v -= px[row + j];
                        }
                        if i >= 1 {
                            v += py[row - w + j];
                        }
                        if i + 1 < h {
                            v -= py[row + j];
                        }
                        ov[row + j] = v;
                    }
                }
            }
        }
        out
    }
}

/// Periodic forward-difference gradient (the solver default).
pub fn grad(u: &ScalarField) -> VectorField {
    Gradient2D::periodic().grad(u)
}

/// Adjoint of [`grad`].
pub fn div_adjoint(p: &VectorField) -> ScalarField {
    Gradient2D::periodic().div_adjoint(p)
}

/// Isotropic soft shrinkage of a 2-vector:
/// `S(v, tau) = v / ||v|| * max(||v|| - tau, 0)`, with `S(0, tau) = 0`.
#[inline]
pub fn shrink(vx: f64, vy: f64, tau: f64) -> (f64, f64) {
    let norm = vx.hypot(vy);
    if norm <= tau || norm == 0.0 {
        (0.0, 0.0)
    } else {
        let scale = (norm - tau) / norm;
        (vx * scale, vy * scale)
    }
}

/// Euclidean projection of `w` onto the probability simplex
/// `{ w : w_i >= 0, sum w_i = 1 }`, in place.
///
/// Sort-based thresholding; after thresholding, the surviving entries are
/// renormalized so the output sums to one exactly despite rounding.
pub fn project_simplex(w: &mut [f64]) {
    debug_assert!(w.len() >= 2);
    // Already feasible: leave untouched so projection is the identity there.
    if w.iter().all(|&v| v >= 0.0) && w.iter().sum::<f64>() == 1.0 {
        return;
    }
    let mut sorted = w.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (j + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    let mut total = 0.0;
    for v in w.iter_mut() {
        *v = (*v - theta).max(0.0);
        total += *v;
    }
    // Kill rounding drift: rescale, then pin the largest coordinate so the
    // coordinate sum is exactly one.
    if total > 0.0 {
        for v in w.iter_mut() {
            *v /= total;
        }
    } else {
        // theta swallowed everything (only possible through rounding);
        // fall back to putting all mass on the largest input entry.
        let argmax = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        w.fill(0.0);
        w[argmax] = 1.0;
        return;
    }
    let argmax = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    let rest: f64 = w.iter().enumerate().filter(|(i, _)| *i != argmax).map(|(_, v)| v).sum();
    w[argmax] = 1.0 - rest;
}

/// Result of a weighted-median computation: the endpoints of the optimal
/// interval and the value the solver commits to (the smallest optimum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMedian {
    pub low: f64,
    pub high: f64,
    pub chosen: f64,
}

impl WeightedMedian {
    /// Midpoint of the optimal interval.
    pub fn fuzzy_median(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

/// Minimizes `sum_j |values[j] - c| * weights[j]` over `c`.
///
/// Sorts the values (stably, carrying weights) and walks the cumulative
/// weight: with `A = sum w`, the optimal set is the interval between the
/// first sorted value whose cumulative weight reaches `A/2` and the value
/// after the last one whose cumulative weight stays at or below `A/2`.
/// Zero-weight entries are present but never move those crossings.
/// `chosen` is the interval's lower endpoint.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<WeightedMedian> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::invalid(format!(
            "weighted median needs matching non-empty inputs, got {} values / {} weights",
            values.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::invalid("weights must be finite and >= 0"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }

    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable: equal values keep their original index order.
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut cum = 0.0;
    let mut low_idx = None;
    let mut last_at_or_below = None;
    for (pos, &idx) in order.iter().enumerate() {
        cum += weights[idx];
        if low_idx.is_none() && 2.0 * cum >= total {
            low_idx = Some(pos);
        }
        if 2.0 * cum <= total {
            last_at_or_below = Some(pos);
        }
    }
    // cum reaches `total` and total > 0, so the crossing always exists.
    let low_pos = low_idx.expect("cumulative weight must reach half the total");
    let high_pos = match last_at_or_below {
        Some(p) => p + 1,
        None => 0,
    };
    let low = values[order[low_pos]];
    let high = values[order[high_pos.min(order.len() - 1)]];
    Ok(WeightedMedian { low, high, chosen: low })
}

/// Solver for `(grad^T grad + I) u = rhs` on a fixed grid, diagonalized by
/// the DFT (periodic rule) or the DCT (Neumann rule).
///
/// The denominator `1 + lap(k)` is at least one, so the solve never
/// degenerates. Transforms of the rhs are computed fresh on every call; the
/// plans and eigenvalue grid are cached.
pub struct ScreenedPoisson {
    height: usize,
    width: usize,
    rule: BoundaryRule,
    inv_denom: Vec<f64>,
    fft: Option<FftPlans>,
    dct: Option<DctPlans>,
}

struct FftPlans {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

struct DctPlans {
    row: DctMatrices,
    col: DctMatrices,
}

/// Dense DCT-II / DCT-III matrices for one transform length. Grids here are
/// desk scale, and the Neumann path is the non-default alternative, so the
/// O(n^2) apply is acceptable.
struct DctMatrices {
    n: usize,
    fwd: Vec<f64>,
    inv: Vec<f64>,
}

impl DctMatrices {
    fn new(n: usize) -> Self {
        let mut fwd = vec![0.0; n * n];
        let mut inv = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                let c = (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64 / (2 * n) as f64).cos();
                fwd[k * n + j] = c;
                let beta = if k == 0 { 0.5 } else { 1.0 };
                inv[j * n + k] = 2.0 / n as f64 * beta * c;
            }
        }
        DctMatrices { n, fwd, inv }
    }

    fn apply(&self, mat: &[f64], input: &[f64], out: &mut [f64]) {
        for k in 0..self.n {
            let row = &mat[k * self.n..(k + 1) * self.n];
            out[k] = row.iter().zip(input).map(|(m, v)| m * v).sum();
        }
    }
}

impl ScreenedPoisson {
    pub fn new(height: usize, width: usize, rule: BoundaryRule) -> Self {
        let mut inv_denom = vec![0.0; height * width];
        for k1 in 0..height {
            for k2 in 0..width {
                let lap = match rule {
                    BoundaryRule::Periodic => {
                        let sy = (std::f64::consts::PI * k1 as f64 / height as f64).sin();
                        let sx = (std::f64::consts::PI * k2 as f64 / width as f64).sin();
                        4.0 * (sy * sy + sx * sx)
                    }
                    BoundaryRule::Neumann => {
                        let sy = (std::f64::consts::PI * k1 as f64 / (2 * height) as f64).sin();
                        let sx = (std::f64::consts::PI * k2 as f64 / (2 * width) as f64).sin();
                        4.0 * (sy * sy + sx * sx)
                    }
                };
                inv_denom[k1 * width + k2] = 1.0 / (1.0 + lap);
            }
        }
        let (fft, dct) = match rule {
            BoundaryRule::Periodic => {
                let mut planner = FftPlanner::new();
                (
                    Some(FftPlans {
                        row_fwd: planner.plan_fft_forward(width),
                        row_inv: planner.plan_fft_inverse(width),
                        col_fwd: planner.plan_fft_forward(height),
                        col_inv: planner.plan_fft_inverse(height),
                    }),
                    None,
                )
            }
            BoundaryRule::Neumann => (
                None,
                Some(DctPlans {
                    row: DctMatrices::new(width),
                    col: DctMatrices::new(height),
                }),
            ),
        };
        ScreenedPoisson {
            height,
            width,
            rule,
            inv_denom,
            fft,
            dct,
        }
    }

    pub fn rule(&self) -> BoundaryRule {
        self.rule
    }

    /// Solves `(grad^T grad + I) u = rhs`. `rhs` must match the solver grid.
    pub fn solve(&self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(
            (rhs.height(), rhs.width()),
            (self.height, self.width),
            "rhs grid does not match solver grid"
        );
        match self.rule {
            BoundaryRule::Periodic => self.solve_fft(rhs),
            BoundaryRule::Neumann => self.solve_dct(rhs),
        }
    }

    fn solve_fft(&self, rhs: &ScalarField) -> ScalarField {
        let (h, w) = (self.height, self.width);
        let plans = self.fft.as_ref().unwrap();
        let mut buf: Vec<Complex<f64>> = rhs.values().iter().map(|&v| Complex::new(v, 0.0)).collect();

        for row in buf.chunks_exact_mut(w) {
            plans.row_fwd.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); h];
        for j in 0..w {
            for i in 0..h {
                col[i] = buf[i * w + j];
            }
            plans.col_fwd.process(&mut col);
            for i in 0..h {
                buf[i * w + j] = col[i];
            }
        }

        for (v, &d) in buf.iter_mut().zip(&self.inv_denom) {
            *v *= d;
        }

        for row in buf.chunks_exact_mut(w) {
            plans.row_inv.process(row);
        }
        for j in 0..w {
            for i in 0..h {
                col[i] = buf[i * w + j];
            }
            plans.col_inv.process(&mut col);
            for i in 0..h {
                buf[i * w + j] = col[i];
            }
        }

        // rustfft is unnormalized: a forward+inverse round trip scales by h*w.
        let scale = 1.0 / (h * w) as f64;
        let data: Vec<f64> = buf.iter().map(|v| v.re * scale).collect();
        ScalarField::from_data(h, w, data).unwrap()
    }

    fn solve_dct(&self, rhs: &ScalarField) -> ScalarField {
        let (h, w) = (self.height, self.width);
        let plans = self.dct.as_ref().unwrap();
        let mut buf = rhs.values().to_vec();
        let mut line = vec![0.0; w.max(h)];

        for i in 0..h {
            plans.row.apply(&plans.row.fwd, &buf[i * w..(i + 1) * w].to_vec(), &mut line[..w]);
            buf[i * w..(i + 1) * w].copy_from_slice(&line[..w]);
        }
        let mut col_in = vec![0.0; h];
        for j in 0..w {
            for i in 0..h {
                col_in[i] = buf[i * w + j];
            }
            plans.col.apply(&plans.col.fwd, &col_in, &mut line[..h]);
            for i in 0..h {
                buf[i * w + j] = line[i];
            }
        }

        for (v, &d) in buf.iter_mut().zip(&self.inv_denom) {
            *v *= d;
        }

        for i in 0..h {
            plans.row.apply(&plans.row.inv, &buf[i * w..(i + 1) * w].to_vec(), &mut line[..w]);
            buf[i * w..(i + 1) * w].copy_from_slice(&line[..w]);
        }
        for j in 0..w {
            for i in 0..h {
                col_in[i] = buf[i * w + j];
            }
            plans.col.apply(&plans.col.inv, &col_in, &mut line[..h]);
            for i in 0..h {
                buf[i * w + j] = line[i];
            }
        }

        ScalarField::from_data(h, w, buf).unwrap()
    }
}
