//! The ADMM segmentation loop and its diagnostics.
//!
//! One sweep updates, in order: the gradient splitting variable `D` by
//! shrinkage, the simplex-constrained copy `W` by projection, the class
//! centers `C` by per-class weighted medians (L1 fidelity) or weighted means
//! (L2), the memberships `U` by an FFT screened-Poisson solve, and finally
//! the two dual blocks. `D` and `W` both read `U^k`, `C` reads `W^{k+1}`,
//! and `U` reads `D^{k+1}` and `W^{k+1}`.
//!
//! The loop stops when the relative change of `U` drops below the configured
//! tolerance or the iteration cap is hit.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{init_from, FcmConfig};
use crate::error::{Error, Result};
use crate::grid::{
    AdmmState, ClassCenters, Image, MembershipField, ScalarField, SolverConfig, VectorField,
};
use crate::ops::{shrink, BoundaryRule, Gradient2D, ScreenedPoisson};

/// Which data-fidelity the energy and the C/W updates use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// `|I - c|`: centers are weighted medians.
    L1,
    /// `|I - c|^2`: centers are weighted means.
    L2,
}

impl Fidelity {
    pub fn algorithm_name(&self) -> &'static str {
        match self {
            Fidelity::L1 => "l1fs",
            Fidelity::L2 => "l2fs",
        }
    }
}

/// Energy of one (U, C) pair split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `sum_i sum_x ||grad u_i(x)||` (isotropic).
    pub tv_term: f64,
    /// `sum_i sum_x rho(I(x), c_i) u_i(x)` (unweighted by lambda).
    pub fidelity_term: f64,
    /// `tv_term + lambda * fidelity_term`.
    pub total: f64,
}

/// Feasibility and stationarity residuals, RMS-normalized by field size so
/// they are comparable across grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `||grad U - D||_2 / sqrt(N H W)`
    pub primal_d: f64,
    /// `||U - W||_2 / sqrt(N H W)`
    pub primal_w: f64,
    /// `||grad^T Lambda_D + Lambda_W||_2 / sqrt(N H W)`
    pub dual_stationarity: f64,
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub energy: EnergyBreakdown,
    pub kkt: KktResiduals,
    /// `||U^{k+1} - U^k||_2 / ||U^k||_2`
    pub rel_change_u: f64,
}

/// Everything a run recorded, iteration by iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    /// `(iteration, class)` pairs where the C-update saw zero total
    /// membership mass and froze that center at its previous value.
    pub empty_class_freezes: Vec<(usize, usize)>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Summary of one solver run, serialized into run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub classes: usize,
    pub config: SolverConfig,
    pub iterations: usize,
    pub final_energy: EnergyBreakdown,
    pub final_kkt: KktResiduals,
    pub centers: Vec<Vec<f64>>,
    pub wall_seconds: f64,
    /// Filled in by callers that hold ground truth.
    pub sa: Option<f64>,
}

impl RunReport {
    /// Field-wise equality ignoring wall-clock time, for determinism checks.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        self.algorithm == other.algorithm
            && self.classes == other.classes
            && self.config == other.config
            && self.iterations == other.iterations
            && self.final_energy == other.final_energy
            && self.final_kkt == other.final_kkt
            && self.centers == other.centers
            && self.sa == other.sa
    }
}

/// Result bundle of [`run`] / [`run_l2fs`].
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub u: MembershipField,
    pub c: ClassCenters,
    pub trace: IterationTrace,
    pub report: RunReport,
}

/// Executes the update sweeps for one image. Holds the cached FFT plans and
/// the per-channel sorted pixel order the median update reuses (the image,
/// and hence its sorted order, never changes during a run).
pub struct AdmmDriver<'a> {
    image: &'a Image,
    fidelity: Fidelity,
    lambda: f64,
    r: f64,
    gradient: Gradient2D,
    poisson: ScreenedPoisson,
    sorted_channels: Vec<Vec<u32>>,
}

impl<'a> AdmmDriver<'a> {
    pub fn new(image: &'a Image, fidelity: Fidelity, lambda: f64, r: f64) -> Self {
        Self::with_boundary(image, fidelity, lambda, r, BoundaryRule::Periodic)
    }

    pub fn with_boundary(image: &'a Image, fidelity: Fidelity, lambda: f64, r: f64, rule: BoundaryRule) -> Self {
        let sorted_channels = (0..image.channels())
            .map(|ch| {
                let plane = image.channel(ch);
                let mut order: Vec<u32> = (0..plane.len() as u32).collect();
                order.sort_by(|&a, &b| plane[a as usize].total_cmp(&plane[b as usize]));
                order
            })
            .collect();
        AdmmDriver {
            image,
            fidelity,
            lambda,
            r,
            gradient: Gradient2D::new(rule),
            poisson: ScreenedPoisson::new(image.height(), image.width(), rule),
            sorted_channels,
        }
    }

    pub fn image(&self) -> &Image {
        self.image
    }

    pub fn fidelity(&self) -> Fidelity {
        self.fidelity
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Fresh state from the configured initializer.
    pub fn init_state(&self, classes: usize, config: &SolverConfig) -> Result<AdmmState> {
        let (u0, c0) = init_from(config.init, self.image, classes, &FcmConfig::default(), config.seed)?;
        AdmmState::new(u0, c0)
    }

    /// Per-class data-cost plane `rho(I(x), c_i)` for the current centers.
    fn fidelity_plane(&self, center: &[f64]) -> ScalarField {
        let n = self.image.pixel_count();
        let mut data = vec![0.0; n];
        for (ch, &c) in center.iter().enumerate() {
            let plane = self.image.channel(ch);
            match self.fidelity {
                Fidelity::L1 => {
                    for (d, &v) in data.iter_mut().zip(plane) {
                        *d += (v - c).abs();
                    }
                }
                Fidelity::L2 => {
                    for (d, &v) in data.iter_mut().zip(plane) {
                        *d += (v - c) * (v - c);
                    }
                }
            }
        }
        ScalarField::from_data(self.image.height(), self.image.width(), data).unwrap()
    }

    /// D-update: `d_i = shrink(grad u_i + dual_d_i / r, 1/r)` per class.
    pub fn update_d(&self, state: &mut AdmmState) {
        let tau = 1.0 / self.r;
        for i in 0..state.classes() {
            let g = self.gradient.grad(state.u.class(i));
            let d = &mut state.d[i];
            let (lx, ly) = (state.dual_d[i].x.values(), state.dual_d[i].y.values());
            for idx in 0..g.x.len() {
                let vx = g.x.values()[idx] + lx[idx] / self.r;
                let vy = g.y.values()[idx] + ly[idx] / self.r;
                let (sx, sy) = shrink(vx, vy, tau);
                d.x.values_mut()[idx] = sx;
                d.y.values_mut()[idx] = sy;
            }
        }
    }

    /// W-update: per-pixel simplex projection of
    /// `u_i + dual_w_i / r - lambda * rho(I, c_i) / r`.
    pub fn update_w(&self, state: &mut AdmmState) {
        let classes = state.classes();
        let planes: Vec<ScalarField> = (0..classes).map(|i| self.fidelity_plane(state.c.center(i))).collect();
        let n = self.image.pixel_count();
        let mut v = vec![0.0; classes];
        for idx in 0..n {
            for i in 0..classes {
                v[i] = state.u.class(i).values()[idx] + state.dual_w[i].values()[idx] / self.r
                    - self.lambda * planes[i].values()[idx] / self.r;
            }
            crate::ops::project_simplex(&mut v);
            for i in 0..classes {
                state.w.class_mut(i).values_mut()[idx] = v[i];
            }
        }
    }

    /// C-update: per class and channel, the weighted median (L1) or weighted
    /// mean (L2) of the image values with weights `w_i`. A class whose total
    /// mass is zero keeps its previous center; the caller records the freeze.
    pub fn update_c(&self, state: &mut AdmmState) -> Vec<usize> {
        let mut frozen = Vec::new();
        for i in 0..state.classes() {
            let weights = state.w.class(i).values();
            let mass: f64 = weights.iter().sum();
            if mass <= 0.0 {
                frozen.push(i);
                continue;
            }
            let center = state.c.center_mut(i);
            match self.fidelity {
                Fidelity::L1 => {
                    for (ch, order) in self.sorted_channels.iter().enumerate() {
                        let plane = self.image.channel(ch);
                        // Smallest optimum of sum_x |I(x) - c| w(x): walk the
                        // pre-sorted values until cumulative weight reaches
                        // half the total.
                        let mut cum = 0.0;
                        let mut chosen = plane[order[order.len() - 1] as usize];
                        for &idx in order {
                            cum += weights[idx as usize];
                            if 2.0 * cum >= mass {
                                chosen = plane[idx as usize];
                                break;
                            }
                        }
                        center[ch] = chosen;
                    }
                }
                Fidelity::L2 => {
                    for ch in 0..self.image.channels() {
                        let plane = self.image.channel(ch);
                        let num: f64 = plane.iter().zip(weights).map(|(&v, &w)| v * w).sum();
                        center[ch] = num / mass;
                    }
                }
            }
        }
        frozen
    }

    /// U-update: solve `(grad^T grad + I) u_i = grad^T (d_i - dual_d_i / r)
    /// + w_i - dual_w_i / r` per class.
    pub fn update_u(&self, state: &mut AdmmState) {
        for i in 0..state.classes() {
            let d = &state.d[i];
            let dual = &state.dual_d[i];
            let mut p = VectorField::zeros(d.height(), d.width());
            for idx in 0..p.x.len() {
                p.x.values_mut()[idx] = d.x.values()[idx] - dual.x.values()[idx] / self.r;
                p.y.values_mut()[idx] = d.y.values()[idx] - dual.y.values()[idx] / self.r;
            }
            let mut rhs = self.gradient.div_adjoint(&p);
            let w = state.w.class(i).values();
            let dual_w = state.dual_w[i].values();
            for idx in 0..rhs.len() {
                rhs.values_mut()[idx] += w[idx] - dual_w[idx] / self.r;
            }
            *state.u.class_mut(i) = self.poisson.solve(&rhs);
        }
    }

    /// Dual ascent: `dual_d += r (grad U - D)`, `dual_w += r (U - W)`.
    pub fn update_duals(&self, state: &mut AdmmState) {
        for i in 0..state.classes() {
            let g = self.gradient.grad(state.u.class(i));
            let d = &state.d[i];
            let dual = &mut state.dual_d[i];
            for idx in 0..g.x.len() {
                dual.x.values_mut()[idx] += self.r * (g.x.values()[idx] - d.x.values()[idx]);
                dual.y.values_mut()[idx] += self.r * (g.y.values()[idx] - d.y.values()[idx]);
            }
            let u = state.u.class(i).values();
            let w = state.w.class(i).values();
            let dual_w = state.dual_w[i].values_mut();
            for idx in 0..u.len() {
                dual_w[idx] += self.r * (u[idx] - w[idx]);
            }
        }
    }

    /// One full Gauss-Seidel sweep in the update order documented on the
    /// module. Returns the classes whose center was frozen this sweep.
    pub fn step(&self, state: &mut AdmmState) -> Vec<usize> {
        self.update_d(state);
        self.update_w(state);
        let frozen = self.update_c(state);
        self.update_u(state);
        self.update_duals(state);
        state.iter += 1;
        frozen
    }

    /// Energy of an (U, C) pair under this driver's fidelity and boundary
    /// rule.
    pub fn energy_of(&self, u: &MembershipField, c: &ClassCenters) -> EnergyBreakdown {
        let mut tv = 0.0;
        for i in 0..u.classes() {
            let g = self.gradient.grad(u.class(i));
            for idx in 0..g.x.len() {
                tv += g.x.values()[idx].hypot(g.y.values()[idx]);
            }
        }
        let mut fid = 0.0;
        for i in 0..u.classes() {
            let plane = self.fidelity_plane(c.center(i));
            fid += plane
                .values()
                .iter()
                .zip(u.class(i).values())
                .map(|(&rho, &ui)| rho * ui)
                .sum::<f64>();
        }
        EnergyBreakdown {
            tv_term: tv,
            fidelity_term: fid,
            total: tv + self.lambda * fid,
        }
    }

    /// Feasibility and stationarity residuals of the current state.
    pub fn kkt_of(&self, state: &AdmmState) -> KktResiduals {
        let classes = state.classes();
        let count = (classes * self.image.pixel_count()) as f64;
        let mut primal_d = 0.0;
        let mut primal_w = 0.0;
        let mut stationarity = 0.0;
        for i in 0..classes {
            let g = self.gradient.grad(state.u.class(i));
            let d = &state.d[i];
            for idx in 0..g.x.len() {
                let ex = g.x.values()[idx] - d.x.values()[idx];
                let ey = g.y.values()[idx] - d.y.values()[idx];
                primal_d += ex * ex + ey * ey;
            }
            let u = state.u.class(i).values();
            let w = state.w.class(i).values();
            for idx in 0..u.len() {
                let e = u[idx] - w[idx];
                primal_w += e * e;
            }
            let div_dual = self.gradient.div_adjoint(&state.dual_d[i]);
            let dual_w = state.dual_w[i].values();
            for idx in 0..dual_w.len() {
                let e = div_dual.values()[idx] + dual_w[idx];
                stationarity += e * e;
            }
        }
        KktResiduals {
            primal_d: (primal_d / count).sqrt(),
            primal_w: (primal_w / count).sqrt(),
            dual_stationarity: (stationarity / count).sqrt(),
        }
    }
}

fn check_energy_shapes(image: &Image, u: &MembershipField, c: &ClassCenters) -> Result<()> {
    if u.height() != image.height() || u.width() != image.width() {
        return Err(Error::shape(format!(
            "membership grid {}x{} vs image {}x{}",
            u.height(),
            u.width(),
            image.height(),
            image.width()
        )));
    }
    if u.classes() != c.classes() {
        return Err(Error::shape(format!(
            "{} membership classes vs {} centers",
            u.classes(),
            c.classes()
        )));
    }
    if c.channels() != image.channels() {
        return Err(Error::shape(format!(
            "centers have {} channels, image {}",
            c.channels(),
            image.channels()
        )));
    }
    Ok(())
}

/// Segmentation energy with the L1 fidelity:
/// `sum_i { sum_x ||grad u_i|| + lambda sum_x |I - c_i| u_i }`.
pub fn energy(image: &Image, u: &MembershipField, c: &ClassCenters, lambda: f64) -> Result<EnergyBreakdown> {
    check_energy_shapes(image, u, c)?;
    Ok(AdmmDriver::new(image, Fidelity::L1, lambda, 1.0).energy_of(u, c))
}

/// KKT residuals of a state against an image grid (periodic rule).
pub fn kkt_residuals(image: &Image, state: &AdmmState) -> KktResiduals {
    AdmmDriver::new(image, Fidelity::L1, 1.0, 1.0).kkt_of(state)
}

fn rel_change(current: &MembershipField, previous: &MembershipField) -> f64 {
    let mut num = 0.0;
    for i in 0..current.classes() {
        let cv = current.class(i).values();
        let pv = previous.class(i).values();
        for idx in 0..cv.len() {
            let e = cv[idx] - pv[idx];
            num += e * e;
        }
    }
    (num / previous.norm_sq()).sqrt()
}

fn run_admm(image: &Image, classes: usize, config: &SolverConfig, fidelity: Fidelity) -> Result<SolveOutcome> {
    config.validate()?;
    if classes < 2 {
        return Err(Error::invalid(format!("need >= 2 classes, got {}", classes)));
    }
    let start = Instant::now();
    let driver = AdmmDriver::new(image, fidelity, config.lambda, config.r);
    let mut state = driver.init_state(classes, config)?;
    let mut trace = IterationTrace::default();
    let mut previous = state.u.clone();

    loop {
        let frozen = driver.step(&mut state);
        for class in frozen {
            trace.empty_class_freezes.push((state.iter, class));
        }
        let energy = driver.energy_of(&state.u, &state.c);
        if !energy.total.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "energy became non-finite at iteration {}",
                state.iter
            )));
        }
        let rel = rel_change(&state.u, &previous);
        trace.records.push(IterationRecord {
            energy,
            kkt: driver.kkt_of(&state),
            rel_change_u: rel,
        });
        if rel < config.epsilon || state.iter >= config.max_iters {
            break;
        }
        previous = state.u.clone();
    }

    let last = trace.records.last().unwrap();
    let report = RunReport {
        algorithm: fidelity.algorithm_name().to_string(),
        classes,
        config: config.clone(),
        iterations: state.iter,
        final_energy: last.energy,
        final_kkt: last.kkt,
        centers: state.c.as_slice().to_vec(),
        wall_seconds: start.elapsed().as_secs_f64(),
        sa: None,
    };
    Ok(SolveOutcome {
        u: state.u,
        c: state.c,
        trace,
        report,
    })
}

/// Runs the L1-fidelity ADMM segmentation to convergence.
pub fn run(image: &Image, classes: usize, config: &SolverConfig) -> Result<SolveOutcome> {
    run_admm(image, classes, config, Fidelity::L1)
}

/// Runs the L2-fidelity variant: same loop with a squared data cost in the
/// W-update and weighted-mean centers.
pub fn run_l2fs(image: &Image, classes: usize, config: &SolverConfig) -> Result<SolveOutcome> {
    run_admm(image, classes, config, Fidelity::L2)
}
