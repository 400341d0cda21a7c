//! Core value types: images, scalar/vector fields, membership fields,
//! class centers, and solver configuration.
//!
//! All pixel data is stored as `f64` in row-major order; multi-channel images
//! are channel-planar (one contiguous plane per channel) so per-channel
//! kernels scan contiguously. Intensities are nominally in `[0, 255]` but are
//! not clamped: unclipped noisy data flows through the solvers and is only
//! quantized when written to an 8-bit image file.
//!
//! Randomized constructors take an explicit `u64` seed and use `ChaCha8Rng`,
//! a portable counter-based generator, so results are reproducible across
//! platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single scalar field on a `height x width` pixel grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, fill: f64) -> Self {
        ScalarField {
            height,
            width,
            data: vec![fill; height * width],
        }
    }

    pub fn from_data(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "scalar field {}x{} needs {} values, got {}",
                height,
                width,
                height * width,
                data.len()
            )));
        }
        Ok(ScalarField { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Squared L2 norm of the field.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// A dense image with `s` channels (`s = 1` grayscale, `s = 3` color),
/// stored channel-planar: plane 0 first, then plane 1, ...
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Constant image. `channels` must be 1 or 3 and both dimensions >= 1.
    pub fn new(height: usize, width: usize, channels: usize, fill: f64) -> Result<Self> {
        Self::check_dims(height, width, channels)?;
        Ok(Image {
            height,
            width,
            channels,
            data: vec![fill; height * width * channels],
        })
    }

    /// Builds an image from channel-planar row-major data. All values must be
    /// finite.
    pub fn from_data(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        Self::check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::shape(format!(
                "image {}x{}x{} needs {} values, got {}",
                height,
                width,
                channels,
                height * width * channels,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("image data contains non-finite values"));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be >= 1, got {}x{}",
                height, width
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "channel count must be 1 or 3, got {}",
                channels
            )));
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    /// One channel plane, row-major, `height * width` long.
    pub fn channel(&self, ch: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[ch * n..(ch + 1) * n]
    }

    pub fn channel_mut(&mut self, ch: usize) -> &mut [f64] {
        let n = self.pixel_count();
        &mut self.data[ch * n..(ch + 1) * n]
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[ch * self.height * self.width + row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        self.data[ch * self.height * self.width + row * self.width + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Constant image; see [`Image::new`].
pub fn new_image(height: usize, width: usize, channels: usize, fill: f64) -> Result<Image> {
    Image::new(height, width, channels, fill)
}

/// `N >= 2` per-class scalar fields that sit on the probability simplex at
/// every pixel: `u_i(x) >= 0` and `sum_i u_i(x) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipField {
    fields: Vec<ScalarField>,
}

impl MembershipField {
    /// Wraps per-class fields without checking the simplex constraint (used
    /// by solvers whose updates guarantee feasibility). Grid agreement is
    /// always enforced.
    pub fn from_fields(fields: Vec<ScalarField>) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::invalid(format!(
                "membership field needs >= 2 classes, got {}",
                fields.len()
            )));
        }
        let (h, w) = (fields[0].height(), fields[0].width());
        if !fields.iter().all(|f| f.height() == h && f.width() == w) {
            return Err(Error::shape("membership class fields disagree on grid size"));
        }
        Ok(MembershipField { fields })
    }

    /// Hard indicator field: class `labels[x]` gets membership 1 at pixel x.
    pub fn indicator(height: usize, width: usize, classes: usize, labels: &[u8]) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::shape("label map does not match grid"));
        }
        let mut fields = vec![ScalarField::new(height, width, 0.0); classes];
        for (idx, &lab) in labels.iter().enumerate() {
            if lab as usize >= classes {
                return Err(Error::invalid(format!("label {} out of range", lab)));
            }
            fields[lab as usize].values_mut()[idx] = 1.0;
        }
        MembershipField::from_fields(fields)
    }

    pub fn classes(&self) -> usize {
        self.fields.len()
    }

    pub fn height(&self) -> usize {
        self.fields[0].height()
    }

    pub fn width(&self) -> usize {
        self.fields[0].width()
    }

    pub fn class(&self, i: usize) -> &ScalarField {
        &self.fields[i]
    }

    pub fn class_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.fields[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScalarField> {
        self.fields.iter()
    }

    /// The membership vector at one pixel (linear index).
    pub fn pixel_vector(&self, idx: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.fields.iter().map(|f| f.values()[idx]));
    }

    /// Squared L2 norm over all classes and pixels.
    pub fn norm_sq(&self) -> f64 {
        self.fields.iter().map(|f| f.norm_sq()).sum()
    }

    /// Largest violation of the simplex constraints over all pixels:
    /// `max(|1 - sum_i u_i|, max(-u_i, 0))`.
    pub fn simplex_violation(&self) -> f64 {
        let n = self.height() * self.width();
        let mut worst = 0f64;
        for idx in 0..n {
            let mut sum = 0.0;
            for f in &self.fields {
                let v = f.values()[idx];
                sum += v;
                if v < 0.0 {
                    worst = worst.max(-v);
                }
            }
            worst = worst.max((1.0 - sum).abs());
        }
        worst
    }
}

/// Draws each pixel's `N`-vector i.i.d. uniform on `[0,1]` and normalizes it
/// to sum one. Deterministic for a fixed seed (ChaCha8, row-major pixel
/// order, classes innermost).
pub fn uniform_membership(height: usize, width: usize, classes: usize, seed: u64) -> Result<MembershipField> {
    if classes < 2 {
        return Err(Error::invalid(format!("need >= 2 classes, got {}", classes)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = vec![ScalarField::new(height, width, 0.0); classes];
    let mut draw = vec![0f64; classes];
    for idx in 0..height * width {
        let mut sum = 0.0;
        for d in draw.iter_mut() {
            *d = rng.random::<f64>();
            sum += *d;
        }
        // A sum this close to zero has probability ~0; renormalize to uniform.
        if sum <= f64::MIN_POSITIVE {
            draw.fill(1.0);
            sum = classes as f64;
        }
        for (i, d) in draw.iter().enumerate() {
            fields[i].values_mut()[idx] = d / sum;
        }
    }
    MembershipField::from_fields(fields)
}

/// A 2-D vector field on the pixel grid: one horizontal and one vertical
/// component per pixel. Used for the gradient splitting variable of one class
/// and for its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn zeros(height: usize, width: usize) -> Self {
        VectorField {
            x: ScalarField::new(height, width, 0.0),
            y: ScalarField::new(height, width, 0.0),
        }
    }

    pub fn height(&self) -> usize {
        self.x.height()
    }

    pub fn width(&self) -> usize {
        self.x.width()
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.norm_sq() + self.y.norm_sq()
    }
}

/// Per-class intensity vectors: `N` centers, each with one component per
/// image channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCenters {
    centers: Vec<Vec<f64>>,
}

impl ClassCenters {
    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid("need at least one class center"));
        }
        let s = centers[0].len();
        if s == 0 || !centers.iter().all(|c| c.len() == s) {
            return Err(Error::shape("class centers disagree on channel count"));
        }
        Ok(ClassCenters { centers })
    }

    pub fn classes(&self) -> usize {
        self.centers.len()
    }

    pub fn channels(&self) -> usize {
        self.centers[0].len()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i]
    }

    pub fn center_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.centers[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.centers.iter()
    }

    pub fn as_slice(&self) -> &[Vec<f64>] {
        &self.centers
    }
}

/// Which initializer produces `U^0` and `C^0` for the ADMM solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Both from a converged FCM run.
    Fcm,
    /// Both from a converged FCM_S2 run.
    FcmS2,
    /// U uniform random (normalized), C from FCM.
    RandomUFcmC,
}

impl InitStrategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fcm" => Ok(InitStrategy::Fcm),
            "fcm-s2" => Ok(InitStrategy::FcmS2),
            "random-u-fcm-c" => Ok(InitStrategy::RandomUFcmC),
            other => Err(Error::invalid(format!("unknown init strategy '{}'", other))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Fcm => "fcm",
            InitStrategy::FcmS2 => "fcm-s2",
            InitStrategy::RandomUFcmC => "random-u-fcm-c",
        }
    }

    pub const ALL: [InitStrategy; 3] = [InitStrategy::Fcm, InitStrategy::FcmS2, InitStrategy::RandomUFcmC];
}

/// Tuning knobs for one ADMM solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Fidelity weight, > 0.
    pub lambda: f64,
    /// ADMM penalty, > 0.
    pub r: f64,
    /// Stop when the relative change of U drops below this, > 0.
    pub epsilon: f64,
    /// Iteration cap, >= 1.
    pub max_iters: usize,
    /// How U^0 and C^0 are produced.
    pub init: InitStrategy,
    /// Seed for any randomized initializer.
    pub seed: u64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.r > 0.0) {
            return Err(Error::invalid(format!("r must be > 0, got {}", self.r)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        Ok(())
    }

    /// Stopping tolerance used when the caller does not override it:
    /// 1e-6 for two-phase runs, 1e-4 for multiphase.
    pub fn default_epsilon(classes: usize) -> f64 {
        if classes <= 2 {
            1e-6
        } else {
            1e-4
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 0.01,
            r: 1.0,
            epsilon: 1e-6,
            max_iters: 500,
            init: InitStrategy::Fcm,
            seed: 0,
        }
    }
}

/// All iterates of one ADMM run: primal blocks U, W, D, C, the duals, and the
/// iteration counter. Mutated in place by exactly one solver loop.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub u: MembershipField,
    pub w: MembershipField,
    pub d: Vec<VectorField>,
    pub c: ClassCenters,
    pub dual_d: Vec<VectorField>,
    pub dual_w: Vec<ScalarField>,
    pub iter: usize,
}

impl AdmmState {
    /// Fresh state from an initial membership/centers pair. Duals start at
    /// zero; W mirrors U^0 and D starts at zero (both are overwritten before
    /// first use by the update order of the solver loop).
    pub fn new(u0: MembershipField, c0: ClassCenters) -> Result<Self> {
        if u0.classes() != c0.classes() {
            return Err(Error::shape(format!(
                "membership has {} classes, centers {}",
                u0.classes(),
                c0.classes()
            )));
        }
        let (h, w) = (u0.height(), u0.width());
        let n = u0.classes();
        Ok(AdmmState {
            w: u0.clone(),
            u: u0,
            d: vec![VectorField::zeros(h, w); n],
            c: c0,
            dual_d: vec![VectorField::zeros(h, w); n],
            dual_w: vec![ScalarField::new(h, w, 0.0); n],
            iter: 0,
        })
    }

    pub fn classes(&self) -> usize {
        self.u.classes()
    }
}
