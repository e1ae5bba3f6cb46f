//! Brute-force continuous pointer on a periodic 2-D position grid.
//!
//! The system (x) pointer state is stored as one complex `n x n` field per
//! system basis state over `[-L, L)^2`. The coupling is applied per joint
//! eigenvector of the commuting pair as the spectral phase
//! `exp(-i g (lambda kx + mu ky))`, an exact rigid shift up to wraparound.
//! Momentum-dependent moments use spectral differentiation.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::gaussian_meter::{GaussianPointer, MomentReport};
use crate::hilbert::{joint_eigenbasis, require_commuting, Ket, Operator, C64};

/// Default points per axis.
pub const DEFAULT_N: usize = 512;
/// Default half-width in units of `sigma`.
pub const DEFAULT_EXTENT_SIGMAS: f64 = 40.0;
/// Smallest admissible grid.
pub const MIN_N: usize = 256;
/// Below this the post-selected field is treated as empty.
pub const VANISHING_NORM: f64 = 1e-14;

/// Sampling of the square `[-extent, extent)^2` with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub extent: f64,
}

impl GridSpec {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < MIN_N {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two >= {MIN_N}, got {n}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidArgument(format!("grid extent must be positive, got {extent}")));
        }
        Ok(GridSpec { n, extent })
    }

    pub fn default_for(sigma: f64) -> Self {
        GridSpec { n: DEFAULT_N, extent: DEFAULT_EXTENT_SIGMAS * sigma }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn position(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.dx()
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        let dk = PI / self.extent;
        if j < self.n / 2 {
            j as f64 * dk
        } else {
            (j as f64 - self.n as f64) * dk
        }
    }

    fn cell(&self) -> f64 {
        self.dx() * self.dx()
    }
}

/// Forward and inverse 2-D transforms for one grid size.
struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn transpose(&self, data: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                data.swap(i * n + j, j * n + i);
            }
        }
    }

    fn run(&self, data: &mut [C64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process(data);
        self.transpose(data);
        plan.process(data);
        self.transpose(data);
        if inverse {
            let scale = 1.0 / (self.n * self.n) as f64;
            data.iter_mut().for_each(|z| *z *= scale);
        }
    }
}

/// System (x) pointer wavefunction sampled on the grid. Field `s` holds the
/// pointer amplitude attached to system basis state `s`; index
/// `ix * n + iy` addresses the point `(x_ix, y_iy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    spec: GridSpec,
    sigma: f64,
    pre: Ket,
    fields: Vec<Vec<C64>>,
}

impl GridState {
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn fields(&self) -> &[Vec<C64>] {
        &self.fields
    }

    /// Total squared norm of the discretized state.
    pub fn norm_sqr(&self) -> f64 {
        let cell = self.spec.cell();
        self.fields.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * cell
    }
}

/// Samples the initial Gaussian pointer times the pre-selected amplitudes.
pub fn init_grid(sigma: f64, spec: GridSpec, pre: &Ket) -> Result<GridState> {
    let pointer = GaussianPointer::new(sigma)?;
    pre.require_normalized()?;
    let required = 10.0 * sigma;
    if spec.extent < required {
        return Err(Error::ExtentTooSmall { extent: spec.extent, required });
    }
    let n = spec.n;
    let axis: Vec<f64> = (0..n).map(|j| pointer.amplitude_1d(spec.position(j), 0.0)).collect();
    let mut base = vec![C64::new(0.0, 0.0); n * n];
    for ix in 0..n {
        for iy in 0..n {
            base[ix * n + iy] = C64::from(axis[ix] * axis[iy]);
        }
    }
    let fields = pre.amplitudes().iter().map(|&c| base.iter().map(|&v| c * v).collect()).collect();
    Ok(GridState { spec, sigma, pre: pre.clone(), fields })
}

/// Applies `exp(-i g (A (x) Px + B (x) Py))`.
pub fn apply_coupling(gs: &GridState, a: &Operator, b: &Operator, g: f64) -> Result<GridState> {
    if !g.is_finite() {
        return Err(Error::InvalidArgument(format!("g must be finite, got {g}")));
    }
    let dim = gs.fields.len();
    for op in [a, b] {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op.dim() });
        }
    }
    require_commuting(a, b)?;
    let basis = joint_eigenbasis(a, b)?;
    let spec = gs.spec;
    let max_shift = basis
        .branches
        .iter()
        .map(|(l, m, _)| (g * l).abs().max((g * m).abs()))
        .fold(0.0_f64, f64::max);
    if max_shift > spec.extent / 4.0 {
        return Err(Error::ClippingRisk { shift: max_shift, extent: spec.extent });
    }
    let required = 10.0 * gs.sigma + 5.0 * max_shift;
    if spec.extent < required {
        return Err(Error::ExtentTooSmall { extent: spec.extent, required });
    }

    let n = spec.n;
    let fft = Fft2::new(n);
    let k: Vec<f64> = (0..n).map(|j| spec.wavenumber(j)).collect();
    let mut out = vec![vec![C64::new(0.0, 0.0); n * n]; dim];
    for (lambda, mu, vec) in &basis.branches {
        let e = vec.amplitudes();
        // project the system index onto this eigenvector
        let mut branch = vec![C64::new(0.0, 0.0); n * n];
        for (s, field) in gs.fields.iter().enumerate() {
            let c = e[s].conj();
            if c.norm_sqr() == 0.0 {
                continue;
            }
            branch.iter_mut().zip(field).for_each(|(acc, v)| *acc += c * v);
        }
        if g != 0.0 {
            fft.run(&mut branch, false);
            let (sx, sy) = (g * lambda, g * mu);
            for ix in 0..n {
                for iy in 0..n {
                    let phase = -(k[ix] * sx + k[iy] * sy);
                    branch[ix * n + iy] *= C64::new(phase.cos(), phase.sin());
                }
            }
            fft.run(&mut branch, true);
        }
        for (s, field) in out.iter_mut().enumerate() {
            let c = e[s];
            field.iter_mut().zip(&branch).for_each(|(acc, v)| *acc += c * v);
        }
    }
    Ok(GridState { spec, sigma: gs.sigma, pre: gs.pre.clone(), fields: out })
}

/// Post-selected pointer field on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PointerField {
    spec: GridSpec,
    sigma: f64,
    values: Vec<C64>,
    /// `<psi_f|psi_f>`, the squared norm of the contracted field.
    pub prob: f64,
    /// `|<f|i>|^2` of the stored pre-selection against the post-selection.
    pub postselect_prob: f64,
}

impl PointerField {
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Builds a pointer field directly from samples.
    pub fn from_samples(spec: GridSpec, sigma: f64, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.n * spec.n {
            return Err(Error::DimensionMismatch { expected: spec.n * spec.n, found: values.len() });
        }
        let prob = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * spec.cell();
        Ok(PointerField { spec, sigma, values, prob, postselect_prob: 1.0 })
    }

    /// Squared norms in position and spectral domain; equal by Parseval.
    pub fn parseval_pair(&self) -> (f64, f64) {
        let n = self.spec.n;
        let mut spectral = self.values.clone();
        Fft2::new(n).run(&mut spectral, false);
        let pos = self.values.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let spec = spectral.iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * n) as f64;
        (pos * self.spec.cell(), spec * self.spec.cell())
    }
}

/// Contracts the system index against `post`.
pub fn postselect_grid(gs: &GridState, post: &Ket) -> Result<PointerField> {
    if post.dim() != gs.fields.len() {
        return Err(Error::DimensionMismatch { expected: gs.fields.len(), found: post.dim() });
    }
    let n = gs.spec.n;
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    for (s, field) in gs.fields.iter().enumerate() {
        let c = post.amplitudes()[s].conj();
        values.iter_mut().zip(field).for_each(|(acc, v)| *acc += c * v);
    }
    let prob = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * gs.spec.cell();
    if !(prob > VANISHING_NORM) {
        return Err(Error::VanishingNorm { norm_sqr: prob });
    }
    Ok(PointerField {
        spec: gs.spec,
        sigma: gs.sigma,
        values,
        prob,
        postselect_prob: post.inner(&gs.pre).norm_sqr(),
    })
}

/// Displacements of the post-selected field relative to the initial
/// Gaussian.
pub fn grid_moments(field: &PointerField) -> Result<MomentReport> {
    let spec = field.spec;
    let n = spec.n;
    let psi = &field.values;
    let xs: Vec<f64> = (0..n).map(|j| spec.position(j)).collect();
    let ks: Vec<f64> = (0..n).map(|j| spec.wavenumber(j)).collect();
    let fft = Fft2::new(n);

    let mut spectral = psi.clone();
    fft.run(&mut spectral, false);
    let mut py_psi: Vec<C64> =
        spectral.iter().enumerate().map(|(idx, z)| z * ks[idx % n]).collect();
    fft.run(&mut py_psi, true);

    let (mut norm, mut x, mut y, mut xy, mut x2, mut x_py) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for ix in 0..n {
        for iy in 0..n {
            let idx = ix * n + iy;
            let d = psi[idx].norm_sqr();
            let (px, py) = (xs[ix], xs[iy]);
            norm += d;
            x += d * px;
            y += d * py;
            xy += d * px * py;
            x2 += d * px * px;
            x_py += (psi[idx].conj() * py_psi[idx]).re * px;
        }
    }
    let (mut knorm, mut px_py) = (0.0, 0.0);
    for ix in 0..n {
        for iy in 0..n {
            let d = spectral[ix * n + iy].norm_sqr();
            knorm += d;
            px_py += d * ks[ix] * ks[iy];
        }
    }
    if !(norm > 0.0) || field.postselect_prob <= 0.0 {
        return Err(Error::VanishingNorm { norm_sqr: norm });
    }
    Ok(MomentReport {
        x: x / norm,
        y: y / norm,
        xy: xy / norm,
        x_py: x_py / norm,
        x2: x2 / norm - field.sigma * field.sigma,
        px_py: px_py / knorm,
        w_norm: field.prob / field.postselect_prob,
    })
}

/// Full grid pipeline: initialize, couple, post-select, take moments.
pub fn grid_run(
    pre: &Ket,
    post: &Ket,
    a: &Operator,
    b: &Operator,
    g: f64,
    sigma: f64,
    spec: GridSpec,
) -> Result<MomentReport> {
    let gs = init_grid(sigma, spec, pre)?;
    let coupled = apply_coupling(&gs, a, b, g)?;
    grid_moments(&postselect_grid(&coupled, post)?)
}
