//! The heat semigroup `e^{tΔ_Ω}` on the sector with zero data on the walls.
//!
//! Three realisations:
//!
//! * [`Method::Quadrature`]: the reflected kernel
//!   `K_t(x,y) = Π_{j>m} G_t(x_j - y_j) Π_{i<=m} [G_t(x_i - y_i) - G_t(x_i + y_i)]`
//!   applied axis by axis with nonnegative weights. Fields carrying a singular
//!   analytic profile are integrated pointwise instead.
//! * [`Method::Spectral`]: sine transforms on anti-symmetric axes and
//!   odd-reflected (Dirichlet) or plain (periodic) Fourier transforms elsewhere,
//!   multiplied by `exp(-t|k|^2)`.
//! * [`Method::DilationFastPath`]: for multiples of `psi_0`, the cached
//!   self-similar solution.

mod cache;
pub mod line;
mod quadrature;

use std::sync::Arc;

use ndarray::{ArrayD, IxDyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{cache_key_spec, CacheParams, PsiCache, PsiProfile};
use line::{FftCache, LineKernel, SpectralLine};
pub use quadrature::ProfileQuadrature;

use crate::error::{Error, Result};
use crate::geometry::{Analytic, Field, GridSpec, SectorSpec};

/// How [`KernelPlan::apply`] realises the semigroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Spectral,
    DilationFastPath,
}

/// Default bound on the Gaussian mass lost past the box before a warning.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Immutable description of how to apply `e^{tΔ_Ω}` on one grid.
#[derive(Clone, Debug)]
pub struct KernelPlan {
    spec: SectorSpec,
    grid: GridSpec,
    method: Method,
    quadrature: ProfileQuadrature,
    cache: Option<Arc<PsiCache>>,
    ffts: Arc<FftCache>,
    tail_tolerance: f64,
}

enum LineOp {
    Kernel(LineKernel),
    Spectral(SpectralLine),
}

impl LineOp {
    fn apply(&self, input: &[f64], out: &mut [f64], ffts: &FftCache) {
        match self {
            LineOp::Kernel(k) => k.apply(input, out, ffts),
            LineOp::Spectral(s) => s.apply(input, out, ffts),
        }
    }
}

/// Apply a one-dimensional operator along every axis in turn.
fn apply_separable(values: &ArrayD<f64>, grid: &GridSpec, ffts: &FftCache, op: impl Fn(usize) -> LineOp) -> ArrayD<f64> {
    let dim = grid.dim();
    let n = grid.n;
    let mut current = values.clone();
    for axis in 0..dim {
        let line = op(axis);
        let mut order: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
        order.push(axis);
        let permuted = current.view().permuted_axes(IxDyn(&order));
        let input: Vec<f64> = permuted.iter().copied().collect();
        let mut output = vec![0.0; input.len()];
        output
            .par_chunks_mut(n)
            .zip(input.par_chunks(n))
            .for_each(|(o, i)| line.apply(i, o, ffts));
        let shape: Vec<usize> = order.iter().map(|_| n).collect();
        let arr = ArrayD::from_shape_vec(IxDyn(&shape), output).expect("shape preserved");
        let mut inverse = vec![0; dim];
        for (pos, &a) in order.iter().enumerate() {
            inverse[a] = pos;
        }
        current = arr.permuted_axes(IxDyn(&inverse)).as_standard_layout().into_owned();
    }
    current
}

impl KernelPlan {
    pub fn new(spec: SectorSpec, grid: GridSpec, method: Method) -> Result<Self> {
        grid.check_against(&spec)?;
        Ok(KernelPlan {
            quadrature: ProfileQuadrature::for_spec(&spec),
            spec,
            grid,
            method,
            cache: None,
            ffts: Arc::new(FftCache::default()),
            tail_tolerance: TAIL_TOLERANCE,
        })
    }

    pub fn with_cache(mut self, cache: Arc<PsiCache>) -> Result<Self> {
        if !cache.matches(&self.spec) {
            return Err(Error::InvalidSpec("Psi cache belongs to a different sector".into()));
        }
        self.cache = Some(cache);
        Ok(self)
    }

    pub fn with_quadrature(mut self, q: ProfileQuadrature) -> Self {
        self.quadrature = q;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn spec(&self) -> &SectorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn cache(&self) -> Option<&Arc<PsiCache>> {
        self.cache.as_ref()
    }

    pub fn quadrature(&self) -> &ProfileQuadrature {
        &self.quadrature
    }

    fn require_cache(&self) -> Result<&Arc<PsiCache>> {
        self.cache
            .as_ref()
            .ok_or_else(|| Error::UnsupportedProfile("the dilation fast path needs a Psi cache".into()))
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `e^{tΔ_Ω} f` with the plan's method.
    pub fn apply(&self, t: f64, f: &Field) -> Result<Field> {
        match self.method {
            Method::Quadrature => self.apply_kernel(t, f),
            Method::Spectral => self.apply_spectral(t, f),
            Method::DilationFastPath => {
                let k = f
                    .profile()
                    .and_then(|p| p.psi0_multiple())
                    .ok_or_else(|| Error::UnsupportedProfile("data is not a multiple of psi_0".into()))?;
                self.psi_scaled(t, k)
            }
        }
    }

    /// Reflected-kernel quadrature. Singular analytic data (a profile handle
    /// that is not bounded) are integrated pointwise; everything else uses the
    /// grid values.
    pub fn apply_kernel(&self, t: f64, f: &Field) -> Result<Field> {
        self.check_field(f)?;
        if t < 0.0 {
            return Err(Error::NonPositiveTime(t));
        }
        if let Some(p) = f.profile() {
            if !p.is_bounded() && t > 0.0 {
                return self.apply_profile(t, p.as_ref());
            }
        }
        self.apply_grid_kernel(t, f)
    }

    /// Reflected-kernel quadrature on grid values only.
    pub fn apply_grid_kernel(&self, t: f64, f: &Field) -> Result<Field> {
        self.check_field(f)?;
        if t < 0.0 {
            return Err(Error::NonPositiveTime(t));
        }
        self.warn_tail(t);
        let grid = &self.grid;
        let values = apply_separable(f.values(), grid, &self.ffts, |a| {
            LineOp::Kernel(LineKernel::new(grid.axes[a], grid.n, grid.spacing(a), t))
        });
        Ok(Field::from_parts_unchecked(self.spec, grid.clone(), values))
    }

    fn warn_tail(&self, t: f64) {
        if t <= 0.0 {
            return;
        }
        let lost = statrs::function::erf::erfc(self.grid.half_width / (2.0 * t.sqrt()));
        if lost > self.tail_tolerance {
            log::warn!(
                "heat kernel at t = {t} loses mass {lost:.2e} past the box |x| < {} (tolerance {:.0e})",
                self.grid.half_width,
                self.tail_tolerance
            );
        }
    }

    /// Odd-extension spectral heat flow; exact in time for the discrete operator.
    pub fn apply_spectral(&self, t: f64, f: &Field) -> Result<Field> {
        self.check_field(f)?;
        if t < 0.0 {
            return Err(Error::NonPositiveTime(t));
        }
        if t == 0.0 {
            return Ok(Field::from_parts_unchecked(self.spec, self.grid.clone(), f.values().clone()));
        }
        let grid = &self.grid;
        let values = apply_separable(f.values(), grid, &self.ffts, |a| {
            LineOp::Spectral(SpectralLine::new(grid.axes[a], grid.n, grid.spacing(a), t))
        });
        Ok(Field::from_parts_unchecked(self.spec, grid.clone(), values))
    }

    /// `e^{tΔ_Ω} f` at every node by pointwise quadrature of the analytic profile.
    pub fn apply_profile(&self, t: f64, profile: &dyn Analytic) -> Result<Field> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        let axes = self.grid.axes.clone();
        let quad = self.quadrature;
        let f = |y: &[f64]| profile.value(y);
        Field::from_fn(self.spec, self.grid.clone(), move |x| quad.integrate(&axes, x, t, false, &f))
            .map(|fl| fl.with_time(t))
    }

    /// `e^{tΔ_Ω} f` at a single point of the sector by pointwise quadrature.
    pub fn apply_profile_at(&self, t: f64, profile: &dyn Analytic, x: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        let f = |y: &[f64]| profile.value(y);
        Ok(self.quadrature.integrate(&self.grid.axes, x, t, false, &f))
    }

    /// `Ψ(t) = e^{tΔ_Ω} psi_0` on the plan's grid.
    pub fn psi(&self, t: f64) -> Result<Field> {
        self.require_cache()?.psi_fast(&self.spec, &self.grid, t)
    }

    /// `K Ψ(t)`.
    pub fn psi_scaled(&self, t: f64, k: f64) -> Result<Field> {
        let cache = self.require_cache()?;
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        let profile = Arc::new(PsiProfile { cache: cache.clone(), t, amplitude: k });
        Ok(Field::sample(self.spec, self.grid.clone(), profile)?.with_time(t))
    }

    /// `||Ψ(t)||_∞` by pointwise quadrature of `psi_0`, independent of the
    /// cache. The maximum lies on the ray `x_1 = ... = x_m`, other
    /// coordinates zero; it is located by a scan and golden-section search.
    /// Returns `(radius, value)`.
    pub fn psi_sup_by_quadrature(&self, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        let spec = self.spec;
        let profile = crate::profiles::SingularProfile::psi0(spec, 1.0);
        let mut dir = vec![0.0; spec.dim];
        if spec.m == 0 {
            dir[0] = 1.0;
        } else {
            for d in dir.iter_mut().take(spec.m) {
                *d = 1.0 / (spec.m as f64).sqrt();
            }
        }
        let scale = t.sqrt();
        let mut x = vec![0.0; spec.dim];
        let mut value = |r: f64| {
            for (xi, di) in x.iter_mut().zip(&dir) {
                *xi = r * di;
            }
            self.apply_profile_at(t, &profile, &x).unwrap_or(f64::NEG_INFINITY)
        };
        Ok(crate::numerics::scan_max(1e-6 * scale, 6.0 * scale, 61, &mut value))
    }

    /// Entry `A_{ij}` of the assembled quadrature matrix (`out_i = Σ_j A_ij f_j`).
    pub fn kernel_entry(&self, t: f64, i: usize, j: usize) -> f64 {
        let dim = self.grid.dim();
        let mut pi = vec![0; dim];
        let mut pj = vec![0; dim];
        self.grid.multi_index(i, &mut pi);
        self.grid.multi_index(j, &mut pj);
        (0..dim)
            .map(|a| {
                LineKernel::new(self.grid.axes[a], self.grid.n, self.grid.spacing(a), t).entry(pi[a], pj[a])
            })
            .product()
    }
}
