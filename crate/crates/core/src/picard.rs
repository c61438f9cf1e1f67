//! Fixed-point construction of the mild solution on a short time interval.
//!
//! The Duhamel map
//! `F(u)(t) = e^{tΔ_Ω} psi + a ∫_0^t e^{(t-s)Δ_Ω} |u|^alpha u(s) ds`
//! is iterated in the ball `|||u||| = sup_t ||u(t) / Ψ(t)||_∞ <= M`. With
//! `I(T) = ∫_0^T ||Ψ(s)||_∞^alpha ds` the map sends the ball into itself when
//! `K + 2(alpha+1) M^{alpha+1} I(T) <= M` and contracts when
//! `2(alpha+1) M^alpha I(T) < 1`.
//!
//! Time is discretised on a graded mesh `s_j = T (j/J)^p`,
//! `p = 1/(1 - beta)`, `beta = alpha(gamma+m)/2`. The integrand is written as
//! `s^{-beta} g(s)` with `g` piecewise linear between mesh nodes, and the
//! weight `s^{-beta}` is integrated exactly.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_io;
use crate::geometry::{weighted_sup_ratio, Field, SectorSpec};
use crate::profiles::SingularProfile;
use crate::semigroup::{KernelPlan, PsiCache};

/// Fraction of the ball-stability budget used by [`admissible_constants`].
pub const ADMISSIBLE_MARGIN: f64 = 0.9;

/// Parameters of one fixed-point construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    /// Bound on the data, `||psi||_X <= k`.
    pub k: f64,
    /// Ball radius.
    pub radius: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// Number of mesh intervals `J`.
    pub mesh_len: usize,
    pub max_iterations: usize,
    /// Stop once `|||u^{k+1} - u^k||| < tol`.
    pub tol: f64,
    /// Use the cached self-similar solution for the linear part of `K psi_0` data.
    pub fast_psi0: bool,
}

/// `M = 2K` and the largest `T` meeting both smallness conditions with margin
/// [`ADMISSIBLE_MARGIN`].
pub fn admissible_constants(spec: &SectorSpec, cache: &PsiCache, k: f64) -> Result<(f64, f64)> {
    if !spec.is_subcritical() {
        return Err(Error::Supercritical { alpha: spec.alpha, critical: spec.critical_alpha() });
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Config(format!("data bound K = {k} must be positive")));
    }
    let alpha = spec.alpha;
    let radius = 2.0 * k;
    // K + 2(a+1)(2K)^{a+1} I <= 2K  <=>  I <= 1 / (2(a+1) 2^{a+1} K^a)
    let target = ADMISSIBLE_MARGIN / (2.0 * (alpha + 1.0) * 2f64.powf(alpha + 1.0) * k.powf(alpha));
    let unit = cache.alpha_time_integral(spec, 1.0)?;
    let beta = spec.beta();
    let horizon = (target / unit).powf(1.0 / (1.0 - beta));
    Ok((radius, horizon))
}

impl PicardConfig {
    /// Admissible configuration for data bounded by `k`.
    pub fn admissible(spec: &SectorSpec, cache: &PsiCache, k: f64) -> Result<Self> {
        let (radius, horizon) = admissible_constants(spec, cache, k)?;
        Ok(PicardConfig { k, radius, horizon, mesh_len: 24, max_iterations: 200, tol: 1e-12, fast_psi0: true })
    }

    /// Same constants on a shorter horizon (the conditions only relax).
    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::NonPositiveTime(horizon));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_mesh_len(mut self, j: usize) -> Self {
        self.mesh_len = j.max(1);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_fast_psi0(mut self, fast: bool) -> Self {
        self.fast_psi0 = fast;
        self
    }

    /// Graded mesh `s_1 < ... < s_J = T`.
    pub fn mesh(&self, spec: &SectorSpec) -> Vec<f64> {
        let p = 1.0 / (1.0 - spec.beta().min(0.95));
        let j = self.mesh_len as f64;
        (1..=self.mesh_len).map(|i| self.horizon * (i as f64 / j).powf(p)).collect()
    }

    /// `I(T)`.
    pub fn time_integral(&self, spec: &SectorSpec, cache: &PsiCache) -> Result<f64> {
        cache.alpha_time_integral(spec, self.horizon)
    }

    /// Left side of the ball-stability condition `K + 2(alpha+1) M^{alpha+1} I(T)`.
    pub fn stability_lhs(&self, spec: &SectorSpec, cache: &PsiCache) -> Result<f64> {
        let a = spec.alpha;
        Ok(self.k + 2.0 * (a + 1.0) * self.radius.powf(a + 1.0) * self.time_integral(spec, cache)?)
    }

    /// `2(alpha+1) M^alpha I(T)`, the contraction factor of the map.
    pub fn contraction_bound(&self, spec: &SectorSpec, cache: &PsiCache) -> Result<f64> {
        let a = spec.alpha;
        Ok(2.0 * (a + 1.0) * self.radius.powf(a) * self.time_integral(spec, cache)?)
    }

    /// `1 / (1 - 2(alpha+1) M^alpha I(T))`.
    pub fn lipschitz_constant(&self, spec: &SectorSpec, cache: &PsiCache) -> Result<f64> {
        Ok(1.0 / (1.0 - self.contraction_bound(spec, cache)?))
    }

    /// Both smallness conditions.
    pub fn check(&self, spec: &SectorSpec, cache: &PsiCache) -> Result<()> {
        let lhs = self.stability_lhs(spec, cache)?;
        if lhs > self.radius * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "ball stability fails: K + 2(a+1)M^(a+1)I(T) = {lhs} > M = {}",
                self.radius
            )));
        }
        let b = self.contraction_bound(spec, cache)?;
        if b >= 1.0 {
            return Err(Error::Config(format!("contraction fails: 2(a+1)M^a I(T) = {b} >= 1")));
        }
        if self.mesh_len == 0 || !(self.tol > 0.0) || self.max_iterations == 0 {
            return Err(Error::Config("mesh length, tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// Coefficients `w_0..w_j` with `∫_0^{s_j} h(s) ds ≈ Σ w_i h(s_i)` for
/// `h(s) = s^{-beta} g(s)`, `g` piecewise linear on the mesh and constant on `(0, s_0]`.
pub fn duhamel_weights(mesh: &[f64], j: usize, beta: f64) -> Vec<f64> {
    let e = 1.0 - beta;
    let a0 = |a: f64, b: f64| (b.powf(e) - a.powf(e)) / e;
    let a1 = |a: f64, b: f64| (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0);
    let mut w = vec![0.0; j + 1];
    w[0] = mesh[0] / e;
    for i in 0..j {
        let (a, b) = (mesh[i], mesh[i + 1]);
        let (i0, i1) = (a0(a, b), a1(a, b));
        w[i] += a.powf(beta) * (b * i0 - i1) / (b - a);
        w[i + 1] += b.powf(beta) * (i1 - a * i0) / (b - a);
    }
    w
}

/// `|u|^alpha u` on each slice.
fn nonlinear_terms(slices: &[Field], alpha: f64) -> Result<Vec<Field>> {
    slices.par_iter().map(|u| u.power_nonlinearity(alpha)).collect()
}

fn duhamel_from_terms(
    plan: &KernelPlan,
    linear: &Field,
    mesh: &[f64],
    j: usize,
    terms: &[Field],
    beta: f64,
) -> Result<Field> {
    let w = duhamel_weights(mesh, j, beta);
    let a = plan.spec().sign_a.value();
    let mut out = linear.values().clone();
    for (i, wi) in w.iter().enumerate() {
        if *wi == 0.0 {
            continue;
        }
        let moved = if i == j { terms[i].clone() } else { plan.apply_grid_kernel(mesh[j] - mesh[i], &terms[i])? };
        out.zip_mut_with(moved.values(), |o, v| *o += a * wi * v);
    }
    linear.with_values(out).map(|f| f.without_profile().with_time(mesh[j]))
}

/// One Duhamel evaluation at mesh node `j`:
/// `linear + a Σ_i w_i e^{(s_j - s_i)Δ_Ω} |u_i|^alpha u_i` with the
/// positivity-preserving grid kernel.
pub fn duhamel_step(
    plan: &KernelPlan,
    linear: &Field,
    mesh: &[f64],
    j: usize,
    slices: &[Field],
    beta: f64,
) -> Result<Field> {
    if j >= mesh.len() || slices.len() <= j {
        return Err(Error::Config(format!("mesh index {j} outside the {} supplied slices", slices.len())));
    }
    if beta >= 1.0 {
        return Err(Error::Supercritical { alpha: plan.spec().alpha, critical: plan.spec().critical_alpha() });
    }
    let terms = nonlinear_terms(&slices[..=j], plan.spec().alpha)?;
    duhamel_from_terms(plan, linear, mesh, j, &terms, beta)
}

/// `e^{sΔ_Ω} psi` on the plan's grid.
pub fn linear_part(plan: &KernelPlan, profile: &SingularProfile, s: f64, fast_psi0: bool) -> Result<Field> {
    if fast_psi0 {
        if let (Some(k), Some(_)) = (profile.psi0_factor(), plan.cache()) {
            return plan.psi_scaled(s, k);
        }
    }
    plan.apply_profile(s, profile)
}

/// Per-sweep diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// `|||u^{k+1} - u^k|||`.
    pub increment: f64,
    /// Ratio of consecutive increments, when both are above round-off.
    pub ratio: Option<f64>,
    /// `|||u^{k+1}|||`.
    pub ball_norm: f64,
}

/// A converged construction.
#[derive(Clone, Debug)]
pub struct PicardRun {
    pub spec: SectorSpec,
    pub config: PicardConfig,
    pub mesh: Vec<f64>,
    /// `u(s_j)`.
    pub slices: Vec<Field>,
    /// `e^{s_j Δ_Ω} psi`.
    pub linear: Vec<Field>,
    pub history: Vec<SweepRecord>,
    /// Final `|||u|||`.
    pub ball_norm: f64,
    /// Largest measured contraction ratio.
    pub max_ratio: f64,
    /// `2(alpha+1) M^alpha I(T)`.
    pub contraction_bound: f64,
    /// `||psi||_X` (closed form when available, else sampled).
    pub data_x_norm: f64,
    profile: SingularProfile,
    weights: Vec<Field>,
}

/// Sampled `sup |f| / psi_0` over the grid nodes.
pub fn sampled_x_norm(plan: &KernelPlan, f: &Field) -> Result<f64> {
    let spec = *plan.spec();
    let w = Field::from_fn(spec, plan.grid().clone(), |x| crate::profiles::psi0(&spec, x))?;
    weighted_sup_ratio(f, &w)
}

fn profile_x_norm(plan: &KernelPlan, profile: &SingularProfile) -> Result<f64> {
    match profile.x_norm_bound() {
        Some(b) => Ok(b),
        None => {
            let spec = *plan.spec();
            let sampled = Field::from_fn(spec, plan.grid().clone(), |x| profile.eval_unchecked(x))?;
            sampled_x_norm(plan, &sampled)
        }
    }
}

fn require_cache(plan: &KernelPlan) -> Result<Arc<PsiCache>> {
    plan.cache()
        .cloned()
        .ok_or_else(|| Error::Config("the fixed-point construction needs a plan with a Psi cache".into()))
}

fn x_t_norm(slices: &[Field], weights: &[Field]) -> Result<f64> {
    slices
        .iter()
        .zip(weights)
        .map(|(u, w)| weighted_sup_ratio(u, w))
        .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
}

fn difference_norm(a: &[Field], b: &[Field], weights: &[Field]) -> Result<f64> {
    let diffs: Vec<Field> = a.iter().zip(b).map(|(x, y)| x.sub(y)).collect::<Result<_>>()?;
    x_t_norm(&diffs, weights)
}

/// Iterate the Duhamel map from `u^0 = e^{tΔ_Ω} psi` until the increment drops
/// below `config.tol`.
pub fn solve_picard(plan: &KernelPlan, profile: &SingularProfile, config: &PicardConfig) -> Result<PicardRun> {
    let spec = *plan.spec();
    if profile.spec() != &spec {
        return Err(Error::InvalidSpec("profile and plan belong to different sectors".into()));
    }
    let cache = require_cache(plan)?;
    config.check(&spec, &cache)?;
    let data_x_norm = profile_x_norm(plan, profile)?;
    if data_x_norm > config.k * (1.0 + 1e-9) {
        return Err(Error::Config(format!("data X-norm {data_x_norm} exceeds the declared bound K = {}", config.k)));
    }
    let bound = config.contraction_bound(&spec, &cache)?;
    let mesh = config.mesh(&spec);
    let beta = if profile.bounded() { 0.0 } else { spec.beta() };
    let linear: Vec<Field> = mesh
        .par_iter()
        .map(|&s| linear_part(plan, profile, s, config.fast_psi0))
        .collect::<Result<_>>()?;
    let weights: Vec<Field> = mesh.iter().map(|&s| plan.psi(s)).collect::<Result<_>>()?;

    let mut current: Vec<Field> = linear.iter().map(|f| f.clone().without_profile()).collect();
    let mut history = Vec::new();
    let mut prev_inc: Option<f64> = None;
    let mut max_ratio: f64 = 0.0;
    // below this the increments are dominated by rounding
    let noise = 1e3 * f64::EPSILON * x_t_norm(&current, &weights)?.max(1e-300);
    for sweep in 0..config.max_iterations {
        let terms = nonlinear_terms(&current, spec.alpha)?;
        let next: Vec<Field> = (0..mesh.len())
            .into_par_iter()
            .map(|j| duhamel_from_terms(plan, &linear[j], &mesh, j, &terms, beta))
            .collect::<Result<_>>()?;
        let increment = difference_norm(&next, &current, &weights)?;
        let ball_norm = x_t_norm(&next, &weights)?;
        let ratio = match prev_inc {
            Some(p) if p > noise && increment > noise => Some(increment / p),
            _ => None,
        };
        if let Some(r) = ratio {
            max_ratio = max_ratio.max(r);
            if r >= 1.0 {
                return Err(Error::NonContraction { sweep, ratio: r, bound });
            }
        }
        log::debug!("picard sweep {sweep}: increment {increment:.3e}, |||u||| {ball_norm:.6}");
        history.push(SweepRecord { increment, ratio, ball_norm });
        current = next;
        prev_inc = Some(increment);
        if increment < config.tol || increment <= noise {
            return Ok(PicardRun {
                spec,
                config: config.clone(),
                mesh,
                slices: current,
                linear,
                history,
                ball_norm,
                max_ratio,
                contraction_bound: bound,
                data_x_norm,
                profile: profile.clone(),
                weights,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: config.max_iterations,
        tol: config.tol,
        last: prev_inc.unwrap_or(f64::NAN),
    })
}

impl PicardRun {
    pub fn profile(&self) -> &SingularProfile {
        &self.profile
    }

    /// `u(T)`, the handoff state.
    pub fn final_slice(&self) -> &Field {
        self.slices.last().expect("mesh is nonempty")
    }

    /// `|||self - other|||`.
    pub fn distance(&self, other: &PicardRun) -> Result<f64> {
        if self.mesh != other.mesh {
            return Err(Error::Config("runs use different time meshes".into()));
        }
        difference_norm(&self.slices, &other.slices, &self.weights)
    }

    /// Grid-L1 distance between `u(s_1)` and the data over `delta < |x|`.
    pub fn initial_trace_defect(&self, delta: f64) -> Result<f64> {
        let first = &self.slices[0];
        let data = Field::from_fn(self.spec, first.grid().clone(), |x| self.profile.eval_unchecked(x))?;
        Ok(first.sub(&data)?.grid_l1(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt() > delta))
    }

    /// Largest `|u(s_j)| - e^{s_j Δ_Ω}|psi|` over slices and nodes, given the
    /// linear slices of `|psi|`.
    pub fn max_excess_over_linear(&self, abs_linear: &[Field]) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for (u, l) in self.slices.iter().zip(abs_linear) {
            worst = worst.max(u.abs()?.max_excess_over(l)?);
        }
        Ok(worst)
    }

    /// Largest `u(s_j) - other(s_j)` over slices and nodes.
    pub fn max_excess_over(&self, other: &PicardRun) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for (a, b) in self.slices.iter().zip(&other.slices) {
            worst = worst.max(a.max_excess_over(b)?);
        }
        Ok(worst)
    }

    /// Smallest value over all slices.
    pub fn min_value(&self) -> f64 {
        self.slices.iter().map(Field::min).fold(f64::INFINITY, f64::min)
    }

    /// Config JSON, sweep history CSV and the final slice.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        #[derive(Serialize)]
        struct Summary<'a> {
            config: &'a PicardConfig,
            mesh: &'a [f64],
            ball_norm: f64,
            max_ratio: f64,
            contraction_bound: f64,
            data_x_norm: f64,
            sweeps: usize,
        }
        let summary = Summary {
            config: &self.config,
            mesh: &self.mesh,
            ball_norm: self.ball_norm,
            max_ratio: self.max_ratio,
            contraction_bound: self.contraction_bound,
            data_x_norm: self.data_x_norm,
            sweeps: self.history.len(),
        };
        fs::write(dir.join("picard.json"), serde_json::to_string_pretty(&summary)?)?;
        let mut csv = fs::File::create(dir.join("picard_sweeps.csv"))?;
        writeln!(csv, "sweep,increment,ratio,ball_norm")?;
        for (i, r) in self.history.iter().enumerate() {
            let ratio = r.ratio.map_or(String::new(), |v| format!("{v:.10e}"));
            writeln!(csv, "{i},{:.10e},{ratio},{:.10e}", r.increment, r.ball_norm)?;
        }
        field_io::save_binary(self.final_slice(), &dir.join("picard_final.bin"))
    }
}

/// Outcome of a Lipschitz comparison between two runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `|||u_1 - u_2||| / ||psi_1 - psi_2||_X`.
    pub ratio: f64,
    /// `C = 1 / (1 - 2(alpha+1) M^alpha I(T))`.
    pub bound: f64,
    /// `ratio <= 1.05 C`.
    pub passed: bool,
}

/// Dependence of the solution on the data. Data distances are measured on
/// the grid against sampled `psi_0`.
pub fn lipschitz_check(plan: &KernelPlan, run1: &PicardRun, run2: &PicardRun) -> Result<LipschitzReport> {
    if run1.config != run2.config {
        return Err(Error::Config("Lipschitz comparison needs runs with the same configuration".into()));
    }
    let cache = require_cache(plan)?;
    let spec = run1.spec;
    let grid = run1.slices[0].grid().clone();
    let diff = Field::from_fn(spec, grid, |x| run1.profile.eval_unchecked(x) - run2.profile.eval_unchecked(x))?;
    let denom = sampled_x_norm(plan, &diff)?;
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let ratio = run1.distance(run2)? / denom;
    let bound = run1.config.lipschitz_constant(&spec, &cache)?;
    Ok(LipschitzReport { ratio, bound, passed: ratio <= 1.05 * bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisKind, GridSpec, Sign};
    use crate::semigroup::{CacheParams, Method};

    fn cache_for(spec: &SectorSpec) -> Arc<PsiCache> {
        Arc::new(PsiCache::build(spec, CacheParams { du: 0.02, r_max: 300.0 }).unwrap())
    }

    fn setup(alpha: f64, sign: Sign) -> (SectorSpec, KernelPlan) {
        let spec = SectorSpec::new(1, 1, 0.5, alpha, sign).unwrap();
        let grid = GridSpec::for_sector(&spec, 8.0, 200).unwrap();
        let plan = KernelPlan::new(spec, grid, Method::Quadrature).unwrap().with_cache(cache_for(&spec)).unwrap();
        (spec, plan)
    }

    #[test]
    fn weights_integrate_the_singular_weight_exactly() {
        let mesh: Vec<f64> = (1..=10).map(|j| (j as f64 / 10.0).powf(1.6)).collect();
        let beta = 0.375;
        for j in [0, 3, 9] {
            let w = duhamel_weights(&mesh, j, beta);
            // h(s) = s^{-beta} g with g = 1 and g = s
            let ones: f64 = w.iter().zip(&mesh).map(|(wi, s)| wi * s.powf(-beta)).sum();
            assert!((ones - mesh[j].powf(1.0 - beta) / (1.0 - beta)).abs() < 1e-13);
            if j > 0 {
                let lin: f64 = w.iter().zip(&mesh).map(|(wi, s)| wi * s.powf(1.0 - beta)).sum();
                let exact = mesh[j].powf(2.0 - beta) / (2.0 - beta);
                // linear g is exact except on (0, s_0]
                let first = mesh[0].powf(2.0 - beta) * (1.0 / (1.0 - beta) - 1.0 / (2.0 - beta));
                assert!((lin - exact - first).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn admissible_constants_satisfy_both_conditions() {
        let (spec, plan) = setup(0.5, Sign::Plus);
        let cache = plan.cache().unwrap();
        let cfg = PicardConfig::admissible(&spec, cache, 1.0).unwrap();
        assert_eq!(cfg.radius, 2.0);
        assert!(cfg.stability_lhs(&spec, cache).unwrap() <= cfg.radius);
        assert!(cfg.contraction_bound(&spec, cache).unwrap() < 1.0);
        let (_, t_small) = admissible_constants(&spec, cache, 0.1).unwrap();
        let (_, t_big) = admissible_constants(&spec, cache, 2.0).unwrap();
        assert!(t_small > cfg.horizon && cfg.horizon > t_big);
        // T(lam K) = lam^{-sigma} T(K)
        let sigma = spec.sigma().unwrap();
        assert!((t_big / cfg.horizon - 2f64.powf(-sigma)).abs() < 1e-12);
        let sup = spec.with_alpha(2.0).unwrap();
        assert!(matches!(admissible_constants(&sup, cache, 1.0), Err(Error::Supercritical { .. })));
    }

    #[test]
    fn zero_data_stays_zero() {
        let (spec, plan) = setup(0.5, Sign::Plus);
        let zero = Field::zeros(spec, plan.grid().clone()).unwrap();
        let mesh = [0.1, 0.2, 0.4];
        let slices = vec![zero.clone(), zero.clone(), zero.clone()];
        let out = duhamel_step(&plan, &zero, &mesh, 2, &slices, 0.375).unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn one_node_constant_mesh_is_euler() {
        let spec = SectorSpec::new(1, 0, 0.5, 1.0, Sign::Plus).unwrap();
        let grid = GridSpec::with_symmetric_kind(&spec, 4.0, 16, AxisKind::Periodic).unwrap();
        let plan = KernelPlan::new(spec, grid.clone(), Method::Quadrature).unwrap();
        let c = 0.7;
        let u = Field::from_fn(spec, grid, |_| c).unwrap();
        let t = 0.05;
        let out = duhamel_step(&plan, &u, &[t], 0, std::slice::from_ref(&u), 0.0).unwrap();
        for v in out.as_slice() {
            assert!((v - (c + t * c * c)).abs() < 1e-14);
        }
    }

    #[test]
    fn absorption_lowers_the_linear_flow() {
        let (spec, plan) = setup(0.5, Sign::Minus);
        let psi = SingularProfile::psi0(spec, 1.0);
        let mesh = [0.05, 0.1];
        let lin: Vec<Field> = mesh.iter().map(|&s| linear_part(&plan, &psi, s, true).unwrap()).collect();
        let out = duhamel_step(&plan, &lin[1], &mesh, 1, &lin, spec.beta()).unwrap();
        assert!(out.max_excess_over(&lin[1]).unwrap() <= 0.0);
    }

    #[test]
    fn psi0_run_is_certified() {
        let (spec, plan) = setup(0.5, Sign::Plus);
        let cache = plan.cache().unwrap().clone();
        let cfg = PicardConfig::admissible(&spec, &cache, 1.0).unwrap().with_mesh_len(12);
        let run = solve_picard(&plan, &SingularProfile::psi0(spec, 1.0), &cfg).unwrap();
        assert!(run.ball_norm <= cfg.radius);
        assert!(run.max_ratio <= 1.05 * run.contraction_bound, "{} vs {}", run.max_ratio, run.contraction_bound);
        assert!(run.min_value() >= -1e-10);
        assert!(run.history.iter().all(|r| r.ball_norm <= cfg.radius));
    }

    #[test]
    fn lipschitz_ratio_respects_the_constant() {
        let (spec, plan) = setup(0.5, Sign::Plus);
        let cache = plan.cache().unwrap().clone();
        let cfg = PicardConfig::admissible(&spec, &cache, 1.0).unwrap().with_mesh_len(10);
        let r1 = solve_picard(&plan, &SingularProfile::psi0(spec, 0.8), &cfg).unwrap();
        let r2 = solve_picard(&plan, &SingularProfile::psi0(spec, 0.9), &cfg).unwrap();
        let rep = lipschitz_check(&plan, &r1, &r2).unwrap();
        assert!(rep.passed && rep.ratio >= 1.0 - 1e-6, "{rep:?}");
        assert!(matches!(lipschitz_check(&plan, &r1, &r1), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn oversized_data_is_rejected() {
        let (spec, plan) = setup(0.5, Sign::Plus);
        let cache = plan.cache().unwrap().clone();
        let cfg = PicardConfig::admissible(&spec, &cache, 1.0).unwrap();
        assert!(matches!(solve_picard(&plan, &SingularProfile::psi0(spec, 1.5), &cfg), Err(Error::Config(_))));
    }
}
