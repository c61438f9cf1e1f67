//! Life-span experiments: sweeps of `T_max(lam f)`, dilation limits of the
//! data, blow-up criteria and small-data global existence.
//!
//! The scaling `u_mu(t, x) = mu^{2/alpha} u(mu^2 t, mu x)` gives
//! `lam^sigma T_max(lam f) = T_max(f_tau)` with `tau = lam^sigma` and
//! `f_tau = tau^{-(gamma+m)/2} f(x / sqrt(tau))`. The [`Strategy::Rescaled`]
//! sweep uses this identity; [`Strategy::Direct`] evolves `lam f` itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{estimate_tmax, evolve_from, EvolveControls, Status};
use crate::geometry::{Field, SectorSpec};
use crate::numerics::linear_fit;
use crate::profiles::{psi0, Modulation, ProfileKind, SingularProfile};
use crate::semigroup::KernelPlan;

/// How a sweep point is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Evolve `lam f` on the plan's grid.
    Direct,
    /// Evolve the parabolically rescaled datum `f_tau`, `tau = lam^sigma`.
    Rescaled,
}

/// One point of a life-span curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub status: Status,
    /// `T_max(lam f)`.
    pub t_max: Option<f64>,
    pub uncertainty: Option<f64>,
    /// `lam^sigma T_max(lam f)`.
    pub scaled: Option<f64>,
    pub scaled_uncertainty: Option<f64>,
    pub extrapolation_unjustified: bool,
    pub note: String,
}

/// `T_max(lam f)` over a list of `lam`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanCurve {
    pub profile: String,
    pub strategy: Strategy,
    pub sigma: Option<f64>,
    pub points: Vec<SweepPoint>,
    /// Slope of `log T_max` against `log lam` over the blown-up points.
    pub slope: Option<f64>,
    /// Pairs `(lam_i < lam_j)` with `T_max(lam_j f) > T_max(lam_i f)` beyond the uncertainties.
    pub monotonicity_violations: usize,
}

impl LifespanCurve {
    /// Points that blew up, in sweep order.
    pub fn blown_up(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| p.status == Status::BlewUp)
    }

    /// `lambda, status, t_max, uncertainty, scaled, scaled_uncertainty`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,status,t_max,uncertainty,scaled,scaled_uncertainty\n");
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
        for p in &self.points {
            out.push_str(&format!(
                "{:.12e},{},{},{},{},{}\n",
                p.lambda,
                p.status.as_str(),
                f(p.t_max),
                f(p.uncertainty),
                f(p.scaled),
                f(p.scaled_uncertainty)
            ));
        }
        out
    }
}

fn sweep_point(plan: &KernelPlan, profile: &SingularProfile, lambda: f64, controls: &EvolveControls, strategy: Strategy) -> Result<SweepPoint> {
    let spec = *plan.spec();
    let sigma = spec.sigma();
    let (rec, factor) = match strategy {
        Strategy::Direct => (estimate_tmax(plan, &profile.scaled(lambda), controls)?, 1.0),
        Strategy::Rescaled => {
            let s = sigma.ok_or_else(|| {
                Error::Config("the rescaled strategy needs a subcritical power (sigma undefined)".into())
            })?;
            let tau = lambda.powf(s);
            // T_max(lam f) = T_max(f_tau) / tau
            (estimate_tmax(plan, &profile.parabolic_rescale(tau), controls)?, 1.0 / tau)
        }
    };
    let lam_sigma = sigma.map(|s| lambda.powf(s));
    let t_max = rec.t_max.map(|t| t * factor);
    let uncertainty = rec.uncertainty.map(|u| u * factor);
    Ok(SweepPoint {
        lambda,
        status: rec.status,
        t_max,
        uncertainty,
        scaled: t_max.zip(lam_sigma).map(|(t, l)| t * l),
        scaled_uncertainty: uncertainty.zip(lam_sigma).map(|(u, l)| u * l),
        extrapolation_unjustified: rec.extrapolation_unjustified,
        note: rec.note,
    })
}

/// Run [`estimate_tmax`] for `lam f` at each `lam` in parallel.
pub fn sweep_lifespan(
    plan: &KernelPlan,
    profile: &SingularProfile,
    lambdas: &[f64],
    controls: &EvolveControls,
    strategy: Strategy,
) -> Result<LifespanCurve> {
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Config("sweep values of lambda must be positive".into()));
    }
    let increasing = lambdas.windows(2).all(|w| w[1] > w[0]);
    let decreasing = lambdas.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Config("lambda values must be strictly monotone".into()));
    }
    let points: Vec<SweepPoint> = lambdas
        .par_iter()
        .map(|&l| sweep_point(plan, profile, l, controls, strategy))
        .collect::<Result<_>>()?;
    for p in &points {
        if p.status != Status::BlewUp {
            log::info!("lambda = {}: {} ({})", p.lambda, p.status.as_str(), p.note);
        }
    }
    let fitted: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.status == Status::BlewUp)
        .filter_map(|p| p.t_max.map(|t| (p.lambda.ln(), t.ln())))
        .collect();
    let slope = (fitted.len() >= 2).then(|| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fitted.into_iter().unzip();
        linear_fit(&xs, &ys).1
    });
    let mut violations = 0;
    if profile.is_nonnegative() && plan.spec().sign_a.value() > 0.0 {
        let done: Vec<&SweepPoint> = points.iter().filter(|p| p.status == Status::BlewUp).collect();
        for i in 0..done.len() {
            for j in 0..done.len() {
                let (a, b) = (done[i], done[j]);
                if a.lambda < b.lambda {
                    let slack = a.uncertainty.unwrap_or(0.0) + b.uncertainty.unwrap_or(0.0);
                    if b.t_max.unwrap() > a.t_max.unwrap() + slack {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok(LifespanCurve {
        profile: format!("{:?}", profile.kind()),
        strategy,
        sigma: plan.spec().sigma(),
        points,
        slope,
        monotonicity_violations: violations,
    })
}

/// Sample points of `{r_in < |x| < r_out}` inside the sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_in: f64,
    pub r_out: f64,
    /// Nodes per axis of the sampling lattice.
    pub points_per_axis: usize,
}

impl Annulus {
    pub fn new(r_in: f64, r_out: f64, points_per_axis: usize) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in) || points_per_axis < 2 {
            return Err(Error::Config(format!("bad annulus ({r_in}, {r_out}) with {points_per_axis} points")));
        }
        Ok(Annulus { r_in, r_out, points_per_axis })
    }

    /// Lattice points and the volume element.
    pub fn sample(&self, spec: &SectorSpec) -> (Vec<Vec<f64>>, f64) {
        let n = self.points_per_axis;
        let axis = |anti: bool| -> Vec<f64> {
            if anti {
                let h = self.r_out / n as f64;
                (0..n).map(|k| (k as f64 + 0.5) * h).collect()
            } else {
                let h = 2.0 * self.r_out / n as f64;
                (0..n).map(|k| -self.r_out + (k as f64 + 0.5) * h).collect()
            }
        };
        let axes: Vec<Vec<f64>> = (0..spec.dim).map(|a| axis(a < spec.m)).collect();
        let vol: f64 = (0..spec.dim).map(|a| axes[a][1] - axes[a][0]).product();
        let mut pts = Vec::new();
        let mut idx = vec![0usize; spec.dim];
        loop {
            let x: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > self.r_in && r < self.r_out {
                pts.push(x);
            }
            let mut a = 0;
            loop {
                if a == spec.dim {
                    return (pts, vol);
                }
                idx[a] += 1;
                if idx[a] < n {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }
}

/// `lam_n^{gamma+m} f(lam_n x)` on an annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationProbe {
    pub lambdas: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub volume_element: f64,
    /// `values[n][i]` is the probe for `lambdas[n]` at `points[i]`.
    pub values: Vec<Vec<f64>>,
    /// L1 distance between consecutive probes.
    pub consecutive_distances: Vec<f64>,
    /// L1 norm of each probe.
    pub norms: Vec<f64>,
    /// Largest `|probe| / psi_0` over all probes.
    pub x_bound: f64,
}

impl DilationProbe {
    /// L1 distance between probes `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.values[i].iter().zip(&self.values[j]).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.volume_element
    }

    /// The last probe, the candidate limit.
    pub fn limit_candidate(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Largest `|probe_n - psi_0 g(log|x| + log lam_n)| / psi_0` against the
    /// log-periodic orbit of a modulation.
    pub fn orbit_defect(&self, spec: &SectorSpec, modulation: &Modulation, amplitude: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, lam) in self.lambdas.iter().enumerate() {
            for (x, v) in self.points.iter().zip(&self.values[n]) {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                let w = psi0(spec, x);
                let z = amplitude * w * modulation.eval(r.ln() + lam.ln());
                worst = worst.max((v - z).abs() / w);
            }
        }
        worst
    }

    /// Probe `n` as a field on `plan`'s grid, by evaluating the dilated profile.
    pub fn field_for(plan: &KernelPlan, profile: &SingularProfile, lambda: f64) -> Result<Field> {
        let p = profile.normalized_dilation(lambda);
        Field::from_fn(*plan.spec(), plan.grid().clone(), |x| p.eval_unchecked(x))
    }
}

/// Evaluate the dilation probes of `profile` analytically on the annulus.
pub fn dilation_limits(profile: &SingularProfile, lambdas: &[f64], annulus: &Annulus) -> Result<DilationProbe> {
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Config("dilation factors must be positive".into()));
    }
    let spec = *profile.spec();
    let (points, vol) = annulus.sample(&spec);
    let values: Vec<Vec<f64>> = lambdas
        .par_iter()
        .map(|&l| {
            let p = profile.normalized_dilation(l);
            points.iter().map(|x| p.eval_unchecked(x)).collect()
        })
        .collect();
    let l1 = |a: &[f64], b: Option<&[f64]>| -> f64 {
        match b {
            Some(b) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * vol,
            None => a.iter().map(|x| x.abs()).sum::<f64>() * vol,
        }
    };
    let consecutive_distances = values.windows(2).map(|w| l1(&w[1], Some(&w[0]))).collect();
    let norms = values.iter().map(|v| l1(v, None)).collect();
    let mut x_bound: f64 = 0.0;
    for v in &values {
        for (x, val) in points.iter().zip(v) {
            x_bound = x_bound.max(val.abs() / psi0(&spec, x));
        }
    }
    Ok(DilationProbe { lambdas: lambdas.to_vec(), points, volume_element: vol, values, consecutive_distances, norms, x_bound })
}

/// Outcome of the blow-up criterion for a dilation limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BlowupPredicted,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub verdict: Verdict,
    pub regime: String,
    /// Grid L1 norm of the limit.
    pub l1: f64,
    /// `||e^{Δ_Ω} z||_∞` (critical power only).
    pub heat_sup: Option<f64>,
    /// `(1/alpha)^{1/alpha}`.
    pub threshold: Option<f64>,
    /// Gates that decided the verdict.
    pub gates: Vec<String>,
}

/// Blow-up prediction from a nonnegative dilation limit `z`.
///
/// Below the critical power any nontrivial `z` predicts blow-up. At the
/// critical power the prediction needs `||e^{Δ_Ω} z||_∞ > (1/alpha)^{1/alpha}`.
pub fn blowup_criterion_check(plan: &KernelPlan, z: &Field, tol: f64) -> Result<CriterionReport> {
    let spec = *plan.spec();
    let scale = z.sup_norm();
    if z.min() < -tol.max(1e-12 * scale) {
        return Err(Error::SignChanging { min: z.min() });
    }
    let l1 = z.grid_l1(|_| true);
    if l1 <= tol {
        return Ok(CriterionReport {
            verdict: Verdict::Undetermined,
            regime: "trivial".into(),
            l1,
            heat_sup: None,
            threshold: None,
            gates: vec![format!("l1 {l1:.3e} <= {tol:.1e}")],
        });
    }
    if spec.is_critical() {
        let heat = plan.apply_kernel(1.0, z)?.sup_norm();
        let threshold = (1.0 / spec.alpha).powf(1.0 / spec.alpha);
        let verdict = if heat > threshold { Verdict::BlowupPredicted } else { Verdict::Undetermined };
        return Ok(CriterionReport {
            verdict,
            regime: "critical".into(),
            l1,
            heat_sup: Some(heat),
            threshold: Some(threshold),
            gates: vec![format!("||e^Δ z|| = {heat:.6} vs (1/alpha)^(1/alpha) = {threshold:.6}")],
        });
    }
    if spec.is_subcritical() {
        return Ok(CriterionReport {
            verdict: Verdict::BlowupPredicted,
            regime: "subcritical".into(),
            l1,
            heat_sup: None,
            threshold: None,
            gates: vec![format!("l1 {l1:.3e} > {tol:.1e}")],
        });
    }
    Ok(CriterionReport {
        verdict: Verdict::Undetermined,
        regime: "supercritical".into(),
        l1,
        heat_sup: None,
        threshold: None,
        gates: vec!["no criterion above the critical power".into()],
    })
}

/// Configuration of the two-subsequence experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLimitConfig {
    pub c1: f64,
    pub c2: f64,
    /// Length of each block in `log|x|`.
    pub block_len: f64,
    /// Core radius that regularises the profile at the origin.
    pub core_radius: f64,
    /// Subsequence indices `n` (`lam_n = exp(-n P (2/alpha - gamma - m))`, `P` the period).
    pub indices: Vec<u32>,
}

impl Default for TwoLimitConfig {
    fn default() -> Self {
        TwoLimitConfig { c1: 1.0, c2: 2.0, block_len: 4.0, core_radius: 1.0, indices: vec![1, 2] }
    }
}

/// Scaled life spans along the two matched subsequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLimitReport {
    pub first: LifespanCurve,
    pub second: LifespanCurve,
    /// Mean scaled value along each subsequence.
    pub limit_first: Option<f64>,
    pub limit_second: Option<f64>,
    /// Combined uncertainty of the two limits.
    pub uncertainty: f64,
    /// `T_max(c1 psi_0)` and `T_max(c2 psi_0)` measured independently.
    pub homogeneous: (Option<f64>, Option<f64>),
    /// No inconclusive runs.
    pub valid: bool,
    /// The limits lie between the homogeneous life spans (with uncertainty slack).
    pub bracketed: bool,
}

/// Lambda values `exp(-n P (2/alpha - gamma - m) + offset)` for a log-period `P`.
pub fn matched_subsequence(spec: &SectorSpec, period: f64, indices: &[u32], phase: f64) -> Result<Vec<f64>> {
    let sigma = spec
        .sigma()
        .ok_or_else(|| Error::Config("matched subsequences need a subcritical power".into()))?;
    // tau = lam^sigma shifts the log-phase by -log(tau)/2 = -sigma log(lam)/2
    let step = 2.0 * period / sigma;
    let mut out: Vec<f64> = indices.iter().map(|&n| (-(n as f64) * step - 2.0 * phase / sigma).exp()).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn mean_scaled(c: &LifespanCurve) -> (Option<f64>, f64) {
    let vals: Vec<(f64, f64)> = c
        .blown_up()
        .filter_map(|p| p.scaled.map(|s| (s, p.scaled_uncertainty.unwrap_or(0.0))))
        .collect();
    if vals.is_empty() {
        return (None, f64::INFINITY);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().map(|v| v.0).sum::<f64>() / n;
    let spread = vals.iter().map(|v| (v.0 - mean).abs()).fold(0.0, f64::max);
    let unc = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    (Some(mean), spread.max(unc))
}

/// Two subsequences of small `lam` whose rescaled data see the `c1` and `c2`
/// blocks of an alternating profile, compared with the homogeneous life spans.
pub fn two_limit_experiment(plan: &KernelPlan, cfg: &TwoLimitConfig, controls: &EvolveControls) -> Result<TwoLimitReport> {
    let spec = *plan.spec();
    if !spec.is_subcritical() {
        return Err(Error::Supercritical { alpha: spec.alpha, critical: spec.critical_alpha() });
    }
    let modulation = Modulation::Blocks { c1: cfg.c1, c2: cfg.c2, block_len: cfg.block_len, shift: 0.0 };
    let profile = SingularProfile::new(
        spec,
        ProfileKind::ModulatedPsi0 { modulation, core_radius: Some(cfg.core_radius) },
        1.0,
    )?;
    let period = 2.0 * cfg.block_len;
    let lam1 = matched_subsequence(&spec, period, &cfg.indices, 0.0)?;
    let lam2 = matched_subsequence(&spec, period, &cfg.indices, cfg.block_len)?;
    let first = sweep_lifespan(plan, &profile, &lam1, controls, Strategy::Rescaled)?;
    let second = sweep_lifespan(plan, &profile, &lam2, controls, Strategy::Rescaled)?;
    let (limit_first, u1) = mean_scaled(&first);
    let (limit_second, u2) = mean_scaled(&second);
    let homogeneous_tmax = |c: f64| -> Result<Option<f64>> {
        let p = SingularProfile::new(
            spec,
            ProfileKind::ModulatedPsi0 { modulation: Modulation::One, core_radius: Some(cfg.core_radius) },
            c,
        )?;
        // the homogeneous limit is the lam -> 0 life span of the cored profile
        let lam = matched_subsequence(&spec, period, &[*cfg.indices.last().unwrap_or(&1)], 0.0)?[0];
        let point = sweep_point(plan, &p, lam, controls, Strategy::Rescaled)?;
        Ok(point.scaled)
    };
    let homogeneous = (homogeneous_tmax(cfg.c1)?, homogeneous_tmax(cfg.c2)?);
    let valid = first.points.iter().chain(&second.points).all(|p| p.status == Status::BlewUp);
    let uncertainty = u1 + u2;
    let bracketed = match (limit_first, limit_second, homogeneous) {
        (Some(a), Some(b), (Some(h1), Some(h2))) => {
            let (lo, hi) = (h1.min(h2) - uncertainty, h1.max(h2) + uncertainty);
            (lo..=hi).contains(&a) && (lo..=hi).contains(&b)
        }
        _ => false,
    };
    Ok(TwoLimitReport { first, second, limit_first, limit_second, uncertainty, homogeneous, valid, bracketed })
}

/// Result of a long run against the supersolution `M Psi(t + t0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalSmallnessReport {
    pub lambda: f64,
    /// `(2(alpha+1) 2^{alpha+1} I_∞)^{-1/alpha}`.
    pub lambda_threshold: f64,
    /// `M = 2 lam`.
    pub radius: f64,
    pub t0: f64,
    pub horizon: f64,
    pub status: Status,
    /// Largest `|u(t)| / (M Psi(t + t0))` over checked times and nodes.
    pub max_ratio: f64,
    /// First `(t, node)` with `|u| > M Psi(t + t0)`.
    pub first_violation: Option<(f64, usize)>,
    pub checked_times: usize,
}

/// `lam_max` for data `lam e^{t0 Δ_Ω} psi_0` above the critical power.
pub fn smallness_threshold(plan: &KernelPlan, t0: f64) -> Result<f64> {
    let spec = *plan.spec();
    let cache = plan.cache().ok_or_else(|| Error::Config("the smallness check needs a Psi cache".into()))?;
    let tail = cache.alpha_tail_integral(&spec, t0)?;
    let a = spec.alpha;
    Ok((1.0 / (2.0 * (a + 1.0) * 2f64.powf(a + 1.0) * tail)).powf(1.0 / a))
}

/// Evolve `lam Psi(t0)` to `horizon_factor * t0` and compare with `2 lam Psi(t + t0)`.
/// `lambda = None` uses half the smallness threshold.
pub fn global_smallness_check(
    plan: &KernelPlan,
    t0: f64,
    lambda: Option<f64>,
    horizon_factor: f64,
    checks: usize,
    controls: &EvolveControls,
) -> Result<GlobalSmallnessReport> {
    let spec = *plan.spec();
    if spec.is_subcritical() || spec.is_critical() {
        return Err(Error::Config(format!(
            "global smallness needs alpha above 2/(gamma+m) = {}",
            spec.critical_alpha()
        )));
    }
    if !(t0 > 0.0) {
        return Err(Error::NonPositiveTime(t0));
    }
    let threshold = smallness_threshold(plan, t0)?;
    let lambda = lambda.unwrap_or(0.5 * threshold);
    let radius = 2.0 * lambda;
    let horizon = horizon_factor * t0;
    let times: Vec<f64> = (1..=checks.max(1)).map(|k| horizon * (k as f64 / checks.max(1) as f64).powi(2)).collect();
    let data = if lambda == 0.0 {
        Field::zeros(spec, plan.grid().clone())?
    } else {
        plan.psi_scaled(t0, lambda)?.without_profile()
    };
    let ctl = EvolveControls { horizon, snapshot_times: times, ..controls.clone() };
    let rec = evolve_from(plan, data, 0.0, &ctl)?;
    let mut max_ratio: f64 = 0.0;
    let mut first_violation = None;
    for snap in &rec.snapshots {
        let t = snap.time().unwrap_or(0.0);
        let bound = plan.psi(t + t0)?;
        for (i, (u, b)) in snap.as_slice().iter().zip(bound.as_slice()).enumerate() {
            let r = u.abs() / (radius * b);
            if lambda > 0.0 {
                max_ratio = max_ratio.max(r);
            }
            if lambda > 0.0 && r > 1.0 && first_violation.is_none() {
                first_violation = Some((t, i));
            }
        }
    }
    Ok(GlobalSmallnessReport {
        lambda,
        lambda_threshold: threshold,
        radius,
        t0,
        horizon,
        status: rec.status,
        max_ratio,
        first_violation,
        checked_times: rec.snapshots.len(),
    })
}

/// One row of the nonexistence signature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceRow {
    pub t0: f64,
    /// `||e^{t0 Δ_Ω} psi||_∞`, a lower bound for `||u(t0)||_∞` of any nonnegative solution.
    pub linear_sup: f64,
    /// `(alpha t0)^{-1/alpha}`, the largest sup norm a solution on `(0, t0]` can have at `t0`.
    pub bound: f64,
    pub violated: bool,
}

/// Evidence (not proof) that nonnegative data above `c psi_0` admit no local
/// solution above the critical power: the linear lower bound exceeds
/// `(alpha t)^{-1/alpha}` once `t0` is small enough.
pub fn nonexistence_signature(plan: &KernelPlan, profile: &SingularProfile, t0s: &[f64]) -> Result<Vec<NonexistenceRow>> {
    let spec = *plan.spec();
    if spec.is_subcritical() || spec.sign_a.value() < 0.0 {
        return Err(Error::Config("the nonexistence signature applies to a = +1 above the critical power".into()));
    }
    if !profile.is_nonnegative() {
        return Err(Error::Config("the nonexistence signature needs nonnegative data".into()));
    }
    t0s.iter()
        .map(|&t0| {
            let lin = crate::picard::linear_part(plan, profile, t0, true)?;
            let linear_sup = lin.sup_norm();
            let bound = (spec.alpha * t0).powf(-1.0 / spec.alpha);
            Ok(NonexistenceRow { t0, linear_sup, bound, violated: linear_sup > bound })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridSpec, Sign};
    use crate::semigroup::{CacheParams, Method, PsiCache};
    use std::sync::Arc;

    fn spec() -> SectorSpec {
        SectorSpec::new(1, 0, 0.5, 1.0, Sign::Plus).unwrap()
    }

    #[test]
    fn homogeneous_probe_is_constant() {
        let s = spec();
        let probe = dilation_limits(&SingularProfile::psi0(s, 1.0), &[1.0, 10.0, 100.0], &Annulus::new(0.5, 2.0, 64).unwrap()).unwrap();
        assert!(probe.consecutive_distances.iter().all(|&d| d < 1e-12));
        assert!((probe.x_bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compact_support_probes_vanish() {
        let s = spec();
        let bump = SingularProfile::new(s, ProfileKind::Bump { radius: 1.0, center: None }, 1.0).unwrap();
        let probe = dilation_limits(&bump, &[1.0, 10.0, 100.0], &Annulus::new(0.5, 2.0, 64).unwrap()).unwrap();
        assert!(probe.norms[0] > 0.0);
        assert_eq!(probe.norms[2], 0.0);
    }

    #[test]
    fn sin2_probes_are_log_periodic() {
        let s = spec();
        let g = Modulation::Sin2 { eps: 0.1, shift: 0.0 };
        let f = SingularProfile::modulated(s, g.clone(), 1.0);
        let pi = std::f64::consts::PI;
        let lams: Vec<f64> = (1..4).map(|n| (pi * n as f64).exp()).collect();
        let probe = dilation_limits(&f, &lams, &Annulus::new(0.3, 3.0, 50).unwrap()).unwrap();
        assert!(probe.consecutive_distances.iter().all(|&d| d < 1e-9));
        assert!(probe.orbit_defect(&s, &g, 1.0) < 1e-9);
        let shifted: Vec<f64> = lams.iter().map(|l| l * (0.5 * pi).exp()).collect();
        let other = dilation_limits(&f, &shifted, &Annulus::new(0.3, 3.0, 50).unwrap()).unwrap();
        // half a period later the probe is psi_0 (cos^2 + eps)
        for (x, v) in other.points.iter().zip(&other.values[0]) {
            let r: f64 = x[0].abs();
            assert!((v - psi0(&s, x) * (r.ln().cos().powi(2) + 0.1)).abs() < 1e-9 * psi0(&s, x));
        }
        let gap: f64 = other.values[0].iter().zip(&probe.values[0]).map(|(a, b)| (a - b).abs()).sum();
        assert!(gap > 1.0);
    }

    #[test]
    fn matched_subsequences_realign_the_phase() {
        let s = spec();
        let sigma = s.sigma().unwrap();
        let lams = matched_subsequence(&s, std::f64::consts::PI, &[1, 2], 0.0).unwrap();
        for l in lams {
            // the rescaled phase shift -sigma log(lam)/2 is a multiple of pi
            let shift = -0.5 * sigma * l.ln();
            let k = shift / std::f64::consts::PI;
            assert!((k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn criterion_verdicts() {
        let s = spec();
        let grid = GridSpec::for_sector(&s, 6.0, 120).unwrap();
        let plan = KernelPlan::new(s, grid.clone(), Method::Quadrature).unwrap();
        let zero = Field::zeros(s, grid.clone()).unwrap();
        assert_eq!(blowup_criterion_check(&plan, &zero, 1e-12).unwrap().verdict, Verdict::Undetermined);
        let z = Field::from_fn(s, grid.clone(), |x| (-x[0] * x[0]).exp()).unwrap();
        assert_eq!(blowup_criterion_check(&plan, &z, 1e-12).unwrap().verdict, Verdict::BlowupPredicted);
        let bad = z.scale(-1.0).unwrap();
        assert!(matches!(blowup_criterion_check(&plan, &bad, 1e-12), Err(Error::SignChanging { .. })));
    }

    #[test]
    fn critical_threshold_flips_the_verdict() {
        let s = SectorSpec::new(1, 0, 0.5, 4.0, Sign::Plus).unwrap();
        assert!(s.is_critical());
        let cache = Arc::new(PsiCache::build(&s, CacheParams { du: 0.02, r_max: 300.0 }).unwrap());
        let grid = GridSpec::for_sector(&s, 8.0, 160).unwrap();
        let plan = KernelPlan::new(s, grid, Method::Quadrature).unwrap().with_cache(cache.clone()).unwrap();
        let c_star = (1.0 / s.alpha).powf(1.0 / s.alpha) / cache.c_inf();
        for (c, expect) in [(0.9 * c_star, Verdict::Undetermined), (1.1 * c_star, Verdict::BlowupPredicted)] {
            let z = Field::sample(s, plan.grid().clone(), Arc::new(SingularProfile::psi0(s, c))).unwrap();
            let rep = blowup_criterion_check(&plan, &z, 1e-12).unwrap();
            assert_eq!(rep.verdict, expect, "{rep:?}");
        }
    }

    #[test]
    fn sweep_rejects_unordered_lambdas() {
        let s = spec();
        let grid = GridSpec::for_sector(&s, 4.0, 32).unwrap();
        let plan = KernelPlan::new(s, grid, Method::Spectral).unwrap();
        let f = SingularProfile::constant(s, 1.0);
        assert!(sweep_lifespan(&plan, &f, &[1.0, 0.5, 2.0], &EvolveControls::default(), Strategy::Direct).is_err());
    }
}
