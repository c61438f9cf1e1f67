//! Forward integration of `u_t = Δu + a|u|^alpha u` on the sector and
//! extrapolation of the blow-up time.
//!
//! Steps use Strang splitting: an exact half step of the scalar flow
//! `u' = a|u|^alpha u`, a heat step, another exact half step. When the sup
//! norm crosses the cap, `y = ||u||_∞^{-alpha}` is fitted linearly in time over
//! the last decade of growth; type-I blow-up makes `y ≈ alpha (T - t)`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Field, SectorSpec};
use crate::numerics::linear_fit;
use crate::picard::{sampled_x_norm, solve_picard, PicardConfig};
use crate::profiles::SingularProfile;
use crate::semigroup::{KernelPlan, Method};

/// Outcome of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    GlobalHorizonReached,
    BlewUp,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::GlobalHorizonReached => "global_horizon_reached",
            Status::BlewUp => "blew_up",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// The scalar flow reaches infinity inside the requested step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupSignal {
    /// Flat index of the node with the largest `|u|`.
    pub node: usize,
    /// Exact scalar blow-up time `1 / (alpha |u|^alpha)` from the step start.
    pub remainder: f64,
}

/// Exact solution of `u' = a|u|^alpha u` at every node over time `dt`:
/// `|u|^{-alpha} -> |u|^{-alpha} - a alpha dt`, sign preserved.
pub fn nonlinear_substep(f: &Field, dt: f64, a: f64, alpha: f64) -> Result<std::result::Result<Field, BlowupSignal>> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveTime(dt));
    }
    if a > 0.0 {
        let node = f.argmax_abs();
        let peak = f.as_slice()[node].abs();
        if peak > 0.0 && alpha * dt * peak.powf(alpha) >= 1.0 {
            return Ok(Err(BlowupSignal { node, remainder: 1.0 / (alpha * peak.powf(alpha)) }));
        }
    }
    let out = f.map(|u| {
        if u == 0.0 {
            0.0
        } else {
            u * (1.0 - a * alpha * dt * u.abs().powf(alpha)).powf(-1.0 / alpha)
        }
    })?;
    Ok(Ok(out.without_profile()))
}

/// Half nonlinear step, heat step with the plan's method, half nonlinear step.
pub fn strang_step(plan: &KernelPlan, f: &Field, dt: f64) -> Result<std::result::Result<Field, BlowupSignal>> {
    let spec = plan.spec();
    let (a, alpha) = (spec.sign_a.value(), spec.alpha);
    let half = match nonlinear_substep(f, 0.5 * dt, a, alpha)? {
        Ok(h) => h,
        Err(s) => return Ok(Err(s)),
    };
    let heated = plan.apply(dt, &half.without_profile())?;
    nonlinear_substep(&heated, 0.5 * dt, a, alpha)
}

/// Step-size, stopping and gate parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveControls {
    /// Stop with `global_horizon_reached` once `t` reaches this.
    pub horizon: f64,
    /// Sup-norm level that ends the run and triggers the fit.
    pub cap: f64,
    pub c_step: f64,
    /// Diffusive bound `dt <= safety * h^2`.
    pub safety: f64,
    /// Overrides the diffusive bound when set.
    pub max_dt: Option<f64>,
    /// Fraction of the scalar blow-up time allowed per step.
    pub growth_fraction: f64,
    /// Constant step (still reduced near blow-up).
    pub fixed_dt: Option<f64>,
    pub max_steps: usize,
    /// Relative RMS residual allowed in the type-I fit.
    pub residual_gate: f64,
    /// Allowed deviation of `(T - t)^{1/alpha} ||u||` from `(1/alpha)^{1/alpha}`.
    pub rate_gate: f64,
    /// Picard handoff at `max(fraction * T_picard, (cells * h)^2)`, capped by `T_picard`.
    pub handoff_fraction: f64,
    pub handoff_cells: f64,
    pub picard_mesh: usize,
    pub method: Method,
    /// Times at which the field is stored.
    pub snapshot_times: Vec<f64>,
}

impl Default for EvolveControls {
    fn default() -> Self {
        EvolveControls {
            horizon: 1e6,
            cap: 1e8,
            c_step: 1.0,
            safety: 4.0,
            max_dt: None,
            growth_fraction: 0.1,
            fixed_dt: None,
            max_steps: 2_000_000,
            residual_gate: 0.02,
            rate_gate: 0.05,
            handoff_fraction: 0.01,
            handoff_cells: 4.0,
            picard_mesh: 24,
            method: Method::Spectral,
            snapshot_times: Vec::new(),
        }
    }
}

impl EvolveControls {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("horizon", self.horizon),
            ("cap", self.cap),
            ("c_step", self.c_step),
            ("safety", self.safety),
            ("growth_fraction", self.growth_fraction),
            ("residual_gate", self.residual_gate),
            ("rate_gate", self.rate_gate),
            ("handoff_fraction", self.handoff_fraction),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("max_dt", self.max_dt), ("fixed_dt", self.fixed_dt)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Type-I fit diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub points: usize,
    /// RMS residual over the range of `||u||^{-alpha}` in the window.
    pub residual: f64,
    /// Zero of the fitted line.
    pub t_fit: f64,
    /// Fitted slope divided by `-alpha` (1 for exact type-I).
    pub slope_ratio: f64,
    /// Largest relative deviation of `(T - t)^{1/alpha} ||u||` from `(1/alpha)^{1/alpha}`.
    pub rate_deviation: f64,
    pub residual_passed: bool,
    pub rate_passed: bool,
}

/// Details of the fixed-point start for singular data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Handoff {
    pub t0: f64,
    pub picard_horizon: f64,
    pub k: f64,
    pub sweeps: usize,
    pub ball_norm: f64,
}

/// A finished trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub sups: Vec<f64>,
    pub steps: Vec<f64>,
    pub status: Status,
    pub t_max: Option<f64>,
    pub uncertainty: Option<f64>,
    pub fit: Option<FitReport>,
    pub handoff: Option<Handoff>,
    /// Blow-up was extrapolated outside the range where type-I behaviour is known.
    pub extrapolation_unjustified: bool,
    pub note: String,
    #[serde(skip)]
    pub snapshots: Vec<Field>,
    #[serde(skip)]
    pub final_field: Option<Field>,
}

impl TrajectoryRecord {
    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn last_sup(&self) -> f64 {
        *self.sups.last().unwrap_or(&0.0)
    }

    /// `[T - err, T + err]`.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match (self.t_max, self.uncertainty) {
            (Some(t), Some(e)) => Some((t - e, t + e)),
            _ => None,
        }
    }

    /// `t, sup, dt, status` per step.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(w, "t,sup,dt,status")?;
        for i in 0..self.times.len() {
            let dt = if i == 0 { 0.0 } else { self.steps[i - 1] };
            let status = if i + 1 == self.times.len() { self.status.as_str() } else { "running" };
            writeln!(w, "{:.15e},{:.15e},{:.6e},{status}", self.times[i], self.sups[i], dt)?;
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn fit_type_one(times: &[f64], sups: &[f64], alpha: f64, cap: f64, controls: &EvolveControls) -> (FitReport, f64, f64) {
    let n = times.len();
    let mut start = n.saturating_sub(1);
    while start > 0 && sups[start - 1] >= cap / 10.0 {
        start -= 1;
    }
    let start = start.min(n.saturating_sub(6));
    let ts = &times[start..];
    let ys: Vec<f64> = sups[start..].iter().map(|s| s.powf(-alpha)).collect();
    let (a, b, rss) = linear_fit(ts, &ys);
    let range = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual = (rss / ys.len() as f64).sqrt() / range.max(f64::MIN_POSITIVE);
    let t_fit = -a / b;
    let t_last = *ts.last().unwrap();
    let t_est = t_last + ys.last().unwrap() / alpha;
    let target = (1.0 / alpha).powf(1.0 / alpha);
    let mut rate_deviation: f64 = 0.0;
    let mut estimates = Vec::with_capacity(ts.len());
    for (t, s) in ts.iter().zip(&sups[start..]) {
        if t_est > *t {
            rate_deviation = rate_deviation.max(((t_est - t).powf(1.0 / alpha) * s / target - 1.0).abs());
        }
        estimates.push(t + s.powf(-alpha) / alpha);
    }
    let spread = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    let uncertainty = spread.max((t_fit - t_est).abs());
    let report = FitReport {
        points: ts.len(),
        residual,
        t_fit,
        slope_ratio: -b / alpha,
        rate_deviation,
        residual_passed: residual < controls.residual_gate,
        rate_passed: rate_deviation <= controls.rate_gate,
    };
    (report, t_est, uncertainty)
}

/// Integrate from `u0` at time `t_start`.
pub fn evolve_from(plan: &KernelPlan, u0: Field, t_start: f64, controls: &EvolveControls) -> Result<TrajectoryRecord> {
    controls.validate()?;
    let spec: SectorSpec = *plan.spec();
    let plan = plan.clone().with_method(controls.method);
    let alpha = spec.alpha;
    let h = plan.grid().min_spacing();
    let diffusive = controls.max_dt.unwrap_or(controls.safety * h * h);
    let mut snapshots_due: Vec<f64> = controls.snapshot_times.iter().copied().filter(|&s| s >= t_start).collect();
    snapshots_due.sort_by(f64::total_cmp);
    snapshots_due.reverse();

    let mut u = u0.without_profile();
    let mut t = t_start;
    let mut sup = u.sup_norm();
    let mut rec = TrajectoryRecord {
        times: vec![t],
        sups: vec![sup],
        steps: Vec::new(),
        status: Status::Inconclusive,
        t_max: None,
        uncertainty: None,
        fit: None,
        handoff: None,
        extrapolation_unjustified: false,
        note: String::new(),
        snapshots: Vec::new(),
        final_field: None,
    };
    while snapshots_due.last().is_some_and(|&s| s <= t) {
        snapshots_due.pop();
        rec.snapshots.push(u.clone().with_time(t));
    }
    let mut forced: Option<f64> = None;
    for _ in 0..controls.max_steps {
        if t >= controls.horizon {
            rec.status = Status::GlobalHorizonReached;
            break;
        }
        if !sup.is_finite() {
            rec.note = "sup norm became non-finite".into();
            break;
        }
        if sup >= controls.cap {
            let (fit, t_est, unc) = fit_type_one(&rec.times, &rec.sups, alpha, controls.cap, controls);
            rec.t_max = Some(t_est);
            rec.uncertainty = Some(unc);
            rec.status = if fit.residual_passed { Status::BlewUp } else { Status::Inconclusive };
            if !fit.residual_passed {
                rec.note = format!("type-I fit residual {:.3} above gate {}", fit.residual, controls.residual_gate);
            }
            rec.extrapolation_unjustified = !spec.type_one_guaranteed();
            rec.fit = Some(fit);
            break;
        }
        let growth = if sup > 0.0 { controls.growth_fraction / (alpha * sup.powf(alpha)) } else { f64::INFINITY };
        let mut dt = match controls.fixed_dt {
            Some(d) => d.min(growth),
            None => controls.c_step * diffusive.min(growth),
        };
        if let Some(f) = forced.take() {
            dt = dt.min(f);
        }
        dt = dt.min(controls.horizon - t);
        if let Some(&s) = snapshots_due.last() {
            dt = dt.min(s - t);
        }
        if !(dt > 0.0) || t + dt == t {
            rec.note = format!("time step underflow at t = {t}");
            break;
        }
        match strang_step(&plan, &u, dt)? {
            Ok(next) => {
                u = next;
                t += dt;
                if snapshots_due.last().is_some_and(|&s| (s - t).abs() <= 1e-12 * s.max(1.0)) {
                    t = snapshots_due.pop().unwrap();
                    rec.snapshots.push(u.clone().with_time(t));
                }
                sup = u.sup_norm();
                rec.times.push(t);
                rec.sups.push(sup);
                rec.steps.push(dt);
            }
            Err(signal) => {
                forced = Some(0.5 * signal.remainder.min(dt));
            }
        }
    }
    if rec.status == Status::Inconclusive && rec.note.is_empty() && rec.fit.is_none() {
        rec.note = format!("step budget of {} exhausted at t = {t}, sup = {sup:.3e}", controls.max_steps);
    }
    rec.final_field = Some(u.with_time(t));
    Ok(rec)
}

/// Maximal existence time of the solution with data `profile`.
///
/// Bounded data are sampled at `t = 0`. Singular data are first carried to
/// the handoff time `t0` by the fixed-point construction (this needs a plan
/// with a Psi cache and a subcritical power).
pub fn estimate_tmax(plan: &KernelPlan, profile: &SingularProfile, controls: &EvolveControls) -> Result<TrajectoryRecord> {
    let spec = *plan.spec();
    if profile.spec() != &spec {
        return Err(Error::InvalidSpec("profile and plan belong to different sectors".into()));
    }
    if profile.bounded() {
        let u0 = Field::from_fn(spec, plan.grid().clone(), |x| profile.eval_unchecked(x))?;
        return evolve_from(plan, u0, 0.0, controls);
    }
    let (u0, handoff) = picard_handoff(plan, profile, controls)?;
    let t0 = handoff.t0;
    let mut rec = evolve_from(plan, u0, t0, controls)?;
    rec.handoff = Some(handoff);
    Ok(rec)
}

/// `u(t0)` from the fixed-point construction.
pub fn picard_handoff(plan: &KernelPlan, profile: &SingularProfile, controls: &EvolveControls) -> Result<(Field, Handoff)> {
    let spec = *plan.spec();
    let cache = plan
        .cache()
        .ok_or_else(|| Error::Config("singular data need a plan with a Psi cache".into()))?;
    let k = match profile.x_norm_bound() {
        Some(b) => b,
        None => {
            let sampled = Field::from_fn(spec, plan.grid().clone(), |x| profile.eval_unchecked(x))?;
            sampled_x_norm(plan, &sampled)?
        }
    };
    if k == 0.0 {
        let zero = Field::zeros(spec, plan.grid().clone())?;
        return Ok((zero, Handoff { t0: 0.0, picard_horizon: f64::INFINITY, k, sweeps: 0, ball_norm: 0.0 }));
    }
    let base = PicardConfig::admissible(&spec, cache, k)?.with_mesh_len(controls.picard_mesh);
    let h = plan.grid().max_spacing();
    let floor = (controls.handoff_cells * h).powi(2);
    let t0 = base.horizon.min((controls.handoff_fraction * base.horizon).max(floor));
    if t0 < floor {
        log::warn!("handoff time {t0:.3e} is below the resolution floor {floor:.3e}; u(t0) is under-resolved");
    }
    let cfg = base.clone().with_horizon(t0)?;
    let quad_plan = plan.clone().with_method(Method::Quadrature);
    let run = solve_picard(&quad_plan, profile, &cfg)?;
    let handoff = Handoff { t0, picard_horizon: base.horizon, k, sweeps: run.history.len(), ball_norm: run.ball_norm };
    Ok((run.final_slice().clone(), handoff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisKind, GridSpec, Sign};

    fn periodic_plan(alpha: f64, sign: Sign) -> KernelPlan {
        let spec = SectorSpec::new(1, 0, 0.5, alpha, sign).unwrap();
        let grid = GridSpec::with_symmetric_kind(&spec, 2.0, 16, AxisKind::Periodic).unwrap();
        KernelPlan::new(spec, grid, Method::Spectral).unwrap()
    }

    fn constant(plan: &KernelPlan, c: f64) -> Field {
        Field::from_fn(*plan.spec(), plan.grid().clone(), |_| c).unwrap()
    }

    #[test]
    fn scalar_substep_examples() {
        let plan = periodic_plan(1.0, Sign::Plus);
        let one = constant(&plan, 1.0);
        let two = nonlinear_substep(&one, 0.5, 1.0, 1.0).unwrap().unwrap();
        assert!(two.as_slice().iter().all(|v| (v - 2.0).abs() < 1e-15));
        let sig = nonlinear_substep(&one, 1.0, 1.0, 1.0).unwrap().unwrap_err();
        assert_eq!(sig.remainder, 1.0);
        let neg = constant(&plan, -3.0);
        let damped = nonlinear_substep(&neg, 10.0, -1.0, 1.5).unwrap().unwrap();
        assert!(damped.as_slice().iter().all(|&v| v < 0.0 && v > -3.0));
        assert!(nonlinear_substep(&one, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn constant_data_blow_up_at_one() {
        let plan = periodic_plan(1.0, Sign::Plus);
        let rec = evolve_from(&plan, constant(&plan, 1.0), 0.0, &EvolveControls::default()).unwrap();
        assert_eq!(rec.status, Status::BlewUp);
        assert!((rec.t_max.unwrap() - 1.0).abs() < 1e-9, "{:?}", rec.t_max);
        let fit = rec.fit.unwrap();
        assert!(fit.rate_passed && fit.residual < 1e-6);
    }

    #[test]
    fn constant_trajectory_matches_scalar_ode() {
        let plan = periodic_plan(2.0, Sign::Plus);
        let controls = EvolveControls { fixed_dt: Some(0.01), horizon: 0.1, ..Default::default() };
        let rec = evolve_from(&plan, constant(&plan, 1.0), 0.0, &controls).unwrap();
        assert_eq!(rec.status, Status::GlobalHorizonReached);
        // u = (1 - 2t)^{-1/2}
        for (t, s) in rec.times.iter().zip(&rec.sups) {
            assert!((s - (1.0 - 2.0 * t).powf(-0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_reduces_to_heat_flow() {
        let spec = SectorSpec::new(1, 1, 0.5, 1.0, Sign::Plus).unwrap();
        let grid = GridSpec::for_sector(&spec, 4.0, 64).unwrap();
        let plan = KernelPlan::new(spec, grid.clone(), Method::Spectral).unwrap();
        let zero = Field::zeros(spec, grid).unwrap();
        let out = strang_step(&plan, &zero, 0.1).unwrap().unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn strang_step_is_second_order() {
        // alpha = 2 keeps |u|^alpha u smooth across the wall
        let spec = SectorSpec::new(1, 1, 0.5, 2.0, Sign::Plus).unwrap();
        let grid = GridSpec::for_sector(&spec, 6.0, 128).unwrap();
        let plan = KernelPlan::new(spec, grid.clone(), Method::Spectral).unwrap();
        let f = Field::from_fn(spec, grid, |x| 2.0 * x[0] * (-x[0] * x[0]).exp()).unwrap();
        let local = |dt: f64| {
            let one = strang_step(&plan, &f, dt).unwrap().unwrap();
            let half = strang_step(&plan, &f, 0.5 * dt).unwrap().unwrap();
            let two = strang_step(&plan, &half, 0.5 * dt).unwrap().unwrap();
            one.sub(&two).unwrap().sup_norm()
        };
        let (e1, e2) = (local(0.004), local(0.002));
        let slope = (e1 / e2).log2();
        assert!((slope - 3.0).abs() < 0.3, "slope {slope}");
    }

    #[test]
    fn absorption_is_global() {
        let spec = SectorSpec::new(1, 1, 0.5, 1.0, Sign::Minus).unwrap();
        let grid = GridSpec::for_sector(&spec, 8.0, 100).unwrap();
        let plan = KernelPlan::new(spec, grid.clone(), Method::Quadrature).unwrap();
        let u0 = Field::from_fn(spec, grid, |x| 5.0 * x[0] * (-x[0] * x[0]).exp()).unwrap();
        let controls = EvolveControls { horizon: 2.0, ..Default::default() }.with_snapshots(vec![1.0, 2.0]);
        let rec = evolve_from(&plan, u0.clone(), 0.0, &controls).unwrap();
        assert_eq!(rec.status, Status::GlobalHorizonReached);
        assert_eq!(rec.snapshots.len(), 2);
        for snap in &rec.snapshots {
            let lin = plan.apply(snap.time().unwrap(), &u0).unwrap();
            assert!(snap.abs().unwrap().max_excess_over(&lin).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn record_round_trips_to_disk() {
        let plan = periodic_plan(1.0, Sign::Plus);
        let rec = evolve_from(&plan, constant(&plan, 0.5), 0.0, &EvolveControls::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        rec.write_csv(&dir.path().join("t.csv")).unwrap();
        rec.write_json(&dir.path().join("t.json")).unwrap();
        let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(text.lines().last().unwrap().ends_with("blew_up"));
        assert!((rec.t_max.unwrap() - 2.0).abs() < 1e-9);
    }
}
