//! End-to-end acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; the process fails if any does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use sectorheat::evolve::{estimate_tmax, evolve_from, EvolveControls, Status};
use sectorheat::lifespan::{
    blowup_criterion_check, dilation_limits, global_smallness_check, matched_subsequence, sweep_lifespan, Annulus,
    DilationProbe, LifespanCurve, Strategy, Verdict,
};
use sectorheat::picard::{lipschitz_check, solve_picard, PicardConfig, PicardRun};
use sectorheat::profiles::{CustomProfile, ProfileKind};
use sectorheat::semigroup::{CacheParams, KernelPlan, Method, PsiCache};
use sectorheat::{AxisKind, Field, GridSpec, Modulation, SectorSpec, Sign, SingularProfile};

type Outcome = Result<(bool, String), String>;

fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache")
}

fn spec(dim: usize, m: usize, gamma: f64, alpha: f64, sign: Sign) -> SectorSpec {
    SectorSpec::new(dim, m, gamma, alpha, sign).unwrap()
}

fn cache(s: &SectorSpec) -> Arc<PsiCache> {
    PsiCache::load_or_build(&cache_dir(), s, CacheParams::default()).unwrap()
}

fn plan_with(s: SectorSpec, grid: GridSpec, method: Method) -> KernelPlan {
    KernelPlan::new(s, grid, method).unwrap().with_cache(cache(&s)).unwrap()
}

fn plan(s: SectorSpec, l: f64, n: usize, method: Method) -> KernelPlan {
    plan_with(s, GridSpec::for_sector(&s, l, n).unwrap(), method)
}

fn rel_diff(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().sup_norm() / b.sup_norm()
}

/// `t^{(gamma+m)/2} ||Psi(t)||_∞` over `t in {1/4, 1, 4}`: `Psi(1/4)` is
/// sampled on the grid and pushed to `t = 1` and `t = 4` by the grid kernel,
/// so the law is measured on the discrete semigroup.
fn sup_law_deviation(p: &KernelPlan) -> (f64, Vec<f64>) {
    let h = p.spec().homogeneity();
    let quarter = p.psi(0.25).unwrap().without_profile();
    let one = p.apply_grid_kernel(0.75, &quarter).unwrap();
    let four = p.apply_grid_kernel(3.0, &one).unwrap();
    let vals: Vec<f64> = [(0.25, &quarter), (1.0, &one), (4.0, &four)]
        .iter()
        .map(|(t, f)| f.sup_norm() * f64::powf(*t, 0.5 * h))
        .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let dev = vals.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    (dev, vals)
}

fn sup_law(refine: bool) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (dim, m, gamma) in [(1, 1, 0.5), (2, 1, 1.0), (2, 0, 1.0)] {
        let s = spec(dim, m, gamma, 0.5, Sign::Plus);
        let (l, n) = if refine { (24.0, 512) } else { (16.0, 256) };
        let p = plan(s, l, n, Method::Quadrature);
        let (dev, vals) = sup_law_deviation(&p);
        // the pointwise quadrature of psi_0 is an independent reading of the level
        let (_, direct) = p.psi_sup_by_quadrature(1.0).unwrap();
        let level = (vals[1] / direct - 1.0).abs();
        ok &= dev < 5e-3;
        parts.push(format!("({dim},{m},{gamma}) dev {dev:.2e}, level {:.6} vs quadrature {direct:.6} ({level:.1e})", vals[1]));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_1() -> Outcome {
    sup_law(false)
}

fn criterion_2() -> Outcome {
    let s = spec(2, 1, 1.0, 0.5, Sign::Plus);
    let grid = GridSpec::for_sector(&s, 6.0, 96).unwrap();
    let f = Field::from_fn(s, grid.clone(), |x| x[0] * (-(x[0] - 0.8).powi(2) - (x[0] + 0.8).powi(2) - x[1] * x[1]).exp())
        .unwrap();
    let q = KernelPlan::new(s, grid.clone(), Method::Quadrature).unwrap();
    let sp = KernelPlan::new(s, grid, Method::Spectral).unwrap();
    let cross = rel_diff(&q.apply_kernel(0.4, &f).unwrap(), &sp.apply_spectral(0.4, &f).unwrap());
    let (t1, t2) = (0.15, 0.3);
    let comp_s = rel_diff(
        &sp.apply_spectral(t2, &sp.apply_spectral(t1, &f).unwrap()).unwrap(),
        &sp.apply_spectral(t1 + t2, &f).unwrap(),
    );
    let comp_q = rel_diff(
        &q.apply_kernel(t2, &q.apply_kernel(t1, &f).unwrap()).unwrap(),
        &q.apply_kernel(t1 + t2, &f).unwrap(),
    );
    let ok = cross < 1e-3 && comp_s < 1e-6 && comp_q < 1e-3;
    Ok((ok, format!("cross-method {cross:.2e}, composition spectral {comp_s:.2e}, quadrature {comp_q:.2e}")))
}

fn criterion_3() -> Outcome {
    let s = spec(1, 1, 0.5, 0.5, Sign::Plus);
    let p = plan(s, 10.0, 400, Method::Quadrature);
    let c = p.cache().unwrap().clone();
    let cfg = PicardConfig::admissible(&s, &c, 1.0).map_err(|e| e.to_string())?;
    let run = solve_picard(&p, &SingularProfile::psi0(s, 1.0), &cfg).map_err(|e| e.to_string())?;
    let other = solve_picard(&p, &SingularProfile::psi0(s, 0.5), &cfg).map_err(|e| e.to_string())?;
    let lip = lipschitz_check(&p, &run, &other).map_err(|e| e.to_string())?;
    let contraction_ok = run.max_ratio <= 1.05 * run.contraction_bound;
    let ball_ok = run.ball_norm <= cfg.radius;
    let lip_ok = lip.ratio <= 1.05 * lip.bound;
    Ok((
        contraction_ok && ball_ok && lip_ok,
        format!(
            "K=1 M={} T={:.4e}: {} sweeps, ratio {:.4} <= {:.4}, |||u||| {:.4} <= {}, Lipschitz {:.4} <= C {:.4}",
            cfg.radius,
            cfg.horizon,
            run.history.len(),
            run.max_ratio,
            1.05 * run.contraction_bound,
            run.ball_norm,
            cfg.radius,
            lip.ratio,
            1.05 * lip.bound
        ),
    ))
}

fn ode_oracle(l: f64, n: usize) -> Outcome {
    let s = spec(1, 0, 0.5, 1.0, Sign::Plus);
    let grid = GridSpec::with_symmetric_kind(&s, l, n, AxisKind::Periodic).unwrap();
    let p = plan_with(s, grid, Method::Spectral);
    let rec = estimate_tmax(&p, &SingularProfile::constant(s, 1.0), &EvolveControls::default()).map_err(|e| e.to_string())?;
    let t = rec.t_max.ok_or("no blow-up time")?;
    let err = (t - 1.0).abs();
    Ok((rec.status == Status::BlewUp && err < 1e-3, format!("T_max = {t:.9} (error {err:.2e}), L={l} n={n}")))
}

fn criterion_4() -> Outcome {
    ode_oracle(4.0, 32)
}

fn scaling_law(l: f64, n: usize) -> Result<(bool, String, f64), String> {
    let s = spec(1, 1, 0.5, 0.5, Sign::Plus);
    let p = plan(s, l, n, Method::Spectral);
    let curve = sweep_lifespan(&p, &SingularProfile::psi0(s, 1.0), &[0.5, 1.0, 2.0], &EvolveControls::default(), Strategy::Direct)
        .map_err(|e| e.to_string())?;
    let base = curve.points[1].t_max.ok_or("T_max(psi0) missing")?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for pt in [&curve.points[0], &curve.points[2]] {
        let scaled = pt.scaled.ok_or("scaled value missing")?;
        let dev = (scaled / base - 1.0).abs();
        worst = worst.max(dev);
        parts.push(format!("lambda {}: {scaled:.6}", pt.lambda));
    }
    Ok((
        worst < 0.02,
        format!("T_max(psi0) = {base:.6}, {}, worst deviation {worst:.2e} (L={l} n={n})", parts.join(", ")),
        base,
    ))
}

fn criterion_5() -> Outcome {
    scaling_law(24.0, 1200).map(|(ok, msg, _)| (ok, msg))
}

fn criterion_6() -> Outcome {
    let s = spec(1, 1, 0.5, 0.5, Sign::Plus);
    let c = cache(&s);
    let t_star = c.apriori_blowup_bound(&s).map_err(|e| e.to_string())?;
    let h = s.homogeneity();
    let identity = (c.c_inf() * t_star.powf(-0.5 * h) / (s.alpha * t_star).powf(-1.0 / s.alpha) - 1.0).abs();
    let p = plan(s, 24.0, 1200, Method::Spectral);
    let rec = estimate_tmax(&p, &SingularProfile::psi0(s, 1.0), &EvolveControls::default()).map_err(|e| e.to_string())?;
    let t = rec.t_max.ok_or("no blow-up time")?;
    let u = rec.uncertainty.unwrap_or(0.0);
    Ok((
        t + u <= t_star && identity < 1e-12,
        format!("T_max = {t:.6} +/- {u:.1e} <= t* = {t_star:.6} (defining identity residual {identity:.1e})"),
    ))
}

fn abs_profile(p: &SingularProfile) -> SingularProfile {
    let inner = p.clone();
    SingularProfile::custom(
        *p.spec(),
        CustomProfile {
            name: "abs".into(),
            eval: Arc::new(move |x: &[f64]| inner.eval_unchecked(x).abs()),
            tail_degree: p.spec().homogeneity(),
            bounded: p.bounded(),
        },
        1.0,
    )
}

fn slack(scale: f64) -> f64 {
    1e-8 * scale.max(1.0)
}

fn sup_over(run: &PicardRun) -> f64 {
    run.slices.iter().map(Field::sup_norm).fold(0.0, f64::max)
}

/// Positivity, comparison and `|u| <= v(|psi|)` on the fixed-point solution
/// (the Duhamel map is monotone for `a = +1`).
fn order_case(s: SectorSpec, l: f64, n: usize) -> Result<(bool, String), String> {
    let p = plan(s, l, n, Method::Quadrature);
    let c = p.cache().unwrap().clone();
    let cfg = PicardConfig::admissible(&s, &c, 1.0).map_err(|e| e.to_string())?.with_mesh_len(12);
    let solve = |f: &SingularProfile| solve_picard(&p, f, &cfg).map_err(|e| e.to_string());
    let full = solve(&SingularProfile::psi0(s, 1.0))?;
    let half = solve(&SingularProfile::psi0(s, 0.5))?;
    let scale = sup_over(&full);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut notes = Vec::new();

    let min = full.min_value().min(half.min_value());
    worst = worst.max(-min - slack(scale));
    notes.push(format!("min u {min:.1e}"));
    let cmp = half.max_excess_over(&full).map_err(|e| e.to_string())?;
    worst = worst.max(cmp - slack(scale));
    notes.push(format!("u(psi/2)-u(psi) <= {cmp:.1e}"));

    let psi = SingularProfile::modulated(s, Modulation::Cosine { shift: 0.0 }, 1.0);
    let abs = abs_profile(&psi);
    let u = solve(&psi)?;
    let v = solve(&abs)?;
    let mut dom: f64 = f64::NEG_INFINITY;
    for (a, b) in u.slices.iter().zip(&v.slices) {
        dom = dom.max(a.abs().unwrap().max_excess_over(b).unwrap());
    }
    worst = worst.max(dom - slack(scale));
    notes.push(format!("|u|-v(|psi|) <= {dom:.1e}"));

    Ok((worst <= 0.0, notes.join(", ")))
}

/// The same properties for absorption on splitting trajectories. The
/// splitting step (exact ODE substeps around a nonnegative heat kernel) is
/// order preserving, while the discrete Duhamel map is not when `a = -1`;
/// bounded cored data and a shared fixed step keep the runs comparable.
fn absorbing_case(s: SectorSpec, l: f64, n: usize) -> Result<(bool, String), String> {
    let p = plan(s, l, n, Method::Quadrature);
    let grid = p.grid().clone();
    let dt = 0.005;
    let snaps: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let controls = EvolveControls {
        horizon: 0.5,
        fixed_dt: Some(dt),
        growth_fraction: 1e300,
        method: Method::Quadrature,
        snapshot_times: snaps.clone(),
        ..EvolveControls::default()
    };
    let cored = |g: Modulation, amp: f64| {
        SingularProfile::new(s, ProfileKind::ModulatedPsi0 { modulation: g, core_radius: Some(0.5) }, amp).unwrap()
    };
    let sample = |f: &SingularProfile| Field::sample(s, grid.clone(), Arc::new(f.clone())).unwrap();
    let run = |f: &SingularProfile| -> Result<Vec<Field>, String> {
        let rec = evolve_from(&p, sample(f), 0.0, &controls).map_err(|e| e.to_string())?;
        if rec.snapshots.len() != snaps.len() {
            return Err(format!("{} snapshots instead of {}", rec.snapshots.len(), snaps.len()));
        }
        Ok(rec.snapshots)
    };
    let full = run(&cored(Modulation::One, 1.0))?;
    let half = run(&cored(Modulation::One, 0.5))?;
    let psi = cored(Modulation::Cosine { shift: 0.0 }, 1.0);
    let abs = abs_profile(&psi);
    let u = run(&psi)?;
    let v = run(&abs)?;
    let scale = full.iter().map(Field::sup_norm).fold(0.0, f64::max);
    let (mut min, mut cmp, mut dom, mut kato) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    // the scheme's own linear flow: the same kernel step, repeated
    let mut lin = sample(&abs);
    let steps_per_snap = (0.05 / dt).round() as usize;
    for k in 0..snaps.len() {
        for _ in 0..steps_per_snap {
            lin = p.apply_grid_kernel(dt, &lin).unwrap();
        }
        min = min.min(full[k].min()).min(half[k].min());
        cmp = cmp.max(half[k].max_excess_over(&full[k]).unwrap());
        let au = u[k].abs().unwrap();
        dom = dom.max(au.max_excess_over(&v[k]).unwrap());
        kato = kato.max(au.max_excess_over(&lin).unwrap());
    }
    let sl = slack(scale);
    let ok = min >= -sl && cmp <= sl && dom <= sl && kato <= sl;
    Ok((ok, format!("min u {min:.1e}, u(psi/2)-u(psi) <= {cmp:.1e}, |u|-v(|psi|) <= {dom:.1e}, Kato excess {kato:.1e}")))
}

fn criterion_7() -> Outcome {
    let cases = [
        (spec(1, 1, 0.5, 0.5, Sign::Plus), 8.0, 200),
        (spec(1, 1, 0.5, 0.5, Sign::Minus), 8.0, 200),
        (spec(1, 0, 0.5, 1.0, Sign::Plus), 8.0, 200),
        (spec(2, 1, 1.0, 0.5, Sign::Plus), 6.0, 32),
        (spec(2, 1, 1.0, 0.5, Sign::Minus), 6.0, 32),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, l, n) in cases {
        let (pass, note) = if s.sign_a == Sign::Minus { absorbing_case(s, l, n)? } else { order_case(s, l, n)? };
        ok &= pass;
        parts.push(format!("({},{},{},{},{:+}) {}", s.dim, s.m, s.gamma, s.alpha, s.sign_a.value(), note));
    }
    Ok((ok, parts.join(" | ")))
}

fn subsequence_gap(p: &KernelPlan, modulation: Modulation, controls: &EvolveControls) -> Result<(f64, f64, f64, f64), String> {
    let s = *p.spec();
    let profile = SingularProfile::modulated(s, modulation, 1.0);
    let period = std::f64::consts::PI;
    let mean = |c: &LifespanCurve| -> Result<(f64, f64), String> {
        let vals: Vec<(f64, f64)> = c
            .points
            .iter()
            .map(|pt| match (pt.status, pt.scaled, pt.scaled_uncertainty) {
                (Status::BlewUp, Some(v), Some(u)) => Ok((v, u)),
                _ => Err(format!("lambda {} did not blow up ({})", pt.lambda, pt.status.as_str())),
            })
            .collect::<Result<_, _>>()?;
        let m = vals.iter().map(|v| v.0).sum::<f64>() / vals.len() as f64;
        let spread = vals.iter().map(|v| (v.0 - m).abs()).fold(0.0, f64::max);
        let unc = vals.iter().map(|v| v.1).fold(0.0, f64::max);
        Ok((m, spread.max(unc)))
    };
    let first = matched_subsequence(&s, period, &[1, 2], 0.0).map_err(|e| e.to_string())?;
    let second = matched_subsequence(&s, period, &[1, 2], 0.5 * period).map_err(|e| e.to_string())?;
    let a = sweep_lifespan(p, &profile, &first, controls, Strategy::Rescaled).map_err(|e| e.to_string())?;
    let b = sweep_lifespan(p, &profile, &second, controls, Strategy::Rescaled).map_err(|e| e.to_string())?;
    let (ma, ua) = mean(&a)?;
    let (mb, ub) = mean(&b)?;
    Ok((ma, mb, (ma - mb).abs(), ua + ub))
}

fn criterion_8() -> Outcome {
    // m = 0, gamma = 1/4, alpha = 1: subcritical, so sigma is finite
    let s = spec(1, 0, 0.25, 1.0, Sign::Plus);
    let fine = plan(s, 24.0, 1200, Method::Spectral);
    let coarse = plan(s, 24.0, 600, Method::Spectral);
    let controls = EvolveControls::default();
    let measure = |g: Modulation| -> Result<(f64, f64, f64, f64), String> {
        let (a, b, gap, unc) = subsequence_gap(&fine, g.clone(), &controls)?;
        let (ca, cb, _, _) = subsequence_gap(&coarse, g, &controls)?;
        // resolution error estimated from the coarse grid
        Ok((a, b, gap, unc + (a - ca).abs() + (b - cb).abs()))
    };
    let (a, b, gap, unc) = measure(Modulation::Sin2 { eps: 0.1, shift: 0.0 })?;
    let (ca, cb, cgap, cunc) = measure(Modulation::One)?;
    let ok = gap > 5.0 * unc && cgap <= 5.0 * cunc;
    Ok((
        ok,
        format!(
            "sin^2+0.1: limits {a:.6} vs {b:.6}, gap {gap:.3e} vs 5x uncertainty {:.3e}; g=1: {ca:.6} vs {cb:.6}, gap {cgap:.1e} vs {:.1e}",
            5.0 * unc,
            5.0 * cunc
        ),
    ))
}

fn criterion_9() -> Outcome {
    // subcritical modulated profile whose dilations converge to psi_0
    let s = spec(1, 0, 0.5, 1.0, Sign::Plus);
    let p = plan(s, 24.0, 1200, Method::Spectral);
    let profile = SingularProfile::modulated(s, Modulation::LogBump { height: 1.0, width: 1.0, shift: 0.0 }, 1.0);
    let lambdas = [1e1, 1e2, 1e3, 1e4];
    let probe = dilation_limits(&profile, &lambdas, &Annulus::new(0.5, 2.0, 32).unwrap()).map_err(|e| e.to_string())?;
    let z = DilationProbe::field_for(&p, &profile, *lambdas.last().unwrap()).map_err(|e| e.to_string())?;
    let report = blowup_criterion_check(&p, &z, 1e-6).map_err(|e| e.to_string())?;
    let rec = estimate_tmax(&p, &profile, &EvolveControls::default()).map_err(|e| e.to_string())?;
    let first_ok = report.verdict == Verdict::BlowupPredicted && rec.status == Status::BlewUp && rec.t_max.is_some();

    // small compactly supported data above the Fujita exponent
    let s2 = spec(1, 0, 0.5, 3.0, Sign::Plus);
    let p2 = plan(s2, 40.0, 400, Method::Spectral);
    let bump = SingularProfile::new(s2, ProfileKind::Bump { radius: 1.0, center: None }, 0.1).map_err(|e| e.to_string())?;
    let z2 = DilationProbe::field_for(&p2, &bump, 1e4).map_err(|e| e.to_string())?;
    let report2 = blowup_criterion_check(&p2, &z2, 1e-6).map_err(|e| e.to_string())?;
    let u0 = Field::sample(s2, p2.grid().clone(), Arc::new(bump.clone())).map_err(|e| e.to_string())?;
    let rec2 = evolve_from(&p2, u0.clone(), 0.0, &EvolveControls::default().with_horizon(100.0)).map_err(|e| e.to_string())?;
    let bounded = rec2.sups.iter().cloned().fold(0.0, f64::max) <= u0.sup_norm() * (1.0 + 1e-12);
    let second_ok = report2.verdict == Verdict::Undetermined && rec2.status == Status::GlobalHorizonReached && bounded;
    Ok((
        first_ok && second_ok,
        format!(
            "log-bump: dilation distances {:?}, verdict {:?} ({}), T_max {:?}; bump: verdict {:?} ({}), {} to t={} with sup {:.3e} -> {:.3e}",
            probe.consecutive_distances.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>(),
            report.verdict,
            report.regime,
            rec.t_max,
            report2.verdict,
            report2.regime,
            rec2.status.as_str(),
            rec2.last_time(),
            u0.sup_norm(),
            rec2.last_sup()
        ),
    ))
}

fn criterion_10() -> Outcome {
    let s = spec(1, 1, 0.5, 2.0, Sign::Plus);
    let p = plan(s, 60.0, 600, Method::Spectral);
    let rep = global_smallness_check(&p, 1.0, None, 100.0, 25, &EvolveControls::default()).map_err(|e| e.to_string())?;
    let ok = rep.status == Status::GlobalHorizonReached && rep.first_violation.is_none() && rep.max_ratio <= 1.0;
    Ok((
        ok,
        format!(
            "lambda {:.4e} (threshold {:.4e}), {} to t={}, max |u|/(M Psi(t+t0)) = {:.4} over {} times",
            rep.lambda,
            rep.lambda_threshold,
            rep.status.as_str(),
            rep.horizon,
            rep.max_ratio,
            rep.checked_times
        ),
    ))
}

fn criterion_11() -> Outcome {
    let (ok1, m1) = sup_law(true)?;
    let (ok4, m4) = ode_oracle(6.0, 64)?;
    let (ok5, m5, base) = scaling_law(36.0, 2400)?;
    let (_, _, base0) = scaling_law(24.0, 1200)?;
    let drift = (base / base0 - 1.0).abs();
    Ok((
        ok1 && ok4 && ok5 && drift < 0.02,
        format!("[1] {m1} | [4] {m4} | [5] {m5}, T_max drift against the base grid {drift:.1e}"),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("semigroup sup-norm law", criterion_1),
        ("cross-method agreement and composition", criterion_2),
        ("Picard certification", criterion_3),
        ("exact ODE blow-up oracle", criterion_4),
        ("T_max scaling law", criterion_5),
        ("a-priori upper bound", criterion_6),
        ("order properties", criterion_7),
        ("oscillating life span", criterion_8),
        ("blow-up criterion end to end", criterion_9),
        ("global smallness", criterion_10),
        ("robustness under refinement", criterion_11),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        let (passed, detail) = match outcome {
            Ok((p, d)) => (p, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
