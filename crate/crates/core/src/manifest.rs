//! Declarative experiment runner.
//!
//! A [`RunManifest`] is a TOML document naming one experiment together with
//! the sector, grid, initial data, lambda grid, horizons and tolerances it
//! needs. Every field except `experiment` has a default, so
//!
//! ```toml
//! experiment = "semigroup_checks"
//! ```
//!
//! is a complete manifest. [`run`] writes its artifacts (CSV tables and a
//! JSON summary) to `output_dir` and returns a [`RunSummary`] whose
//! [`exit_code`](RunSummary::exit_code) separates passing runs, failed
//! numerical gates and inconclusive outcomes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::{estimate_tmax, EvolveControls, Status, TrajectoryRecord};
use crate::geometry::{AxisKind, Field, GridSpec, SectorSpec, Sign};
use crate::lifespan::{
    blowup_criterion_check, dilation_limits, global_smallness_check, sweep_lifespan, two_limit_experiment, Annulus,
    DilationProbe, Strategy, TwoLimitConfig, Verdict,
};
use crate::picard::{lipschitz_check, solve_picard, PicardConfig};
use crate::profiles::{ProfileDescriptor, ProfileKind, SingularProfile};
use crate::semigroup::{CacheParams, KernelPlan, Method, PsiCache};

/// Successful run, all gates passed.
pub const EXIT_OK: u8 = 0;
/// Unreadable or invalid manifest, or parameters outside an experiment's range.
pub const EXIT_CONFIG: u8 = 2;
/// A numerical gate failed.
pub const EXIT_GATE: u8 = 3;
/// The run finished but the scientific outcome could not be decided.
pub const EXIT_INCONCLUSIVE: u8 = 4;
/// I/O failure or corrupt artifact.
pub const EXIT_IO: u8 = 1;

/// Exit code for an error raised before or during a run.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidSpec(_)
        | Error::InvalidGrid(_)
        | Error::Config(_)
        | Error::UnsupportedProfile(_)
        | Error::Supercritical { .. }
        | Error::SignChanging { .. }
        | Error::NonPositiveTime(_)
        | Error::NonPositiveDilation(_)
        | Error::OutsideSector { .. } => EXIT_CONFIG,
        Error::Io(_) | Error::Json(_) | Error::Artifact { .. } | Error::Checksum(_) => EXIT_IO,
        _ => EXIT_GATE,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Identity gates of the linear flow: sup-norm law, cross-method
    /// agreement, composition, positivity and kernel symmetry.
    SemigroupChecks,
    /// Fixed-point construction in the weighted ball.
    Picard,
    /// Blow-up time of the profile.
    Tmax,
    /// Blow-up times of `lam f` over the lambda grid.
    Sweep,
    /// Normalised dilations `lam^{gamma+m} f(lam x)` on an annulus.
    Dilation,
    /// Blow-up criterion applied to a dilation limit, checked against a run.
    Criteria,
    /// Two matched subsequences of an alternating profile.
    TwoLimit,
    /// Small data above the critical power against `M Psi(t + t0)`.
    GlobalSmallness,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::SemigroupChecks => "semigroup_checks",
            Experiment::Picard => "picard",
            Experiment::Tmax => "tmax",
            Experiment::Sweep => "sweep",
            Experiment::Dilation => "dilation",
            Experiment::Criteria => "criteria",
            Experiment::TwoLimit => "two_limit",
            Experiment::GlobalSmallness => "global_smallness",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub half_width: f64,
    /// Nodes per axis.
    pub n: usize,
    /// Kind of the axes without anti-symmetry.
    pub symmetric: AxisKind,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { half_width: 12.0, n: 256, symmetric: AxisKind::Dirichlet }
    }
}

impl GridConfig {
    pub fn build(&self, spec: &SectorSpec) -> Result<GridSpec> {
        GridSpec::with_symmetric_kind(spec, self.half_width, self.n, self.symmetric)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Horizons {
    /// Picard horizon; the admissible one when absent.
    pub picard: Option<f64>,
    /// Global smallness runs to `smallness_factor * t0`.
    pub smallness_factor: f64,
}

impl Default for Horizons {
    fn default() -> Self {
        Horizons { picard: None, smallness_factor: 100.0 }
    }
}

/// Gate tolerances. All must be positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative deviation of `t^{(gamma+m)/2} ||Psi(t)||` from `C_∞`.
    pub sup_law: f64,
    /// Quadrature against spectral flow on smooth data.
    pub cross_method: f64,
    pub composition_spectral: f64,
    pub composition_quadrature: f64,
    /// Absolute slack for sign and order checks.
    pub positivity: f64,
    /// Spread of the scaled life spans in a sweep.
    pub scaling: f64,
    /// Relative slack on the contraction and Lipschitz bounds.
    pub contraction_slack: f64,
    /// Absolute error of the blow-up time for constant data.
    pub ode: f64,
    /// L1 level below which a dilation limit counts as zero.
    pub criterion: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sup_law: 5e-3,
            cross_method: 1e-3,
            composition_spectral: 1e-6,
            composition_quadrature: 1e-3,
            positivity: 1e-8,
            scaling: 0.02,
            contraction_slack: 0.05,
            ode: 1e-3,
            criterion: 1e-6,
        }
    }
}

impl Tolerances {
    fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("sup_law", self.sup_law),
            ("cross_method", self.cross_method),
            ("composition_spectral", self.composition_spectral),
            ("composition_quadrature", self.composition_quadrature),
            ("positivity", self.positivity),
            ("scaling", self.scaling),
            ("contraction_slack", self.contraction_slack),
            ("ode", self.ode),
            ("criterion", self.criterion),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmallnessConfig {
    pub t0: f64,
    /// Data amplitude; half the smallness threshold when absent.
    pub lambda: Option<f64>,
    /// Number of comparison times.
    pub checks: usize,
}

impl Default for SmallnessConfig {
    fn default() -> Self {
        SmallnessConfig { t0: 1.0, lambda: None, checks: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CacheConfig {
    pub du: f64,
    pub r_max: f64,
}

impl Default for CacheConfig {
    fn default() -> Self {
        let p = CacheParams::default();
        CacheConfig { du: p.du, r_max: p.r_max }
    }
}

impl CacheConfig {
    pub fn params(&self) -> CacheParams {
        CacheParams { du: self.du, r_max: self.r_max }
    }
}

/// One experiment, fully specified.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub experiment: Experiment,
    #[serde(default = "default_sector")]
    pub sector: SectorSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_profile")]
    pub profile: ProfileDescriptor,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub horizons: Horizons,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub controls: EvolveControls,
    #[serde(default = "default_annulus")]
    pub annulus: Annulus,
    #[serde(default)]
    pub two_limit: TwoLimitConfig,
    #[serde(default)]
    pub smallness: SmallnessConfig,
    #[serde(default)]
    pub cache: CacheConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Seed for randomised node sampling.
    #[serde(default)]
    pub seed: u64,
}

fn default_sector() -> SectorSpec {
    SectorSpec { dim: 1, m: 1, gamma: 0.5, alpha: 0.5, sign_a: Sign::Plus }
}

fn default_method() -> Method {
    Method::Spectral
}

fn default_profile() -> ProfileDescriptor {
    ProfileDescriptor { kind: ProfileKind::Psi0, amplitude: 1.0 }
}

fn default_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_strategy() -> Strategy {
    Strategy::Direct
}

fn default_annulus() -> Annulus {
    Annulus { r_in: 0.5, r_out: 2.0, points_per_axis: 24 }
}

fn default_output() -> PathBuf {
    PathBuf::from("sectorheat-out")
}

impl RunManifest {
    /// A manifest with every field at its default.
    pub fn with_defaults(experiment: Experiment) -> Self {
        RunManifest {
            experiment,
            sector: default_sector(),
            grid: GridConfig::default(),
            method: default_method(),
            profile: default_profile(),
            lambdas: default_lambdas(),
            strategy: default_strategy(),
            horizons: Horizons::default(),
            tolerances: Tolerances::default(),
            controls: EvolveControls::default(),
            annulus: default_annulus(),
            two_limit: TwoLimitConfig::default(),
            smallness: SmallnessConfig::default(),
            cache: CacheConfig::default(),
            output_dir: default_output(),
            seed: 0,
        }
    }

    /// Parse and validate. Parse errors carry the line, column and field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: RunManifest = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise manifest: {e}")))
    }

    /// Checks that need no file system access.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.tolerances.named() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config("lambdas must be a non-empty list of positive numbers".into()));
        }
        if !(self.profile.amplitude.is_finite()) {
            return Err(Error::Config("profile.amplitude must be finite".into()));
        }
        if let Some(h) = self.horizons.picard {
            if !(h > 0.0) {
                return Err(Error::Config(format!("horizons.picard must be positive, got {h}")));
            }
        }
        if !(self.horizons.smallness_factor > 0.0) {
            return Err(Error::Config("horizons.smallness_factor must be positive".into()));
        }
        if !(self.smallness.t0 > 0.0) || self.smallness.checks == 0 {
            return Err(Error::Config("smallness needs t0 > 0 and at least one check".into()));
        }
        if let Some(l) = self.smallness.lambda {
            if !(l >= 0.0) {
                return Err(Error::Config(format!("smallness.lambda must be nonnegative, got {l}")));
            }
        }
        if !(self.cache.du > 0.0 && self.cache.r_max > 10.0) {
            return Err(Error::Config("cache needs du > 0 and r_max > 10".into()));
        }
        Annulus::new(self.annulus.r_in, self.annulus.r_out, self.annulus.points_per_axis)?;
        self.controls.validate()?;
        self.grid.build(&self.sector)?;
        SingularProfile::from_descriptor(self.sector, &self.profile)?;
        Ok(())
    }

    /// Create the output directory and confirm it accepts files.
    pub fn prepare_output(&self) -> Result<()> {
        let dir = &self.output_dir;
        fs::create_dir_all(dir)
            .and_then(|_| {
                let probe = dir.join(".write-probe");
                fs::write(&probe, b"")?;
                fs::remove_file(probe)
            })
            .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))
    }
}

/// One numerical gate of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Gate {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Gate {
        Gate { name: name.into(), value, limit, passed: value <= limit }
    }

    /// Passes when `value >= limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Gate {
        Gate { name: name.into(), value, limit, passed: value >= limit }
    }

    pub fn flag(name: &str, ok: bool) -> Gate {
        let v = if ok { 1.0 } else { 0.0 };
        Gate { name: name.into(), value: v, limit: 1.0, passed: ok }
    }
}

/// What a run found.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub parameters: String,
    /// Key numbers and verdicts, one per line.
    pub lines: Vec<String>,
    pub gates: Vec<Gate>,
    pub inconclusive: bool,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunSummary {
    fn new(m: &RunManifest) -> Self {
        let s = &m.sector;
        let parameters = format!(
            "N={} m={} gamma={} alpha={} a={:+} | grid L={} n={} {:?} | method {:?} | profile {} x {}",
            s.dim,
            s.m,
            s.gamma,
            s.alpha,
            s.sign_a.value(),
            m.grid.half_width,
            m.grid.n,
            m.grid.symmetric,
            m.method,
            m.profile.amplitude,
            describe_kind(&m.profile.kind),
        );
        RunSummary {
            experiment: m.experiment,
            parameters,
            lines: Vec::new(),
            gates: Vec::new(),
            inconclusive: false,
            artifacts: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn exit_code(&self) -> u8 {
        if !self.all_passed() {
            EXIT_GATE
        } else if self.inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment: {}", self.experiment.as_str())?;
        writeln!(f, "parameters: {}", self.parameters)?;
        for l in &self.lines {
            writeln!(f, "  {l}")?;
        }
        for g in &self.gates {
            let mark = if g.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  [{mark}] {}: {:.6e} (limit {:.3e})", g.name, g.value, g.limit)?;
        }
        let verdict = match self.exit_code() {
            EXIT_OK => "ok",
            EXIT_GATE => "gate failure",
            _ => "inconclusive",
        };
        write!(f, "outcome: {verdict}")
    }
}

fn describe_kind(kind: &ProfileKind) -> String {
    match kind {
        ProfileKind::Psi0 => "psi0".into(),
        ProfileKind::ModulatedPsi0 { modulation, core_radius } => match core_radius {
            Some(r) => format!("psi0 * {modulation:?} (core {r})"),
            None => format!("psi0 * {modulation:?}"),
        },
        ProfileKind::GaussianDerivative { t0 } => format!("gaussian derivative t0={t0}"),
        ProfileKind::Constant => "constant".into(),
        ProfileKind::Bump { radius, .. } => format!("bump R={radius}"),
        ProfileKind::Custom(_) => "custom".into(),
    }
}

/// Where the run finds its cache.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub cache_dir: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { cache_dir: PsiCache::default_dir() }
    }
}

/// Build the plan of a manifest, with its cache attached.
pub fn build_plan(m: &RunManifest, opts: &RunOptions) -> Result<KernelPlan> {
    let grid = m.grid.build(&m.sector)?;
    let cache = PsiCache::load_or_build(&opts.cache_dir, &m.sector, m.cache.params())?;
    KernelPlan::new(m.sector, grid, m.method)?.with_cache(cache)
}

/// Execute the manifest's experiment and write its artifacts.
pub fn run(m: &RunManifest, opts: &RunOptions) -> Result<RunSummary> {
    m.validate()?;
    m.prepare_output()?;
    let plan = build_plan(m, opts)?;
    let mut summary = RunSummary::new(m);
    match m.experiment {
        Experiment::SemigroupChecks => semigroup_checks(m, &plan, &mut summary)?,
        Experiment::Picard => picard(m, &plan, &mut summary)?,
        Experiment::Tmax => tmax(m, &plan, &mut summary)?,
        Experiment::Sweep => sweep(m, &plan, &mut summary)?,
        Experiment::Dilation => dilation(m, &plan, &mut summary)?,
        Experiment::Criteria => criteria(m, &plan, &mut summary)?,
        Experiment::TwoLimit => two_limit(m, &plan, &mut summary)?,
        Experiment::GlobalSmallness => global_smallness(m, &plan, &mut summary)?,
    }
    write_gates_csv(m, &mut summary)?;
    summary.artifacts.push("summary.json".into());
    fs::write(m.output_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn write_gates_csv(m: &RunManifest, summary: &mut RunSummary) -> Result<()> {
    let mut csv = String::from("gate,value,limit,passed\n");
    for g in &summary.gates {
        csv.push_str(&format!("{},{:e},{:e},{}\n", g.name, g.value, g.limit, g.passed));
    }
    fs::write(m.output_dir.join("gates.csv"), csv)?;
    summary.artifacts.push("gates.csv".into());
    Ok(())
}

fn write_json<T: Serialize>(m: &RunManifest, summary: &mut RunSummary, name: &str, value: &T) -> Result<()> {
    fs::write(m.output_dir.join(name), serde_json::to_string_pretty(value)?)?;
    summary.artifacts.push(name.into());
    Ok(())
}

fn write_text(m: &RunManifest, summary: &mut RunSummary, name: &str, text: &str) -> Result<()> {
    fs::write(m.output_dir.join(name), text)?;
    summary.artifacts.push(name.into());
    Ok(())
}

fn require_cache(plan: &KernelPlan) -> Result<&Arc<PsiCache>> {
    plan.cache().ok_or_else(|| Error::Config("this experiment needs a Psi cache".into()))
}

fn relative_sup_difference(a: &Field, b: &Field) -> Result<f64> {
    Ok(a.sub(b)?.sup_norm() / b.sup_norm().max(f64::MIN_POSITIVE))
}

fn semigroup_checks(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let spec = *plan.spec();
    let grid = plan.grid().clone();
    let tol = &m.tolerances;
    let cache = require_cache(plan)?;
    let h = spec.homogeneity();

    let c_inf = cache.c_inf();
    let mut law = String::from("t,scaled_sup\n");
    let mut worst: f64 = 0.0;
    for &t in &[0.25, 1.0, 4.0] {
        let v = plan.psi_sup_by_quadrature(t)?.1 * t.powf(0.5 * h);
        law.push_str(&format!("{t},{v:.12e}\n"));
        worst = worst.max((v / c_inf - 1.0).abs());
    }
    write_text(m, s, "sup_law.csv", &law)?;
    s.line(format!("C_inf = {c_inf:.8}, maximiser radius {:.6}", cache.r_star()));
    s.gates.push(Gate::at_most("sup_law", worst, tol.sup_law));

    // smooth data whose odd extension is smooth
    let smooth = Field::from_fn(spec, grid.clone(), |x| {
        let odd: f64 = x[..spec.m].iter().product();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        odd * (-r2).exp()
    })?;
    let quad = plan.clone().with_method(Method::Quadrature);
    let spectral = plan.clone().with_method(Method::Spectral);
    let t = 0.3;
    let a = quad.apply_kernel(t, &smooth)?;
    let b = spectral.apply_spectral(t, &smooth)?;
    s.gates.push(Gate::at_most("cross_method", relative_sup_difference(&a, &b)?, tol.cross_method));

    let (t1, t2) = (0.2, 0.35);
    let whole = spectral.apply_spectral(t1 + t2, &smooth)?;
    let split = spectral.apply_spectral(t2, &spectral.apply_spectral(t1, &smooth)?)?;
    s.gates.push(Gate::at_most(
        "composition_spectral",
        relative_sup_difference(&split, &whole)?,
        tol.composition_spectral,
    ));
    let whole_q = quad.apply_kernel(t1 + t2, &smooth)?;
    let split_q = quad.apply_kernel(t2, &quad.apply_kernel(t1, &smooth)?)?;
    s.gates.push(Gate::at_most(
        "composition_quadrature",
        relative_sup_difference(&split_q, &whole_q)?,
        tol.composition_quadrature,
    ));

    // seeded nonnegative data and sampled kernel pairs
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    let values: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
    let noise = Field::new(spec, grid.clone(), ndarray::ArrayD::from_shape_vec(grid.shape(), values).map_err(|e| Error::InvalidGrid(e.to_string()))?)?;
    let out = quad.apply_kernel(0.1, &noise)?;
    s.gates.push(Gate::at_least("positivity_min", out.min(), -tol.positivity));
    s.gates.push(Gate::at_most("sub_markov_max", out.max(), 1.0 + tol.positivity));
    let mut asym: f64 = 0.0;
    for _ in 0..64 {
        let i = rng.random_range(0..grid.len());
        let j = rng.random_range(0..grid.len());
        let (kij, kji) = (quad.kernel_entry(0.1, i, j), quad.kernel_entry(0.1, j, i));
        asym = asym.max((kij - kji).abs() / kij.abs().max(kji.abs()).max(f64::MIN_POSITIVE));
    }
    s.gates.push(Gate::at_most("kernel_symmetry", asym, 1e-10));
    Ok(())
}

fn picard(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let spec = *plan.spec();
    let cache = require_cache(plan)?;
    let profile = SingularProfile::from_descriptor(spec, &m.profile)?;
    let k = profile
        .x_norm_bound()
        .ok_or_else(|| Error::UnsupportedProfile("picard needs data with a known bound in X".into()))?;
    let mut config = PicardConfig::admissible(&spec, cache, k)?;
    if let Some(h) = m.horizons.picard {
        config = config.with_horizon(h)?;
    }
    let run = match solve_picard(plan, &profile, &config) {
        Ok(r) => r,
        Err(e @ (Error::NonContraction { .. } | Error::NoConvergence { .. })) => {
            s.line(format!("iteration failed: {e}"));
            s.gates.push(Gate::flag("converged", false));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    run.save(&m.output_dir)?;
    s.artifacts.extend(["picard.json", "picard_sweeps.csv", "picard_final.bin"].map(String::from));
    s.line(format!(
        "K = {k:.6}, M = {:.6}, T = {:.6e}, sweeps = {}",
        config.radius,
        config.horizon,
        run.history.len()
    ));
    s.gates.push(Gate::flag("converged", true));
    let slack = 1.0 + m.tolerances.contraction_slack;
    s.gates.push(Gate::at_most("contraction_ratio", run.max_ratio, slack * run.contraction_bound));
    s.gates.push(Gate::at_most("ball_norm", run.ball_norm, config.radius));
    let half = profile.scaled(0.5);
    let run2 = solve_picard(plan, &half, &config)?;
    let lip = lipschitz_check(plan, &run, &run2)?;
    s.gates.push(Gate::at_most("lipschitz_ratio", lip.ratio, slack * lip.bound));
    write_json(m, s, "lipschitz.json", &lip)?;
    Ok(())
}

fn trajectory_lines(s: &mut RunSummary, rec: &TrajectoryRecord) {
    s.line(format!("status: {}", rec.status.as_str()));
    if let (Some(t), Some(u)) = (rec.t_max, rec.uncertainty) {
        s.line(format!("T_max = {t:.8} +/- {u:.2e}"));
    }
    if let Some(fit) = &rec.fit {
        s.line(format!(
            "fit: {} points, residual {:.2e}, slope ratio {:.4}, rate deviation {:.2e}",
            fit.points, fit.residual, fit.slope_ratio, fit.rate_deviation
        ));
    }
    if let Some(h) = &rec.handoff {
        s.line(format!("handoff at t0 = {:.4e} after {} sweeps", h.t0, h.sweeps));
    }
    if rec.extrapolation_unjustified {
        s.line("extrapolation outside the range where type-I behaviour is known");
    }
    if !rec.note.is_empty() {
        s.line(format!("note: {}", rec.note));
    }
}

fn tmax(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let spec = *plan.spec();
    let profile = SingularProfile::from_descriptor(spec, &m.profile)?;
    let rec = estimate_tmax(plan, &profile, &m.controls)?;
    rec.write_csv(&m.output_dir.join("trajectory.csv"))?;
    rec.write_json(&m.output_dir.join("tmax.json"))?;
    s.artifacts.extend(["trajectory.csv", "tmax.json"].map(String::from));
    trajectory_lines(s, &rec);
    s.inconclusive = rec.status == Status::Inconclusive;
    let plus = spec.sign_a == Sign::Plus;
    match (&m.profile.kind, rec.t_max) {
        (ProfileKind::Constant, Some(t)) if plus && m.profile.amplitude > 0.0 => {
            let exact = 1.0 / (spec.alpha * m.profile.amplitude.powf(spec.alpha));
            s.line(format!("ODE blow-up time {exact:.8}"));
            s.gates.push(Gate::at_most("ode_oracle", (t - exact).abs(), m.tolerances.ode));
        }
        (ProfileKind::Psi0, Some(t)) if plus && m.profile.amplitude == 1.0 && spec.is_subcritical() => {
            let bound = require_cache(plan)?.apriori_blowup_bound(&spec)?;
            s.line(format!("a-priori bound t* = {bound:.8}"));
            s.gates.push(Gate::at_most("apriori_bound", t, bound));
        }
        _ => {}
    }
    Ok(())
}

fn sweep(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let spec = *plan.spec();
    let profile = SingularProfile::from_descriptor(spec, &m.profile)?;
    let curve = sweep_lifespan(plan, &profile, &m.lambdas, &m.controls, m.strategy)?;
    write_text(m, s, "sweep.csv", &curve.to_csv())?;
    write_json(m, s, "sweep.json", &curve)?;
    for p in &curve.points {
        s.line(format!(
            "lambda {:<10} {:<24} T_max {:<14} scaled {}",
            p.lambda,
            p.status.as_str(),
            p.t_max.map_or("-".into(), |t| format!("{t:.6e}")),
            p.scaled.map_or("-".into(), |t| format!("{t:.8}")),
        ));
    }
    if let Some(slope) = curve.slope {
        s.line(format!("slope of log T_max against log lambda: {slope:.5}"));
    }
    s.inconclusive = curve.points.iter().any(|p| p.status == Status::Inconclusive);
    s.gates.push(Gate::at_most("monotonicity_violations", curve.monotonicity_violations as f64, 0.0));
    if matches!(m.profile.kind, ProfileKind::Psi0) && spec.sign_a == Sign::Plus {
        let scaled: Vec<f64> = curve.points.iter().filter_map(|p| p.scaled).collect();
        if scaled.len() == curve.points.len() && !scaled.is_empty() {
            let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
            let spread = scaled.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
            s.gates.push(Gate::at_most("scaled_spread", spread, m.tolerances.scaling));
        }
    }
    Ok(())
}

fn probe_csv(probe: &DilationProbe) -> String {
    let mut csv = String::from("lambda,point,value\n");
    for (l, row) in probe.lambdas.iter().zip(&probe.values) {
        for (i, v) in row.iter().enumerate() {
            csv.push_str(&format!("{l},{i},{v:.12e}\n"));
        }
    }
    csv
}

fn dilation(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let spec = *plan.spec();
    let profile = SingularProfile::from_descriptor(spec, &m.profile)?;
    let probe = dilation_limits(&profile, &m.lambdas, &m.annulus)?;
    write_text(m, s, "dilation.csv", &probe_csv(&probe))?;
    let mut points = String::new();
    for p in &probe.points {
        points.push_str(&p.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(","));
        points.push('\n');
    }
    write_text(m, s, "dilation_points.csv", &points)?;
    write_json(
        m,
        s,
        "dilation.json",
        &serde_json::json!({
            "lambdas": probe.lambdas,
            "norms": probe.norms,
            "consecutive_distances": probe.consecutive_distances,
            "x_bound": probe.x_bound,
        }),
    )?;
    s.line(format!("{} probe points, |z|/psi0 <= {:.6}", probe.points.len(), probe.x_bound));
    for (i, d) in probe.consecutive_distances.iter().enumerate() {
        s.line(format!("L1 distance lambda {} -> {}: {d:.4e}", probe.lambdas[i], probe.lambdas[i + 1]));
    }
    Ok(())
}

fn criteria(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let spec = *plan.spec();
    let profile = SingularProfile::from_descriptor(spec, &m.profile)?;
    let lam = m.lambdas.iter().cloned().fold(f64::MIN, f64::max);
    let z = DilationProbe::field_for(plan, &profile, lam)?;
    let report = blowup_criterion_check(plan, &z, m.tolerances.criterion)?;
    s.line(format!("dilation at lambda = {lam}: regime {}, verdict {:?}", report.regime, report.verdict));
    for g in &report.gates {
        s.line(format!("criterion gate: {g}"));
    }
    write_json(m, s, "criterion.json", &report)?;
    let rec = estimate_tmax(plan, &profile, &m.controls)?;
    rec.write_csv(&m.output_dir.join("trajectory.csv"))?;
    s.artifacts.push("trajectory.csv".into());
    trajectory_lines(s, &rec);
    match (report.verdict, rec.status) {
        (_, Status::Inconclusive) => s.inconclusive = true,
        (Verdict::BlowupPredicted, st) => s.gates.push(Gate::flag("prediction_confirmed", st == Status::BlewUp)),
        (Verdict::Undetermined, _) => {}
    }
    Ok(())
}

fn two_limit(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let report = two_limit_experiment(plan, &m.two_limit, &m.controls)?;
    write_text(m, s, "two_limit_first.csv", &report.first.to_csv())?;
    write_text(m, s, "two_limit_second.csv", &report.second.to_csv())?;
    write_json(m, s, "two_limit.json", &report)?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.8}"));
    s.line(format!("limits {} and {} (uncertainty {:.2e})", fmt(report.limit_first), fmt(report.limit_second), report.uncertainty));
    s.line(format!("homogeneous life spans {} and {}", fmt(report.homogeneous.0), fmt(report.homogeneous.1)));
    s.inconclusive = !report.valid;
    if let (Some(a), Some(b)) = (report.limit_first, report.limit_second) {
        s.gates.push(Gate::at_least("separation", (a - b).abs(), 5.0 * report.uncertainty));
    }
    s.gates.push(Gate::flag("bracketed", report.bracketed));
    Ok(())
}

fn global_smallness(m: &RunManifest, plan: &KernelPlan, s: &mut RunSummary) -> Result<()> {
    let c = &m.smallness;
    let report = global_smallness_check(plan, c.t0, c.lambda, m.horizons.smallness_factor, c.checks, &m.controls)?;
    write_json(m, s, "global_smallness.json", &report)?;
    s.line(format!(
        "lambda = {:.6e} (threshold {:.6e}), M = {:.6e}, horizon {}",
        report.lambda, report.lambda_threshold, report.radius, report.horizon
    ));
    s.line(format!("status {}, max |u| / (M Psi) = {:.6}", report.status.as_str(), report.max_ratio));
    s.gates.push(Gate::flag("global", report.status == Status::GlobalHorizonReached));
    s.gates.push(Gate::at_most("max_ratio", report.max_ratio, 1.0));
    Ok(())
}

/// Where a cache artifact lives and what it holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CacheReport {
    pub path: PathBuf,
    pub c_inf: f64,
    pub r_star: f64,
    /// `t*` with `C_∞ t*^{-(gamma+m)/2} = (alpha t*)^{-1/alpha}` (subcritical only).
    pub t_star: Option<f64>,
    pub table_len: usize,
    /// SHA-256 of the artifact file.
    pub sha256: String,
}

/// Build (or reuse) the cache artifact for the manifest's sector.
pub fn cache_build(m: &RunManifest, cache_dir: &Path) -> Result<CacheReport> {
    m.validate()?;
    let params = m.cache.params();
    let cache = PsiCache::load_or_build(cache_dir, &m.sector, params)?;
    let path = cache_dir.join(PsiCache::file_name(&m.sector, &params));
    let bytes = fs::read(&path)?;
    let digest = Sha256::digest(&bytes);
    let t_star = if m.sector.is_subcritical() { Some(cache.apriori_blowup_bound(&m.sector)?) } else { None };
    Ok(CacheReport {
        path,
        c_inf: cache.c_inf(),
        r_star: cache.r_star(),
        t_star,
        table_len: cache.table_len(),
        sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Modulation;

    #[test]
    fn minimal_manifest_uses_defaults() {
        let m = RunManifest::from_toml_str("experiment = \"semigroup_checks\"").unwrap();
        assert_eq!(m.experiment, Experiment::SemigroupChecks);
        assert_eq!(m.grid, GridConfig::default());
        assert_eq!(m.tolerances, Tolerances::default());
        assert_eq!(m.lambdas, vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut m = RunManifest::with_defaults(Experiment::Sweep);
        m.profile = ProfileDescriptor {
            kind: ProfileKind::ModulatedPsi0 { modulation: Modulation::Sin2 { eps: 0.1, shift: 0.3 }, core_radius: Some(0.7) },
            amplitude: 1.0 / 3.0,
        };
        m.lambdas = vec![0.1, std::f64::consts::PI, 1e-7];
        m.horizons.picard = Some(0.0123);
        m.smallness.lambda = Some(2.0f64.sqrt());
        m.controls.max_dt = Some(1e-3);
        m.seed = 99;
        let text = m.to_toml_string().unwrap();
        let back = RunManifest::from_toml_str(&text).unwrap();
        assert_eq!(back.to_toml_string().unwrap(), text);
        assert_eq!(back.lambdas, m.lambdas);
        assert_eq!(back.profile.amplitude.to_bits(), m.profile.amplitude.to_bits());
        assert_eq!(back.smallness, m.smallness);
        assert_eq!(back.controls, m.controls);
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let err = RunManifest::from_toml_str("experiment = \"tmax\"\n[grid]\nn = \"many\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("n"), "{msg}");
        assert_eq!(exit_code_for(&err), EXIT_CONFIG);
        let err = RunManifest::from_toml_str("experiment = \"nothing\"").unwrap_err();
        assert!(err.to_string().contains("experiment"), "{err}");
        let err = RunManifest::from_toml_str("experiment = \"tmax\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn nonpositive_tolerances_are_rejected() {
        let err = RunManifest::from_toml_str("experiment = \"tmax\"\n[tolerances]\nscaling = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("tolerances.scaling"));
        let err = RunManifest::from_toml_str("experiment = \"tmax\"\nlambdas = [1.0, -2.0]\n").unwrap_err();
        assert!(err.to_string().contains("lambdas"));
        let err = RunManifest::from_toml_str("experiment = \"tmax\"\n[sector]\ndim = 1\nm = 2\ngamma = 0.5\nalpha = 1.0\nsign_a = 1\n")
            .unwrap_err();
        assert_eq!(exit_code_for(&err), EXIT_CONFIG);
    }

    #[test]
    fn unwritable_output_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, b"x").unwrap();
        let mut m = RunManifest::with_defaults(Experiment::Tmax);
        m.output_dir = file.join("sub");
        let err = m.prepare_output().unwrap_err();
        assert_eq!(exit_code_for(&err), EXIT_CONFIG);
    }

    #[test]
    fn summary_exit_codes() {
        let m = RunManifest::with_defaults(Experiment::Tmax);
        let mut s = RunSummary::new(&m);
        assert_eq!(s.exit_code(), EXIT_OK);
        s.inconclusive = true;
        assert_eq!(s.exit_code(), EXIT_INCONCLUSIVE);
        s.gates.push(Gate::at_most("x", 2.0, 1.0));
        assert_eq!(s.exit_code(), EXIT_GATE);
        assert!(s.to_string().contains("[FAIL] x"));
    }
}
