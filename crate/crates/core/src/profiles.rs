//! Initial-data families with exact pointwise evaluation.
//!
//! Every profile is `amplitude * base(scale * x)` where `base` is one of the
//! families in [`ProfileKind`]. Dilation only changes `scale`, so dilated
//! profiles stay exact and keep their analytic tails.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Analytic, SectorSpec};

/// `c_{m,gamma} = gamma (gamma + 2) ... (gamma + 2m - 2)`, with `c_{0,gamma} = 1`.
pub fn c_m_gamma(m: usize, gamma: f64) -> f64 {
    (0..m).map(|k| gamma + 2.0 * k as f64).product()
}

/// `psi_0(x) = c_{m,gamma} x_1 ... x_m |x|^{-gamma-2m}` without domain checks.
#[inline]
pub fn psi0(spec: &SectorSpec, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let prod: f64 = x[..spec.m].iter().product();
    c_m_gamma(spec.m, spec.gamma) * prod * r2.powf(-0.5 * (spec.gamma + 2.0 * spec.m as f64))
}

fn check_in_sector(spec: &SectorSpec, x: &[f64]) -> Result<()> {
    let on_wall = x[..spec.m].iter().any(|&v| !(v > 0.0));
    let at_origin = x.iter().all(|&v| v == 0.0);
    if x.len() != spec.dim || on_wall || at_origin {
        return Err(Error::OutsideSector { point: x.to_vec() });
    }
    Ok(())
}

/// Checked evaluation of `psi_0`.
pub fn eval_psi0(spec: &SectorSpec, x: &[f64]) -> Result<f64> {
    check_in_sector(spec, x)?;
    Ok(psi0(spec, x))
}

/// `(-1)^m d_1 ... d_m G_t(x) = G_t(x) prod_{i<=m} x_i / (2t)`.
pub fn eval_gaussian_derivative(spec: &SectorSpec, t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(gaussian_derivative(spec, t, x))
}

#[inline]
fn gaussian_derivative(spec: &SectorSpec, t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let g = (4.0 * std::f64::consts::PI * t).powf(-0.5 * spec.dim as f64) * (-r2 / (4.0 * t)).exp();
    g * x[..spec.m].iter().map(|v| v / (2.0 * t)).product::<f64>()
}

/// Modulation `g(s)` of the log-radius `s = log|x|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    /// `g = 1`.
    One,
    /// `g(s) = sin^2(s + shift) + eps`.
    Sin2 {
        eps: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `g(s) = cos(s + shift)`; sign-changing.
    Cosine {
        #[serde(default)]
        shift: f64,
    },
    /// Smoothed alternation between `c1` (centred at `s = -shift`) and `c2`,
    /// each block `block_len` long in `s`.
    Blocks {
        c1: f64,
        c2: f64,
        block_len: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `g(s) = 1 + height * exp(-((s + shift)/width)^2)`.
    LogBump {
        height: f64,
        width: f64,
        #[serde(default)]
        shift: f64,
    },
}

impl Modulation {
    const BLOCK_SHARPNESS: f64 = 6.0;

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Modulation::One => 1.0,
            Modulation::Sin2 { eps, shift } => (s + shift).sin().powi(2) + eps,
            Modulation::Cosine { shift } => (s + shift).cos(),
            Modulation::Blocks { c1, c2, block_len, shift } => {
                let k = Self::BLOCK_SHARPNESS;
                let c = (std::f64::consts::PI * (s + shift) / block_len).cos();
                let frac = 0.5 - 0.5 * (k * c).tanh() / k.tanh();
                c1 + (c2 - c1) * frac
            }
            Modulation::LogBump { height, width, shift } => {
                1.0 + height * (-((s + shift) / width).powi(2)).exp()
            }
        }
    }

    /// Same modulation with the log-radius shifted: `s -> s + ds`.
    pub fn shifted(&self, ds: f64) -> Modulation {
        let mut out = self.clone();
        match &mut out {
            Modulation::One => {}
            Modulation::Sin2 { shift, .. }
            | Modulation::Cosine { shift }
            | Modulation::Blocks { shift, .. }
            | Modulation::LogBump { shift, .. } => *shift += ds,
        }
        out
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            Modulation::One => 1.0,
            Modulation::Sin2 { eps, .. } => 1.0 + eps.max(0.0),
            Modulation::Cosine { .. } => 1.0,
            Modulation::Blocks { c1, c2, .. } => c1.abs().max(c2.abs()),
            Modulation::LogBump { height, .. } => 1.0 + height.max(0.0),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Modulation::One => true,
            Modulation::Sin2 { eps, .. } => eps >= 0.0,
            Modulation::Cosine { .. } => false,
            Modulation::Blocks { c1, c2, .. } => c1 >= 0.0 && c2 >= 0.0,
            Modulation::LogBump { height, .. } => height >= -1.0,
        }
    }

    /// Period in `s`, if periodic.
    pub fn period(&self) -> Option<f64> {
        match *self {
            Modulation::Sin2 { .. } => Some(std::f64::consts::PI),
            Modulation::Cosine { .. } => Some(2.0 * std::f64::consts::PI),
            Modulation::Blocks { block_len, .. } => Some(2.0 * block_len),
            Modulation::One => Some(0.0),
            Modulation::LogBump { .. } => None,
        }
    }
}

/// Pointwise callable used by custom profiles.
pub type ProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// User-supplied profile: a callable plus its declared tail homogeneity degree.
#[derive(Clone)]
pub struct CustomProfile {
    pub name: String,
    pub eval: ProfileFn,
    /// `f(lam x) ~ lam^{-tail_degree} f(x)` for large `|x|`.
    pub tail_degree: f64,
    pub bounded: bool,
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomProfile")
            .field("name", &self.name)
            .field("tail_degree", &self.tail_degree)
            .field("bounded", &self.bounded)
            .finish()
    }
}

/// The families of initial data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Psi0,
    /// `psi_0(x) g(log|x|)`, optionally multiplied by `r^q / (rho^q + r^q)`,
    /// `q = gamma + m + 1`, which removes the singularity inside radius `rho`.
    ModulatedPsi0 {
        modulation: Modulation,
        #[serde(default)]
        core_radius: Option<f64>,
    },
    /// `Phi_0(t0) = (-1)^m d_1 ... d_m G_{t0}`.
    GaussianDerivative { t0: f64 },
    Constant,
    /// Smooth compactly supported bump `x_1...x_m exp(1 - 1/(1 - |x-c|^2/R^2))`.
    Bump {
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    #[serde(skip)]
    Custom(CustomProfile),
}

/// Descriptor used in run manifests.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileDescriptor {
    #[serde(flatten)]
    pub kind: ProfileKind,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// A profile `amplitude * base(scale * x)` on a given sector.
#[derive(Clone)]
pub struct SingularProfile {
    spec: SectorSpec,
    kind: ProfileKind,
    amplitude: f64,
    scale: f64,
    angular: Option<ProfileFn>,
}

impl fmt::Debug for SingularProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SingularProfile")
            .field("spec", &self.spec)
            .field("kind", &self.kind)
            .field("amplitude", &self.amplitude)
            .field("scale", &self.scale)
            .field("angular", &self.angular.is_some())
            .finish()
    }
}

impl SingularProfile {
    pub fn new(spec: SectorSpec, kind: ProfileKind, amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidSpec(format!("amplitude {amplitude} is not finite")));
        }
        match &kind {
            ProfileKind::GaussianDerivative { t0 } if !(*t0 > 0.0) => return Err(Error::NonPositiveTime(*t0)),
            ProfileKind::Bump { radius, center } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidSpec(format!("bump radius {radius} must be positive")));
                }
                if let Some(c) = center {
                    if c.len() != spec.dim || c[..spec.m].iter().any(|&v| v != 0.0) {
                        return Err(Error::InvalidSpec(
                            "bump centre must have the sector dimension and zero anti-symmetric coordinates".into(),
                        ));
                    }
                }
            }
            ProfileKind::ModulatedPsi0 { core_radius: Some(rho), .. } if !(*rho > 0.0) => {
                return Err(Error::InvalidSpec(format!("core radius {rho} must be positive")));
            }
            _ => {}
        }
        Ok(SingularProfile { spec, kind, amplitude, scale: 1.0, angular: None })
    }

    pub fn from_descriptor(spec: SectorSpec, d: &ProfileDescriptor) -> Result<Self> {
        SingularProfile::new(spec, d.kind.clone(), d.amplitude)
    }

    pub fn psi0(spec: SectorSpec, amplitude: f64) -> Self {
        SingularProfile { spec, kind: ProfileKind::Psi0, amplitude, scale: 1.0, angular: None }
    }

    pub fn modulated(spec: SectorSpec, modulation: Modulation, amplitude: f64) -> Self {
        SingularProfile {
            spec,
            kind: ProfileKind::ModulatedPsi0 { modulation, core_radius: None },
            amplitude,
            scale: 1.0,
            angular: None,
        }
    }

    pub fn gaussian_derivative(spec: SectorSpec, t0: f64, amplitude: f64) -> Result<Self> {
        SingularProfile::new(spec, ProfileKind::GaussianDerivative { t0 }, amplitude)
    }

    pub fn constant(spec: SectorSpec, amplitude: f64) -> Self {
        SingularProfile { spec, kind: ProfileKind::Constant, amplitude, scale: 1.0, angular: None }
    }

    pub fn custom(spec: SectorSpec, custom: CustomProfile, amplitude: f64) -> Self {
        SingularProfile { spec, kind: ProfileKind::Custom(custom), amplitude, scale: 1.0, angular: None }
    }

    /// Multiply by an angular factor `zeta(x/|x|)`.
    pub fn with_angular(mut self, zeta: ProfileFn) -> Self {
        self.angular = Some(zeta);
        self
    }

    pub fn spec(&self) -> &SectorSpec {
        &self.spec
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `c * f`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.amplitude *= c;
        out
    }

    /// `x -> f(lam x)`.
    pub fn dilate(&self, lam: f64) -> Self {
        let mut out = self.clone();
        out.scale *= lam;
        out
    }

    /// `lam^{gamma+m} f(lam x)`, the probe whose limits form the dilation limit set.
    pub fn normalized_dilation(&self, lam: f64) -> Self {
        self.dilate(lam).scaled(lam.powf(self.spec.homogeneity()))
    }

    /// `tau^{-(gamma+m)/2} f(x / sqrt(tau))`; with `tau = lam^sigma` the life span
    /// of this datum equals `lam^sigma T_max(lam f)`.
    pub fn parabolic_rescale(&self, tau: f64) -> Self {
        self.normalized_dilation(tau.sqrt().recip())
    }

    pub fn is_nonnegative(&self) -> bool {
        if self.amplitude < 0.0 {
            return false;
        }
        let base = match &self.kind {
            ProfileKind::ModulatedPsi0 { modulation, .. } => modulation.is_nonnegative(),
            ProfileKind::Custom(_) => false,
            _ => true,
        };
        base && self.angular.is_none()
    }

    /// True when the profile is bounded near the origin.
    pub fn bounded(&self) -> bool {
        match &self.kind {
            ProfileKind::Psi0 => false,
            ProfileKind::ModulatedPsi0 { core_radius, .. } => core_radius.is_some(),
            ProfileKind::GaussianDerivative { .. } | ProfileKind::Constant | ProfileKind::Bump { .. } => true,
            ProfileKind::Custom(c) => c.bounded,
        }
    }

    /// Upper bound for `||f||_X = sup |f| / psi_0` when known in closed form.
    pub fn x_norm_bound(&self) -> Option<f64> {
        let zeta = if self.angular.is_some() { return None } else { 1.0 };
        let base = match &self.kind {
            ProfileKind::Psi0 => Some(self.scale.powf(-self.spec.homogeneity())),
            ProfileKind::ModulatedPsi0 { modulation, .. } => {
                Some(self.scale.powf(-self.spec.homogeneity()) * modulation.sup_abs())
            }
            _ => None,
        };
        base.map(|b| b * self.amplitude.abs() * zeta)
    }

    /// `Some(K)` with `f = K psi_0` exactly.
    pub fn psi0_factor(&self) -> Option<f64> {
        match (&self.kind, &self.angular) {
            (ProfileKind::Psi0, None) => Some(self.amplitude * self.scale.powf(-self.spec.homogeneity())),
            _ => None,
        }
    }

    /// Evaluation of the base profile (before amplitude and scaling).
    fn base(&self, y: &[f64]) -> f64 {
        let spec = &self.spec;
        match &self.kind {
            ProfileKind::Psi0 => psi0(spec, y),
            ProfileKind::ModulatedPsi0 { modulation, core_radius } => {
                let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                let core = match core_radius {
                    Some(rho) => {
                        let q = spec.homogeneity() + 1.0;
                        let rq = (r / rho).powf(q);
                        rq / (1.0 + rq)
                    }
                    None => 1.0,
                };
                psi0(spec, y) * modulation.eval(r.ln()) * core
            }
            ProfileKind::GaussianDerivative { t0 } => gaussian_derivative(spec, *t0, y),
            ProfileKind::Constant => 1.0,
            ProfileKind::Bump { radius, center } => {
                let d2: f64 = match center {
                    Some(c) => y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum(),
                    None => y.iter().map(|v| v * v).sum(),
                };
                let s = d2 / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    let prod: f64 = y[..spec.m].iter().product();
                    prod * (1.0 - 1.0 / (1.0 - s)).exp()
                }
            }
            ProfileKind::Custom(c) => (c.eval)(y),
        }
    }

    /// Value at `x`, no domain checks.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut y = [0.0; 3];
        for (a, &v) in x.iter().enumerate() {
            y[a] = self.scale * v;
        }
        let y = &y[..x.len()];
        let mut v = self.amplitude * self.base(y);
        if let Some(zeta) = &self.angular {
            let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut e = [0.0; 3];
            for (a, &v) in y.iter().enumerate() {
                e[a] = v / r;
            }
            v *= zeta(&e[..y.len()]);
        }
        v
    }

    /// Checked evaluation; rejects points on the walls or at the origin.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_in_sector(&self.spec, x)?;
        Ok(self.eval_unchecked(x))
    }

    pub fn describe_kind(&self) -> String {
        match &self.kind {
            ProfileKind::Psi0 => "psi0".into(),
            ProfileKind::ModulatedPsi0 { modulation, core_radius } => match core_radius {
                Some(rho) => format!("modulated_psi0({modulation:?}, core {rho})"),
                None => format!("modulated_psi0({modulation:?})"),
            },
            ProfileKind::GaussianDerivative { t0 } => format!("gaussian_derivative(t0={t0})"),
            ProfileKind::Constant => "constant".into(),
            ProfileKind::Bump { radius, .. } => format!("bump(R={radius})"),
            ProfileKind::Custom(c) => format!("custom({})", c.name),
        }
    }
}

/// Modulated profile evaluation `psi_0(x) g(log|x|) zeta(x/|x|)`.
pub fn eval_modulated(spec: &SectorSpec, g: &Modulation, zeta: Option<&ProfileFn>, x: &[f64]) -> Result<f64> {
    check_in_sector(spec, x)?;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let z = match zeta {
        Some(f) => {
            let e: Vec<f64> = x.iter().map(|v| v / r).collect();
            f(&e)
        }
        None => 1.0,
    };
    Ok(psi0(spec, x) * g.eval(r.ln()) * z)
}

impl Analytic for SingularProfile {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }

    fn dilated(&self, lam: f64) -> Arc<dyn Analytic> {
        Arc::new(self.dilate(lam))
    }

    fn psi0_multiple(&self) -> Option<f64> {
        self.psi0_factor()
    }

    fn is_bounded(&self) -> bool {
        self.bounded()
    }

    fn describe(&self) -> String {
        format!("{} x {}", self.amplitude, self.describe_kind())
    }
}
