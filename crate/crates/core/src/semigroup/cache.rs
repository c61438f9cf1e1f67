//! The reference solution `E = e^{Δ_Ω} psi_0` and everything derived from it.
//!
//! `E(x) / (x_1 ... x_m)` is a radial function `R(|x|)`, so the cache stores
//! one table: `Q(u) = R(r) (1 + r^2)^{(gamma + 2m)/2}` on a uniform grid in
//! `u = ln(1 + r)`. `Q` tends to `c_{m,gamma}` at infinity, which is also the
//! tail used beyond the table. Any `Ψ(t) = e^{tΔ_Ω} psi_0` then follows from
//! `Ψ(t, x) = t^{-(gamma+m)/2} E(x / sqrt(t))`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::quadrature::ProfileQuadrature;
use crate::error::{Error, Result};
use crate::geometry::{Analytic, AxisKind, Field, GridSpec, SectorSpec, Sign};
use crate::profiles::{c_m_gamma, psi0};

const MAGIC: &[u8; 8] = b"SECTPSI1";

/// Table resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CacheParams {
    /// Step in `u = ln(1 + r)`.
    pub du: f64,
    /// Largest tabulated radius.
    pub r_max: f64,
}

impl Default for CacheParams {
    fn default() -> Self {
        CacheParams { du: 0.01, r_max: 3000.0 }
    }
}

/// Tabulated `E = e^{Δ_Ω} psi_0` with its sup norm `C_∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiCache {
    dim: usize,
    m: usize,
    gamma: f64,
    du: f64,
    r_max: f64,
    q: Vec<f64>,
    c_inf: f64,
    r_star: f64,
}

fn lagrange4(q: &[f64], pos: f64) -> f64 {
    let last = q.len() - 1;
    let i = (pos.floor() as isize).clamp(1, last as isize - 2) as usize;
    let s = pos - i as f64;
    let (y0, y1, y2, y3) = (q[i - 1], q[i], q[i + 1], q[i + 2]);
    // nodes at -1, 0, 1, 2
    -s * (s - 1.0) * (s - 2.0) / 6.0 * y0 + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * y1
        - (s + 1.0) * s * (s - 2.0) / 2.0 * y2
        + (s + 1.0) * s * (s - 1.0) / 6.0 * y3
}

impl PsiCache {
    /// Compute the table by pointwise quadrature at `t = 1`.
    ///
    /// Fails with [`Error::Quadrature`] when a refined quadrature layout
    /// disagrees with the default one at the maximiser by more than 1e-7.
    pub fn build(spec: &SectorSpec, params: CacheParams) -> Result<Self> {
        if !(params.du > 0.0 && params.r_max > 10.0) {
            return Err(Error::InvalidSpec(format!("bad cache parameters {params:?}")));
        }
        let quad = ProfileQuadrature::for_spec(spec);
        let count = ((1.0 + params.r_max).ln() / params.du).ceil() as usize + 1;
        let q: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|i| {
                let r = (i as f64 * params.du).exp_m1();
                Self::reduced_by_quadrature(spec, &quad, r) * (1.0 + r * r).powf(0.5 * (spec.gamma + 2.0 * spec.m as f64))
            })
            .collect();
        let mut cache = PsiCache {
            dim: spec.dim,
            m: spec.m,
            gamma: spec.gamma,
            du: params.du,
            r_max: (((count - 1) as f64) * params.du).exp_m1(),
            q,
            c_inf: 0.0,
            r_star: 0.0,
        };
        let (r_star, c_inf) = cache.locate_max();
        cache.r_star = r_star;
        cache.c_inf = c_inf;

        let fine = quad.refined();
        let check = Self::reduced_by_quadrature(spec, &fine, r_star);
        let coarse = Self::reduced_by_quadrature(spec, &quad, r_star);
        let rel = (check - coarse).abs() / check.abs();
        if !(rel < 1e-7) {
            return Err(Error::Quadrature(format!(
                "E at r = {r_star:.4} changes by {rel:.2e} under refinement"
            )));
        }
        log::info!(
            "built Psi cache for N={} m={} gamma={}: C_inf = {:.10} at r = {:.5} ({} entries)",
            spec.dim,
            spec.m,
            spec.gamma,
            c_inf,
            r_star,
            count
        );
        Ok(cache)
    }

    /// `R(r) = E(x) / (x_1...x_m)` at `|x| = r` along the diagonal of the first `m` axes.
    fn reduced_by_quadrature(spec: &SectorSpec, quad: &ProfileQuadrature, r: f64) -> f64 {
        let m = spec.m;
        let axes: Vec<AxisKind> = (0..spec.dim)
            .map(|a| if a < m { AxisKind::AntiSymmetric } else { AxisKind::Dirichlet })
            .collect();
        let mut x = vec![0.0; spec.dim];
        if m == 0 {
            x[0] = r;
        } else {
            for xa in x.iter_mut().take(m) {
                *xa = r / (m as f64).sqrt();
            }
        }
        let f = |y: &[f64]| psi0(spec, y);
        quad.integrate(&axes, &x, 1.0, true, &f)
    }

    fn reduced_power(&self) -> f64 {
        0.5 * (self.gamma + 2.0 * self.m as f64)
    }

    /// `R(r)`, interpolated, with the `c_{m,gamma} (1+r^2)^{-(gamma+2m)/2}` tail.
    pub fn reduced(&self, r: f64) -> f64 {
        let damp = (1.0 + r * r).powf(-self.reduced_power());
        if r >= self.r_max {
            return self.q[self.q.len() - 1] * damp;
        }
        lagrange4(&self.q, r.ln_1p() / self.du) * damp
    }

    /// `E(y) = e^{Δ_Ω} psi_0 (y)`.
    pub fn e_value(&self, y: &[f64]) -> f64 {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let prod: f64 = y[..self.m].iter().product();
        prod * self.reduced(r)
    }

    /// `Ψ(t, x) = t^{-(gamma+m)/2} E(x / sqrt(t))`.
    pub fn psi_value(&self, t: f64, x: &[f64]) -> f64 {
        let s = t.sqrt().recip();
        let mut y = [0.0; 3];
        for (a, &v) in x.iter().enumerate() {
            y[a] = v * s;
        }
        t.powf(-0.5 * (self.gamma + self.m as f64)) * self.e_value(&y[..x.len()])
    }

    fn max_candidate(&self, r: f64) -> f64 {
        if self.m == 0 {
            self.reduced(r)
        } else {
            (r / (self.m as f64).sqrt()).powi(self.m as i32) * self.reduced(r)
        }
    }

    fn locate_max(&self) -> (f64, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..self.q.len() {
            let r = (i as f64 * self.du).exp_m1();
            let v = self.max_candidate(r);
            if v > best.1 {
                best = (i, v);
            }
        }
        let lo_i = best.0.saturating_sub(1);
        let hi_i = (best.0 + 1).min(self.q.len() - 1);
        let (mut a, mut b) = ((lo_i as f64 * self.du).exp_m1(), (hi_i as f64 * self.du).exp_m1());
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        for _ in 0..80 {
            if self.max_candidate(c) > self.max_candidate(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        let r = 0.5 * (a + b);
        let v = self.max_candidate(r).max(best.1);
        (r, v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `C_∞ = ||e^{Δ_Ω} psi_0||_∞`.
    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }

    /// Radius at which `E` attains `C_∞`.
    pub fn r_star(&self) -> f64 {
        self.r_star
    }

    pub fn table_len(&self) -> usize {
        self.q.len()
    }

    /// The point where `E` attains its maximum.
    pub fn argmax(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        if self.m == 0 {
            x[0] = self.r_star;
        } else {
            for xa in x.iter_mut().take(self.m) {
                *xa = self.r_star / (self.m as f64).sqrt();
            }
        }
        x
    }

    /// `sup E / psi_0`, the constant in `||e^{tΔ_Ω} psi||_X <= C ||psi||_X`
    /// realised by `psi = psi_0` (independent of `t` by scaling).
    pub fn x_bound_constant(&self) -> f64 {
        let c = c_m_gamma(self.m, self.gamma);
        (0..self.q.len())
            .map(|i| {
                let r = (i as f64 * self.du).exp_m1();
                if r == 0.0 {
                    0.0
                } else {
                    let damp = (r * r / (1.0 + r * r)).powf(self.reduced_power());
                    self.q[i] * damp / c
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn matches(&self, spec: &SectorSpec) -> bool {
        self.dim == spec.dim && self.m == spec.m && self.gamma == spec.gamma
    }

    fn check_spec(&self, spec: &SectorSpec) -> Result<()> {
        if !self.matches(spec) {
            return Err(Error::InvalidSpec(format!(
                "cache is for N={} m={} gamma={}, requested N={} m={} gamma={}",
                self.dim, self.m, self.gamma, spec.dim, spec.m, spec.gamma
            )));
        }
        Ok(())
    }

    /// `Ψ(t)` sampled on a grid, by the dilation identity.
    pub fn psi_fast(self: &Arc<Self>, spec: &SectorSpec, grid: &GridSpec, t: f64) -> Result<Field> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        self.check_spec(spec)?;
        let profile = Arc::new(PsiProfile { cache: self.clone(), t, amplitude: 1.0 });
        Ok(Field::sample(*spec, grid.clone(), profile)?.with_time(t))
    }

    /// `∫_0^T ||Ψ(s)||_∞^alpha ds = C_∞^alpha T^{1-beta} / (1-beta)`, `beta = alpha(gamma+m)/2`.
    pub fn alpha_time_integral(&self, spec: &SectorSpec, horizon: f64) -> Result<f64> {
        self.check_spec(spec)?;
        let beta = spec.beta();
        if beta >= 1.0 {
            return Err(Error::Supercritical { alpha: spec.alpha, critical: spec.critical_alpha() });
        }
        if horizon < 0.0 {
            return Err(Error::NonPositiveTime(horizon));
        }
        Ok(self.c_inf.powf(spec.alpha) * horizon.powf(1.0 - beta) / (1.0 - beta))
    }

    /// `∫_{t0}^∞ ||Ψ(s)||_∞^alpha ds`, finite only above the critical power.
    pub fn alpha_tail_integral(&self, spec: &SectorSpec, t0: f64) -> Result<f64> {
        self.check_spec(spec)?;
        let beta = spec.beta();
        if beta <= 1.0 {
            return Err(Error::InvalidSpec(format!(
                "the tail integral diverges for alpha(gamma+m)/2 = {beta} <= 1"
            )));
        }
        Ok(self.c_inf.powf(spec.alpha) * t0.powf(1.0 - beta) / (beta - 1.0))
    }

    /// Time `t*` with `C_∞ t*^{-(gamma+m)/2} = (alpha t*)^{-1/alpha}`.
    pub fn apriori_blowup_bound(&self, spec: &SectorSpec) -> Result<f64> {
        self.check_spec(spec)?;
        if !spec.is_subcritical() {
            return Err(Error::Supercritical { alpha: spec.alpha, critical: spec.critical_alpha() });
        }
        let e = 1.0 / spec.alpha - 0.5 * spec.homogeneity();
        Ok((self.c_inf * spec.alpha.powf(1.0 / spec.alpha)).powf(-1.0 / e))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(80 + 8 * self.q.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        out.extend_from_slice(&self.gamma.to_le_bytes());
        out.extend_from_slice(&self.du.to_le_bytes());
        out.extend_from_slice(&self.r_max.to_le_bytes());
        out.extend_from_slice(&(self.q.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.c_inf.to_le_bytes());
        out.extend_from_slice(&self.r_star.to_le_bytes());
        for v in &self.q {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Artifact { path: path.to_path_buf(), reason: reason.into() };
        if bytes.len() < 8 + 4 + 4 + 8 * 6 + 32 || &bytes[..8] != MAGIC {
            return Err(bad("not a Psi cache"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checksum(path.to_path_buf()));
        }
        let mut pos = 8;
        let mut next = |k: usize| {
            let s = &body[pos..pos + k];
            pos += k;
            s
        };
        let dim = u32::from_le_bytes(next(4).try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(next(4).try_into().unwrap()) as usize;
        let f = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
        let gamma = f(next(8));
        let du = f(next(8));
        let r_max = f(next(8));
        let count = u64::from_le_bytes(next(8).try_into().unwrap()) as usize;
        let c_inf = f(next(8));
        let r_star = f(next(8));
        if body.len() != 8 + 4 + 4 + 8 * 6 + 8 * count || count < 4 {
            return Err(bad("length does not match the header"));
        }
        let q = (0..count).map(|_| f(next(8))).collect();
        Ok(PsiCache { dim, m, gamma, du, r_max, q, c_inf, r_star })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut fh = fs::File::create(&tmp)?;
            fh.write_all(&self.to_bytes())?;
            fh.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        PsiCache::from_bytes(&bytes, path)
    }

    /// Artifact file name for a sector and resolution.
    pub fn file_name(spec: &SectorSpec, params: &CacheParams) -> String {
        format!(
            "psi_N{}_m{}_g{:016x}_du{:016x}_r{:016x}.bin",
            spec.dim,
            spec.m,
            spec.gamma.to_bits(),
            params.du.to_bits(),
            params.r_max.to_bits()
        )
    }

    /// Load the cache from `dir` if present and valid, else build and store it.
    pub fn load_or_build(dir: &Path, spec: &SectorSpec, params: CacheParams) -> Result<Arc<Self>> {
        fs::create_dir_all(dir)?;
        let path = dir.join(Self::file_name(spec, &params));
        if path.exists() {
            match PsiCache::load(&path) {
                Ok(c) if c.matches(spec) => return Ok(Arc::new(c)),
                Ok(_) => log::warn!("{} holds a different sector; rebuilding", path.display()),
                Err(e) => log::warn!("discarding {}: {e}", path.display()),
            }
        }
        let cache = PsiCache::build(spec, params)?;
        cache.save(&path)?;
        Ok(Arc::new(cache))
    }

    /// Default cache directory: `$SECTORHEAT_CACHE_DIR`, else a directory under the system temp dir.
    pub fn default_dir() -> PathBuf {
        std::env::var_os("SECTORHEAT_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("sectorheat-cache"))
    }
}

/// `amplitude * Ψ(t)` as an analytic profile.
#[derive(Clone, Debug)]
pub struct PsiProfile {
    pub cache: Arc<PsiCache>,
    pub t: f64,
    pub amplitude: f64,
}

impl Analytic for PsiProfile {
    fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * self.cache.psi_value(self.t, x)
    }

    fn dilated(&self, lam: f64) -> Arc<dyn Analytic> {
        // Ψ(t)(λx) = λ^{-(gamma+m)} Ψ(t/λ²)(x)
        let h = self.cache.gamma + self.cache.m as f64;
        Arc::new(PsiProfile {
            cache: self.cache.clone(),
            t: self.t / (lam * lam),
            amplitude: self.amplitude * lam.powf(-h),
        })
    }

    fn is_bounded(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("{} x Psi({})", self.amplitude, self.t)
    }
}

/// Sector spec used only to key caches (alpha and sign are irrelevant to `E`).
pub fn cache_key_spec(dim: usize, m: usize, gamma: f64) -> Result<SectorSpec> {
    SectorSpec::new(dim, m, gamma, 1.0, Sign::Plus)
}
