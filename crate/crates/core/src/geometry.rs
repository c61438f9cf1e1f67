//! Sector description, tensor grids over the truncated sector, sampled fields,
//! anti-symmetric extension and dilation.
//!
//! The sector is `{x in R^N : x_1 > 0, ..., x_m > 0}`. A [`Field`] stores
//! values only on the sector part of a box `(-L, L)^N`; the values on the
//! reflected parts follow from anti-symmetry and are produced on demand by
//! [`extend_antisym`].

use std::fmt;
use std::sync::Arc;

use ndarray::{ArrayD, Dimension, IxDyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;

/// Sign of the reaction term `a |u|^alpha u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    /// `a = +1`, the focusing (blow-up) case.
    Plus,
    /// `a = -1`, absorption.
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign_a must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Problem parameters: dimension `N`, anti-symmetry count `m`, profile
/// exponent `gamma`, nonlinearity power `alpha` and the sign `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSectorSpec")]
pub struct SectorSpec {
    pub dim: usize,
    pub m: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub sign_a: Sign,
}

#[derive(Deserialize)]
struct RawSectorSpec {
    dim: usize,
    m: usize,
    gamma: f64,
    alpha: f64,
    sign_a: Sign,
}

impl TryFrom<RawSectorSpec> for SectorSpec {
    type Error = Error;

    fn try_from(r: RawSectorSpec) -> Result<Self> {
        SectorSpec::new(r.dim, r.m, r.gamma, r.alpha, r.sign_a)
    }
}

impl SectorSpec {
    pub fn new(dim: usize, m: usize, gamma: f64, alpha: f64, sign_a: Sign) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidSpec(format!("dimension {dim} outside 1..=3")));
        }
        if m > dim {
            return Err(Error::InvalidSpec(format!("m = {m} exceeds dimension {dim}")));
        }
        if !(gamma > 0.0 && gamma < dim as f64) {
            return Err(Error::InvalidSpec(format!("gamma = {gamma} must lie in (0, {dim})")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidSpec(format!("alpha = {alpha} must be positive")));
        }
        Ok(SectorSpec { dim, m, gamma, alpha, sign_a })
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        SectorSpec::new(self.dim, self.m, self.gamma, alpha, self.sign_a)
    }

    pub fn with_sign(mut self, sign_a: Sign) -> Self {
        self.sign_a = sign_a;
        self
    }

    /// Homogeneity degree of `psi_0` is `-(gamma + m)`.
    pub fn homogeneity(&self) -> f64 {
        self.gamma + self.m as f64
    }

    pub fn critical_alpha(&self) -> f64 {
        2.0 / self.homogeneity()
    }

    pub fn is_subcritical(&self) -> bool {
        self.alpha < self.critical_alpha()
    }

    pub fn is_critical(&self) -> bool {
        (self.alpha - self.critical_alpha()).abs() <= 1e-12 * self.critical_alpha()
    }

    /// Exponent of the singularity of `||Psi(t)||^alpha` at `t = 0`.
    pub fn beta(&self) -> f64 {
        0.5 * self.alpha * self.homogeneity()
    }

    /// Life-span scaling exponent `(1/alpha - (gamma+m)/2)^{-1}`; `None` unless subcritical.
    pub fn sigma(&self) -> Option<f64> {
        self.is_subcritical()
            .then(|| 1.0 / (1.0 / self.alpha - 0.5 * self.homogeneity()))
    }

    /// `2 / (N + m)`.
    pub fn fujita_alpha(&self) -> f64 {
        2.0 / (self.dim + self.m) as f64
    }

    /// `(N - 2) alpha < 4`, the range in which blow-up is known to be type I.
    pub fn type_one_guaranteed(&self) -> bool {
        (self.dim as f64 - 2.0) * self.alpha < 4.0
    }
}

/// Kind of a grid axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    /// Nodes `(k+1) h`, `h = L/(n+1)`, on `(0, L)`; the wall value 0 is implied.
    AntiSymmetric,
    /// Half-cell nodes on `(-L, L)` with a zero outer boundary.
    Dirichlet,
    /// Half-cell nodes on `(-L, L)`, periodic.
    Periodic,
}

impl AxisKind {
    pub fn is_antisymmetric(self) -> bool {
        self == AxisKind::AntiSymmetric
    }
}

/// Tensor grid over the sector part of the box `(-L, L)^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
    pub axes: Vec<AxisKind>,
}

impl GridSpec {
    pub fn new(half_width: f64, n: usize, axes: Vec<AxisKind>) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points per axis, got {n}")));
        }
        if !(1..=3).contains(&axes.len()) {
            return Err(Error::InvalidGrid(format!("{} axes; expected 1..=3", axes.len())));
        }
        Ok(GridSpec { half_width, n, axes })
    }

    /// The standard grid for a sector: anti-symmetric first `m` axes, Dirichlet elsewhere.
    pub fn for_sector(spec: &SectorSpec, half_width: f64, n: usize) -> Result<Self> {
        Self::with_symmetric_kind(spec, half_width, n, AxisKind::Dirichlet)
    }

    pub fn with_symmetric_kind(spec: &SectorSpec, half_width: f64, n: usize, sym: AxisKind) -> Result<Self> {
        if sym == AxisKind::AntiSymmetric {
            return Err(Error::InvalidGrid("symmetric axes cannot be anti-symmetric".into()));
        }
        let axes = (0..spec.dim)
            .map(|i| if i < spec.m { AxisKind::AntiSymmetric } else { sym })
            .collect();
        GridSpec::new(half_width, n, axes)
    }

    /// Same axis layout with a new resolution and box.
    pub fn resized(&self, half_width: f64, n: usize) -> Result<Self> {
        GridSpec::new(half_width, n, self.axes.clone())
    }

    /// Check that the axis layout matches the sector's anti-symmetry pattern.
    pub fn check_against(&self, spec: &SectorSpec) -> Result<()> {
        if self.axes.len() != spec.dim {
            return Err(Error::InvalidGrid(format!(
                "grid has {} axes but the sector is {}-dimensional",
                self.axes.len(),
                spec.dim
            )));
        }
        for (i, kind) in self.axes.iter().enumerate() {
            if kind.is_antisymmetric() != (i < spec.m) {
                return Err(Error::InvalidGrid(format!(
                    "axis {i} is {kind:?} but m = {}",
                    spec.m
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.dim()]
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        match self.axes[axis] {
            AxisKind::AntiSymmetric => self.half_width / (self.n + 1) as f64,
            AxisKind::Dirichlet | AxisKind::Periodic => 2.0 * self.half_width / self.n as f64,
        }
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn nodes(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        match self.axes[axis] {
            AxisKind::AntiSymmetric => (0..self.n).map(|k| (k + 1) as f64 * h).collect(),
            AxisKind::Dirichlet | AxisKind::Periodic => (0..self.n)
                .map(|k| -self.half_width + (k as f64 + 0.5) * h)
                .collect(),
        }
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Coordinates of the node with row-major flat index `flat`.
    pub fn point(&self, flat: usize, nodes: &[Vec<f64>], out: &mut [f64]) {
        let mut rem = flat;
        for axis in (0..self.dim()).rev() {
            out[axis] = nodes[axis][rem % self.n];
            rem /= self.n;
        }
    }

    /// Multi-index of the node with row-major flat index `flat`.
    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for axis in (0..self.dim()).rev() {
            out[axis] = rem % self.n;
            rem /= self.n;
        }
    }

    pub fn all_nodes(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|a| self.nodes(a)).collect()
    }
}

/// Pointwise-evaluable function attached to a field, used for values outside
/// the sampled box and for exact quadrature of singular data.
pub trait Analytic: Send + Sync + fmt::Debug {
    /// Value at a point of the open sector.
    fn value(&self, x: &[f64]) -> f64;

    /// The function `x -> self(lam x)`.
    fn dilated(&self, lam: f64) -> Arc<dyn Analytic>;

    /// `Some(K)` when the function is exactly `K psi_0`.
    fn psi0_multiple(&self) -> Option<f64> {
        None
    }

    /// True when the function is bounded near the origin.
    fn is_bounded(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

/// Real values on the sector nodes of a [`GridSpec`].
#[derive(Clone)]
pub struct Field {
    spec: SectorSpec,
    grid: GridSpec,
    values: ArrayD<f64>,
    time: Option<f64>,
    nonnegative: bool,
    profile: Option<Arc<dyn Analytic>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("spec", &self.spec)
            .field("grid", &self.grid)
            .field("time", &self.time)
            .field("nonnegative", &self.nonnegative)
            .field("profile", &self.profile.as_ref().map(|p| p.describe()))
            .field("sup", &self.sup_norm())
            .finish()
    }
}

impl Field {
    pub fn new(spec: SectorSpec, grid: GridSpec, values: ArrayD<f64>) -> Result<Self> {
        grid.check_against(&spec)?;
        if values.shape() != grid.shape().as_slice() {
            return Err(Error::InvalidGrid(format!(
                "values have shape {:?}, grid expects {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Field { spec, grid, values, time: None, nonnegative: false, profile: None })
    }

    pub fn zeros(spec: SectorSpec, grid: GridSpec) -> Result<Self> {
        let values = ArrayD::zeros(IxDyn(&grid.shape()));
        Field::new(spec, grid, values)
    }

    /// Evaluate `f` at every node (in parallel).
    pub fn from_fn<F>(spec: SectorSpec, grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let nodes = grid.all_nodes();
        let dim = grid.dim();
        let flat: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |x, i| {
                    grid.point(i, &nodes, x);
                    f(x)
                },
            )
            .collect();
        let values = ArrayD::from_shape_vec(IxDyn(&grid.shape()), flat)
            .map_err(|e| Error::InvalidGrid(e.to_string()))?;
        Field::new(spec, grid, values)
    }

    /// Sample an analytic profile and keep it attached for tail evaluation.
    pub fn sample(spec: SectorSpec, grid: GridSpec, profile: Arc<dyn Analytic>) -> Result<Self> {
        let p = profile.clone();
        let mut field = Field::from_fn(spec, grid, move |x| p.value(x))?;
        field.profile = Some(profile);
        Ok(field)
    }

    pub fn spec(&self) -> &SectorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice().expect("fields are stored contiguously")
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn profile(&self) -> Option<&Arc<dyn Analytic>> {
        self.profile.as_ref()
    }

    pub fn is_tagged_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn with_profile(mut self, profile: Arc<dyn Analytic>) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn without_profile(mut self) -> Self {
        self.profile = None;
        self
    }

    /// Tag as nonnegative; fails if some value is below `-1e-12 * max`.
    pub fn with_nonnegative(mut self) -> Result<Self> {
        let floor = -1e-12 * self.max().max(0.0);
        let min = self.min();
        if min < floor {
            return Err(Error::SignChanging { min });
        }
        self.nonnegative = true;
        Ok(self)
    }

    /// Replace the values, keeping grid and spec.
    pub fn with_values(&self, values: ArrayD<f64>) -> Result<Field> {
        let mut out = Field::new(self.spec, self.grid.clone(), values)?;
        out.time = self.time;
        Ok(out)
    }

    pub(crate) fn from_parts_unchecked(spec: SectorSpec, grid: GridSpec, values: ArrayD<f64>) -> Field {
        Field { spec, grid, values, time: None, nonnegative: false, profile: None }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> Result<Field> {
        let mut v = self.values.clone();
        v.par_mapv_inplace(f);
        self.with_values(v)
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Result<Field> {
        self.same_grid(other)?;
        let mut v = self.values.clone();
        ndarray::Zip::from(&mut v)
            .and(&other.values)
            .par_for_each(|a, &b| *a = f(*a, b));
        self.with_values(v)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.spec.dim != other.spec.dim || self.spec.m != other.spec.m {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Result<Field> {
        self.map(move |v| c * v)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn abs(&self) -> Result<Field> {
        self.map(f64::abs)
    }

    /// `|u|^alpha u` nodewise.
    pub fn power_nonlinearity(&self, alpha: f64) -> Result<Field> {
        self.map(move |u| u.abs().powf(alpha) * u)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Flat index of the node with the largest |value|.
    pub fn argmax_abs(&self) -> usize {
        let mut best = (0, -1.0);
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > best.1 {
                best = (i, v.abs());
            }
        }
        best.0
    }

    /// Grid L^1 norm over the nodes selected by `mask`.
    pub fn grid_l1(&self, mask: impl Fn(&[f64]) -> bool) -> f64 {
        let nodes = self.grid.all_nodes();
        let mut x = vec![0.0; self.grid.dim()];
        let mut parts = Vec::with_capacity(self.grid.len());
        for (i, v) in self.as_slice().iter().enumerate() {
            self.grid.point(i, &nodes, &mut x);
            if mask(&x) {
                parts.push(v.abs());
            }
        }
        pairwise_sum(&parts) * self.grid.cell_volume()
    }

    /// Largest `self - other` over nodes (positive means `self` exceeds `other` somewhere).
    pub fn max_excess_over(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Sup over nodes of `|f| / g`; `g` must be strictly positive.
pub fn weighted_sup_ratio(f: &Field, g: &Field) -> Result<f64> {
    f.same_grid(g)?;
    let mut sup: f64 = 0.0;
    for (index, (a, &b)) in f.values.iter().zip(g.values.iter()).enumerate() {
        if b <= 0.0 {
            return Err(Error::NonPositiveWeight { index, value: b });
        }
        sup = sup.max(a.abs() / b);
    }
    Ok(sup)
}

/// A field on the whole box, including the reflected copies of the sector.
///
/// Anti-symmetric axes carry `2n + 1` nodes `k h`, `k = -n..=n`; the node at 0
/// lies on the wall.
#[derive(Clone, Debug)]
pub struct FullField {
    spec: SectorSpec,
    grid: GridSpec,
    values: ArrayD<f64>,
}

impl FullField {
    pub fn full_shape(grid: &GridSpec) -> Vec<usize> {
        grid.axes
            .iter()
            .map(|k| if k.is_antisymmetric() { 2 * grid.n + 1 } else { grid.n })
            .collect()
    }

    pub fn full_nodes(grid: &GridSpec, axis: usize) -> Vec<f64> {
        if grid.axes[axis].is_antisymmetric() {
            let h = grid.spacing(axis);
            let n = grid.n as i64;
            (-n..=n).map(|k| k as f64 * h).collect()
        } else {
            grid.nodes(axis)
        }
    }

    pub fn from_fn(spec: SectorSpec, grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        grid.check_against(&spec)?;
        let shape = Self::full_shape(&grid);
        let nodes: Vec<Vec<f64>> = (0..grid.dim()).map(|a| Self::full_nodes(&grid, a)).collect();
        let mut x = vec![0.0; grid.dim()];
        let values = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            for (a, xa) in x.iter_mut().enumerate() {
                *xa = nodes[a][idx[a]];
            }
            f(&x)
        });
        Ok(FullField { spec, grid, values })
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Keep only the nodes inside the sector.
    pub fn restrict(&self) -> Field {
        let n = self.grid.n;
        let axes = self.grid.axes.clone();
        let values = ArrayD::from_shape_fn(IxDyn(&self.grid.shape()), |idx| {
            let full: Vec<usize> = (0..axes.len())
                .map(|a| if axes[a].is_antisymmetric() { n + 1 + idx[a] } else { idx[a] })
                .collect();
            self.values[IxDyn(&full)]
        });
        Field::from_parts_unchecked(self.spec, self.grid.clone(), values)
    }

    /// Largest `|g + T_i g|` over all anti-symmetric axes `i` and nodes.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut worst: f64 = 0.0;
        for (a, kind) in self.grid.axes.iter().enumerate() {
            if !kind.is_antisymmetric() {
                continue;
            }
            for (idx, &v) in self.values.indexed_iter() {
                let mut mirror: Vec<usize> = idx.slice().to_vec();
                mirror[a] = 2 * n - idx[a];
                worst = worst.max((v + self.values[IxDyn(&mirror)]).abs());
            }
        }
        worst
    }
}

/// Odd reflection of `f` across each anti-symmetric coordinate hyperplane.
pub fn extend_antisym(f: &Field) -> FullField {
    let grid = f.grid.clone();
    let n = grid.n as i64;
    let axes = grid.axes.clone();
    let shape = FullField::full_shape(&grid);
    let values = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
        let mut sign = 1.0;
        let mut src = Vec::with_capacity(axes.len());
        for (a, kind) in axes.iter().enumerate() {
            if kind.is_antisymmetric() {
                let off = idx[a] as i64 - n;
                if off == 0 {
                    return 0.0;
                }
                if off < 0 {
                    sign = -sign;
                }
                src.push((off.unsigned_abs() - 1) as usize);
            } else {
                src.push(idx[a]);
            }
        }
        sign * f.values[IxDyn(&src)]
    });
    FullField { spec: f.spec, grid, values }
}

/// Where a coordinate falls relative to the nodes of one axis.
#[derive(Clone, Copy, Debug)]
enum Bracket {
    /// Interpolate between node `lo` (or the implied zero at the wall when
    /// `None`) and node `lo + 1` with weight `w` on the upper node.
    Inside { lo: Option<usize>, w: f64 },
    Outside,
}

fn bracket(grid: &GridSpec, axis: usize, y: f64) -> Bracket {
    let h = grid.spacing(axis);
    let n = grid.n;
    let p = match grid.axes[axis] {
        AxisKind::AntiSymmetric => y / h - 1.0,
        AxisKind::Dirichlet | AxisKind::Periodic => (y + grid.half_width) / h - 0.5,
    };
    let lower = if grid.axes[axis].is_antisymmetric() { -1.0 } else { 0.0 };
    let upper = (n - 1) as f64;
    let eps = 1e-9;
    if p < lower - eps || p > upper + eps {
        return Bracket::Outside;
    }
    let p = p.clamp(lower, upper);
    let mut i0 = p.floor();
    if i0 >= upper {
        i0 = upper - 1.0;
    }
    let w = p - i0;
    let lo = if i0 < 0.0 { None } else { Some(i0 as usize) };
    Bracket::Inside { lo, w }
}

/// Multilinear interpolation of `f` at a sector point; `None` outside the sampled box.
pub fn interpolate(f: &Field, y: &[f64]) -> Option<f64> {
    let dim = f.grid.dim();
    let mut brackets = [(None::<usize>, 0.0f64); 3];
    for a in 0..dim {
        match bracket(&f.grid, a, y[a]) {
            Bracket::Outside => return None,
            Bracket::Inside { lo, w } => brackets[a] = (lo, w),
        }
    }
    let mut total = 0.0;
    let mut idx = [0usize; 3];
    'corners: for corner in 0..(1usize << dim) {
        let mut weight = 1.0;
        for a in 0..dim {
            let (lo, w) = brackets[a];
            let upper = (corner >> a) & 1 == 1;
            let node = match (lo, upper) {
                (None, false) => continue 'corners,
                (None, true) => 0,
                (Some(i), false) => i,
                (Some(i), true) => i + 1,
            };
            weight *= if upper { w } else { 1.0 - w };
            idx[a] = node;
        }
        if weight != 0.0 {
            total += weight * f.values[IxDyn(&idx[..dim])];
        }
    }
    Some(total)
}

/// `(D_lam f)(x) = f(lam x)` by multilinear interpolation. Also returns the
/// fraction of target nodes whose source point fell outside the sampled box.
pub fn dilate_report(f: &Field, lam: f64) -> Result<(Field, f64)> {
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::NonPositiveDilation(lam));
    }
    let grid = f.grid.clone();
    let nodes = grid.all_nodes();
    let dim = grid.dim();
    let tail = f.profile.clone();
    let results: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; dim], vec![0.0; dim]),
            |(x, y), i| {
                grid.point(i, &nodes, x);
                for a in 0..dim {
                    y[a] = lam * x[a];
                }
                match interpolate(f, y) {
                    Some(v) => (v, false),
                    None => (tail.as_ref().map_or(0.0, |p| p.value(y)), true),
                }
            },
        )
        .collect();
    let outside = results.iter().filter(|r| r.1).count() as f64 / grid.len() as f64;
    let values = ArrayD::from_shape_vec(IxDyn(&grid.shape()), results.into_iter().map(|r| r.0).collect())
        .map_err(|e| Error::InvalidGrid(e.to_string()))?;
    let mut out = Field::new(f.spec, grid, values)?;
    out.profile = f.profile.as_ref().map(|p| p.dilated(lam));
    Ok((out, outside))
}

/// [`dilate_report`] that logs a truncation warning when more than 10% of the
/// target nodes map outside the sampled box.
pub fn dilate(f: &Field, lam: f64) -> Result<Field> {
    let (out, outside) = dilate_report(f, lam)?;
    if outside > 0.1 {
        log::warn!(
            "dilation by {lam}: {:.1}% of nodes fall outside the source box{}",
            100.0 * outside,
            if f.profile.is_some() { " (analytic tail used)" } else { " (set to zero)" }
        );
    }
    Ok(out)
}
