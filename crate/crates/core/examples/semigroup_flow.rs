//! Pushes the heat flow of the singular profile through the grid kernel and
//! compares the spectral and quadrature paths.

use sectorheat::semigroup::{CacheParams, KernelPlan, Method, PsiCache};
use sectorheat::{GridSpec, SectorSpec, Sign};

fn main() -> sectorheat::Result<()> {
    let spec = SectorSpec::new(1, 1, 0.5, 0.5, Sign::Plus)?;
    let cache = PsiCache::load_or_build(&PsiCache::default_dir(), &spec, CacheParams::default())?;
    println!("C_inf = {:.6}, r* = {:.4}", cache.c_inf(), cache.r_star());

    let grid = GridSpec::for_sector(&spec, 12.0, 256)?;
    let quad = KernelPlan::new(spec, grid.clone(), Method::Quadrature)?.with_cache(cache.clone())?;
    let spec_plan = KernelPlan::new(spec, grid, Method::Spectral)?.with_cache(cache)?;

    let h = spec.homogeneity();
    let start = quad.psi(0.25)?.without_profile();
    for t in [0.5, 1.0, 2.0] {
        let a = quad.apply(t - 0.25, &start)?;
        let b = spec_plan.apply(t - 0.25, &start)?;
        let diff = (a.sup_norm() / b.sup_norm() - 1.0).abs();
        println!("t = {t}: t^(h/2) sup Psi = {:.6}, spectral vs quadrature sup {diff:.2e}", a.sup_norm() * t.powf(0.5 * h));
    }
    Ok(())
}
