//! Certifies local existence for psi_0 with the Picard iteration in the
//! weighted norm and reports the contraction and Lipschitz constants.

use sectorheat::picard::{lipschitz_check, solve_picard, PicardConfig};
use sectorheat::semigroup::{CacheParams, KernelPlan, Method, PsiCache};
use sectorheat::{GridSpec, SectorSpec, Sign, SingularProfile};

fn main() -> sectorheat::Result<()> {
    let spec = SectorSpec::new(1, 1, 0.5, 0.5, Sign::Plus)?;
    let cache = PsiCache::load_or_build(&PsiCache::default_dir(), &spec, CacheParams::default())?;
    let plan = KernelPlan::new(spec, GridSpec::for_sector(&spec, 8.0, 160)?, Method::Quadrature)?.with_cache(cache.clone())?;

    let cfg = PicardConfig::admissible(&spec, &cache, 1.0)?;
    let run = solve_picard(&plan, &SingularProfile::psi0(spec, 1.0), &cfg)?;
    let other = solve_picard(&plan, &SingularProfile::psi0(spec, 0.5), &cfg)?;
    let lip = lipschitz_check(&plan, &run, &other)?;

    println!("T = {:.4e}, M = {}", cfg.horizon, cfg.radius);
    println!("{} sweeps, max ratio {:.4} (bound {:.4})", run.history.len(), run.max_ratio, run.contraction_bound);
    println!("|||u||| = {:.4}, Lipschitz ratio {:.4} (bound {:.4})", run.ball_norm, lip.ratio, lip.bound);
    Ok(())
}
