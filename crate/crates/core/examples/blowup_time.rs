//! Estimates the blow-up time of psi_0 by Strang splitting and compares it with
//! the a priori upper bound t*.

use sectorheat::evolve::{estimate_tmax, EvolveControls};
use sectorheat::semigroup::{CacheParams, KernelPlan, Method, PsiCache};
use sectorheat::{GridSpec, SectorSpec, Sign, SingularProfile};

fn main() -> sectorheat::Result<()> {
    let spec = SectorSpec::new(1, 1, 0.5, 0.5, Sign::Plus)?;
    let cache = PsiCache::load_or_build(&PsiCache::default_dir(), &spec, CacheParams::default())?;
    let t_star = cache.apriori_blowup_bound(&spec)?;
    let plan = KernelPlan::new(spec, GridSpec::for_sector(&spec, 16.0, 400)?, Method::Spectral)?.with_cache(cache)?;

    let rec = estimate_tmax(&plan, &SingularProfile::psi0(spec, 1.0), &EvolveControls::default())?;
    println!("status {}", rec.status.as_str());
    if let Some(t) = rec.t_max {
        println!("T_max = {t:.5} +/- {:.1e}, t* = {t_star:.5}", rec.uncertainty.unwrap_or(0.0));
    }
    Ok(())
}
