//! Starts below the smallness threshold at t0 and checks that the solution stays
//! under twice the linear flow up to the horizon.

use sectorheat::evolve::EvolveControls;
use sectorheat::lifespan::global_smallness_check;
use sectorheat::semigroup::{CacheParams, KernelPlan, Method, PsiCache};
use sectorheat::{GridSpec, SectorSpec, Sign};

fn main() -> sectorheat::Result<()> {
    let spec = SectorSpec::new(1, 1, 0.5, 2.0, Sign::Plus)?;
    let cache = PsiCache::load_or_build(&PsiCache::default_dir(), &spec, CacheParams::default())?;
    let plan = KernelPlan::new(spec, GridSpec::for_sector(&spec, 40.0, 300)?, Method::Spectral)?.with_cache(cache)?;

    let rep = global_smallness_check(&plan, 1.0, None, 20.0, 10, &EvolveControls::default())?;
    println!(
        "lambda {:.4e} (threshold {:.4e}), {} to t = {}, max ratio {:.4}",
        rep.lambda,
        rep.lambda_threshold,
        rep.status.as_str(),
        rep.horizon,
        rep.max_ratio
    );
    Ok(())
}
