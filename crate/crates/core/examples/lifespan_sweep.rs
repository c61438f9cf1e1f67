//! Sweeps the amplitude of psi_0 and checks that lambda^sigma T_max(lambda psi_0)
//! is flat.

use sectorheat::evolve::EvolveControls;
use sectorheat::lifespan::{sweep_lifespan, Strategy};
use sectorheat::semigroup::{CacheParams, KernelPlan, Method, PsiCache};
use sectorheat::{GridSpec, SectorSpec, Sign, SingularProfile};

fn main() -> sectorheat::Result<()> {
    let spec = SectorSpec::new(1, 1, 0.5, 0.5, Sign::Plus)?;
    let cache = PsiCache::load_or_build(&PsiCache::default_dir(), &spec, CacheParams::default())?;
    let plan = KernelPlan::new(spec, GridSpec::for_sector(&spec, 16.0, 400)?, Method::Spectral)?.with_cache(cache)?;

    let profile = SingularProfile::psi0(spec, 1.0);
    let curve = sweep_lifespan(&plan, &profile, &[0.5, 1.0, 2.0, 4.0], &EvolveControls::default(), Strategy::Direct)?;
    print!("{}", curve.to_csv());
    Ok(())
}
