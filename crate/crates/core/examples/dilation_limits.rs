//! Dilates a modulated profile, looks for a limit on an annulus and applies the
//! blow-up criterion to the dilated data.

use sectorheat::lifespan::{blowup_criterion_check, dilation_limits, Annulus, DilationProbe};
use sectorheat::semigroup::{CacheParams, KernelPlan, Method, PsiCache};
use sectorheat::{GridSpec, Modulation, SectorSpec, Sign, SingularProfile};

fn main() -> sectorheat::Result<()> {
    let spec = SectorSpec::new(1, 0, 0.5, 1.0, Sign::Plus)?;
    let cache = PsiCache::load_or_build(&PsiCache::default_dir(), &spec, CacheParams::default())?;
    let plan = KernelPlan::new(spec, GridSpec::for_sector(&spec, 16.0, 400)?, Method::Spectral)?.with_cache(cache)?;

    let profile = SingularProfile::modulated(spec, Modulation::LogBump { height: 1.0, width: 1.0, shift: 0.0 }, 1.0);
    let lambdas = [1e1, 1e2, 1e3];
    let probe = dilation_limits(&profile, &lambdas, &Annulus::new(0.5, 2.0, 24)?)?;
    println!("consecutive L1 distances {:?}", probe.consecutive_distances);

    let z = DilationProbe::field_for(&plan, &profile, lambdas[2])?;
    let report = blowup_criterion_check(&plan, &z, 1e-6)?;
    println!("verdict {:?} ({})", report.verdict, report.regime);
    Ok(())
}
