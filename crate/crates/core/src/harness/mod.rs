//! Experiment drivers: manufactured solution, convergence, stability and
//! timing studies, configuration and the command line.

mod cli;
pub mod config;
pub mod convergence;
pub mod manufactured;
pub mod stability;
pub mod timing;

use crate::error::Result;
use crate::random::{
    draw_samples, CoefficientField, NuModel, Pairing, SampleSet, SampleSpec, ScalarLaw,
};

pub use cli::cli_main;
pub use config::{Case, Experiment, RunConfig};
pub use convergence::{
    compute_rates, run_convergence_study, ConvergenceConfig, ConvergenceTable, Norm,
};
pub use manufactured::{
    check_manufactured, derive_forcing, manufactured_problem, ManufacturedSolution,
};
pub use stability::{run_stability_study, EnergySeries, StabilityConfig};
pub use timing::{run_timing_study, TimingConfig, TimingRow};

/// Friction values of the deterministic-diffusion case.
pub const CASE1_KAPPA: [f64; 3] = [0.01, 1.0, 10.0];
/// Random offsets of the sinusoidal diffusion in the tensor case.
pub const CASE2_EPS: [f64; 3] = [0.6207, 0.1841, 0.2691];
/// Time step sweep of the stability study.
pub const STABILITY_DTS: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
/// Sinusoid base used for unforced long-time runs; the unit base turns
/// negative once `t` passes roughly `pi + 0.6`.
pub const LONG_RUN_NU_BASE: f64 = 2.0;

/// Three friction values, `nu = 1` on both subdomains.
pub fn case1_samples(horizon: f64) -> Result<SampleSet> {
    SampleSet::shared_nu(
        CASE1_KAPPA.to_vec(),
        vec![CoefficientField::Constant(1.0); 3],
        horizon,
    )
}

/// The 3 x 3 tensor of friction values and `nu = base + (1 + eps) sin t`,
/// friction in the outer loop.
pub fn case2_samples(base: f64, horizon: f64) -> Result<SampleSet> {
    let spec = SampleSpec {
        kappa: ScalarLaw::Explicit(CASE1_KAPPA.to_vec()),
        omega: ScalarLaw::Explicit(CASE2_EPS.to_vec()),
        nu: NuModel::Sinusoidal { base },
        pairing: Pairing::Tensor,
        horizon,
    };
    let mut set = draw_samples(&spec, 3, 0)?;
    set.seed = None;
    Ok(set)
}

/// `J x J` samples with `kappa = 0.01 + omega` and
/// `nu = base + (1 + omega') sin t`, `omega, omega' ~ U(0, 1)`.
pub fn random_samples(j: usize, seed: u64, base: f64, horizon: f64) -> Result<SampleSet> {
    let spec = SampleSpec {
        kappa: ScalarLaw::Uniform { lo: 0.01, hi: 1.01 },
        omega: ScalarLaw::Uniform { lo: 0.0, hi: 1.0 },
        nu: NuModel::Sinusoidal { base },
        pairing: Pairing::Tensor,
        horizon,
    };
    draw_samples(&spec, j, seed)
}

/// Random inputs of the timing comparison.
pub fn timing_samples(j: usize, seed: u64, horizon: f64) -> Result<SampleSet> {
    random_samples(j, seed, 1.0, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Subdomain;

    #[test]
    fn case_sets() {
        let c1 = case1_samples(1.0).unwrap();
        assert_eq!(c1.kappa_max(), 10.0);
        assert!(c1.nu_is_deterministic());
        let c2 = case2_samples(1.0, 1.0).unwrap();
        assert_eq!(c2.len(), 9);
        assert_eq!(c2.kappa()[..3], [0.01; 3]);
        assert!(case2_samples(1.0, 10.0).is_err());
        assert!(case2_samples(LONG_RUN_NU_BASE, 10.0).is_ok());
        let r = random_samples(4, 1, 1.0, 1.0).unwrap();
        assert_eq!(r.len(), 16);
        assert!(r.kappa().iter().all(|&k| (0.01..1.01).contains(&k)));
        assert!(r.nu(Subdomain::Upper, 3) == r.nu(Subdomain::Lower, 3));
    }
}
