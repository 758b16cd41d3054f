//! Unforced long-time runs over a sweep of time steps. The energy of the
//! ensemble mean should decay monotonically for every step size.
//!
//! ```bash
//! cargo run --release --example stability_study -- a3 32
//! ```

use ensemble_heat::ensemble::{Algorithm, EnergyMode};
use ensemble_heat::harness::{case1_samples, case2_samples, run_stability_study, StabilityConfig};
use ensemble_heat::harness::{LONG_RUN_NU_BASE, STABILITY_DTS};

pub fn run_example(
    algorithm: Algorithm,
    n: usize,
    t_final: f64,
) -> ensemble_heat::Result<Vec<f64>> {
    let samples = match algorithm {
        Algorithm::A1 => case1_samples(t_final)?,
        _ => case2_samples(LONG_RUN_NU_BASE, t_final)?,
    };
    let series = run_stability_study(&StabilityConfig {
        algorithm,
        n,
        dts: STABILITY_DTS.to_vec(),
        t_final,
        samples,
        u0: 1.0,
        energy_mode: EnergyMode::MeanThenNorm,
        solver: Default::default(),
    })?;
    println!(
        "{:>6} {:>12} {:>12} {:>8} {:>10}",
        "dt", "E(0)", "E(T)", "monotone", "bound"
    );
    for s in &series {
        println!(
            "{:>6} {:>12.6e} {:>12.6e} {:>8} {:>10.4}",
            s.dt,
            s.initial(),
            s.last(),
            s.is_nonincreasing(),
            s.bound.worst_ratio()
        );
    }
    Ok(series.iter().map(|s| s.last() / s.initial()).collect())
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let algorithm = args.next().map_or(Ok(Algorithm::A2), |a| a.parse())?;
    let n = args
        .next()
        .map_or(16, |s| s.parse().expect("cells per unit length"));
    run_example(algorithm, n, 10.0)?;
    Ok(())
}
