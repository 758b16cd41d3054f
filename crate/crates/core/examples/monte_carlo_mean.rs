//! Expected value of the coupled solution by ensemble averaging. Runs A3 on
//! growing random ensembles and reports the mean of a scalar output with
//! its estimated standard error.

use ensemble_heat::ensemble::{
    monte_carlo_mean, run, Algorithm, Discretization, ProblemSpec, StepperConfig,
};
use ensemble_heat::fem::norm_l2;
use ensemble_heat::harness::random_samples;
use ensemble_heat::Subdomain;

pub fn run_example(n: usize) -> ensemble_heat::Result<Vec<f64>> {
    let disc = Discretization::structured(n)?;
    let mut std_errors = Vec::new();
    for j in [2, 4, 8] {
        let samples = random_samples(j, 7, 1.0, 0.1)?;
        let problem = ProblemSpec::unforced(samples, 1.0);
        let out = run(
            &disc,
            &problem,
            &StepperConfig::new(0.01, 0.1, Algorithm::A3)?,
        )?;

        // mass of u2 at t = 0.1, per sample
        let lower = &disc.ops(Subdomain::Lower).mass;
        let q: Vec<f64> = out.state.u[1]
            .iter()
            .map(|u| lower.matvec(u).map(|mu| mu.iter().sum()))
            .collect::<ensemble_heat::Result<_>>()?;
        let m = q.len() as f64;
        let mean = q.iter().sum::<f64>() / m;
        let var = q.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();

        let [u1, _] = monte_carlo_mean(&out.state);
        let e1 = norm_l2(&disc.ops(Subdomain::Upper).mass, &u1)?;
        println!(
            "J x J = {:>3}: E[int u2] = {mean:.6} +- {se:.2e}   |E[u1]| = {e1:.6}",
            j * j
        );
        std_errors.push(se);
    }
    Ok(std_errors)
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let n = std::env::args()
        .nth(1)
        .map_or(8, |s| s.parse().expect("cells per unit length"));
    run_example(n)?;
    Ok(())
}
