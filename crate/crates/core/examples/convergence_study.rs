//! Manufactured-solution convergence table for one algorithm.
//!
//! ```bash
//! cargo run --release --example convergence_study -- a3 4,8,16,32
//! ```

use ensemble_heat::ensemble::Algorithm;
use ensemble_heat::harness::{
    case1_samples, case2_samples, run_convergence_study, ConvergenceConfig, Norm,
};
use ensemble_heat::mesh::Subdomain;

pub fn run_example(algorithm: Algorithm, meshes: Vec<usize>) -> ensemble_heat::Result<Vec<f64>> {
    let samples = match algorithm {
        Algorithm::A1 => case1_samples(1.0)?,
        _ => case2_samples(1.0, 1.0)?,
    };
    let table = run_convergence_study(&ConvergenceConfig {
        algorithm,
        meshes,
        t_final: 1.0,
        samples,
        amplitude: 1.0,
        solver: Default::default(),
    })?;

    for norm in [Norm::RelL2, Norm::RelH1] {
        for sub in Subdomain::ALL {
            println!("{norm:?} error of u{sub} ({algorithm})");
            for j in 0..table.num_samples() {
                let errs = table.series(norm, sub, j);
                let rates = table.rates(norm, sub, j);
                let errs: Vec<String> = errs.iter().map(|e| format!("{e:.6}")).collect();
                let rates: Vec<String> = rates
                    .iter()
                    .map(|r| r.map_or("--".into(), |r| format!("{r:.2}")))
                    .collect();
                println!("  s{j}: {}  rates {}", errs.join(" "), rates.join(" "));
            }
        }
    }
    Ok(table.series(Norm::RelL2, Subdomain::Upper, 0))
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let algorithm = args.next().map_or(Ok(Algorithm::A2), |a| a.parse())?;
    let meshes = args
        .next()
        .map(|m| {
            m.split(',')
                .map(|s| s.parse().expect("mesh size"))
                .collect()
        })
        .unwrap_or_else(|| vec![4, 8, 16]);
    run_example(algorithm, meshes)?;
    Ok(())
}
