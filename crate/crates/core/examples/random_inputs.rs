//! Draws a seeded J x J ensemble of friction and diffusion inputs and
//! reports the bounds that govern A2/A3 stability.

use ensemble_heat::harness::random_samples;
use ensemble_heat::random::{estimate_theta_bounds, ThetaGrid};

pub fn run_example(j: usize, seed: u64) -> ensemble_heat::Result<bool> {
    let set = random_samples(j, seed, 1.0, 1.0)?;
    set.write_manifest(std::io::stdout().lock())?;
    let th = estimate_theta_bounds(&set, &ThetaGrid::new(1.0));
    println!(
        "kappa_max {:.4}  theta {:.4}  theta- {:.4}  theta+ {:.4}  premise {}",
        set.kappa_max(),
        th.theta,
        th.theta_minus,
        th.theta_plus,
        th.premise_holds()
    );
    Ok(th.premise_holds())
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let j = args
        .next()
        .map_or(3, |s| s.parse().expect("draws per input"));
    let seed = args.next().map_or(2024, |s| s.parse().expect("seed"));
    run_example(j, seed)?;
    Ok(())
}
