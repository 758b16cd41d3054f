//! Checks the closed-form forcing of the manufactured solution against
//! finite differences, for constant and sinusoidal diffusion.

use ensemble_heat::harness::{
    case1_samples, case2_samples, check_manufactured, ManufacturedSolution,
};

pub fn run_example(points: usize) -> ensemble_heat::Result<f64> {
    let mut worst: f64 = 0.0;
    for (name, set) in [
        ("constant", case1_samples(1.0)?),
        ("sinusoidal", case2_samples(1.0, 1.0)?),
    ] {
        for j in 0..set.len() {
            let ms = ManufacturedSolution::for_sample(1.0, &set, j)?;
            let g = check_manufactured(&ms, 1.0, points, j as u64);
            println!(
                "{name:>10} s{j}: c = {:?}  pde {:.2e}  interface {:.2e}",
                ms.constants(0.0),
                g.pde_residual,
                g.interface_residual
            );
            worst = worst.max(g.pde_residual).max(g.interface_residual);
        }
    }
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let worst = run_example(1000)?;
    println!("worst residual {worst:.2e}");
    Ok(())
}
