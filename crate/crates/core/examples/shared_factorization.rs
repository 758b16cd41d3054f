//! One Cholesky factorization, many right-hand sides: the core trick of the
//! ensemble algorithms.

use std::time::Instant;

use ensemble_heat::fem::{DirichletSystem, SubdomainAssembler};
use ensemble_heat::sparse::{factorize_spd, relative_residual};
use ensemble_heat::{Mesh, Subdomain};

pub fn run_example(n: usize, columns: usize) -> ensemble_heat::Result<f64> {
    let mesh = Mesh::two_domain(n)?;
    let asm = SubdomainAssembler::new(&mesh, Subdomain::Lower);
    let dt = 1.0 / (n * n) as f64;
    let mut a = asm
        .stiffness_unit()
        .add_scaled(1.0, &asm.mass(), 1.0 / dt)?;
    a = a.add_scaled(1.0, &asm.interface_operators()?.own, 10.0)?;
    let dofs = mesh.dof_map(Subdomain::Lower);
    let sys = DirichletSystem::new(&a, &dofs.dirichlet);

    let start = Instant::now();
    let factor = factorize_spd(&sys.matrix)?;
    let t_factor = start.elapsed();

    let mut rhs: Vec<Vec<f64>> = (0..columns)
        .map(|j| asm.load(|p, _| (1.0 + j as f64) * p[0] * (1.0 - p[0]), 0.0))
        .collect();
    let zeros = vec![0.0; dofs.dirichlet.len()];
    for b in &mut rhs {
        sys.lift(b, &zeros);
    }
    let b = rhs.clone();
    let start = Instant::now();
    factor.solve_many_par(&mut rhs)?;
    let t_solve = start.elapsed();

    let mut worst: f64 = 0.0;
    for (x, b) in rhs.iter().zip(&b) {
        worst = worst.max(relative_residual(&sys.matrix, x, b)?);
    }
    println!(
        "{} unknowns, {} factor entries: factorization {:?}, {columns} solves {:?}, worst residual {worst:.1e}",
        sys.matrix.n_rows(),
        factor.factor_len(),
        t_factor,
        t_solve
    );
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args
        .next()
        .map_or(32, |s| s.parse().expect("cells per unit length"));
    let columns = args
        .next()
        .map_or(100, |s| s.parse().expect("number of right-hand sides"));
    run_example(n, columns)?;
    Ok(())
}
