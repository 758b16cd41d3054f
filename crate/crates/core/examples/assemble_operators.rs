//! Assembles mass, stiffness and interface matrices on one subdomain and
//! checks a few identities that hold for any P1 mesh.

use ensemble_heat::fem::SubdomainAssembler;
use ensemble_heat::{Mesh, Subdomain};

pub fn run_example(n: usize) -> ensemble_heat::Result<[f64; 3]> {
    let mesh = Mesh::two_domain(n)?;
    let asm = SubdomainAssembler::new(&mesh, Subdomain::Upper);
    let ones = vec![1.0; asm.len()];

    // 1^T M 1 is the area, K 1 = 0, 1^T B 1 is the interface length
    let area = asm.mass().quadratic_form(&ones)?;
    let k = asm.stiffness(|p, _| 1.0 + p[0], 0.0)?;
    let kernel = k.matvec(&ones)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let iface = asm.interface_operators()?;
    let length = iface.own.quadratic_form(&ones)?;

    println!(
        "n = {n}: {} dofs, nnz(M) = {}, nnz(B_cross) = {}",
        asm.len(),
        k.nnz(),
        iface.cross.nnz()
    );
    println!("area {area:.15}  |K 1|_inf {kernel:.2e}  interface length {length:.15}");
    Ok([area, kernel, length])
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let n = std::env::args()
        .nth(1)
        .map_or(8, |s| s.parse().expect("cells per unit length"));
    run_example(n)?;
    Ok(())
}
