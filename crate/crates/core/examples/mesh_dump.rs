//! Builds the two-subdomain mesh and prints its layout.
//!
//! ```bash
//! cargo run --example mesh_dump -- 4 > mesh.txt
//! ```

use ensemble_heat::{Mesh, Subdomain};

pub fn run_example(n: usize) -> ensemble_heat::Result<Mesh> {
    let mesh = Mesh::two_domain(n)?;
    eprintln!(
        "{} nodes, interface has {} edges",
        mesh.num_nodes(),
        mesh.interface_edges.len()
    );
    for sub in Subdomain::ALL {
        let dofs = mesh.dof_map(sub);
        eprintln!(
            "u{sub}: {} triangles, {} dofs, {} Dirichlet, {} on the interface",
            mesh.triangles_in(sub).count(),
            dofs.len(),
            dofs.dirichlet.len(),
            dofs.interface.len()
        );
    }
    Ok(mesh)
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let n = std::env::args()
        .nth(1)
        .map_or(4, |s| s.parse().expect("cells per unit length"));
    let mesh = run_example(n)?;
    mesh.write_dump(std::io::stdout().lock())?;
    Ok(())
}
