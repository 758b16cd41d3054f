//! Structured conforming triangulation of the two unit squares
//! `[0,1]x[0,1]` (subdomain 1) and `[0,1]x[-1,0]` (subdomain 2) sharing the
//! interface `y = 0`.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subdomain {
    /// `[0,1] x [0,1]`
    Upper,
    /// `[0,1] x [-1,0]`
    Lower,
}

impl Subdomain {
    pub const ALL: [Subdomain; 2] = [Subdomain::Upper, Subdomain::Lower];

    pub fn index(self) -> usize {
        match self {
            Subdomain::Upper => 0,
            Subdomain::Lower => 1,
        }
    }

    pub fn other(self) -> Subdomain {
        match self {
            Subdomain::Upper => Subdomain::Lower,
            Subdomain::Lower => Subdomain::Upper,
        }
    }

    /// Closed-domain membership test for a point.
    pub fn contains(self, p: Point) -> bool {
        let in_x = (0.0..=1.0).contains(&p[0]);
        match self {
            Subdomain::Upper => in_x && (0.0..=1.0).contains(&p[1]),
            Subdomain::Lower => in_x && (-1.0..=0.0).contains(&p[1]),
        }
    }
}

impl fmt::Display for Subdomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeTag {
    Interior(Subdomain),
    /// On the outer boundary of a subdomain, away from the interface.
    Dirichlet(Subdomain),
    /// On `y = 0`, shared by both subdomains. The two end points are also on
    /// the outer boundary and carry Dirichlet data.
    Interface,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub tri_subdomain: Vec<Subdomain>,
    pub node_tags: Vec<NodeTag>,
    /// Interface edges ordered by increasing `x`.
    pub interface_edges: Vec<[usize; 2]>,
    /// Longest triangle edge.
    pub h: f64,
    /// Cells per unit length.
    pub n: usize,
}

impl Mesh {
    /// Splits each unit square into `n x n` cells and each cell into two
    /// triangles along its SW-NE diagonal.
    pub fn two_domain(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "mesh needs at least one cell per unit length".into(),
            ));
        }
        let cols = n + 1;
        let rows = 2 * n + 1;
        let id = |ix: usize, iy: usize| iy * cols + ix;
        let nf = n as f64;

        let mut nodes = Vec::with_capacity(cols * rows);
        let mut node_tags = Vec::with_capacity(cols * rows);
        for iy in 0..rows {
            // iy = n is exactly y = 0
            let y = (iy as f64 - nf) / nf;
            for ix in 0..cols {
                let x = ix as f64 / nf;
                nodes.push([x, y]);
                let sub = if iy > n {
                    Subdomain::Upper
                } else {
                    Subdomain::Lower
                };
                let tag = if iy == n {
                    NodeTag::Interface
                } else if ix == 0 || ix == n || iy == 0 || iy == rows - 1 {
                    NodeTag::Dirichlet(sub)
                } else {
                    NodeTag::Interior(sub)
                };
                node_tags.push(tag);
            }
        }

        let mut triangles = Vec::with_capacity(4 * n * n);
        let mut tri_subdomain = Vec::with_capacity(4 * n * n);
        for iy in 0..2 * n {
            let sub = if iy >= n {
                Subdomain::Upper
            } else {
                Subdomain::Lower
            };
            for ix in 0..n {
                let sw = id(ix, iy);
                let se = id(ix + 1, iy);
                let ne = id(ix + 1, iy + 1);
                let nw = id(ix, iy + 1);
                triangles.push([sw, se, ne]);
                triangles.push([sw, ne, nw]);
                tri_subdomain.push(sub);
                tri_subdomain.push(sub);
            }
        }

        let interface_edges = (0..n).map(|ix| [id(ix, n), id(ix + 1, n)]).collect();

        Ok(Mesh {
            nodes,
            triangles,
            tri_subdomain,
            node_tags,
            interface_edges,
            h: std::f64::consts::SQRT_2 / nf,
            n,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn signed_area(&self, tri: &[usize; 3]) -> f64 {
        let [a, b, c] = tri.map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn triangles_in(&self, sub: Subdomain) -> impl Iterator<Item = &[usize; 3]> + '_ {
        self.triangles
            .iter()
            .zip(&self.tri_subdomain)
            .filter(move |(_, &s)| s == sub)
            .map(|(t, _)| t)
    }

    /// Whether a node belongs to the closure of `sub`.
    pub fn node_in(&self, node: usize, sub: Subdomain) -> bool {
        match self.node_tags[node] {
            NodeTag::Interior(s) | NodeTag::Dirichlet(s) => s == sub,
            NodeTag::Interface => true,
        }
    }

    /// Whether a node lies on the outer boundary `x = 0`, `x = 1` or `y = +-1`.
    /// This includes the two interface end points.
    pub fn on_outer_boundary(&self, node: usize) -> bool {
        let [x, y] = self.nodes[node];
        x == 0.0 || x == 1.0 || y == 1.0 || y == -1.0
    }

    pub fn interface_nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.interface_edges.iter().map(|e| e[0]).collect();
        if let Some(last) = self.interface_edges.last() {
            out.push(last[1]);
        }
        out
    }

    pub fn dof_map(&self, sub: Subdomain) -> DofMap {
        DofMap::new(self, sub)
    }

    /// Plain-text listing: one `node` record per node, one `tri` record per
    /// triangle and one `iface` record per interface edge.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# n {} h {:.17e}", self.n, self.h)?;
        for (i, (p, tag)) in self.nodes.iter().zip(&self.node_tags).enumerate() {
            let tag = match tag {
                NodeTag::Interior(s) => format!("interior{s}"),
                NodeTag::Dirichlet(s) => format!("dirichlet{s}"),
                NodeTag::Interface => "interface".to_string(),
            };
            writeln!(w, "node {i} {:.17e} {:.17e} {tag}", p[0], p[1])?;
        }
        for (i, (t, s)) in self.triangles.iter().zip(&self.tri_subdomain).enumerate() {
            writeln!(w, "tri {i} {} {} {} {s}", t[0], t[1], t[2])?;
        }
        for (i, e) in self.interface_edges.iter().enumerate() {
            writeln!(w, "iface {i} {} {}", e[0], e[1])?;
        }
        Ok(())
    }
}

/// Compact per-subdomain numbering of the nodes of a closed subdomain.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub subdomain: Subdomain,
    global_to_local: Vec<Option<usize>>,
    /// Local index -> global node.
    pub nodes: Vec<usize>,
    /// Local indices carrying Dirichlet data (outer boundary, including the
    /// interface end points).
    pub dirichlet: Vec<usize>,
    /// Local indices of interface nodes, ordered by increasing `x`.
    pub interface: Vec<usize>,
}

impl DofMap {
    fn new(mesh: &Mesh, sub: Subdomain) -> DofMap {
        let mut global_to_local = vec![None; mesh.num_nodes()];
        let mut nodes = Vec::new();
        let mut dirichlet = Vec::new();
        for g in 0..mesh.num_nodes() {
            if mesh.node_in(g, sub) {
                let local = nodes.len();
                global_to_local[g] = Some(local);
                nodes.push(g);
                if mesh.on_outer_boundary(g) {
                    dirichlet.push(local);
                }
            }
        }
        let interface = mesh
            .interface_nodes()
            .into_iter()
            .map(|g| global_to_local[g].expect("interface node belongs to both subdomains"))
            .collect();
        DofMap {
            subdomain: sub,
            global_to_local,
            nodes,
            dirichlet,
            interface,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn local(&self, global: usize) -> Option<usize> {
        self.global_to_local.get(global).copied().flatten()
    }

    pub fn is_dirichlet(&self, local: usize) -> bool {
        self.dirichlet.binary_search(&local).is_ok()
    }

    /// Nodal interpolant of `f` on this subdomain.
    pub fn interpolate(&self, mesh: &Mesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&g| f(mesh.nodes[g])).collect()
    }
}

/// Both subdomain DOF maps, indexed by [`Subdomain::index`].
pub fn dof_maps(mesh: &Mesh) -> [DofMap; 2] {
    [
        mesh.dof_map(Subdomain::Upper),
        mesh.dof_map(Subdomain::Lower),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n2_counts() {
        let m = Mesh::two_domain(2).unwrap();
        assert_eq!(m.num_nodes(), 15);
        assert_eq!(m.triangles.len(), 16);
        assert_eq!(m.interface_edges.len(), 2);
        let [d1, d2] = dof_maps(&m);
        assert_eq!(d1.len(), 9);
        assert_eq!(d2.len(), 9);
    }

    #[test]
    fn n1_single_interface_edge() {
        let m = Mesh::two_domain(1).unwrap();
        assert_eq!(m.interface_edges.len(), 1);
        let [a, b] = m.interface_edges[0];
        assert_eq!(m.nodes[a], [0.0, 0.0]);
        assert_eq!(m.nodes[b], [1.0, 0.0]);
        let [d1, d2] = dof_maps(&m);
        assert_eq!((d1.len(), d2.len()), (4, 4));
        assert_eq!(d1.interface.len(), 2);
        // every n = 1 node is on the outer boundary
        assert_eq!(d1.dirichlet.len(), 4);
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(matches!(
            Mesh::two_domain(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn areas_partition_unit_squares() {
        let m = Mesh::two_domain(32).unwrap();
        for sub in Subdomain::ALL {
            let area: f64 = m.triangles_in(sub).map(|t| m.signed_area(t)).sum();
            assert!((area - 1.0).abs() < 1e-12, "{sub}: {area}");
        }
        assert!(m.triangles.iter().all(|t| m.signed_area(t) > 0.0));
    }

    #[test]
    fn refinement_halves_h_exactly() {
        for n in [1, 3, 4, 7, 16] {
            let a = Mesh::two_domain(n).unwrap();
            let b = Mesh::two_domain(2 * n).unwrap();
            assert_eq!(b.h, a.h / 2.0);
        }
    }

    #[test]
    fn interface_nodes_shared_and_tagged() {
        for n in [1, 2, 5, 8] {
            let m = Mesh::two_domain(n).unwrap();
            let iface = m.interface_nodes();
            assert_eq!(iface.len(), n + 1);
            for &g in &iface {
                assert_eq!(m.node_tags[g], NodeTag::Interface);
                assert_eq!(m.nodes[g][1], 0.0);
            }
            // traces seen from the triangles of each subdomain are the same nodes
            for sub in Subdomain::ALL {
                let mut seen: Vec<usize> = m
                    .triangles_in(sub)
                    .flatten()
                    .copied()
                    .filter(|&g| m.nodes[g][1] == 0.0)
                    .collect();
                seen.sort_unstable();
                seen.dedup();
                assert_eq!(seen, iface);
            }
        }
    }

    #[test]
    fn dirichlet_tags_on_outer_boundary() {
        let m = Mesh::two_domain(4).unwrap();
        for (g, tag) in m.node_tags.iter().enumerate() {
            let [x, y] = m.nodes[g];
            match tag {
                NodeTag::Dirichlet(_) => assert!(m.on_outer_boundary(g) && y != 0.0),
                NodeTag::Interface => assert!(y == 0.0 && (0.0..=1.0).contains(&x)),
                NodeTag::Interior(_) => assert!(!m.on_outer_boundary(g)),
            }
        }
    }

    #[test]
    fn dump_has_one_record_per_entity() {
        let m = Mesh::two_domain(2).unwrap();
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("node ")).count(), 15);
        assert_eq!(text.lines().filter(|l| l.starts_with("tri ")).count(), 16);
        assert_eq!(text.lines().filter(|l| l.starts_with("iface ")).count(), 2);
    }
}
