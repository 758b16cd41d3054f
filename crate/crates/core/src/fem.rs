//! P1 finite element operators on one subdomain: mass, variable-coefficient
//! stiffness, interface trace couplings, loads, Dirichlet elimination,
//! norms and errors against exact solutions.

use crate::error::{Error, Result};
use crate::mesh::{DofMap, Mesh, Point, Subdomain};
use crate::quadrature::{barycentric_to_point, edge_gauss2, QuadratureRule};
use crate::sparse::CsrMatrix;

/// Consistent P1 mass matrix of one triangle.
pub fn local_mass(verts: &[Point; 3]) -> [[f64; 3]; 3] {
    let area = triangle_area(verts);
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

/// P1 stiffness of one triangle for a unit coefficient.
pub fn local_stiffness(verts: &[Point; 3]) -> [[f64; 3]; 3] {
    let area = triangle_area(verts);
    let g = gradients(verts);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    k
}

/// P1 mass matrix on a segment of length `len`, integrated with two-point
/// Gauss.
pub fn local_edge_mass(len: f64) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for (s, w) in edge_gauss2() {
        let phi = [1.0 - s, s];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += len * w * phi[a] * phi[b];
            }
        }
    }
    m
}

fn triangle_area(v: &[Point; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

/// Constant gradients of the three barycentric basis functions.
fn gradients(v: &[Point; 3]) -> [[f64; 2]; 3] {
    let two_a = 2.0 * triangle_area(v);
    [
        [(v[1][1] - v[2][1]) / two_a, (v[2][0] - v[1][0]) / two_a],
        [(v[2][1] - v[0][1]) / two_a, (v[0][0] - v[2][0]) / two_a],
        [(v[0][1] - v[1][1]) / two_a, (v[1][0] - v[0][0]) / two_a],
    ]
}

#[derive(Clone, Debug)]
struct Element {
    dofs: [usize; 3],
    verts: [Point; 3],
    area: f64,
    grads: [[f64; 2]; 3],
    unit_stiffness: [[f64; 3]; 3],
    /// Degree-2 quadrature points in physical coordinates.
    qpoints: [Point; 3],
    /// CSR value slots of the 3x3 element block.
    slots: [[usize; 3]; 3],
}

#[derive(Clone, Debug)]
struct InterfaceEdge {
    dofs: [usize; 2],
    other: [usize; 2],
    len: f64,
}

/// Interface couplings of one subdomain.
#[derive(Clone, Debug)]
pub struct InterfaceOperators {
    /// Own trace against own test functions (`n_i x n_i`).
    pub own: CsrMatrix,
    /// Other subdomain's trace against own test functions (`n_i x n_k`).
    pub cross: CsrMatrix,
}

/// Precomputed element geometry and sparsity pattern for one subdomain.
/// Every assembly reuses the same pattern, so matrices assembled here share
/// their structure and are bit-reproducible.
#[derive(Clone, Debug)]
pub struct SubdomainAssembler {
    pub subdomain: Subdomain,
    pub dofs: DofMap,
    other_dofs: DofMap,
    elements: Vec<Element>,
    edges: Vec<InterfaceEdge>,
    pattern: CsrMatrix,
    rule2: QuadratureRule,
    rule4: QuadratureRule,
}

impl SubdomainAssembler {
    pub fn new(mesh: &Mesh, subdomain: Subdomain) -> Self {
        let dofs = mesh.dof_map(subdomain);
        let other_dofs = mesh.dof_map(subdomain.other());
        let rule2 = QuadratureRule::triangle_degree2();
        let rule4 = QuadratureRule::triangle_degree4();

        let mut triplets = Vec::new();
        let mut elements = Vec::new();
        for tri in mesh.triangles_in(subdomain) {
            let local = tri.map(|g| dofs.local(g).expect("triangle node in its subdomain"));
            let verts = tri.map(|g| mesh.nodes[g]);
            for &a in &local {
                for &b in &local {
                    triplets.push((a, b, 0.0));
                }
            }
            let q = rule2.map_points(&verts);
            elements.push(Element {
                dofs: local,
                verts,
                area: triangle_area(&verts),
                grads: gradients(&verts),
                unit_stiffness: local_stiffness(&verts),
                qpoints: [q[0], q[1], q[2]],
                slots: [[0; 3]; 3],
            });
        }
        let pattern =
            CsrMatrix::from_triplets(dofs.len(), &triplets).expect("local indices in range");
        for e in &mut elements {
            for a in 0..3 {
                let row = e.dofs[a];
                let start = pattern.row_offsets()[row];
                let cols = &pattern.col_indices()[start..pattern.row_offsets()[row + 1]];
                for b in 0..3 {
                    let k = cols
                        .binary_search(&e.dofs[b])
                        .expect("pattern covers element");
                    e.slots[a][b] = start + k;
                }
            }
        }

        let edges = mesh
            .interface_edges
            .iter()
            .map(|e| {
                let [p, q] = e.map(|g| mesh.nodes[g]);
                InterfaceEdge {
                    dofs: e.map(|g| dofs.local(g).expect("interface node")),
                    other: e.map(|g| other_dofs.local(g).expect("interface node")),
                    len: ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt(),
                }
            })
            .collect();

        SubdomainAssembler {
            subdomain,
            dofs,
            other_dofs,
            elements,
            edges,
            pattern,
            rule2,
            rule4,
        }
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    fn scatter(&self, f: impl Fn(&Element) -> [[f64; 3]; 3]) -> CsrMatrix {
        let mut m = self.pattern.clone();
        let values = m.values_mut();
        for e in &self.elements {
            let local = f(e);
            for a in 0..3 {
                for b in 0..3 {
                    values[e.slots[a][b]] += local[a][b];
                }
            }
        }
        m
    }

    pub fn mass(&self) -> CsrMatrix {
        self.scatter(|e| local_mass(&e.verts))
    }

    pub fn stiffness_unit(&self) -> CsrMatrix {
        self.scatter(|e| e.unit_stiffness)
    }

    /// Stiffness with the coefficient sampled at the degree-2 quadrature
    /// points at time `t`. Nonpositive samples are rejected.
    pub fn stiffness<F: Fn(Point, f64) -> f64>(&self, coeff: F, t: f64) -> Result<CsrMatrix> {
        let mut m = self.pattern.clone();
        let values = m.values_mut();
        for e in &self.elements {
            let mut c = 0.0;
            for (q, w) in e.qpoints.iter().zip(&self.rule2.weights) {
                let v = coeff(*q, t);
                if !(v > 0.0) {
                    return Err(Error::NonPositiveCoefficient {
                        value: v,
                        x: q[0],
                        y: q[1],
                        t,
                    });
                }
                c += w * v;
            }
            for a in 0..3 {
                for b in 0..3 {
                    values[e.slots[a][b]] += c * e.unit_stiffness[a][b];
                }
            }
        }
        Ok(m)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Quadrature mean of `coeff(., t)` on every element. With P1 gradients
    /// constant per element this is all the stiffness needs.
    pub fn element_coefficients<F: Fn(Point, f64) -> f64>(&self, coeff: F, t: f64) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| {
                e.qpoints
                    .iter()
                    .zip(&self.rule2.weights)
                    .map(|(q, w)| w * coeff(*q, t))
                    .sum()
            })
            .collect()
    }

    /// Stiffness from per-element coefficients; each must be positive.
    pub fn stiffness_from_elements(&self, coeffs: &[f64]) -> Result<CsrMatrix> {
        self.check_elements(coeffs.len())?;
        let mut m = self.pattern.clone();
        let values = m.values_mut();
        for (e, &c) in self.elements.iter().zip(coeffs) {
            if !(c > 0.0) {
                let p = barycentric_to_point(&[1.0 / 3.0; 3], &e.verts);
                return Err(Error::NonPositiveCoefficient {
                    value: c,
                    x: p[0],
                    y: p[1],
                    t: f64::NAN,
                });
            }
            for a in 0..3 {
                for b in 0..3 {
                    values[e.slots[a][b]] += c * e.unit_stiffness[a][b];
                }
            }
        }
        Ok(m)
    }

    /// `out += K(c) u` for per-element coefficients of any sign; zero
    /// elements are skipped.
    pub fn apply_stiffness_elements(&self, coeffs: &[f64], u: &[f64], out: &mut [f64]) {
        for (e, &c) in self.elements.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            let ue = e.dofs.map(|d| u[d]);
            for a in 0..3 {
                let s: f64 = (0..3).map(|b| e.unit_stiffness[a][b] * ue[b]).sum();
                out[e.dofs[a]] += c * s;
            }
        }
    }

    fn check_elements(&self, len: usize) -> Result<()> {
        if len != self.elements.len() {
            return Err(Error::DimensionMismatch {
                expected: self.elements.len(),
                actual: len,
            });
        }
        Ok(())
    }

    /// `out += K(coeff, t) u` without forming the matrix. The coefficient may
    /// take any sign.
    pub fn apply_stiffness<F: Fn(Point, f64) -> f64>(
        &self,
        coeff: F,
        t: f64,
        u: &[f64],
        out: &mut [f64],
    ) {
        self.apply_stiffness_elements(&self.element_coefficients(coeff, t), u, out);
    }

    pub fn interface_operators(&self) -> Result<InterfaceOperators> {
        if self.edges.is_empty() {
            return Err(Error::EmptyInterface);
        }
        let mut own = Vec::with_capacity(4 * self.edges.len());
        let mut cross = Vec::with_capacity(4 * self.edges.len());
        for e in &self.edges {
            let m = local_edge_mass(e.len);
            for a in 0..2 {
                for b in 0..2 {
                    own.push((e.dofs[a], e.dofs[b], m[a][b]));
                    cross.push((e.dofs[a], e.other[b], m[a][b]));
                }
            }
        }
        Ok(InterfaceOperators {
            own: CsrMatrix::from_triplets(self.len(), &own)?,
            cross: CsrMatrix::from_triplets_rect(self.len(), self.other_dofs.len(), &cross)?,
        })
    }

    /// `(f(., t), phi_k)` for every DOF, degree-2 quadrature.
    pub fn load<F: Fn(Point, f64) -> f64>(&self, f: F, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.load_into(f, t, &mut out);
        out
    }

    /// `out += (f(., t), phi_k)`.
    pub fn load_into<F: Fn(Point, f64) -> f64>(&self, f: F, t: f64, out: &mut [f64]) {
        for e in &self.elements {
            for ((lam, q), w) in self
                .rule2
                .points
                .iter()
                .zip(&e.qpoints)
                .zip(&self.rule2.weights)
            {
                let fq = e.area * w * f(*q, t);
                for a in 0..3 {
                    out[e.dofs[a]] += fq * lam[a];
                }
            }
        }
    }

    /// `|| u_h - u ||_{L2}` with the degree-4 rule.
    pub fn error_l2<F: Fn(Point) -> f64>(&self, u_h: &[f64], exact: F) -> Result<f64> {
        self.check_len(u_h.len())?;
        let mut sum = 0.0;
        for e in &self.elements {
            for (lam, w) in self.rule4.points.iter().zip(&self.rule4.weights) {
                let p = barycentric_to_point(lam, &e.verts);
                let uh: f64 = (0..3).map(|a| lam[a] * u_h[e.dofs[a]]).sum();
                sum += e.area * w * (uh - exact(p)).powi(2);
            }
        }
        Ok(sum.sqrt())
    }

    /// `| u_h - u |_{H1}` (gradient seminorm) with the degree-4 rule.
    pub fn error_h1<G: Fn(Point) -> [f64; 2]>(&self, u_h: &[f64], exact_grad: G) -> Result<f64> {
        self.check_len(u_h.len())?;
        let mut sum = 0.0;
        for e in &self.elements {
            let mut gh = [0.0; 2];
            for a in 0..3 {
                gh[0] += e.grads[a][0] * u_h[e.dofs[a]];
                gh[1] += e.grads[a][1] * u_h[e.dofs[a]];
            }
            for (lam, w) in self.rule4.points.iter().zip(&self.rule4.weights) {
                let g = exact_grad(barycentric_to_point(lam, &e.verts));
                sum += e.area * w * ((gh[0] - g[0]).powi(2) + (gh[1] - g[1]).powi(2));
            }
        }
        Ok(sum.sqrt())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

pub fn assemble_mass(mesh: &Mesh, sub: Subdomain) -> CsrMatrix {
    SubdomainAssembler::new(mesh, sub).mass()
}

pub fn assemble_stiffness<F: Fn(Point, f64) -> f64>(
    mesh: &Mesh,
    sub: Subdomain,
    coeff: F,
    t: f64,
) -> Result<CsrMatrix> {
    SubdomainAssembler::new(mesh, sub).stiffness(coeff, t)
}

pub fn assemble_interface_operators(mesh: &Mesh, sub: Subdomain) -> Result<InterfaceOperators> {
    SubdomainAssembler::new(mesh, sub).interface_operators()
}

pub fn assemble_load<F: Fn(Point, f64) -> f64>(
    mesh: &Mesh,
    sub: Subdomain,
    f: F,
    t: f64,
) -> Vec<f64> {
    SubdomainAssembler::new(mesh, sub).load(f, t)
}

/// A system matrix with Dirichlet rows and columns eliminated symmetrically.
/// The removed column entries are kept so that any right-hand side can be
/// lifted consistently afterwards.
#[derive(Clone, Debug)]
pub struct DirichletSystem {
    pub matrix: CsrMatrix,
    /// `(free row, position in dofs, original entry)`
    couplings: Vec<(usize, usize, f64)>,
    dofs: Vec<usize>,
}

impl DirichletSystem {
    /// `dofs` must be sorted.
    pub fn new(matrix: &CsrMatrix, dofs: &[usize]) -> Self {
        let n = matrix.n_rows();
        let mut position = vec![usize::MAX; n];
        for (k, &d) in dofs.iter().enumerate() {
            position[d] = k;
        }
        let mut triplets = Vec::with_capacity(matrix.nnz());
        let mut couplings = Vec::new();
        for i in 0..n {
            if position[i] != usize::MAX {
                triplets.push((i, i, 1.0));
                continue;
            }
            for (j, v) in matrix.row(i) {
                if position[j] == usize::MAX {
                    triplets.push((i, j, v));
                } else if v != 0.0 {
                    couplings.push((i, position[j], v));
                }
            }
        }
        DirichletSystem {
            matrix: CsrMatrix::from_triplets(n, &triplets).expect("same dimensions"),
            couplings,
            dofs: dofs.to_vec(),
        }
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    /// Moves the Dirichlet columns to the right-hand side and writes the
    /// boundary values into the Dirichlet rows. `values[k]` belongs to
    /// `dofs[k]`.
    pub fn lift(&self, rhs: &mut [f64], values: &[f64]) {
        for &(i, k, v) in &self.couplings {
            rhs[i] -= v * values[k];
        }
        for (&d, &g) in self.dofs.iter().zip(values) {
            rhs[d] = g;
        }
    }
}

/// Symmetric elimination of the Dirichlet DOFs of `dofs` with boundary data
/// `g(x, t)`.
pub fn apply_dirichlet<G: Fn(Point, f64) -> f64>(
    matrix: &CsrMatrix,
    rhs: &[f64],
    mesh: &Mesh,
    dofs: &DofMap,
    g: G,
    t: f64,
) -> (CsrMatrix, Vec<f64>) {
    let sys = DirichletSystem::new(matrix, &dofs.dirichlet);
    let values: Vec<f64> = dofs
        .dirichlet
        .iter()
        .map(|&d| g(mesh.nodes[dofs.nodes[d]], t))
        .collect();
    let mut rhs = rhs.to_vec();
    sys.lift(&mut rhs, &values);
    (sys.matrix, rhs)
}

fn sqrt_form(a: &CsrMatrix, v: &[f64]) -> Result<f64> {
    Ok(a.quadratic_form(v)?.max(0.0).sqrt())
}

/// `sqrt(v^T M v)`
pub fn norm_l2(mass: &CsrMatrix, v: &[f64]) -> Result<f64> {
    sqrt_form(mass, v)
}

/// `sqrt(v^T K(1) v)`
pub fn seminorm_h1(unit_stiffness: &CsrMatrix, v: &[f64]) -> Result<f64> {
    sqrt_form(unit_stiffness, v)
}

/// `sqrt(v^T B_own v)`: L2 norm of the trace on the interface.
pub fn norm_interface(interface_own: &CsrMatrix, v: &[f64]) -> Result<f64> {
    sqrt_form(interface_own, v)
}

/// Product-space norm of a two-subdomain field: `sqrt(||v1||^2 + ||v2||^2)`
/// for the given per-subdomain Gram matrices.
pub fn product_norm(grams: [&CsrMatrix; 2], fields: [&[f64]; 2]) -> Result<f64> {
    let a = grams[0].quadratic_form(fields[0])?;
    let b = grams[1].quadratic_form(fields[1])?;
    Ok((a + b).max(0.0).sqrt())
}

pub fn error_l2<F: Fn(Point) -> f64>(
    mesh: &Mesh,
    sub: Subdomain,
    u_h: &[f64],
    exact: F,
) -> Result<f64> {
    SubdomainAssembler::new(mesh, sub).error_l2(u_h, exact)
}

pub fn error_h1<G: Fn(Point) -> [f64; 2]>(
    mesh: &Mesh,
    sub: Subdomain,
    u_h: &[f64],
    exact_grad: G,
) -> Result<f64> {
    SubdomainAssembler::new(mesh, sub).error_h1(u_h, exact_grad)
}
