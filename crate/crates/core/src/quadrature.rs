//! Quadrature rules on triangles (barycentric points, weights summing to 1)
//! and on edges (reference parameter in `[0,1]`, weights summing to 1).
//! Multiply by the element area or edge length when integrating.

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Three interior points, exact for polynomials of degree 2.
    pub fn triangle_degree2() -> Self {
        let a = 2.0 / 3.0;
        let b = 1.0 / 6.0;
        QuadratureRule {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Six-point symmetric rule, exact for polynomials of degree 4.
    pub fn triangle_degree4() -> Self {
        let a1 = 0.445_948_490_915_964_9;
        let w1 = 0.223_381_589_678_011_47;
        let a2 = 0.091_576_213_509_770_74;
        let w2 = 0.109_951_743_655_321_87;
        let b1 = 1.0 - 2.0 * a1;
        let b2 = 1.0 - 2.0 * a2;
        QuadratureRule {
            points: vec![
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![w1, w1, w1, w2, w2, w2],
            degree: 4,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical coordinates of the rule's points on triangle `verts`.
    pub fn map_points(&self, verts: &[[f64; 2]; 3]) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .map(|l| barycentric_to_point(l, verts))
            .collect()
    }
}

pub fn barycentric_to_point(l: &[f64; 3], v: &[[f64; 2]; 3]) -> [f64; 2] {
    [
        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
    ]
}

/// Two-point Gauss-Legendre on an edge: `(s, w)` pairs with `s in [0,1]`,
/// exact for cubics along the edge.
pub fn edge_gauss2() -> [(f64, f64); 2] {
    let d = 0.5 / 3f64.sqrt();
    [(0.5 - d, 0.5), (0.5 + d, 0.5)]
}
