//! Smooth exact solution of the coupled problem for convergence tests.
//!
//! ```text
//! u1 = a x(1-x)(1-y) e^{-t}
//! u2 = a x(1-x)(c1 + c2 y + c3 y^2) e^{-t}
//! c1 = 1 + nu1/kappa,  c2 = -nu1/nu2,  c3 = c2 - c1
//! ```
//!
//! The constants follow the diffusion coefficients in time, so the forcing
//! of `u2` carries their time derivatives.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::ProblemSpec;
use crate::error::{Error, Result};
use crate::mesh::{Point, Subdomain};
use crate::random::{CoefficientField, SampleSet};

#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedSolution {
    pub a: f64,
    pub kappa: f64,
    pub nu1: CoefficientField,
    pub nu2: CoefficientField,
}

impl ManufacturedSolution {
    /// Rejects families without a time derivative.
    pub fn new(a: f64, kappa: f64, nu1: CoefficientField, nu2: CoefficientField) -> Result<Self> {
        for nu in [&nu1, &nu2] {
            if nu.time_derivative(0.0).is_none() {
                return Err(Error::UnsupportedFamily(format!(
                    "{nu} is not differentiable in time"
                )));
            }
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("kappa = {kappa}")));
        }
        Ok(ManufacturedSolution { a, kappa, nu1, nu2 })
    }

    /// Solution for sample `j` of a sample set.
    pub fn for_sample(a: f64, set: &SampleSet, j: usize) -> Result<Self> {
        ManufacturedSolution::new(
            a,
            set.kappa()[j],
            set.nu(Subdomain::Upper, j).clone(),
            set.nu(Subdomain::Lower, j).clone(),
        )
    }

    fn nu(&self, t: f64) -> (f64, f64) {
        (self.nu1.eval([0.0; 2], t), self.nu2.eval([0.0; 2], t))
    }

    fn nu_dot(&self, t: f64) -> (f64, f64) {
        let d = |f: &CoefficientField| f.time_derivative(t).expect("checked at construction");
        (d(&self.nu1), d(&self.nu2))
    }

    pub fn constants(&self, t: f64) -> [f64; 3] {
        let (n1, n2) = self.nu(t);
        let c1 = 1.0 + n1 / self.kappa;
        let c2 = -n1 / n2;
        [c1, c2, c2 - c1]
    }

    pub fn u(&self, sub: Subdomain, p: Point, t: f64) -> f64 {
        let [x, y] = p;
        let s = self.a * x * (1.0 - x) * (-t).exp();
        match sub {
            Subdomain::Upper => s * (1.0 - y),
            Subdomain::Lower => {
                let [c1, c2, c3] = self.constants(t);
                s * (c1 + c2 * y + c3 * y * y)
            }
        }
    }

    pub fn grad(&self, sub: Subdomain, p: Point, t: f64) -> [f64; 2] {
        let [x, y] = p;
        let e = self.a * (-t).exp();
        let (q, qy) = match sub {
            Subdomain::Upper => (1.0 - y, -1.0),
            Subdomain::Lower => {
                let [c1, c2, c3] = self.constants(t);
                (c1 + c2 * y + c3 * y * y, c2 + 2.0 * c3 * y)
            }
        };
        [e * (1.0 - 2.0 * x) * q, e * x * (1.0 - x) * qy]
    }

    /// Forcing `u_t - nu Laplacian(u)` in closed form.
    pub fn forcing(&self, sub: Subdomain, p: Point, t: f64) -> f64 {
        let [x, y] = p;
        let e = self.a * (-t).exp();
        let bubble = x * (1.0 - x);
        match sub {
            Subdomain::Upper => {
                let n1 = self.nu1.eval(p, t);
                e * (1.0 - y) * (2.0 * n1 - bubble)
            }
            Subdomain::Lower => {
                let (n1, n2) = self.nu(t);
                let (d1, d2) = self.nu_dot(t);
                let c1 = 1.0 + n1 / self.kappa;
                let c2 = -n1 / n2;
                let c3 = c2 - c1;
                let e1 = d1 / self.kappa;
                let e2 = -(d1 * n2 - n1 * d2) / (n2 * n2);
                let e3 = e2 - e1;
                let q = c1 + y * (c2 + c3 * y);
                let q_t = e1 + y * (e2 + e3 * y);
                e * (bubble * (q_t - q) + 2.0 * n2 * (q - c3 * bubble))
            }
        }
    }
}

/// The two forcing functions of a manufactured solution.
pub fn derive_forcing(
    ms: &ManufacturedSolution,
) -> (
    impl Fn(Point, f64) -> f64 + '_,
    impl Fn(Point, f64) -> f64 + '_,
) {
    (
        move |p, t| ms.forcing(Subdomain::Upper, p, t),
        move |p, t| ms.forcing(Subdomain::Lower, p, t),
    )
}

/// Largest residuals found by [`check_manufactured`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateReport {
    pub pde_residual: f64,
    pub interface_residual: f64,
}

/// Fourth-order central difference.
fn d4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Checks the closed-form forcing and both interface conditions against
/// finite differences at `points` random space-time points in `[0, t_max]`.
/// The solution is quadratic in `x` and `y`, so the spatial differences are
/// exact up to rounding; time derivatives use a fourth-order stencil.
pub fn check_manufactured(
    ms: &ManufacturedSolution,
    t_max: f64,
    points: usize,
    seed: u64,
) -> GateReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hs = 0.125;
    let ht = 1e-3;
    let mut pde: f64 = 0.0;
    let mut iface: f64 = 0.0;
    for _ in 0..points {
        let t = rng.gen_range(0.0..=t_max);
        let x = rng.gen::<f64>();
        for sub in Subdomain::ALL {
            let y = match sub {
                Subdomain::Upper => rng.gen::<f64>(),
                Subdomain::Lower => -rng.gen::<f64>(),
            };
            let u = |px: f64, py: f64, s: f64| ms.u(sub, [px, py], s);
            let u_t = d4(|s| u(x, y, s), t, ht);
            let lap = (u(x + hs, y, t) + u(x - hs, y, t) + u(x, y + hs, t) + u(x, y - hs, t)
                - 4.0 * u(x, y, t))
                / (hs * hs);
            let nu = match sub {
                Subdomain::Upper => ms.nu1.eval([x, y], t),
                Subdomain::Lower => ms.nu2.eval([x, y], t),
            };
            pde = pde.max((u_t - nu * lap - ms.forcing(sub, [x, y], t)).abs());
        }
        // -nu_i du_i/dn_i = kappa (u_i - u_k) on y = 0, with n_1 = -e_y, n_2 = e_y
        let dy = |sub: Subdomain| (ms.u(sub, [x, hs], t) - ms.u(sub, [x, -hs], t)) / (2.0 * hs);
        let u1 = ms.u(Subdomain::Upper, [x, 0.0], t);
        let u2 = ms.u(Subdomain::Lower, [x, 0.0], t);
        let (n1, n2) = ms.nu(t);
        iface = iface.max((n1 * dy(Subdomain::Upper) - ms.kappa * (u1 - u2)).abs());
        iface = iface.max((-n2 * dy(Subdomain::Lower) - ms.kappa * (u2 - u1)).abs());
    }
    GateReport {
        pde_residual: pde,
        interface_residual: iface,
    }
}

/// Manufactured problem for every sample of `set`: exact initial data,
/// forcing and boundary values.
pub fn manufactured_problem(
    set: &SampleSet,
    a: f64,
) -> Result<(ProblemSpec, Arc<Vec<ManufacturedSolution>>)> {
    let sols: Arc<Vec<ManufacturedSolution>> = Arc::new(
        (0..set.len())
            .map(|j| ManufacturedSolution::for_sample(a, set, j))
            .collect::<Result<_>>()?,
    );
    let u = sols.clone();
    let f = sols.clone();
    let g = sols.clone();
    let problem = ProblemSpec {
        samples: set.clone(),
        initial: Arc::new(move |j, sub, p, _| u[j].u(sub, p, 0.0)),
        forcing: Some(Arc::new(move |j, sub, p, t| f[j].forcing(sub, p, t))),
        dirichlet: Some(Arc::new(move |j, sub, p, t| g[j].u(sub, p, t))),
    };
    Ok((problem, sols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(kappa: f64) -> ManufacturedSolution {
        ManufacturedSolution::new(
            1.0,
            kappa,
            CoefficientField::Constant(1.0),
            CoefficientField::Constant(1.0),
        )
        .unwrap()
    }

    fn sinusoidal(kappa: f64, eps: f64) -> ManufacturedSolution {
        let nu = CoefficientField::SinusoidalInTime {
            base: 1.0,
            amplitude: 1.0 + eps,
        };
        ManufacturedSolution::new(1.0, kappa, nu.clone(), nu).unwrap()
    }

    #[test]
    fn forcing_at_centre() {
        let ms = constant(1.0);
        assert!((ms.u(Subdomain::Upper, [0.5, 0.5], 0.0) - 0.125).abs() < 1e-15);
        assert!((ms.forcing(Subdomain::Upper, [0.5, 0.5], 0.0) - 0.875).abs() < 1e-15);
        assert!(ms.forcing(Subdomain::Upper, [0.5, 0.5], 60.0).abs() < 1e-25);
    }

    #[test]
    fn vanishes_on_outer_boundary() {
        for ms in [constant(0.01), sinusoidal(10.0, 0.6207)] {
            for k in 0..=10 {
                let s = k as f64 / 10.0;
                for t in [0.0, 0.4, 1.0] {
                    assert_eq!(ms.u(Subdomain::Upper, [0.0, s], t), 0.0);
                    assert_eq!(ms.u(Subdomain::Upper, [1.0, s], t), 0.0);
                    assert!(ms.u(Subdomain::Upper, [s, 1.0], t).abs() < 1e-15);
                    assert!(ms.u(Subdomain::Lower, [s, -1.0], t).abs() < 1e-12);
                    assert_eq!(ms.u(Subdomain::Lower, [0.0, -s], t), 0.0);
                }
            }
        }
    }

    #[test]
    fn residual_gate_constant_nu() {
        for kappa in [0.01, 1.0, 10.0] {
            let r = check_manufactured(&constant(kappa), 1.0, 1000, 1);
            assert!(r.pde_residual <= 1e-10, "{r:?}");
            assert!(r.interface_residual <= 1e-10, "{r:?}");
        }
    }

    #[test]
    fn residual_gate_sinusoidal_nu() {
        for kappa in [0.01, 1.0, 10.0] {
            for eps in [0.6207, 0.1841, 0.2691] {
                let r = check_manufactured(&sinusoidal(kappa, eps), 1.0, 1000, 2);
                assert!(r.pde_residual <= 1e-8, "{r:?}");
                assert!(r.interface_residual <= 1e-8, "{r:?}");
            }
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let ms = sinusoidal(1.0, 0.2);
        for sub in Subdomain::ALL {
            let p = [0.3, if sub == Subdomain::Upper { 0.6 } else { -0.6 }];
            let g = ms.grad(sub, p, 0.7);
            let h = 0.1;
            let gx =
                (ms.u(sub, [p[0] + h, p[1]], 0.7) - ms.u(sub, [p[0] - h, p[1]], 0.7)) / (2.0 * h);
            let gy =
                (ms.u(sub, [p[0], p[1] + h], 0.7) - ms.u(sub, [p[0], p[1] - h], 0.7)) / (2.0 * h);
            assert!((g[0] - gx).abs() < 1e-12);
            assert!((g[1] - gy).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_family_is_unsupported() {
        let tab = CoefficientField::tabulated(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let err =
            ManufacturedSolution::new(1.0, 1.0, tab, CoefficientField::Constant(1.0)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFamily(_)));
    }
}
