//! Per-sample discrete energy bound
//!
//! `||u^N||^2 + a dt sum ||grad u^{n+1}||^2 + b dt ||grad u^N||^2 + kappa dt ||u^N||_G^2
//!     <= ||u^0||^2 + c0 dt ||grad u^0||^2 + C dt ||u^0||_G^2 + C dt sum (C_p^2 / a) ||f^{n+1}||^2`
//!
//! with norms summed over both subdomains and `C_p = 1/pi`, the Poincare
//! constant in `x` for fields vanishing at `x = 0` and `x = 1`.
//!
//! With a shared diffusion matrix (A1) or per-sample matrices (baseline) the
//! dissipation `a` is the sample's minimum diffusion and `b = c0 = 0`. With
//! the explicit diffusion correction (A2, A3) `a = theta - theta_+`,
//! `b = theta_-` and `c0 = C`.

use super::{Algorithm, Discretization, EnsembleState, ProblemSpec};
use crate::error::Result;
use crate::mesh::Subdomain;
use crate::random::{SampleSet, ThetaBounds};

/// Relative slack allowed on the right-hand side.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl SampleBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + BOUND_SLACK)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub samples: Vec<SampleBound>,
}

impl StabilityReport {
    pub fn all_hold(&self) -> bool {
        self.samples.iter().all(SampleBound::holds)
    }

    /// Largest `lhs / rhs` over samples (0 when every side vanishes).
    pub fn worst_ratio(&self) -> f64 {
        self.samples
            .iter()
            .map(|b| {
                if b.rhs > 0.0 {
                    b.lhs / b.rhs
                } else if b.lhs > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

fn sum_forms(
    disc: &Discretization,
    state: &EnsembleState,
    j: usize,
    pick: fn(&super::SubdomainOps) -> &crate::sparse::CsrMatrix,
) -> Result<f64> {
    let mut s = 0.0;
    for sub in Subdomain::ALL {
        s += pick(disc.ops(sub)).quadratic_form(state.sample(sub, j))?;
    }
    Ok(s)
}

/// Coefficients of the bound for one algorithm and sample set.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundConstants {
    /// `a`, per sample.
    pub dissipation: Vec<f64>,
    /// `b`
    pub final_gradient: f64,
    /// `c0`
    pub initial_gradient: f64,
    /// Interface weight on the left, per sample.
    pub kappa: Vec<f64>,
    /// `C`
    pub c: f64,
}

impl BoundConstants {
    /// `theta` is required for A2 and A3 and measured against the mean
    /// diffusion that algorithm treats implicitly.
    pub fn new(algorithm: Algorithm, set: &SampleSet, theta: Option<&ThetaBounds>, c: f64) -> Self {
        let j = set.len();
        match (algorithm, theta) {
            (Algorithm::A2 | Algorithm::A3, Some(th)) => BoundConstants {
                dissipation: vec![th.theta - th.theta_plus; j],
                final_gradient: th.theta_minus,
                initial_gradient: c,
                kappa: vec![set.kappa_max(); j],
                c,
            },
            (Algorithm::A2 | Algorithm::A3, None) => panic!("{algorithm} bound needs theta"),
            (Algorithm::A1, _) => BoundConstants {
                dissipation: (0..j).map(|s| set.nu_min(s)).collect(),
                final_gradient: 0.0,
                initial_gradient: 0.0,
                kappa: vec![set.kappa_max(); j],
                c,
            },
            (Algorithm::Baseline, _) => BoundConstants {
                dissipation: (0..j).map(|s| set.nu_min(s)).collect(),
                final_gradient: 0.0,
                initial_gradient: 0.0,
                kappa: set.kappa().to_vec(),
                c,
            },
        }
    }
}

/// Accumulates both sides of the bound one state at a time, so the full
/// trajectory never has to be stored.
#[derive(Clone, Debug)]
pub struct StabilityTracker {
    dt: f64,
    constants: BoundConstants,
    initial: Vec<f64>,
    grad_sum: Vec<f64>,
    forcing_sum: Vec<f64>,
    last_l2: Vec<f64>,
    last_grad: Vec<f64>,
    last_gamma: Vec<f64>,
}

impl StabilityTracker {
    pub fn new(disc: &Discretization, dt: f64, constants: BoundConstants, initial: &EnsembleState) -> Result<Self> {
        let j = initial.num_samples();
        let mut init = Vec::with_capacity(j);
        let mut l2 = Vec::with_capacity(j);
        let mut grad = Vec::with_capacity(j);
        let mut gamma = Vec::with_capacity(j);
        for s in 0..j {
            let a = sum_forms(disc, initial, s, |o| &o.mass)?;
            let k = sum_forms(disc, initial, s, |o| &o.unit_stiffness)?;
            let g = sum_forms(disc, initial, s, |o| &o.interface.own)?;
            init.push(a + constants.initial_gradient * dt * k + constants.c * dt * g);
            l2.push(a);
            grad.push(k);
            gamma.push(g);
        }
        Ok(StabilityTracker {
            dt,
            constants,
            initial: init,
            grad_sum: vec![0.0; j],
            forcing_sum: vec![0.0; j],
            last_l2: l2,
            last_grad: grad,
            last_gamma: gamma,
        })
    }

    /// Adds the state at `t^{n+1}`.
    pub fn observe(
        &mut self,
        disc: &Discretization,
        problem: &ProblemSpec,
        state: &EnsembleState,
    ) -> Result<()> {
        for s in 0..self.grad_sum.len() {
            self.last_grad[s] = sum_forms(disc, state, s, |o| &o.unit_stiffness)?;
            self.grad_sum[s] += self.last_grad[s];
            self.last_l2[s] = sum_forms(disc, state, s, |o| &o.mass)?;
            self.last_gamma[s] = sum_forms(disc, state, s, |o| &o.interface.own)?;
            if let Some(f) = &problem.forcing {
                let mut fsq = 0.0;
                for sub in Subdomain::ALL {
                    let asm = &disc.ops(sub).assembler;
                    let zero = vec![0.0; asm.len()];
                    fsq += asm.error_l2(&zero, |p| f(s, sub, p, state.time))?.powi(2);
                }
                self.forcing_sum[s] += fsq;
            }
        }
        Ok(())
    }

    pub fn report(&self) -> StabilityReport {
        let cp2 = 1.0 / (std::f64::consts::PI * std::f64::consts::PI);
        let k = &self.constants;
        let samples = (0..self.grad_sum.len())
            .map(|s| {
                let forcing = if self.forcing_sum[s] > 0.0 {
                    k.c * self.dt * cp2 / k.dissipation[s] * self.forcing_sum[s]
                } else {
                    0.0
                };
                SampleBound {
                    lhs: self.last_l2[s]
                        + k.dissipation[s] * self.dt * self.grad_sum[s]
                        + k.final_gradient * self.dt * self.last_grad[s]
                        + k.kappa[s] * self.dt * self.last_gamma[s],
                    rhs: self.initial[s] + forcing,
                }
            })
            .collect();
        StabilityReport { samples }
    }
}

/// Evaluates the bound over a stored trajectory `t^0..t^N`.
pub fn check_stability_bound(
    disc: &Discretization,
    problem: &ProblemSpec,
    trajectory: &[EnsembleState],
    dt: f64,
    constants: BoundConstants,
) -> Result<StabilityReport> {
    let Some((first, rest)) = trajectory.split_first() else {
        return Ok(StabilityReport {
            samples: Vec::new(),
        });
    };
    let mut tracker = StabilityTracker::new(disc, dt, constants, first)?;
    for state in rest {
        tracker.observe(disc, problem, state)?;
    }
    Ok(tracker.report())
}
