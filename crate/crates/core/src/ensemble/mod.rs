//! Ensemble time stepping for the coupled two-domain heat problem.
//!
//! All four algorithms advance every sample with backward Euler in each
//! subdomain and pass interface data explicitly from the previous step, so
//! the two subdomain solves of a step are independent:
//!
//! * **A1** shares `M/dt + K(nu) + kappa_max B` across samples and steps.
//! * **A2** shares `M/dt + K(nu_bar^{n+1}) + kappa_max B` across samples and
//!   refactorizes it every step.
//! * **A3** uses the time average of `nu_bar`, so one factorization serves
//!   the whole run.
//! * **Baseline** assembles and factorizes its own matrix per sample.

mod stability;
mod stepper;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{InterfaceOperators, SubdomainAssembler};
use crate::mesh::{Mesh, Point, Subdomain};
use crate::random::SampleSet;
use crate::sparse::CsrMatrix;

pub use stability::{check_stability_bound, BoundConstants, SampleBound, StabilityReport, StabilityTracker};
pub use stepper::{build_system_matrix_a1, run, RunOutput, StepRecord, Stepper};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Assembly,
    Factorization,
    Solve,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Assembly => "assembly",
            Phase::Factorization => "factorization",
            Phase::Solve => "solve",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    A1,
    A2,
    A3,
    Baseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::A1,
        Algorithm::A2,
        Algorithm::A3,
        Algorithm::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::A1 => "a1",
            Algorithm::A2 => "a2",
            Algorithm::A3 => "a3",
            Algorithm::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a1" => Ok(Algorithm::A1),
            "a2" => Ok(Algorithm::A2),
            "a3" => Ok(Algorithm::A3),
            "baseline" | "base" => Ok(Algorithm::Baseline),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SolverKind {
    #[default]
    Cholesky,
    Cg {
        tol: f64,
        max_iter: usize,
    },
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Cholesky => f.write_str("cholesky"),
            SolverKind::Cg { tol, max_iter } => write!(f, "cg:{tol:e}:{max_iter}"),
        }
    }
}

/// `cholesky`, `cg`, or `cg:<tol>:<max_iter>`.
impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let mut parts = s.split(':');
        match parts.next() {
            Some("cholesky") if parts.next().is_none() => Ok(SolverKind::Cholesky),
            Some("cg") => {
                let tol = match parts.next() {
                    Some(v) => v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad cg tolerance '{v}'")))?,
                    None => 1e-12,
                };
                let max_iter = match parts.next() {
                    Some(v) => v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad cg iteration limit '{v}'")))?,
                    None => 10_000,
                };
                if parts.next().is_some() || !(tol > 0.0) {
                    return Err(Error::Config(format!("bad solver '{s}'")));
                }
                Ok(SolverKind::Cg { tol, max_iter })
            }
            _ => Err(Error::Config(format!("unknown solver '{s}'"))),
        }
    }
}

/// How the per-step energy combines samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnergyMode {
    /// Energy of the sample-mean fields.
    #[default]
    MeanThenNorm,
    /// Mean of the per-sample energies.
    NormThenMean,
}

#[derive(Clone, Debug)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub algorithm: Algorithm,
    pub solver: SolverKind,
    /// Largest accepted relative residual of any linear solve.
    pub residual_tol: f64,
    pub energy_mode: EnergyMode,
    /// Accumulate the discrete energy bound while stepping.
    pub track_stability: bool,
    /// Keep every state in the run output.
    pub keep_trajectory: bool,
}

impl StepperConfig {
    /// `t_final / dt` must be an integer to `1e-12` relative accuracy.
    pub fn new(dt: f64, t_final: f64, algorithm: Algorithm) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {dt}")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("T = {t_final}")));
        }
        let steps = (t_final / dt).round();
        if (steps * dt - t_final).abs() > 1e-12 * t_final.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "T = {t_final} is not a multiple of dt = {dt}"
            )));
        }
        Ok(StepperConfig {
            dt,
            t_final,
            steps: steps as usize,
            algorithm,
            solver: SolverKind::Cholesky,
            residual_tol: 1e-9,
            energy_mode: EnergyMode::MeanThenNorm,
            track_stability: false,
            keep_trajectory: false,
        })
    }

    /// Fixed number of steps; `T = steps * dt`.
    pub fn with_steps(dt: f64, steps: usize, algorithm: Algorithm) -> Result<Self> {
        let mut c = StepperConfig::new(dt, 0.0, algorithm)?;
        c.steps = steps;
        c.t_final = steps as f64 * dt;
        Ok(c)
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// `t^0 .. t^N`
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.time(n)).collect()
    }
}

/// Per-sample data function `(sample, subdomain, x, t) -> value`.
pub type SampleFn = Arc<dyn Fn(usize, Subdomain, Point, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub samples: SampleSet,
    /// Evaluated at `t = 0`.
    pub initial: SampleFn,
    /// `None` means `f = 0`.
    pub forcing: Option<SampleFn>,
    /// `None` means homogeneous Dirichlet data.
    pub dirichlet: Option<SampleFn>,
}

impl ProblemSpec {
    /// Constant initial value, no forcing, homogeneous boundary data.
    pub fn unforced(samples: SampleSet, u0: f64) -> Self {
        ProblemSpec {
            samples,
            initial: Arc::new(move |_, _, _, _| u0),
            forcing: None,
            dirichlet: None,
        }
    }

    pub fn dirichlet_value(&self, j: usize, sub: Subdomain, p: Point, t: f64) -> f64 {
        self.dirichlet.as_ref().map_or(0.0, |g| g(j, sub, p, t))
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("samples", &self.samples.len())
            .field("forcing", &self.forcing.is_some())
            .field("dirichlet", &self.dirichlet.is_some())
            .finish()
    }
}

/// Time-independent operators of one subdomain.
#[derive(Clone, Debug)]
pub struct SubdomainOps {
    pub assembler: SubdomainAssembler,
    pub mass: CsrMatrix,
    pub unit_stiffness: CsrMatrix,
    pub interface: InterfaceOperators,
}

#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    subs: [SubdomainOps; 2],
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let build = |sub| -> Result<SubdomainOps> {
            let assembler = SubdomainAssembler::new(&mesh, sub);
            Ok(SubdomainOps {
                mass: assembler.mass(),
                unit_stiffness: assembler.stiffness_unit(),
                interface: assembler.interface_operators()?,
                assembler,
            })
        };
        let subs = [build(Subdomain::Upper)?, build(Subdomain::Lower)?];
        Ok(Discretization { mesh, subs })
    }

    /// Structured mesh with `n` cells per unit length.
    pub fn structured(n: usize) -> Result<Self> {
        Discretization::new(Mesh::two_domain(n)?)
    }

    pub fn ops(&self, sub: Subdomain) -> &SubdomainOps {
        &self.subs[sub.index()]
    }

    pub fn num_dofs(&self, sub: Subdomain) -> usize {
        self.subs[sub.index()].assembler.len()
    }
}

/// Nodal values of every sample on both subdomains; `u[i][j]` is sample `j`
/// on subdomain `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleState {
    pub step: usize,
    pub time: f64,
    pub u: [Vec<Vec<f64>>; 2],
}

impl EnsembleState {
    pub fn num_samples(&self) -> usize {
        self.u[0].len()
    }

    pub fn sample(&self, sub: Subdomain, j: usize) -> &[f64] {
        &self.u[sub.index()][j]
    }
}

/// Nodal interpolant of the initial data with boundary values overwritten by
/// the Dirichlet data at `t = 0`.
pub fn init_state(disc: &Discretization, problem: &ProblemSpec) -> EnsembleState {
    let mesh = &disc.mesh;
    let u = Subdomain::ALL.map(|sub| {
        let dofs = &disc.ops(sub).assembler.dofs;
        (0..problem.samples.len())
            .map(|j| {
                let mut v = dofs.interpolate(mesh, |p| (problem.initial)(j, sub, p, 0.0));
                for &d in &dofs.dirichlet {
                    v[d] = problem.dirichlet_value(j, sub, mesh.nodes[dofs.nodes[d]], 0.0);
                }
                v
            })
            .collect()
    });
    EnsembleState {
        step: 0,
        time: 0.0,
        u,
    }
}

/// Nodewise mean of the columns, summed in sample order. Identical columns
/// give that column exactly.
pub fn mean_field(columns: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = columns.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|k| crate::random::fixed_order_mean(columns.iter().map(|c| c[k])))
        .collect()
}

/// Sample-mean fields on both subdomains.
pub fn monte_carlo_mean(state: &EnsembleState) -> [Vec<f64>; 2] {
    [mean_field(&state.u[0]), mean_field(&state.u[1])]
}

/// `0.5 ||u_1||^2 + 0.5 ||u_2||^2` in the mass-matrix norm, of the mean
/// fields or averaged over samples depending on `mode`.
pub fn energy(disc: &Discretization, state: &EnsembleState, mode: EnergyMode) -> Result<f64> {
    let half_norm = |fields: [&[f64]; 2]| -> Result<f64> {
        let mut e = 0.0;
        for sub in Subdomain::ALL {
            e += 0.5 * disc.ops(sub).mass.quadratic_form(fields[sub.index()])?;
        }
        Ok(e)
    };
    match mode {
        EnergyMode::MeanThenNorm => {
            let [m1, m2] = monte_carlo_mean(state);
            half_norm([&m1, &m2])
        }
        EnergyMode::NormThenMean => {
            let j = state.num_samples();
            let mut total = 0.0;
            for s in 0..j {
                total += half_norm([&state.u[0][s], &state.u[1][s]])?;
            }
            Ok(total / j as f64)
        }
    }
}
