use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::stability::{BoundConstants, StabilityTracker};
use super::{
    energy, init_state, Algorithm, Discretization, EnsembleState, Phase, ProblemSpec, SolverKind,
    StepperConfig,
};
use crate::error::{Error, Result};
use crate::fem::DirichletSystem;
use crate::mesh::{Point, Subdomain};
use crate::random::{
    estimate_theta_bounds, estimate_theta_bounds_time_avg, fixed_order_mean, CoefficientField, ThetaBounds, ThetaGrid,
};
use crate::sparse::{cg_solve, factorize_spd, relative_residual, CsrMatrix, SpdFactorization};

/// Reduced system matrix and, for the direct solver, its factorization.
#[derive(Clone, Debug)]
struct LinearSystem {
    system: DirichletSystem,
    factor: Option<SpdFactorization>,
}

impl LinearSystem {
    fn solve(&self, rhs: &[f64], solver: SolverKind, work: &mut Vec<f64>) -> Result<Vec<f64>> {
        match (&self.factor, solver) {
            (Some(f), _) => {
                let mut x = rhs.to_vec();
                f.solve_in_place(&mut x, work)?;
                Ok(x)
            }
            (None, SolverKind::Cg { tol, max_iter }) => {
                let out = cg_solve(&self.system.matrix, rhs, tol, max_iter)?;
                if !out.converged {
                    return Err(Error::ResidualTooLarge {
                        residual: out.relative_residual,
                        tolerance: tol,
                    });
                }
                Ok(out.x)
            }
            (None, SolverKind::Cholesky) => unreachable!("direct systems are always factorized"),
        }
    }
}

/// Diffusion on one subdomain at one time, collapsed to a single value when
/// the field does not vary in space.
#[derive(Clone, Debug, PartialEq)]
enum Diffusion {
    Uniform(f64),
    Elements(Vec<f64>),
}

impl Diffusion {
    fn of<F: Fn(Point, f64) -> f64>(
        disc: &Discretization,
        sub: Subdomain,
        uniform: bool,
        f: F,
        t: f64,
    ) -> Self {
        if uniform {
            Diffusion::Uniform(f([0.0; 2], t))
        } else {
            Diffusion::Elements(disc.ops(sub).assembler.element_coefficients(f, t))
        }
    }

    fn value(&self, element: usize) -> f64 {
        match self {
            Diffusion::Uniform(v) => *v,
            Diffusion::Elements(c) => c[element],
        }
    }

    /// Elementwise `f(self, other)`; both sides come from the same sample set.
    fn zip_with(&self, other: &Diffusion, f: impl Fn(f64, f64) -> f64) -> Diffusion {
        match self {
            Diffusion::Uniform(a) => Diffusion::Uniform(f(*a, other.value(0))),
            Diffusion::Elements(a) => Diffusion::Elements(
                a.iter()
                    .enumerate()
                    .map(|(e, &a)| f(a, other.value(e)))
                    .collect(),
            ),
        }
    }

    fn mean(levels: &[Diffusion]) -> Diffusion {
        match &levels[0] {
            Diffusion::Uniform(_) => {
                Diffusion::Uniform(fixed_order_mean(levels.iter().map(|d| d.value(0))))
            }
            Diffusion::Elements(c) => Diffusion::Elements(
                (0..c.len())
                    .map(|e| fixed_order_mean(levels.iter().map(|d| d.value(e))))
                    .collect(),
            ),
        }
    }

    fn stiffness(&self, disc: &Discretization, sub: Subdomain) -> Result<CsrMatrix> {
        let ops = disc.ops(sub);
        match self {
            Diffusion::Uniform(v) => {
                if !(*v > 0.0) {
                    return Err(Error::NonPositiveCoefficient {
                        value: *v,
                        x: f64::NAN,
                        y: f64::NAN,
                        t: f64::NAN,
                    });
                }
                let mut k = ops.unit_stiffness.clone();
                k.scale(*v);
                Ok(k)
            }
            Diffusion::Elements(c) => ops.assembler.stiffness_from_elements(c),
        }
    }

    /// `out += K(self) u`
    fn apply(
        &self,
        disc: &Discretization,
        sub: Subdomain,
        u: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let ops = disc.ops(sub);
        match self {
            Diffusion::Uniform(0.0) => Ok(()),
            Diffusion::Uniform(v) => ops.unit_stiffness.matvec_acc(*v, u, out),
            Diffusion::Elements(c) => {
                ops.assembler.apply_stiffness_elements(c, u, out);
                Ok(())
            }
        }
    }
}

/// `M/dt + K(nu) + kappa B_own`
fn system_matrix(
    disc: &Discretization,
    sub: Subdomain,
    nu: &Diffusion,
    kappa: f64,
    dt: f64,
) -> Result<CsrMatrix> {
    let ops = disc.ops(sub);
    let k = nu.stiffness(disc, sub)?;
    ops.mass
        .add_scaled(1.0 / dt, &k, 1.0)?
        .add_scaled(1.0, &ops.interface.own, kappa)
}

fn linear_system(
    disc: &Discretization,
    sub: Subdomain,
    coeffs: &Diffusion,
    kappa: f64,
    dt: f64,
    solver: SolverKind,
) -> Result<(LinearSystem, Duration, Duration)> {
    let t0 = Instant::now();
    let a = system_matrix(disc, sub, coeffs, kappa, dt)?;
    let system = DirichletSystem::new(&a, &disc.ops(sub).assembler.dofs.dirichlet);
    let assembled = t0.elapsed();
    let t1 = Instant::now();
    let factor = match solver {
        SolverKind::Cholesky => Some(factorize_spd(&system.matrix)?),
        SolverKind::Cg { .. } => None,
    };
    Ok((LinearSystem { system, factor }, assembled, t1.elapsed()))
}

/// Reduced and factorized `M/dt + K(nu) + kappa_max B_own` for a
/// deterministic, time-independent diffusion field.
pub fn build_system_matrix_a1(
    disc: &Discretization,
    sub: Subdomain,
    nu: &CoefficientField,
    kappa_max: f64,
    dt: f64,
) -> Result<(DirichletSystem, SpdFactorization)> {
    let coeffs = Diffusion::of(
        disc,
        sub,
        nu.is_uniform_in_space(),
        |p, t| nu.eval(p, t),
        0.0,
    );
    let (sys, _, _) = linear_system(disc, sub, &coeffs, kappa_max, dt, SolverKind::Cholesky)?;
    Ok((sys.system, sys.factor.expect("direct solver")))
}

/// One row of the per-step diagnostics stream. Phase times are summed over
/// samples and subdomains.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub max_residual: f64,
    pub assembly_ms: f64,
    pub factorization_ms: f64,
    pub solve_ms: f64,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str =
        "step,time,energy,max_residual,assembly_ms,factorization_ms,solve_ms";

    pub fn write_csv_row<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{:.17e},{:.3e},{:.3},{:.3},{:.3}",
            self.step,
            self.time,
            self.energy,
            self.max_residual,
            self.assembly_ms,
            self.factorization_ms,
            self.solve_ms
        )
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Advances an [`EnsembleState`] one step at a time while owning the
/// algorithm's cached factorizations.
pub struct Stepper<'a> {
    disc: &'a Discretization,
    problem: &'a ProblemSpec,
    config: StepperConfig,
    shared: [Option<LinearSystem>; 2],
    per_sample: [Vec<LinearSystem>; 2],
    /// Time-averaged mean diffusion (A3).
    nu_bar_avg: Option<[Diffusion; 2]>,
    uniform: bool,
    factorizations: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(
        disc: &'a Discretization,
        problem: &'a ProblemSpec,
        config: StepperConfig,
    ) -> Result<Self> {
        let set = &problem.samples;
        if config.algorithm == Algorithm::A1 && !set.nu_is_deterministic() {
            return Err(Error::InvalidArgument(
                "A1 needs the same diffusion field in every sample".into(),
            ));
        }
        let uniform = Subdomain::ALL.iter().all(|&sub| {
            set.nu_fields(sub)
                .iter()
                .all(CoefficientField::is_uniform_in_space)
        });
        let nu_bar_avg = if config.algorithm == Algorithm::A3 {
            Some(Subdomain::ALL.map(|sub| {
                let bar = |n: usize| {
                    Diffusion::of(
                        disc,
                        sub,
                        uniform,
                        |p, t| set.nu_bar(sub, p, t),
                        config.time(n),
                    )
                };
                if config.steps == 0 {
                    return bar(0);
                }
                let levels: Vec<Diffusion> = (1..=config.steps).map(bar).collect();
                Diffusion::mean(&levels)
            }))
        } else {
            None
        };
        Ok(Stepper {
            disc,
            problem,
            config,
            shared: [None, None],
            per_sample: [Vec::new(), Vec::new()],
            nu_bar_avg,
            uniform,
            factorizations: 0,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    /// Factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    fn count(&mut self, sys: &LinearSystem) {
        if sys.factor.is_some() {
            self.factorizations += 1;
        }
    }

    /// Shared-matrix and per-sample matrix setup for the step ending at `t`.
    /// Returns the mean-diffusion element coefficients the right-hand side
    /// corrects against (A2, A3) and the phase times.
    fn prepare(&mut self, t: f64) -> Result<([Option<Diffusion>; 2], Duration, Duration)> {
        let disc = self.disc;
        let set = &self.problem.samples;
        let cfg = self.config.clone();
        let uniform = self.uniform;
        let mut assembly = Duration::ZERO;
        let mut factor = Duration::ZERO;
        let mut bars: [Option<Diffusion>; 2] = [None, None];

        for sub in Subdomain::ALL {
            let i = sub.index();
            match cfg.algorithm {
                Algorithm::A1 => {
                    if self.shared[i].is_none() || set.is_time_dependent() {
                        let t0 = Instant::now();
                        let nu = set.nu(sub, 0);
                        let c = Diffusion::of(disc, sub, uniform, |p, t| nu.eval(p, t), t);
                        assembly += t0.elapsed();
                        let (sys, a, f) =
                            linear_system(disc, sub, &c, set.kappa_max(), cfg.dt, cfg.solver)?;
                        self.count(&sys);
                        self.shared[i] = Some(sys);
                        assembly += a;
                        factor += f;
                    }
                }
                Algorithm::A2 => {
                    let t0 = Instant::now();
                    let c = Diffusion::of(disc, sub, uniform, |p, t| set.nu_bar(sub, p, t), t);
                    assembly += t0.elapsed();
                    let (sys, a, f) =
                        linear_system(disc, sub, &c, set.kappa_max(), cfg.dt, cfg.solver)?;
                    self.count(&sys);
                    self.shared[i] = Some(sys);
                    assembly += a;
                    factor += f;
                    bars[i] = Some(c);
                }
                Algorithm::A3 => {
                    let c = self.nu_bar_avg.as_ref().expect("A3 averages")[i].clone();
                    if self.shared[i].is_none() {
                        let (sys, a, f) =
                            linear_system(disc, sub, &c, set.kappa_max(), cfg.dt, cfg.solver)?;
                        self.count(&sys);
                        self.shared[i] = Some(sys);
                        assembly += a;
                        factor += f;
                    }
                    bars[i] = Some(c);
                }
                Algorithm::Baseline => {
                    if self.per_sample[i].is_empty() || set.is_time_dependent() {
                        let built: Vec<(LinearSystem, Duration, Duration)> = (0..set.len())
                            .into_par_iter()
                            .map(|j| {
                                let t0 = Instant::now();
                                let nu = set.nu(sub, j);
                                let c = Diffusion::of(disc, sub, uniform, |p, t| nu.eval(p, t), t);
                                let coeff_time = t0.elapsed();
                                let (sys, a, f) = linear_system(
                                    disc,
                                    sub,
                                    &c,
                                    set.kappa()[j],
                                    cfg.dt,
                                    cfg.solver,
                                )?;
                                Ok((sys, a + coeff_time, f))
                            })
                            .collect::<Result<_>>()?;
                        self.per_sample[i].clear();
                        for (sys, a, f) in built {
                            self.count(&sys);
                            assembly += a;
                            factor += f;
                            self.per_sample[i].push(sys);
                        }
                    }
                }
            }
        }
        Ok((bars, assembly, factor))
    }

    /// Right-hand side of sample `j` on `sub` for the step ending at `t`,
    /// before Dirichlet lifting.
    fn rhs(
        &self,
        state: &EnsembleState,
        sub: Subdomain,
        j: usize,
        t: f64,
        bar: Option<&Diffusion>,
    ) -> Result<Vec<f64>> {
        let ops = self.disc.ops(sub);
        let set = &self.problem.samples;
        let u_own = &state.u[sub.index()][j];
        let u_other = &state.u[sub.other().index()][j];
        let mut rhs = vec![0.0; u_own.len()];
        ops.mass.matvec_acc(1.0 / self.config.dt, u_own, &mut rhs)?;
        if let Some(f) = &self.problem.forcing {
            ops.assembler
                .load_into(|p: Point, t| f(j, sub, p, t), t, &mut rhs);
        }
        let kappa = set.kappa()[j];
        // kappa_max B_cross u_k - (kappa - kappa_max)(B_own u_i - B_cross u_k)
        // regrouped as kappa B_cross u_k + (kappa_max - kappa) B_own u_i
        ops.interface.cross.matvec_acc(kappa, u_other, &mut rhs)?;
        if self.config.algorithm != Algorithm::Baseline && set.kappa_max() != kappa {
            ops.interface
                .own
                .matvec_acc(set.kappa_max() - kappa, u_own, &mut rhs)?;
        }
        if let Some(bar) = bar {
            // rhs -= K(nu_j - nu_bar) u
            let nu = set.nu(sub, j);
            let nu_j = Diffusion::of(self.disc, sub, self.uniform, |p, t| nu.eval(p, t), t);
            bar.zip_with(&nu_j, |b, n| b - n)
                .apply(self.disc, sub, u_own, &mut rhs)?;
        }
        Ok(rhs)
    }

    /// Advances every sample from `t^n` to `t^{n+1}`.
    pub fn step(&mut self, state: &mut EnsembleState) -> Result<StepRecord> {
        let n_new = state.step + 1;
        let t = self.config.time(n_new);
        let fail = |phase: Phase| {
            move |e: Error| Error::StepFailed {
                step: n_new,
                phase,
                source: Box::new(e),
            }
        };

        let (bars, mut assembly, factorization) = self.prepare(t).map_err(|e| {
            let phase = if matches!(e, Error::NotSpd { .. }) {
                Phase::Factorization
            } else {
                Phase::Assembly
            };
            fail(phase)(e)
        })?;

        let set = &self.problem.samples;
        let mut next: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        let mut max_residual: f64 = 0.0;
        let mut solve = Duration::ZERO;
        for sub in Subdomain::ALL {
            let i = sub.index();
            let dofs = &self.disc.ops(sub).assembler.dofs;
            let mesh = &self.disc.mesh;

            let t0 = Instant::now();
            let rhs: Vec<Vec<f64>> = (0..set.len())
                .into_par_iter()
                .map(|j| {
                    let mut b = self.rhs(state, sub, j, t, bars[i].as_ref())?;
                    let g: Vec<f64> = dofs
                        .dirichlet
                        .iter()
                        .map(|&d| {
                            self.problem
                                .dirichlet_value(j, sub, mesh.nodes[dofs.nodes[d]], t)
                        })
                        .collect();
                    let sys = self.system(sub, j);
                    sys.system.lift(&mut b, &g);
                    Ok(b)
                })
                .collect::<Result<_>>()
                .map_err(fail(Phase::Assembly))?;
            assembly += t0.elapsed();

            let t1 = Instant::now();
            let solver = self.config.solver;
            let solved: Vec<(Vec<f64>, f64)> = rhs
                .par_iter()
                .enumerate()
                .map_init(Vec::new, |work, (j, b)| {
                    let sys = self.system(sub, j);
                    let x = sys.solve(b, solver, work)?;
                    let r = relative_residual(&sys.system.matrix, &x, b)?;
                    Ok((x, r))
                })
                .collect::<Result<_>>()
                .map_err(fail(Phase::Solve))?;
            solve += t1.elapsed();

            for (x, r) in solved {
                if !(r <= self.config.residual_tol) {
                    return Err(fail(Phase::Solve)(Error::ResidualTooLarge {
                        residual: r,
                        tolerance: self.config.residual_tol,
                    }));
                }
                max_residual = max_residual.max(r);
                next[i].push(x);
            }
        }

        state.u = next;
        state.step = n_new;
        state.time = t;
        Ok(StepRecord {
            step: n_new,
            time: t,
            energy: energy(self.disc, state, self.config.energy_mode)?,
            max_residual,
            assembly_ms: ms(assembly),
            factorization_ms: ms(factorization),
            solve_ms: ms(solve),
        })
    }

    fn system(&self, sub: Subdomain, j: usize) -> &LinearSystem {
        match self.config.algorithm {
            Algorithm::Baseline => &self.per_sample[sub.index()][j],
            _ => self.shared[sub.index()]
                .as_ref()
                .expect("shared system prepared"),
        }
    }
}

/// Result of [`run`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub state: EnsembleState,
    /// One record per step, preceded by the initial state (step 0).
    pub records: Vec<StepRecord>,
    pub factorizations: usize,
    pub theta: Option<ThetaBounds>,
    pub stability: Option<super::StabilityReport>,
    /// Every state from `t^0`, when requested.
    pub trajectory: Vec<EnsembleState>,
    /// Wall time of the time loop.
    pub elapsed: Duration,
}

impl RunOutput {
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn write_diagnostics<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", StepRecord::CSV_HEADER)?;
        for r in &self.records {
            r.write_csv_row(&mut w)?;
        }
        Ok(())
    }
}

/// Interpolates the initial data and advances `config.steps` steps.
/// The reported elapsed time covers stepper setup and the time loop.
pub fn run(
    disc: &Discretization,
    problem: &ProblemSpec,
    config: &StepperConfig,
) -> Result<RunOutput> {
    let grid = ThetaGrid::new(config.t_final);
    let theta = match config.algorithm {
        Algorithm::A3 if config.steps > 0 => {
            Some(estimate_theta_bounds_time_avg(&problem.samples, &grid, &config.times())?)
        }
        Algorithm::A2 | Algorithm::A3 => Some(estimate_theta_bounds(&problem.samples, &grid)),
        _ => None,
    };
    let mut state = init_state(disc, problem);
    let mut tracker = if config.track_stability {
        let constants = BoundConstants::new(config.algorithm, &problem.samples, theta.as_ref(), 1.0);
        Some(StabilityTracker::new(disc, config.dt, constants, &state)?)
    } else {
        None
    };
    let mut records = Vec::with_capacity(config.steps + 1);
    records.push(StepRecord {
        step: 0,
        time: 0.0,
        energy: energy(disc, &state, config.energy_mode)?,
        max_residual: 0.0,
        assembly_ms: 0.0,
        factorization_ms: 0.0,
        solve_ms: 0.0,
    });
    let mut trajectory = Vec::new();
    if config.keep_trajectory {
        trajectory.push(state.clone());
    }

    let start = Instant::now();
    let mut stepper = Stepper::new(disc, problem, config.clone())?;
    for _ in 0..config.steps {
        records.push(stepper.step(&mut state)?);
        if let Some(t) = tracker.as_mut() {
            t.observe(disc, problem, &state)?;
        }
        if config.keep_trajectory {
            trajectory.push(state.clone());
        }
    }
    let elapsed = start.elapsed();

    Ok(RunOutput {
        state,
        records,
        factorizations: stepper.factorizations(),
        theta,
        stability: tracker.map(|t| t.report()),
        trajectory,
        elapsed,
    })
}
