use ensemble_heat::ensemble::{
    build_system_matrix_a1, init_state, run, Algorithm, Discretization, EnsembleState, ProblemSpec, SolverKind,
    Stepper, StepperConfig,
};
use ensemble_heat::fem::DirichletSystem;
use ensemble_heat::harness::{case1_samples, case2_samples, manufactured_problem, ManufacturedSolution};
use ensemble_heat::random::{CoefficientField, SampleSet};
use ensemble_heat::sparse::CsrMatrix;
use ensemble_heat::{Error, Mesh, Point, Subdomain};

fn sup_diff(a: &EnsembleState, b: &EnsembleState) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for (x, y) in a.u[i].iter().zip(&b.u[i]) {
            for (p, q) in x.iter().zip(y) {
                m = m.max((p - q).abs());
            }
        }
    }
    m
}

fn trajectory(disc: &Discretization, problem: &ProblemSpec, dt: f64, steps: usize, alg: Algorithm) -> Vec<EnsembleState> {
    let mut cfg = StepperConfig::with_steps(dt, steps, alg).unwrap();
    cfg.keep_trajectory = true;
    run(disc, problem, &cfg).unwrap().trajectory
}

fn trajectory_gap(a: &[EnsembleState], b: &[EnsembleState]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(a, b)| sup_diff(a, b)).fold(0.0, f64::max)
}

#[test]
fn a1_with_one_sample_is_the_baseline() {
    let disc = Discretization::structured(8).unwrap();
    let set = SampleSet::shared_nu(vec![0.7], vec![CoefficientField::Constant(1.3)], 1.0).unwrap();
    let (problem, _) = manufactured_problem(&set, 1.0).unwrap();
    let a1 = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::A1);
    let base = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::Baseline);
    assert_eq!(a1.len(), 21);
    assert!(trajectory_gap(&a1, &base) <= 1e-12);
}

#[test]
fn a2_reduces_to_a1_for_deterministic_diffusion() {
    let disc = Discretization::structured(8).unwrap();
    let (problem, _) = manufactured_problem(&case1_samples(1.0).unwrap(), 1.0).unwrap();
    let a1 = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::A1);
    let a2 = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::A2);
    let a3 = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::A3);
    assert!(trajectory_gap(&a1, &a2) <= 1e-10);
    assert!(trajectory_gap(&a1, &a3) <= 1e-10);
}

#[test]
fn a3_reduces_to_a2_when_the_mean_is_constant_in_time() {
    // 2 + 0.5 sin t and 2 - 0.5 sin t average to 2 at every t
    let nu = |s: f64| CoefficientField::SinusoidalInTime { base: 2.0, amplitude: s };
    let set = SampleSet::new(vec![0.5, 2.0], vec![nu(0.5), nu(-0.5)], vec![nu(-0.5), nu(0.5)], 1.0).unwrap();
    let disc = Discretization::structured(8).unwrap();
    let (problem, _) = manufactured_problem(&set, 1.0).unwrap();
    let a2 = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::A2);
    let a3 = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::A3);
    assert!(trajectory_gap(&a2, &a3) <= 1e-10);
    // the perturbation is active: A2 differs from per-sample solves
    let base = trajectory(&disc, &problem, 1.0 / 64.0, 20, Algorithm::Baseline);
    assert!(trajectory_gap(&a2, &base) > 1e-8);
}

#[test]
fn factorization_counters() {
    let disc = Discretization::structured(4).unwrap();
    let steps = 5;
    let count = |set: &SampleSet, alg| {
        let (problem, _) = manufactured_problem(set, 1.0).unwrap();
        run(&disc, &problem, &StepperConfig::with_steps(1.0 / 16.0, steps, alg).unwrap()).unwrap().factorizations
    };
    let c2 = case2_samples(1.0, 1.0).unwrap();
    assert_eq!(count(&c2, Algorithm::A2), 2 * steps);
    assert_eq!(count(&c2, Algorithm::A3), 2);
    assert_eq!(count(&c2, Algorithm::Baseline), 2 * 9 * steps);
    let c1 = case1_samples(1.0).unwrap();
    assert_eq!(count(&c1, Algorithm::A1), 2);
    assert_eq!(count(&c1, Algorithm::Baseline), 2 * 3);
}

#[test]
fn a1_rejects_random_diffusion() {
    let disc = Discretization::structured(4).unwrap();
    let (problem, _) = manufactured_problem(&case2_samples(1.0, 1.0).unwrap(), 1.0).unwrap();
    let cfg = StepperConfig::with_steps(0.1, 1, Algorithm::A1).unwrap();
    assert!(matches!(Stepper::new(&disc, &problem, cfg), Err(Error::InvalidArgument(_))));
}

#[test]
fn identical_samples_give_identical_columns() {
    let disc = Discretization::structured(8).unwrap();
    let nu = CoefficientField::SinusoidalInTime { base: 1.0, amplitude: 0.4 };
    let set = SampleSet::shared_nu(vec![0.3; 4], vec![nu; 4], 1.0).unwrap();
    let (problem, _) = manufactured_problem(&set, 1.0).unwrap();
    for alg in [Algorithm::A2, Algorithm::A3, Algorithm::Baseline] {
        let out = run(&disc, &problem, &StepperConfig::with_steps(0.01, 10, alg).unwrap()).unwrap();
        for sub in Subdomain::ALL {
            assert!(out.state.u[sub.index()].windows(2).all(|w| w[0] == w[1]), "{alg}");
        }
    }
}

#[test]
fn zero_data_stays_zero() {
    let disc = Discretization::structured(4).unwrap();
    let problem = ProblemSpec::unforced(case2_samples(1.0, 1.0).unwrap(), 0.0);
    for alg in [Algorithm::A2, Algorithm::A3, Algorithm::Baseline] {
        let out = run(&disc, &problem, &StepperConfig::with_steps(0.1, 1, alg).unwrap()).unwrap();
        assert!(out.state.u.iter().flatten().flatten().all(|&v| v == 0.0));
    }
}

#[test]
fn zero_steps_leave_the_state_unchanged() {
    let disc = Discretization::structured(4).unwrap();
    let (problem, _) = manufactured_problem(&case2_samples(1.0, 1.0).unwrap(), 1.0).unwrap();
    for alg in Algorithm::ALL {
        if alg == Algorithm::A1 {
            continue;
        }
        let out = run(&disc, &problem, &StepperConfig::new(0.1, 0.0, alg).unwrap()).unwrap();
        assert_eq!(out.state, init_state(&disc, &problem));
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.factorizations, 0);
    }
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let disc = Discretization::structured(8).unwrap();
    let (problem, _) = manufactured_problem(&case2_samples(1.0, 1.0).unwrap(), 1.0).unwrap();
    let cfg = StepperConfig::with_steps(1.0 / 64.0, 8, Algorithm::A2).unwrap();
    let on = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run(&disc, &problem, &cfg).unwrap())
    };
    let (a, b) = (on(1), on(4));
    assert_eq!(a.state, b.state);
    assert_eq!(a.energies(), b.energies());
}

#[test]
fn cg_and_cholesky_agree() {
    let disc = Discretization::structured(8).unwrap();
    let (problem, _) = manufactured_problem(&case2_samples(1.0, 1.0).unwrap(), 1.0).unwrap();
    let mut cfg = StepperConfig::with_steps(1.0 / 64.0, 8, Algorithm::A3).unwrap();
    let direct = run(&disc, &problem, &cfg).unwrap();
    cfg.solver = SolverKind::Cg { tol: 1e-13, max_iter: 2000 };
    let cg = run(&disc, &problem, &cfg).unwrap();
    assert!(sup_diff(&direct.state, &cg.state) <= 1e-9);
    assert_eq!(cg.factorizations, 0);
}

#[test]
fn energy_bound_holds_for_unforced_runs() {
    let disc = Discretization::structured(8).unwrap();
    let problem = ProblemSpec::unforced(case2_samples(2.0, 2.0).unwrap(), 1.0);
    for alg in [Algorithm::A2, Algorithm::A3, Algorithm::Baseline] {
        let mut cfg = StepperConfig::new(0.1, 2.0, alg).unwrap();
        cfg.track_stability = true;
        let out = run(&disc, &problem, &cfg).unwrap();
        let report = out.stability.clone().unwrap();
        assert!(report.all_hold(), "{alg}: {}", report.worst_ratio());
        assert!(out.energies().windows(2).all(|w| w[1] <= w[0]));
    }
}

/// P1 matrices on the two triangles of the unit cell, from coordinates.
fn hand_assembled(dofs: &[Point], nu: f64, kappa: f64, dt: f64) -> Vec<Vec<f64>> {
    let at = |p: Point| dofs.iter().position(|q| q == &p).unwrap();
    let tris = [[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]];
    let mut a = vec![vec![0.0; 4]; 4];
    for t in tris {
        let area = 0.5;
        // gradients of the barycentric functions
        let g: Vec<[f64; 2]> = (0..3)
            .map(|k| {
                let (p, q) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                [(p[1] - q[1]) / (2.0 * area), (q[0] - p[0]) / (2.0 * area)]
            })
            .collect();
        for r in 0..3 {
            for c in 0..3 {
                let mass = area / 12.0 * if r == c { 2.0 } else { 1.0 };
                let stiff = area * (g[r][0] * g[c][0] + g[r][1] * g[c][1]);
                a[at(t[r])][at(t[c])] += mass / dt + nu * stiff;
            }
        }
    }
    let (i, j) = (at([0.0, 0.0]), at([1.0, 0.0]));
    for (r, c, w) in [(i, i, 2.0), (j, j, 2.0), (i, j, 1.0), (j, i, 1.0)] {
        a[r][c] += kappa * w / 6.0;
    }
    a
}

#[test]
fn single_cell_system_matches_hand_assembly() {
    let disc = Discretization::structured(1).unwrap();
    let (nu, kappa, dt) = (1.7, 3.0, 0.25);
    let ops = disc.ops(Subdomain::Upper);
    let a = ops
        .mass
        .add_scaled(1.0 / dt, &ops.unit_stiffness, nu)
        .unwrap()
        .add_scaled(1.0, &ops.interface.own, kappa)
        .unwrap();
    let dofs: Vec<Point> = ops.assembler.dofs.nodes.iter().map(|&g| disc.mesh.nodes[g]).collect();
    let want = hand_assembled(&dofs, nu, kappa, dt);
    let got = a.to_dense();
    for r in 0..4 {
        for c in 0..4 {
            assert!((got[r][c] - want[r][c]).abs() <= 1e-13, "({r},{c}) {} vs {}", got[r][c], want[r][c]);
        }
    }
    // every node of the single cell carries boundary data
    let (sys, _) = build_system_matrix_a1(&disc, Subdomain::Upper, &CoefficientField::Constant(nu), kappa, dt).unwrap();
    assert_eq!(sys.matrix.to_dense(), CsrMatrix::identity(4).to_dense());
}

#[test]
fn halving_the_step_adds_half_the_scaled_mass() {
    let disc = Discretization::structured(4).unwrap();
    let nu = CoefficientField::Constant(1.0);
    let dt = 0.05;
    for sub in Subdomain::ALL {
        let (a, _) = build_system_matrix_a1(&disc, sub, &nu, 10.0, dt).unwrap();
        let (b, _) = build_system_matrix_a1(&disc, sub, &nu, 10.0, 2.0 * dt).unwrap();
        let ops = disc.ops(sub);
        let m = DirichletSystem::new(&ops.mass, &ops.assembler.dofs.dirichlet).matrix.to_dense();
        let (a, b) = (a.matrix.to_dense(), b.matrix.to_dense());
        let fixed = &ops.assembler.dofs.dirichlet;
        for r in 0..a.len() {
            for c in 0..a.len() {
                let want = if fixed.contains(&r) || fixed.contains(&c) { 0.0 } else { m[r][c] / (2.0 * dt) };
                assert!((a[r][c] - b[r][c] - want).abs() <= 1e-13);
            }
        }
    }
}

#[test]
fn interpolation_error_decays_quadratically() {
    let ms = ManufacturedSolution::new(1.0, 1.0, CoefficientField::Constant(1.0), CoefficientField::Constant(1.0)).unwrap();
    let err = |n| {
        let mesh = Mesh::two_domain(n).unwrap();
        let disc = Discretization::new(mesh.clone()).unwrap();
        let asm = &disc.ops(Subdomain::Upper).assembler;
        let u = asm.dofs.interpolate(&mesh, |p| ms.u(Subdomain::Upper, p, 1.0));
        asm.error_l2(&u, |p| ms.u(Subdomain::Upper, p, 1.0)).unwrap()
    };
    let ratio = err(4) / err(8);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn step_failures_name_the_phase() {
    let disc = Discretization::structured(4).unwrap();
    let problem = ProblemSpec::unforced(case1_samples(1.0).unwrap(), 1.0);
    let mut cfg = StepperConfig::with_steps(0.1, 1, Algorithm::A2).unwrap();
    cfg.solver = SolverKind::Cg { tol: 1e-14, max_iter: 1 };
    let err = run(&disc, &problem, &cfg).unwrap_err();
    assert!(matches!(err, Error::StepFailed { step: 1, .. }), "{err}");
    assert!(err.is_numerical());
}
