//! Every example, run with small arguments.

#[path = "../examples/assemble_operators.rs"]
mod assemble_operators;
#[path = "../examples/convergence_study.rs"]
mod convergence_study;
#[path = "../examples/manufactured_gate.rs"]
mod manufactured_gate;
#[path = "../examples/mesh_dump.rs"]
mod mesh_dump;
#[path = "../examples/monte_carlo_mean.rs"]
mod monte_carlo_mean;
#[path = "../examples/random_inputs.rs"]
mod random_inputs;
#[path = "../examples/shared_factorization.rs"]
mod shared_factorization;
#[path = "../examples/stability_study.rs"]
mod stability_study;
#[path = "../examples/timing_study.rs"]
mod timing_study;

use ensemble_heat::ensemble::Algorithm;

#[test]
fn assemble_operators_recovers_geometry() {
    let [area, _, length] = assemble_operators::run_example(4).unwrap();
    assert!((area - 1.0).abs() < 1e-12);
    assert!((length - 1.0).abs() < 1e-12);
}

#[test]
fn convergence_study_errors_shrink() {
    let errs = convergence_study::run_example(Algorithm::A2, vec![4, 8]).unwrap();
    assert!(errs[1] < errs[0] / 3.0);
}

#[test]
fn manufactured_gate_passes() {
    assert!(manufactured_gate::run_example(50).unwrap() <= 1e-8);
}

#[test]
fn mesh_dump_node_count() {
    assert_eq!(mesh_dump::run_example(2).unwrap().num_nodes(), 15);
}

#[test]
fn monte_carlo_mean_reports_standard_errors() {
    let se = monte_carlo_mean::run_example(4).unwrap();
    assert!(!se.is_empty() && se.iter().all(|s| s.is_finite() && *s >= 0.0));
}

#[test]
fn random_inputs_premise() {
    random_inputs::run_example(3, 1).unwrap();
}

#[test]
fn shared_factorization_residual() {
    assert!(shared_factorization::run_example(8, 4).unwrap() <= 1e-10);
}

#[test]
fn stability_study_decays() {
    let ratios = stability_study::run_example(Algorithm::A3, 4, 1.0).unwrap();
    assert!(ratios.iter().all(|&r| r < 1.0));
}

#[test]
fn timing_study_counts() {
    let rows = timing_study::run_example(4, vec![2], 2).unwrap();
    assert_eq!(rows[0].factorizations, [16, 4, 2]);
}
