mod common;

use proptest::prelude::*;
use trajopt_core::fem::mesh::make_uniform_mesh;
use trajopt_core::ipm::{self, SolveStatus};
use trajopt_core::ocp::corpus_get;
use trajopt_core::transcription::{build_qpm, initial_guess, InitialGuess};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kkt_residual_vanishes_at_stationary_points(seed in any::<u64>()) {
        common::kkt_zero_at_stationary_point(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn reduced_step_solves_full_system(seed in any::<u64>()) {
        common::reduced_matches_full_step(seed).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jacobians_match_finite_differences(seed in any::<u64>(), k in 0usize..common::FD_PROBLEMS.len()) {
        common::jacobian_matches_fd(common::FD_PROBLEMS[k], seed).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn solves_are_deterministic() {
    let (pb, reference) = corpus_get("vdp").unwrap();
    let mesh = make_uniform_mesh(pb.horizon, 8).unwrap();
    let nlp = build_qpm(&pb, &mesh, 3, 6, 6, 1e-4).unwrap();
    let x0 = initial_guess(&nlp, InitialGuess::Linear, reference.as_ref()).unwrap();
    let cfg = nlp.ipm_config(1e-7);
    let a = ipm::solve(&nlp, &x0, &cfg).unwrap();
    let b = ipm::solve(&nlp, &x0, &cfg).unwrap();
    assert_eq!(a.status, SolveStatus::Converged);
    assert_eq!(a.state.x, b.state.x);
    assert_eq!(a.merit_history, b.merit_history);
    assert_eq!(a.inner_iters, b.inner_iters);
}
