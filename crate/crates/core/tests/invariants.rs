use coherence_core::distill::{fidelity_distill, one_shot_distillable};
use coherence_core::linalg::{haar_random_pure, random_density, random_incoherent};
use coherence_core::monotones::{
    modified_trace_distance, relative_entropy_of_coherence, robustness, theta, theta_hat,
    trace_distance_of_coherence,
};
use coherence_core::pure_state::theta_pure;
use coherence_core::sampling::substream;
use coherence_core::transforms::{apply_choi, certify_dio, optimal_distillation_channel, random_dio_channel};
use coherence_core::{DensityMatrix, OperationClass};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

fn mixed(seed: u64, d: usize) -> DensityMatrix {
    let mut rng = substream(seed, d as u64);
    random_density(d, 1 + (seed % d as u64) as usize, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn theta_is_nondecreasing_in_m_and_dominates_theta_hat(seed in any::<u64>(), d in 2usize..=4, m in 0.0f64..4.0) {
        let rho = mixed(seed, d);
        let lower = theta(&rho, m).unwrap().value;
        let upper = theta(&rho, m + 0.75).unwrap().value;
        prop_assert!(lower <= upper + TOL, "{lower} > {upper}");
        prop_assert!(theta_hat(&rho, m).unwrap().value <= lower + TOL);
        prop_assert!(lower >= -TOL);
    }

    #[test]
    fn monotones_do_not_increase_under_dio(seed in any::<u64>(), d in 2usize..=3) {
        let rho = mixed(seed, d);
        let channel = random_dio_channel(d, &mut substream(seed, 99));
        prop_assert!(certify_dio(&channel).0);
        let out = apply_choi(&channel, &rho).unwrap();
        prop_assert!(theta(&out, 1.5).unwrap().value <= theta(&rho, 1.5).unwrap().value + TOL);
        prop_assert!(robustness(&out).unwrap().value <= robustness(&rho).unwrap().value + TOL);
        let before = trace_distance_of_coherence(&rho).unwrap().value;
        prop_assert!(trace_distance_of_coherence(&out).unwrap().value <= before + TOL);
    }

    #[test]
    fn fidelity_lies_between_one_over_m_and_one_and_decreases(seed in any::<u64>(), d in 2usize..=4) {
        let rho = mixed(seed, d);
        let mut previous = 1.0;
        for m in 2..=(d as u64 + 1) {
            let f = fidelity_distill(&rho, m, OperationClass::Dio).unwrap().fidelity;
            prop_assert!(f >= 1.0 / m as f64 - TOL && f <= 1.0 + TOL);
            prop_assert!(f <= previous + TOL);
            previous = f;
        }
    }

    #[test]
    fn one_shot_m_grows_with_epsilon(seed in any::<u64>(), d in 2usize..=3) {
        let rho = mixed(seed, d);
        let mut previous = 0;
        for eps in [0.0, 0.05, 0.2, 0.4] {
            let m = one_shot_distillable(&rho, eps, OperationClass::Mio).unwrap().m;
            prop_assert!(m >= previous);
            previous = m;
        }
    }

    #[test]
    fn optimal_channel_is_dio_and_attains_the_fidelity(seed in any::<u64>(), d in 2usize..=3, m in 2u64..=3) {
        let rho = mixed(seed, d);
        let report = fidelity_distill(&rho, m, OperationClass::Mio).unwrap();
        let channel = optimal_distillation_channel(report.witness_g.as_ref().unwrap(), m).unwrap();
        prop_assert!(certify_dio(&channel).0);
        let out = apply_choi(&channel, &rho).unwrap();
        let overlap = out.as_hermitian().as_matrix().iter().map(|z| z.re).sum::<f64>() / m as f64;
        prop_assert!((overlap - report.fidelity).abs() <= TOL, "{overlap} vs {}", report.fidelity);
    }

    #[test]
    fn pure_state_programs_match_the_closed_form(seed in any::<u64>(), d in 2usize..=5, m in 0usize..5) {
        let psi = haar_random_pure(d, &mut substream(seed, 1));
        let sdp = theta(&psi.projector(), m as f64).unwrap().value;
        prop_assert!((sdp - theta_pure(&psi, m as f64).unwrap()).abs() <= TOL);
    }

    #[test]
    fn incoherent_states_have_no_coherence(seed in any::<u64>(), d in 1usize..=4) {
        let rho = random_incoherent(d, &mut substream(seed, 2));
        prop_assert!(theta(&rho, 2.0).unwrap().value.abs() <= TOL);
        prop_assert!(modified_trace_distance(&rho).unwrap().value.abs() <= TOL);
        prop_assert!(relative_entropy_of_coherence(&rho).unwrap().abs() <= 1e-9);
        prop_assert_eq!(one_shot_distillable(&rho, 0.0, OperationClass::Dio).unwrap().m, 1);
    }
}
