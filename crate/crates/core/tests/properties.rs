//! Property tests for the invariants the covariance formalism is supposed
//! to guarantee: symplectic structure, unitary invariance of photon number
//! and entropy, spectral identities and bound orderings.
//!
//! Proptest drives seeds and parameter ranges; the structured random
//! instances themselves come from the library's seeded sampling helpers.

use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use memchan_core::capacity::{bounds_report, g, gaussian_rate};
use memchan_core::channel::{
    apply_memory, apply_memory_decomposed, apply_memoryless, commutation_check,
    multimode_squeezer, ChannelParams,
};
use memchan_core::gaussian::{
    max_abs_diff, passive_rotation, symplectic_eigenvalues, thermal_state, SymplecticForm,
};
use memchan_core::sampling::{random_constrained_state, random_orthogonal, random_squeezing,
    random_symplectic};
use memchan_core::spectral::{analyze, reconstruction_residual, SqueezingMatrix};

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructed_transforms_preserve_the_symplectic_form(
        seed in any::<u64>(),
        n in 1usize..=8,
        strength in 0.0f64..=0.5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_squeezing(n, strength, &mut rng);
        let s = multimode_squeezer(&z).unwrap();
        let j = SymplecticForm::new(n).unwrap().matrix();
        let sjst = s.matrix().dot(&j).dot(&s.matrix().t());
        prop_assert!(max_abs(&(&sjst - &j)) < 1e-10);

        let r = random_symplectic(n, 0.3, &mut rng);
        let rjst = r.matrix().dot(&j).dot(&r.matrix().t());
        prop_assert!(max_abs(&(&rjst - &j)) < 1e-10);
    }

    #[test]
    fn apply_preserves_the_uncertainty_relation(
        seed in any::<u64>(),
        n in 1usize..=5,
        budget in 0.0f64..=3.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_constrained_state(n, budget, true, &mut rng);
        let s = random_symplectic(n, 0.3, &mut rng);
        let out = s.apply(&state).unwrap();
        let nu_min = out
            .symplectic_eigenvalues()
            .unwrap()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        prop_assert!(nu_min >= 0.5 - 1e-9);
    }

    #[test]
    fn passive_rotations_preserve_photon_number(
        seed in any::<u64>(),
        n in 1usize..=6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_constrained_state(n, 2.0, true, &mut rng);
        let rot = passive_rotation(&random_orthogonal(n, &mut rng)).unwrap();
        let out = rot.apply(&state).unwrap();
        prop_assert!((state.mean_photon_number() - out.mean_photon_number()).abs() < 1e-10);
    }

    #[test]
    fn symplectic_transforms_preserve_entropy(
        seed in any::<u64>(),
        n in 1usize..=5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_constrained_state(n, 2.0, false, &mut rng);
        let s = random_symplectic(n, 0.3, &mut rng);
        let out = s.apply(&state).unwrap();
        let s0 = state.von_neumann_entropy().unwrap();
        let s1 = out.von_neumann_entropy().unwrap();
        prop_assert!((s0 - s1).abs() < 1e-9);
    }

    #[test]
    fn tensor_then_partial_trace_is_exact(
        seed in any::<u64>(),
        n1 in 1usize..=3,
        n2 in 1usize..=3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_constrained_state(n1, 1.5, true, &mut rng);
        let b = random_constrained_state(n2, 1.5, true, &mut rng);
        let keep: Vec<usize> = (0..n1).collect();
        let back = a.tensor(&b).partial_trace(&keep).unwrap();
        prop_assert!(max_abs_diff(back.covariance(), a.covariance()) < 1e-12);
        let mean_dev = back
            .mean()
            .iter()
            .zip(a.mean().iter())
            .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
        prop_assert!(mean_dev < 1e-12);
    }

    #[test]
    fn thermal_entropy_is_n_times_g(
        n in 1usize..=6,
        photons in 0.0f64..=4.0,
    ) {
        let state = thermal_state(n, photons).unwrap();
        let expected = n as f64 * g(photons).unwrap();
        prop_assert!((state.von_neumann_entropy().unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn spectral_scalars_satisfy_their_identities(
        seed in any::<u64>(),
        n in 1usize..=16,
        strength in 0.0f64..=0.5,
        budget in 0.0f64..=10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_squeezing(n, strength, &mut rng);
        let data = analyze(&z).unwrap();

        prop_assert!(data.s0() >= 1.0);
        prop_assert!(data.s1() >= 0.0);
        prop_assert!(data.s2() >= 0.0);
        let half_angle = (data.s0() - 1.0) / 2.0;
        prop_assert!((data.s1() - half_angle).abs() <= 1e-12 * data.s1().max(1.0));
        prop_assert!(data.n_bar(budget) >= budget);
        prop_assert!(reconstruction_residual(&z, &data) < 1e-9);

        // scalars are even in the eigenvalues
        let negated = SqueezingMatrix::new(z.entries().mapv(|v| -v)).unwrap();
        let neg = analyze(&negated).unwrap();
        prop_assert!((data.s0() - neg.s0()).abs() <= 1e-12 * data.s0());
        prop_assert!((data.s1() - neg.s1()).abs() <= 1e-12 * data.s1().max(1.0));
        prop_assert!((data.s2() - neg.s2()).abs() <= 1e-12 * data.s2().max(1.0));
    }

    #[test]
    fn spectral_scalars_are_permutation_invariant(
        seed in any::<u64>(),
        n in 2usize..=8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_squeezing(n, 0.4, &mut rng);
        let data = analyze(&z).unwrap();

        // reverse the mode order on rows and columns
        let permuted = Array2::from_shape_fn((n, n), |(i, j)| {
            z.entries()[[n - 1 - i, n - 1 - j]]
        });
        let pz = SqueezingMatrix::new(permuted).unwrap();
        let pdata = analyze(&pz).unwrap();
        prop_assert!((data.s0() - pdata.s0()).abs() < 1e-12 * data.s0());
        prop_assert!((data.s1() - pdata.s1()).abs() < 1e-12 * data.s1().max(1.0));
        prop_assert!((data.s2() - pdata.s2()).abs() < 1e-12 * data.s2().max(1.0));
        prop_assert!((data.d_bar() - pdata.d_bar()).abs() < 1e-10 * data.d_bar().abs().max(1.0));
    }

    #[test]
    fn g_is_monotone_and_concave(
        x in 0.0f64..=10.0,
        y in 0.0f64..=10.0,
        delta in 1e-6f64..=1.0,
    ) {
        prop_assert!(g(x + delta).unwrap() >= g(x).unwrap());
        let midpoint = g((x + y) / 2.0).unwrap();
        let chord = (g(x).unwrap() + g(y).unwrap()) / 2.0;
        prop_assert!(midpoint >= chord - 1e-12);
    }

    #[test]
    fn bounds_order_and_collapse(
        seed in any::<u64>(),
        n in 1usize..=16,
        eta in 0.0f64..=1.0,
        env in 0.0f64..=5.0,
        budget in 0.0f64..=10.0,
        strength in 0.0f64..=0.5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_squeezing(n, strength, &mut rng);
        let params = ChannelParams::new(eta, env, z).unwrap();
        let report = bounds_report(&params, budget).unwrap();
        prop_assert!(report.lower <= report.upper_input.min(report.upper_output) + 1e-12);
        prop_assert!(report.baseline <= report.upper_input + 1e-12);
        prop_assert!(report.baseline <= report.upper_output + 1e-12);
        if report.feasible_lower {
            prop_assert!(report.lower <= report.baseline + 1e-12);
        }

        let memoryless = ChannelParams::memoryless(n, eta, env).unwrap();
        let collapsed = bounds_report(&memoryless, budget).unwrap();
        prop_assert!(collapsed.baseline == collapsed.lower);
        prop_assert!(collapsed.baseline == collapsed.upper_input);
        prop_assert!(collapsed.baseline == collapsed.upper_output);
    }

    #[test]
    fn bounds_are_monotone_in_the_budget(
        seed in any::<u64>(),
        n in 1usize..=8,
        eta in 0.0f64..=1.0,
        env in 0.0f64..=3.0,
        budget in 0.0f64..=8.0,
        bump in 1e-6f64..=2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_squeezing(n, 0.4, &mut rng);
        let params = ChannelParams::new(eta, env, z).unwrap();
        let lo = bounds_report(&params, budget).unwrap();
        let hi = bounds_report(&params, budget + bump).unwrap();
        prop_assert!(hi.baseline >= lo.baseline - 1e-12);
        prop_assert!(hi.lower >= lo.lower - 1e-12);
        prop_assert!(hi.upper_input >= lo.upper_input - 1e-12);
        prop_assert!(hi.upper_output >= lo.upper_output - 1e-12);
    }

    #[test]
    fn decomposition_and_commutation_hold_at_small_scale(
        seed in any::<u64>(),
        n in 1usize..=4,
        eta in 0.0f64..=1.0,
        env in 0.0f64..=2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_squeezing(n, 0.5, &mut rng);
        let params = ChannelParams::new(eta, env, z).unwrap();
        let input = random_constrained_state(n, 2.0, true, &mut rng);

        let direct = apply_memory(&params, &input).unwrap();
        let decomposed = apply_memory_decomposed(&params, &input).unwrap();
        prop_assert!(max_abs_diff(direct.covariance(), decomposed.covariance()) < 1e-9);

        prop_assert!(commutation_check(&params).unwrap() < 1e-10);
    }

    #[test]
    fn memoryless_gaussian_rate_matches_direct_entropy_difference(
        eta in 0.0f64..=1.0,
        env in 0.0f64..=3.0,
        budget in 0.0f64..=5.0,
    ) {
        // the rate formula against entropies of explicitly built states
        let n = 2usize;
        let params = ChannelParams::memoryless(n, eta, env).unwrap();
        let signal = thermal_state(n, budget).unwrap();
        let out_signal = apply_memoryless(&params, &signal).unwrap();
        let out_vacuum =
            apply_memoryless(&params, &memchan_core::gaussian::vacuum_state(n).unwrap()).unwrap();
        let direct =
            out_signal.von_neumann_entropy().unwrap() - out_vacuum.von_neumann_entropy().unwrap();
        let rate = gaussian_rate(n, eta, budget, env).unwrap();
        prop_assert!((rate - direct).abs() < 1e-9);
    }

    #[test]
    fn random_covariances_have_physical_spectra(
        seed in any::<u64>(),
        n in 1usize..=6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_constrained_state(n, 2.5, false, &mut rng);
        let nus = symplectic_eigenvalues(state.covariance()).unwrap();
        prop_assert_eq!(nus.len(), n);
        for nu in nus {
            prop_assert!(nu >= 0.5 - 1e-9);
        }
    }
}
