//! Seeded random generators for property sweeps: orthogonal matrices,
//! squeezing matrices and energy-constrained Gaussian input states.

use ndarray::{Array1, Array2};
use ndarray_linalg::QR;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::gaussian::{
    diagonal_squeezer, passive_rotation, thermal_state, GaussianState, SymplecticTransform,
};
use crate::spectral::SqueezingMatrix;

/// Haar-ish random orthogonal matrix from the QR decomposition of a
/// Gaussian matrix, with column signs fixed by the R diagonal.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> Array2<f64> {
    assert!(n >= 1, "need at least one mode");
    let a = Array2::from_shape_fn((n, n), |_| rng.sample::<f64, _>(StandardNormal));
    let (mut q, r) = a.qr().expect("QR of a random Gaussian matrix");
    for j in 0..n {
        if r[[j, j]] < 0.0 {
            for i in 0..n {
                q[[i, j]] = -q[[i, j]];
            }
        }
    }
    q
}

/// Random symmetric squeezing matrix with entries bounded by `max_abs`.
pub fn random_squeezing<R: Rng>(n: usize, max_abs: f64, rng: &mut R) -> SqueezingMatrix {
    let raw = Array2::from_shape_fn((n, n), |_| rng.gen_range(-max_abs..=max_abs));
    let sym = (&raw + &raw.t()) * 0.5;
    SqueezingMatrix::new(sym).expect("symmetrized random matrix is valid")
}

/// Random symplectic transform: rotation, bounded per-mode squeezers,
/// rotation.
pub fn random_symplectic<R: Rng>(n: usize, max_squeeze: f64, rng: &mut R) -> SymplecticTransform {
    let r1 = passive_rotation(&random_orthogonal(n, rng)).expect("orthogonal by construction");
    let r2 = passive_rotation(&random_orthogonal(n, rng)).expect("orthogonal by construction");
    let d: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(-max_squeeze..=max_squeeze))
        .collect();
    let squeeze = diagonal_squeezer(&d).expect("finite squeezing parameters");
    r1.compose(&squeeze)
        .and_then(|s| s.compose(&r2))
        .expect("composition of symplectic transforms")
}

/// Random mixed, squeezed, correlated Gaussian state obeying the photon
/// budget `n · max_photons_per_use`.
///
/// A random symplectic is applied to a thermal state, an optional random
/// displacement is added, and the state is then contracted toward the
/// vacuum (a convex combination of covariances plus a matched rescaling of
/// the mean) until its photon number hits a random target below the budget.
pub fn random_constrained_state<R: Rng>(
    n: usize,
    max_photons_per_use: f64,
    with_mean: bool,
    rng: &mut R,
) -> GaussianState {
    let budget = n as f64 * max_photons_per_use;
    let base = thermal_state(n, rng.gen_range(0.0..1.5)).expect("valid thermal parameters");
    let transform = random_symplectic(n, 0.3, rng);
    let state = transform.apply(&base).expect("matching mode counts");

    let mean = if with_mean {
        Array1::from_shape_fn(2 * n, |_| 0.5 * rng.sample::<f64, _>(StandardNormal))
    } else {
        Array1::zeros(2 * n)
    };
    let state =
        GaussianState::new(mean, state.covariance().clone()).expect("valid transformed state");

    let photons = state.mean_photon_number();
    let target = rng.gen_range(0.0..=1.0) * budget;
    let alpha = if photons > target && photons > 0.0 {
        target / photons
    } else {
        1.0
    };
    let dim = 2 * n;
    let vacuum_cov = Array2::<f64>::eye(dim) * 0.5;
    let cov = &vacuum_cov * (1.0 - alpha) + state.covariance() * alpha;
    let mean = state.mean() * alpha.sqrt();
    GaussianState::new(mean, cov).expect("convex combination with the vacuum is valid")
}
