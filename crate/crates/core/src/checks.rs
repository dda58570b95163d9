//! Verification routines: decomposition and commutation deviations, photon
//! bookkeeping ceilings and covariance-vs-Fock comparisons. The CLI
//! `verify` subcommand and the acceptance suite both run through these.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::channel::{
    apply_memory, apply_memory_decomposed, global_beam_splitter, multimode_squeezer, ChannelError,
    ChannelParams,
};
use crate::fock::{self, FockError, FockOperator};
use crate::gaussian::{
    max_abs_diff, thermal_state, GaussianError, GaussianState, SymplecticTransform,
};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("oracle comparison supports 1 or 2 uses, got {0}")]
    TooManyModes(usize),
    #[error("input recipe has {found} modes, channel expects {expected}")]
    RecipeModes { found: usize, expected: usize },
}

type Result<T> = std::result::Result<T, CheckError>;

fn max_abs_vec_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Deviation between the direct memory map and its decomposed form.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionDeviation {
    pub mean: f64,
    pub covariance: f64,
}

pub fn decomposition_deviation(
    params: &ChannelParams,
    input: &GaussianState,
) -> Result<DecompositionDeviation> {
    decomposition_deviation_perturbed(params, input, 0.0)
}

/// Same comparison with an artificial perturbation added to the squeezer of
/// the decomposed route; used to prove the check can fail.
pub fn decomposition_deviation_perturbed(
    params: &ChannelParams,
    input: &GaussianState,
    perturbation: f64,
) -> Result<DecompositionDeviation> {
    let direct = apply_memory(params, input)?;
    let decomposed = if perturbation == 0.0 {
        apply_memory_decomposed(params, input)?
    } else {
        let squeezer = multimode_squeezer(params.squeezing())?;
        let mut mat = squeezer.matrix().clone();
        mat[[0, 0]] += perturbation;
        let perturbed = SymplecticTransform::from_matrix_unchecked(mat);
        // unchecked applies throughout: the intermediate states need not be
        // physical once the squeezer is broken
        let pre = perturbed.inverse().apply_unchecked(input);
        let env = thermal_state(params.n(), params.env_photons())?;
        let joint = pre.tensor(&env);
        let mixed = global_beam_splitter(params).apply_unchecked(&joint);
        let keep: Vec<usize> = (0..params.n()).collect();
        let mid = mixed.partial_trace(&keep)?;
        perturbed.apply_unchecked(&mid)
    };
    Ok(DecompositionDeviation {
        mean: max_abs_vec_diff(direct.mean(), decomposed.mean()),
        covariance: max_abs_diff(direct.covariance(), decomposed.covariance()),
    })
}

/// Photon bookkeeping margins; positive excess means a ceiling is violated.
#[derive(Debug, Clone, Copy)]
pub struct EnergyCeilingCheck {
    /// Photons of the input actually used, at most `n · budget`.
    pub input_photons: f64,
    /// Photons of the counter-squeezed input minus `n · N̄`.
    pub n_bar_excess: f64,
    /// Photons of the channel output minus `n · N_out`.
    pub n_out_excess: f64,
}

pub fn energy_ceiling_check(
    params: &ChannelParams,
    budget_per_use: f64,
    input: &GaussianState,
) -> Result<EnergyCeilingCheck> {
    let n = params.n() as f64;
    let squeezer = multimode_squeezer(params.squeezing())?;
    let counter_squeezed = squeezer.inverse().apply(input)?;
    let data = params.spectral()?;
    let n_bar_total = n * data.n_bar(budget_per_use);
    let out = apply_memory(params, input)?;
    let n_out_total = n * crate::channel::output_photon_ceiling(params, budget_per_use)?;
    Ok(EnergyCeilingCheck {
        input_photons: input.mean_photon_number(),
        n_bar_excess: counter_squeezed.mean_photon_number() - n_bar_total,
        n_out_excess: out.mean_photon_number() - n_out_total,
    })
}

/// Deviation of the squeezed-thermal photon count from its closed form
/// `Σ cosh(4 d_j) N' + n s1`.
pub fn thermal_identity_deviation(params: &ChannelParams, n_prime: f64) -> Result<f64> {
    let data = params.spectral()?;
    let squeezer = multimode_squeezer(params.squeezing())?;
    let thermal = thermal_state(params.n(), n_prime)?;
    let direct = squeezer.apply(&thermal)?.mean_photon_number();
    let closed: f64 = data
        .eigenvalues()
        .iter()
        .map(|d| (4.0 * d).cosh() * n_prime)
        .sum::<f64>()
        + params.n() as f64 * data.s1();
    Ok((direct - closed).abs())
}

/// Product input preparation shared between the covariance and Fock sides:
/// per mode, squeeze the vacuum then displace.
#[derive(Debug, Clone)]
pub struct ProductInput {
    pub modes: Vec<ModePreparation>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ModePreparation {
    /// Squeezing parameter in the x -> e^{2d} x convention.
    pub squeeze: f64,
    /// Mean of the x quadrature after squeezing.
    pub mean_x: f64,
    /// Mean of the p quadrature after squeezing.
    pub mean_p: f64,
}

impl ProductInput {
    pub fn vacuum(n: usize) -> Self {
        Self {
            modes: vec![ModePreparation::default(); n],
        }
    }

    pub fn gaussian(&self) -> Result<GaussianState> {
        let n = self.modes.len();
        let mut mean = Array1::zeros(2 * n);
        let mut cov = Array2::zeros((2 * n, 2 * n));
        for (k, prep) in self.modes.iter().enumerate() {
            mean[k] = prep.mean_x;
            mean[n + k] = prep.mean_p;
            cov[[k, k]] = 0.5 * (4.0 * prep.squeeze).exp();
            cov[[n + k, n + k]] = 0.5 * (-4.0 * prep.squeeze).exp();
        }
        Ok(GaussianState::new(mean, cov)?)
    }

    pub fn fock(&self, cutoff: usize) -> Result<FockOperator> {
        let n = self.modes.len();
        if n == 0 || n > 2 {
            return Err(CheckError::TooManyModes(n));
        }
        let mut per_mode: Vec<Array2<C64>> = Vec::with_capacity(n);
        for prep in &self.modes {
            let z = crate::spectral::SqueezingMatrix::new(ndarray::array![[prep.squeeze]])
                .expect("1x1 matrix is symmetric");
            let squeeze = fock::multimode_squeeze_unitary(&z, cutoff)?;
            let alpha = C64::new(
                prep.mean_x * std::f64::consts::FRAC_1_SQRT_2,
                prep.mean_p * std::f64::consts::FRAC_1_SQRT_2,
            );
            let displace = fock::displacement_operator(alpha, cutoff)?;
            let vac = fock::vacuum_density(1, cutoff)?;
            let u = displace.matrix().dot(squeeze.matrix());
            let rho = u.dot(vac.matrix()).dot(&u.t().mapv(|v| v.conj()));
            per_mode.push(rho);
        }
        let mat = match n {
            1 => per_mode.pop().unwrap(),
            _ => ndarray::linalg::kron(&per_mode[0], &per_mode[1]),
        };
        Ok(FockOperator::new(n, cutoff, mat)?)
    }
}

/// Deviations between the covariance-level channel and the dense Fock
/// simulation on the same product input.
#[derive(Debug, Clone, Copy)]
pub struct OracleComparison {
    pub mean: f64,
    pub covariance: f64,
    pub photons: f64,
    pub entropy: f64,
}

pub fn oracle_comparison(
    params: &ChannelParams,
    input: &ProductInput,
    cutoff: usize,
) -> Result<OracleComparison> {
    let n = params.n();
    if input.modes.len() != n {
        return Err(CheckError::RecipeModes {
            found: input.modes.len(),
            expected: n,
        });
    }
    if n > 2 {
        return Err(CheckError::TooManyModes(n));
    }
    let gauss_out = apply_memory(params, &input.gaussian()?)?;
    let fock_out = fock::simulate_channel(params, &input.fock(cutoff)?)?;
    let (fock_mean, fock_cov) = fock::moments(&fock_out)?;
    let mean = max_abs_vec_diff(gauss_out.mean(), &fock_mean);
    let covariance = max_abs_diff(gauss_out.covariance(), &fock_cov);
    let photons = (gauss_out.mean_photon_number() - fock::mean_photons(&fock_out)).abs();
    let entropy = (gauss_out.von_neumann_entropy()? - fock::entropy_nats(&fock_out)?).abs();
    Ok(OracleComparison {
        mean,
        covariance,
        photons,
        entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SqueezingMatrix;

    fn nn_params(n: usize, eta: f64, m: f64, xi: f64) -> ChannelParams {
        ChannelParams::new(eta, m, SqueezingMatrix::nearest_neighbor(n, xi).unwrap()).unwrap()
    }

    #[test]
    fn decomposition_holds_on_a_fixed_instance() {
        let params = nn_params(3, 0.62, 0.7, 0.12);
        let input = thermal_state(3, 0.5).unwrap();
        let dev = decomposition_deviation(&params, &input).unwrap();
        assert!(dev.covariance < 1e-10);
        assert!(dev.mean < 1e-12);
    }

    #[test]
    fn perturbation_is_detected() {
        let params = nn_params(2, 0.62, 0.3, 0.1);
        let input = thermal_state(2, 0.5).unwrap();
        let dev = decomposition_deviation_perturbed(&params, &input, 1e-4).unwrap();
        assert!(dev.covariance > 1e-9);
    }

    #[test]
    fn ceilings_hold_for_a_thermal_input() {
        let budget = 0.8;
        let params = nn_params(2, 0.7, 0.5, 0.1);
        let input = thermal_state(2, budget).unwrap();
        let check = energy_ceiling_check(&params, budget, &input).unwrap();
        assert!(check.input_photons <= 2.0 * budget + 1e-12);
        assert!(check.n_bar_excess <= 1e-9);
        assert!(check.n_out_excess <= 1e-9);
    }

    #[test]
    fn thermal_identity_closed_form() {
        let params = nn_params(2, 0.7, 0.5, 0.1);
        assert!(thermal_identity_deviation(&params, 0.9).unwrap() < 1e-9);
        let diag = ChannelParams::new(
            0.5,
            0.0,
            SqueezingMatrix::new(ndarray::array![[0.15, 0.0], [0.0, -0.08]]).unwrap(),
        )
        .unwrap();
        assert!(thermal_identity_deviation(&diag, 1.4).unwrap() < 1e-9);
    }

    #[test]
    fn product_input_sides_agree_before_the_channel() {
        let input = ProductInput {
            modes: vec![ModePreparation {
                squeeze: 0.1,
                mean_x: 0.4,
                mean_p: -0.3,
            }],
        };
        let gauss = input.gaussian().unwrap();
        let fockop = input.fock(30).unwrap();
        let (mean, cov) = fock::moments(&fockop).unwrap();
        assert!(max_abs_vec_diff(gauss.mean(), &mean) < 1e-7);
        assert!(max_abs_diff(gauss.covariance(), &cov) < 1e-7);
    }

    #[test]
    fn oracle_agrees_on_a_single_use() {
        let params = nn_params(1, 0.7, 0.5, 0.15);
        let cmp = oracle_comparison(&params, &ProductInput::vacuum(1), 30).unwrap();
        assert!(cmp.mean < 1e-6);
        assert!(cmp.covariance < 1e-5);
        assert!(cmp.photons < 1e-5);
        assert!(cmp.entropy < 1e-4);
    }
}
