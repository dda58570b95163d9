//! The lossy bosonic channel over n uses, memoryless and with correlated
//! noise, realized as Gaussian maps at the covariance level.
//!
//! Each input mode is mixed with one environment mode on a beam splitter of
//! transmissivity η. The memoryless map uses a product thermal environment;
//! the memory map squeezes the environment with a multi-mode squeezer built
//! from the squeezing matrix. The same squeezer applied to the input modes
//! turns the memory map into a memoryless one conjugated by a Gaussian
//! unitary, and `apply_memory_decomposed` exposes that pipeline so the
//! equivalence can be checked numerically.

use ndarray::Array2;
use thiserror::Error;

use crate::gaussian::{
    max_abs, passive_rotation, thermal_state, GaussianError, GaussianState, SymplecticTransform,
};
use crate::spectral::{analyze, SpectralData, SpectralError, SqueezingMatrix};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("transmissivity must lie in [0, 1], got {0}")]
    TransmissivityRange(f64),
    #[error("environment photon number must be nonnegative and finite, got {0}")]
    EnvironmentPhotons(f64),
    #[error("squeezing matrix is {z_n}x{z_n} but the channel has {n} uses")]
    SqueezingSize { z_n: usize, n: usize },
    #[error("input photon budget must be nonnegative and finite, got {0}")]
    InputPhotons(f64),
    #[error("input state has {found} modes, channel expects {expected}")]
    ModeCount { found: usize, expected: usize },
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

type Result<T> = std::result::Result<T, ChannelError>;

/// Parameters of one channel instance: uses, transmissivity, environment
/// temperature and the environment squeezing matrix.
#[derive(Debug, Clone)]
pub struct ChannelParams {
    n: usize,
    eta: f64,
    env_photons: f64,
    squeezing: SqueezingMatrix,
}

impl ChannelParams {
    pub fn new(eta: f64, env_photons: f64, squeezing: SqueezingMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
            return Err(ChannelError::TransmissivityRange(eta));
        }
        if !(env_photons >= 0.0) || !env_photons.is_finite() {
            return Err(ChannelError::EnvironmentPhotons(env_photons));
        }
        Ok(Self {
            n: squeezing.n(),
            eta,
            env_photons,
            squeezing,
        })
    }

    /// Memoryless instance: all-zero squeezing matrix.
    pub fn memoryless(n: usize, eta: f64, env_photons: f64) -> Result<Self> {
        Self::new(eta, env_photons, SqueezingMatrix::zero(n)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn env_photons(&self) -> f64 {
        self.env_photons
    }

    pub fn squeezing(&self) -> &SqueezingMatrix {
        &self.squeezing
    }

    pub fn spectral(&self) -> Result<SpectralData> {
        Ok(analyze(&self.squeezing)?)
    }
}

/// The 2n-mode transform pairing input mode k with environment mode n+k
/// through a beam splitter of transmissivity η.
pub fn global_beam_splitter(params: &ChannelParams) -> SymplecticTransform {
    let n = params.n;
    let t = params.eta.sqrt();
    let r = (1.0 - params.eta).sqrt();
    let modes = 2 * n;
    let mut mat = Array2::zeros((2 * modes, 2 * modes));
    // identical action on the x block and the p block
    for block in 0..2 {
        let o = block * modes;
        for k in 0..n {
            mat[[o + k, o + k]] = t;
            mat[[o + k, o + n + k]] = -r;
            mat[[o + n + k, o + k]] = r;
            mat[[o + n + k, o + n + k]] = t;
        }
    }
    SymplecticTransform::new(mat).expect("paired beam splitters are symplectic")
}

/// Multi-mode squeezer for the squeezing matrix `Z = V·D·Vᵀ`, factorized as
/// `rotation(V) ∘ diagonal squeezers(d_j) ∘ rotation(Vᵀ)`.
pub fn multimode_squeezer(z: &SqueezingMatrix) -> Result<SymplecticTransform> {
    let data = analyze(z)?;
    multimode_squeezer_from_spectral(&data)
}

pub(crate) fn multimode_squeezer_from_spectral(
    data: &SpectralData,
) -> Result<SymplecticTransform> {
    let v = data.eigenvectors();
    let rot = passive_rotation(v)?;
    let rot_t = passive_rotation(&v.t().to_owned())?;
    let diag = crate::gaussian::diagonal_squeezer(data.eigenvalues())?;
    Ok(rot.compose(&diag)?.compose(&rot_t)?)
}

fn check_modes(params: &ChannelParams, input: &GaussianState) -> Result<()> {
    if input.num_modes() != params.n {
        return Err(ChannelError::ModeCount {
            found: input.num_modes(),
            expected: params.n,
        });
    }
    Ok(())
}

fn trace_down(params: &ChannelParams, joint: &GaussianState) -> Result<GaussianState> {
    let keep: Vec<usize> = (0..params.n).collect();
    let mixed = global_beam_splitter(params).apply(joint)?;
    Ok(mixed.partial_trace(&keep)?)
}

/// Memoryless map: mix the input with a product thermal environment and
/// trace the environment out.
pub fn apply_memoryless(params: &ChannelParams, input: &GaussianState) -> Result<GaussianState> {
    check_modes(params, input)?;
    let env = thermal_state(params.n, params.env_photons)?;
    trace_down(params, &input.tensor(&env))
}

/// Memory map: same loss, but the environment is squeezed by the multi-mode
/// squeezer before the mixing.
pub fn apply_memory(params: &ChannelParams, input: &GaussianState) -> Result<GaussianState> {
    check_modes(params, input)?;
    let squeezer = multimode_squeezer(&params.squeezing)?;
    let env = squeezer.apply(&thermal_state(params.n, params.env_photons)?)?;
    trace_down(params, &input.tensor(&env))
}

/// The memory map evaluated through its decomposition: counter-squeeze the
/// input, send it through the memoryless channel, squeeze the output.
pub fn apply_memory_decomposed(
    params: &ChannelParams,
    input: &GaussianState,
) -> Result<GaussianState> {
    check_modes(params, input)?;
    let squeezer = multimode_squeezer(&params.squeezing)?;
    let pre = squeezer.inverse().apply(input)?;
    let mid = apply_memoryless(params, &pre)?;
    Ok(squeezer.apply(&mid)?)
}

/// Max-absolute entry of the commutator between the global beam splitter
/// and the squeezer acting identically on input and environment modes.
pub fn commutation_check(params: &ChannelParams) -> Result<f64> {
    let u = global_beam_splitter(params);
    let t = multimode_squeezer(&params.squeezing)?;
    let tt = t.direct_sum(&t);
    let ab = u.matrix().dot(tt.matrix());
    let ba = tt.matrix().dot(u.matrix());
    Ok(max_abs(&(&ab - &ba)))
}

/// Per-use output photon ceiling `N_out = ηN + (1-η)(s0·M + s1)` for inputs
/// constrained to `n_input` photons per use.
pub fn output_photon_ceiling(params: &ChannelParams, n_input: f64) -> Result<f64> {
    if !(n_input >= 0.0) || !n_input.is_finite() {
        return Err(ChannelError::InputPhotons(n_input));
    }
    let data = params.spectral()?;
    Ok(params.eta * n_input
        + (1.0 - params.eta) * (data.s0() * params.env_photons + data.s1()))
}
