//! Capacity bounds for the lossy channel under a mean photon-number
//! constraint.
//!
//! The memoryless channel at budget N has the (conjectured) Gaussian rate
//! `G = n[g(ηN + (1-η)M) - g((1-η)M)]` with `g(x) = (x+1)ln(x+1) - x ln x`.
//! For the correlated-noise channel the same function evaluated at shifted
//! budgets gives one upper bound through the equivalent memoryless channel
//! at `N̄`, a second through the output photon ceiling `N_out`, and a lower
//! bound through thermal encodings prepared behind the counter-squeezer,
//! which are affordable only when `N' = (N - s1)/s0` is positive. All
//! rates here are totals over the n uses; `BoundsReport` stores per-use
//! values.

use thiserror::Error;

use crate::channel::{ChannelError, ChannelParams};
use crate::gaussian::thermal_entropy;

#[derive(Debug, Error)]
pub enum CapacityError {
    #[error("g(x) requires a nonnegative finite argument, got {0}")]
    NegativeArgument(f64),
    #[error("photon budget must be nonnegative and finite, got {0}")]
    BadBudget(f64),
    #[error("transmissivity must lie in [0, 1], got {0}")]
    TransmissivityRange(f64),
    #[error("environment photon number must be nonnegative and finite, got {0}")]
    EnvironmentPhotons(f64),
    #[error("channel uses must be at least 1")]
    ZeroUses,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("bound ordering violated: {0}")]
    OrderingViolation(String),
}

type Result<T> = std::result::Result<T, CapacityError>;

/// Entropy of a thermal state with mean photon number `x`, in nats.
pub fn g(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(CapacityError::NegativeArgument(x));
    }
    Ok(thermal_entropy(x))
}

fn validate_budget(n_input: f64) -> Result<()> {
    if !(n_input >= 0.0) || !n_input.is_finite() {
        return Err(CapacityError::BadBudget(n_input));
    }
    Ok(())
}

/// Total Gaussian rate of the memoryless channel over n uses,
/// `n[g(ηN + (1-η)M) - g((1-η)M)]`.
pub fn gaussian_rate(n: usize, eta: f64, n_input: f64, env_photons: f64) -> Result<f64> {
    if n == 0 {
        return Err(CapacityError::ZeroUses);
    }
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(CapacityError::TransmissivityRange(eta));
    }
    if !(env_photons >= 0.0) || !env_photons.is_finite() {
        return Err(CapacityError::EnvironmentPhotons(env_photons));
    }
    validate_budget(n_input)?;
    let noise = (1.0 - eta) * env_photons;
    Ok(n as f64 * (thermal_entropy(eta * n_input + noise) - thermal_entropy(noise)))
}

/// Upper bound through the equivalent memoryless channel with the enlarged
/// budget `N̄`.
pub fn upper_bound_input(params: &ChannelParams, n_input: f64) -> Result<f64> {
    validate_budget(n_input)?;
    let n_bar = params.spectral()?.n_bar(n_input);
    gaussian_rate(params.n(), params.eta(), n_bar, params.env_photons())
}

/// Upper bound through the output photon ceiling: maximum output entropy of
/// a thermal state at `N_out` minus the vacuum-input output entropy.
pub fn upper_bound_output(params: &ChannelParams, n_input: f64) -> Result<f64> {
    validate_budget(n_input)?;
    let data = params.spectral()?;
    let eta = params.eta();
    let n_out = eta * n_input + (1.0 - eta) * (data.s0() * params.env_photons() + data.s1());
    let noise = (1.0 - eta) * params.env_photons();
    Ok(params.n() as f64 * (thermal_entropy(n_out) - thermal_entropy(noise)))
}

/// Achievable rate of the thermal encoding, with its feasibility flag.
#[derive(Debug, Clone, Copy)]
pub struct LowerBound {
    /// Total rate over the n uses; zero when infeasible.
    pub rate: f64,
    /// True when the reduced budget `N' = (N - s1)/s0` is positive.
    pub feasible: bool,
    /// The reduced budget itself, which may be nonpositive.
    pub n_prime: f64,
}

/// Lower bound from thermal encodings prepared behind the counter-squeezer.
pub fn lower_bound(params: &ChannelParams, n_input: f64) -> Result<LowerBound> {
    validate_budget(n_input)?;
    let data = params.spectral()?;
    let n_prime = (n_input - data.s1()) / data.s0();
    if n_prime > 0.0 {
        let rate = gaussian_rate(params.n(), params.eta(), n_prime, params.env_photons())?;
        Ok(LowerBound {
            rate,
            feasible: true,
            n_prime,
        })
    } else {
        Ok(LowerBound {
            rate: 0.0,
            feasible: false,
            n_prime,
        })
    }
}

/// Per-use rates and budgets for one channel instance. The memoryless
/// baseline is the conjectured capacity of the uncorrelated channel; the
/// upper bounds hold under the same Gaussian-maximizer conjectures and are
/// reported side by side, neither claimed tighter.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub n: usize,
    pub eta: f64,
    pub env_photons: f64,
    pub input_photons: f64,
    /// Conjectured memoryless rate per use at budget N.
    pub baseline: f64,
    /// Achievable rate per use of the thermal encoding (0 when infeasible).
    pub lower: f64,
    /// Per-use upper bound through the enlarged input budget N̄.
    pub upper_input: f64,
    /// Per-use upper bound through the output photon ceiling.
    pub upper_output: f64,
    pub n_bar: f64,
    pub n_prime: f64,
    pub feasible_lower: bool,
}

/// Evaluates every bound and asserts their ordering before returning.
pub fn bounds_report(params: &ChannelParams, n_input: f64) -> Result<BoundsReport> {
    validate_budget(n_input)?;
    let n = params.n() as f64;
    let baseline =
        gaussian_rate(params.n(), params.eta(), n_input, params.env_photons())? / n;
    let lb = lower_bound(params, n_input)?;
    let lower = lb.rate / n;
    let upper_input = upper_bound_input(params, n_input)? / n;
    let upper_output = upper_bound_output(params, n_input)? / n;
    let n_bar = params.spectral()?.n_bar(n_input);

    let slack = 1e-12;
    if lower > upper_input + slack || lower > upper_output + slack {
        return Err(CapacityError::OrderingViolation(format!(
            "lower {lower} exceeds an upper bound ({upper_input}, {upper_output})"
        )));
    }
    if lb.feasible && lower > baseline + slack {
        return Err(CapacityError::OrderingViolation(format!(
            "lower {lower} exceeds baseline {baseline}"
        )));
    }
    if baseline > upper_input + slack || baseline > upper_output + slack {
        return Err(CapacityError::OrderingViolation(format!(
            "baseline {baseline} exceeds an upper bound ({upper_input}, {upper_output})"
        )));
    }

    Ok(BoundsReport {
        n: params.n(),
        eta: params.eta(),
        env_photons: params.env_photons(),
        input_photons: n_input,
        baseline,
        lower,
        upper_input,
        upper_output,
        n_bar,
        n_prime: lb.n_prime,
        feasible_lower: lb.feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SqueezingMatrix;

    const TWO_LN_TWO: f64 = 1.3862943611198906;

    fn nn_params(n: usize, eta: f64, m: f64, xi: f64) -> ChannelParams {
        ChannelParams::new(eta, m, SqueezingMatrix::nearest_neighbor(n, xi).unwrap()).unwrap()
    }

    #[test]
    fn g_unit_values() {
        assert_eq!(g(0.0).unwrap(), 0.0);
        assert!((g(1.0).unwrap() - TWO_LN_TWO).abs() < 1e-15);
        let tiny = g(1e-15).unwrap();
        assert!(tiny.is_finite());
        assert!(tiny < 1e-12);
        assert!(g(-0.5).is_err());
        assert!(g(f64::NAN).is_err());
    }

    #[test]
    fn gaussian_rate_limits() {
        assert_eq!(gaussian_rate(3, 0.0, 2.0, 0.7).unwrap(), 0.0);
        assert!((gaussian_rate(1, 1.0, 1.0, 0.0).unwrap() - TWO_LN_TWO).abs() < 1e-15);
        // g(0.85) - g(0.15), frozen from scalar evaluation
        let expected = 0.83094029092572586;
        assert!((gaussian_rate(1, 0.7, 1.0, 0.5).unwrap() - expected).abs() < 1e-14);
        assert!(gaussian_rate(0, 0.5, 1.0, 0.0).is_err());
        assert!(gaussian_rate(1, 1.5, 1.0, 0.0).is_err());
        assert!(gaussian_rate(1, 0.5, -1.0, 0.0).is_err());
    }

    #[test]
    fn upper_bound_input_reduces_and_dominates() {
        let memoryless = ChannelParams::memoryless(2, 0.7, 0.5).unwrap();
        let ub = upper_bound_input(&memoryless, 1.0).unwrap();
        let rate = gaussian_rate(2, 0.7, 1.0, 0.5).unwrap();
        assert_eq!(ub, rate);

        let params = nn_params(2, 0.7, 0.5, 0.1);
        let ub = upper_bound_input(&params, 1.0).unwrap();
        assert!(ub >= rate);
        // 2[g(0.7·N̄ + 0.15) - g(0.15)] at N̄ = 1.7377370464619055
        assert!((ub - 2.3329958298258802).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_output_values() {
        let memoryless = ChannelParams::memoryless(2, 0.7, 0.5).unwrap();
        assert_eq!(
            upper_bound_output(&memoryless, 1.0).unwrap(),
            gaussian_rate(2, 0.7, 1.0, 0.5).unwrap()
        );

        let vacuum_env = ChannelParams::memoryless(1, 0.6, 0.0).unwrap();
        let ub = upper_bound_output(&vacuum_env, 1.5).unwrap();
        assert!((ub - g(0.9).unwrap()).abs() < 1e-14);

        let params = nn_params(2, 0.7, 0.5, 0.1);
        // 2[g(N_out) - g(0.15)] at N_out = 0.87432171155153644
        assert!((upper_bound_output(&params, 1.0).unwrap() - 1.6993397648782347).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_budget_and_feasibility() {
        let memoryless = ChannelParams::memoryless(2, 0.7, 0.5).unwrap();
        let lb = lower_bound(&memoryless, 1.0).unwrap();
        assert!(lb.feasible);
        assert_eq!(lb.n_prime, 1.0);
        assert_eq!(lb.rate, gaussian_rate(2, 0.7, 1.0, 0.5).unwrap());

        let params = nn_params(2, 0.7, 0.5, 0.1);
        let lb = lower_bound(&params, 1.0).unwrap();
        assert!(lb.feasible);
        assert!((lb.n_prime - 0.88751117785863254).abs() < 1e-12);

        // s1 >= N starves the thermal encoding
        let strong = nn_params(2, 0.7, 0.5, 0.8);
        let lb = lower_bound(&strong, 0.2).unwrap();
        assert!(!lb.feasible);
        assert_eq!(lb.rate, 0.0);
    }

    #[test]
    fn report_collapses_without_memory() {
        let params = ChannelParams::memoryless(4, 0.37, 0.8).unwrap();
        let report = bounds_report(&params, 1.3).unwrap();
        assert_eq!(report.baseline, report.lower);
        assert_eq!(report.baseline, report.upper_input);
        assert_eq!(report.baseline, report.upper_output);
        assert_eq!(report.n_bar, 1.3);
        assert_eq!(report.n_prime, 1.3);
        assert!(report.feasible_lower);
    }

    #[test]
    fn report_opaque_channel_is_silent() {
        let params = ChannelParams::memoryless(2, 0.0, 0.9).unwrap();
        let report = bounds_report(&params, 1.0).unwrap();
        assert_eq!(report.baseline, 0.0);
        assert_eq!(report.lower, 0.0);
        assert_eq!(report.upper_input, 0.0);
        assert_eq!(report.upper_output, 0.0);
    }

    #[test]
    fn report_orders_bounds_with_memory() {
        let params = nn_params(4, 0.65, 0.4, 0.2);
        let report = bounds_report(&params, 1.2).unwrap();
        assert!(report.lower <= report.baseline + 1e-12);
        assert!(report.baseline <= report.upper_input + 1e-12);
        assert!(report.baseline <= report.upper_output + 1e-12);
        assert!(report.n_bar >= 1.2);
    }
}
