//! Gaussian states and symplectic transformations on quadrature phase space.
//!
//! Conventions: `a = (x + i p)/sqrt(2)`, `[x, p] = i`, so the vacuum has
//! variance 1/2 in each quadrature and `<a†a> = (<x²> + <p²> - 1)/2` per
//! mode. Quadratures are ordered all-x-then-all-p, which makes passive
//! (photon-number preserving) transforms block-diagonal `V ⊕ V` and keeps
//! the symplectic form in the block shape `J = [[0, I], [-I, 0]]`.
//!
//! A Gaussian unitary acts on moments as `mean -> S·mean`,
//! `cov -> S·cov·Sᵀ`, with `S` symplectic: `S J Sᵀ = J`. Entropies are in
//! nats throughout.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use thiserror::Error;

/// Absolute tolerance for the `S J Sᵀ = J` check on constructed transforms.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Slack below 1/2 allowed for symplectic eigenvalues of physical states.
pub const UNCERTAINTY_TOL: f64 = 1e-9;
/// Relative symmetry tolerance for covariance matrices.
const SYMMETRY_RTOL: f64 = 1e-12;
/// Orthogonality tolerance for passive rotations.
const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Relative tolerance when matching the ± eigenvalue pairs of `J·Σ`.
const EIGENPAIR_RTOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("number of modes must be at least 1")]
    ZeroModes,
    #[error("mean photon number must be nonnegative, got {0}")]
    NegativePhotons(f64),
    #[error("transmissivity must lie in [0, 1], got {0}")]
    TransmissivityRange(f64),
    #[error("squeezing parameter must be finite, got {0}")]
    NonFiniteParameter(f64),
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not orthogonal: max |VᵀV - I| = {0:.3e}")]
    NotOrthogonal(f64),
    #[error("matrix is not symplectic: max |SJSᵀ - J| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotSymplectic { deviation: f64, tolerance: f64 },
    #[error("covariance matrix is not symmetric: max |Σ - Σᵀ| = {0:.3e}")]
    NotSymmetric(f64),
    #[error("uncertainty relation violated: min symplectic eigenvalue {0} < 1/2")]
    UncertaintyViolation(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid mode selection: {0}")]
    InvalidModeSelection(String),
    #[error("eigenvalue computation failed: {0}")]
    Eigensolver(String),
    #[error("symplectic eigenvalues of J·Σ do not pair up: |{0} - {1}| too large")]
    UnpairedEigenvalues(f64, f64),
}

type Result<T> = std::result::Result<T, GaussianError>;

/// Entropy of a thermal state with `x` mean photons, `(x+1)ln(x+1) - x ln x`.
///
/// The `x ln x` singularity at zero is removable; values below 1e-12 return
/// exactly 0 so that downstream differences of equal arguments cancel.
pub(crate) fn thermal_entropy(x: f64) -> f64 {
    if x < 1e-12 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).ln() - x * x.ln()
}

/// Largest absolute entry, the max norm used by the comparison tests.
pub fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute entrywise difference between two equal-shape matrices.
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// The symplectic form for `num_modes` modes in x-then-p block ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    pub num_modes: usize,
}

impl SymplecticForm {
    pub fn new(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(GaussianError::ZeroModes);
        }
        Ok(Self { num_modes })
    }

    /// The 2m×2m block matrix `[[0, I], [-I, 0]]`.
    pub fn matrix(&self) -> Array2<f64> {
        let m = self.num_modes;
        let mut j = Array2::zeros((2 * m, 2 * m));
        for k in 0..m {
            j[[k, m + k]] = 1.0;
            j[[m + k, k]] = -1.0;
        }
        j
    }
}

/// A Gaussian state of `num_modes` bosonic modes: first and second
/// quadrature moments.
#[derive(Debug, Clone)]
pub struct GaussianState {
    num_modes: usize,
    mean: Array1<f64>,
    covariance: Array2<f64>,
}

impl GaussianState {
    /// Validates symmetry and the uncertainty relation, then stores the
    /// exactly symmetrized covariance.
    pub fn new(mean: Array1<f64>, covariance: Array2<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(GaussianError::DimensionMismatch(format!(
                "mean length {dim} is not twice a positive mode count"
            )));
        }
        let num_modes = dim / 2;
        if covariance.dim() != (dim, dim) {
            return Err(GaussianError::DimensionMismatch(format!(
                "covariance is {:?}, expected ({dim}, {dim})",
                covariance.dim()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) || covariance.iter().any(|v| !v.is_finite()) {
            return Err(GaussianError::NonFinite);
        }
        let asym = max_abs_diff(&covariance, &covariance.t().to_owned());
        if asym > SYMMETRY_RTOL * max_abs(&covariance).max(1.0) {
            return Err(GaussianError::NotSymmetric(asym));
        }
        let covariance = symmetrize(&covariance);
        let nus = symplectic_eigenvalues(&covariance)?;
        let nu_min = nus.iter().cloned().fold(f64::INFINITY, f64::min);
        if nu_min < 0.5 - UNCERTAINTY_TOL {
            return Err(GaussianError::UncertaintyViolation(nu_min));
        }
        Ok(Self {
            num_modes,
            mean,
            covariance,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &Array2<f64> {
        &self.covariance
    }

    /// Total mean photon number `Σ_k <a_k†a_k>`.
    pub fn mean_photon_number(&self) -> f64 {
        let trace: f64 = self.covariance.diag().sum();
        let mean_sq: f64 = self.mean.iter().map(|v| v * v).sum();
        0.5 * trace + 0.5 * mean_sq - 0.5 * self.num_modes as f64
    }

    /// Symplectic eigenvalues of the covariance matrix, sorted descending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.covariance)
    }

    /// Von Neumann entropy in nats, `Σ_j g(ν_j - 1/2)` over the symplectic
    /// spectrum.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        let nus = self.symplectic_eigenvalues()?;
        let nu_min = nus.iter().cloned().fold(f64::INFINITY, f64::min);
        if nu_min < 0.5 - UNCERTAINTY_TOL {
            return Err(GaussianError::UncertaintyViolation(nu_min));
        }
        Ok(nus
            .iter()
            .map(|nu| thermal_entropy((nu - 0.5).max(0.0)))
            .sum())
    }

    /// Tensor product, re-sorted into global x-then-p ordering.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (m1, m2) = (self.num_modes, other.num_modes);
        let m = m1 + m2;
        let mut mean = Array1::zeros(2 * m);
        for k in 0..m1 {
            mean[k] = self.mean[k];
            mean[m + k] = self.mean[m1 + k];
        }
        for k in 0..m2 {
            mean[m1 + k] = other.mean[k];
            mean[m + m1 + k] = other.mean[m2 + k];
        }
        let mut cov = Array2::zeros((2 * m, 2 * m));
        // global quadrature index of local index i within each factor
        let embed1 = |i: usize| if i < m1 { i } else { m + (i - m1) };
        let embed2 = |i: usize| if i < m2 { m1 + i } else { m + m1 + (i - m2) };
        for i in 0..2 * m1 {
            for j in 0..2 * m1 {
                cov[[embed1(i), embed1(j)]] = self.covariance[[i, j]];
            }
        }
        for i in 0..2 * m2 {
            for j in 0..2 * m2 {
                cov[[embed2(i), embed2(j)]] = other.covariance[[i, j]];
            }
        }
        GaussianState {
            num_modes: m,
            mean,
            covariance: cov,
        }
    }

    /// Restriction to the listed modes, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<GaussianState> {
        if keep.is_empty() {
            return Err(GaussianError::InvalidModeSelection(
                "kept mode set is empty".into(),
            ));
        }
        let m = self.num_modes;
        let mut seen = vec![false; m];
        for &k in keep {
            if k >= m {
                return Err(GaussianError::InvalidModeSelection(format!(
                    "mode index {k} out of range for {m} modes"
                )));
            }
            if seen[k] {
                return Err(GaussianError::InvalidModeSelection(format!(
                    "mode index {k} repeated"
                )));
            }
            seen[k] = true;
        }
        let mk = keep.len();
        let rows: Vec<usize> = keep
            .iter()
            .map(|&k| k)
            .chain(keep.iter().map(|&k| m + k))
            .collect();
        let mut mean = Array1::zeros(2 * mk);
        for (i, &r) in rows.iter().enumerate() {
            mean[i] = self.mean[r];
        }
        let mut cov = Array2::zeros((2 * mk, 2 * mk));
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in rows.iter().enumerate() {
                cov[[i, j]] = self.covariance[[r, c]];
            }
        }
        Ok(GaussianState {
            num_modes: mk,
            mean,
            covariance: cov,
        })
    }
}

fn symmetrize(m: &Array2<f64>) -> Array2<f64> {
    let mt = m.t().to_owned();
    (m + &mt) * 0.5
}

/// Vacuum state of `m` modes: zero mean, covariance `I/2`.
pub fn vacuum_state(m: usize) -> Result<GaussianState> {
    if m == 0 {
        return Err(GaussianError::ZeroModes);
    }
    Ok(GaussianState {
        num_modes: m,
        mean: Array1::zeros(2 * m),
        covariance: Array2::eye(2 * m) * 0.5,
    })
}

/// Thermal state with `mean_photons` per mode: covariance `(M + 1/2)·I`.
pub fn thermal_state(m: usize, mean_photons: f64) -> Result<GaussianState> {
    if m == 0 {
        return Err(GaussianError::ZeroModes);
    }
    if !(mean_photons >= 0.0) {
        return Err(GaussianError::NegativePhotons(mean_photons));
    }
    Ok(GaussianState {
        num_modes: m,
        mean: Array1::zeros(2 * m),
        covariance: Array2::eye(2 * m) * (mean_photons + 0.5),
    })
}

/// A real symplectic matrix acting on the 2m quadratures of `num_modes`
/// modes.
#[derive(Debug, Clone)]
pub struct SymplecticTransform {
    num_modes: usize,
    matrix: Array2<f64>,
}

impl SymplecticTransform {
    /// Checks `S J Sᵀ = J`. The tolerance scales with `‖S‖∞²` so that
    /// strongly squeezing transforms built from exact formulas are not
    /// rejected on rounding noise alone.
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(GaussianError::DimensionMismatch(format!(
                "symplectic matrix must be square with even dimension, got ({r}, {c})"
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(GaussianError::NonFinite);
        }
        let num_modes = r / 2;
        let j = SymplecticForm { num_modes }.matrix();
        let sjst = matrix.dot(&j).dot(&matrix.t());
        let deviation = max_abs_diff(&sjst, &j);
        let scale = max_abs(&matrix);
        let tolerance = SYMPLECTIC_TOL.max(1e-15 * r as f64 * scale * scale);
        if deviation > tolerance {
            return Err(GaussianError::NotSymplectic {
                deviation,
                tolerance,
            });
        }
        Ok(Self { num_modes, matrix })
    }

    pub fn identity(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(GaussianError::ZeroModes);
        }
        Ok(Self {
            num_modes,
            matrix: Array2::eye(2 * num_modes),
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// `mean -> S·mean`, `cov -> S·cov·Sᵀ`, with the result symmetrized.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.num_modes != self.num_modes {
            return Err(GaussianError::DimensionMismatch(format!(
                "transform acts on {} modes, state has {}",
                self.num_modes, state.num_modes
            )));
        }
        let mean = self.matrix.dot(&state.mean);
        let cov = symmetrize(&self.matrix.dot(&state.covariance).dot(&self.matrix.t()));
        GaussianState::new(mean, cov)
    }

    /// Composition applying `inner` first, i.e. the matrix product
    /// `self · inner`.
    pub fn compose(&self, inner: &SymplecticTransform) -> Result<SymplecticTransform> {
        if self.num_modes != inner.num_modes {
            return Err(GaussianError::DimensionMismatch(format!(
                "cannot compose transforms on {} and {} modes",
                self.num_modes, inner.num_modes
            )));
        }
        SymplecticTransform::new(self.matrix.dot(&inner.matrix))
    }

    /// Block action of `self` on the first group of modes and `other` on the
    /// second, in global x-then-p layout.
    pub fn direct_sum(&self, other: &SymplecticTransform) -> SymplecticTransform {
        let (m1, m2) = (self.num_modes, other.num_modes);
        let m = m1 + m2;
        let mut mat = Array2::zeros((2 * m, 2 * m));
        let embed1 = |i: usize| if i < m1 { i } else { m + (i - m1) };
        let embed2 = |i: usize| if i < m2 { m1 + i } else { m + m1 + (i - m2) };
        for i in 0..2 * m1 {
            for j in 0..2 * m1 {
                mat[[embed1(i), embed1(j)]] = self.matrix[[i, j]];
            }
        }
        for i in 0..2 * m2 {
            for j in 0..2 * m2 {
                mat[[embed2(i), embed2(j)]] = other.matrix[[i, j]];
            }
        }
        SymplecticTransform {
            num_modes: m,
            matrix: mat,
        }
    }

    /// Wraps a matrix without the symplectic check. Only for fault
    /// injection in verification paths; everything else goes through `new`.
    pub(crate) fn from_matrix_unchecked(matrix: Array2<f64>) -> Self {
        let num_modes = matrix.nrows() / 2;
        Self { num_modes, matrix }
    }

    /// Moment action without revalidating the output state, for perturbed
    /// transforms that are intentionally not symplectic.
    pub(crate) fn apply_unchecked(&self, state: &GaussianState) -> GaussianState {
        let mean = self.matrix.dot(&state.mean);
        let cov = symmetrize(&self.matrix.dot(&state.covariance).dot(&self.matrix.t()));
        GaussianState {
            num_modes: state.num_modes,
            mean,
            covariance: cov,
        }
    }

    /// Inverse via the symplectic identity `S⁻¹ = -J Sᵀ J`.
    pub fn inverse(&self) -> SymplecticTransform {
        let j = SymplecticForm {
            num_modes: self.num_modes,
        }
        .matrix();
        let inv = -j.dot(&self.matrix.t()).dot(&j);
        SymplecticTransform {
            num_modes: self.num_modes,
            matrix: inv,
        }
    }
}

/// Two-mode beam splitter of transmissivity `eta`:
/// `x_a -> √η x_a - √(1-η) x_b`, `x_b -> √η x_b + √(1-η) x_a`, identically
/// on the p quadratures.
pub fn beam_splitter(eta: f64) -> Result<SymplecticTransform> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(GaussianError::TransmissivityRange(eta));
    }
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    let mut mat = Array2::zeros((4, 4));
    for block in 0..2 {
        let o = 2 * block;
        mat[[o, o]] = t;
        mat[[o, o + 1]] = -r;
        mat[[o + 1, o]] = r;
        mat[[o + 1, o + 1]] = t;
    }
    SymplecticTransform::new(mat)
}

/// Single-mode squeezer: `x -> e^{2d} x`, `p -> e^{-2d} p`.
pub fn single_mode_squeezer(d: f64) -> Result<SymplecticTransform> {
    if !d.is_finite() {
        return Err(GaussianError::NonFiniteParameter(d));
    }
    let mut mat = Array2::zeros((2, 2));
    mat[[0, 0]] = (2.0 * d).exp();
    mat[[1, 1]] = (-2.0 * d).exp();
    SymplecticTransform::new(mat)
}

/// Diagonal squeezer `⊕_j single_mode_squeezer(d_j)` on `d.len()` modes.
pub fn diagonal_squeezer(d: &[f64]) -> Result<SymplecticTransform> {
    if d.is_empty() {
        return Err(GaussianError::ZeroModes);
    }
    if let Some(bad) = d.iter().find(|v| !v.is_finite()) {
        return Err(GaussianError::NonFiniteParameter(*bad));
    }
    let m = d.len();
    let mut mat = Array2::zeros((2 * m, 2 * m));
    for (k, dk) in d.iter().enumerate() {
        mat[[k, k]] = (2.0 * dk).exp();
        mat[[m + k, m + k]] = (-2.0 * dk).exp();
    }
    SymplecticTransform::new(mat)
}

/// Passive (photon-number preserving) transform `V ⊕ V` from a real
/// orthogonal matrix.
pub fn passive_rotation(v: &Array2<f64>) -> Result<SymplecticTransform> {
    let (r, c) = v.dim();
    if r != c || r == 0 {
        return Err(GaussianError::DimensionMismatch(format!(
            "rotation matrix must be square, got ({r}, {c})"
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(GaussianError::NonFinite);
    }
    let gram = v.t().dot(v);
    let dev = max_abs_diff(&gram, &Array2::eye(r));
    if dev > ORTHOGONALITY_TOL {
        return Err(GaussianError::NotOrthogonal(dev));
    }
    let m = r;
    let mut mat = Array2::zeros((2 * m, 2 * m));
    for i in 0..m {
        for j in 0..m {
            mat[[i, j]] = v[[i, j]];
            mat[[m + i, m + j]] = v[[i, j]];
        }
    }
    SymplecticTransform::new(mat)
}

/// Symplectic eigenvalues of a symmetric covariance matrix: the `m`
/// positive moduli of the eigenvalues of `J·Σ`, sorted descending.
///
/// The spectrum of `J·Σ` comes in `±iν` pairs; sorted moduli are matched
/// pairwise and averaged, with a relative pairing tolerance of 1e-8.
pub fn symplectic_eigenvalues(covariance: &Array2<f64>) -> Result<Vec<f64>> {
    let (r, c) = covariance.dim();
    if r != c || r == 0 || r % 2 != 0 {
        return Err(GaussianError::DimensionMismatch(format!(
            "covariance must be square with even dimension, got ({r}, {c})"
        )));
    }
    if covariance.iter().any(|v| !v.is_finite()) {
        return Err(GaussianError::NonFinite);
    }
    let asym = max_abs_diff(covariance, &covariance.t().to_owned());
    if asym > SYMMETRY_RTOL * max_abs(covariance).max(1.0) {
        return Err(GaussianError::NotSymmetric(asym));
    }
    let m = r / 2;
    let j = SymplecticForm { num_modes: m }.matrix();
    let js = j.dot(covariance);
    let (eigs, _) = js
        .eig()
        .map_err(|e| GaussianError::Eigensolver(e.to_string()))?;
    let mut moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut nus = Vec::with_capacity(m);
    for pair in moduli.chunks(2) {
        let (hi, lo) = (pair[0], pair[1]);
        if hi - lo > EIGENPAIR_RTOL * hi.max(1.0) {
            return Err(GaussianError::UnpairedEigenvalues(hi, lo));
        }
        nus.push(0.5 * (hi + lo));
    }
    Ok(nus)
}
