//! Truncated Fock-space oracle: dense density-matrix simulation of the
//! channel for one or two uses, kept independent of the covariance-matrix
//! machinery so the two can be checked against each other.
//!
//! Operators live on `cutoff` levels per mode. The beam-splitter generator
//! conserves total photon number, so its exponential is assembled
//! sector-by-sector; squeezing and displacement generators are
//! anti-Hermitian and are exponentiated through a Hermitian
//! eigendecomposition. For two channel uses the joint input ⊗ environment
//! state would be a four-mode matrix; instead both two-mode factors are
//! expanded in operator Schmidt form across the use index and the channel
//! acts pair by pair, which is an exact reorganization of the same
//! arithmetic.

use ndarray::linalg::kron;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, SVD, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::channel::ChannelParams;

/// Trace a truncated simulation is allowed to lose before it is reported
/// as a truncation failure.
pub const TAIL_TOLERANCE: f64 = 1e-6;
/// Default cutoff for single-use simulations.
pub const DEFAULT_CUTOFF_ONE_USE: usize = 30;
/// Default cutoff per mode for two-use simulations.
pub const DEFAULT_CUTOFF_TWO_USES: usize = 16;
/// Relative floor below which operator-Schmidt terms are dropped.
const SCHMIDT_TRUNCATION: f64 = 1e-12;
/// Strongest squeezing entry the dense oracle accepts.
const MAX_SQUEEZE_ENTRY: f64 = 0.2;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("cutoff must be at least 2, got {0}")]
    CutoffTooSmall(usize),
    #[error("dense oracle supports 1 or 2 channel uses, got {0}")]
    UnsupportedModes(usize),
    #[error("squeezing entries up to {found} exceed the oracle range {limit}")]
    SqueezeTooStrong { found: f64, limit: f64 },
    #[error("transmissivity must lie in [0, 1], got {0}")]
    TransmissivityRange(f64),
    #[error("mean photon number must be nonnegative, got {0}")]
    NegativePhotons(f64),
    #[error("truncation failure: trace deficit {deficit:.3e} exceeds {tolerance:.1e}")]
    TruncationFailure { deficit: f64, tolerance: f64 },
    #[error("operator is not Hermitian: max |M - M†| = {0:.3e}")]
    NotHermitian(f64),
    #[error("generator is not anti-Hermitian: max |K + K†| = {0:.3e}")]
    NotAntiHermitian(f64),
    #[error("operator dimensions {found} do not match {modes} modes at cutoff {cutoff}")]
    DimensionMismatch {
        found: usize,
        modes: usize,
        cutoff: usize,
    },
    #[error("input has {found} modes, channel expects {expected}")]
    ModeCount { found: usize, expected: usize },
    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),
}

type Result<T> = std::result::Result<T, FockError>;

/// Dense operator on `modes` bosonic modes truncated at `cutoff` levels
/// each.
#[derive(Debug, Clone)]
pub struct FockOperator {
    modes: usize,
    cutoff: usize,
    mat: Array2<C64>,
}

impl FockOperator {
    pub fn new(modes: usize, cutoff: usize, mat: Array2<C64>) -> Result<Self> {
        if cutoff < 2 {
            return Err(FockError::CutoffTooSmall(cutoff));
        }
        let dim = cutoff.pow(modes as u32);
        if mat.dim() != (dim, dim) {
            return Err(FockError::DimensionMismatch {
                found: mat.nrows(),
                modes,
                cutoff,
            });
        }
        Ok(Self { modes, cutoff, mat })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn dagger(&self) -> FockOperator {
        FockOperator {
            modes: self.modes,
            cutoff: self.cutoff,
            mat: dagger(&self.mat),
        }
    }

    /// Zero-pads the operator into a larger per-mode cutoff.
    pub fn embed(&self, new_cutoff: usize) -> Result<FockOperator> {
        if new_cutoff < self.cutoff {
            return Err(FockError::CutoffTooSmall(new_cutoff));
        }
        let old_d = self.cutoff;
        let dim = new_cutoff.pow(self.modes as u32);
        let mut mat = Array2::zeros((dim, dim));
        let remap = |idx: usize| -> usize {
            match self.modes {
                1 => idx,
                _ => {
                    let (i1, i2) = (idx / old_d, idx % old_d);
                    i1 * new_cutoff + i2
                }
            }
        };
        for i in 0..self.mat.nrows() {
            for j in 0..self.mat.ncols() {
                mat[[remap(i), remap(j)]] = self.mat[[i, j]];
            }
        }
        FockOperator::new(self.modes, new_cutoff, mat)
    }
}

fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

fn max_abs_c(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Single-mode annihilation operator, `<m|a|m+1> = sqrt(m+1)`.
pub fn ladder_operator(cutoff: usize) -> Result<FockOperator> {
    if cutoff < 2 {
        return Err(FockError::CutoffTooSmall(cutoff));
    }
    let mut mat = Array2::zeros((cutoff, cutoff));
    for m in 0..cutoff - 1 {
        mat[[m, m + 1]] = C64::new(((m + 1) as f64).sqrt(), 0.0);
    }
    FockOperator::new(1, cutoff, mat)
}

fn identity_c(dim: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_elem(dim, C64::new(1.0, 0.0)))
}

/// Annihilation operator of mode `which` on an n-mode space.
fn mode_ladder(modes: usize, which: usize, cutoff: usize) -> Array2<C64> {
    let a = ladder_operator(cutoff).expect("cutoff checked by caller").mat;
    match (modes, which) {
        (1, 0) => a,
        (2, 0) => kron(&a, &identity_c(cutoff)),
        (2, 1) => kron(&identity_c(cutoff), &a),
        _ => unreachable!("oracle is limited to 1 or 2 modes"),
    }
}

/// Exponential of an anti-Hermitian generator through the Hermitian
/// eigendecomposition of `iK`; the result is unitary to machine precision.
fn expm_antihermitian(k: &Array2<C64>) -> Result<Array2<C64>> {
    let anti = {
        let kd = dagger(k);
        max_abs_c(&(k + &kd))
    };
    if anti > 1e-10 * max_abs_c(k).max(1.0) {
        return Err(FockError::NotAntiHermitian(anti));
    }
    let h = k.mapv(|z| z * C64::new(0.0, 1.0));
    let (vals, vecs) = h
        .eigh(UPLO::Lower)
        .map_err(|e| FockError::Eigensolver(e.to_string()))?;
    // Row-major storage handed to LAPACK can conjugate the returned
    // eigenvectors of a complex Hermitian matrix. Pick whichever of V and
    // conj(V) actually diagonalizes H; the rotation-direction unit test
    // pins the outcome.
    let lambda = Array2::from_diag(&vals.mapv(|l| C64::new(l, 0.0)));
    let residual = |v: &Array2<C64>| max_abs_c(&(h.dot(v) - v.dot(&lambda)));
    let conj_vecs = vecs.mapv(|z| z.conj());
    let vecs = if residual(&vecs) <= residual(&conj_vecs) {
        vecs
    } else {
        conj_vecs
    };
    let phases = Array2::from_diag(&vals.mapv(|l| C64::new(0.0, -l).exp()));
    Ok(vecs.dot(&phases).dot(&dagger(&vecs)))
}

/// The beam-splitter unitary held as its photon-sector blocks. The
/// generator conserves total photon number, so conjugation can run block
/// by block instead of through full-dimension matrix products.
struct SectorUnitary {
    cutoff: usize,
    /// Joint-space indices and the unitary block of each sector.
    sectors: Vec<(Vec<usize>, Array2<C64>)>,
}

fn beam_splitter_sectors(eta: f64, cutoff: usize) -> Result<SectorUnitary> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(FockError::TransmissivityRange(eta));
    }
    if cutoff < 2 {
        return Err(FockError::CutoffTooSmall(cutoff));
    }
    let d = cutoff;
    let theta = if eta == 1.0 {
        0.0
    } else if eta == 0.0 {
        // swap limit of the divergent arctangent
        std::f64::consts::FRAC_PI_2
    } else {
        ((1.0 - eta) / eta).sqrt().atan()
    };
    let mut sectors = Vec::with_capacity(2 * d - 1);
    for total in 0..=(2 * d - 2) {
        // photon numbers of the first mode within this sector
        let k_min = total.saturating_sub(d - 1);
        let k_max = total.min(d - 1);
        let size = k_max - k_min + 1;
        let indices: Vec<usize> = (k_min..=k_max).map(|k| k * d + (total - k)).collect();
        let ublock = if theta == 0.0 {
            identity_c(size)
        } else {
            let mut block = Array2::<C64>::zeros((size, size));
            for (col, k) in (k_min..=k_max).enumerate() {
                let m = total - k;
                if k + 1 <= k_max {
                    // a†b: |k, m> -> sqrt((k+1) m) |k+1, m-1>
                    block[[col + 1, col]] = C64::new(theta * (((k + 1) * m) as f64).sqrt(), 0.0);
                }
                if k > k_min {
                    block[[col - 1, col]] = C64::new(-theta * ((k * (m + 1)) as f64).sqrt(), 0.0);
                }
            }
            expm_antihermitian(&block)?
        };
        sectors.push((indices, ublock));
    }
    Ok(SectorUnitary {
        cutoff: d,
        sectors,
    })
}

impl SectorUnitary {
    /// `U X U†` through the sector blocks: a row pass with each `U_s` and a
    /// column pass with each `U_s†`.
    fn conjugate(&self, x: &Array2<C64>) -> Array2<C64> {
        let dim = self.cutoff * self.cutoff;
        let mut w: Array2<C64> = Array2::zeros((dim, dim));
        for (indices, block) in &self.sectors {
            let size = indices.len();
            let mut rows = Array2::zeros((size, dim));
            for (r, &i) in indices.iter().enumerate() {
                rows.row_mut(r).assign(&x.row(i));
            }
            let mixed = block.dot(&rows);
            for (r, &i) in indices.iter().enumerate() {
                w.row_mut(i).assign(&mixed.row(r));
            }
        }
        let mut y: Array2<C64> = Array2::zeros((dim, dim));
        for (indices, block) in &self.sectors {
            let size = indices.len();
            let mut cols = Array2::zeros((dim, size));
            for (c, &j) in indices.iter().enumerate() {
                cols.column_mut(c).assign(&w.column(j));
            }
            let mixed = cols.dot(&dagger(block));
            for (c, &j) in indices.iter().enumerate() {
                y.column_mut(j).assign(&mixed.column(c));
            }
        }
        y
    }
}

/// Two-mode beam-splitter unitary of transmissivity `eta`.
///
/// The generator `θ(a†b - ab†)` with `θ = arctan√((1-η)/η)` conserves the
/// total photon number, so the unitary is assembled per photon sector; the
/// fully reflecting case uses the swap limit `θ = π/2` directly instead of
/// the divergent arctangent.
pub fn beam_splitter_unitary(eta: f64, cutoff: usize) -> Result<FockOperator> {
    let split = beam_splitter_sectors(eta, cutoff)?;
    let d = cutoff;
    let dim = d * d;
    let mut u = Array2::zeros((dim, dim));
    for (indices, block) in &split.sectors {
        for (row, &i) in indices.iter().enumerate() {
            for (col, &j) in indices.iter().enumerate() {
                u[[i, j]] = block[[row, col]];
            }
        }
    }
    FockOperator::new(2, d, u)
}

/// Multi-mode squeezing unitary for the squeezing matrix `Z`, the
/// exponential of `Σ ξ_kk' (b_k†b_k'† - b_k b_k')`.
///
/// The generator sign is fixed so that conjugating a state stretches the x
/// quadratures for positive entries, matching the covariance-level
/// squeezer convention.
pub fn multimode_squeeze_unitary(
    z: &crate::spectral::SqueezingMatrix,
    cutoff: usize,
) -> Result<FockOperator> {
    let n = z.n();
    if n > 2 {
        return Err(FockError::UnsupportedModes(n));
    }
    if cutoff < 2 {
        return Err(FockError::CutoffTooSmall(cutoff));
    }
    let strongest = z
        .entries()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if strongest > MAX_SQUEEZE_ENTRY {
        return Err(FockError::SqueezeTooStrong {
            found: strongest,
            limit: MAX_SQUEEZE_ENTRY,
        });
    }
    let dim = cutoff.pow(n as u32);
    let ladders: Vec<Array2<C64>> = (0..n).map(|k| mode_ladder(n, k, cutoff)).collect();
    let mut lowering = Array2::<C64>::zeros((dim, dim));
    for k in 0..n {
        for kp in 0..n {
            let xi = z.entries()[[k, kp]];
            if xi != 0.0 {
                lowering = lowering + ladders[k].dot(&ladders[kp]).mapv(|v| v * xi);
            }
        }
    }
    let generator = dagger(&lowering) - &lowering;
    let u = expm_antihermitian(&generator)?;
    FockOperator::new(n, cutoff, u)
}

/// Truncated single-mode thermal state, a geometric diagonal left
/// unnormalized so the tail deficit stays observable.
pub fn thermal_density(mean_photons: f64, cutoff: usize) -> Result<FockOperator> {
    if cutoff < 2 {
        return Err(FockError::CutoffTooSmall(cutoff));
    }
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(FockError::NegativePhotons(mean_photons));
    }
    let mut mat = Array2::zeros((cutoff, cutoff));
    if mean_photons == 0.0 {
        mat[[0, 0]] = C64::new(1.0, 0.0);
    } else {
        let ratio = mean_photons / (mean_photons + 1.0);
        let mut p = 1.0 / (mean_photons + 1.0);
        for k in 0..cutoff {
            mat[[k, k]] = C64::new(p, 0.0);
            p *= ratio;
        }
    }
    FockOperator::new(1, cutoff, mat)
}

/// Vacuum density matrix on `modes` modes.
pub fn vacuum_density(modes: usize, cutoff: usize) -> Result<FockOperator> {
    if modes == 0 || modes > 2 {
        return Err(FockError::UnsupportedModes(modes));
    }
    if cutoff < 2 {
        return Err(FockError::CutoffTooSmall(cutoff));
    }
    let dim = cutoff.pow(modes as u32);
    let mut mat = Array2::zeros((dim, dim));
    mat[[0, 0]] = C64::new(1.0, 0.0);
    FockOperator::new(modes, cutoff, mat)
}

/// Single-mode displacement unitary `exp(α a† - α* a)`.
pub fn displacement_operator(alpha: C64, cutoff: usize) -> Result<FockOperator> {
    if cutoff < 2 {
        return Err(FockError::CutoffTooSmall(cutoff));
    }
    let a = ladder_operator(cutoff)?.mat;
    let generator = dagger(&a).mapv(|v| v * alpha) - a.mapv(|v| v * alpha.conj());
    let u = expm_antihermitian(&generator)?;
    FockOperator::new(1, cutoff, u)
}

fn conjugate(u: &Array2<C64>, rho: &Array2<C64>) -> Array2<C64> {
    u.dot(rho).dot(&dagger(u))
}

/// Partial trace over the second of two modes.
fn ptrace_second(mat: &Array2<C64>, d: usize) -> Array2<C64> {
    let mut out = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..d {
                acc += mat[[i * d + t, j * d + t]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Operator Schmidt decomposition of a two-mode operator across the mode
/// split, with the singular weights folded into the factors.
fn operator_schmidt(mat: &Array2<C64>, d: usize) -> Result<Vec<(Array2<C64>, Array2<C64>)>> {
    let dim2 = d * d;
    let mut r = Array2::<C64>::zeros((dim2, dim2));
    for i1 in 0..d {
        for i2 in 0..d {
            for j1 in 0..d {
                for j2 in 0..d {
                    r[[i1 * d + j1, i2 * d + j2]] = mat[[i1 * d + i2, j1 * d + j2]];
                }
            }
        }
    }
    let (u, s, vt) = r
        .svd(true, true)
        .map_err(|e| FockError::Eigensolver(e.to_string()))?;
    let u = u.expect("left singular vectors requested");
    let vt = vt.expect("right singular vectors requested");
    let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
    let mut terms = Vec::new();
    for (alpha, weight) in s.iter().enumerate() {
        if *weight < SCHMIDT_TRUNCATION * s_max {
            continue;
        }
        let w = weight.sqrt();
        let mut a = Array2::zeros((d, d));
        let mut b = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                a[[i, j]] = u[[i * d + j, alpha]] * w;
                b[[i, j]] = vt[[alpha, i * d + j]] * w;
            }
        }
        terms.push((a, b));
    }
    Ok(terms)
}

fn check_trace(op: &Array2<C64>, tolerance: f64) -> Result<()> {
    let tr = op.diag().sum();
    let deficit = (1.0 - tr.re).abs().max(tr.im.abs());
    if deficit > tolerance {
        return Err(FockError::TruncationFailure {
            deficit,
            tolerance,
        });
    }
    Ok(())
}

/// Full density-matrix simulation of the channel on `params.n()` uses.
///
/// Squeezes the thermal environment, mixes it with the input through the
/// per-use beam splitters and traces the environment out. A trace deficit
/// beyond `TAIL_TOLERANCE` triggers one retry at doubled cutoff before
/// being reported as a truncation failure.
pub fn simulate_channel(params: &ChannelParams, input: &FockOperator) -> Result<FockOperator> {
    match simulate_channel_attempt(params, input, TAIL_TOLERANCE) {
        Err(FockError::TruncationFailure { .. }) => {
            let widened = input.embed(2 * input.cutoff())?;
            simulate_channel_attempt(params, &widened, TAIL_TOLERANCE)
        }
        other => other,
    }
}

fn simulate_channel_attempt(
    params: &ChannelParams,
    input: &FockOperator,
    tail_tolerance: f64,
) -> Result<FockOperator> {
    let n = params.n();
    if n != input.modes() {
        return Err(FockError::ModeCount {
            found: input.modes(),
            expected: n,
        });
    }
    if n > 2 {
        return Err(FockError::UnsupportedModes(n));
    }
    let d = input.cutoff();
    let herm_dev = max_abs_c(&(&input.mat - &dagger(&input.mat)));
    if herm_dev > 1e-9 * max_abs_c(&input.mat).max(1.0) {
        return Err(FockError::NotHermitian(herm_dev));
    }
    check_trace(&input.mat, tail_tolerance)?;

    let squeezer = multimode_squeeze_unitary(params.squeezing(), d)?;
    let thermal = thermal_density(params.env_photons(), d)?;
    let u = beam_splitter_sectors(params.eta(), d)?;

    let out = match n {
        1 => {
            check_trace(&thermal.mat, tail_tolerance)?;
            let env = conjugate(&squeezer.mat, &thermal.mat);
            let joint = kron(&input.mat, &env);
            ptrace_second(&u.conjugate(&joint), d)
        }
        2 => {
            let thermal2 = kron(&thermal.mat, &thermal.mat);
            check_trace(&thermal2, tail_tolerance)?;
            let env = conjugate(&squeezer.mat, &thermal2);
            let input_terms = operator_schmidt(&input.mat, d)?;
            let env_terms = operator_schmidt(&env, d)?;
            let mut out = Array2::<C64>::zeros((d * d, d * d));
            for (c1, c2) in &input_terms {
                for (e1, e2) in &env_terms {
                    let t1 = ptrace_second(&u.conjugate(&kron(c1, e1)), d);
                    let t2 = ptrace_second(&u.conjugate(&kron(c2, e2)), d);
                    out = out + kron(&t1, &t2);
                }
            }
            out
        }
        _ => unreachable!(),
    };
    check_trace(&out, tail_tolerance)?;
    FockOperator::new(n, d, out)
}

/// Quadrature first and second moments of a density matrix, in the same
/// half-vacuum convention as the covariance-level code.
pub fn moments(rho: &FockOperator) -> Result<(Array1<f64>, Array2<f64>)> {
    let herm_dev = max_abs_c(&(&rho.mat - &dagger(&rho.mat)));
    if herm_dev > 1e-9 * max_abs_c(&rho.mat).max(1.0) {
        return Err(FockError::NotHermitian(herm_dev));
    }
    let n = rho.modes();
    let d = rho.cutoff();
    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let minus_i = C64::new(0.0, -1.0);
    let mut quads: Vec<Array2<C64>> = Vec::with_capacity(2 * n);
    for k in 0..n {
        let a = mode_ladder(n, k, d);
        let ad = dagger(&a);
        quads.push((&a + &ad).mapv(|v| v * inv_sqrt2));
        quads.push((&a - &ad).mapv(|v| v * inv_sqrt2 * minus_i));
    }
    // reorder from per-mode (x, p) to all-x-then-all-p
    let order: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();

    let expect = |op: &Array2<C64>| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..rho.dim() {
            for j in 0..rho.dim() {
                acc += rho.mat[[i, j]] * op[[j, i]];
            }
        }
        acc.re
    };

    let mut mean = Array1::zeros(2 * n);
    for (slot, &q) in order.iter().enumerate() {
        mean[slot] = expect(&quads[q]);
    }
    let mut cov = Array2::zeros((2 * n, 2 * n));
    for (si, &qi) in order.iter().enumerate() {
        for (sj, &qj) in order.iter().enumerate() {
            if sj < si {
                continue;
            }
            let prod_ij = quads[qi].dot(&quads[qj]);
            let prod_ji = quads[qj].dot(&quads[qi]);
            let sym = 0.5 * (expect(&prod_ij) + expect(&prod_ji));
            let value = sym - mean[si] * mean[sj];
            cov[[si, sj]] = value;
            cov[[sj, si]] = value;
        }
    }
    Ok((mean, cov))
}

/// Total mean photon number through the diagonal of the number operator.
pub fn mean_photons(rho: &FockOperator) -> f64 {
    let d = rho.cutoff();
    let digits = |idx: usize| -> usize {
        match rho.modes() {
            1 => idx,
            _ => idx / d + idx % d,
        }
    };
    (0..rho.dim())
        .map(|i| rho.mat[[i, i]].re * digits(i) as f64)
        .sum()
}

/// Von Neumann entropy in nats from the dense eigenvalues, tolerating
/// truncation-level negative noise.
pub fn entropy_nats(rho: &FockOperator) -> Result<f64> {
    let (vals, _) = rho
        .mat
        .eigh(UPLO::Lower)
        .map_err(|e| FockError::Eigensolver(e.to_string()))?;
    let mut s = 0.0;
    for lambda in vals.iter() {
        if *lambda > 0.0 {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s)
}
