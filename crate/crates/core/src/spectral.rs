//! Spectral analysis of the squeezing matrix that defines the correlated
//! environment.
//!
//! The n×n real symmetric matrix of squeezing parameters is diagonalized as
//! `Z = V·D·Vᵀ`; its eigenvalues `d_j` feed every derived scalar the
//! capacity bounds need: `s0 = Σ cosh(4d_j)/n`, `s1 = Σ sinh²(2d_j)/n`,
//! `s2 = Σ sinh(4|d_j|)/(2n)`, and the dominant eigenvalue `d̄`.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use thiserror::Error;

use crate::gaussian::{max_abs, max_abs_diff};

/// Symmetry tolerance enforced on stored squeezing matrices.
const SYMMETRY_TOL: f64 = 1e-12;
/// Looser symmetry tolerance for text ingestion, before exact symmetrization.
const LOAD_SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("squeezing matrix must be square, got ({0}, {1})")]
    NotSquare(usize, usize),
    #[error("squeezing matrix is empty")]
    Empty,
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error(
        "unsupported: non-symmetric/complex squeezing; entries ({r},{c})={v1} and ({c},{r})={v2} differ"
    )]
    NotSymmetric { r: usize, c: usize, v1: f64, v2: f64 },
    #[error("row {row}: expected {expected} entries, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, entry {col}: cannot parse {token:?} as a real number")]
    BadToken {
        row: usize,
        col: usize,
        token: String,
    },
    #[error("matrix payload is empty")]
    EmptyPayload,
    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),
}

type Result<T> = std::result::Result<T, SpectralError>;

/// The real symmetric matrix of squeezing parameters coupling the
/// environment modes of the n channel uses.
#[derive(Debug, Clone)]
pub struct SqueezingMatrix {
    n: usize,
    entries: Array2<f64>,
}

impl SqueezingMatrix {
    /// Validates shape, finiteness and symmetry, then stores the exactly
    /// symmetrized matrix.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        Self::with_symmetry_tolerance(entries, SYMMETRY_TOL)
    }

    fn with_symmetry_tolerance(entries: Array2<f64>, tol: f64) -> Result<Self> {
        let (r, c) = entries.dim();
        if r == 0 {
            return Err(SpectralError::Empty);
        }
        if r != c {
            return Err(SpectralError::NotSquare(r, c));
        }
        for i in 0..r {
            for j in 0..c {
                if !entries[[i, j]].is_finite() {
                    return Err(SpectralError::NonFinite(i + 1, j + 1));
                }
            }
        }
        let scale = max_abs(&entries).max(1.0);
        for i in 0..r {
            for j in (i + 1)..c {
                let (v1, v2) = (entries[[i, j]], entries[[j, i]]);
                if (v1 - v2).abs() > tol * scale {
                    return Err(SpectralError::NotSymmetric {
                        r: i + 1,
                        c: j + 1,
                        v1,
                        v2,
                    });
                }
            }
        }
        let sym = (&entries + &entries.t()) * 0.5;
        Ok(Self { n: r, entries: sym })
    }

    /// The all-zero matrix of the memoryless channel.
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SpectralError::Empty);
        }
        Ok(Self {
            n,
            entries: Array2::zeros((n, n)),
        })
    }

    /// Couples each use only to the next one with strength `xi`.
    pub fn nearest_neighbor(n: usize, xi: f64) -> Result<Self> {
        if n == 0 {
            return Err(SpectralError::Empty);
        }
        if !xi.is_finite() {
            return Err(SpectralError::NonFinite(1, 2));
        }
        let mut entries = Array2::zeros((n, n));
        for k in 0..n.saturating_sub(1) {
            entries[[k, k + 1]] = xi;
            entries[[k + 1, k]] = xi;
        }
        Ok(Self { n, entries })
    }

    /// Parses the text format: n lines of n whitespace-separated reals,
    /// with `#` comment lines and blank lines ignored.
    pub fn from_text(payload: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut row_no = 0usize;
        for line in payload.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            row_no += 1;
            let mut row = Vec::new();
            for (col, token) in line.split_whitespace().enumerate() {
                let value: f64 = token.parse().map_err(|_| SpectralError::BadToken {
                    row: row_no,
                    col: col + 1,
                    token: token.to_string(),
                })?;
                row.push(value);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(SpectralError::EmptyPayload);
        }
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(SpectralError::RaggedRow {
                    row: i + 1,
                    expected: n,
                    found: row.len(),
                });
            }
        }
        let mut entries = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                entries[[i, j]] = *v;
            }
        }
        Self::with_symmetry_tolerance(entries, LOAD_SYMMETRY_TOL)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| *v == 0.0)
    }
}

/// Eigendecomposition of a squeezing matrix together with the derived
/// scalars used by the capacity bounds.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Eigenvalues sorted by descending |d_j|, ties by descending value.
    eigenvalues: Vec<f64>,
    /// Orthogonal matrix whose column j matches `eigenvalues[j]`.
    eigenvectors: Array2<f64>,
    d_bar: f64,
    s0: f64,
    s1: f64,
    s2: f64,
}

impl SpectralData {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    /// Eigenvalue of maximum absolute value (the positive one on ties).
    pub fn d_bar(&self) -> f64 {
        self.d_bar
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn s2(&self) -> f64 {
        self.s2
    }

    /// The photon budget seen by the equivalent memoryless channel when the
    /// memory channel is fed `n_input` photons per use:
    /// `N̄ = N[cosh(4d̄) + sinh(4|d̄|)] + s1 + s2 ≥ N`.
    pub fn n_bar(&self, n_input: f64) -> f64 {
        n_input * ((4.0 * self.d_bar).cosh() + (4.0 * self.d_bar.abs()).sinh())
            + self.s1
            + self.s2
    }
}

/// Diagonalizes `Z` and evaluates the derived scalars.
///
/// Exactly diagonal matrices short-circuit the eigensolver so that the
/// memoryless case `Z = 0` stays bit-exact.
pub fn analyze(z: &SqueezingMatrix) -> Result<SpectralData> {
    let n = z.n();
    let mut pairs: Vec<(f64, Vec<f64>)>;
    let diagonal = {
        let mut diag = true;
        'outer: for i in 0..n {
            for j in 0..n {
                if i != j && z.entries[[i, j]] != 0.0 {
                    diag = false;
                    break 'outer;
                }
            }
        }
        diag
    };
    if diagonal {
        pairs = (0..n)
            .map(|j| {
                let mut col = vec![0.0; n];
                col[j] = 1.0;
                (z.entries[[j, j]], col)
            })
            .collect();
    } else {
        let (vals, vecs) = z
            .entries
            .eigh(UPLO::Lower)
            .map_err(|e| SpectralError::Eigensolver(e.to_string()))?;
        pairs = (0..n)
            .map(|j| (vals[j], vecs.column(j).to_vec()))
            .collect();
    }
    pairs.sort_by(|a, b| {
        b.0.abs()
            .partial_cmp(&a.0.abs())
            .unwrap()
            .then(b.0.partial_cmp(&a.0).unwrap())
    });
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (j, (_, col)) in pairs.iter().enumerate() {
        for i in 0..n {
            eigenvectors[[i, j]] = col[i];
        }
    }
    let nf = n as f64;
    let s0 = eigenvalues.iter().map(|d| (4.0 * d).cosh()).sum::<f64>() / nf;
    let s1 = eigenvalues
        .iter()
        .map(|d| (2.0 * d).sinh().powi(2))
        .sum::<f64>()
        / nf;
    let s2 = eigenvalues
        .iter()
        .map(|d| (4.0 * d.abs()).sinh())
        .sum::<f64>()
        / (2.0 * nf);
    let d_bar = eigenvalues[0];
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        d_bar,
        s0,
        s1,
        s2,
    })
}

/// Largest-magnitude reconstruction residual `‖V·D·Vᵀ - Z‖_max`.
pub fn reconstruction_residual(z: &SqueezingMatrix, data: &SpectralData) -> f64 {
    let n = z.n();
    let mut d = Array2::zeros((n, n));
    for (j, val) in data.eigenvalues.iter().enumerate() {
        d[[j, j]] = *val;
    }
    let rebuilt = data.eigenvectors.dot(&d).dot(&data.eigenvectors.t());
    max_abs_diff(&rebuilt, z.entries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn text_loader_accepts_minimal_and_commented_payloads() {
        let one = SqueezingMatrix::from_text("0").unwrap();
        assert_eq!(one.n(), 1);
        assert_eq!(one.entries()[[0, 0]], 0.0);

        let two = SqueezingMatrix::from_text("# nearest-neighbor pair\n0 0.1\n0.1 0\n").unwrap();
        assert_eq!(two.n(), 2);
        assert_eq!(two.entries()[[0, 1]], 0.1);
    }

    #[test]
    fn text_loader_names_asymmetric_entries() {
        let err = SqueezingMatrix::from_text("0 0.1\n0.2 0").unwrap_err();
        match err {
            SpectralError::NotSymmetric { r, c, .. } => {
                assert_eq!((r, c), (1, 2));
            }
            other => panic!("expected symmetry error, got {other}"),
        }
    }

    #[test]
    fn text_loader_rejects_bad_shapes_and_tokens() {
        assert!(matches!(
            SqueezingMatrix::from_text("0 0.1\n0.1"),
            Err(SpectralError::RaggedRow { .. })
        ));
        assert!(matches!(
            SqueezingMatrix::from_text("0 x\n0 0"),
            Err(SpectralError::BadToken { .. })
        ));
        assert!(matches!(
            SqueezingMatrix::from_text("# only comments\n"),
            Err(SpectralError::EmptyPayload)
        ));
        assert!(matches!(
            SqueezingMatrix::from_text("inf"),
            Err(SpectralError::NonFinite(_, _))
        ));
    }

    #[test]
    fn nearest_neighbor_shapes() {
        let single = SqueezingMatrix::nearest_neighbor(1, 0.3).unwrap();
        assert!(single.is_zero());

        let tri = SqueezingMatrix::nearest_neighbor(3, 0.1).unwrap();
        for i in 0..3 {
            assert_eq!(tri.entries()[[i, i]], 0.0);
        }
        assert_eq!(tri.entries()[[0, 1]], 0.1);
        assert_eq!(tri.entries()[[1, 2]], 0.1);
        assert_eq!(tri.entries()[[0, 2]], 0.0);

        let pair = SqueezingMatrix::nearest_neighbor(2, 0.1).unwrap();
        let data = analyze(&pair).unwrap();
        assert!((data.eigenvalues()[0] - 0.1).abs() < 1e-14);
        assert!((data.eigenvalues()[1] + 0.1).abs() < 1e-14);
    }

    #[test]
    fn analyze_zero_matrix_is_memoryless() {
        let z = SqueezingMatrix::zero(4).unwrap();
        let data = analyze(&z).unwrap();
        assert_eq!(data.eigenvalues(), &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(data.s0(), 1.0);
        assert_eq!(data.s1(), 0.0);
        assert_eq!(data.s2(), 0.0);
        assert_eq!(data.d_bar(), 0.0);
        assert_eq!(data.n_bar(1.3), 1.3);
    }

    #[test]
    fn analyze_nearest_neighbor_pair_scalars() {
        let z = SqueezingMatrix::nearest_neighbor(2, 0.1).unwrap();
        let data = analyze(&z).unwrap();
        assert!((data.s0() - 1.0810723718384548).abs() < 1e-14);
        assert!((data.s1() - 0.040536185919227405).abs() < 1e-14);
        assert!((data.s2() - 0.20537616290140775).abs() < 1e-14);
        // tie on |d| resolved toward the positive eigenvalue
        assert!((data.d_bar() - 0.1).abs() < 1e-14);
        assert!((data.n_bar(1.0) - 1.7377370464619055).abs() < 1e-12);
        assert!((data.n_bar(0.0) - (data.s1() + data.s2())).abs() < 1e-15);
    }

    #[test]
    fn analyze_diagonal_matrix_keeps_exact_values() {
        let z = SqueezingMatrix::new(array![
            [0.2, 0.0, 0.0],
            [0.0, -0.4, 0.0],
            [0.0, 0.0, 0.1]
        ])
        .unwrap();
        let data = analyze(&z).unwrap();
        assert_eq!(data.eigenvalues(), &[-0.4, 0.2, 0.1]);
        assert_eq!(data.d_bar(), -0.4);
        // columns are permutation vectors
        for j in 0..3 {
            let col: Vec<f64> = data.eigenvectors().column(j).to_vec();
            assert_eq!(col.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|v| **v == 0.0).count(), 2);
        }
        assert!(reconstruction_residual(&z, &data) == 0.0);
    }

    #[test]
    fn s1_matches_half_angle_identity() {
        let z = SqueezingMatrix::new(array![
            [0.1, -0.3, 0.05],
            [-0.3, 0.0, 0.2],
            [0.05, 0.2, -0.15]
        ])
        .unwrap();
        let data = analyze(&z).unwrap();
        assert!((data.s1() - (data.s0() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn n_bar_two_term_form_equals_exponential() {
        let z = SqueezingMatrix::nearest_neighbor(3, -0.2).unwrap();
        let data = analyze(&z).unwrap();
        let coeff = (4.0 * data.d_bar()).cosh() + (4.0 * data.d_bar().abs()).sinh();
        let exp_form = (4.0 * data.d_bar().abs()).exp();
        assert!((coeff - exp_form).abs() < 1e-12 * exp_form);
    }

    #[test]
    fn constructor_rejects_asymmetric_beyond_tolerance() {
        let err = SqueezingMatrix::new(array![[0.0, 0.1], [0.1 + 1e-6, 0.0]]).unwrap_err();
        assert!(matches!(err, SpectralError::NotSymmetric { .. }));
    }
}
