//! Dense complex linear algebra on multi-qubit operators.
//!
//! Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index: `|q₀q₁…q_{N−1}⟩` has index `Σ q_k 2^{N−1−k}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Tolerance on `max |m − m†|` for matrices treated as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// A normalized state vector on `nqubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    nqubits: usize,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    /// Wraps an amplitude vector of length `2^nqubits`. Normalization is
    /// checked where it matters ([`PureState::to_density`]).
    pub fn from_amplitudes(nqubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if nqubits == 0 || nqubits > 16 {
            return Err(Error::Dimension(format!(
                "unsupported qubit count {nqubits}"
            )));
        }
        if amplitudes.len() != 1 << nqubits {
            return Err(Error::Dimension(format!(
                "{} amplitudes given for {nqubits} qubits (expected {})",
                amplitudes.len(),
                1usize << nqubits
            )));
        }
        Ok(Self {
            nqubits,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(nqubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut s = Self::from_amplitudes(nqubits, amplitudes)?;
        let n = s.amplitudes.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        s.amplitudes.unscale_mut(n);
        Ok(s)
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `|ψ⟩⟨ψ|`; fails if the squared norm is off by more than 1e-9.
    pub fn to_density(&self) -> Result<ComplexMatrix> {
        let n2 = self.norm_sqr();
        if (n2 - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(n2));
        }
        Ok(&self.amplitudes * self.amplitudes.adjoint())
    }
}

pub fn dim_for(nqubits: usize) -> usize {
    1 << nqubits
}

/// Number of qubits of a `2^N`-dimensional square matrix.
pub fn qubits_of(m: &ComplexMatrix) -> Result<usize> {
    let d = m.nrows();
    if m.ncols() != d || d == 0 || !d.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "{}x{} is not a 2^N square matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(d.trailing_zeros() as usize)
}

pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Bit mask of the qubits in `subset` within an `nqubits` register.
pub fn qubit_mask(subset: &[usize], nqubits: usize) -> Result<usize> {
    let mut mask = 0;
    for &q in subset {
        if q >= nqubits {
            return Err(Error::QubitOutOfRange { index: q, nqubits });
        }
        mask |= 1 << (nqubits - 1 - q);
    }
    Ok(mask)
}

/// Transposes the tensor factors listed in `subset`: the entry at row `r`,
/// column `c` moves to the position whose subset bits are exchanged between
/// `r` and `c`.
pub fn partial_transpose(
    m: &ComplexMatrix,
    subset: &[usize],
    nqubits: usize,
) -> Result<ComplexMatrix> {
    let d = dim_for(nqubits);
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Dimension(format!(
            "expected {d}x{d}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mask = qubit_mask(subset, nqubits)?;
    Ok(partial_transpose_mask(m, mask))
}

pub(crate) fn partial_transpose_mask(m: &ComplexMatrix, mask: usize) -> ComplexMatrix {
    let d = m.nrows();
    let mut out = ComplexMatrix::zeros(d, d);
    for c in 0..d {
        for r in 0..d {
            let r2 = (r & !mask) | (c & mask);
            let c2 = (c & !mask) | (r & mask);
            out[(r2, c2)] = m[(r, c)];
        }
    }
    out
}

pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for c in 0..n {
        for r in 0..=c {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).unscale(2.0)
}

/// Real eigenvalues of a Hermitian matrix in nondecreasing order.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenvalues and unit eigenvectors (as columns), eigenvalues ascending.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = ComplexMatrix::from_fn(m.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((vals, vecs))
}

/// `[[Re m, −Im m], [Im m, Re m]]`: a real symmetric matrix whose spectrum is
/// that of `m` with every multiplicity doubled.
pub fn real_embedding(m: &ComplexMatrix) -> Result<DMatrix<f64>> {
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(embed_unchecked(m))
}

pub(crate) fn embed_unchecked(m: &ComplexMatrix) -> DMatrix<f64> {
    let d = m.nrows();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for c in 0..d {
        for r in 0..d {
            let z = m[(r, c)];
            out[(r, c)] = z.re;
            out[(r + d, c + d)] = z.re;
            out[(r, c + d)] = -z.im;
            out[(r + d, c)] = z.im;
        }
    }
    out
}

/// Inverse of [`real_embedding`] read from the top-left and bottom-left blocks.
pub fn real_unembedding(m: &DMatrix<f64>) -> ComplexMatrix {
    let d = m.nrows() / 2;
    ComplexMatrix::from_fn(d, d, |r, c| Complex64::new(m[(r, c)], m[(r + d, c)]))
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr(a b)`.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for r in 0..n {
        for c in 0..n {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Sum of the absolute values of the negative eigenvalues of `ρ^{T_subset}`.
pub fn negativity(rho: &ComplexMatrix, subset: &[usize], nqubits: usize) -> Result<f64> {
    let pt = partial_transpose(rho, subset, nqubits)?;
    Ok(eig_hermitian(&pt)?
        .into_iter()
        .filter(|&v| v < 0.0)
        .map(|v| -v)
        .sum())
}
