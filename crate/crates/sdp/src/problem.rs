//! Problem data for block semidefinite programs in standard form.
//!
//! The primal/dual pair handled by the solver is
//!
//! ```text
//!   (P)  minimize   C • X          (D)  maximize   bᵀy
//!        subject to A_i • X = b_i       subject to Σ y_i A_i + S = C
//!                   X ⪰ 0                          S ⪰ 0
//! ```
//!
//! where `X`, `S`, `C` and every `A_i` are block-diagonal real symmetric
//! matrices sharing one block structure.

use nalgebra::DMatrix;

use crate::error::SdpError;

/// Symmetric tolerance for dense objective blocks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Sparse real symmetric matrix stored by its upper triangle.
///
/// `push(i, j, v)` sets both `(i, j)` and `(j, i)` to `v` (accumulating),
/// so an off-diagonal value is given once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymSparse {
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        if value == 0.0 {
            return;
        }
        match self.entries.iter_mut().find(|e| e.0 == r && e.1 == c) {
            Some(e) => e.2 += value,
            None => self.entries.push((r, c, value)),
        }
    }

    /// Builds from a dense symmetric matrix, dropping entries with `|v| <= drop_tol`.
    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> Result<Self, SdpError> {
        let asym = max_asymmetry(m);
        if asym > SYMMETRY_TOL {
            return Err(SdpError::NotSymmetric {
                what: "constraint matrix",
                asym,
            });
        }
        let mut out = Self::new();
        for c in 0..m.ncols() {
            for r in 0..=c {
                let v = 0.5 * (m[(r, c)] + m[(c, r)]);
                if v.abs() > drop_tol {
                    out.entries.push((r, c, v));
                }
            }
        }
        Ok(out)
    }

    /// Upper-triangle entries `(row <= col, value)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.2 == 0.0)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1).max()
    }

    /// `self • Y` for a dense symmetric `Y`.
    pub fn inner_dense(&self, y: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                if r == c {
                    v * y[(r, c)]
                } else {
                    v * (y[(r, c)] + y[(c, r)])
                }
            })
            .sum()
    }

    /// Adds `alpha * self` into a dense matrix.
    pub fn axpy_into(&self, alpha: f64, out: &mut DMatrix<f64>) {
        for &(r, c, v) in &self.entries {
            out[(r, c)] += alpha * v;
            if r != c {
                out[(c, r)] += alpha * v;
            }
        }
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(dim, dim);
        self.axpy_into(1.0, &mut out);
        out
    }
}

/// One equality constraint `A_i • X = b_i`, with `A_i` given blockwise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraint {
    pub parts: Vec<(usize, SymSparse)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(rhs: f64) -> Self {
        Self {
            parts: Vec::new(),
            rhs,
        }
    }

    /// Adds `value` at `(row, col)` and its mirror in `block`.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        match self.parts.iter_mut().find(|p| p.0 == block) {
            Some((_, m)) => m.push(row, col, value),
            None => {
                let mut m = SymSparse::new();
                m.push(row, col, value);
                self.parts.push((block, m));
            }
        }
    }

    pub fn with_block(mut self, block: usize, m: SymSparse) -> Self {
        self.parts.push((block, m));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    block_dims: Vec<usize>,
    objective: Vec<DMatrix<f64>>,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    /// Creates a problem with zero objective and no constraints.
    pub fn new(block_dims: Vec<usize>) -> Result<Self, SdpError> {
        if block_dims.is_empty() {
            return Err(SdpError::NoBlocks);
        }
        if let Some(block) = block_dims.iter().position(|&d| d == 0) {
            return Err(SdpError::EmptyBlock { block });
        }
        let objective = block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        Ok(Self {
            block_dims,
            objective,
            constraints: Vec::new(),
        })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn objective(&self) -> &[DMatrix<f64>] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    pub fn set_objective_block(&mut self, block: usize, c: DMatrix<f64>) -> Result<(), SdpError> {
        let dim = self.block_dim(block)?;
        if c.nrows() != dim || c.ncols() != dim {
            return Err(SdpError::Shape {
                block,
                expected: dim,
                got: c.nrows().max(c.ncols()),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::NonFinite { what: "objective" });
        }
        let asym = max_asymmetry(&c);
        if asym > SYMMETRY_TOL {
            return Err(SdpError::NotSymmetric {
                what: "objective",
                asym,
            });
        }
        self.objective[block] = c.symmetric_part();
        Ok(())
    }

    /// Adds `value` at `(row, col)` and its mirror of the objective block.
    pub fn add_objective_entry(
        &mut self,
        block: usize,
        row: usize,
        col: usize,
        value: f64,
    ) -> Result<(), SdpError> {
        let dim = self.block_dim(block)?;
        if row >= dim || col >= dim {
            return Err(SdpError::OutOfRange {
                block,
                index: row.max(col),
                dim,
            });
        }
        self.objective[block][(row, col)] += value;
        if row != col {
            self.objective[block][(col, row)] += value;
        }
        Ok(())
    }

    /// Validates and appends a constraint, returning its index.
    pub fn add_constraint(&mut self, mut constraint: Constraint) -> Result<usize, SdpError> {
        if !constraint.rhs.is_finite() {
            return Err(SdpError::NonFinite {
                what: "right-hand side",
            });
        }
        constraint.parts.retain(|(_, m)| !m.is_empty());
        constraint.parts.sort_by_key(|p| p.0);
        for w in constraint.parts.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SdpError::DuplicateBlock { block: w[0].0 });
            }
        }
        for (block, m) in &constraint.parts {
            let dim = self.block_dim(*block)?;
            if let Some(max) = m.max_index() {
                if max >= dim {
                    return Err(SdpError::OutOfRange {
                        block: *block,
                        index: max,
                        dim,
                    });
                }
            }
            if m.entries().iter().any(|e| !e.2.is_finite()) {
                return Err(SdpError::NonFinite {
                    what: "constraint matrix",
                });
            }
        }
        if constraint.parts.is_empty() {
            return Err(SdpError::ZeroConstraint {
                index: self.constraints.len(),
            });
        }
        self.constraints.push(constraint);
        Ok(self.constraints.len() - 1)
    }

    fn block_dim(&self, block: usize) -> Result<usize, SdpError> {
        self.block_dims
            .get(block)
            .copied()
            .ok_or(SdpError::NoSuchBlock {
                block,
                blocks: self.block_dims.len(),
            })
    }

    /// `A(X)`: the vector of `A_i • X`.
    pub fn apply(&self, x: &[DMatrix<f64>]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.parts.iter().map(|(b, m)| m.inner_dense(&x[*b])).sum())
            .collect()
    }

    /// `Aᵀy = Σ y_i A_i`.
    pub fn adjoint(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self
            .block_dims
            .iter()
            .map(|&d| DMatrix::zeros(d, d))
            .collect();
        for (c, &yi) in self.constraints.iter().zip(y) {
            for (b, m) in &c.parts {
                m.axpy_into(yi, &mut out[*b]);
            }
        }
        out
    }

    /// The dual slack `C − Σ y_i A_i` for a given multiplier vector.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let aty = self.adjoint(y);
        self.objective.iter().zip(aty).map(|(c, a)| c - a).collect()
    }

    /// Largest entry magnitude of any constraint matrix.
    pub(crate) fn max_constraint_norm(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                c.parts
                    .iter()
                    .map(|(_, m)| {
                        let sq: f64 = m
                            .entries()
                            .iter()
                            .map(|&(r, cc, v)| if r == cc { v * v } else { 2.0 * v * v })
                            .sum();
                        sq.sqrt()
                    })
                    .fold(0.0, |a: f64, b| a.hypot(b))
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for c in 0..n {
        for r in 0..c {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

/// Frobenius inner product of two dense matrices.
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_mirrors_and_accumulates() {
        let mut m = SymSparse::new();
        m.push(1, 0, 2.0);
        m.push(0, 1, 1.0);
        m.push(2, 2, -1.0);
        let d = m.to_dense(3);
        assert_eq!(d[(0, 1)], 3.0);
        assert_eq!(d[(1, 0)], 3.0);
        assert_eq!(d[(2, 2)], -1.0);
        let y = DMatrix::from_fn(3, 3, |r, c| (r + c) as f64);
        assert_eq!(m.inner_dense(&y), inner(&d, &y));
    }

    #[test]
    fn rejects_out_of_range_and_asymmetric_data() {
        let mut p = SdpProblem::new(vec![2]).unwrap();
        let mut c = Constraint::new(1.0);
        c.push(0, 0, 2, 1.0);
        assert!(matches!(
            p.add_constraint(c),
            Err(SdpError::OutOfRange { .. })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            p.set_objective_block(0, asym),
            Err(SdpError::NotSymmetric { .. })
        ));
        assert!(matches!(
            SdpProblem::new(vec![2, 0]),
            Err(SdpError::EmptyBlock { block: 1 })
        ));
        let mut c = Constraint::new(1.0);
        c.push(3, 0, 0, 1.0);
        assert!(matches!(
            p.add_constraint(c),
            Err(SdpError::NoSuchBlock { .. })
        ));
    }

    #[test]
    fn adjoint_matches_apply() {
        let mut p = SdpProblem::new(vec![2, 1]).unwrap();
        let mut c0 = Constraint::new(1.0);
        c0.push(0, 0, 1, 0.5);
        c0.push(1, 0, 0, 2.0);
        let mut c1 = Constraint::new(0.0);
        c1.push(0, 1, 1, -1.0);
        p.add_constraint(c0).unwrap();
        p.add_constraint(c1).unwrap();
        let x = vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
            DMatrix::from_element(1, 1, 4.0),
        ];
        let y = [0.7, -1.3];
        let ax = p.apply(&x);
        let aty = p.adjoint(&y);
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = aty.iter().zip(&x).map(|(a, b)| inner(a, b)).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
