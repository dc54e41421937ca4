//! Genuine multiparticle negativity through the PPT-mixture program
//!
//! ```text
//!   minimize Tr(W ρ)  over Hermitian W
//!   such that for every bipartition M | M̄:
//!       W = P_M + Q_M^{T_M},   0 ⪯ P_M ⪯ I,   0 ⪯ Q_M ⪯ I
//! ```
//!
//! Two equivalent encodings are available (see [`Formulation`]). In the
//! multiplier form the solver variables `y` are the coordinates of `W` and of
//! every `P_M` in an orthonormal Hermitian basis, `Q_M = (W − P_M)^{T_M}` is
//! substituted, and each bipartition contributes four linear matrix
//! inequalities; `bᵀy = −Tr(W ρ)`. In the standard form `P_M`, `Q_M` and the
//! slacks `I − P_M`, `I − Q_M` are primal blocks, the bounds and the shared
//! `W` are equality constraints, and the primal objective is `Tr(W ρ)`.
//!
//! Complex blocks enter through the real embedding; when `ρ` is real the
//! optimum can be taken real and the basis shrinks to real symmetric
//! matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use densesdp::{solve, Constraint, SdpProblem, SdpSolution, SdpStatus, SolverOptions, SymSparse};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::validate_density;
use crate::error::{Error, Result};
use crate::linalg::{self, partial_transpose_mask, ComplexMatrix};

/// Values of the monotone below this are reported as exactly zero.
pub const ZERO_CLAMP: f64 = 1e-7;

/// Largest `|Im ρ|` for which the real-symmetric basis is used.
pub const REAL_INPUT_TOL: f64 = 1e-14;

/// Certificate tolerances.
pub const DECOMPOSITION_TOL: f64 = 1e-6;
pub const EIGENVALUE_TOL: f64 = 1e-7;
pub const OBJECTIVE_TOL: f64 = 1e-6;

/// One side `M` of a split `M | M̄`, stored canonically with qubit 0 in `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    nqubits: usize,
    members: Vec<usize>,
}

impl Bipartition {
    /// Canonicalizes `side` (replacing it by its complement if it lacks
    /// qubit 0).
    pub fn new(nqubits: usize, side: &[usize]) -> Result<Self> {
        let mut members = side.to_vec();
        members.sort_unstable();
        members.dedup();
        if let Some(&q) = members.iter().find(|&&q| q >= nqubits) {
            return Err(Error::QubitOutOfRange { index: q, nqubits });
        }
        if members.is_empty() || members.len() >= nqubits {
            return Err(Error::Bipartition(format!(
                "side {members:?} of {nqubits} qubits is not a proper subset"
            )));
        }
        if members[0] != 0 {
            members = (0..nqubits).filter(|q| !members.contains(q)).collect();
        }
        Ok(Self { nqubits, members })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.nqubits)
            .filter(|q| !self.members.contains(q))
            .collect()
    }

    pub(crate) fn mask(&self) -> usize {
        self.members
            .iter()
            .fold(0, |m, &q| m | 1 << (self.nqubits - 1 - q))
    }

    /// Label such as `AC|B`.
    pub fn label(&self) -> String {
        let name = |q: usize| char::from(b'A' + q as u8);
        let a: String = self.members.iter().map(|&q| name(q)).collect();
        let b: String = self.complement().into_iter().map(name).collect();
        format!("{a}|{b}")
    }
}

/// All `2^{N−1} − 1` canonical bipartitions, ordered by size of `M` and
/// then lexicographically.
pub fn bipartitions(nqubits: usize) -> Result<Vec<Bipartition>> {
    if !(2..=10).contains(&nqubits) {
        return Err(Error::Bipartition(format!(
            "need 2 to 10 qubits, got {nqubits}"
        )));
    }
    let mut out = Vec::new();
    for rest in 0..(1usize << (nqubits - 1)) - 1 {
        let mut side = vec![0];
        side.extend((1..nqubits).filter(|&q| rest >> (q - 1) & 1 == 1));
        out.push(Bipartition {
            nqubits,
            members: side,
        });
    }
    out.sort_by(|a, b| {
        a.members
            .len()
            .cmp(&b.members.len())
            .then_with(|| a.members.cmp(&b.members))
    });
    Ok(out)
}

/// Orthonormal basis of `d×d` Hermitian matrices, optionally restricted to
/// real symmetric ones. Element `i` is stored as its nonzero entries.
#[derive(Debug, Clone)]
struct HermitianBasis {
    dim: usize,
    elements: Vec<Vec<(usize, usize, Complex64)>>,
}

impl HermitianBasis {
    fn new(dim: usize, real: bool) -> Self {
        let h = FRAC_1_SQRT_2;
        let mut elements = Vec::new();
        for k in 0..dim {
            elements.push(vec![(k, k, Complex64::new(1.0, 0.0))]);
        }
        for k in 0..dim {
            for l in k + 1..dim {
                elements.push(vec![
                    (k, l, Complex64::new(h, 0.0)),
                    (l, k, Complex64::new(h, 0.0)),
                ]);
                if !real {
                    elements.push(vec![
                        (k, l, Complex64::new(0.0, h)),
                        (l, k, Complex64::new(0.0, -h)),
                    ]);
                }
            }
        }
        Self { dim, elements }
    }

    fn len(&self) -> usize {
        self.elements.len()
    }

    /// Coordinates `Tr(Eᵢ m)` of a Hermitian matrix.
    fn coordinates(&self, m: &ComplexMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| e.iter().map(|&(r, c, z)| (z * m[(c, r)]).re).sum())
            .collect()
    }

    fn matrix(&self, coords: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for (e, &v) in self.elements.iter().zip(coords) {
            for &(r, c, z) in e {
                m[(r, c)] += z * v;
            }
        }
        m
    }
}

/// Upper-triangle entries of the block matrix `scale · emb(E^{T_mask})`,
/// either real embedded (`2d`) or, for real bases, just the real part (`d`).
fn embedded(
    element: &[(usize, usize, Complex64)],
    mask: usize,
    dim: usize,
    real: bool,
    scale: f64,
    out: &mut SymSparse,
) {
    for &(r, c, z) in element {
        let (r, c) = ((r & !mask) | (c & mask), (c & !mask) | (r & mask));
        let z = z * scale;
        let mut put = |rr: usize, cc: usize, v: f64| {
            if rr <= cc {
                out.push(rr, cc, v);
            }
        };
        put(r, c, z.re);
        if !real {
            put(r + dim, c + dim, z.re);
            put(r, c + dim, -z.im);
            put(r + dim, c, z.im);
        }
    }
}

/// How the program is handed to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Solver multipliers are the coordinates of `W` and of every `P_M`;
    /// each bipartition contributes four linear matrix inequalities.
    Multiplier,
    /// `P_M`, `Q_M` and their slacks `I − P_M`, `I − Q_M` are the primal
    /// blocks, tied together by equalities. Larger, but its optimal face is
    /// not degenerate in the way the multiplier form's can be.
    Standard,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formulation::Multiplier => "multiplier",
            Formulation::Standard => "standard",
        })
    }
}

/// Which formulations [`genuine_negativity`] tries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Standard form up to [`AUTO_MULTIPLIER_QUBITS`]` − 1` qubits. From
    /// there on the multiplier form with stall detection comes first, then
    /// the standard form if it did not reach a certified optimum.
    Auto,
    Only(Formulation),
}

/// Stall window used for the first attempt under [`Strategy::Auto`] when
/// the solver options leave it disabled.
pub const AUTO_STALL_WINDOW: usize = 8;

/// Smallest qubit count for which [`Strategy::Auto`] tries the multiplier
/// form first.
pub const AUTO_MULTIPLIER_QUBITS: usize = 4;

/// The assembled program for one `ρ`.
#[derive(Debug, Clone)]
pub struct WitnessProgram {
    nqubits: usize,
    formulation: Formulation,
    bipartitions: Vec<Bipartition>,
    basis: HermitianBasis,
    problem: SdpProblem,
}

impl WitnessProgram {
    pub fn problem(&self) -> &SdpProblem {
        &self.problem
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn bipartitions(&self) -> &[Bipartition] {
        &self.bipartitions
    }

    /// True when the program runs over real symmetric matrices only.
    pub fn is_real(&self) -> bool {
        self.block_dim() == self.basis.dim
    }

    pub fn block_dim(&self) -> usize {
        self.problem.block_dims()[0]
    }

    /// `W` plus one `P_M` and one `Q_M` per bipartition.
    pub fn matrix_variables(&self) -> usize {
        1 + 2 * self.bipartitions.len()
    }

    /// Number of `W = P_M + Q_M^{T_M}` conditions.
    pub fn decomposition_groups(&self) -> usize {
        self.bipartitions.len()
    }

    /// Real parameters per Hermitian matrix variable.
    pub fn parameters_per_matrix(&self) -> usize {
        self.basis.len()
    }

    /// Multiplier vector for a given `W` and list of `P_M`. Only defined
    /// for [`Formulation::Multiplier`].
    pub fn encode(&self, w: &ComplexMatrix, p: &[ComplexMatrix]) -> Result<Vec<f64>> {
        if self.formulation != Formulation::Multiplier {
            return Err(Error::Argument(
                "multiplier encoding of a standard-form program".into(),
            ));
        }
        if p.len() != self.bipartitions.len() {
            return Err(Error::Dimension(format!(
                "{} P matrices for {} bipartitions",
                p.len(),
                self.bipartitions.len()
            )));
        }
        let mut y = self.basis.coordinates(w);
        for pm in p {
            y.extend(self.basis.coordinates(pm));
        }
        Ok(y)
    }

    /// Primal blocks for given `P_M` and `Q_M`. Only defined for
    /// [`Formulation::Standard`].
    pub fn encode_blocks(
        &self,
        parts: &[(ComplexMatrix, ComplexMatrix)],
    ) -> Result<Vec<DMatrix<f64>>> {
        if self.formulation != Formulation::Standard {
            return Err(Error::Argument(
                "block encoding of a multiplier-form program".into(),
            ));
        }
        if parts.len() != self.bipartitions.len() {
            return Err(Error::Dimension(format!(
                "{} pairs for {} bipartitions",
                parts.len(),
                self.bipartitions.len()
            )));
        }
        let id = linalg::identity(self.basis.dim);
        let mut out = Vec::with_capacity(4 * parts.len());
        for (p, q) in parts {
            for m in [p.clone(), &id - p, q.clone(), &id - q] {
                out.push(self.embed(&m));
            }
        }
        Ok(out)
    }

    /// `(W, [(P_M, Q_M)])` for a multiplier vector.
    pub fn decode(&self, y: &[f64]) -> (ComplexMatrix, Vec<(ComplexMatrix, ComplexMatrix)>) {
        let n = self.basis.len();
        let w = self.basis.matrix(&y[..n]);
        let parts = self
            .bipartitions
            .iter()
            .enumerate()
            .map(|(j, bip)| {
                let p = self.basis.matrix(&y[n * (j + 1)..n * (j + 2)]);
                let q = partial_transpose_mask(&(&w - &p), bip.mask());
                (p, q)
            })
            .collect();
        (w, parts)
    }

    /// `(W, [(P_M, Q_M)])` for standard-form primal blocks. `W` is the
    /// average of `P_M + Q_M^{T_M}` over all bipartitions.
    pub fn decode_blocks(
        &self,
        x: &[DMatrix<f64>],
    ) -> (ComplexMatrix, Vec<(ComplexMatrix, ComplexMatrix)>) {
        let d = self.basis.dim;
        let mut w = ComplexMatrix::zeros(d, d);
        let parts: Vec<_> = self
            .bipartitions
            .iter()
            .enumerate()
            .map(|(j, bip)| {
                let p = self.unembed(&x[4 * j]);
                let q = self.unembed(&x[4 * j + 2]);
                w += &p + partial_transpose_mask(&q, bip.mask());
                (p, q)
            })
            .collect();
        w.unscale_mut(parts.len() as f64);
        (w, parts)
    }

    fn embed(&self, m: &ComplexMatrix) -> DMatrix<f64> {
        if self.is_real() {
            m.map(|z| z.re)
        } else {
            linalg::embed_unchecked(m)
        }
    }

    /// Hermitian matrix `A` with `Re Tr(E A) = ⟨block(E), X⟩` for every
    /// Hermitian `E`.
    fn unembed(&self, x: &DMatrix<f64>) -> ComplexMatrix {
        let d = self.basis.dim;
        if self.is_real() {
            return linalg::hermitian_part(&x.map(|v| Complex64::new(v, 0.0)));
        }
        let mut m = ComplexMatrix::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                let re = 0.5 * (x[(r, c)] + x[(r + d, c + d)]);
                let im = 0.5 * (x[(r + d, c)] - x[(r, c + d)]);
                m[(r, c)] = Complex64::new(re, im);
            }
        }
        linalg::hermitian_part(&m)
    }
}

/// Builds the program for `rho`. `allow_real` enables the real-symmetric
/// basis when `rho` has no imaginary part.
pub fn build_program(
    rho: &ComplexMatrix,
    nqubits: usize,
    formulation: Formulation,
    allow_real: bool,
) -> Result<WitnessProgram> {
    let d = linalg::dim_for(nqubits);
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::Dimension(format!(
            "{}x{} matrix for {nqubits} qubits",
            rho.nrows(),
            rho.ncols()
        )));
    }
    validate_density(rho)?;
    let bips = bipartitions(nqubits)?;
    let real = allow_real && rho.iter().all(|z| z.im.abs() <= REAL_INPUT_TOL);
    let basis = HermitianBasis::new(d, real);
    let bd = if real { d } else { 2 * d };
    let mut problem = SdpProblem::new(vec![bd; 4 * bips.len()])?;
    match formulation {
        Formulation::Multiplier => multiplier_form(&mut problem, rho, &bips, &basis, real)?,
        Formulation::Standard => standard_form(&mut problem, rho, &bips, &basis, real)?,
    }
    Ok(WitnessProgram {
        nqubits,
        formulation,
        bipartitions: bips,
        basis,
        problem,
    })
}

/// Blocks per bipartition j: P, I − P, (W − P)^T, I − (W − P)^T.
fn multiplier_form(
    problem: &mut SdpProblem,
    rho: &ComplexMatrix,
    bips: &[Bipartition],
    basis: &HermitianBasis,
    real: bool,
) -> Result<()> {
    let d = basis.dim;
    let bd = problem.block_dims()[0];
    for j in 0..bips.len() {
        for b in [4 * j + 1, 4 * j + 3] {
            for k in 0..bd {
                problem.add_objective_entry(b, k, k, 1.0)?;
            }
        }
    }
    for e in &basis.elements {
        let rhs = -e.iter().map(|&(r, c, z)| (z * rho[(c, r)]).re).sum::<f64>();
        let mut con = Constraint::new(rhs);
        for (j, bip) in bips.iter().enumerate() {
            let mut lo = SymSparse::new();
            let mut hi = SymSparse::new();
            embedded(e, bip.mask(), d, real, -1.0, &mut lo);
            embedded(e, bip.mask(), d, real, 1.0, &mut hi);
            con = con.with_block(4 * j + 2, lo).with_block(4 * j + 3, hi);
        }
        problem.add_constraint(con)?;
    }
    for (j, bip) in bips.iter().enumerate() {
        for e in &basis.elements {
            let mut parts = [
                SymSparse::new(),
                SymSparse::new(),
                SymSparse::new(),
                SymSparse::new(),
            ];
            embedded(e, 0, d, real, -1.0, &mut parts[0]);
            embedded(e, 0, d, real, 1.0, &mut parts[1]);
            embedded(e, bip.mask(), d, real, 1.0, &mut parts[2]);
            embedded(e, bip.mask(), d, real, -1.0, &mut parts[3]);
            let mut con = Constraint::new(0.0);
            for (k, m) in parts.into_iter().enumerate() {
                con = con.with_block(4 * j + k, m);
            }
            problem.add_constraint(con)?;
        }
    }
    Ok(())
}

/// Blocks per bipartition j: P_j, I − P_j, Q_j, I − Q_j. Consecutive
/// bipartitions share `W` through `P_j + Q_j^{T_j} = P_{j+1} + Q_{j+1}^{T_{j+1}}`.
fn standard_form(
    problem: &mut SdpProblem,
    rho: &ComplexMatrix,
    bips: &[Bipartition],
    basis: &HermitianBasis,
    real: bool,
) -> Result<()> {
    let d = basis.dim;
    // Complex blocks carry half the embedding so that ⟨block(E), X⟩ = Tr(E A).
    let scale = if real { 1.0 } else { 0.5 };
    let lift = |m: &ComplexMatrix| {
        if real {
            m.map(|z| z.re)
        } else {
            linalg::embed_unchecked(m) * scale
        }
    };
    problem.set_objective_block(0, lift(rho))?;
    problem.set_objective_block(2, lift(&partial_transpose_mask(rho, bips[0].mask())))?;
    for j in 0..bips.len() {
        for e in &basis.elements {
            let tr: f64 = e
                .iter()
                .filter(|&&(r, c, _)| r == c)
                .map(|&(_, _, z)| z.re)
                .sum();
            for b in [4 * j, 4 * j + 2] {
                let mut a = SymSparse::new();
                embedded(e, 0, d, real, scale, &mut a);
                problem.add_constraint(
                    Constraint::new(tr)
                        .with_block(b, a.clone())
                        .with_block(b + 1, a),
                )?;
            }
        }
    }
    for j in 1..bips.len() {
        let (prev, next) = (&bips[j - 1], &bips[j]);
        for e in &basis.elements {
            let mut blocks = [
                SymSparse::new(),
                SymSparse::new(),
                SymSparse::new(),
                SymSparse::new(),
            ];
            embedded(e, 0, d, real, scale, &mut blocks[0]);
            embedded(e, prev.mask(), d, real, scale, &mut blocks[1]);
            embedded(e, 0, d, real, -scale, &mut blocks[2]);
            embedded(e, next.mask(), d, real, -scale, &mut blocks[3]);
            let [p0, q0, p1, q1] = blocks;
            let con = Constraint::new(0.0)
                .with_block(4 * (j - 1), p0)
                .with_block(4 * (j - 1) + 2, q0)
                .with_block(4 * j, p1)
                .with_block(4 * j + 2, q1);
            problem.add_constraint(con)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmnOptions {
    pub solver: SolverOptions,
    /// Use the real-symmetric basis for real inputs.
    pub real_reduction: bool,
    pub strategy: Strategy,
}

impl Default for GmnOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            real_reduction: true,
            strategy: Strategy::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub bipartition: Bipartition,
    pub p: ComplexMatrix,
    pub q: ComplexMatrix,
    /// Traces of the solver multipliers on the `I − P_M ⪰ 0` and
    /// `I − Q_M ⪰ 0` conditions; zero means the upper bound is inactive.
    pub upper_bound_multipliers: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub formulation: Formulation,
    /// Formulations tried, including the one reported.
    pub attempts: usize,
    pub status: SdpStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub complementarity: f64,
    pub real_basis: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmnResult {
    /// `max(0, −objective)`, clamped to zero below [`ZERO_CLAMP`].
    pub value: f64,
    /// `Tr(W ρ)` for the returned witness.
    pub objective: f64,
    pub witness: ComplexMatrix,
    pub decompositions: Vec<Decomposition>,
    pub certificate_ok: bool,
    pub diagnostics: Vec<String>,
    pub solver: SolverSummary,
}

impl GmnResult {
    /// Whether a nonzero value was found. A zero value does not imply
    /// biseparability: entangled PPT mixtures also score zero.
    pub fn detected(&self) -> bool {
        self.value > 0.0
    }
}

/// Outcome of an independent certificate check.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

/// Checks a witness and its decompositions using only dense linear algebra:
/// `W = P_M + Q_M^{T_M}`, spectra of `P_M` and `Q_M` inside `[0, 1]`, and the
/// reported objective against `Tr(W ρ)`.
pub fn verify_certificate(result: &GmnResult, rho: &ComplexMatrix) -> Certificate {
    let mut diagnostics = Vec::new();
    let w = &result.witness;
    if w.shape() != rho.shape() {
        diagnostics.push(format!(
            "witness is {}x{}, state is {}x{}",
            w.nrows(),
            w.ncols(),
            rho.nrows(),
            rho.ncols()
        ));
        return Certificate {
            passed: false,
            diagnostics,
        };
    }
    let herm = linalg::hermitian_defect(w);
    if herm > linalg::HERMITIAN_TOL {
        diagnostics.push(format!("witness is not Hermitian (defect {herm:e})"));
    }
    for dec in &result.decompositions {
        let label = dec.bipartition.label();
        let qt = partial_transpose_mask(&dec.q, dec.bipartition.mask());
        let residual = linalg::max_abs_diff(w, &(&dec.p + &qt));
        if !(residual <= DECOMPOSITION_TOL) {
            diagnostics.push(format!(
                "{label}: decomposition residual {residual:e} exceeds {DECOMPOSITION_TOL:e}"
            ));
        }
        for (name, m) in [("P", &dec.p), ("Q", &dec.q)] {
            match linalg::eig_hermitian(m) {
                Ok(vals) => {
                    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
                    if lo < -EIGENVALUE_TOL || hi > 1.0 + EIGENVALUE_TOL {
                        diagnostics.push(format!(
                            "{label}: {name} spectrum [{lo:e}, {hi:e}] leaves [0, 1]"
                        ));
                    }
                }
                Err(e) => diagnostics.push(format!("{label}: {name} {e}")),
            }
        }
    }
    let expectation = linalg::trace_product(w, rho).re;
    if !((expectation - result.objective).abs() <= OBJECTIVE_TOL) {
        diagnostics.push(format!(
            "Tr(W rho) = {expectation:e} differs from objective {:e}",
            result.objective
        ));
    }
    Certificate {
        passed: diagnostics.is_empty(),
        diagnostics,
    }
}

/// Solves the program for `rho`. A solver status other than optimal is an
/// error, never a zero value.
///
/// Under [`Strategy::Auto`] a certificate failure of the first attempt also
/// triggers the standard form; the last attempt is returned as is.
pub fn genuine_negativity(
    rho: &ComplexMatrix,
    nqubits: usize,
    options: &GmnOptions,
) -> Result<GmnResult> {
    match options.strategy {
        Strategy::Only(f) => {
            solve_with(rho, nqubits, f, &options.solver, options.real_reduction, 1)
        }
        Strategy::Auto if nqubits < AUTO_MULTIPLIER_QUBITS => solve_with(
            rho,
            nqubits,
            Formulation::Standard,
            &options.solver,
            options.real_reduction,
            1,
        ),
        Strategy::Auto => {
            let mut first = options.solver.clone();
            if first.stall_window == 0 {
                first.stall_window = AUTO_STALL_WINDOW;
            }
            match solve_with(
                rho,
                nqubits,
                Formulation::Multiplier,
                &first,
                options.real_reduction,
                1,
            ) {
                Ok(r) if r.certificate_ok => Ok(r),
                Ok(_) | Err(Error::SolverFailed { .. }) => solve_with(
                    rho,
                    nqubits,
                    Formulation::Standard,
                    &options.solver,
                    options.real_reduction,
                    2,
                ),
                Err(e) => Err(e),
            }
        }
    }
}

fn solve_with(
    rho: &ComplexMatrix,
    nqubits: usize,
    formulation: Formulation,
    solver: &SolverOptions,
    real_reduction: bool,
    attempts: usize,
) -> Result<GmnResult> {
    let program = build_program(rho, nqubits, formulation, real_reduction)?;
    let sol = solve(program.problem(), solver)?;
    let mut result = result_from_solution(&program, &sol, rho)?;
    result.solver.attempts = attempts;
    Ok(result)
}

pub(crate) fn result_from_solution(
    program: &WitnessProgram,
    sol: &SdpSolution,
    rho: &ComplexMatrix,
) -> Result<GmnResult> {
    if sol.status != SdpStatus::Optimal {
        return Err(Error::SolverFailed {
            status: sol.status,
            primal_objective: sol.primal_objective,
            dual_objective: sol.dual_objective,
        });
    }
    // Upper-bound multipliers: primal blocks of the multiplier form, dual
    // slacks of the standard form. Embedded blocks count every eigenvalue
    // twice.
    let (witness, parts, bounds) = match program.formulation {
        Formulation::Multiplier => {
            let (w, parts) = program.decode(&sol.y);
            (w, parts, &sol.x)
        }
        Formulation::Standard => {
            let (w, parts) = program.decode_blocks(&sol.x);
            (w, parts, &sol.s)
        }
    };
    let copies = (program.block_dim() / program.basis.dim) as f64;
    let trace = |m: &DMatrix<f64>| m.trace() / copies;
    let objective = linalg::trace_product(&witness, rho).re;
    let raw = -objective;
    let value = if raw < ZERO_CLAMP { 0.0 } else { raw };
    let decompositions = program
        .bipartitions
        .iter()
        .zip(parts)
        .enumerate()
        .map(|(j, (bip, (p, q)))| Decomposition {
            bipartition: bip.clone(),
            p,
            q,
            upper_bound_multipliers: (trace(&bounds[4 * j + 1]), trace(&bounds[4 * j + 3])),
        })
        .collect();
    let mut result = GmnResult {
        value,
        objective,
        witness,
        decompositions,
        certificate_ok: false,
        diagnostics: Vec::new(),
        solver: SolverSummary {
            formulation: program.formulation,
            attempts: 1,
            status: sol.status,
            primal_objective: sol.primal_objective,
            dual_objective: sol.dual_objective,
            gap: sol.gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            iterations: sol.iterations,
            complementarity: sol.complementarity(),
            real_basis: program.is_real(),
        },
    };
    let cert = verify_certificate(&result, rho);
    result.certificate_ok = cert.passed;
    result.diagnostics = cert.diagnostics;
    Ok(result)
}

/// Convenience wrapper with default options.
pub fn gmn_value(rho: &ComplexMatrix, nqubits: usize) -> Result<f64> {
    Ok(genuine_negativity(rho, nqubits, &GmnOptions::default())?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use crate::states::{named_state, NamedState};

    fn zero(d: usize) -> ComplexMatrix {
        ComplexMatrix::from_element(d, d, ZERO)
    }

    fn density(s: NamedState) -> ComplexMatrix {
        named_state(s).unwrap().to_density().unwrap()
    }

    #[test]
    fn bipartition_counts_and_labels() {
        assert_eq!(bipartitions(2).unwrap().len(), 1);
        let three: Vec<String> = bipartitions(3)
            .unwrap()
            .iter()
            .map(Bipartition::label)
            .collect();
        assert_eq!(three, ["A|BC", "AB|C", "AC|B"]);
        assert_eq!(bipartitions(4).unwrap().len(), 7);
        assert!(bipartitions(1).is_err());
    }

    #[test]
    fn bipartition_canonical_form() {
        let b = Bipartition::new(3, &[2, 1]).unwrap();
        assert_eq!(b.members(), &[0]);
        assert_eq!(b.complement(), vec![1, 2]);
        assert!(Bipartition::new(3, &[]).is_err());
        assert!(Bipartition::new(3, &[0, 1, 2]).is_err());
        assert!(matches!(
            Bipartition::new(3, &[3]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn program_structure() {
        let rho = density(NamedState::Ghz(3));
        let p = build_program(&rho, 3, Formulation::Multiplier, true).unwrap();
        assert_eq!(p.matrix_variables(), 7);
        assert_eq!(p.decomposition_groups(), 3);
        assert!(p.is_real());
        assert_eq!(p.problem().num_constraints(), 4 * 36);
        let p = build_program(&rho, 3, Formulation::Multiplier, false).unwrap();
        assert_eq!(p.problem().num_constraints(), 4 * 64);
        assert_eq!(p.block_dim(), 16);
        let two = build_program(
            &density(NamedState::Ghz(2)),
            2,
            Formulation::Multiplier,
            true,
        )
        .unwrap();
        assert_eq!(two.decomposition_groups(), 1);
    }

    #[test]
    fn interior_point_is_strictly_feasible() {
        for real in [true, false] {
            let rho = density(NamedState::W(3));
            let prog = build_program(&rho, 3, Formulation::Multiplier, real).unwrap();
            let d = 8;
            let w = linalg::identity(d).scale(0.5);
            let p = vec![linalg::identity(d).scale(0.25); 3];
            let y = prog.encode(&w, &p).unwrap();
            for block in prog.problem().dual_slack(&y) {
                let min = block.symmetric_eigenvalues().min();
                assert!(min > 0.25 - 1e-12, "min eigenvalue {min}");
            }
            let (w2, parts) = prog.decode(&y);
            assert!(linalg::max_abs_diff(&w, &w2) < 1e-15);
            for (pm, qm) in parts {
                assert!(linalg::max_abs_diff(&pm, &qm) < 1e-15);
            }
            let obj: f64 = prog
                .problem()
                .rhs()
                .iter()
                .zip(&y)
                .map(|(b, v)| b * v)
                .sum();
            assert!((obj + 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn standard_form_structure() {
        let rho = density(NamedState::W(3));
        let p = build_program(&rho, 3, Formulation::Standard, true).unwrap();
        assert_eq!(p.formulation(), Formulation::Standard);
        assert_eq!(p.problem().block_dims().len(), 12);
        assert_eq!(p.problem().num_constraints(), (2 * 3 + 2) * 36);
        let p = build_program(&rho, 3, Formulation::Standard, false).unwrap();
        assert_eq!(p.problem().num_constraints(), (2 * 3 + 2) * 64);
        let two =
            build_program(&density(NamedState::Ghz(2)), 2, Formulation::Standard, true).unwrap();
        assert_eq!(two.problem().num_constraints(), 2 * 10);
    }

    #[test]
    fn standard_form_blocks_round_trip() {
        for real in [true, false] {
            let rho = density(NamedState::Ghz(3));
            let prog = build_program(&rho, 3, Formulation::Standard, real).unwrap();
            let half = linalg::identity(8).scale(0.5);
            let parts: Vec<_> = (0..3).map(|_| (half.clone(), half.clone())).collect();
            let x = prog.encode_blocks(&parts).unwrap();
            let ax = prog.problem().apply(&x);
            for (a, b) in ax.iter().zip(prog.problem().rhs()) {
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
            for block in &x {
                assert!(block.clone().symmetric_eigenvalues().min() > 0.5 - 1e-12);
            }
            let (w, back) = prog.decode_blocks(&x);
            assert!(linalg::max_abs_diff(&w, &linalg::identity(8)) < 1e-14);
            for (p, q) in back {
                assert!(linalg::max_abs_diff(&p, &half) < 1e-15);
                assert!(linalg::max_abs_diff(&q, &half) < 1e-15);
            }
            let obj: f64 = prog
                .problem()
                .objective()
                .iter()
                .zip(&x)
                .map(|(c, b)| densesdp::inner(c, b))
                .sum();
            assert!((obj - 1.0).abs() < 1e-13);
            assert!(prog.encode(&half, &[]).is_err());
        }
    }

    #[test]
    fn formulations_agree() {
        let rho = crate::channels::apply_local_channel(
            &density(NamedState::W(3)),
            crate::ChannelKind::AmplitudeDamping,
            0.3,
            3,
        )
        .unwrap();
        let mut values = Vec::new();
        for f in [Formulation::Multiplier, Formulation::Standard] {
            for real in [true, false] {
                let opts = GmnOptions {
                    real_reduction: real,
                    strategy: Strategy::Only(f),
                    ..Default::default()
                };
                let r = genuine_negativity(&rho, 3, &opts).unwrap();
                assert!(r.certificate_ok, "{f} {real}: {:?}", r.diagnostics);
                assert_eq!(r.solver.formulation, f);
                values.push(r.value);
            }
        }
        for v in &values {
            assert!((v - values[0]).abs() < 1e-7, "{values:?}");
        }
    }

    #[test]
    fn ghz3_is_maximal() {
        let rho = density(NamedState::Ghz(3));
        let r = genuine_negativity(&rho, 3, &GmnOptions::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6, "{}", r.value);
        assert!(r.certificate_ok, "{:?}", r.diagnostics);
        assert!((r.objective + r.value).abs() < 1e-12);
    }

    #[test]
    fn product_state_scores_zero() {
        let mut rho = ComplexMatrix::zeros(8, 8);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let r = genuine_negativity(&rho, 3, &GmnOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.detected());
        assert!(r.certificate_ok, "{:?}", r.diagnostics);
    }

    #[test]
    fn certificate_rejects_perturbed_witness() {
        let rho = density(NamedState::Ghz(3));
        let mut r = genuine_negativity(&rho, 3, &GmnOptions::default()).unwrap();
        r.witness[(0, 0)] += Complex64::new(0.01, 0.0);
        let cert = verify_certificate(&r, &rho);
        assert!(!cert.passed);
        assert!(cert
            .diagnostics
            .iter()
            .any(|d| d.contains("decomposition residual")));
    }

    #[test]
    fn hand_built_certificate() {
        let mut rho = ComplexMatrix::zeros(8, 8);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let id = linalg::identity(8);
        let decompositions = bipartitions(3)
            .unwrap()
            .into_iter()
            .map(|b| Decomposition {
                bipartition: b,
                p: id.clone(),
                q: zero(8),
                upper_bound_multipliers: (0.0, 0.0),
            })
            .collect();
        let r = GmnResult {
            value: 0.0,
            objective: 1.0,
            witness: id,
            decompositions,
            certificate_ok: false,
            diagnostics: vec![],
            solver: SolverSummary {
                formulation: Formulation::Standard,
                attempts: 1,
                status: SdpStatus::Optimal,
                primal_objective: 1.0,
                dual_objective: 1.0,
                gap: 0.0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                iterations: 0,
                complementarity: 0.0,
                real_basis: true,
            },
        };
        let cert = verify_certificate(&r, &rho);
        assert!(cert.passed, "{:?}", cert.diagnostics);
    }
}
