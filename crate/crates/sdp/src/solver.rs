//! Infeasible-start primal-dual path following with Mehrotra
//! predictor-corrector steps along the HKM direction.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix};

use crate::error::SdpError;
use crate::problem::{inner, SdpProblem};
use crate::schur::{SchurFactor, SchurLayout, TiledSym};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative duality gap: `|pobj − dobj| <= gap_tol·(1 + |pobj|)`.
    pub gap_tol: f64,
    /// Relative primal and dual residual norms.
    pub feasibility_tol: f64,
    /// Fraction of the maximal step to the cone boundary.
    pub step_fraction: f64,
    /// Objective magnitude beyond which the problem is declared infeasible.
    pub divergence_bound: f64,
    /// Keep one [`IterationRecord`] per iteration.
    pub record_trace: bool,
    /// Stop with [`SdpStatus::NumericalFailure`] once this many iterations
    /// pass without halving the worst of the three scaled convergence
    /// measures. Zero disables the check.
    pub stall_window: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gap_tol: 1e-8,
            feasibility_tol: 1e-8,
            step_fraction: 0.98,
            divergence_bound: 1e10,
            record_trace: false,
            stall_window: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
    Infeasible,
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIterations => "max-iterations",
            SdpStatus::NumericalFailure => "numerical-failure",
            SdpStatus::Infeasible => "infeasible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
    pub sigma: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub s: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `primal_objective − dual_objective`.
    pub gap: f64,
    /// `‖b − A(X)‖ / (1 + ‖b‖)`.
    pub primal_residual: f64,
    /// `‖C − S − Aᵀy‖ / (1 + ‖C‖)`.
    pub dual_residual: f64,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

impl SdpSolution {
    /// `X • S` summed over blocks.
    pub fn complementarity(&self) -> f64 {
        self.x.iter().zip(&self.s).map(|(x, s)| inner(x, s)).sum()
    }
}

/// Renders an iteration trace as CSV.
pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::from("iteration,pobj,dobj,pres,dres,mu,sigma,step_p,step_d\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{:.15e},{:.15e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.iteration,
            r.primal_objective,
            r.dual_objective,
            r.primal_residual,
            r.dual_residual,
            r.mu,
            r.sigma,
            r.step_primal,
            r.step_dual
        );
    }
    out
}

/// Minimum step length before the iteration is considered stalled.
const MIN_STEP: f64 = 1e-10;

/// Upper limit on iterative refinement sweeps per Newton solve.
const REFINEMENT_STEPS: usize = 3;

/// Solves the primal/dual pair described in [`crate::problem`].
///
/// Malformed input (including linearly dependent constraint matrices) is an
/// error; numerical outcomes are reported through [`SdpSolution::status`].
pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution, SdpError> {
    let m = problem.num_constraints();
    if m == 0 {
        return Err(SdpError::NoConstraints);
    }
    let layout = SchurLayout::new(problem);
    let dims = problem.block_dims().to_vec();
    let identity: Vec<DMatrix<f64>> = dims.iter().map(|&d| DMatrix::identity(d, d)).collect();

    let gram = layout.assemble(&identity, &identity);
    let scale = layout.max_diagonal(&gram);
    let gram_factor = match layout.factor(&gram, 0.0, 1e-10 * scale) {
        Ok(f) => f,
        Err(e) => {
            return Err(SdpError::DependentConstraints {
                index: layout.var_at(e.position),
            })
        }
    };

    let b = problem.rhs();
    let c = problem.objective();
    let b_norm = norm(&b);
    let c_norm = c.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
    let n_total: usize = dims.iter().sum();

    let b_max = b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tau = 1.0 + b_max + problem.max_constraint_norm();
    let mut x: Vec<DMatrix<f64>> = identity.iter().map(|i| i * tau).collect();
    let mut s = x.clone();
    let mut y = vec![0.0; m];

    let mut trace = Vec::new();
    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut last_sigma = f64::NAN;
    let mut last_steps = (f64::NAN, f64::NAN);
    let mut best_merit = f64::INFINITY;
    let mut best_at = 0;

    loop {
        let ax = layout.apply(&x);
        let r_p: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let aty = layout.adjoint(&y);
        let r_d: Vec<DMatrix<f64>> = (0..dims.len()).map(|k| &c[k] - &s[k] - &aty[k]).collect();
        let pobj: f64 = c.iter().zip(&x).map(|(ck, xk)| inner(ck, xk)).sum();
        let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
        let pres = norm(&r_p) / (1.0 + b_norm);
        let dres = r_d.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        let mu = x.iter().zip(&s).map(|(a, b)| inner(a, b)).sum::<f64>() / n_total as f64;

        if options.record_trace {
            trace.push(IterationRecord {
                iteration: iterations,
                primal_objective: pobj,
                dual_objective: dobj,
                primal_residual: pres,
                dual_residual: dres,
                mu,
                sigma: last_sigma,
                step_primal: last_steps.0,
                step_dual: last_steps.1,
            });
        }

        let gap = pobj - dobj;
        let converged = |pres: f64, gap: f64, pobj: f64| {
            pres <= options.feasibility_tol
                && dres <= options.feasibility_tol
                && gap.abs() <= options.gap_tol * (1.0 + pobj.abs())
        };
        if converged(pres, gap, pobj) {
            status = SdpStatus::Optimal;
            break;
        }
        // Near a degenerate optimum the Newton systems lose accuracy in the
        // primal equations first. Try restoring them by the least-norm
        // correction; accept if the result is still numerically PSD.
        if dres <= options.feasibility_tol && iterations > 0 {
            let u = layout.solve(&gram_factor, &r_p);
            let shifted: Vec<DMatrix<f64>> = x
                .iter()
                .zip(layout.adjoint(&u))
                .map(|(xk, dk)| xk + dk)
                .collect();
            let ax2 = layout.apply(&shifted);
            let pres2 = norm(
                &b.iter()
                    .zip(&ax2)
                    .map(|(bi, ai)| bi - ai)
                    .collect::<Vec<_>>(),
            ) / (1.0 + b_norm);
            let pobj2: f64 = c.iter().zip(&shifted).map(|(ck, xk)| inner(ck, xk)).sum();
            if converged(pres2, pobj2 - dobj, pobj2)
                && shifted
                    .iter()
                    .all(|xk| min_eigenvalue(xk) >= -options.feasibility_tol)
            {
                x = shifted;
                status = SdpStatus::Optimal;
                break;
            }
        }
        if dobj > options.divergence_bound
            || pobj < -options.divergence_bound
            || !pobj.is_finite()
            || !dobj.is_finite()
        {
            status = SdpStatus::Infeasible;
            break;
        }
        let merit = (pres / options.feasibility_tol)
            .max(dres / options.feasibility_tol)
            .max(gap.abs() / (options.gap_tol * (1.0 + pobj.abs())));
        if merit <= 0.5 * best_merit {
            best_merit = merit;
            best_at = iterations;
        }
        if options.stall_window > 0 && iterations - best_at >= options.stall_window {
            status = SdpStatus::NumericalFailure;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        let Some(z) = s.iter().map(spd_inverse).collect::<Option<Vec<_>>>() else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let schur = layout.assemble(&x, &z);
        let Some(factor) = regularized_factor(&layout, &schur) else {
            status = SdpStatus::NumericalFailure;
            break;
        };

        let x_rd_z: Vec<DMatrix<f64>> = (0..dims.len()).map(|k| &x[k] * &r_d[k] * &z[k]).collect();
        let a_x_rd_z = layout.apply(&x_rd_z);

        // Predictor: R_c Z = −X.
        let rc_z: Vec<DMatrix<f64>> = x.iter().map(|xk| -xk).collect();
        let newton = Newton {
            layout: &layout,
            schur: &schur,
            factor: &factor,
            gram: &gram_factor,
        };
        let (dx_a, _, ds_a) = newton.direction(&r_p, &r_d, &a_x_rd_z, &rc_z, &x, &z);
        let ap = step_length(&x, &dx_a, options.step_fraction);
        let ad = step_length(&s, &ds_a, options.step_fraction);
        let mu_aff = (0..dims.len())
            .map(|k| inner(&(&x[k] + &dx_a[k] * ap), &(&s[k] + &ds_a[k] * ad)))
            .sum::<f64>()
            / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector: R_c Z = σμZ − X − ΔX_a ΔS_a Z.
        let rc_z: Vec<DMatrix<f64>> = (0..dims.len())
            .map(|k| &z[k] * (sigma * mu) - &x[k] - &dx_a[k] * &ds_a[k] * &z[k])
            .collect();
        let (dx, dy, ds) = newton.direction(&r_p, &r_d, &a_x_rd_z, &rc_z, &x, &z);
        let ap = step_length(&x, &dx, options.step_fraction);
        let ad = step_length(&s, &ds, options.step_fraction);
        if ap < MIN_STEP && ad < MIN_STEP {
            status = SdpStatus::NumericalFailure;
            break;
        }
        for k in 0..dims.len() {
            x[k] += &dx[k] * ap;
            s[k] += &ds[k] * ad;
            symmetrize(&mut x[k]);
            symmetrize(&mut s[k]);
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        last_sigma = sigma;
        last_steps = (ap, ad);
    }

    let ax = layout.apply(&x);
    let aty = layout.adjoint(&y);
    let pobj: f64 = c.iter().zip(&x).map(|(ck, xk)| inner(ck, xk)).sum();
    let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
    let pres = norm(
        &b.iter()
            .zip(&ax)
            .map(|(bi, ai)| bi - ai)
            .collect::<Vec<_>>(),
    ) / (1.0 + b_norm);
    let dres = (0..dims.len())
        .map(|k| (&c[k] - &s[k] - &aty[k]).norm_squared())
        .sum::<f64>()
        .sqrt()
        / (1.0 + c_norm);

    Ok(SdpSolution {
        status,
        x,
        y,
        s,
        primal_objective: pobj,
        dual_objective: dobj,
        gap: pobj - dobj,
        primal_residual: pres,
        dual_residual: dres,
        iterations,
        trace,
    })
}

struct Newton<'a> {
    layout: &'a SchurLayout,
    schur: &'a TiledSym,
    factor: &'a SchurFactor,
    gram: &'a SchurFactor,
}

impl Newton<'_> {
    /// Newton direction for a given `R_c Z` term:
    /// `M Δy = r_p − A(R_c Z) + A(X R_d Z)`, `ΔS = R_d − AᵀΔy`,
    /// `ΔX = sym(R_c Z − X ΔS Z)`.
    ///
    /// `ΔX` is finally moved onto `A(ΔX) = r_p` along `range(Aᵀ)`. Near a
    /// degenerate optimum `M` is too ill-conditioned for the primal
    /// equations to hold otherwise, while the Gram matrix `A Aᵀ` is not.
    fn direction(
        &self,
        r_p: &[f64],
        r_d: &[DMatrix<f64>],
        a_x_rd_z: &[f64],
        rc_z: &[DMatrix<f64>],
        x: &[DMatrix<f64>],
        z: &[DMatrix<f64>],
    ) -> (Vec<DMatrix<f64>>, Vec<f64>, Vec<DMatrix<f64>>) {
        let layout = self.layout;
        let a_rc_z = layout.apply(rc_z);
        let rhs: Vec<f64> = (0..r_p.len())
            .map(|i| r_p[i] - a_rc_z[i] + a_x_rd_z[i])
            .collect();
        let mut dy = layout.solve(self.factor, &rhs);
        // Iterative refinement against the unshifted matrix, while it helps.
        let mut last = f64::INFINITY;
        for _ in 0..REFINEMENT_STEPS {
            let back = layout.multiply(self.schur, &dy);
            let resid: Vec<f64> = rhs.iter().zip(&back).map(|(r, b)| r - b).collect();
            let size = norm(&resid);
            if !(size < 0.5 * last) {
                break;
            }
            last = size;
            let corr = layout.solve(self.factor, &resid);
            for (d, c) in dy.iter_mut().zip(&corr) {
                *d += c;
            }
        }
        let aty = layout.adjoint(&dy);
        let ds: Vec<DMatrix<f64>> = r_d.iter().zip(&aty).map(|(r, a)| r - a).collect();
        let mut dx: Vec<DMatrix<f64>> = (0..x.len())
            .map(|k| {
                let mut d = &rc_z[k] - &x[k] * &ds[k] * &z[k];
                symmetrize(&mut d);
                d
            })
            .collect();
        let a_dx = layout.apply(&dx);
        let miss: Vec<f64> = r_p.iter().zip(&a_dx).map(|(r, a)| r - a).collect();
        let u = layout.solve(self.gram, &miss);
        for (d, c) in dx.iter_mut().zip(layout.adjoint(&u)) {
            *d += c;
        }
        (dx, dy, ds)
    }
}

fn regularized_factor(layout: &SchurLayout, schur: &TiledSym) -> Option<SchurFactor> {
    if let Ok(f) = layout.factor(schur, 0.0, 0.0) {
        return Some(f);
    }
    let mut shift = 1e-12;
    while shift <= 1e-6 * 1.0001 {
        if let Ok(f) = layout.factor(schur, shift, 0.0) {
            return Some(f);
        }
        shift *= 10.0;
    }
    None
}

/// Largest `α <= 1` keeping `X + α ΔX` positive definite, scaled by `fraction`.
fn step_length(x: &[DMatrix<f64>], dx: &[DMatrix<f64>], fraction: f64) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xk, dk) in x.iter().zip(dx) {
        alpha = alpha.min(max_step(xk, dk));
    }
    (fraction * alpha).min(1.0)
}

/// Supremum of `α` with `X + α D ⪰ 0`, for positive definite `X`.
pub(crate) fn max_step(x: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(li_d) = l.solve_lower_triangular(d) else {
        return 0.0;
    };
    let Some(mut w) = l.solve_lower_triangular(&li_d.transpose()) else {
        return 0.0;
    };
    symmetrize(&mut w);
    let lmin = w
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn spd_inverse(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = Cholesky::new(s.clone())?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for c in 0..n {
        for r in 0..c {
            let v = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
