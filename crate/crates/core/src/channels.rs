//! Single-qubit noise channels applied independently to every qubit.
//!
//! Time enters as the dimensionless `s = Γt` with equal rates on all qubits.
//! Every channel is parameterized through `γ = e^{−s/2}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};

/// Tolerances for accepting a density matrix as channel input.
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    AmplitudeDamping,
    PhaseDamping,
    Depolarizing,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [
        ChannelKind::AmplitudeDamping,
        ChannelKind::PhaseDamping,
        ChannelKind::Depolarizing,
    ];

    /// Short name used on the command line and in CSV output.
    pub fn short_name(self) -> &'static str {
        match self {
            ChannelKind::AmplitudeDamping => "ad",
            ChannelKind::PhaseDamping => "pd",
            ChannelKind::Depolarizing => "dp",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ad" | "amplitude" | "amplitude-damping" => Ok(ChannelKind::AmplitudeDamping),
            "pd" | "phase" | "phase-damping" | "dephasing" => Ok(ChannelKind::PhaseDamping),
            "dp" | "depolarizing" => Ok(ChannelKind::Depolarizing),
            other => Err(Error::Argument(format!(
                "unknown channel '{other}' (expected ad, pd or dp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub kind: ChannelKind,
    pub s: f64,
    pub operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    /// `Σ ω† ω`, which is the identity for a trace-preserving set.
    pub fn completeness(&self) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, k| acc + k.adjoint() * k)
    }

    /// `Σ ω ρ ω†` on a single qubit.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }
}

fn check_time(s: f64) -> Result<()> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::NegativeTime(s));
    }
    Ok(())
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn mat2(a: f64, b: f64, c: f64, d: f64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[real(a), real(b), real(c), real(d)])
}

pub fn single_qubit_kraus(kind: ChannelKind, s: f64) -> Result<KrausSet> {
    check_time(s)?;
    let gamma = (-s / 2.0).exp();
    let leak = (1.0 - gamma * gamma).max(0.0).sqrt();
    let operators = match kind {
        ChannelKind::AmplitudeDamping => {
            vec![mat2(1.0, 0.0, 0.0, gamma), mat2(0.0, leak, 0.0, 0.0)]
        }
        ChannelKind::PhaseDamping => vec![mat2(1.0, 0.0, 0.0, gamma), mat2(0.0, 0.0, 0.0, leak)],
        ChannelKind::Depolarizing => {
            let p = 1.0 - gamma;
            let q = 0.75 * p;
            let a = (1.0 - q).sqrt();
            let b = (q / 3.0).sqrt();
            vec![
                linalg::identity(2).scale(a),
                linalg::pauli_x().scale(b),
                linalg::pauli_y().scale(b),
                linalg::pauli_z().scale(b),
            ]
        }
    };
    Ok(KrausSet { kind, s, operators })
}

/// Checks Hermiticity, unit trace and positivity within the channel
/// tolerances; the error names the first violated property.
pub fn validate_density(rho: &ComplexMatrix) -> Result<usize> {
    let n = linalg::qubits_of(rho)?;
    let defect = linalg::hermitian_defect(rho);
    if defect > linalg::HERMITIAN_TOL {
        return Err(Error::InvalidDensity(format!(
            "not Hermitian (max |ρ - ρ†| = {defect:e})"
        )));
    }
    let tr = linalg::trace(rho).re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
    }
    let min = linalg::eig_hermitian(rho)?[0];
    if min < -PSD_TOL {
        return Err(Error::InvalidDensity(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    Ok(n)
}

/// Applies `Σ_i ω_i ρ ω_i†` on qubit `target` only.
pub(crate) fn apply_on_qubit(
    rho: &ComplexMatrix,
    ops: &[ComplexMatrix],
    target: usize,
    nqubits: usize,
) -> ComplexMatrix {
    let d = rho.nrows();
    let bit = 1 << (nqubits - 1 - target);
    let mut out = ComplexMatrix::zeros(d, d);
    // K ρ K† restricted to the target factor: rows and columns pair up as
    // (i, i|bit) and each 2x2 sub-block transforms as k · block · k†.
    for k in ops {
        let kd = k.adjoint();
        for c0 in (0..d).filter(|c| c & bit == 0) {
            for r0 in (0..d).filter(|r| r & bit == 0) {
                let rows = [r0, r0 | bit];
                let cols = [c0, c0 | bit];
                let mut t = [[ZERO; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        let mut acc = ZERO;
                        for m in 0..2 {
                            for n in 0..2 {
                                acc += k[(a, m)] * rho[(rows[m], cols[n])] * kd[(n, b)];
                            }
                        }
                        t[a][b] = acc;
                    }
                }
                for a in 0..2 {
                    for b in 0..2 {
                        out[(rows[a], cols[b])] += t[a][b];
                    }
                }
            }
        }
    }
    out
}

/// Evolves `rho` under the same channel acting independently on each qubit.
pub fn apply_local_channel(
    rho: &ComplexMatrix,
    kind: ChannelKind,
    s: f64,
    nqubits: usize,
) -> Result<ComplexMatrix> {
    let kraus = single_qubit_kraus(kind, s)?;
    let d = linalg::dim_for(nqubits);
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::Dimension(format!(
            "{}x{} matrix for {nqubits} qubits (expected {d}x{d})",
            rho.nrows(),
            rho.ncols()
        )));
    }
    validate_density(rho)?;
    let mut out = rho.clone();
    if s == 0.0 {
        return Ok(out);
    }
    for q in 0..nqubits {
        out = apply_on_qubit(&out, &kraus.operators, q, nqubits);
    }
    Ok(linalg::hermitian_part(&out))
}

/// Closed-form single-qubit evolution, for testing [`apply_local_channel`].
pub fn evolved_single_qubit_oracle(
    rho: &ComplexMatrix,
    kind: ChannelKind,
    s: f64,
) -> Result<ComplexMatrix> {
    if rho.nrows() != 2 || rho.ncols() != 2 {
        return Err(Error::Dimension(format!(
            "single-qubit oracle needs 2x2, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    check_time(s)?;
    let decay = (-s).exp();
    let coherence = (-s / 2.0).exp();
    let (r11, r12, r21, r22) = (rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)]);
    let m = match kind {
        ChannelKind::AmplitudeDamping => [
            r11 + r22 * (1.0 - decay),
            r12 * coherence,
            r21 * coherence,
            r22 * decay,
        ],
        ChannelKind::PhaseDamping => [r11, r12 * coherence, r21 * coherence, r22],
        ChannelKind::Depolarizing => {
            let p = 1.0 - coherence;
            let keep = 1.0 - p;
            let half = real(p / 2.0);
            [r11 * keep + half, r12 * keep, r21 * keep, r22 * keep + half]
        }
    };
    Ok(ComplexMatrix::from_row_slice(2, 2, &m))
}
