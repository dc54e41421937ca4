#![allow(dead_code)]

use gmn_robustness::linalg::{self, PureState};
use gmn_robustness::{single_qubit_kraus, tensor_product, ChannelKind, ComplexMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_pure(n: usize, rng: &mut ChaCha8Rng) -> PureState {
    let amps = (0..1usize << n).map(|_| entry(rng)).collect();
    PureState::normalized(n, amps).unwrap()
}

/// `G G† / Tr` for a `2^n × rank` matrix with uniform complex entries.
pub fn random_density(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let d = 1usize << n;
    let g = ComplexMatrix::from_fn(d, rank, |_, _| entry(rng));
    let rho = &g * g.adjoint();
    let tr = linalg::trace(&rho);
    linalg::hermitian_part(&rho.unscale(tr.re))
}

/// Random single-qubit unitary `cos|v| I + i sin|v| v̂·σ`, up to a phase.
pub fn random_qubit_unitary(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let v: [f64; 3] = [
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
    ];
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let gen = linalg::pauli_x() * Complex64::new(v[0] / len, 0.0)
        + linalg::pauli_y() * Complex64::new(v[1] / len, 0.0)
        + linalg::pauli_z() * Complex64::new(v[2] / len, 0.0);
    linalg::identity(2) * Complex64::new(len.cos(), 0.0) + gen * Complex64::new(0.0, len.sin())
}

pub fn local_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut u = random_qubit_unitary(rng);
    for _ in 1..n {
        u = tensor_product(&u, &random_qubit_unitary(rng));
    }
    u
}

/// `|a⟩_M ⊗ |b⟩_M̄` with the factors placed on the qubits of `side` and
/// its complement, qubit 0 being the most significant bit.
pub fn product_across(n: usize, side: &[usize], a: &PureState, b: &PureState) -> PureState {
    let rest: Vec<usize> = (0..n).filter(|q| !side.contains(q)).collect();
    let sub = |i: usize, qs: &[usize]| {
        qs.iter()
            .fold(0, |acc, &q| acc << 1 | (i >> (n - 1 - q) & 1))
    };
    let amps = (0..1usize << n)
        .map(|i| a.amplitudes()[sub(i, side)] * b.amplitudes()[sub(i, &rest)])
        .collect();
    PureState::from_amplitudes(n, amps).unwrap()
}

/// Convex mixture of `terms` pure states, each a product across a randomly
/// chosen bipartition.
pub fn biseparable_mixture(n: usize, terms: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let d = 1usize << n;
    let mut rho = ComplexMatrix::zeros(d, d);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let side: Vec<usize> = loop {
            let mask = rng.random_range(1..(1usize << n) - 1);
            break (0..n).filter(|q| mask >> q & 1 == 1).collect();
        };
        let a = random_pure(side.len(), rng);
        let b = random_pure(n - side.len(), rng);
        let psi = product_across(n, &side, &a, &b);
        rho += psi.to_density().unwrap() * Complex64::new(w / total, 0.0);
    }
    linalg::hermitian_part(&rho)
}

/// `Σ (K_{i1} ⊗ … ⊗ K_{iN}) ρ (…)†` over all Kraus index tuples.
pub fn global_kraus(rho: &ComplexMatrix, kind: ChannelKind, s: f64, n: usize) -> ComplexMatrix {
    let ops = single_qubit_kraus(kind, s).unwrap().operators;
    let k = ops.len();
    let d = rho.nrows();
    let mut out = ComplexMatrix::zeros(d, d);
    for tuple in 0..k.pow(n as u32) {
        let mut idx = tuple;
        let mut big = ComplexMatrix::identity(1, 1);
        for _ in 0..n {
            big = tensor_product(&big, &ops[idx % k]);
            idx /= k;
        }
        out += &big * rho * big.adjoint();
    }
    out
}

pub const ALL_CHANNELS: [ChannelKind; 3] = [
    ChannelKind::AmplitudeDamping,
    ChannelKind::PhaseDamping,
    ChannelKind::Depolarizing,
];
