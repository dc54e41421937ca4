//! Named states, Haar-random states, weighted graph states, and the plain
//! text state-file format.
//!
//! Random generators take a 64-bit seed and are fully determined by it. The
//! stream comes from `ChaCha20Rng::seed_from_u64`; normal deviates use the
//! Box-Muller transform on consecutive uniforms.

use std::f64::consts::{PI, TAU};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, PureState, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedState {
    Ghz(usize),
    W(usize),
    /// `(|001⟩ + |110⟩)/√2`.
    Ghz3b,
    /// `(|110⟩ + |101⟩ + |011⟩)/√3`.
    W3b,
    Dicke24,
    Singlet4,
    Cluster4,
    Chi4,
}

impl NamedState {
    pub const ALL: [NamedState; 12] = [
        NamedState::Ghz(2),
        NamedState::Ghz(3),
        NamedState::Ghz(4),
        NamedState::Ghz3b,
        NamedState::W(2),
        NamedState::W(3),
        NamedState::W(4),
        NamedState::W3b,
        NamedState::Dicke24,
        NamedState::Singlet4,
        NamedState::Cluster4,
        NamedState::Chi4,
    ];

    pub fn nqubits(self) -> usize {
        match self {
            NamedState::Ghz(n) | NamedState::W(n) => n,
            NamedState::Ghz3b | NamedState::W3b => 3,
            _ => 4,
        }
    }

    pub fn selector(self) -> String {
        match self {
            NamedState::Ghz(n) => format!("ghz{n}"),
            NamedState::W(n) => format!("w{n}"),
            NamedState::Ghz3b => "ghz3b".into(),
            NamedState::W3b => "w3b".into(),
            NamedState::Dicke24 => "d24".into(),
            NamedState::Singlet4 => "singlet4".into(),
            NamedState::Cluster4 => "cluster4".into(),
            NamedState::Chi4 => "chi4".into(),
        }
    }
}

impl fmt::Display for NamedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.selector())
    }
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let state = match s.to_ascii_lowercase().as_str() {
            "ghz2" => NamedState::Ghz(2),
            "ghz3" => NamedState::Ghz(3),
            "ghz4" => NamedState::Ghz(4),
            "ghz3b" => NamedState::Ghz3b,
            "w2" => NamedState::W(2),
            "w3" => NamedState::W(3),
            "w4" => NamedState::W(4),
            "w3b" => NamedState::W3b,
            "d24" => NamedState::Dicke24,
            "singlet4" => NamedState::Singlet4,
            "cluster4" | "cl" => NamedState::Cluster4,
            "chi4" => NamedState::Chi4,
            other => {
                return Err(Error::UnsupportedState(format!(
                    "unknown state name '{other}'"
                )))
            }
        };
        Ok(state)
    }
}

fn basis_index(bits: &str) -> usize {
    usize::from_str_radix(bits, 2).expect("basis label")
}

fn superposition(n: usize, terms: &[(&str, f64)]) -> Vec<Complex64> {
    let mut amps = vec![ZERO; 1 << n];
    for &(bits, w) in terms {
        debug_assert_eq!(bits.len(), n);
        amps[basis_index(bits)] += Complex64::new(w, 0.0);
    }
    amps
}

pub fn named_state(which: NamedState) -> Result<PureState> {
    let n = which.nqubits();
    let amps = match which {
        NamedState::Ghz(n) | NamedState::W(n) if !(2..=4).contains(&n) => {
            return Err(Error::UnsupportedState(format!(
                "{} is defined for 2 to 4 qubits",
                which
            )));
        }
        NamedState::Ghz(n) => {
            let mut a = vec![ZERO; 1 << n];
            a[0] = Complex64::new(1.0, 0.0);
            a[(1 << n) - 1] = Complex64::new(1.0, 0.0);
            a
        }
        NamedState::W(n) => {
            let mut a = vec![ZERO; 1 << n];
            for k in 0..n {
                a[1 << k] = Complex64::new(1.0, 0.0);
            }
            a
        }
        NamedState::Ghz3b => superposition(3, &[("001", 1.0), ("110", 1.0)]),
        NamedState::W3b => superposition(3, &[("110", 1.0), ("101", 1.0), ("011", 1.0)]),
        NamedState::Dicke24 => superposition(
            4,
            &[
                ("0011", 1.0),
                ("0101", 1.0),
                ("0110", 1.0),
                ("1001", 1.0),
                ("1010", 1.0),
                ("1100", 1.0),
            ],
        ),
        NamedState::Singlet4 => superposition(
            4,
            &[
                ("0011", 1.0),
                ("1100", 1.0),
                ("0101", -0.5),
                ("0110", -0.5),
                ("1001", -0.5),
                ("1010", -0.5),
            ],
        ),
        NamedState::Cluster4 => superposition(
            4,
            &[("0000", 1.0), ("0011", 1.0), ("1100", 1.0), ("1111", -1.0)],
        ),
        NamedState::Chi4 => superposition(
            4,
            &[
                ("1111", 2f64.sqrt()),
                ("0001", 1.0),
                ("0010", 1.0),
                ("0100", 1.0),
                ("1000", 1.0),
            ],
        ),
    };
    PureState::normalized(n, amps)
}

fn check_generator_size(nqubits: usize) -> Result<()> {
    if !(1..=10).contains(&nqubits) {
        return Err(Error::UnsupportedState(format!(
            "random states need 1 to 10 qubits, got {nqubits}"
        )));
    }
    Ok(())
}

/// Seed for the `index`-th member of an ensemble seeded with `seed`
/// (SplitMix64 finalizer over the pair).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn standard_normal_pair(rng: &mut ChaCha20Rng) -> (f64, f64) {
    // 1 - u lies in (0, 1], keeping the logarithm finite.
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Uniformly distributed pure state on `nqubits` qubits.
pub fn haar_random_state(nqubits: usize, seed: u64) -> Result<PureState> {
    check_generator_size(nqubits)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let amps = (0..1usize << nqubits)
        .map(|_| {
            let (re, im) = standard_normal_pair(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    PureState::normalized(nqubits, amps)
}

/// Interaction phases for every qubit pair `k < l`, in the order
/// `(0,1), (0,2), …, (1,2), …`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    nqubits: usize,
    phases: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(nqubits: usize, phases: Vec<f64>) -> Result<Self> {
        check_generator_size(nqubits)?;
        let want = nqubits * (nqubits - 1) / 2;
        if phases.len() != want {
            return Err(Error::Dimension(format!(
                "{} phases given, {nqubits} qubits need {want}",
                phases.len()
            )));
        }
        if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::Argument(format!("non-finite phase {p}")));
        }
        Ok(Self { nqubits, phases })
    }

    /// Unweighted graph: phase π on every listed edge, zero elsewhere.
    pub fn from_edges(nqubits: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(nqubits, vec![0.0; nqubits * nqubits.saturating_sub(1) / 2])?;
        for &(k, l) in edges {
            let (k, l) = (k.min(l), k.max(l));
            if l >= nqubits || k == l {
                return Err(Error::Argument(format!("invalid edge ({k}, {l})")));
            }
            let idx = g.pair_index(k, l);
            g.phases[idx] = PI;
        }
        Ok(g)
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    fn pair_index(&self, k: usize, l: usize) -> usize {
        let n = self.nqubits;
        k * (2 * n - k - 1) / 2 + (l - k - 1)
    }

    pub fn phase(&self, k: usize, l: usize) -> f64 {
        let (k, l) = (k.min(l), k.max(l));
        self.phases[self.pair_index(k, l)]
    }
}

pub fn random_weighted_graph(nqubits: usize, seed: u64) -> Result<WeightedGraph> {
    check_generator_size(nqubits)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let count = nqubits * (nqubits - 1) / 2;
    let phases = (0..count).map(|_| TAU * rng.random::<f64>()).collect();
    WeightedGraph::new(nqubits, phases)
}

pub fn weighted_graph_state(g: &WeightedGraph) -> Result<PureState> {
    let n = g.nqubits;
    let norm = (1u64 << n) as f64;
    let amp = norm.sqrt().recip();
    let amps = (0..1usize << n)
        .map(|x| {
            let bit = |k: usize| (x >> (n - 1 - k)) & 1 == 1;
            let mut phase = 0.0;
            for k in 0..n {
                for l in k + 1..n {
                    if bit(k) && bit(l) {
                        phase += g.phase(k, l);
                    }
                }
            }
            Complex64::from_polar(amp, -phase)
        })
        .collect();
    PureState::from_amplitudes(n, amps)
}

pub fn to_density(psi: &PureState) -> Result<ComplexMatrix> {
    psi.to_density()
}

/// Contents of a state file.
#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Pure(PureState),
    Mixed(ComplexMatrix),
}

impl StateData {
    pub fn nqubits(&self) -> usize {
        match self {
            StateData::Pure(p) => p.nqubits(),
            StateData::Mixed(m) => m.nrows().trailing_zeros() as usize,
        }
    }

    pub fn density(&self) -> Result<ComplexMatrix> {
        match self {
            StateData::Pure(p) => p.to_density(),
            StateData::Mixed(m) => Ok(m.clone()),
        }
    }
}

/// Renders a state in the file format read by [`parse_state`]. Numbers use
/// Rust's shortest round-trip exponent form, so parsing returns the same bits.
pub fn format_state(state: &StateData) -> String {
    let mut out = String::new();
    match state {
        StateData::Pure(p) => {
            let _ = writeln!(out, "pure {}", p.nqubits());
            for z in p.amplitudes().iter() {
                let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
            }
        }
        StateData::Mixed(m) => {
            let _ = writeln!(out, "mixed {}", m.nrows().trailing_zeros());
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols())
                    .map(|c| format!("{:e},{:e}", m[(r, c)].re, m[(r, c)].im))
                    .collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
    }
    out
}

struct Token<'a> {
    line: usize,
    column: usize,
    text: &'a str,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_number(tok: &Token<'_>, text: &str, offset: usize) -> Result<f64> {
    let v: f64 = text.parse().map_err(|_| {
        parse_err(
            tok.line,
            tok.column + offset,
            format!("invalid number '{text}'"),
        )
    })?;
    if !v.is_finite() {
        return Err(parse_err(
            tok.line,
            tok.column + offset,
            format!("non-finite number '{text}'"),
        ));
    }
    Ok(v)
}

/// Content lines split into tokens, with `#` comments and blank lines removed.
fn tokenize(src: &str) -> Vec<(usize, Vec<Token<'_>>)> {
    let mut lines = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = Vec::new();
        let mut start = None;
        for (pos, ch) in content
            .char_indices()
            .chain(std::iter::once((content.len(), ' ')))
        {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(pos),
                (true, Some(s)) => {
                    toks.push(Token {
                        line: i + 1,
                        column: s + 1,
                        text: &content[s..pos],
                    });
                    start = None;
                }
                _ => {}
            }
        }
        if !toks.is_empty() {
            lines.push((i + 1, toks));
        }
    }
    lines
}

pub fn parse_state(src: &str) -> Result<StateData> {
    let lines = tokenize(src);
    let Some((hline, header)) = lines.first() else {
        return Err(parse_err(1, 1, "empty state file"));
    };
    if header.len() != 2 {
        return Err(parse_err(
            *hline,
            1,
            "header must be 'pure <N>' or 'mixed <N>'",
        ));
    }
    let n: usize = header[1]
        .text
        .parse()
        .ok()
        .filter(|n| (1..=10).contains(n))
        .ok_or_else(|| {
            parse_err(
                *hline,
                header[1].column,
                format!("invalid qubit count '{}'", header[1].text),
            )
        })?;
    if !matches!(header[0].text, "pure" | "mixed") {
        return Err(parse_err(
            *hline,
            header[0].column,
            format!("unknown state kind '{}'", header[0].text),
        ));
    }
    let d = 1usize << n;
    let body = &lines[1..];
    let last_line = lines.last().map(|l| l.0).unwrap_or(1);
    if body.len() < d {
        return Err(parse_err(
            last_line + 1,
            1,
            format!("expected {d} rows, found {}", body.len()),
        ));
    }
    if body.len() > d {
        return Err(parse_err(
            body[d].0,
            1,
            format!("expected {d} rows, found more"),
        ));
    }
    match header[0].text {
        "pure" => {
            let mut amps = Vec::with_capacity(d);
            for (line, toks) in body {
                if toks.len() != 2 {
                    let col = toks
                        .get(2)
                        .map_or(toks.last().map_or(1, |t| t.column + t.text.len()), |t| {
                            t.column
                        });
                    return Err(parse_err(
                        *line,
                        col,
                        format!("expected 're im', found {} fields", toks.len()),
                    ));
                }
                let re = parse_number(&toks[0], toks[0].text, 0)?;
                let im = parse_number(&toks[1], toks[1].text, 0)?;
                amps.push(Complex64::new(re, im));
            }
            let psi = PureState::from_amplitudes(n, amps)?;
            let n2 = psi.norm_sqr();
            if (n2 - 1.0).abs() > 1e-9 {
                return Err(Error::NotNormalized(n2));
            }
            Ok(StateData::Pure(psi))
        }
        "mixed" => {
            let mut m = ComplexMatrix::zeros(d, d);
            for (r, (line, toks)) in body.iter().enumerate() {
                if toks.len() != d {
                    let col = toks
                        .get(d)
                        .map_or(toks.last().map_or(1, |t| t.column + t.text.len()), |t| {
                            t.column
                        });
                    return Err(parse_err(
                        *line,
                        col,
                        format!("expected {d} 're,im' entries, found {}", toks.len()),
                    ));
                }
                for (c, tok) in toks.iter().enumerate() {
                    let Some((re, im)) = tok.text.split_once(',') else {
                        return Err(parse_err(
                            tok.line,
                            tok.column,
                            format!("expected 're,im', found '{}'", tok.text),
                        ));
                    };
                    m[(r, c)] = Complex64::new(
                        parse_number(tok, re, 0)?,
                        parse_number(tok, im, re.len() + 1)?,
                    );
                }
            }
            crate::channels::validate_density(&m)?;
            Ok(StateData::Mixed(m))
        }
        _ => unreachable!("state kind checked above"),
    }
}

pub fn read_state_file(path: &std::path::Path) -> Result<StateData> {
    parse_state(&std::fs::read_to_string(path)?)
}

/// Density matrix of a mixture `Σ p_i |ψ_i⟩⟨ψ_i|`.
pub fn mixture(weights: &[f64], states: &[PureState]) -> Result<ComplexMatrix> {
    let first = states
        .first()
        .ok_or_else(|| Error::Argument("empty mixture".into()))?;
    let d = linalg::dim_for(first.nqubits());
    let mut rho = ComplexMatrix::zeros(d, d);
    for (w, psi) in weights.iter().zip(states) {
        if psi.nqubits() != first.nqubits() {
            return Err(Error::Dimension(
                "mixture of states on different qubit counts".into(),
            ));
        }
        rho += psi.to_density()?.scale(*w);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(psi: &PureState, bits: &str) -> Complex64 {
        psi.amplitudes()[basis_index(bits)]
    }

    #[test]
    fn dicke_amplitudes() {
        let psi = named_state(NamedState::Dicke24).unwrap();
        let w = 1.0 / 6f64.sqrt();
        for i in 0..16usize {
            let want = if i.count_ones() == 2 { w } else { 0.0 };
            assert!((psi.amplitudes()[i].re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn ghz_and_variants() {
        let psi = named_state(NamedState::Ghz(3)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((amp(&psi, "000").re - s).abs() < 1e-15 && (amp(&psi, "111").re - s).abs() < 1e-15);
        let b = named_state(NamedState::Ghz3b).unwrap();
        assert!((amp(&b, "001").re - s).abs() < 1e-15 && (amp(&b, "110").re - s).abs() < 1e-15);
        let w = named_state(NamedState::W3b).unwrap();
        assert!((amp(&w, "011").re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let chi = named_state(NamedState::Chi4).unwrap();
        assert!((amp(&chi, "1111").re - (2.0 / 6f64).sqrt()).abs() < 1e-15);
        let singlet = named_state(NamedState::Singlet4).unwrap();
        assert!((amp(&singlet, "1010").re + 0.5 / 3f64.sqrt()).abs() < 1e-15);
        let rho = named_state(NamedState::Ghz(3))
            .unwrap()
            .to_density()
            .unwrap();
        assert_eq!(rho.iter().filter(|z| (z.re - 0.5).abs() < 1e-15).count(), 4);
        assert!(named_state(NamedState::Ghz(5)).is_err());
    }

    #[test]
    fn all_named_states_are_normalized_and_parse() {
        for s in NamedState::ALL {
            let psi = named_state(s).unwrap();
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
            assert_eq!(s.selector().parse::<NamedState>().unwrap(), s);
        }
        assert!("ghz9".parse::<NamedState>().is_err());
    }

    #[test]
    fn haar_determinism_and_norm() {
        let a = haar_random_state(3, 7).unwrap();
        assert_eq!(a, haar_random_state(3, 7).unwrap());
        assert_ne!(a, haar_random_state(3, 8).unwrap());
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graph_state_cases() {
        let zero = WeightedGraph::new(3, vec![0.0; 3]).unwrap();
        let plus = weighted_graph_state(&zero).unwrap();
        assert!(plus
            .amplitudes()
            .iter()
            .all(|z| (z - Complex64::new(8f64.sqrt().recip(), 0.0)).norm() < 1e-15));
        let pair = WeightedGraph::new(2, vec![PI]).unwrap();
        let psi = weighted_graph_state(&pair).unwrap();
        let want = [0.5, 0.5, 0.5, -0.5];
        for (z, w) in psi.amplitudes().iter().zip(want) {
            assert!((z - Complex64::new(w, 0.0)).norm() < 1e-15);
        }
        assert_eq!(random_weighted_graph(3, 1).unwrap().phases().len(), 3);
        assert_eq!(random_weighted_graph(4, 1).unwrap().phases().len(), 6);
        assert_eq!(
            random_weighted_graph(4, 9).unwrap(),
            random_weighted_graph(4, 9).unwrap()
        );
        assert!(WeightedGraph::new(3, vec![0.0; 2]).is_err());
    }

    #[test]
    fn pair_index_order() {
        let g = WeightedGraph::new(4, (0..6).map(f64::from).collect()).unwrap();
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (i, (k, l)) in pairs.into_iter().enumerate() {
            assert_eq!(g.phase(k, l), i as f64);
            assert_eq!(g.phase(l, k), i as f64);
        }
    }

    #[test]
    fn derive_seed_spreads() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn state_file_round_trip() {
        let pure = StateData::Pure(haar_random_state(2, 3).unwrap());
        assert_eq!(parse_state(&format_state(&pure)).unwrap(), pure);
        let rho = mixture(
            &[0.25, 0.75],
            &[
                haar_random_state(2, 1).unwrap(),
                haar_random_state(2, 2).unwrap(),
            ],
        )
        .unwrap();
        let mixed = StateData::Mixed(rho);
        assert_eq!(parse_state(&format_state(&mixed)).unwrap(), mixed);
    }

    #[test]
    fn state_file_comments_and_errors() {
        let src = "# a qubit\npure 1  # header\n\n1 0\n0 0 # |0>\n";
        let StateData::Pure(p) = parse_state(src).unwrap() else {
            panic!("expected pure")
        };
        assert_eq!(p.amplitudes()[0], Complex64::new(1.0, 0.0));

        let bad = "pure 1\n1 0\n0 x\n";
        match parse_state(bad) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
        let mixed_bad = "mixed 1\n1,0 0,0\n0,0 0;0\n";
        match parse_state(mixed_bad) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 5)),
            other => panic!("unexpected {other:?}"),
        }
        let mixed_im = "mixed 1\n1,0 0,0\n0,0 0,zz\n";
        match parse_state(mixed_im) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 7)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_state("pure 1\n1 0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_state("pure 1\n1 0\n1 0\n"),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            parse_state("blob 1\n"),
            Err(Error::Parse {
                line: 1,
                column: 1,
                ..
            })
        ));
        assert!(matches!(parse_state(""), Err(Error::Parse { .. })));
    }
}
