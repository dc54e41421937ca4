//! Acceptance checks for `gmn-robustness`.
//!
//! Each check returns an [`Outcome`]. Sweeps and ensembles are computed once
//! and shared between checks. The `acceptance` test target runs every check
//! and prints one line per check.

use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::time::Instant;

use gmn_robustness::analysis::write_csv;
use gmn_robustness::linalg::{self, negativity};
use gmn_robustness::{
    apply_local_channel, build_program, default_grid, derive_seed, evolved_single_qubit_oracle,
    genuine_negativity, haar_random_state, named_state, single_qubit_kraus, summarize_included,
    sweep_many, tensor_product, verify_certificate, ChannelKind, ComplexMatrix, EnsembleSummary,
    Formulation, Generator, GmnOptions, NamedState, PureState, SweepInput, SweepSeries,
};

pub const CHANNELS: [ChannelKind; 3] = [
    ChannelKind::AmplitudeDamping,
    ChannelKind::PhaseDamping,
    ChannelKind::Depolarizing,
];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub key: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:<10} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.key,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    /// Members per 3-qubit ensemble.
    pub ensemble_count: usize,
    /// Members per 4-qubit Haar ensemble used for the ordering checks.
    pub n4_haar_count: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            ensemble_count: 100,
            n4_haar_count: 10,
            seed: 1,
        }
    }
}

impl Config {
    /// Defaults overridden by `GMN_ACCEPTANCE_COUNT`, `GMN_ACCEPTANCE_N4_COUNT`
    /// and `GMN_ACCEPTANCE_SEED`.
    pub fn from_env() -> Result<Self, String> {
        fn var<T: std::str::FromStr>(name: &str, default: T) -> Result<T, String> {
            match std::env::var(name) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| format!("{name}: cannot parse {v:?}")),
                Err(_) => Ok(default),
            }
        }
        let d = Config::default();
        Ok(Self {
            ensemble_count: var("GMN_ACCEPTANCE_COUNT", d.ensemble_count)?,
            n4_haar_count: var("GMN_ACCEPTANCE_N4_COUNT", d.n4_haar_count)?,
            seed: var("GMN_ACCEPTANCE_SEED", d.seed)?,
        })
    }
}

type Check = fn(&Suite) -> Outcome;

/// Every check in run order: key, title, function.
pub const CHECKS: [(&str, &str, Check); 7] = [
    ("golden", "golden values of named states", Suite::golden),
    (
        "bipartite",
        "two-qubit value equals negativity",
        Suite::bipartite,
    ),
    ("channels", "channel evolution", Suite::channels),
    ("dephasing", "GHZ3 under phase damping", Suite::dephasing),
    ("ordering", "robustness ordering", Suite::ordering),
    (
        "ensembles",
        "3-qubit ensembles under amplitude damping",
        Suite::ensembles,
    ),
    ("properties", "property suites", Suite::properties),
];

/// Collects failures; the outcome passes when none were recorded.
struct Problems(Vec<String>);

impl Problems {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn push(&mut self, p: impl Into<String>) {
        self.0.push(p.into());
    }

    fn finish(self, key: &'static str, title: &'static str, ok: String, start: Instant) -> Outcome {
        let passed = self.0.is_empty();
        let detail = if passed {
            ok
        } else {
            let mut shown: Vec<String> = self.0.iter().take(4).cloned().collect();
            if self.0.len() > 4 {
                shown.push(format!("{} more", self.0.len() - 4));
            }
            shown.join("; ")
        };
        Outcome {
            key,
            title,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

type OrderingCase<'a> = (
    ChannelKind,
    usize,
    usize,
    &'a [NamedState],
    &'a [NamedState],
    &'a [NamedState],
    &'a [NamedState],
);

type EnsembleKey = (Generator, usize, ChannelKind, usize);

pub struct Suite {
    config: Config,
    options: GmnOptions,
    named: [OnceCell<Vec<SweepSeries>>; 3],
    ensembles: RefCell<HashMap<EnsembleKey, Result<EnsembleSummary, String>>>,
    /// Largest `E` seen by any check, with its origin.
    largest: RefCell<(f64, String)>,
    solves: RefCell<usize>,
}

fn channel_index(kind: ChannelKind) -> usize {
    CHANNELS.iter().position(|&k| k == kind).unwrap()
}

/// Uniform draw in `[0, 1)` from a seed and a stream index.
fn uniform(seed: u64, index: u64) -> f64 {
    (derive_seed(seed, index) >> 11) as f64 / (1u64 << 53) as f64
}

fn density(s: NamedState) -> ComplexMatrix {
    named_state(s).unwrap().to_density().unwrap()
}

/// Mixture of `rank` Haar-random pure states with random weights.
fn random_density(n: usize, rank: usize, seed: u64) -> ComplexMatrix {
    let d = 1usize << n;
    let mut rho = ComplexMatrix::zeros(d, d);
    let weights: Vec<f64> = (0..rank)
        .map(|i| 0.1 + uniform(seed, 2 * i as u64))
        .collect();
    let total: f64 = weights.iter().sum();
    for (i, w) in weights.iter().enumerate() {
        let psi = haar_random_state(n, derive_seed(seed, 2 * i as u64 + 1)).unwrap();
        rho += psi.to_density().unwrap().scale(w / total);
    }
    linalg::hermitian_part(&rho)
}

/// `|a⟩` on the qubits of `side` times `|b⟩` on the rest, qubit 0 being the
/// most significant bit.
fn product_across(n: usize, side: &[usize], a: &PureState, b: &PureState) -> PureState {
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

/// Random mixture of pure states, each a product across a random bipartition.
fn biseparable_mixture(n: usize, terms: usize, seed: u64) -> ComplexMatrix {
    let d = 1usize << n;
    let mut rho = ComplexMatrix::zeros(d, d);
    let mut total = 0.0;
    for t in 0..terms as u64 {
        let w = 0.1 + uniform(seed, 4 * t);
        let mask = 1 + (derive_seed(seed, 4 * t + 1) % ((1u64 << n) - 2)) as usize;
        let side: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        let a = haar_random_state(side.len(), derive_seed(seed, 4 * t + 2)).unwrap();
        let b = haar_random_state(n - side.len(), derive_seed(seed, 4 * t + 3)).unwrap();
        rho += product_across(n, &side, &a, &b)
            .to_density()
            .unwrap()
            .scale(w);
        total += w;
    }
    linalg::hermitian_part(&rho.unscale(total))
}

/// `Σ (K_{i1} ⊗ … ⊗ K_{iN}) ρ (…)†` over all Kraus index tuples.
fn global_kraus(rho: &ComplexMatrix, kind: ChannelKind, s: f64, n: usize) -> ComplexMatrix {
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

fn sci(v: f64) -> String {
    format!("{v:.1e}")
}

impl Suite {
    pub fn new(config: Config) -> Self {
        Self {
            config,
            options: GmnOptions::default(),
            named: Default::default(),
            ensembles: RefCell::new(HashMap::new()),
            largest: RefCell::new((0.0, String::new())),
            solves: RefCell::new(0),
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    fn note_values(&self, origin: &str, values: &[f64]) {
        *self.solves.borrow_mut() += values.len();
        let mut largest = self.largest.borrow_mut();
        for &v in values {
            if v > largest.0 {
                *largest = (v, origin.to_string());
            }
        }
    }

    /// Sweeps of every named state on the default grid of `kind`.
    fn named(&self, kind: ChannelKind) -> &[SweepSeries] {
        self.named[channel_index(kind)].get_or_init(|| {
            let inputs: Vec<SweepInput> = NamedState::ALL
                .iter()
                .map(|&s| SweepInput::pure(s.selector(), &named_state(s).unwrap()).unwrap())
                .collect();
            let series = sweep_many(&inputs, kind, &default_grid(kind), &self.options)
                .expect("named sweeps run");
            for s in &series {
                self.note_values(&format!("{} {kind}", s.label), &s.values);
            }
            series
        })
    }

    fn named_series(&self, kind: ChannelKind, state: NamedState) -> &SweepSeries {
        let label = state.selector();
        self.named(kind).iter().find(|s| s.label == label).unwrap()
    }

    /// Ensemble on the default grid, with statistics over included members.
    fn ensemble(
        &self,
        generator: Generator,
        n: usize,
        kind: ChannelKind,
        count: usize,
    ) -> Result<EnsembleSummary, String> {
        let key = (generator, n, kind, count);
        if let Some(e) = self.ensembles.borrow().get(&key) {
            return e.clone();
        }
        let members = self.ensemble_members(generator, n, kind, 0..count)?;
        for m in &members {
            self.note_values(&format!("{} {kind}", m.label), &m.values);
        }
        let summary = summarize_included(generator, n, self.config.seed, members)
            .map_err(|e| format!("{} {kind}: {e}", generator.label(n)));
        self.ensembles.borrow_mut().insert(key, summary.clone());
        summary
    }

    fn ensemble_members(
        &self,
        generator: Generator,
        n: usize,
        kind: ChannelKind,
        indices: std::ops::Range<usize>,
    ) -> Result<Vec<SweepSeries>, String> {
        let label = generator.label(n);
        let inputs = indices
            .map(|i| {
                let psi = generator
                    .member(n, self.config.seed, i as u64)
                    .map_err(|e| e.to_string())?;
                SweepInput::pure(format!("{label}#{i}"), &psi).map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, String>>()?;
        sweep_many(&inputs, kind, &default_grid(kind), &self.options).map_err(|e| e.to_string())
    }

    pub fn golden(&self) -> Outcome {
        let start = Instant::now();
        let mut problems = Problems::new();
        let expected = [
            (NamedState::Ghz(2), 0.5, 1e-6),
            (NamedState::Ghz(3), 0.5, 1e-6),
            (NamedState::Ghz(4), 0.5, 1e-6),
            (NamedState::W(3), 0.443, 5e-3),
            (NamedState::W(4), 0.366, 5e-3),
            (NamedState::Dicke24, 0.5, 1e-5),
            (NamedState::Singlet4, 0.5, 1e-5),
            (NamedState::Cluster4, 0.5, 1e-5),
            (NamedState::Chi4, 0.5, 1e-5),
        ];
        let mut values = Vec::new();
        for (state, want, tol) in expected {
            let rho = density(state);
            match genuine_negativity(&rho, state.nqubits(), &self.options) {
                Ok(r) => {
                    if !r.certificate_ok || !verify_certificate(&r, &rho).passed {
                        problems.push(format!("{}: certificate rejected", state.selector()));
                    }
                    if (r.value - want).abs() > tol {
                        problems.push(format!(
                            "{} = {:.9}, want {want}",
                            state.selector(),
                            r.value
                        ));
                    }
                    values.push(format!("{} {:.6}", state.selector(), r.value));
                    self.note_values(&state.selector(), &[r.value]);
                }
                Err(e) => problems.push(format!("{}: {e}", state.selector())),
            }
        }
        problems.finish(CHECKS[0].0, CHECKS[0].1, values.join(", "), start)
    }

    pub fn bipartite(&self) -> Outcome {
        let start = Instant::now();
        let mut problems = Problems::new();
        let mut worst: f64 = 0.0;
        for i in 0..100u64 {
            let seed = derive_seed(0xb1, i);
            // Even indices are pure, odd ones have rank 2 to 4.
            let rank = if i % 2 == 0 {
                1
            } else {
                2 + (i as usize / 2) % 3
            };
            let rho = random_density(2, rank, seed);
            let oracle = negativity(&rho, &[0], 2).unwrap();
            match genuine_negativity(&rho, 2, &self.options) {
                Ok(r) => {
                    self.note_values("random 2-qubit state", &[r.value]);
                    let dev = (r.value - oracle).abs();
                    worst = worst.max(dev);
                    if dev > 1e-6 || !r.certificate_ok {
                        problems.push(format!("state {i}: {} vs negativity {oracle}", r.value));
                    }
                }
                Err(e) => problems.push(format!("state {i}: {e}")),
            }
        }
        problems.finish(
            CHECKS[1].0,
            CHECKS[1].1,
            format!("100 states, max deviation {}", sci(worst)),
            start,
        )
    }

    pub fn channels(&self) -> Outcome {
        let start = Instant::now();
        let mut problems = Problems::new();
        let (mut closed, mut kraus, mut semi) = (0.0f64, 0.0f64, 0.0f64);
        for (c, kind) in CHANNELS.into_iter().enumerate() {
            for i in 0..100u64 {
                let seed = derive_seed(0xc0 + c as u64, i);
                let rho = random_density(1, 1 + (i as usize % 2), seed);
                let s = 3.0 * uniform(seed, 99);
                let got = apply_local_channel(&rho, kind, s, 1).unwrap();
                let want = evolved_single_qubit_oracle(&rho, kind, s).unwrap();
                closed = closed.max(linalg::max_abs_diff(&got, &want));
            }
            for n in 1..=3 {
                for i in 0..10u64 {
                    let seed = derive_seed(0xd0 + 8 * c as u64 + n as u64, i);
                    let rho = random_density(n, 1 + (i as usize % 3), seed);
                    let s = 2.0 * uniform(seed, 99);
                    let local = apply_local_channel(&rho, kind, s, n).unwrap();
                    kraus = kraus.max(linalg::max_abs_diff(
                        &local,
                        &global_kraus(&rho, kind, s, n),
                    ));

                    let s2 = 2.0 * uniform(seed, 98);
                    let once = apply_local_channel(&rho, kind, s + s2, n).unwrap();
                    let twice = apply_local_channel(&local, kind, s2, n).unwrap();
                    semi = semi.max(linalg::max_abs_diff(&once, &twice));
                }
            }
        }
        if closed > 1e-12 {
            problems.push(format!("closed forms off by {}", sci(closed)));
        }
        if kraus > 1e-10 {
            problems.push(format!("global Kraus off by {}", sci(kraus)));
        }
        if semi > 1e-9 {
            problems.push(format!("semigroup off by {}", sci(semi)));
        }
        problems.finish(
            CHECKS[2].0,
            CHECKS[2].1,
            format!(
                "closed forms {}, global Kraus {}, semigroup {}",
                sci(closed),
                sci(kraus),
                sci(semi)
            ),
            start,
        )
    }

    pub fn dephasing(&self) -> Outcome {
        let start = Instant::now();
        let mut problems = Problems::new();
        let series = self.named_series(ChannelKind::PhaseDamping, NamedState::Ghz(3));
        if let Err(e) = series.check() {
            problems.push(e.to_string());
        }
        let (mut dv, mut de) = (0.0f64, 0.0f64);
        for (k, &s) in series.grid.iter().enumerate() {
            let want = 0.5 * (-1.5 * s).exp();
            let v = (series.values[k] - want).abs();
            dv = dv.max(v);
            if v > 1e-4 || v.is_nan() {
                problems.push(format!("E({s}) = {}, want {want}", series.values[k]));
            }
            match series.eta[k] {
                Some(eta) => {
                    de = de.max((eta + 1.5).abs());
                    if (eta + 1.5).abs() > 2e-3 {
                        problems.push(format!("eta({s}) = {eta}"));
                    }
                }
                None => problems.push(format!("eta undefined at s = {s}")),
            }
        }
        problems.finish(
            CHECKS[3].0,
            CHECKS[3].1,
            format!("max |dE| {}, max |eta + 1.5| {}", sci(dv), sci(de)),
            start,
        )
    }

    pub fn ordering(&self) -> Outcome {
        use ChannelKind::*;
        use NamedState::*;
        let start = Instant::now();
        let mut problems = Problems::new();
        let n3 = self.config.ensemble_count;
        let n4 = self.config.n4_haar_count;
        let mut notes = Vec::new();

        // Channel, qubits, Haar members, leaders, the rest, states above the
        // Haar mean and states below it.
        let cases: [OrderingCase; 5] = [
            (
                AmplitudeDamping,
                3,
                n3,
                &[W(3)],
                &[Ghz(3), Ghz3b, W3b],
                &[W(3)],
                &[],
            ),
            (
                AmplitudeDamping,
                4,
                n4,
                &[W(4)],
                &[Ghz(4), Dicke24, Singlet4, Cluster4, Chi4],
                &[W(4)],
                &[],
            ),
            // Phase damping is symmetric under bit flips, so both GHZ forms tie.
            (
                PhaseDamping,
                3,
                n3,
                &[Ghz(3), Ghz3b],
                &[W(3), W3b],
                &[],
                &[W(3)],
            ),
            (
                PhaseDamping,
                4,
                n4,
                &[Ghz(4)],
                &[W(4), Dicke24, Singlet4, Cluster4, Chi4],
                &[],
                &[W(4)],
            ),
            (
                Depolarizing,
                4,
                n4,
                &[Cluster4],
                &[Ghz(4), W(4), Dicke24, Singlet4, Chi4],
                &[Ghz(4), Dicke24, Singlet4, Cluster4, Chi4],
                &[],
            ),
        ];
        for (kind, n, count, leaders, rest, above, below) in cases {
            let tag = format!("{kind} N={n}");
            let haar = match self.ensemble(Generator::HaarRandom, n, kind, count) {
                Ok(h) => h,
                Err(e) => {
                    problems.push(format!("{tag}: {e}"));
                    continue;
                }
            };
            for s in leaders.iter().chain(rest) {
                if let Err(e) = self.named_series(kind, *s).check() {
                    problems.push(e.to_string());
                }
            }
            let eta = |s: NamedState, k: usize| self.named_series(kind, s).eta[k];
            let grid = default_grid(kind);
            let mut bad = 0;
            for k in 1..grid.len() - 1 {
                let at = grid[k];
                let mut fail = |msg: String| {
                    bad += 1;
                    problems.push(format!("{tag} s={at:.2}: {msg}"));
                };
                let best_leader = leaders
                    .iter()
                    .filter_map(|&s| eta(s, k))
                    .fold(f64::NEG_INFINITY, f64::max);
                for &s in rest {
                    match eta(s, k) {
                        Some(e) if e >= best_leader => fail(format!(
                            "{} ({e:.4}) not below {} ({best_leader:.4})",
                            s.selector(),
                            leaders[0].selector()
                        )),
                        _ => {}
                    }
                }
                for &s in above {
                    match eta(s, k) {
                        Some(e) if e > haar.mean_eta[k] => {}
                        e => fail(format!(
                            "{} ({e:?}) not above Haar mean {:.4}",
                            s.selector(),
                            haar.mean_eta[k]
                        )),
                    }
                }
                for &s in below {
                    match eta(s, k) {
                        Some(e) if e >= haar.mean_eta[k] => fail(format!(
                            "{} ({e:.4}) not below Haar mean {:.4}",
                            s.selector(),
                            haar.mean_eta[k]
                        )),
                        _ => {}
                    }
                }
                if !best_leader.is_finite() {
                    fail(format!("{} has no eta", leaders[0].selector()));
                }
            }
            notes.push(format!(
                "{tag}: {} of {} points, {} Haar members ({} excluded)",
                grid.len() - 2 - bad.min(grid.len() - 2),
                grid.len() - 2,
                haar.count,
                haar.excluded
            ));
        }
        problems.finish(CHECKS[4].0, CHECKS[4].1, notes.join(", "), start)
    }

    pub fn ensembles(&self) -> Outcome {
        let start = Instant::now();
        let mut problems = Problems::new();
        let kind = ChannelKind::AmplitudeDamping;
        let count = self.config.ensemble_count;
        let mut notes = Vec::new();
        for generator in [Generator::HaarRandom, Generator::WeightedGraph] {
            let label = generator.label(3);
            let summary = match self.ensemble(generator, 3, kind, count) {
                Ok(s) => s,
                Err(e) => {
                    problems.push(e);
                    continue;
                }
            };
            if summary.excluded >= 5 {
                problems.push(format!(
                    "{label}: {} of {count} members excluded ({:?})",
                    summary.excluded, summary.excluded_members
                ));
            }
            for (k, &s) in summary.grid.iter().enumerate() {
                let (lo, mu, hi) = (summary.ci_low[k], summary.mean_eta[k], summary.ci_high[k]);
                if !(lo <= mu && mu <= hi) {
                    problems.push(format!("{label} s={s}: band {lo} {mu} {hi}"));
                }
            }
            // Recompute a prefix of the members and compare the CSV bytes.
            let again = count.min(10);
            match self.ensemble_members(generator, 3, kind, 0..again) {
                Ok(fresh) => {
                    if write_csv(&fresh, &[], false)
                        != write_csv(&summary.members[..again], &[], false)
                    {
                        problems.push(format!("{label}: recomputed members differ"));
                    }
                }
                Err(e) => problems.push(e),
            }
            notes.push(format!("{label} {} excluded", summary.excluded));
        }
        problems.finish(CHECKS[5].0, CHECKS[5].1, notes.join(", "), start)
    }

    pub fn properties(&self) -> Outcome {
        let start = Instant::now();
        let mut problems = Problems::new();

        // Monotone decay of every named state under every channel.
        for kind in CHANNELS {
            for series in self.named(kind) {
                if let Err(e) = series.check() {
                    problems.push(format!("{kind}: {e}"));
                }
                for k in 1..series.values.len() {
                    let (a, b) = (series.values[k - 1], series.values[k]);
                    if !(b <= a + 1e-7) {
                        problems.push(format!(
                            "{} {kind} rises at s={}: {a} -> {b}",
                            series.label, series.grid[k]
                        ));
                    }
                }
            }
        }

        // Biseparable mixtures score zero.
        let mut bisep: f64 = 0.0;
        for i in 0..50u64 {
            let n = if i < 40 { 3 } else { 4 };
            let rho = biseparable_mixture(n, 2 + i as usize % 4, derive_seed(0xb5, i));
            match genuine_negativity(&rho, n, &self.options) {
                Ok(r) => {
                    self.note_values("biseparable mixture", &[r.value]);
                    bisep = bisep.max(r.value);
                    if r.value > 1e-6 {
                        problems.push(format!("biseparable mixture {i}: E = {}", r.value));
                    }
                    if !r.certificate_ok || !verify_certificate(&r, &rho).passed {
                        problems.push(format!("biseparable mixture {i}: certificate rejected"));
                    }
                }
                Err(e) => problems.push(format!("biseparable mixture {i}: {e}")),
            }
        }

        // Solver bounds on the witness programs of noisy named states.
        let mut programs = 0;
        let mut worst_comp: f64 = 0.0;
        for kind in CHANNELS {
            for state in NamedState::ALL {
                let n = state.nqubits();
                let rho = apply_local_channel(&density(state), kind, 0.3, n).unwrap();
                let tag = format!("{} {kind} s=0.3", state.selector());
                let prog = build_program(&rho, n, Formulation::Standard, true).unwrap();
                let opts = densesdp::SolverOptions {
                    record_trace: true,
                    ..self.options.solver.clone()
                };
                let sol = match densesdp::solve(prog.problem(), &opts) {
                    Ok(sol) => sol,
                    Err(e) => {
                        problems.push(format!("{tag}: {e}"));
                        continue;
                    }
                };
                programs += 1;
                if sol.status != densesdp::SdpStatus::Optimal {
                    problems.push(format!("{tag}: {:?}", sol.status));
                    continue;
                }
                let blocks = prog.problem().block_dims().len() as f64;
                let comp = sol.complementarity().abs();
                worst_comp = worst_comp.max(comp / blocks);
                if comp > 1e-7 * blocks {
                    problems.push(format!("{tag}: complementarity {}", sci(comp)));
                }
                let tol = opts.feasibility_tol;
                for r in sol
                    .trace
                    .iter()
                    .filter(|r| r.primal_residual <= tol && r.dual_residual <= tol)
                {
                    if r.dual_objective > r.primal_objective + 1e-7 {
                        problems.push(format!(
                            "{tag}: weak duality fails at iteration {}",
                            r.iteration
                        ));
                    }
                }
            }
        }

        // Certificates on every sweep computed by this run.
        let mut flagged = 0;
        for kind in CHANNELS {
            if let Some(series) = self.named[channel_index(kind)].get() {
                flagged += series.iter().map(|s| s.flagged.len()).sum::<usize>();
            }
        }
        for summary in self.ensembles.borrow().values().flatten() {
            flagged += summary
                .members
                .iter()
                .map(|m| m.flagged.len())
                .sum::<usize>();
        }
        if flagged > 0 {
            problems.push(format!(
                "{flagged} sweep points without a verified certificate"
            ));
        }

        let (largest, origin) = self.largest.borrow().clone();
        if largest > 0.5 + 1e-7 {
            problems.push(format!("E = {largest} for {origin}"));
        }
        let solves = *self.solves.borrow();
        problems.finish(
            CHECKS[6].0,
            CHECKS[6].1,
            format!(
                "{solves} solves with max E {largest:.9}, biseparable max {}, \
                 {programs} programs with complementarity per block {}",
                sci(bisep),
                sci(worst_comp)
            ),
            start,
        )
    }
}
