//! Time sweeps of `E` under local noise, the logarithmic derivative
//! `η(s) = d ln E / ds`, ensemble statistics and robustness rankings.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::channels::{apply_local_channel, validate_density, ChannelKind};
use crate::error::{Error, Result};
use crate::gmn::{genuine_negativity, GmnOptions};
use crate::linalg::{ComplexMatrix, PureState};
use crate::states::{derive_seed, haar_random_state, random_weighted_graph, weighted_graph_state};

/// Values below this are treated as vanished when computing `η`.
pub const EPS_FLOOR: f64 = 1e-5;
/// Ensemble members whose `E` drops below this anywhere are excluded.
pub const EPS_LIFE: f64 = 1e-4;
/// Number of points of the default grids.
pub const DEFAULT_STEPS: usize = 50;
pub const DEFAULT_SMIN: f64 = 0.02;

const UNIFORM_TOL: f64 = 1e-9;

/// Largest `s` of the default grid for a channel.
pub fn default_smax(kind: ChannelKind) -> f64 {
    match kind {
        ChannelKind::AmplitudeDamping | ChannelKind::PhaseDamping => 1.0,
        ChannelKind::Depolarizing => 0.5,
    }
}

/// `steps` uniformly spaced points from `smin` to `smax` inclusive.
pub fn uniform_grid(smin: f64, smax: f64, steps: usize) -> Result<Vec<f64>> {
    if !(smin.is_finite() && smax.is_finite()) || smin < 0.0 {
        return Err(Error::Grid(format!(
            "bounds must be finite and nonnegative, got [{smin}, {smax}]"
        )));
    }
    if !(smin < smax) {
        return Err(Error::Grid(format!(
            "smin {smin} must be below smax {smax}"
        )));
    }
    if steps < 3 {
        return Err(Error::Grid(format!("need at least 3 points, got {steps}")));
    }
    let h = (smax - smin) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| {
            if k + 1 == steps {
                smax
            } else {
                smin + h * k as f64
            }
        })
        .collect())
}

pub fn default_grid(kind: ChannelKind) -> Vec<f64> {
    uniform_grid(DEFAULT_SMIN, default_smax(kind), DEFAULT_STEPS).expect("default grid is valid")
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Grid(
            "grid points must be finite and nonnegative".into(),
        ));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::Grid(format!(
            "grid is not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::Argument(format!(
            "need at least 3 grid points, got {}",
            grid.len()
        )));
    }
    check_grid(grid)?;
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > UNIFORM_TOL * (1.0 + h) {
            return Err(Error::Grid(format!(
                "grid spacing is not uniform near s = {}",
                w[0]
            )));
        }
    }
    Ok(h)
}

/// `d ln v / ds` by central differences inside and second-order one-sided
/// differences at the ends. Points whose stencil touches a value below
/// `floor` (or a NaN) are `None`.
pub fn log_derivative(grid: &[f64], values: &[f64], floor: f64) -> Result<Vec<Option<f64>>> {
    if grid.len() != values.len() {
        return Err(Error::Argument(format!(
            "{} grid points but {} values",
            grid.len(),
            values.len()
        )));
    }
    let h = uniform_spacing(grid)?;
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(Error::Argument(format!(
            "negative value {v} has no logarithm"
        )));
    }
    let ln = |k: usize| -> Option<f64> { (values[k] >= floor).then(|| values[k].ln()) };
    let n = values.len();
    let eta = (0..n)
        .map(|k| {
            ln(k)?;
            if k == 0 {
                Some((-3.0 * ln(0)? + 4.0 * ln(1)? - ln(2)?) / (2.0 * h))
            } else if k == n - 1 {
                Some((3.0 * ln(k)? - 4.0 * ln(k - 1)? + ln(k - 2)?) / (2.0 * h))
            } else {
                Some((ln(k + 1)? - ln(k - 1)?) / (2.0 * h))
            }
        })
        .collect();
    Ok(eta)
}

/// A grid point where the backward and forward differences of `ln E`
/// disagree by more than `10 h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kink {
    pub index: usize,
    pub s: f64,
    pub backward: f64,
    pub forward: f64,
}

pub fn kinks(grid: &[f64], values: &[f64], floor: f64) -> Result<Vec<Kink>> {
    let h = uniform_spacing(grid)?;
    let mut out = Vec::new();
    for k in 1..values.len() - 1 {
        let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
        if !(a >= floor && b >= floor && c >= floor) {
            continue;
        }
        let backward = (b.ln() - a.ln()) / h;
        let forward = (c.ln() - b.ln()) / h;
        if (forward - backward).abs() > 10.0 * h {
            out.push(Kink {
                index: k,
                s: grid[k],
                backward,
                forward,
            });
        }
    }
    Ok(out)
}

/// A grid point that did not yield a trustworthy value.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedPoint {
    pub index: usize,
    pub s: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SweepSeries {
    pub label: String,
    pub channel: ChannelKind,
    pub grid: Vec<f64>,
    /// `E(s_k)`; NaN exactly where the solver failed.
    pub values: Vec<f64>,
    pub eta: Vec<Option<f64>>,
    pub kinks: Vec<Kink>,
    pub flagged: Vec<FlaggedPoint>,
}

impl SweepSeries {
    /// First solver failure, as an error naming its `s`.
    pub fn check(&self) -> Result<()> {
        match self.flagged.first() {
            None => Ok(()),
            Some(f) => Err(Error::Argument(format!(
                "{} at s = {}: {}",
                self.label, f.s, f.reason
            ))),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One sweep input: a label, the initial state and its qubit count.
#[derive(Debug, Clone)]
pub struct SweepInput {
    pub label: String,
    pub rho0: ComplexMatrix,
    pub nqubits: usize,
}

impl SweepInput {
    pub fn new(label: impl Into<String>, rho0: ComplexMatrix, nqubits: usize) -> Self {
        Self {
            label: label.into(),
            rho0,
            nqubits,
        }
    }

    pub fn pure(label: impl Into<String>, psi: &PureState) -> Result<Self> {
        Ok(Self::new(label, psi.to_density()?, psi.nqubits()))
    }
}

pub fn sweep(
    rho0: &ComplexMatrix,
    kind: ChannelKind,
    grid: &[f64],
    nqubits: usize,
    options: &GmnOptions,
) -> Result<SweepSeries> {
    let input = SweepInput::new("state", rho0.clone(), nqubits);
    Ok(sweep_many(std::slice::from_ref(&input), kind, grid, options)?.remove(0))
}

/// Sweeps several states over one grid, spreading all `(state, s)` pairs
/// over the rayon pool. Output order follows `inputs`.
pub fn sweep_many(
    inputs: &[SweepInput],
    kind: ChannelKind,
    grid: &[f64],
    options: &GmnOptions,
) -> Result<Vec<SweepSeries>> {
    uniform_spacing(grid)?;
    for input in inputs {
        let n = validate_density(&input.rho0)?;
        if n != input.nqubits {
            return Err(Error::Dimension(format!(
                "{}: {n}-qubit matrix, expected {} qubits",
                input.label, input.nqubits
            )));
        }
    }
    let m = grid.len();
    let evaluated: Vec<std::result::Result<(f64, Option<String>), String>> = (0..inputs.len() * m)
        .into_par_iter()
        .map(|job| {
            let (input, s) = (&inputs[job / m], grid[job % m]);
            let rho = apply_local_channel(&input.rho0, kind, s, input.nqubits)
                .map_err(|e| e.to_string())?;
            let r = genuine_negativity(&rho, input.nqubits, options).map_err(|e| e.to_string())?;
            let note = (!r.certificate_ok)
                .then(|| format!("certificate failed: {}", r.diagnostics.join("; ")));
            Ok((r.value, note))
        })
        .collect();

    inputs
        .iter()
        .zip(evaluated.chunks(m))
        .map(|(input, chunk)| {
            let mut values = Vec::with_capacity(m);
            let mut flagged = Vec::new();
            for (k, res) in chunk.iter().enumerate() {
                match res {
                    Ok((v, note)) => {
                        values.push(*v);
                        if let Some(reason) = note {
                            flagged.push(FlaggedPoint {
                                index: k,
                                s: grid[k],
                                reason: reason.clone(),
                            });
                        }
                    }
                    Err(reason) => {
                        values.push(f64::NAN);
                        flagged.push(FlaggedPoint {
                            index: k,
                            s: grid[k],
                            reason: reason.clone(),
                        });
                    }
                }
            }
            Ok(SweepSeries {
                label: input.label.clone(),
                channel: kind,
                grid: grid.to_vec(),
                eta: log_derivative(grid, &values, EPS_FLOOR)?,
                kinks: kinks(grid, &values, EPS_FLOOR)?,
                values,
                flagged,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    HaarRandom,
    WeightedGraph,
}

impl Generator {
    pub fn short_name(self) -> &'static str {
        match self {
            Generator::HaarRandom => "haar",
            Generator::WeightedGraph => "wgs",
        }
    }

    /// Member `index` of the ensemble seeded by `seed`.
    pub fn member(self, nqubits: usize, seed: u64, index: u64) -> Result<PureState> {
        let s = derive_seed(seed, index);
        match self {
            Generator::HaarRandom => haar_random_state(nqubits, s),
            Generator::WeightedGraph => weighted_graph_state(&random_weighted_graph(nqubits, s)?),
        }
    }

    pub fn label(self, nqubits: usize) -> String {
        format!("{}:{nqubits}", self.short_name())
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub generator: Generator,
    pub nqubits: usize,
    pub channel: ChannelKind,
    pub seed: u64,
    pub count: usize,
    pub grid: Vec<f64>,
    /// Mean `E` over included members.
    pub mean_value: Vec<f64>,
    pub mean_eta: Vec<f64>,
    /// Population variance of `η` over included members.
    pub variance_eta: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub excluded: usize,
    pub excluded_members: Vec<usize>,
    /// Every member's sweep, labelled `<generator>:<N>#<index>`.
    pub members: Vec<SweepSeries>,
}

impl EnsembleSummary {
    pub fn label(&self) -> String {
        self.generator.label(self.nqubits)
    }
}

pub fn ensemble_study(
    generator: Generator,
    nqubits: usize,
    count: usize,
    kind: ChannelKind,
    grid: &[f64],
    seed: u64,
    options: &GmnOptions,
) -> Result<EnsembleSummary> {
    if count < 2 {
        return Err(Error::Argument(format!(
            "ensemble needs at least 2 members, got {count}"
        )));
    }
    let label = generator.label(nqubits);
    let inputs = (0..count)
        .map(|i| {
            SweepInput::pure(
                format!("{label}#{i}"),
                &generator.member(nqubits, seed, i as u64)?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let members = sweep_many(&inputs, kind, grid, options)?;
    summarize(generator, nqubits, seed, members)
}

/// Statistics of `η` over member sweeps sharing one grid and channel.
/// Fails with [`Error::TooManyExclusions`] once 5% or more of the members
/// are excluded.
pub fn summarize(
    generator: Generator,
    nqubits: usize,
    seed: u64,
    members: Vec<SweepSeries>,
) -> Result<EnsembleSummary> {
    let summary = summarize_included(generator, nqubits, seed, members)?;
    if summary.excluded * 20 >= summary.count {
        return Err(Error::TooManyExclusions {
            excluded: summary.excluded,
            count: summary.count,
        });
    }
    Ok(summary)
}

/// [`summarize`] without the limit on exclusions: statistics run over
/// whichever members stay above [`EPS_LIFE`]; at least two must remain.
pub fn summarize_included(
    generator: Generator,
    nqubits: usize,
    seed: u64,
    members: Vec<SweepSeries>,
) -> Result<EnsembleSummary> {
    let count = members.len();
    if count < 2 {
        return Err(Error::Argument(format!(
            "ensemble needs at least 2 members, got {count}"
        )));
    }
    let grid = members[0].grid.clone();
    let kind = members[0].channel;
    if members.iter().any(|m| m.grid != grid || m.channel != kind) {
        return Err(Error::Argument(
            "ensemble members do not share the grid and channel".into(),
        ));
    }
    for m in &members {
        m.check()?;
    }

    let excluded_members: Vec<usize> = (0..count)
        .filter(|&i| members[i].values.iter().any(|&v| v < EPS_LIFE))
        .collect();
    let excluded = excluded_members.len();
    if excluded + 2 > count {
        return Err(Error::TooManyExclusions { excluded, count });
    }
    let included: Vec<&SweepSeries> = (0..count)
        .filter(|i| !excluded_members.contains(i))
        .map(|i| &members[i])
        .collect();
    let n = included.len() as f64;

    let mut mean_value = Vec::with_capacity(grid.len());
    let mut mean_eta = Vec::with_capacity(grid.len());
    let mut variance_eta = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let etas = included
            .iter()
            .map(|m| {
                m.eta[k].ok_or_else(|| {
                    Error::Argument(format!("{}: eta undefined at s = {}", m.label, grid[k]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let mu = etas.iter().sum::<f64>() / n;
        mean_eta.push(mu);
        variance_eta.push(etas.iter().map(|e| (e - mu).powi(2)).sum::<f64>() / n);
        mean_value.push(included.iter().map(|m| m.values[k]).sum::<f64>() / n);
    }
    let ci_low = mean_eta
        .iter()
        .zip(&variance_eta)
        .map(|(m, v)| m - v.sqrt())
        .collect();
    let ci_high = mean_eta
        .iter()
        .zip(&variance_eta)
        .map(|(m, v)| m + v.sqrt())
        .collect();

    Ok(EnsembleSummary {
        generator,
        nqubits,
        channel: kind,
        seed,
        count,
        grid,
        mean_value,
        mean_eta,
        variance_eta,
        ci_low,
        ci_high,
        excluded,
        excluded_members,
        members,
    })
}

/// States ordered by `η` at one grid point, most robust first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub s: f64,
    pub order: Vec<(String, f64)>,
}

impl Ranking {
    pub fn winner(&self) -> Option<&str> {
        self.order.first().map(|(l, _)| l.as_str())
    }

    pub fn eta_of(&self, label: &str) -> Option<f64> {
        self.order.iter().find(|(l, _)| l == label).map(|(_, e)| *e)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.order.iter().position(|(l, _)| l == label)
    }
}

#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub channel: ChannelKind,
    pub grid: Vec<f64>,
    pub rankings: Vec<Ranking>,
}

impl RobustnessReport {
    /// Most robust label at every grid point.
    pub fn winners(&self) -> Vec<(f64, Option<&str>)> {
        self.rankings.iter().map(|r| (r.s, r.winner())).collect()
    }

    /// Plain-text table, one line per grid point.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for r in &self.rankings {
            let cells: Vec<String> = r
                .order
                .iter()
                .map(|(l, e)| format!("{l} ({e:.4})"))
                .collect();
            let _ = writeln!(out, "s = {:.4}: {}", r.s, cells.join(" > "));
        }
        out
    }
}

/// Ranks single-state curves and ensemble means (labelled by
/// [`EnsembleSummary::label`]) by `η` at each grid point. Entries with
/// undefined `η` are left out at that point.
pub fn robustness_report(
    series: &[SweepSeries],
    summaries: &[EnsembleSummary],
) -> Result<RobustnessReport> {
    let (channel, grid) = match (series.first(), summaries.first()) {
        (Some(s), _) => (s.channel, s.grid.clone()),
        (None, Some(e)) => (e.channel, e.grid.clone()),
        (None, None) => return Err(Error::Argument("nothing to rank".into())),
    };
    let same = |c: ChannelKind, g: &[f64]| c == channel && g == grid.as_slice();
    if let Some(s) = series.iter().find(|s| !same(s.channel, &s.grid)) {
        return Err(Error::Argument(format!(
            "{} does not share the grid and channel",
            s.label
        )));
    }
    if let Some(e) = summaries.iter().find(|e| !same(e.channel, &e.grid)) {
        return Err(Error::Argument(format!(
            "{} does not share the grid and channel",
            e.label()
        )));
    }
    let rankings = (0..grid.len())
        .map(|k| {
            let mut order: Vec<(String, f64)> = series
                .iter()
                .filter_map(|s| s.eta[k].map(|e| (s.label.clone(), e)))
                .chain(summaries.iter().map(|e| (e.label(), e.mean_eta[k])))
                .collect();
            order.sort_by(|a, b| b.1.total_cmp(&a.1));
            Ranking { s: grid[k], order }
        })
        .collect();
    Ok(RobustnessReport {
        channel,
        grid,
        rankings,
    })
}

/// `%.12g`-style formatting.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}").to_lowercase();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        trim(&format!("{v:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

pub const CSV_HEADER: &str = "label,channel,s,E,eta,eta_lo,eta_hi";

fn opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

/// CSV rows for single-state sweeps, then ensemble means with their bands.
/// With `members`, every ensemble member's curve follows its summary.
pub fn write_csv(series: &[SweepSeries], summaries: &[EnsembleSummary], members: bool) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let push_series = |out: &mut String, s: &SweepSeries| {
        for k in 0..s.grid.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},,",
                s.label,
                s.channel.short_name(),
                format_sig(s.grid[k]),
                format_sig(s.values[k]),
                opt(s.eta[k])
            );
        }
    };
    for s in series {
        push_series(&mut out, s);
    }
    for e in summaries {
        for k in 0..e.grid.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.label(),
                e.channel.short_name(),
                format_sig(e.grid[k]),
                format_sig(e.mean_value[k]),
                format_sig(e.mean_eta[k]),
                format_sig(e.ci_low[k]),
                format_sig(e.ci_high[k])
            );
        }
        if members {
            for m in &e.members {
                push_series(&mut out, m);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{named_state, NamedState};

    #[test]
    fn exponential_has_constant_rate() {
        let grid = uniform_grid(0.0, 1.0, 21).unwrap();
        let values: Vec<f64> = grid.iter().map(|s| (-2.0 * s).exp()).collect();
        for e in log_derivative(&grid, &values, EPS_FLOOR).unwrap() {
            assert!((e.unwrap() + 2.0).abs() < 1e-10);
        }
        assert!(kinks(&grid, &values, EPS_FLOOR).unwrap().is_empty());
    }

    #[test]
    fn constant_values_have_zero_rate() {
        let grid = uniform_grid(0.1, 0.5, 5).unwrap();
        let eta = log_derivative(&grid, &[0.3; 5], EPS_FLOOR).unwrap();
        assert!(eta.iter().all(|e| e.unwrap().abs() < 1e-12));
    }

    #[test]
    fn values_below_floor_are_undefined() {
        let grid = uniform_grid(0.0, 0.4, 5).unwrap();
        let eta = log_derivative(&grid, &[0.5, 0.4, 0.3, 1e-6, 0.0], EPS_FLOOR).unwrap();
        assert!(eta[1].is_some());
        assert!(eta[2].is_none() && eta[3].is_none() && eta[4].is_none());
    }

    #[test]
    fn short_or_uneven_grids_are_rejected() {
        assert!(log_derivative(&[0.0, 0.1], &[1.0, 0.9], EPS_FLOOR).is_err());
        assert!(log_derivative(&[0.0, 0.1, 0.3], &[1.0, 0.9, 0.8], EPS_FLOOR).is_err());
        assert!(uniform_grid(0.5, 0.1, 10).is_err());
        assert!(uniform_grid(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn default_grids_cover_the_stated_ranges() {
        let g = default_grid(ChannelKind::Depolarizing);
        assert_eq!(g.len(), DEFAULT_STEPS);
        assert_eq!((g[0], g[DEFAULT_STEPS - 1]), (0.02, 0.5));
        assert_eq!(
            *default_grid(ChannelKind::PhaseDamping).last().unwrap(),
            1.0
        );
    }

    #[test]
    fn kink_in_piecewise_exponential() {
        let grid = uniform_grid(0.0, 1.0, 11).unwrap();
        let values: Vec<f64> = grid
            .iter()
            .map(|&s| {
                if s <= 0.5 {
                    (-s).exp()
                } else {
                    (-0.5 - 3.0 * (s - 0.5)).exp()
                }
            })
            .collect();
        let k = kinks(&grid, &values, EPS_FLOOR).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].index, 5);
        assert!((k[0].backward + 1.0).abs() < 1e-9 && (k[0].forward + 3.0).abs() < 1e-9);
    }

    #[test]
    fn product_state_sweep_is_zero() {
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 8];
        amps[0] = num_complex::Complex64::new(1.0, 0.0);
        let rho = PureState::from_amplitudes(3, amps)
            .unwrap()
            .to_density()
            .unwrap();
        let grid = uniform_grid(0.0, 0.2, 3).unwrap();
        let s = sweep(
            &rho,
            ChannelKind::AmplitudeDamping,
            &grid,
            3,
            &GmnOptions::default(),
        )
        .unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(s.eta.iter().all(Option::is_none));
    }

    #[test]
    fn first_point_at_zero_is_the_initial_value() {
        let rho = named_state(NamedState::Ghz(3))
            .unwrap()
            .to_density()
            .unwrap();
        let grid = uniform_grid(0.0, 0.2, 3).unwrap();
        let s = sweep(
            &rho,
            ChannelKind::PhaseDamping,
            &grid,
            3,
            &GmnOptions::default(),
        )
        .unwrap();
        assert!((s.values[0] - 0.5).abs() < 1e-6);
        assert!(s.flagged.is_empty());
    }

    #[test]
    fn identical_members_have_zero_variance() {
        let grid = uniform_grid(0.02, 0.1, 3).unwrap();
        let psi = Generator::HaarRandom.member(3, 5, 0).unwrap();
        let inputs = vec![
            SweepInput::pure("a", &psi).unwrap(),
            SweepInput::pure("b", &psi).unwrap(),
        ];
        let members = sweep_many(
            &inputs,
            ChannelKind::AmplitudeDamping,
            &grid,
            &GmnOptions::default(),
        )
        .unwrap();
        let e = summarize(Generator::HaarRandom, 3, 5, members).unwrap();
        assert_eq!(e.excluded, 0);
        for k in 0..grid.len() {
            assert_eq!(e.variance_eta[k], 0.0);
            assert_eq!((e.ci_low[k], e.ci_high[k]), (e.mean_eta[k], e.mean_eta[k]));
        }
    }

    #[test]
    fn report_rejects_mismatched_grids() {
        let mk = |grid: Vec<f64>| SweepSeries {
            label: "x".into(),
            channel: ChannelKind::PhaseDamping,
            values: vec![1.0; grid.len()],
            eta: vec![Some(0.0); grid.len()],
            grid,
            kinks: vec![],
            flagged: vec![],
        };
        let a = mk(vec![0.0, 0.1, 0.2]);
        let b = mk(vec![0.0, 0.2, 0.4]);
        assert!(robustness_report(&[a.clone(), b], &[]).is_err());
        assert_eq!(robustness_report(&[a], &[]).unwrap().rankings.len(), 3);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(-1.5), "-1.5");
        assert_eq!(format_sig(0.02), "0.02");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(1.234e-7), "1.234e-7");
        assert_eq!(format_sig(123456.0), "123456");
        assert_eq!(format_sig(f64::NAN), "nan");
    }
}
