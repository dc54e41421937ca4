use gmn_robustness::analysis::{write_csv, CSV_HEADER, EPS_FLOOR};
use gmn_robustness::{
    default_grid, ensemble_study, log_derivative, named_state, robustness_report, sweep,
    sweep_many, uniform_grid, ChannelKind, Generator, GmnOptions, NamedState, SweepInput,
};

/// `E(s) = e^{−a s}(1 + c e^{−s})`, with `η(s) = −a − c e^{−s} / (1 + c e^{−s})`.
fn family(a: f64, c: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    (
        move |s: f64| (-a * s).exp() * (1.0 + c * (-s).exp()),
        move |s: f64| {
            let t = c * (-s).exp();
            -a - t / (1.0 + t)
        },
    )
}

fn max_error(steps: usize, a: f64, c: f64) -> f64 {
    let (e, eta) = family(a, c);
    let grid = uniform_grid(0.0, 1.0, steps).unwrap();
    let values: Vec<f64> = grid.iter().map(|&s| e(s)).collect();
    let got = log_derivative(&grid, &values, EPS_FLOOR).unwrap();
    grid.iter()
        .zip(&got)
        .map(|(&s, g)| (g.unwrap() - eta(s)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn halving_the_spacing_quarters_the_error() {
    for (a, c) in [(0.5, 1.0), (2.0, 0.3), (1.5, 3.0)] {
        let coarse = max_error(11, a, c);
        let fine = max_error(21, a, c);
        assert!(coarse / fine >= 3.0, "a={a} c={c}: {coarse} / {fine}");
    }
}

#[test]
fn pure_exponentials_are_exact() {
    let grid = default_grid(ChannelKind::AmplitudeDamping);
    let values: Vec<f64> = grid.iter().map(|s| (-2.0 * s).exp()).collect();
    for eta in log_derivative(&grid, &values, EPS_FLOOR).unwrap() {
        assert!((eta.unwrap() + 2.0).abs() < 1e-10);
    }
}

#[test]
fn ghz3_dephasing_law() {
    let grid = uniform_grid(0.0, 1.0, 11).unwrap();
    let rho = named_state(NamedState::Ghz(3))
        .unwrap()
        .to_density()
        .unwrap();
    let series = sweep(
        &rho,
        ChannelKind::PhaseDamping,
        &grid,
        3,
        &GmnOptions::default(),
    )
    .unwrap();
    series.check().unwrap();
    for (k, &s) in grid.iter().enumerate() {
        assert!(
            (series.values[k] - 0.5 * (-1.5 * s).exp()).abs() < 1e-4,
            "s={s}"
        );
        assert!((series.eta[k].unwrap() + 1.5).abs() < 2e-3, "s={s}");
    }
    assert!(series.kinks.is_empty());
}

#[test]
fn w3_beats_ghz3_under_amplitude_damping() {
    let grid = uniform_grid(0.1, 0.5, 5).unwrap();
    let inputs: Vec<SweepInput> = [NamedState::Ghz(3), NamedState::W(3)]
        .into_iter()
        .map(|s| SweepInput::pure(s.selector(), &named_state(s).unwrap()).unwrap())
        .collect();
    let series = sweep_many(
        &inputs,
        ChannelKind::AmplitudeDamping,
        &grid,
        &GmnOptions::default(),
    )
    .unwrap();
    let report = robustness_report(&series, &[]).unwrap();
    for (s, winner) in report.winners() {
        assert_eq!(winner, Some("w3"), "s={s}");
    }
    assert_eq!(report.to_table().lines().count(), grid.len());
}

#[test]
fn ensembles_are_reproducible() {
    let grid = uniform_grid(0.02, 0.2, 4).unwrap();
    let run = |seed| {
        let e = ensemble_study(
            Generator::WeightedGraph,
            3,
            3,
            ChannelKind::PhaseDamping,
            &grid,
            seed,
            &GmnOptions::default(),
        )
        .unwrap();
        for k in 0..grid.len() {
            assert!(e.ci_low[k] <= e.mean_eta[k] && e.mean_eta[k] <= e.ci_high[k]);
        }
        write_csv(&[], &[e], true)
    };
    let a = run(9);
    assert_eq!(a, run(9));
    assert_ne!(a, run(10));
    assert!(a.starts_with(CSV_HEADER));
    // Summary rows plus one row per member and grid point.
    assert_eq!(a.lines().count(), 1 + grid.len() * 4);
}

#[test]
fn single_series_csv_layout() {
    let grid = uniform_grid(0.1, 0.3, 3).unwrap();
    let rho = named_state(NamedState::Ghz(2))
        .unwrap()
        .to_density()
        .unwrap();
    let mut series = sweep(
        &rho,
        ChannelKind::Depolarizing,
        &grid,
        2,
        &GmnOptions::default(),
    )
    .unwrap();
    series.label = "ghz2".into();
    let csv = write_csv(&[series], &[], false);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], CSV_HEADER);
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!((cols[0], cols[1]), ("ghz2", "dp"));
        assert!(cols[5].is_empty() && cols[6].is_empty());
        assert!(cols[3].parse::<f64>().unwrap() > 0.0);
    }
    assert!(rows[1].starts_with("ghz2,dp,0.1,"));
}
