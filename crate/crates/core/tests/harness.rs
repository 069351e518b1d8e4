use std::path::Path;

use proptest::prelude::*;
use signal_lab::controller::{ControllerKind, SignalController};
use signal_lab::harness::{
    compute_att, emit_results, mean_std, read_results, run_experiment, run_sweep, summarise, throughput_rate,
    CellResult, Experiment, LoadedScenario, NoiseSpec, Scenario, Stage, Summary,
};
use signal_lab::sensing::NoiseKind;
use signal_lab::sim::VehicleRecord;
use signal_lab::Error;

const SMALL: &str = r#"
name = "small"
seed = 3
demand = 450

[grid]
rows = 1
cols = 1
ew_length = 300.0
ns_length = 300.0
speed = 15.0
phase_set = "four"

[sim]
episode_length = 900

[controllers]
baselines_use_sensing = true
"#;

fn small() -> LoadedScenario {
    Scenario::parse(SMALL).unwrap().build().unwrap()
}

fn file(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn unknown_scenario_field_is_rejected() {
    let err = Scenario::parse(&format!("bogus = 1\n{SMALL}")).unwrap_err();
    assert!(matches!(err, Error::Scenario(_)), "{err}");
    // nested tables are strict too
    let err = Scenario::parse(&format!("{SMALL}\nbogus = 1\n")).unwrap_err();
    assert!(matches!(err, Error::Scenario(_)), "{err}");
}

#[test]
fn scenario_needs_demand_or_flows() {
    let text = SMALL.replace("demand = 450", "");
    let err = Scenario::parse(&text).unwrap().build().unwrap_err();
    assert!(err.to_string().contains("neither demand nor flows"));
}

#[test]
fn missing_scenario_file_names_the_path() {
    let err = LoadedScenario::from_path(Path::new("/nonexistent/grid.toml")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/grid.toml"));
}

#[test]
fn hash_ignores_layout_but_not_content() {
    let a = Scenario::parse(SMALL).unwrap();
    let b = Scenario::parse(&format!("# comment\n{}", SMALL.replace("\n\n", "\n"))).unwrap();
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    let c = Scenario::parse(&SMALL.replace("demand = 450", "demand = 451")).unwrap();
    assert_ne!(a.hash().unwrap(), c.hash().unwrap());
}

#[test]
fn shipped_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let sc = LoadedScenario::from_path(&path).unwrap();
        assert_eq!(sc.episode_length(), 3600, "{}", path.display());
        assert!(!sc.arrivals(0).unwrap().is_empty());
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn att_counts_unfinished_vehicles_to_episode_end() {
    let rec = |spawn, completion| VehicleRecord {
        id: 0,
        route: 0,
        spawn,
        completion,
        stops: 0,
    };
    let records = [rec(0, Some(100)), rec(50, None), rec(900, None)];
    // 100, 850 and 0
    assert_eq!(compute_att(&records, 900), Some(950.0 / 3.0));
    assert_eq!(compute_att(&[], 900), None);
}

#[test]
fn empty_seed_list_is_an_error() {
    let sc = small();
    let err = run_experiment(&sc, &[ControllerKind::FixedTime], &[], &[NoiseSpec::clean()], 1).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
    let err = run_sweep(&sc, ControllerKind::FixedTime, &[], NoiseSpec::clean(), &[NoiseSpec::clean()], 1).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn unknown_controller_name() {
    let err = "webster".parse::<ControllerKind>().unwrap_err();
    assert!(matches!(err, Error::UnknownController(ref n) if n == "webster"));
    for k in ControllerKind::ALL {
        assert_eq!(k.name().parse::<ControllerKind>().unwrap(), k);
    }
}

#[test]
fn rule_based_cells_are_deterministic() {
    let sc = small();
    let exp = Experiment::new(&sc);
    for kind in [ControllerKind::FixedTime, ControllerKind::MaxPressure] {
        let (a, rows, model) = exp.run_cell(kind, 5, NoiseSpec::gaussian(1.0), 3).unwrap();
        let (b, _, _) = exp.run_cell(kind, 5, NoiseSpec::gaussian(1.0), 3).unwrap();
        assert_eq!(a.att_mean, b.att_mean);
        assert_eq!(a.throughput_mean, b.throughput_mean);
        assert!(model.is_none());
        assert_eq!(rows.len(), 1);
        assert!(a.att_mean > 0.0);
    }
}

#[test]
fn seeds_change_the_demand() {
    let sc = small();
    assert_eq!(sc.arrivals(1).unwrap(), sc.arrivals(1).unwrap());
    assert_ne!(sc.arrivals(1).unwrap(), sc.arrivals(2).unwrap());
}

#[test]
fn emitted_files_are_reproducible() {
    let sc = small();
    let run = || {
        run_experiment(
            &sc,
            &[ControllerKind::FixedTime, ControllerKind::MaxPressure],
            &[0, 1],
            &[NoiseSpec::gaussian(1.0)],
            1,
        )
        .unwrap()
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (cells, rows) = run();
    let summary = emit_results(d1.path(), &cells, &rows).unwrap();
    assert_eq!(summary.groups.len(), 2);
    assert!(summary.groups.iter().all(|g| g.seeds == 2));
    let (cells2, rows2) = run();
    emit_results(d2.path(), &cells2, &rows2).unwrap();
    for f in ["episodes.csv", "results.csv", "summary.json"] {
        assert_eq!(file(d1.path(), f), file(d2.path(), f), "{f}");
    }

    // a second run appends rows, keeping a single header
    emit_results(d1.path(), &cells, &rows).unwrap();
    assert_eq!(read_results(&d1.path().join("results.csv")).unwrap().len(), 8);
    let text = String::from_utf8(file(d1.path(), "results.csv")).unwrap();
    assert_eq!(text.matches("scenario_hash").count(), 1);
}

#[test]
fn emitting_into_a_missing_directory_fails() {
    let sc = small();
    let (cells, rows) = run_experiment(&sc, &[ControllerKind::FixedTime], &[0], &[NoiseSpec::clean()], 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let err = emit_results(&missing, &cells, &rows).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("nope"));
    assert!(emit_results(dir.path(), &[], &[]).is_err());
}

#[test]
fn each_noise_setting_is_its_own_group() {
    let sc = small();
    let noises = [
        NoiseSpec::clean(),
        NoiseSpec::gaussian(0.5),
        NoiseSpec::gaussian(1.0),
        NoiseSpec::gaussian(3.0),
        NoiseSpec {
            kind: NoiseKind::Uniform,
            scale: 1.0,
        },
    ];
    let (cells, rows) = run_experiment(&sc, &[ControllerKind::MaxPressure], &[0], &noises, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = emit_results(dir.path(), &cells, &rows).unwrap();
    assert_eq!(summary.groups.len(), 5);
}

#[test]
fn training_alternates_train_and_eval_episodes() {
    let sc = small();
    let exp = Experiment::new(&sc);
    let (cell, rows, model) = exp.run_cell(ControllerKind::FuzzyLight, 0, NoiseSpec::clean(), 2).unwrap();
    let stages: Vec<Stage> = rows.iter().map(|r| r.stage).collect();
    assert_eq!(stages, [Stage::Train, Stage::Eval, Stage::Train, Stage::Eval]);
    assert_eq!(rows.iter().map(|r| r.episode).collect::<Vec<_>>(), [0, 1, 2, 3]);
    assert_eq!(cell.episodes, 2);
    let model = model.unwrap();
    let epochs = model.config().ddpg.epochs;
    assert_eq!(model.agent().unwrap().updates(), 2 * epochs as u64);
}

#[test]
fn frozen_evaluation_leaves_the_model_alone() {
    let sc = small();
    let exp = Experiment::new(&sc);
    let mut model = exp.fuzzy(ControllerKind::FuzzyLight, 1).unwrap();
    exp.train(&mut model, 1, NoiseSpec::clean(), 1, |_| {}).unwrap();
    let before = model.agent().unwrap().checkpoint().to_text();
    let updates = model.agent().unwrap().updates();
    let rows = exp.evaluate(&mut model, 1, NoiseSpec::gaussian(1.0), 2).unwrap();
    assert_eq!(model.agent().unwrap().checkpoint().to_text(), before);
    assert_eq!(model.agent().unwrap().updates(), updates);
    assert!(!model.is_training());
    // the two frozen episodes differ only in channel noise
    assert!(rows.iter().all(|r| r.att.is_some()));
}

#[test]
fn ablation_modes() {
    let sc = small();
    let exp = Experiment::new(&sc);
    let fixed = exp.fuzzy(ControllerKind::FuzzyPhaseFixedDuration, 0).unwrap();
    assert!(fixed.agent().is_none());
    assert_eq!(fixed.kind(), ControllerKind::FuzzyPhaseFixedDuration);
    let (_, rows, _) = exp.run_cell(ControllerKind::FuzzyPhaseFixedDuration, 0, NoiseSpec::clean(), 1).unwrap();
    let green = sc.scenario.controllers.ablation_green as f64;
    assert!(rows.iter().all(|r| r.mean_green == green));

    let cycle = exp.fuzzy(ControllerKind::FuzzyCycle, 0).unwrap();
    assert!(cycle.agent().is_some());
    assert_eq!(cycle.kind(), ControllerKind::FuzzyCycle);
}

#[test]
fn sweep_evaluates_one_model_per_seed() {
    let sc = small();
    let sweep = [NoiseSpec::gaussian(0.5), NoiseSpec::gaussian(3.0)];
    let (cells, rows) = run_sweep(&sc, ControllerKind::FuzzyLight, &[0], NoiseSpec::clean(), &sweep, 1).unwrap();
    assert_eq!(cells.len(), 2);
    let window = sc.scenario.training.eval_window;
    assert!(cells.iter().all(|c| c.episodes == window));
    // one train + eval round, then the frozen episodes
    assert_eq!(rows.len(), 2 + 2 * window);
}

fn cell(controller: &str, scale: f64, seed: u64, att: f64) -> CellResult {
    CellResult {
        scenario: "s".into(),
        scenario_hash: "h".into(),
        controller: controller.into(),
        noise_kind: "gaussian".into(),
        noise_scale: scale,
        seed,
        episodes: 1,
        att_mean: att,
        att_std: 0.0,
        throughput_mean: att / 2.0,
        stops_mean: 1.0,
        reward_mean: -att,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn emitted_summary_matches_raw_rows(
        raw in prop::collection::vec((0usize..3, 0usize..2, 0u64..4, 1.0f64..500.0), 1..20)
    ) {
        let names = ["fixed_time", "max_pressure", "fuzzylight"];
        let cells: Vec<CellResult> =
            raw.iter().map(|&(c, n, seed, att)| cell(names[c], [0.0, 1.0][n], seed, att)).collect();
        let dir = tempfile::tempdir().unwrap();
        let emitted = emit_results(dir.path(), &cells, &[]).unwrap();
        let on_disk: Summary =
            serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
        prop_assert_eq!(&emitted, &on_disk);
        // independent regrouping of the raw rows
        for g in &on_disk.groups {
            let atts: Vec<f64> = cells
                .iter()
                .filter(|c| c.controller == g.controller && c.noise_scale == g.noise_scale)
                .map(|c| c.att_mean)
                .collect();
            let (m, sd) = mean_std(&atts).unwrap();
            prop_assert_eq!(g.seeds, atts.len());
            prop_assert!((g.att_mean - m).abs() <= 1e-9 * m.max(1.0));
            prop_assert!((g.att_std - sd).abs() <= 1e-9 * m.max(1.0));
        }
        prop_assert_eq!(summarise(&read_results(&dir.path().join("results.csv")).unwrap()), on_disk);
    }

    #[test]
    fn throughput_rate_stays_in_bounds(xi in 1u32..10_000, xj in 1u32..10_000) {
        let r = throughput_rate(xi, xj).unwrap();
        prop_assert!((1.0..=2.0).contains(&r));
    }

    #[test]
    fn att_lies_within_the_episode(
        raw in prop::collection::vec((0u32..900, prop::option::of(0u32..1200)), 1..40)
    ) {
        let records: Vec<VehicleRecord> = raw
            .iter()
            .enumerate()
            .map(|(id, &(spawn, done))| VehicleRecord {
                id,
                route: 0,
                spawn,
                completion: done.map(|d| spawn + d).filter(|&c| c <= 900),
                stops: 0,
            })
            .collect();
        let att = compute_att(&records, 900).unwrap();
        prop_assert!((0.0..=900.0).contains(&att));
    }
}
