//! Campaign persistence: artifact layout, resume identity, baseline
//! counting, and the full entropy-search workflow with a fixed profile.

use valvetune::acquisition::AcquisitionKind;
use valvetune::campaign::{BaselineMethod, Campaign, RunLogRecord};
use valvetune::config::{CampaignConfig, Functional, HyperConfig};
use valvetune::cost::StepSeriesSpec;
use valvetune::paramspace::Bounds;

fn fast_config(seed: u64) -> CampaignConfig {
    let mut cfg = CampaignConfig::default();
    cfg.seed = seed;
    cfg.budget = 2;
    cfg.init_design = 2;
    cfg.acquisition = AcquisitionKind::Ei;
    cfg.heur.steps = StepSeriesSpec {
        levels: vec![10.0, 15.0, 10.0, 60.0],
        hold_s: 2.0,
    };
    cfg
}

fn read_log(path: &std::path::Path) -> Vec<RunLogRecord> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("valid JSONL"))
        .collect()
}

#[test]
fn tune_writes_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let campaign = Campaign::new(fast_config(4), out.clone()).unwrap();
    let report = campaign.run_tune().unwrap();
    assert_eq!(report.history.len(), 4);

    for file in ["config_snapshot.json", "log.jsonl", "report.json", "timings.csv"] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    assert!(out.join("plot/cost_vs_iteration.csv").exists());
    for i in 0..4 {
        assert!(out.join(format!("trajectories/iter_{i:03}.csv")).exists());
        assert!(out.join(format!("trajectories/iter_{i:03}.json")).exists());
    }

    let records = read_log(&out.join("log.jsonl"));
    assert_eq!(records.len(), 4);
    for (i, rec) in records.iter().enumerate() {
        assert_eq!(rec.schema_version, 1);
        assert_eq!(rec.record.iteration, i);
    }
}

#[test]
fn resume_completes_to_an_identical_log() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    Campaign::new(fast_config(9), full.clone())
        .unwrap()
        .run_tune()
        .unwrap();
    let full_log = std::fs::read_to_string(full.join("log.jsonl")).unwrap();

    // Interrupt: keep the snapshot and the first two log lines only.
    let partial = dir.path().join("partial");
    std::fs::create_dir_all(&partial).unwrap();
    std::fs::copy(
        full.join("config_snapshot.json"),
        partial.join("config_snapshot.json"),
    )
    .unwrap();
    let two_lines: String = full_log.lines().take(2).map(|l| format!("{l}\n")).collect();
    std::fs::write(partial.join("log.jsonl"), two_lines).unwrap();

    let report = Campaign::resume(partial.clone()).unwrap();
    assert_eq!(report.history.len(), 4);
    let resumed_log = std::fs::read_to_string(partial.join("log.jsonl")).unwrap();
    assert_eq!(full_log, resumed_log);

    let full_report = std::fs::read_to_string(full.join("report.json")).unwrap();
    let resumed_report = std::fs::read_to_string(partial.join("report.json")).unwrap();
    assert_eq!(full_report, resumed_report);
}

#[test]
fn random_baseline_shares_the_initial_design_with_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let tune_out = dir.path().join("tune");
    let base_out = dir.path().join("base");
    let tune = Campaign::new(fast_config(12), tune_out.clone())
        .unwrap()
        .run_tune()
        .unwrap();
    let base = Campaign::new(fast_config(12), base_out.clone())
        .unwrap()
        .run_baseline(BaselineMethod::Random)
        .unwrap();

    assert_eq!(base.history.len(), 4);
    for i in 0..2 {
        assert_eq!(tune.history[i].theta, base.history[i].theta);
        assert_eq!(tune.history[i].observed_cost, base.history[i].observed_cost);
    }
    // Reproducible on rerun.
    let base2 = Campaign::new(fast_config(12), dir.path().join("base2"))
        .unwrap()
        .run_baseline(BaselineMethod::Random)
        .unwrap();
    assert_eq!(
        serde_json::to_string(&base.history).unwrap(),
        serde_json::to_string(&base2.history).unwrap()
    );
}

#[test]
fn grid_baseline_enumerates_the_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = Campaign::new(fast_config(3), dir.path().join("grid")).unwrap();
    let report = campaign
        .run_baseline(BaselineMethod::Grid { points_per_dim: 2 })
        .unwrap();
    assert_eq!(report.history.len(), 16);
    let bounds = Bounds::valve_default();
    for rec in &report.history {
        assert!(bounds.check(&rec.theta).is_ok());
    }
}

#[test]
fn full_entropy_search_workflow_with_fixed_profile() {
    // Ten prior measurements plus a budget of ten entropy-search proposals,
    // with the fixed heuristic-functional hyperparameter profile.
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = CampaignConfig::default();
    cfg.seed = 2;
    cfg.budget = 10;
    cfg.init_design = 10;
    cfg.acquisition = AcquisitionKind::Es;
    cfg.hyper = Some(HyperConfig::Profile {
        name: "heur-ardSE".into(),
    });
    // Desk-scale acquisition sizes keep this test quick.
    cfg.acq.n_representers = 60;
    cfg.acq.n_function_samples = 200;
    cfg.heur.steps = StepSeriesSpec {
        levels: vec![10.0, 15.0, 10.0, 60.0],
        hold_s: 2.0,
    };

    let out = dir.path().join("es-run");
    let campaign = Campaign::new(cfg, out.clone()).unwrap();
    let report = campaign.run_tune().unwrap();

    assert_eq!(report.history.len(), 20);
    let bounds = Bounds::valve_default();
    for rec in &report.history {
        assert!(bounds.check(&rec.theta).is_ok());
    }
    assert_eq!(report.incumbent.len(), 4);
    assert!(report.incumbent_cost.is_finite());
    // p_min snapshots for every BO iteration.
    for i in 10..20 {
        assert!(out.join(format!("plot/pmin_iter_{i:03}.csv")).exists());
    }
    // The fixed profile is carried through to the report.
    let hyper = report.final_hyper.as_ref().unwrap();
    assert_eq!(hyper.noise_std, 1.0e-3);
}

#[test]
fn norm_functional_campaign_writes_frequency_responses() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fast_config(5);
    cfg.functional = Functional::Norm;
    cfg.norm.chirp.duration_s = 20.0;
    let out = dir.path().join("norm");
    let campaign = Campaign::new(cfg, out.clone()).unwrap();
    let report = campaign.run_tune().unwrap();
    assert_eq!(report.history.len(), 4);
    for i in 0..4 {
        assert!(out.join(format!("plot/st_iter_{i:03}.csv")).exists());
    }
    for rec in &report.history {
        assert!(rec.observed_cost.is_finite());
        assert!(rec.breakdown["f_s_hz"].as_f64().unwrap() > 0.0);
    }
}
