use std::collections::HashSet;
use std::fs;

use hcbo::gp::GpConfig;
use hcbo::infill::InfillConfig;
use hcbo::problems::by_name;
use hcbo::runner::{cell_dir, log_path, plot_data, read_log, run_bo, run_campaign, CampaignConfig, RunConfig};
use hcbo::strategy::Strategy;

fn light(mut cfg: RunConfig) -> RunConfig {
    cfg.infill = InfillConfig { pop_size: 20, n_generations: 5, ..InfillConfig::default() };
    cfg.gp = GpConfig { n_starts: 1, max_evals_per_start: 15, ..GpConfig::default() };
    cfg
}

#[test]
fn budget_and_batches_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = light(RunConfig::new("hc-branin", Strategy::Rejection));
    cfg.n_doe = Some(113);
    cfg.n_infill = 187;
    cfg.n_batch = 4;
    cfg.repetitions = 1;
    cfg.out_dir = Some(dir.path().to_path_buf());
    let runs = run_bo(&cfg).unwrap();
    let records = &runs[0];
    assert_eq!(records[0].batch.len(), 113);
    assert_eq!(records.last().unwrap().n_evaluations, 300);
    for r in &records[1..] {
        assert!(!r.batch.is_empty() && r.batch.len() <= 4);
        let keys: HashSet<String> = r.batch.iter().map(|p| format!("{:?}", p.x)).collect();
        assert_eq!(keys.len(), r.batch.len());
    }

    let p = by_name("hc-branin").unwrap();
    let lines = read_log(&log_path(&cell_dir(dir.path(), &p, &cfg.strategy), 0)).unwrap();
    assert_eq!(lines.len(), 300);
    for (k, line) in lines.iter().enumerate() {
        assert_eq!(line.eval_id, k);
        assert!(p.space().is_canonical(&line.point().x));
    }
}

#[test]
fn resume_regenerates_only_missing_logs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = light(RunConfig::new("alimo", "predict:rfc:pov=0.5".parse().unwrap()));
    cfg.n_infill = 4;
    cfg.n_batch = 2;
    cfg.repetitions = 3;
    cfg.out_dir = Some(dir.path().to_path_buf());
    run_bo(&cfg).unwrap();

    let p = by_name("alimo").unwrap();
    let cell = cell_dir(dir.path(), &p, &cfg.strategy);
    let paths: Vec<_> = (0..3).map(|rep| log_path(&cell, rep)).collect();
    let before: Vec<String> = paths.iter().map(|f| fs::read_to_string(f).unwrap()).collect();
    let kept = fs::metadata(&paths[0]).unwrap().modified().unwrap();
    fs::remove_file(&paths[1]).unwrap();

    run_bo(&cfg).unwrap();
    assert_eq!(fs::metadata(&paths[0]).unwrap().modified().unwrap(), kept);
    let regenerated = fs::read_to_string(&paths[1]).unwrap();
    let strip = |s: &str| hcbo::runner::strip_timings(s).unwrap();
    assert_eq!(strip(&regenerated), strip(&before[1]));
    assert_eq!(fs::read_to_string(&paths[2]).unwrap(), before[2]);
}

#[test]
fn campaign_summarizes_against_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "problems = alimo, branin\nstrategies = rejection, replace:closest\nn-infill = 3\nn_batch = 2\nreps = 2\n\
         pop_size = 10\nn_generations = 3\nout = {}\n",
        dir.path().display()
    );
    let cfg = CampaignConfig::parse(&text).unwrap();
    let rows = run_campaign(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.n_reps, 2);
        assert!(r.rank >= 1);
        if r.strategy == "rejection" {
            assert_eq!(r.regret_rel_pct.unwrap_or(0.0), 0.0);
            assert_eq!(r.fail_rate_rel_pct.unwrap_or(0.0), 0.0);
        }
    }
    assert!(dir.path().join("summary.csv").exists());

    let curves = plot_data(dir.path()).unwrap();
    assert!(!curves.is_empty());
    for c in &curves {
        assert!(c.q25 <= c.median && c.median <= c.q75);
    }
}
