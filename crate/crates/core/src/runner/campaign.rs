//! Problem-by-strategy campaigns and their summary tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ::log::warn;
use serde::{Deserialize, Serialize};

use super::log::{read_log, records_from_log};
use super::{run_bo, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{rank_strategies, regret, RunRecord};
use crate::problems::{by_name, ProblemDef};
use crate::stats::{median, quantile};
use crate::strategy::Strategy;

const CELL_INFO: &str = "cell.json";
const ERROR_LOG: &str = "errors.txt";
const BASELINE: &str = "rejection";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellInfo {
    problem: String,
    strategy: String,
}

pub(super) fn write_cell_info(cell: &Path, problem: &ProblemDef, strategy: &Strategy) -> Result<()> {
    let info = CellInfo { problem: problem.name().to_string(), strategy: strategy.to_string() };
    fs::write(cell.join(CELL_INFO), serde_json::to_string_pretty(&info)? + "\n")?;
    Ok(())
}

/// A campaign read from a flat `key = value` file. Lists are comma separated;
/// keys may use `-` or `_`.
///
/// ```text
/// problems = alimo, alimo-edge
/// strategies = rejection, predict:mdgp:pov=0.25
/// n-infill = 50
/// reps = 16
/// out = results
/// ```
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub problems: Vec<String>,
    pub strategies: Vec<Strategy>,
    /// Settings shared by every cell; problem and strategy are overwritten.
    pub run: RunConfig,
    pub out_dir: PathBuf,
    pub summary: Option<PathBuf>,
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(msg);
        let mut run = RunConfig::new("", Strategy::Rejection);
        let mut problems = Vec::new();
        let mut strategies = Vec::new();
        let mut out_dir = None;
        let mut summary = None;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim().replace('-', "_");
            let v = v.trim();
            let list = || v.split(',').map(str::trim).filter(|s| !s.is_empty());
            fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
                v.parse().map_err(|_| Error::InvalidConfig(format!("{k}: cannot parse {v:?}")))
            }
            match k.as_str() {
                "problems" | "problem" => problems.extend(list().map(String::from)),
                "strategies" | "strategy" => {
                    for s in list() {
                        strategies.push(s.parse()?);
                    }
                }
                "n_infill" => run.n_infill = num(&k, v)?,
                "n_batch" => run.n_batch = num(&k, v)?,
                "n_doe" => run.n_doe = Some(num(&k, v)?),
                "k_doe" => run.doe.k_doe = num(&k, v)?,
                "fr_expected" => run.doe.fr_expected = num(&k, v)?,
                "reps" | "repetitions" => run.repetitions = num(&k, v)?,
                "seed" => run.seed = num(&k, v)?,
                "pop_size" => run.infill.pop_size = num(&k, v)?,
                "n_generations" => run.infill.n_generations = num(&k, v)?,
                "out" => out_dir = Some(PathBuf::from(v)),
                "summary" => summary = Some(PathBuf::from(v)),
                _ => return Err(bad(format!("line {}: unknown key {k:?}", no + 1))),
            }
        }
        if problems.is_empty() || strategies.is_empty() {
            return Err(bad("problems and strategies must be nonempty".into()));
        }
        for p in &problems {
            by_name(p)?;
        }
        let out_dir = out_dir.ok_or_else(|| bad("missing out".into()))?;
        Ok(Self { problems, strategies, run, out_dir, summary })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Run every cell of the campaign, then write and return the summary. A
/// failing cell is logged to its `errors.txt` and left out of the summary.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Vec<SummaryRow>> {
    for problem in &cfg.problems {
        for strategy in &cfg.strategies {
            let mut run = cfg.run.clone();
            run.problem = problem.clone();
            run.strategy = *strategy;
            run.out_dir = Some(cfg.out_dir.clone());
            if let Err(e) = run_bo(&run) {
                warn!("{problem} {strategy}: run failed: {e}");
                let p = by_name(problem)?;
                let cell = super::cell_dir(&cfg.out_dir, &p, strategy);
                fs::create_dir_all(&cell)?;
                let mut text = fs::read_to_string(cell.join(ERROR_LOG)).unwrap_or_default();
                text.push_str(&format!("{e}\n"));
                fs::write(cell.join(ERROR_LOG), text)?;
            }
        }
    }
    let rows = summarize(&cfg.out_dir)?;
    let path = cfg.summary.clone().unwrap_or_else(|| cfg.out_dir.join("summary.csv"));
    write_csv(&path, &rows)?;
    Ok(rows)
}

/// Per-repetition outcome read back from a log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub regret: f64,
    /// Failed share of the evaluations after the DoE.
    pub fail_rate: f64,
    pub train_time_s: f64,
    pub infill_time_s: f64,
}

/// Regret, post-DoE fail rate and total model times of one run.
pub fn summarize_records(records: &[RunRecord]) -> RunSummary {
    let infill: Vec<_> = records.iter().filter(|r| r.iteration > 0).flat_map(|r| &r.batch).collect();
    let fail_rate =
        if infill.is_empty() { 0.0 } else { infill.iter().filter(|p| !p.viable).count() as f64 / infill.len() as f64 };
    RunSummary {
        regret: regret(records),
        fail_rate,
        train_time_s: records.iter().map(|r| r.t_train_s).sum(),
        infill_time_s: records.iter().map(|r| r.t_infill_s).sum(),
    }
}

fn summarize_run(path: &Path) -> Result<(RunSummary, Vec<(usize, f64)>)> {
    let records = records_from_log(&read_log(path)?);
    Ok((summarize_records(&records), records.iter().map(|r| (r.n_evaluations, r.delta_hv)).collect()))
}

struct Cell {
    problem: String,
    strategy: String,
    runs: Vec<RunSummary>,
    curves: Vec<Vec<(usize, f64)>>,
}

/// Every cell under `dir` with at least one finished repetition.
fn read_cells(dir: &Path) -> Result<Vec<Cell>> {
    let mut infos: Vec<PathBuf> = Vec::new();
    for problem_dir in fs::read_dir(dir)? {
        let problem_dir = problem_dir?.path();
        if !problem_dir.is_dir() {
            continue;
        }
        for cell in fs::read_dir(&problem_dir)? {
            let cell = cell?.path();
            if cell.join(CELL_INFO).exists() {
                infos.push(cell);
            }
        }
    }
    infos.sort();
    let mut cells = Vec::new();
    for cell in infos {
        let info: CellInfo = serde_json::from_str(&fs::read_to_string(cell.join(CELL_INFO))?)?;
        let mut logs: Vec<PathBuf> = fs::read_dir(&cell)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        logs.sort();
        let mut runs = Vec::new();
        let mut curves = Vec::new();
        for log in &logs {
            match summarize_run(log) {
                Ok((s, c)) => {
                    runs.push(s);
                    curves.push(c);
                }
                Err(e) => warn!("{}: unreadable log skipped: {e}", log.display()),
            }
        }
        if runs.is_empty() {
            warn!("{} {}: no finished repetition", info.problem, info.strategy);
            continue;
        }
        cells.push(Cell { problem: info.problem, strategy: info.strategy, runs, curves });
    }
    Ok(cells)
}

/// One (problem, strategy) row of the summary table. Relative columns are
/// percent changes against the rejection strategy on the same problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub strategy: String,
    pub n_reps: usize,
    pub median_regret: f64,
    pub rank: usize,
    pub fail_rate: f64,
    pub train_time_s: f64,
    pub infill_time_s: f64,
    pub regret_rel_pct: Option<f64>,
    pub fail_rate_rel_pct: Option<f64>,
    pub train_time_rel_pct: Option<f64>,
    pub infill_time_rel_pct: Option<f64>,
}

fn relative(value: f64, baseline: Option<f64>) -> Option<f64> {
    match baseline {
        Some(b) if b != 0.0 => Some(100.0 * (value - b) / b),
        Some(_) if value == 0.0 => Some(0.0),
        _ => None,
    }
}

/// Aggregate all logs under `dir`: medians over repetitions, ranks by regret
/// and changes relative to rejection.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>> {
    let cells = read_cells(dir)?;
    let mut samples: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for c in &cells {
        samples
            .entry(c.problem.clone())
            .or_default()
            .insert(c.strategy.clone(), c.runs.iter().map(|r| r.regret).collect());
    }
    let ranking = rank_strategies(&samples);

    let med = |c: &Cell, f: fn(&RunSummary) -> f64| median(&c.runs.iter().map(f).collect::<Vec<_>>());
    let fields: [fn(&RunSummary) -> f64; 4] =
        [|r| r.regret, |r| r.fail_rate, |r| r.train_time_s, |r| r.infill_time_s];
    let mut rows = Vec::with_capacity(cells.len());
    for c in &cells {
        let values = fields.map(|f| med(c, f));
        let baseline = cells.iter().find(|b| b.problem == c.problem && b.strategy == BASELINE);
        let rel: Vec<Option<f64>> = (0..4).map(|k| relative(values[k], baseline.map(|b| med(b, fields[k])))).collect();
        rows.push(SummaryRow {
            problem: c.problem.clone(),
            strategy: c.strategy.clone(),
            n_reps: c.runs.len(),
            median_regret: values[0],
            rank: ranking.per_problem[&c.problem][&c.strategy],
            fail_rate: values[1],
            train_time_s: values[2],
            infill_time_s: values[3],
            regret_rel_pct: rel[0],
            fail_rate_rel_pct: rel[1],
            train_time_rel_pct: rel[2],
            infill_time_rel_pct: rel[3],
        });
    }
    Ok(rows)
}

/// Median and interquartile range of the distance to the reference after a
/// given number of evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub problem: String,
    pub strategy: String,
    pub n_evaluations: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Convergence curves of every cell under `dir`. Each repetition contributes
/// its latest value at or before each evaluation count.
pub fn plot_data(dir: &Path) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for c in read_cells(dir)? {
        let mut grid: Vec<usize> = c.curves.iter().flatten().map(|&(n, _)| n).collect();
        grid.sort_unstable();
        grid.dedup();
        for &n in &grid {
            let values: Vec<f64> = c
                .curves
                .iter()
                .filter_map(|curve| curve.iter().take_while(|&&(m, _)| m <= n).last().map(|&(_, d)| d))
                .collect();
            if values.is_empty() {
                continue;
            }
            out.push(CurvePoint {
                problem: c.problem.clone(),
                strategy: c.strategy.clone(),
                n_evaluations: n,
                median: median(&values),
                q25: quantile(&values, 0.25),
                q75: quantile(&values, 0.75),
            });
        }
    }
    Ok(out)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
