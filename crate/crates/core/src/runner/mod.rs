//! The optimization loop and benchmark campaigns.

mod campaign;
mod log;

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use ::log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub use campaign::{
    plot_data, run_campaign, summarize, summarize_records, write_csv, CampaignConfig, CurvePoint, RunSummary, SummaryRow,
};
pub use log::{read_log, records_from_log, strip_timings, LogLine};

use crate::error::{Error, Result};
use crate::gp::{Gp, GpConfig};
use crate::infill::nsga2::{key, Key};
use crate::infill::{optimize_infill, refine_continuous, select_batch, EnsembleInfill, InfillConfig, Surrogates};
use crate::metrics::{nondominated_within, RunRecord};
use crate::pov::PovModel;
use crate::problems::{by_name, ProblemDef};
use crate::sampling::{doe_size, hierarchical_sample, random_sample, DoeConfig};
use crate::space::{DesignVector, ValidDiscreteSet};
use crate::strategy::{build_training_sets, EvaluatedPoint, Strategy};

/// Times the DoE is grown when it contains no viable point.
pub const MAX_DOE_EXTENSIONS: usize = 3;
/// Random draws tried when backfilling a batch with unseen points.
const BACKFILL_TRIES: usize = 100;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: String,
    pub strategy: Strategy,
    /// Evaluations after the DoE.
    pub n_infill: usize,
    /// Points evaluated per iteration.
    pub n_batch: usize,
    pub doe: DoeConfig,
    /// Fixed DoE size overriding `doe_size`.
    pub n_doe: Option<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub infill: InfillConfig,
    pub gp: GpConfig,
}

impl RunConfig {
    pub fn new(problem: impl Into<String>, strategy: Strategy) -> Self {
        Self {
            problem: problem.into(),
            strategy,
            n_infill: 50,
            n_batch: 1,
            doe: DoeConfig::default(),
            n_doe: None,
            repetitions: 16,
            seed: 0,
            out_dir: None,
            infill: InfillConfig::default(),
            gp: GpConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_infill == 0 || self.n_batch == 0 || self.repetitions == 0 {
            return Err(Error::InvalidConfig("n_infill, n_batch and repetitions must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.doe.fr_expected) || self.doe.k_doe <= 0.0 {
            return Err(Error::InvalidConfig("need k_doe > 0 and 0 <= fr_expected < 1".into()));
        }
        if self.n_doe == Some(0) {
            return Err(Error::InvalidConfig("n_doe must be at least 1".into()));
        }
        self.strategy.validate()?;
        by_name(&self.problem).map(|_| ())
    }

    /// Seed of repetition `rep`: the first eight bytes of a SHA-256 digest of
    /// the master seed, problem, strategy and repetition index.
    pub fn repetition_seed(&self, problem_slug: &str, rep: usize) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(problem_slug.as_bytes());
        h.update([0]);
        h.update(self.strategy.to_string().as_bytes());
        h.update([0]);
        h.update((rep as u64).to_le_bytes());
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// Directory name of a strategy: its string form with separators made path-safe.
pub fn strategy_dir(strategy: &Strategy) -> String {
    strategy
        .to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Log directory of one (problem, strategy) cell.
pub fn cell_dir(out_dir: &Path, problem: &ProblemDef, strategy: &Strategy) -> PathBuf {
    out_dir.join(problem.slug()).join(strategy_dir(strategy))
}

pub fn log_path(cell: &Path, rep: usize) -> PathBuf {
    cell.join(format!("rep_{rep:03}.jsonl"))
}

fn partial_path(cell: &Path, rep: usize) -> PathBuf {
    cell.join(format!("rep_{rep:03}.jsonl.partial"))
}

/// Receives each iteration as soon as it is evaluated.
trait RecordSink {
    fn push(&mut self, record: &RunRecord) -> Result<()>;
}

impl RecordSink for () {
    fn push(&mut self, _: &RunRecord) -> Result<()> {
        Ok(())
    }
}

struct FileSink {
    file: std::io::BufWriter<fs::File>,
    next_eval: usize,
}

impl RecordSink for FileSink {
    fn push(&mut self, record: &RunRecord) -> Result<()> {
        for p in &record.batch {
            let line = LogLine::new(record, self.next_eval, p);
            serde_json::to_writer(&mut self.file, &line)?;
            self.file.write_all(b"\n")?;
            self.next_eval += 1;
        }
        self.file.flush()?;
        Ok(())
    }
}

struct Archive {
    points: Vec<EvaluatedPoint>,
    keys: HashSet<Key>,
}

impl Archive {
    fn new() -> Self {
        Self { points: Vec::new(), keys: HashSet::new() }
    }

    fn contains(&self, x: &DesignVector) -> bool {
        self.keys.contains(&key(x))
    }

    fn push(&mut self, p: EvaluatedPoint) {
        self.keys.insert(key(&p.x));
        self.points.push(p);
    }

    fn front(&self) -> Vec<Vec<f64>> {
        let feasible: Vec<Vec<f64>> = self
            .points
            .iter()
            .filter(|p| p.viable && p.g.iter().all(|&g| g <= 0.0))
            .map(|p| p.f.clone())
            .collect();
        let n_f = self.points.first().map_or(0, |p| p.f.len());
        nondominated_within(&feasible, &vec![f64::INFINITY; n_f])
    }
}

fn record(iteration: usize, archive: &Archive, problem: &ProblemDef, batch: Vec<EvaluatedPoint>, times: (f64, f64)) -> RunRecord {
    RunRecord {
        iteration,
        n_evaluations: archive.points.len(),
        batch,
        front: archive.front(),
        delta_hv: problem.delta_hv(&archive.points),
        t_train_s: times.0,
        t_infill_s: times.1,
    }
}

fn evaluate_all(problem: &ProblemDef, xs: &[DesignVector]) -> Result<Vec<EvaluatedPoint>> {
    xs.iter().map(|x| problem.evaluate(x)).collect()
}

/// One optimization run with the given repetition seed, without disk output.
pub fn run_single(problem: &ProblemDef, cfg: &RunConfig, seed: u64) -> Result<Vec<RunRecord>> {
    run_with_sink(problem, cfg, seed, &mut ())
}

fn run_with_sink(problem: &ProblemDef, cfg: &RunConfig, seed: u64, sink: &mut dyn RecordSink) -> Result<Vec<RunRecord>> {
    let space = problem.space();
    let valid = space.enumerate_valid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut archive = Archive::new();
    let mut records = Vec::new();

    let n_doe = cfg.n_doe.unwrap_or_else(|| doe_size(&cfg.doe, space.n_vars()));
    let mut doe_batch = Vec::new();
    for extension in 0..=MAX_DOE_EXTENSIONS {
        let xs = hierarchical_sample(space, &valid, n_doe, seed.wrapping_add(extension as u64))?;
        for p in evaluate_all(problem, &xs)? {
            archive.push(p.clone());
            doe_batch.push(p);
        }
        if archive.points.iter().any(|p| p.viable) {
            break;
        }
        if extension == MAX_DOE_EXTENSIONS {
            return Err(Error::NoViablePoints);
        }
        warn!("{}: no viable point in the DoE, extending by {n_doe}", problem.name());
    }
    let doe_record = record(0, &archive, problem, doe_batch, (0.0, 0.0));
    sink.push(&doe_record)?;
    records.push(doe_record);

    let budget = archive.points.len() + cfg.n_infill;
    let mut iteration = 0;
    while archive.points.len() < budget {
        iteration += 1;
        let n_new = cfg.n_batch.min(budget - archive.points.len());

        let t_train = Instant::now();
        let surrogates = fit_surrogates(problem, cfg, &archive.points)?;
        let t_train_s = t_train.elapsed().as_secs_f64();

        let t_infill = Instant::now();
        let mut xs = match surrogates {
            Some(s) => propose(problem, cfg, &valid, &archive, s, n_new, &mut rng),
            None => Vec::new(),
        };
        backfill(space, &valid, &archive, &mut xs, n_new, &mut rng);
        let t_infill_s = t_infill.elapsed().as_secs_f64();

        let batch = evaluate_all(problem, &xs)?;
        for p in &batch {
            archive.push(p.clone());
        }
        let r = record(iteration, &archive, problem, batch, (t_train_s, t_infill_s));
        sink.push(&r)?;
        records.push(r);
    }
    Ok(records)
}

/// Fit the objective, constraint and viability models. `None` when too few
/// viable points exist to train a model.
fn fit_surrogates(problem: &ProblemDef, cfg: &RunConfig, archive: &[EvaluatedPoint]) -> Result<Option<Surrogates>> {
    let space = problem.space();
    let set = build_training_sets(space, archive, &cfg.strategy, &cfg.gp)?;
    let mut models = Vec::with_capacity(set.outputs.len());
    for y in &set.outputs {
        match Gp::fit(space, &set.x, y, &cfg.gp) {
            Ok(gp) => models.push(gp),
            Err(Error::TooFewPoints { .. }) => {
                warn!("{}: too few training points, sampling at random", problem.name());
                return Ok(None);
            }
            Err(e) => return Err(e),
        }
    }
    let constraints = models.split_off(problem.n_f());
    let pov = match (&cfg.strategy, set.labels) {
        (Strategy::Predict { model, integration }, Some((points, labels))) => {
            Some((PovModel::fit(space, &points, &labels, *model, &cfg.gp)?, *integration))
        }
        _ => None,
    };
    Ok(Some(Surrogates { objectives: models, constraints, pov }))
}

/// Optimize the ensemble infill problem and pick up to `n_new` unseen points.
fn propose(
    problem: &ProblemDef,
    cfg: &RunConfig,
    valid: &ValidDiscreteSet,
    archive: &Archive,
    surrogates: Surrogates,
    n_new: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DesignVector> {
    let space = problem.space();
    let viable_f: Vec<Vec<f64>> = archive.points.iter().filter(|p| p.viable).map(|p| p.f.clone()).collect();
    let infill = EnsembleInfill::new(space, surrogates, &viable_f, &cfg.infill);
    let result = optimize_infill(space, valid, &infill, &cfg.infill, rng);
    let batch = select_batch(&result.front, n_new, cfg.infill.crowding, |x| archive.contains(x), rng);

    let mut seen: HashSet<Key> = HashSet::new();
    let mut out = Vec::with_capacity(n_new);
    for &i in &batch.chosen {
        let mut x = result.front[i].x.clone();
        if cfg.infill.refine {
            let refined = space.repair(&refine_continuous(space, &infill, &result.front[i], &result.normalization));
            if !archive.contains(&refined) && !seen.contains(&key(&refined)) {
                x = refined;
            }
        }
        if !archive.contains(&x) && seen.insert(key(&x)) {
            out.push(x);
        }
    }
    out
}

/// Top `xs` up to `n` points with random unseen designs. When the space is
/// exhausted a repeated design is accepted so the budget stays exact.
fn backfill(
    space: &crate::space::DesignSpace,
    valid: &ValidDiscreteSet,
    archive: &Archive,
    xs: &mut Vec<DesignVector>,
    n: usize,
    rng: &mut ChaCha8Rng,
) {
    while xs.len() < n {
        let mut pick = None;
        for _ in 0..BACKFILL_TRIES {
            let x = random_sample(space, valid, 1, rng).remove(0);
            if !archive.contains(&x) && !xs.iter().any(|y| key(y) == key(&x)) {
                pick = Some(x);
                break;
            }
        }
        let x = pick.unwrap_or_else(|| random_sample(space, valid, 1, rng).remove(0));
        xs.push(x);
    }
}

/// Run `task` for every index in `0..n` on up to `threads` workers and
/// return the results in index order.
fn parallel_map<T: Send>(n: usize, threads: usize, task: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = task(i);
                *slots[i].lock().expect("unpoisoned slot") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("unpoisoned slot").expect("every index ran")).collect()
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run every repetition, in parallel across the available cores, writing one
/// JSON-lines log per repetition when an output directory is set.
/// Repetitions whose log already exists are read back instead of being run
/// again.
pub fn run_bo(cfg: &RunConfig) -> Result<Vec<Vec<RunRecord>>> {
    cfg.validate()?;
    let problem = by_name(&cfg.problem)?;
    let seed = |rep| cfg.repetition_seed(problem.slug(), rep);
    let Some(out_dir) = &cfg.out_dir else {
        return parallel_map(cfg.repetitions, default_threads(), |rep| run_single(&problem, cfg, seed(rep)))
            .into_iter()
            .collect();
    };

    let cell = cell_dir(out_dir, &problem, &cfg.strategy);
    fs::create_dir_all(&cell)?;
    campaign::write_cell_info(&cell, &problem, &cfg.strategy)?;
    let run_rep = |rep: usize| -> Result<Vec<RunRecord>> {
        let done = log_path(&cell, rep);
        if done.exists() {
            info!("{} {} rep {rep}: log exists, skipping", problem.name(), cfg.strategy);
            return Ok(records_from_log(&read_log(&done)?));
        }
        let partial = partial_path(&cell, rep);
        let mut sink = FileSink { file: std::io::BufWriter::new(fs::File::create(&partial)?), next_eval: 0 };
        let records = run_with_sink(&problem, cfg, seed(rep), &mut sink)?;
        drop(sink);
        fs::rename(&partial, &done)?;
        info!(
            "{} {} rep {rep}: final delta HV {:.4}",
            problem.name(),
            cfg.strategy,
            records.last().map_or(1.0, |r| r.delta_hv)
        );
        Ok(records)
    };
    parallel_map(cfg.repetitions, default_threads(), run_rep).into_iter().collect()
}
