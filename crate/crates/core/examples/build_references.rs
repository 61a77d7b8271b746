//! Regenerates the reference tables in `data/references/`.
//!
//! Each problem is optimized by NSGA-II (10 seeds, 10^5 evaluations each)
//! with failed evaluations treated as infeasible. Single-objective optima are
//! polished by Nelder-Mead over the continuous variables; their scale is the
//! distance from the optimum to the 90% quantile of viable sampled values.
//! Multi-objective fronts are merged, filtered and thinned by crowding.
//!
//! Usage: `cargo run --release -p hcbo --example build_references [slug..]`

use std::fs;
use std::path::PathBuf;

use hcbo::infill::nsga2::{crowding_distance, nsga2};
use hcbo::infill::{Candidate, InfillObjectives, NsgaConfig};
use hcbo::metrics::nondominated_within;
use hcbo::optim::NelderMead;
use hcbo::problems::{registry, ProblemDef, Reference, REFERENCE_QUANTILE};
use hcbo::sampling::hierarchical_sample;
use hcbo::space::DesignVector;
use hcbo::stats::quantile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;
const POP_SIZE: usize = 100;
const GENERATIONS: usize = 999;
const SCALE_SAMPLES: usize = 10_000;
const MAX_FRONT: usize = 200;
const POLISH_STARTS: usize = 5;

/// The true problem seen as an optimization target; failure adds a unit
/// constraint violation.
struct Exact<'a>(&'a ProblemDef);

impl InfillObjectives for Exact<'_> {
    fn n_objectives(&self) -> usize {
        self.0.n_f()
    }

    fn evaluate(&self, x: &DesignVector) -> Candidate {
        let p = self.0.evaluate_repaired(x);
        if p.viable {
            let mut g = p.g.clone();
            g.push(0.0);
            Candidate::new(x.clone(), p.f, g, 1.0)
        } else {
            let mut g = vec![0.0; self.0.n_g()];
            g.push(1.0);
            Candidate::new(x.clone(), vec![f64::NAN; self.0.n_f()], g, 1.0)
        }
    }
}

fn feasible_f(p: &ProblemDef, x: &DesignVector) -> Option<Vec<f64>> {
    let e = p.evaluate_repaired(x);
    (e.viable && e.g.iter().all(|&g| g <= 0.0)).then_some(e.f)
}

/// Nelder-Mead over the active continuous variables in unit coordinates.
fn polish(p: &ProblemDef, x0: &DesignVector) -> (DesignVector, f64) {
    let space = p.space();
    let bounds = space.continuous_bounds();
    let free: Vec<usize> =
        (0..bounds.len()).filter(|&i| x0.active[space.continuous_positions()[i]]).collect();
    let start = feasible_f(p, x0).map_or(f64::INFINITY, |f| f[0]);
    if free.is_empty() {
        return (x0.clone(), start);
    }
    let to_x = |u: &[f64]| {
        let mut x = x0.clone();
        for (k, &i) in free.iter().enumerate() {
            let (lo, hi) = bounds[i];
            x.continuous[i] = lo + u[k] * (hi - lo);
        }
        space.repair(&x)
    };
    let u0: Vec<f64> = free
        .iter()
        .map(|&i| {
            let (lo, hi) = bounds[i];
            (x0.continuous[i] - lo) / (hi - lo)
        })
        .collect();
    let nm = NelderMead { max_evals: 4000, f_tol: 1e-14, initial_step: 0.02 };
    let objective = |u: &[f64]| feasible_f(p, &to_x(u)).map_or(f64::INFINITY, |f| f[0]);
    let lower = vec![0.0; free.len()];
    let upper = vec![1.0; free.len()];
    let mut best = (x0.clone(), start);
    let mut u = u0;
    for _ in 0..3 {
        let m = nm.minimize(objective, &u, &lower, &upper);
        if m.value < best.1 {
            best = (to_x(&m.x), m.value);
        }
        u = m.x;
    }
    best
}

/// Drop the most crowded points until at most `max` remain.
fn thin(mut front: Vec<Vec<f64>>, max: usize) -> Vec<Vec<f64>> {
    while front.len() > max {
        let idx: Vec<usize> = (0..front.len()).collect();
        let d = crowding_distance(&front, &idx);
        let worst = (0..front.len()).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        front.remove(worst);
    }
    front.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    front
}

fn build(p: &ProblemDef) -> Reference {
    let valid = p.space().enumerate_valid().expect("enumerable");
    let cfg = NsgaConfig { pop_size: POP_SIZE, n_generations: GENERATIONS, ..NsgaConfig::default() };
    let mut candidates: Vec<(DesignVector, Vec<f64>)> = Vec::new();
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = nsga2(p.space(), &valid, &Exact(p), &cfg, &mut rng);
        for c in res.front.into_iter().filter(|c| c.cv <= 0.0) {
            candidates.push((c.x, c.raw));
        }
    }

    if p.n_f() == 1 {
        candidates.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
        candidates.dedup_by(|a, b| a.0.discrete == b.0.discrete);
        let mut f_opt = f64::INFINITY;
        for (x, _) in candidates.iter().take(POLISH_STARTS) {
            let (_, f) = polish(p, x);
            f_opt = f_opt.min(f);
        }
        let xs = hierarchical_sample(p.space(), &valid, SCALE_SAMPLES, 0).expect("sample");
        let viable: Vec<f64> = xs.iter().filter_map(|x| feasible_f(p, x)).map(|f| f[0]).collect();
        let scale = quantile(&viable, REFERENCE_QUANTILE) - f_opt;
        Reference::Optimum { f_opt, scale }
    } else {
        let all: Vec<Vec<f64>> = candidates.into_iter().map(|c| c.1).collect();
        let huge = vec![f64::INFINITY; p.n_f()];
        let front = thin(nondominated_within(&all, &huge), MAX_FRONT);
        let ref_point = Reference::offset_nadir(&front);
        Reference::front(front, ref_point)
    }
}

fn main() {
    let wanted: Vec<String> = std::env::args().skip(1).collect();
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/references");
    for p in registry() {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == p.slug()) {
            continue;
        }
        let t = std::time::Instant::now();
        let r = build(&p);
        let header = format!("# {} reference, generated by examples/build_references.rs\n", p.name());
        fs::write(dir.join(format!("{}.txt", p.slug())), header + &r.to_table()).expect("write table");
        match &r {
            Reference::Optimum { f_opt, scale } => {
                println!("{:22} f_opt={f_opt:.6} scale={scale:.4} ({:.0}s)", p.name(), t.elapsed().as_secs_f64())
            }
            Reference::Front { points, ref_point, hypervolume } => println!(
                "{:22} front={} ref={ref_point:?} hv={hypervolume:.4} ({:.0}s)",
                p.name(),
                points.len(),
                t.elapsed().as_secs_f64()
            ),
        }
    }
}
