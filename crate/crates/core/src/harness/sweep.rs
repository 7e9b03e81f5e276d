use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{cell_env, AlgorithmSpec, ExperimentConfig};
use crate::baseline::run_linucb;
use crate::env::EnvironmentSpec;
use crate::error::{CbwkError, Result};
use crate::lp::{context_lp, LpStatus};
use crate::policy::{run_squarecbwk, PolicyConfig};
use crate::trace::{realized_regret, RunTrace};
use crate::twostage::run_twostage;

/// Name of the per-cell generator, recorded next to every result file.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9), stream = value_index * algorithms + algorithm_index";

/// Per-round value of the best static policy over the environment's
/// context distribution.
pub fn environment_opt(env: &EnvironmentSpec) -> Result<f64> {
    let support = env.context_support();
    let mut weights = Vec::with_capacity(support.len());
    let mut rewards = Vec::with_capacity(support.len());
    let mut costs = Vec::with_capacity(support.len());
    for (w, f) in support {
        let (r, c) = env.expected_table(f)?;
        weights.push(w);
        rewards.push(r);
        costs.push(c);
    }
    let rate = env.instance.budget_rate();
    let sol = context_lp(&weights, &rewards, &costs, &vec![rate; env.resources()])?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Infeasible => Err(CbwkError::Infeasible(format!(
            "no static policy keeps expected consumption within B/T = {rate}"
        ))),
        other => Err(CbwkError::Numerical(format!("static program ended with {other:?}"))),
    }
}

/// Runs one algorithm on one environment.
pub fn run_algorithm(
    algorithm: AlgorithmSpec,
    env: &EnvironmentSpec,
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RunTrace> {
    match algorithm {
        AlgorithmSpec::SquareCbwk(oracle) => {
            let policy = PolicyConfig {
                oracle,
                ..config.policy.clone()
            };
            run_squarecbwk(env, &policy, rng)
        }
        AlgorithmSpec::TwoStage(oracle) => {
            let policy = PolicyConfig {
                oracle,
                ..config.policy.clone()
            };
            run_twostage(env, &config.twostage, &policy, rng)
        }
        AlgorithmSpec::LinUcb => run_linucb(env, &config.linucb, rng),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub regret: f64,
    pub tau: usize,
    pub total_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub algorithm: String,
    pub sweep_param: String,
    pub sweep_value: usize,
    pub seed: u64,
    /// `Err` holds the message of a failed cell.
    pub outcome: std::result::Result<CellOutcome, String>,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: String,
    pub sweep_value: usize,
    /// Successful seeds.
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single seed.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sweep_param: String,
    /// Ordered by algorithm (as listed), sweep value, then seed.
    pub rows: Vec<Row>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }

    /// Mean and sample standard deviation of the regret per
    /// (algorithm, value), in row order.
    pub fn summaries(&self) -> Vec<Summary> {
        let mut out: Vec<(Summary, Vec<f64>)> = Vec::new();
        for row in &self.rows {
            let idx = match out
                .iter()
                .position(|(s, _)| s.algorithm == row.algorithm && s.sweep_value == row.sweep_value)
            {
                Some(i) => i,
                None => {
                    out.push((
                        Summary {
                            algorithm: row.algorithm.clone(),
                            sweep_value: row.sweep_value,
                            count: 0,
                            mean: f64::NAN,
                            std: f64::NAN,
                        },
                        vec![],
                    ));
                    out.len() - 1
                }
            };
            if let Ok(o) = &row.outcome {
                out[idx].1.push(o.regret);
            }
        }
        out.into_iter()
            .map(|(mut s, xs)| {
                s.count = xs.len();
                if !xs.is_empty() {
                    let n = xs.len() as f64;
                    s.mean = xs.iter().sum::<f64>() / n;
                    s.std = if xs.len() > 1 {
                        (xs.iter().map(|x| (x - s.mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                    } else {
                        0.0
                    };
                }
                s
            })
            .collect()
    }
}

struct Cell {
    algorithm: usize,
    value: usize,
    replicate: usize,
}

fn run_cell(config: &ExperimentConfig, cell: &Cell) -> Row {
    let algorithm = config.algorithms[cell.algorithm];
    let param = config.sweep.param;
    let value = config.sweep.values[cell.value];
    let seed = config.base_seed + cell.replicate as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((cell.value * config.algorithms.len() + cell.algorithm) as u64);

    let start = crate::trace::Stopwatch::start();
    let outcome = (|| {
        let env = cell_env(&config.env, param, value).build()?;
        let opt = environment_opt(&env)?;
        let trace = run_algorithm(algorithm, &env, config, &mut rng)?;
        Ok::<_, CbwkError>(CellOutcome {
            regret: realized_regret(&trace, opt, env.instance.horizon),
            tau: trace.stopping_time,
            total_reward: trace.total_reward,
        })
    })()
    .map_err(|e| e.to_string());
    let runtime_ms = config
        .record_runtime
        .then(|| start.elapsed().as_secs_f64() * 1e3);
    Row {
        algorithm: algorithm.to_string(),
        sweep_param: param.name().to_string(),
        sweep_value: value,
        seed,
        outcome,
        runtime_ms,
    }
}

/// Runs every (algorithm, value, seed) cell on a pool of `parallelism`
/// threads. Rows come back in canonical order whatever the pool size.
pub fn run_sweep(config: &ExperimentConfig, parallelism: usize) -> Result<SweepResult> {
    if parallelism == 0 {
        return Err(CbwkError::config("parallelism must be at least 1"));
    }
    if config.algorithms.is_empty() {
        return Err(CbwkError::config("no algorithms to run"));
    }
    let mut cells = Vec::new();
    for algorithm in 0..config.algorithms.len() {
        for value in 0..config.sweep.values.len() {
            for replicate in 0..config.seed_count {
                cells.push(Cell {
                    algorithm,
                    value,
                    replicate,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| CbwkError::Numerical(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| cells.par_iter().map(|c| run_cell(config, c)).collect());
    Ok(SweepResult {
        sweep_param: config.sweep.param.name().to_string(),
        rows,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}
