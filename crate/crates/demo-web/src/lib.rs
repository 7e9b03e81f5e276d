//! WebAssembly bindings for the static page in `www/`.

use cbwk::baseline::{run_linucb, LinUcbConfig};
use cbwk::env::{make_appendix_c_env, EnvironmentSpec};
use cbwk::harness::{environment_opt, AlgorithmSpec};
use cbwk::oracles::OracleKind;
use cbwk::policy::{run_squarecbwk, PolicyConfig};
use cbwk::twostage::{run_twostage, TwoStageConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

fn js(e: cbwk::CbwkError) -> JsError {
    JsError::new(&e.to_string())
}

fn environment(m: usize, arms: usize, horizon: usize, budget_ratio: f64) -> Result<EnvironmentSpec, JsError> {
    if !(budget_ratio > 0.0 && budget_ratio <= 1.0) {
        return Err(JsError::new("budget ratio must lie in (0, 1]"));
    }
    make_appendix_c_env(m, arms, 4, 0.2)
        .and_then(|e| e.with_budget(horizon, budget_ratio * horizon as f64))
        .map_err(js)
}

/// Inverse-gap weights for a score vector.
#[wasm_bindgen]
pub fn igw(scores: &[f64], gamma: f64) -> Result<Vec<f64>, JsError> {
    if scores.is_empty() || scores.iter().any(|s| !s.is_finite()) || gamma.is_nan() || gamma < 0.0 {
        return Err(JsError::new("need finite scores and a non-negative gamma"));
    }
    Ok(cbwk::policy::igw_distribution(scores, gamma))
}

/// Curves from one run on the benchmark environment.
#[wasm_bindgen]
pub struct Simulation {
    regret: Vec<f64>,
    lambda: Vec<f64>,
    arms: Vec<u32>,
    stopping_time: usize,
    opt: f64,
    final_regret: f64,
    notes: String,
}

#[wasm_bindgen]
impl Simulation {
    /// `t * OPT` minus collected reward, one entry per played round.
    #[wasm_bindgen(getter)]
    pub fn regret(&self) -> Vec<f64> {
        self.regret.clone()
    }

    /// Total dual weight in each round.
    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> Vec<f64> {
        self.lambda.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn arms(&self) -> Vec<u32> {
        self.arms.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn stopping_time(&self) -> usize {
        self.stopping_time
    }

    #[wasm_bindgen(getter)]
    pub fn opt(&self) -> f64 {
        self.opt
    }

    /// `T * OPT` minus total reward, counting the rounds after stopping.
    #[wasm_bindgen(getter)]
    pub fn final_regret(&self) -> f64 {
        self.final_regret
    }

    #[wasm_bindgen(getter)]
    pub fn notes(&self) -> String {
        self.notes.clone()
    }
}

/// Runs `algorithm` (`squarecbwk:glmtron`, `squarecbwk:ogd`,
/// `twostage:glmtron`, `linucb`, ...) once.
#[wasm_bindgen]
pub fn simulate(
    algorithm: &str,
    m: usize,
    arms: usize,
    horizon: usize,
    budget_ratio: f64,
    seed: u64,
) -> Result<Simulation, JsError> {
    let env = environment(m, arms, horizon, budget_ratio)?;
    let alg = AlgorithmSpec::parse(algorithm, OracleKind::GlmtronNewton)
        .ok_or_else(|| JsError::new(&format!("unknown algorithm {algorithm}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = match alg {
        AlgorithmSpec::SquareCbwk(oracle) => run_squarecbwk(&env, &PolicyConfig::with_oracle(oracle), &mut rng),
        AlgorithmSpec::TwoStage(oracle) => run_twostage(
            &env,
            &TwoStageConfig::default(),
            &PolicyConfig::with_oracle(oracle),
            &mut rng,
        ),
        AlgorithmSpec::LinUcb => run_linucb(&env, &LinUcbConfig::default(), &mut rng),
    }
    .map_err(js)?;
    let opt = environment_opt(&env).map_err(js)?;
    Ok(Simulation {
        regret: trace.regret_curve(opt),
        lambda: trace.rounds.iter().map(|r| r.lambda.iter().sum()).collect(),
        arms: trace.rounds.iter().map(|r| r.arm as u32).collect(),
        stopping_time: trace.stopping_time,
        opt,
        final_regret: cbwk::trace::realized_regret(&trace, opt, horizon),
        notes: trace.notes.join("\n"),
    })
}

/// Per-round OPT for each budget ratio. With `null_arm` the last arm
/// becomes free and rewardless, which keeps small budgets feasible;
/// without it infeasible ratios come back as NaN.
#[wasm_bindgen]
pub fn opt_curve(m: usize, arms: usize, null_arm: bool, ratios: &[f64]) -> Result<Vec<f64>, JsError> {
    const HORIZON: usize = 1000;
    ratios
        .iter()
        .map(|&r| {
            let mut env = environment(m, arms, HORIZON, r)?;
            if null_arm {
                env = env.with_null_arm();
            }
            match environment_opt(&env) {
                Ok(v) => Ok(v),
                Err(cbwk::CbwkError::Infeasible(_)) => Ok(f64::NAN),
                Err(e) => Err(js(e)),
            }
        })
        .collect()
}
