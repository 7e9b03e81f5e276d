//! LinUCB with knapsacks: optimistic rewards, pessimistic costs, the same
//! dual prices and stopping rule as SquareCBwK, greedy arm choice.


use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dual::DualState;
use crate::env::{ArmFeatures, EnvironmentSpec};
use crate::error::{check_len, CbwkError, Result};
use crate::policy::{greedy_arm, lagrangian_scores};
use crate::trace::{BudgetLedger, ExitReason, Phase, RoundRecord, RunTrace, Stopwatch};

#[derive(Debug, Clone, PartialEq)]
pub struct LinUcbConfig {
    /// Multiplier on the confidence width `sqrt(m log(1 + t))`.
    pub width: f64,
    /// Dual radius; `None` uses `T / B`.
    pub radius: Option<f64>,
}

impl Default for LinUcbConfig {
    fn default() -> Self {
        Self {
            width: 1.0,
            radius: None,
        }
    }
}

/// Ridge regression (regularizer 1) over a shared design for several
/// targets.
#[derive(Debug, Clone)]
struct Ridge {
    inverse: DMatrix<f64>,
    /// One `sum y x` accumulator per target.
    moments: Vec<DVector<f64>>,
}

impl Ridge {
    fn new(dim: usize, targets: usize) -> Self {
        Self {
            inverse: DMatrix::identity(dim, dim),
            moments: vec![DVector::zeros(dim); targets],
        }
    }

    fn estimate(&self, target: usize, x: &DVector<f64>) -> f64 {
        (&self.inverse * &self.moments[target]).dot(x)
    }

    /// `||x||` in the inverse design norm.
    fn width(&self, x: &DVector<f64>) -> f64 {
        (&self.inverse * x).dot(x).max(0.0).sqrt()
    }

    fn update(&mut self, x: &DVector<f64>, ys: &[f64]) {
        let v = &self.inverse * x;
        let denom = 1.0 + v.dot(x);
        self.inverse.ger(-1.0 / denom, &v, &v, 1.0);
        for (m, y) in self.moments.iter_mut().zip(ys) {
            m.axpy(*y, x, 1.0);
        }
    }
}

/// Learner state for one LinUCB run.
#[derive(Debug, Clone)]
pub struct LinUcbState {
    reward: Ridge,
    cost: Ridge,
    dual: DualState,
    width: f64,
    budget_rate: f64,
    null_arm: Option<usize>,
    reward_dim: usize,
    cost_dim: usize,
    rounds: usize,
}

impl LinUcbState {
    pub fn new(env: &EnvironmentSpec, config: &LinUcbConfig) -> Result<Self> {
        if !(config.width >= 0.0 && config.width.is_finite()) {
            return Err(CbwkError::config(format!(
                "confidence multiplier must be finite and >= 0, got {}",
                config.width
            )));
        }
        let inst = env.instance;
        let radius = config.radius.unwrap_or(inst.horizon as f64 / inst.budget);
        Ok(Self {
            reward: Ridge::new(env.reward_dim(), 1),
            cost: Ridge::new(env.cost_dim(), env.resources()),
            dual: DualState::new(env.resources(), radius, inst.horizon)?,
            width: config.width,
            budget_rate: inst.budget_rate(),
            null_arm: env.null_arm.then(|| env.arms() - 1),
            reward_dim: env.reward_dim(),
            cost_dim: env.cost_dim(),
            rounds: 0,
        })
    }

    fn beta(&self, dim: usize) -> f64 {
        self.width * (dim as f64 * (1.0 + (self.rounds + 1) as f64).ln()).sqrt()
    }

    /// Reward UCBs and cost LCBs for every arm.
    pub fn bounds(&self, features: &ArmFeatures) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let (br, bc) = (self.beta(self.reward_dim), self.beta(self.cost_dim));
        let d = self.cost.moments.len();
        let mut ucb = Vec::with_capacity(features.arms());
        let mut lcb = Vec::with_capacity(features.arms());
        for a in 0..features.arms() {
            if Some(a) == self.null_arm {
                ucb.push(0.0);
                lcb.push(vec![0.0; d]);
                continue;
            }
            check_len("reward features", self.reward_dim, features.reward[a].len())?;
            check_len("cost features", self.cost_dim, features.cost[a].len())?;
            let xr = DVector::from_column_slice(&features.reward[a]);
            let xc = DVector::from_column_slice(&features.cost[a]);
            ucb.push(self.reward.estimate(0, &xr) + br * self.reward.width(&xr));
            let w = bc * self.cost.width(&xc);
            lcb.push((0..d).map(|j| self.cost.estimate(j, &xc) - w).collect());
        }
        Ok((ucb, lcb))
    }

    pub fn observe(&mut self, features: &ArmFeatures, arm: usize, reward: f64, cost: &[f64]) -> Result<()> {
        if Some(arm) != self.null_arm {
            self.reward.update(&DVector::from_column_slice(&features.reward[arm]), &[reward]);
            self.cost.update(&DVector::from_column_slice(&features.cost[arm]), cost);
        }
        self.rounds += 1;
        self.dual.update(cost, self.budget_rate)
    }
}

pub fn run_linucb<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    config: &LinUcbConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    let start = Stopwatch::start();
    let inst = env.instance;
    let mut state = LinUcbState::new(env, config)?;
    let mut trace = RunTrace::new(inst.horizon, inst.budget, inst.resources);
    trace.radius = Some(state.dual.radius());
    let mut ledger = BudgetLedger::new(inst.budget, inst.resources);
    for t in 1..=inst.horizon {
        let features = env.draw_context(rng);
        let (ucb, lcb) = state.bounds(&features)?;
        let lambda = state.dual.lambda();
        let scores = lagrangian_scores(&ucb, &lcb, &lambda, state.budget_rate);
        let arm = greedy_arm(&scores);
        let outcome = env.sample_outcome(&features, arm, rng)?;
        let exhausted = ledger.charge(&outcome.cost);
        state.observe(&features, arm, outcome.reward, &outcome.cost)?;
        let mut probabilities = vec![0.0; ucb.len()];
        probabilities[arm] = 1.0;
        trace.push(RoundRecord {
            round: t,
            phase: Phase::Policy,
            predicted_reward: ucb,
            predicted_cost: lcb,
            lambda,
            scores,
            probabilities,
            arm,
            outcome,
        });
        if let Some(resource) = exhausted {
            trace.exit = ExitReason::Budget { resource };
            break;
        }
    }
    trace.diagnostics.reward_updates = trace
        .rounds
        .iter()
        .filter(|r| Some(r.arm) != state.null_arm)
        .count();
    trace.diagnostics.cost_updates = trace.diagnostics.reward_updates;
    trace.duration = start.elapsed();
    Ok(trace)
}
