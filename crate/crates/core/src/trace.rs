//! Per-round records of a policy run and regret accounting.

use std::time::Duration;

use crate::env::{ArmFeatures, RoundOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Forced pulls during uniform exploration.
    Explore,
    /// Pulls with contexts recorded for the static program estimate.
    Collect,
    /// Rounds played by a learning policy.
    Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub phase: Phase,
    /// Predicted rewards per arm; empty outside policy rounds.
    pub predicted_reward: Vec<f64>,
    /// Predicted consumption per arm.
    pub predicted_cost: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub scores: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub arm: usize,
    pub outcome: RoundOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitReason {
    /// All `T` rounds were played.
    Horizon,
    /// Cumulative consumption of `resource` reached `B - 1`.
    Budget { resource: usize },
    /// The budget ran out before exploration finished.
    ExplorationBudget { resource: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub reward_updates: usize,
    pub cost_updates: usize,
    /// Rebuilds of an oracle's inverse design matrix.
    pub reinitializations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub horizon: usize,
    pub budget: f64,
    pub rounds: Vec<RoundRecord>,
    /// Features seen each round; empty unless requested.
    pub features: Vec<ArmFeatures>,
    /// Stopping time `tau`: the last round played.
    pub stopping_time: usize,
    pub exit: ExitReason,
    pub total_reward: f64,
    pub cumulative_cost: Vec<f64>,
    pub duration: Duration,
    pub diagnostics: Diagnostics,
    /// Dual radius used by the policy phase, when one ran.
    pub radius: Option<f64>,
    pub gamma: Option<f64>,
    /// Phase-one estimates of a two-stage run.
    pub estimate: Option<RadiusEstimate>,
    /// Non-fatal warnings raised while running.
    pub notes: Vec<String>,
}

/// What the exploration phase learned about the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    /// Exploration length per arm.
    pub t0: usize,
    /// Optimal value of the empirical program.
    pub opt_hat: f64,
    /// Estimation-error radius.
    pub error_radius: f64,
    /// Dual radius handed to the policy phase.
    pub z: f64,
}

impl RunTrace {
    pub fn new(horizon: usize, budget: f64, resources: usize) -> Self {
        Self {
            horizon,
            budget,
            rounds: Vec::new(),
            features: Vec::new(),
            stopping_time: 0,
            exit: ExitReason::Horizon,
            total_reward: 0.0,
            cumulative_cost: vec![0.0; resources],
            duration: Duration::ZERO,
            diagnostics: Diagnostics::default(),
            radius: None,
            gamma: None,
            estimate: None,
            notes: Vec::new(),
        }
    }

    /// Appends a round and updates the running totals.
    pub fn push(&mut self, record: RoundRecord) {
        self.total_reward += record.outcome.reward;
        self.cumulative_cost
            .iter_mut()
            .zip(&record.outcome.cost)
            .for_each(|(c, x)| *c += x);
        self.stopping_time = record.round;
        self.rounds.push(record);
    }

    /// `t * OPT - sum_{s <= t} r_s` for every recorded round.
    pub fn regret_curve(&self, opt_per_round: f64) -> Vec<f64> {
        let mut acc = 0.0;
        self.rounds
            .iter()
            .map(|r| {
                acc += r.outcome.reward;
                r.round as f64 * opt_per_round - acc
            })
            .collect()
    }
}

/// Wall-clock timer that reads zero where the platform has no clock
/// (bare `wasm32-unknown-unknown`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch {
            #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.start.elapsed();
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        return Duration::ZERO;
    }
}

/// `T * OPT - sum_{t <= tau} r_t`.
pub fn realized_regret(trace: &RunTrace, opt_per_round: f64, horizon: usize) -> f64 {
    horizon as f64 * opt_per_round - trace.total_reward
}

/// Tracks consumption against a budget and reports the first resource whose
/// cumulative use reaches `B - 1`.
#[derive(Debug, Clone)]
pub struct BudgetLedger {
    threshold: f64,
    spent: Vec<f64>,
}

impl BudgetLedger {
    pub fn new(budget: f64, resources: usize) -> Self {
        Self {
            threshold: budget - 1.0,
            spent: vec![0.0; resources],
        }
    }

    pub fn charge(&mut self, cost: &[f64]) -> Option<usize> {
        self.spent.iter_mut().zip(cost).for_each(|(s, c)| *s += c);
        self.spent.iter().position(|&s| s >= self.threshold)
    }

    pub fn spent(&self) -> &[f64] {
        &self.spent
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(round: usize, reward: f64) -> RoundRecord {
        RoundRecord {
            round,
            phase: Phase::Policy,
            predicted_reward: vec![],
            predicted_cost: vec![],
            lambda: vec![],
            scores: vec![],
            probabilities: vec![1.0],
            arm: 0,
            outcome: RoundOutcome {
                reward,
                cost: vec![0.0],
            },
        }
    }

    #[test]
    fn regret_arithmetic() {
        let mut t = RunTrace::new(1000, 1000.0, 1);
        assert_eq!(realized_regret(&t, 0.55, 1000), 550.0);
        for r in 1..=1000 {
            t.push(record(r, 0.5));
        }
        assert!((realized_regret(&t, 0.55, 1000) - 50.0).abs() < 1e-9);
        assert!((realized_regret(&t, 0.5, 1000)).abs() < 1e-9);
        let curve = t.regret_curve(0.55);
        assert!((curve[999] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn ledger_fires_at_threshold() {
        let mut l = BudgetLedger::new(10.0, 2);
        for _ in 0..8 {
            assert_eq!(l.charge(&[1.0, 0.5]), None);
        }
        assert_eq!(l.charge(&[1.0, 0.5]), Some(0));
    }
}
