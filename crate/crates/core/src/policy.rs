//! SquareCBwK: regression-oracle predictions, Lagrangian scores,
//! inverse-gap-weighted sampling and an exponentiated-gradient dual.


use rand::Rng;

use crate::dual::DualState;
use crate::env::{ArmFeatures, EnvironmentSpec, RoundOutcome};
use crate::error::{check_len, CbwkError, Result};
use crate::oracles::{OnlinePredictor, OracleBoundSpec, OracleKind, VectorPredictor};
use crate::trace::{BudgetLedger, ExitReason, Phase, RoundRecord, RunTrace, Stopwatch};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    /// Learning rate; `None` uses [`gamma_default`].
    pub gamma: Option<f64>,
    /// Dual radius `Z`; `None` uses `T / B`.
    pub radius: Option<f64>,
    pub oracle: OracleKind,
    /// Step multiplier for gradient-descent oracles.
    pub eta_scale: f64,
    /// Keep every round's arm features in the trace.
    pub record_features: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            gamma: None,
            radius: None,
            oracle: OracleKind::GlmtronNewton,
            eta_scale: 1.0,
            record_features: false,
        }
    }
}

impl PolicyConfig {
    pub fn with_oracle(oracle: OracleKind) -> Self {
        Self {
            oracle,
            ..Self::default()
        }
    }
}

/// `sqrt(K T / (Reg_r(T) + (Z + 1)^2 Reg_c(T) + 4 log(2T)))`.
pub fn gamma_default(arms: usize, horizon: usize, bounds: &OracleBoundSpec, radius: f64) -> f64 {
    let t = horizon.max(1) as f64;
    let denom = bounds.reward_regret(t)
        + (radius + 1.0).powi(2) * bounds.cost_regret(t)
        + 4.0 * (2.0 * t).ln();
    (arms as f64 * t / denom).sqrt()
}

/// `r_a + <lambda, B/T - c_a>` for every arm.
pub fn lagrangian_scores(
    rewards: &[f64],
    costs: &[Vec<f64>],
    lambda: &[f64],
    budget_rate: f64,
) -> Vec<f64> {
    rewards
        .iter()
        .zip(costs)
        .map(|(r, c)| {
            r + lambda
                .iter()
                .zip(c)
                .map(|(l, cj)| l * (budget_rate - cj))
                .sum::<f64>()
        })
        .collect()
}

/// Index of the largest score, lowest index on ties.
pub fn greedy_arm(scores: &[f64]) -> usize {
    let mut best = 0;
    for (a, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = a;
        }
    }
    best
}

/// Inverse-gap weighting: every non-greedy arm gets `1 / (K + gamma * gap)`
/// and the greedy arm keeps the remaining mass.
pub fn igw_distribution(scores: &[f64], gamma: f64) -> Vec<f64> {
    let k = scores.len();
    if k == 0 {
        return vec![];
    }
    let b = greedy_arm(scores);
    let mut p: Vec<f64> = scores
        .iter()
        .map(|&s| 1.0 / (k as f64 + gamma * (scores[b] - s)))
        .collect();
    p[b] = 0.0;
    let rest: f64 = p.iter().sum();
    p[b] = 1.0 - rest;
    p
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_arm<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    // rounding left u above the total; take the last arm with mass
    probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probabilities.len() - 1)
}

/// Everything the learner computes before pulling.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub predicted_reward: Vec<f64>,
    pub predicted_cost: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub scores: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Learner state for one run of SquareCBwK.
#[derive(Debug, Clone)]
pub struct SquareCbwk {
    reward_oracle: OnlinePredictor,
    cost_oracle: VectorPredictor,
    dual: DualState,
    gamma: f64,
    budget_rate: f64,
    arms: usize,
    null_arm: Option<usize>,
}

impl SquareCbwk {
    /// Fresh oracles and dual for a run of `horizon` rounds with `budget`.
    pub fn new(
        env: &EnvironmentSpec,
        horizon: usize,
        budget: f64,
        config: &PolicyConfig,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(CbwkError::config("policy horizon must be positive"));
        }
        let radius = config.radius.unwrap_or(horizon as f64 / budget);
        let bounds = OracleBoundSpec::for_kind(config.oracle, env.reward_dim(), env.cost_dim());
        let gamma = config
            .gamma
            .unwrap_or_else(|| gamma_default(env.arms(), horizon, &bounds, radius));
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(CbwkError::config(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        Ok(Self {
            reward_oracle: OnlinePredictor::new(config.oracle, env.reward_dim(), env.link)
                .with_eta_scale(config.eta_scale),
            cost_oracle: VectorPredictor::new(
                config.oracle,
                env.cost_dim(),
                env.resources(),
                env.link,
            )
            .with_eta_scale(config.eta_scale),
            dual: DualState::new(env.resources(), radius, horizon)?,
            gamma,
            budget_rate: budget / horizon as f64,
            arms: env.arms(),
            null_arm: env.null_arm.then(|| env.arms() - 1),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn radius(&self) -> f64 {
        self.dual.radius()
    }

    pub fn dual(&self) -> &DualState {
        &self.dual
    }

    pub fn reward_updates(&self) -> usize {
        self.reward_oracle.steps()
    }

    pub fn cost_updates(&self) -> usize {
        self.cost_oracle.coordinates().first().map_or(0, |c| c.steps())
    }

    pub fn reinitializations(&self) -> usize {
        self.reward_oracle.reinitializations() + self.cost_oracle.reinitializations()
    }

    pub fn decide(&self, features: &ArmFeatures) -> Result<Decision> {
        check_len("arm features", self.arms, features.arms())?;
        let d = self.cost_oracle.outputs();
        let mut predicted_reward = Vec::with_capacity(self.arms);
        let mut predicted_cost = Vec::with_capacity(self.arms);
        for a in 0..self.arms {
            if Some(a) == self.null_arm {
                predicted_reward.push(0.0);
                predicted_cost.push(vec![0.0; d]);
            } else {
                predicted_reward.push(self.reward_oracle.predict(&features.reward[a])?);
                predicted_cost.push(self.cost_oracle.predict(&features.cost[a])?);
            }
        }
        let lambda = self.dual.lambda();
        let scores = lagrangian_scores(&predicted_reward, &predicted_cost, &lambda, self.budget_rate);
        let probabilities = igw_distribution(&scores, self.gamma);
        Ok(Decision {
            predicted_reward,
            predicted_cost,
            lambda,
            scores,
            probabilities,
        })
    }

    /// Feeds the pulled arm's data to the oracles and its cost to the dual.
    /// Null-arm pulls carry no information for the oracles.
    pub fn observe(&mut self, features: &ArmFeatures, arm: usize, outcome: &RoundOutcome) -> Result<()> {
        if Some(arm) != self.null_arm {
            self.reward_oracle.update(&features.reward[arm], outcome.reward)?;
            self.cost_oracle.update(&features.cost[arm], &outcome.cost)?;
        }
        self.dual.update(&outcome.cost, self.budget_rate)
    }
}

/// Plays SquareCBwK for `horizon` rounds against `budget`, appending to
/// `trace` with round numbers continuing after `first_round - 1`.
///
/// `outer`, when given, is charged as well so a run can also stop on a
/// budget that includes earlier phases. Returns the exhausted resource if
/// a budget stopped the run.
#[allow(clippy::too_many_arguments)]
pub(crate) fn play_policy<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    config: &PolicyConfig,
    horizon: usize,
    budget: f64,
    first_round: usize,
    trace: &mut RunTrace,
    mut outer: Option<&mut BudgetLedger>,
    rng: &mut R,
) -> Result<Option<usize>> {
    let mut learner = SquareCbwk::new(env, horizon, budget, config)?;
    trace.radius = Some(learner.radius());
    trace.gamma = Some(learner.gamma());
    let mut ledger = BudgetLedger::new(budget, env.resources());
    let mut exhausted = None;
    for t in 0..horizon {
        let features = env.draw_context(rng);
        let decision = learner.decide(&features)?;
        let arm = sample_arm(&decision.probabilities, rng);
        let outcome = env.sample_outcome(&features, arm, rng)?;
        exhausted = ledger.charge(&outcome.cost);
        if let Some(o) = outer.as_deref_mut() {
            exhausted = o.charge(&outcome.cost).or(exhausted);
        }
        learner.observe(&features, arm, &outcome)?;
        trace.push(RoundRecord {
            round: first_round + t,
            phase: Phase::Policy,
            predicted_reward: decision.predicted_reward,
            predicted_cost: decision.predicted_cost,
            lambda: decision.lambda,
            scores: decision.scores,
            probabilities: decision.probabilities,
            arm,
            outcome,
        });
        if config.record_features {
            trace.features.push(features);
        }
        if exhausted.is_some() {
            break;
        }
    }
    trace.diagnostics.reward_updates += learner.reward_updates();
    trace.diagnostics.cost_updates += learner.cost_updates();
    trace.diagnostics.reinitializations += learner.reinitializations();
    Ok(exhausted)
}

/// Runs SquareCBwK on `env` for its full horizon and budget.
pub fn run_squarecbwk<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    config: &PolicyConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    let start = Stopwatch::start();
    let inst = env.instance;
    let mut trace = RunTrace::new(inst.horizon, inst.budget, inst.resources);
    if let Some(resource) = play_policy(env, config, inst.horizon, inst.budget, 1, &mut trace, None, rng)? {
        trace.exit = ExitReason::Budget { resource };
    }
    trace.duration = start.elapsed();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_appendix_c_env, ContextModel, LinkFunction, NoiseModel, OutcomeMode};
    use crate::oracles::RegretRate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_formula() {
        let b = OracleBoundSpec::for_kind(OracleKind::GlmtronNewton, 5, 5);
        let g = gamma_default(4, 10_000, &b, 1.0);
        let reg = 5.0 * 1e4f64.ln();
        let want = (4e4 / (reg + 4.0 * reg + 4.0 * 2e4f64.ln())).sqrt();
        assert!((g - want).abs() < 1e-12);
        assert!((g - 12.17).abs() < 0.01, "{g}");

        let huge = OracleBoundSpec {
            reward: RegretRate::SqrtHorizon,
            cost: RegretRate::SqrtHorizon,
            scale: 1e12,
        };
        assert!(gamma_default(4, 10_000, &huge, 1.0) < 1e-3);
        assert!(gamma_default(1, 100, &b, 1.0) > 0.0);
    }

    #[test]
    fn scores() {
        assert_eq!(
            lagrangian_scores(&[0.3, 0.8], &[vec![0.1], vec![0.9]], &[0.0], 0.5),
            vec![0.3, 0.8]
        );
        let s = lagrangian_scores(&[0.6], &[vec![0.9]], &[2.0], 0.5);
        assert!((s[0] + 0.2).abs() < 1e-15);
        let s = lagrangian_scores(&[0.1, 0.7], &[vec![0.4, 0.4], vec![0.4, 0.4]], &[3.0, 1.0], 0.4);
        assert_eq!(s, vec![0.1, 0.7]);
    }

    #[test]
    fn igw_examples() {
        let p = igw_distribution(&[0.1, 0.9, 0.4], 0.0);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = igw_distribution(&[1.0, 0.5, 0.0], 4.0);
        assert!((p[1] - 0.2).abs() < 1e-15);
        assert!((p[2] - 1.0 / 7.0).abs() < 1e-15);
        assert!((p[0] - 23.0 / 35.0).abs() < 1e-15);
        let p = igw_distribution(&[0.3; 4], 50.0);
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
        assert_eq!(igw_distribution(&[0.2], 3.0), vec![1.0]);
    }

    #[test]
    fn igw_concentrates_as_gamma_grows() {
        let p = igw_distribution(&[0.9, 0.5, 0.2], 1e6);
        let bound = 1.0 - 2.0 / (3.0 + 1e6 * 0.4);
        assert!(p[0] >= bound - 1e-15);
    }

    fn unit_cost_env(budget: f64) -> EnvironmentSpec {
        // Every arm pays exactly one unit of the single resource.
        EnvironmentSpec {
            instance: crate::env::ProblemInstance::new(50, budget, 1, 2).unwrap(),
            reward_param: vec![0.5, 0.0],
            cost_params: vec![vec![1.0, 0.0]],
            contexts: ContextModel::Fixed(ArmFeatures::shared(vec![
                vec![1.0, 0.0],
                vec![1.0, 0.0],
            ])),
            link: LinkFunction::Identity,
            noise: NoiseModel::Gaussian { variance: 0.0 },
            mode: OutcomeMode::Bounded,
            null_arm: false,
            feature_bound: 1.0,
        }
    }

    #[test]
    fn exit_fires_when_consumption_reaches_b_minus_one() {
        let env = unit_cost_env(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = run_squarecbwk(&env, &PolicyConfig::default(), &mut rng).unwrap();
        assert_eq!(t.stopping_time, 9);
        assert_eq!(t.exit, ExitReason::Budget { resource: 0 });
        assert_eq!(t.cumulative_cost, vec![9.0]);
        // the final round is still fed
        assert_eq!(t.diagnostics.reward_updates, 9);
    }

    #[test]
    fn null_only_environment_never_stops() {
        let mut env = unit_cost_env(50.0);
        env.cost_params = vec![vec![0.0, 0.0]];
        let env = env.with_null_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = run_squarecbwk(&env, &PolicyConfig::default(), &mut rng).unwrap();
        assert_eq!(t.stopping_time, 50);
        assert_eq!(t.exit, ExitReason::Horizon);
    }

    #[test]
    fn run_records_valid_distributions_and_feed_counts() {
        let env = make_appendix_c_env(10, 3, 4, 0.2)
            .unwrap()
            .with_budget(500, 250.0)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = PolicyConfig {
            record_features: true,
            ..PolicyConfig::default()
        };
        let t = run_squarecbwk(&env, &cfg, &mut rng).unwrap();
        assert!(t.stopping_time <= 500);
        assert_eq!(t.rounds.len(), t.stopping_time);
        assert_eq!(t.features.len(), t.stopping_time);
        assert_eq!(t.diagnostics.reward_updates, t.stopping_time);
        for r in &t.rounds {
            let s: f64 = r.probabilities.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(r.probabilities.iter().all(|p| *p >= 0.0));
            let l1: f64 = r.lambda.iter().sum();
            assert!(r.lambda.iter().all(|l| *l >= 0.0) && l1 <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn sample_arm_follows_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = [0.2, 0.0, 0.8];
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[sample_arm(&p, &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / 20_000.0 - 0.2).abs() < 0.02);
    }
}
