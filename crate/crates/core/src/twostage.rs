//! Two-stage SquareCBwK: uniform exploration, an empirical estimate of the
//! optimum, then SquareCBwK with the estimated dual radius on what is left.


use rand::Rng;

use crate::env::{ArmFeatures, EnvironmentSpec};
use crate::error::{check_len, CbwkError, Result};
use crate::lp::{context_lp, LpStatus};
use crate::oracles::{
    otb_convert, otb_convert_vector, BatchPredictor, OnlinePredictor, OracleBoundSpec,
    VectorBatchPredictor, VectorPredictor,
};
use crate::policy::{play_policy, PolicyConfig};
use crate::trace::{BudgetLedger, ExitReason, Phase, RadiusEstimate, RoundRecord, RunTrace, Stopwatch};

/// Function class used to pick the exploration length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Linear,
    /// Nonparametric class with complexity exponent `p`.
    Nonparametric { p: f64 },
}

/// How the `T0` rounds after per-arm exploration are played.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArbitraryPull {
    /// The null arm if the environment has one, otherwise uniform.
    #[default]
    Auto,
    Uniform,
    Arm(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageConfig {
    /// Exploration length per arm; `None` uses [`t0_default`] for the
    /// linear family.
    pub t0: Option<usize>,
    pub arbitrary: ArbitraryPull,
    /// Multiplier on the estimation-error closed forms.
    pub error_scale: f64,
}

impl Default for TwoStageConfig {
    fn default() -> Self {
        Self {
            t0: None,
            arbitrary: ArbitraryPull::Auto,
            error_scale: 1.0,
        }
    }
}

/// Exploration length per arm, rounded up.
///
/// Linear: `(m d)^(1/3) sqrt(T / K)`. Nonparametric:
/// `d^((2+p)/(6+2p)) K^(-1/(2+p)) T^((1+p)/(2+p))`.
pub fn t0_default(family: Family, m: usize, d: usize, arms: usize, horizon: usize) -> Result<usize> {
    if m == 0 || d == 0 || arms == 0 || horizon == 0 {
        return Err(CbwkError::config("exploration length needs positive m, d, K and T"));
    }
    let (m, d, k, t) = (m as f64, d as f64, arms as f64, horizon as f64);
    let raw = match family {
        Family::Linear => (m * d).cbrt() * (t / k).sqrt(),
        Family::Nonparametric { p } => {
            if p.is_nan() || p <= 0.0 {
                return Err(CbwkError::config(format!("nonparametric exponent must be positive, got {p}")));
            }
            d.powf((2.0 + p) / (6.0 + 2.0 * p)) * k.powf(-1.0 / (2.0 + p)) * t.powf((1.0 + p) / (2.0 + p))
        }
    };
    let t0 = raw.ceil() as usize;
    if (arms + 1) * t0 >= horizon {
        return Err(CbwkError::config(format!(
            "exploration needs (K + 1) * T0 = {} rounds but T = {horizon}; use a smaller T0 or a larger T",
            (arms + 1) * t0
        )));
    }
    Ok(t0)
}

/// `sqrt(K (E_F + d E_G) + 4 log(T d) / T0)`.
pub fn m_t0(t0: usize, arms: usize, resources: usize, err_f: f64, err_g: f64, horizon: usize) -> f64 {
    let d = resources as f64;
    (arms as f64 * (err_f + d * err_g) + 4.0 * (horizon as f64 * d).ln() / t0 as f64).sqrt()
}

/// `Z = (T / B) (OPT_hat + M)`.
pub fn z_estimate(opt_hat: f64, error_radius: f64, horizon: usize, budget: f64) -> f64 {
    horizon as f64 / budget * (opt_hat + error_radius)
}

/// Data gathered by the exploration phase.
#[derive(Debug, Clone, Default)]
pub struct Exploration {
    /// Per-arm `(features, reward)` samples.
    pub reward_data: Vec<Vec<(Vec<f64>, f64)>>,
    /// Per-arm `(features, cost vector)` samples.
    pub cost_data: Vec<Vec<(Vec<f64>, Vec<f64>)>>,
    /// Contexts seen in the arbitrary-pull rounds.
    pub contexts: Vec<ArmFeatures>,
    pub consumed: Vec<f64>,
    /// Resource that ran out, if exploration was cut short.
    pub aborted: Option<usize>,
}

/// Plays each arm `t0` times in turn, then `t0` arbitrary pulls that only
/// record contexts. Rounds are appended to `trace` and charged to `ledger`.
pub fn explore<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    t0: usize,
    rule: ArbitraryPull,
    ledger: &mut BudgetLedger,
    trace: &mut RunTrace,
    rng: &mut R,
) -> Result<Exploration> {
    let k = env.arms();
    if (k + 1) * t0 > env.instance.horizon {
        return Err(CbwkError::config(format!(
            "exploration needs (K + 1) * T0 = {} rounds but T = {}",
            (k + 1) * t0,
            env.instance.horizon
        )));
    }
    if let ArbitraryPull::Arm(a) = rule {
        if a >= k {
            return Err(CbwkError::ArmIndex { index: a, arms: k });
        }
    }
    let mut ex = Exploration {
        reward_data: vec![Vec::with_capacity(t0); k],
        cost_data: vec![Vec::with_capacity(t0); k],
        contexts: Vec::with_capacity(t0),
        consumed: vec![0.0; env.resources()],
        aborted: None,
    };
    for t in 0..(k + 1) * t0 {
        let features = env.draw_context(rng);
        let collecting = t >= k * t0;
        let arm = if !collecting {
            t / t0
        } else {
            match rule {
                ArbitraryPull::Arm(a) => a,
                ArbitraryPull::Auto if env.null_arm => k - 1,
                _ => rng.random_range(0..k),
            }
        };
        let outcome = env.sample_outcome(&features, arm, rng)?;
        if collecting {
            ex.contexts.push(features);
        } else {
            ex.reward_data[arm].push((features.reward[arm].clone(), outcome.reward));
            ex.cost_data[arm].push((features.cost[arm].clone(), outcome.cost.clone()));
        }
        ex.consumed.iter_mut().zip(&outcome.cost).for_each(|(s, c)| *s += c);
        ex.aborted = ledger.charge(&outcome.cost);
        trace.push(RoundRecord {
            round: t + 1,
            phase: if collecting { Phase::Collect } else { Phase::Explore },
            predicted_reward: vec![],
            predicted_cost: vec![],
            lambda: vec![],
            scores: vec![],
            probabilities: vec![],
            arm,
            outcome,
        });
        if ex.aborted.is_some() {
            break;
        }
    }
    Ok(ex)
}

/// Offline per-arm models fitted on exploration data.
#[derive(Debug, Clone)]
pub struct ArmModels {
    /// `None` for the null arm, which is known to return zeros.
    models: Vec<Option<(BatchPredictor, VectorBatchPredictor)>>,
    resources: usize,
}

impl ArmModels {
    /// Online-to-batch conversion of a fresh oracle per arm and target.
    pub fn fit(env: &EnvironmentSpec, config: &PolicyConfig, data: &Exploration) -> Result<Self> {
        let reward = OnlinePredictor::new(config.oracle, env.reward_dim(), env.link)
            .with_eta_scale(config.eta_scale);
        let cost = VectorPredictor::new(config.oracle, env.cost_dim(), env.resources(), env.link)
            .with_eta_scale(config.eta_scale);
        let models = (0..env.arms())
            .map(|a| {
                if env.is_null(a) {
                    return Ok(None);
                }
                Ok(Some((
                    otb_convert(&reward, &data.reward_data[a])?,
                    otb_convert_vector(&cost, &data.cost_data[a])?,
                )))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            models,
            resources: env.resources(),
        })
    }

    /// Predicted rewards and consumption of every arm under `features`.
    pub fn predict_table(&self, features: &ArmFeatures) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        check_len("arm features", self.models.len(), features.arms())?;
        let mut r = Vec::with_capacity(self.models.len());
        let mut c = Vec::with_capacity(self.models.len());
        for (a, m) in self.models.iter().enumerate() {
            match m {
                Some((fr, fc)) => {
                    r.push(fr.predict(&features.reward[a])?);
                    c.push(fc.predict(&features.cost[a])?);
                }
                None => {
                    r.push(0.0);
                    c.push(vec![0.0; self.resources]);
                }
            }
        }
        Ok((r, c))
    }
}

/// Value of the empirical program over explicit prediction tables:
/// the contexts are weighted uniformly and every resource gets `rhs`.
pub fn empirical_opt_from_tables(
    rewards: &[Vec<f64>],
    costs: &[Vec<Vec<f64>>],
    rhs: f64,
) -> Result<f64> {
    if rewards.is_empty() {
        return Err(CbwkError::config("empirical program needs at least one context"));
    }
    let n = rewards.len();
    let d = costs.first().and_then(|c| c.first()).map_or(0, Vec::len);
    let sol = context_lp(&vec![1.0 / n as f64; n], rewards, costs, &vec![rhs; d])?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Infeasible => Err(CbwkError::Infeasible(format!(
            "no policy keeps predicted consumption within {rhs} per round"
        ))),
        other => Err(CbwkError::Numerical(format!("empirical program ended with {other:?}"))),
    }
}

/// Optimal value of the empirical program over the collected contexts with
/// relaxed right-hand side `B/T + 2 M`.
pub fn empirical_opt(
    models: &ArmModels,
    contexts: &[ArmFeatures],
    budget_rate: f64,
    error_radius: f64,
) -> Result<f64> {
    let mut rewards = Vec::with_capacity(contexts.len());
    let mut costs = Vec::with_capacity(contexts.len());
    for x in contexts {
        let (r, c) = models.predict_table(x)?;
        rewards.push(r);
        costs.push(c);
    }
    empirical_opt_from_tables(&rewards, &costs, budget_rate + 2.0 * error_radius)
}

/// Outcome of exploration and estimation.
#[derive(Debug, Clone)]
pub struct PhaseOne {
    pub trace: RunTrace,
    /// Budget charged so far, against the full `B`.
    pub ledger: BudgetLedger,
    /// `None` when the budget ran out during exploration.
    pub estimate: Option<RadiusEstimate>,
}

/// Explores, fits the offline models and estimates the dual radius.
pub fn run_phase_one<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    config: &TwoStageConfig,
    policy: &PolicyConfig,
    rng: &mut R,
) -> Result<PhaseOne> {
    let inst = env.instance;
    let (k, d, t, b) = (inst.arms, inst.resources, inst.horizon, inst.budget);
    let t0 = match config.t0 {
        Some(0) => return Err(CbwkError::config("T0 must be positive")),
        Some(t0) => t0,
        None => t0_default(Family::Linear, env.reward_dim(), d, k, t)?,
    };
    let mut trace = RunTrace::new(t, b, d);
    let mut ledger = BudgetLedger::new(b, d);
    let data = explore(env, t0, config.arbitrary, &mut ledger, &mut trace, rng)?;
    if let Some(resource) = data.aborted {
        trace.exit = ExitReason::ExplorationBudget { resource };
        return Ok(PhaseOne {
            trace,
            ledger,
            estimate: None,
        });
    }

    let mut bounds = OracleBoundSpec::for_kind(policy.oracle, env.reward_dim(), env.cost_dim());
    bounds.scale *= config.error_scale;
    let err_f = bounds.reward_estimation_error(t0, t);
    let err_g = bounds.cost_estimation_error(t0, t);
    let m = m_t0(t0, k, d, err_f, err_g, t);
    let models = ArmModels::fit(env, policy, &data)?;
    let opt_hat = empirical_opt(&models, &data.contexts, inst.budget_rate(), m)?;
    let estimate = RadiusEstimate {
        t0,
        opt_hat,
        error_radius: m,
        z: z_estimate(opt_hat, m, t, b),
    };
    trace.estimate = Some(estimate);
    let needed = ((k + 2) * t0) as f64;
    if b <= needed.max(t as f64 * m) {
        trace.notes.push(format!(
            "budget {b} does not exceed max((K + 2) T0, T M) = {}; the two-stage guarantee does not apply",
            needed.max(t as f64 * m)
        ));
    }
    Ok(PhaseOne {
        trace,
        ledger,
        estimate: Some(estimate),
    })
}

/// Runs both phases. An explicit `policy.radius` overrides the estimate.
pub fn run_twostage<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    config: &TwoStageConfig,
    policy: &PolicyConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    let start = Stopwatch::start();
    let PhaseOne {
        mut trace,
        mut ledger,
        estimate,
    } = run_phase_one(env, config, policy, rng)?;
    let Some(est) = estimate else {
        trace.duration = start.elapsed();
        return Ok(trace);
    };
    let inst = env.instance;
    let k = inst.arms;
    let radius = policy.radius.unwrap_or(est.z);
    let horizon2 = inst.horizon - (k + 1) * est.t0;
    let budget2 = inst.budget - ((k + 1) * est.t0) as f64;
    if horizon2 == 0 || budget2 < 1.0 {
        trace.radius = Some(radius);
        if horizon2 > 0 {
            trace.notes.push(format!("remaining budget {budget2} leaves no room for a policy phase"));
        }
        trace.duration = start.elapsed();
        return Ok(trace);
    }
    let phase2 = PolicyConfig {
        radius: Some(radius),
        ..policy.clone()
    };
    let first = (k + 1) * est.t0 + 1;
    if let Some(resource) =
        play_policy(env, &phase2, horizon2, budget2, first, &mut trace, Some(&mut ledger), rng)?
    {
        trace.exit = ExitReason::Budget { resource };
    }
    trace.duration = start.elapsed();
    Ok(trace)
}
