//! Problem instances and synthetic environments.
//!
//! An [`EnvironmentSpec`] is a generative model: it draws per-round arm
//! features and, given a pulled arm, a reward and a consumption vector whose
//! means are (generalized) linear in the features.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};

use crate::error::{check_len, CbwkError, Result};

/// Horizon, budget and problem dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemInstance {
    /// Number of rounds `T`.
    pub horizon: usize,
    /// Budget `B`, shared by every resource.
    pub budget: f64,
    /// Number of resources `d`.
    pub resources: usize,
    /// Number of arms `K`.
    pub arms: usize,
}

impl ProblemInstance {
    pub fn new(horizon: usize, budget: f64, resources: usize, arms: usize) -> Result<Self> {
        let mut bad = Vec::new();
        if horizon < 1 {
            bad.push("T >= 1".to_string());
        }
        if !(budget >= 1.0 && budget <= horizon as f64) {
            bad.push(format!("1 <= B <= T (B = {budget}, T = {horizon})"));
        }
        if resources < 1 {
            bad.push("d >= 1".to_string());
        }
        if arms < 2 {
            bad.push(format!("K >= 2 (K = {arms})"));
        }
        if bad.is_empty() {
            Ok(Self {
                horizon,
                budget,
                resources,
                arms,
            })
        } else {
            Err(CbwkError::ConfigList(
                bad.into_iter().map(|b| format!("violated: {b}")).collect(),
            ))
        }
    }

    /// Per-round budget rate `B/T`.
    pub fn budget_rate(&self) -> f64 {
        self.budget / self.horizon as f64
    }
}

/// Features of every arm for one round.
///
/// `reward[a]` feeds the reward model and `cost[a]` the consumption model.
/// In linear environments both maps coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmFeatures {
    pub reward: Vec<Vec<f64>>,
    pub cost: Vec<Vec<f64>>,
}

impl ArmFeatures {
    /// One feature vector per arm used for both reward and cost.
    pub fn shared(per_arm: Vec<Vec<f64>>) -> Self {
        Self {
            cost: per_arm.clone(),
            reward: per_arm,
        }
    }

    pub fn arms(&self) -> usize {
        self.reward.len()
    }

    pub fn reward_dim(&self) -> usize {
        self.reward.first().map_or(0, Vec::len)
    }

    pub fn cost_dim(&self) -> usize {
        self.cost.first().map_or(0, Vec::len)
    }

    /// Largest Euclidean norm over all feature vectors.
    pub fn max_norm(&self) -> f64 {
        self.reward
            .iter()
            .chain(self.cost.iter())
            .map(|v| norm(v))
            .fold(0.0, f64::max)
    }
}

/// Realized (or expected) outcome of one pull.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub reward: f64,
    pub cost: Vec<f64>,
}

impl RoundOutcome {
    pub fn zero(resources: usize) -> Self {
        Self {
            reward: 0.0,
            cost: vec![0.0; resources],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkFunction {
    Identity,
    Logistic,
}

impl LinkFunction {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            LinkFunction::Identity => x,
            LinkFunction::Logistic => 1.0 / (1.0 + (-x).exp()),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            LinkFunction::Identity => 1.0,
            LinkFunction::Logistic => {
                let s = self.apply(x);
                s * (1.0 - s)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkFunction::Identity => "identity",
            LinkFunction::Logistic => "logistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Additive `N(0, variance)` noise on every coordinate.
    Gaussian { variance: f64 },
    /// Outcome is a Bernoulli draw whose mean is the link value.
    Bernoulli,
}

/// Replication mode reproduces the simulation protocol as-is, including
/// outcomes outside `[0, 1]`. Bounded mode clips realized outcomes to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeMode {
    Replication,
    Bounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContextModel {
    /// The same arm features every round.
    Fixed(ArmFeatures),
    /// A uniform draw from a finite set every round.
    Finite(Vec<ArmFeatures>),
}

impl ContextModel {
    fn all(&self) -> Vec<&ArmFeatures> {
        match self {
            ContextModel::Fixed(f) => vec![f],
            ContextModel::Finite(set) => set.iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub instance: ProblemInstance,
    /// Reward parameter (`theta_0`).
    pub reward_param: Vec<f64>,
    /// One parameter per resource (`theta_1..theta_d`).
    pub cost_params: Vec<Vec<f64>>,
    pub contexts: ContextModel,
    pub link: LinkFunction,
    pub noise: NoiseModel,
    pub mode: OutcomeMode,
    /// When set, arm `K` (index `K - 1`) always returns zero reward and cost.
    pub null_arm: bool,
    /// Declared bound on feature norms.
    pub feature_bound: f64,
}

/// The fixed-context linear environment used by the scaling experiments.
///
/// Parameters are `theta_0 = (e1+e2)/sqrt2`, `theta_1 = (e1+e3)/sqrt2`,
/// `theta_2 = (e2+e3+e4+e5)/2` and `theta_i = e_{i+1}` for `3 <= i <= d`;
/// arm `a` always sees `x_a = e1/sqrt2 + e_{a+1}`.
pub fn make_appendix_c_env(
    dim: usize,
    arms: usize,
    resources: usize,
    noise_variance: f64,
) -> Result<EnvironmentSpec> {
    let mut bad = Vec::new();
    if dim < 5 {
        bad.push(format!("m >= 5 (m = {dim})"));
    }
    if arms + 1 > dim {
        bad.push(format!("K <= m - 1 (K = {arms}, m = {dim})"));
    }
    if resources < 4 {
        bad.push(format!("d >= 4 (d = {resources})"));
    }
    if resources + 1 > dim {
        bad.push(format!("d <= m - 1 (d = {resources}, m = {dim})"));
    }
    if arms < 2 {
        bad.push(format!("K >= 2 (K = {arms})"));
    }
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        bad.push(format!("noise variance >= 0 (got {noise_variance})"));
    }
    if !bad.is_empty() {
        return Err(CbwkError::ConfigList(
            bad.into_iter().map(|b| format!("violated: {b}")).collect(),
        ));
    }

    let e = |i: usize| {
        let mut v = vec![0.0; dim];
        v[i - 1] = 1.0;
        v
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let combo = |idx: &[usize], w: f64| {
        let mut v = vec![0.0; dim];
        for &i in idx {
            v[i - 1] = w;
        }
        v
    };

    let reward_param = combo(&[1, 2], h);
    let mut cost_params = vec![combo(&[1, 3], h), combo(&[2, 3, 4, 5], 0.5)];
    for i in 3..=resources {
        cost_params.push(e(i + 1));
    }

    let per_arm = (1..=arms)
        .map(|a| {
            let mut x = e(a + 1);
            x[0] = h;
            x
        })
        .collect();

    Ok(EnvironmentSpec {
        // Placeholder horizon and budget; set them with `with_budget`.
        instance: ProblemInstance {
            horizon: 1,
            budget: 1.0,
            resources,
            arms,
        },
        reward_param,
        cost_params,
        contexts: ContextModel::Fixed(ArmFeatures::shared(per_arm)),
        link: LinkFunction::Identity,
        noise: NoiseModel::Gaussian {
            variance: noise_variance,
        },
        mode: OutcomeMode::Replication,
        null_arm: false,
        feature_bound: std::f64::consts::SQRT_2,
    })
}

/// A generalized-linear environment with Bernoulli outcomes.
///
/// Parameters and features must lie in the unit ball.
pub fn make_glm_env(
    instance: ProblemInstance,
    reward_param: Vec<f64>,
    cost_params: Vec<Vec<f64>>,
    contexts: ContextModel,
    link: LinkFunction,
) -> Result<EnvironmentSpec> {
    const TOL: f64 = 1e-12;
    let mut bad = Vec::new();
    if norm(&reward_param) > 1.0 + TOL {
        bad.push(format!(
            "reward parameter norm {} exceeds 1",
            norm(&reward_param)
        ));
    }
    if cost_params.len() != instance.resources {
        bad.push(format!(
            "expected {} cost parameters, found {}",
            instance.resources,
            cost_params.len()
        ));
    }
    for (j, p) in cost_params.iter().enumerate() {
        if norm(p) > 1.0 + TOL {
            bad.push(format!("cost parameter {} norm {} exceeds 1", j + 1, norm(p)));
        }
    }
    let sets = contexts.all();
    if sets.is_empty() {
        bad.push("context set is empty".to_string());
    }
    for f in &sets {
        if f.arms() != instance.arms {
            bad.push(format!(
                "context has {} arms, instance has {}",
                f.arms(),
                instance.arms
            ));
        }
        if f.max_norm() > 1.0 + TOL {
            bad.push(format!("feature norm {} exceeds 1", f.max_norm()));
        }
        if f.reward_dim() != reward_param.len()
            || cost_params.iter().any(|p| p.len() != f.cost_dim())
        {
            bad.push("feature and parameter dimensions differ".to_string());
        }
    }
    if !bad.is_empty() {
        return Err(CbwkError::ConfigList(bad));
    }
    Ok(EnvironmentSpec {
        instance,
        reward_param,
        cost_params,
        contexts,
        link,
        noise: NoiseModel::Bernoulli,
        mode: OutcomeMode::Bounded,
        null_arm: false,
        feature_bound: 1.0,
    })
}

impl EnvironmentSpec {
    /// Sets horizon and budget, validating the resulting instance.
    pub fn with_budget(mut self, horizon: usize, budget: f64) -> Result<Self> {
        self.instance = ProblemInstance::new(
            horizon,
            budget,
            self.instance.resources,
            self.instance.arms,
        )?;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: OutcomeMode) -> Self {
        self.mode = mode;
        self
    }

    /// Designates the last arm as the null arm. Its features become zero.
    pub fn with_null_arm(mut self) -> Self {
        self.null_arm = true;
        let last = self.instance.arms - 1;
        let zero_out = |f: &mut ArmFeatures| {
            f.reward[last].iter_mut().for_each(|x| *x = 0.0);
            f.cost[last].iter_mut().for_each(|x| *x = 0.0);
        };
        match &mut self.contexts {
            ContextModel::Fixed(f) => zero_out(f),
            ContextModel::Finite(set) => set.iter_mut().for_each(zero_out),
        }
        self
    }

    pub fn arms(&self) -> usize {
        self.instance.arms
    }

    pub fn resources(&self) -> usize {
        self.instance.resources
    }

    pub fn reward_dim(&self) -> usize {
        self.reward_param.len()
    }

    pub fn cost_dim(&self) -> usize {
        self.cost_params.first().map_or(0, Vec::len)
    }

    pub fn is_null(&self, arm: usize) -> bool {
        self.null_arm && arm + 1 == self.instance.arms
    }

    /// Whether the features never change between rounds.
    pub fn is_fixed_context(&self) -> bool {
        matches!(self.contexts, ContextModel::Fixed(_))
    }

    /// Every context with its probability.
    pub fn context_support(&self) -> Vec<(f64, &ArmFeatures)> {
        let all = self.contexts.all();
        let w = 1.0 / all.len() as f64;
        all.into_iter().map(|f| (w, f)).collect()
    }

    /// Verifies the declared feature-norm bound over the context support.
    pub fn check_feature_bound(&self) -> Result<()> {
        for f in self.contexts.all() {
            if f.max_norm() > self.feature_bound + 1e-12 {
                return Err(CbwkError::config(format!(
                    "feature norm {} exceeds declared bound {}",
                    f.max_norm(),
                    self.feature_bound
                )));
            }
        }
        Ok(())
    }

    pub fn draw_context<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmFeatures {
        match &self.contexts {
            ContextModel::Fixed(f) => f.clone(),
            ContextModel::Finite(set) => set[rng.random_range(0..set.len())].clone(),
        }
    }

    fn check_arm(&self, features: &ArmFeatures, arm: usize) -> Result<()> {
        if arm >= self.instance.arms {
            return Err(CbwkError::ArmIndex {
                index: arm,
                arms: self.instance.arms,
            });
        }
        check_len("arm features", self.instance.arms, features.arms())?;
        check_len("reward features", self.reward_dim(), features.reward[arm].len())?;
        check_len("cost features", self.cost_dim(), features.cost[arm].len())
    }

    /// Noise-free link values `sigma(<theta, phi>)` for every target.
    fn link_values(&self, features: &ArmFeatures, arm: usize) -> (f64, Vec<f64>) {
        let r = self.link.apply(dot(&self.reward_param, &features.reward[arm]));
        let c = self
            .cost_params
            .iter()
            .map(|p| self.link.apply(dot(p, &features.cost[arm])))
            .collect();
        (r, c)
    }

    /// Draws the reward and consumption of pulling `arm`.
    pub fn sample_outcome<R: Rng + ?Sized>(
        &self,
        features: &ArmFeatures,
        arm: usize,
        rng: &mut R,
    ) -> Result<RoundOutcome> {
        self.check_arm(features, arm)?;
        if self.is_null(arm) {
            return Ok(RoundOutcome::zero(self.resources()));
        }
        let (mean_r, mean_c) = self.link_values(features, arm);
        let mut draw = |mean: f64| -> f64 {
            match self.noise {
                NoiseModel::Gaussian { variance } => {
                    if variance > 0.0 {
                        let n = Normal::new(0.0, variance.sqrt()).expect("finite std");
                        mean + n.sample(rng)
                    } else {
                        mean
                    }
                }
                NoiseModel::Bernoulli => {
                    let b = Bernoulli::new(mean.clamp(0.0, 1.0)).expect("p in [0,1]");
                    if b.sample(rng) {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        };
        let reward = draw(mean_r);
        let cost: Vec<f64> = mean_c.into_iter().map(&mut draw).collect();
        let mut out = RoundOutcome { reward, cost };
        if self.mode == OutcomeMode::Bounded {
            out.reward = out.reward.clamp(0.0, 1.0);
            out.cost.iter_mut().for_each(|c| *c = c.clamp(0.0, 1.0));
        }
        Ok(out)
    }

    /// Mean of [`sample_outcome`](Self::sample_outcome), including the effect
    /// of clipping in bounded mode.
    pub fn expected_outcome(&self, features: &ArmFeatures, arm: usize) -> Result<RoundOutcome> {
        self.check_arm(features, arm)?;
        if self.is_null(arm) {
            return Ok(RoundOutcome::zero(self.resources()));
        }
        let (mean_r, mean_c) = self.link_values(features, arm);
        let adjust = |mean: f64| match (self.noise, self.mode) {
            (NoiseModel::Gaussian { variance }, OutcomeMode::Bounded) => {
                clipped_gaussian_mean(mean, variance)
            }
            (NoiseModel::Bernoulli, _) => mean.clamp(0.0, 1.0),
            _ => mean,
        };
        Ok(RoundOutcome {
            reward: adjust(mean_r),
            cost: mean_c.into_iter().map(adjust).collect(),
        })
    }

    /// Expected rewards (length `K`) and costs (`K x d`) for one context.
    pub fn expected_table(&self, features: &ArmFeatures) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut r = Vec::with_capacity(self.arms());
        let mut c = Vec::with_capacity(self.arms());
        for a in 0..self.arms() {
            let o = self.expected_outcome(features, a)?;
            r.push(o.reward);
            c.push(o.cost);
        }
        Ok((r, c))
    }
}

/// `E[clip(X, 0, 1)]` for `X ~ N(mean, variance)`.
fn clipped_gaussian_mean(mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    let sd = variance.sqrt();
    let z = StdNormal::standard();
    let lo = (0.0 - mean) / sd;
    let hi = (1.0 - mean) / sd;
    let mid_mass = z.cdf(hi) - z.cdf(lo);
    mean * mid_mass + sd * (z.pdf(lo) - z.pdf(hi)) + (1.0 - z.cdf(hi))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
