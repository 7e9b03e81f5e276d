use super::online::OracleKind;

/// Closed-form growth of an oracle's cumulative squared-error regret.
///
/// Leading constants are one; `scale` multiplies the whole expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegretRate {
    /// `m log T`, the rate of the Newton-preconditioned GLMtron.
    LogLinear { dim: usize },
    /// `sqrt(T)`, projected online gradient descent.
    SqrtHorizon,
    /// `(K T)^((1+p)/(2+p))` for `p`-nonparametric classes.
    Nonparametric { p: f64, arms: usize },
}

impl RegretRate {
    pub fn eval(self, horizon: f64) -> f64 {
        let t = horizon.max(1.0);
        match self {
            // log T is floored at one so the rate stays positive for T < e
            RegretRate::LogLinear { dim } => dim as f64 * t.ln().max(1.0),
            RegretRate::SqrtHorizon => t.sqrt(),
            RegretRate::Nonparametric { p, arms } => {
                (arms as f64 * t).powf((1.0 + p) / (2.0 + p))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBoundSpec {
    pub reward: RegretRate,
    pub cost: RegretRate,
    pub scale: f64,
}

impl OracleBoundSpec {
    pub fn for_kind(kind: OracleKind, reward_dim: usize, cost_dim: usize) -> Self {
        let (reward, cost) = match kind {
            OracleKind::GlmtronNewton => (
                RegretRate::LogLinear { dim: reward_dim },
                RegretRate::LogLinear { dim: cost_dim },
            ),
            OracleKind::Ogd => (RegretRate::SqrtHorizon, RegretRate::SqrtHorizon),
        };
        Self {
            reward,
            cost,
            scale: 1.0,
        }
    }

    pub fn reward_regret(&self, horizon: f64) -> f64 {
        self.scale * self.reward.eval(horizon)
    }

    pub fn cost_regret(&self, horizon: f64) -> f64 {
        self.scale * self.cost.eval(horizon)
    }

    /// Online-to-batch estimation error of the reward model after `samples`
    /// points at confidence `1/T`: `Reg_r(M) log T / M`.
    pub fn reward_estimation_error(&self, samples: usize, horizon: usize) -> f64 {
        let m = samples.max(1) as f64;
        self.reward_regret(m) * (horizon.max(2) as f64).ln() / m
    }

    pub fn cost_estimation_error(&self, samples: usize, horizon: usize) -> f64 {
        let m = samples.max(1) as f64;
        self.cost_regret(m) * (horizon.max(2) as f64).ln() / m
    }
}
