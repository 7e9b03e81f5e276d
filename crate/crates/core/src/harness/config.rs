//! Flat `key = value` experiment documents.
//!
//! ```text
//! # comments start with '#'
//! environment.m = 10
//! environment.K = 3
//! environment.T = 2000
//! algorithm.list = squarecbwk:glmtron, squarecbwk:ogd, linucb
//! sweep.param = m
//! sweep.values = 10, 26, 52, 101
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::baseline::LinUcbConfig;
use crate::env::{
    make_appendix_c_env, make_glm_env, ArmFeatures, ContextModel, EnvironmentSpec, LinkFunction,
    OutcomeMode,
};
use crate::error::{CbwkError, Result};
use crate::oracles::OracleKind;
use crate::policy::PolicyConfig;
use crate::twostage::TwoStageConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvFamily {
    AppendixC,
    /// Same geometry with features scaled into the unit ball, a logistic
    /// link and Bernoulli outcomes.
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub family: EnvFamily,
    pub m: usize,
    pub k: usize,
    pub d: usize,
    pub horizon: usize,
    /// `B / T`.
    pub budget_ratio: f64,
    pub noise_variance: f64,
    pub mode: OutcomeMode,
    pub null_arm: bool,
}

impl EnvConfig {
    pub fn budget(&self) -> f64 {
        self.budget_ratio * self.horizon as f64
    }

    /// Builds the environment this block describes.
    pub fn build(&self) -> Result<EnvironmentSpec> {
        let base = make_appendix_c_env(self.m, self.k, self.d, self.noise_variance)?;
        let env = match self.family {
            EnvFamily::AppendixC => base.with_mode(self.mode),
            EnvFamily::Logistic => {
                let ContextModel::Fixed(f) = &base.contexts else {
                    unreachable!("the benchmark has a fixed context")
                };
                let scale = |v: &Vec<f64>| {
                    let n = crate::env::norm(v);
                    v.iter().map(|x| x / n).collect::<Vec<f64>>()
                };
                let per_arm = f.reward.iter().map(scale).collect();
                make_glm_env(
                    base.instance,
                    base.reward_param,
                    base.cost_params,
                    ContextModel::Fixed(ArmFeatures::shared(per_arm)),
                    LinkFunction::Logistic,
                )?
            }
        };
        let env = env.with_budget(self.horizon, self.budget())?;
        Ok(if self.null_arm { env.with_null_arm() } else { env })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmSpec {
    SquareCbwk(OracleKind),
    TwoStage(OracleKind),
    LinUcb,
}

impl AlgorithmSpec {
    /// `name` or `name:oracle`; bare names use `default_oracle`.
    pub fn parse(text: &str, default_oracle: OracleKind) -> Option<Self> {
        let (name, oracle) = match text.split_once(':') {
            Some((n, o)) => (n.trim(), Some(OracleKind::parse(o.trim())?)),
            None => (text.trim(), None),
        };
        let oracle = oracle.unwrap_or(default_oracle);
        match name {
            "squarecbwk" => Some(Self::SquareCbwk(oracle)),
            "twostage" => Some(Self::TwoStage(oracle)),
            "linucb" if text.trim() == "linucb" => Some(Self::LinUcb),
            _ => None,
        }
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SquareCbwk(o) => write!(f, "squarecbwk:{}", o.name()),
            Self::TwoStage(o) => write!(f, "twostage:{}", o.name()),
            Self::LinUcb => f.write_str("linucb"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepParam {
    M,
    K,
    T,
}

impl SweepParam {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "m" => Some(Self::M),
            "K" => Some(Self::K),
            "T" => Some(Self::T),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::M => "m",
            Self::K => "K",
            Self::T => "T",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algorithms: Vec<AlgorithmSpec>,
    pub policy: PolicyConfig,
    pub twostage: TwoStageConfig,
    pub linucb: LinUcbConfig,
    /// Without a sweep block the run is a single cell swept over `T`.
    pub sweep: SweepConfig,
    pub seed_count: usize,
    pub base_seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Fill the `runtime_ms` column. Off by default so output is
    /// reproducible byte for byte.
    pub record_runtime: bool,
}

const KEYS: &[&str] = &[
    "environment.family",
    "environment.m",
    "environment.K",
    "environment.d",
    "environment.T",
    "environment.budget_ratio",
    "environment.noise_variance",
    "environment.mode",
    "environment.null_arm",
    "algorithm.list",
    "oracle.kind",
    "oracle.eta_scale",
    "algorithm.gamma",
    "algorithm.z",
    "algorithm.t0",
    "algorithm.linucb_width",
    "sweep.param",
    "sweep.values",
    "seeds.count",
    "seeds.base",
    "output.dir",
    "output.runtime",
];

const REQUIRED: &[&str] = &["environment.m", "environment.K", "environment.T", "algorithm.list"];

/// Parses a sweep value list: `a, b, c` or an inclusive range `start:end:step`.
pub fn parse_values(text: &str) -> std::result::Result<Vec<usize>, String> {
    let text = text.trim();
    if let [a, b, s] = text.split(':').collect::<Vec<_>>()[..] {
        let p = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad range bound `{x}`"));
        let (a, b, s) = (p(a)?, p(b)?, p(s)?);
        if s == 0 || a > b {
            return Err(format!("range `{text}` needs start <= end and step > 0"));
        }
        return Ok((a..=b).step_by(s).collect());
    }
    let values: Vec<usize> = text
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("bad value `{}`", v.trim())))
        .collect::<std::result::Result<_, _>>()?;
    if values.is_empty() {
        return Err("value list is empty".into());
    }
    Ok(values)
}

struct Fields<'a> {
    map: BTreeMap<&'a str, (usize, &'a str)>,
    errors: Vec<String>,
}

impl<'a> Fields<'a> {
    fn get<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> Option<T> {
        match self.map.get(key) {
            Some(&(line, raw)) => match raw.parse() {
                Ok(v) => Some(v),
                Err(_) => {
                    self.errors.push(format!("line {line}: `{key}` has invalid value `{raw}`"));
                    None
                }
            },
            None => default,
        }
    }

    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }
}

/// Parses and validates a document, reporting every problem at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut fields = Fields {
        map: BTreeMap::new(),
        errors: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            fields.errors.push(format!("line {n}: expected `key = value`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            fields.errors.push(format!("line {n}: unknown key `{key}`"));
        } else if fields.map.insert(key, (n, value)).is_some() {
            fields.errors.push(format!("line {n}: duplicate key `{key}`"));
        }
    }
    for key in REQUIRED {
        if !fields.map.contains_key(key) {
            fields.errors.push(format!("missing required key `{key}`"));
        }
    }

    let family = match fields.raw("environment.family").map(|r| r.1) {
        None | Some("appendix_c") => EnvFamily::AppendixC,
        Some("logistic") => EnvFamily::Logistic,
        Some(other) => {
            fields.errors.push(format!("environment.family must be appendix_c or logistic, got `{other}`"));
            EnvFamily::AppendixC
        }
    };
    let mode = match fields.raw("environment.mode").map(|r| r.1) {
        None | Some("replication") => OutcomeMode::Replication,
        Some("bounded") => OutcomeMode::Bounded,
        Some(other) => {
            fields.errors.push(format!("environment.mode must be replication or bounded, got `{other}`"));
            OutcomeMode::Replication
        }
    };
    let m = fields.get("environment.m", None);
    let k = fields.get("environment.K", None);
    let horizon = fields.get("environment.T", None);
    let d = fields.get("environment.d", Some(4));
    let budget_ratio = fields.get("environment.budget_ratio", Some(1.0));
    let noise_variance = fields.get("environment.noise_variance", Some(0.2));
    let null_arm = fields.get("environment.null_arm", Some(false));

    let oracle = match fields.raw("oracle.kind").map(|r| r.1) {
        None => OracleKind::GlmtronNewton,
        Some(o) => OracleKind::parse(o).unwrap_or_else(|| {
            fields.errors.push(format!("oracle.kind must be glmtron or ogd, got `{o}`"));
            OracleKind::GlmtronNewton
        }),
    };
    let mut algorithms = Vec::new();
    if let Some((line, list)) = fields.raw("algorithm.list") {
        for item in list.split(',').map(str::trim) {
            match AlgorithmSpec::parse(item, oracle) {
                Some(a) if algorithms.contains(&a) => {
                    fields.errors.push(format!("line {line}: algorithm `{a}` listed twice"))
                }
                Some(a) => algorithms.push(a),
                None => fields.errors.push(format!(
                    "line {line}: unknown algorithm `{item}` (expected squarecbwk[:oracle], twostage[:oracle] or linucb)"
                )),
            }
        }
    }
    let eta_scale = fields.get("oracle.eta_scale", Some(1.0));
    let gamma = fields.get::<f64>("algorithm.gamma", None);
    let z = fields.get::<f64>("algorithm.z", None);
    let t0 = fields.get::<usize>("algorithm.t0", None);
    let width = fields.get("algorithm.linucb_width", Some(1.0));
    let seed_count = fields.get("seeds.count", Some(10usize));
    let base_seed = fields.get("seeds.base", Some(0u64));
    let record_runtime = fields.get("output.runtime", Some(false));
    let output_dir = fields.raw("output.dir").map(|r| PathBuf::from(r.1));

    let sweep = match (fields.raw("sweep.param"), fields.raw("sweep.values")) {
        (Some((_, p)), Some((line, v))) => {
            let param = SweepParam::parse(p);
            if param.is_none() {
                fields.errors.push(format!("sweep.param must be m, K or T, got `{p}`"));
            }
            let values = parse_values(v).map_err(|e| fields.errors.push(format!("line {line}: {e}"))).ok();
            param.zip(values).map(|(param, values)| SweepConfig { param, values })
        }
        (None, None) => horizon.map(|t| SweepConfig {
            param: SweepParam::T,
            values: vec![t],
        }),
        _ => {
            fields.errors.push("sweep.param and sweep.values must be given together".into());
            None
        }
    };

    let mut errors = fields.errors;
    let checks: [(bool, &str); 5] = [
        (seed_count == Some(0), "seeds.count must be at least 1"),
        (eta_scale.is_some_and(|e: f64| e.is_nan() || e <= 0.0), "oracle.eta_scale must be positive"),
        (gamma.is_some_and(|g| !(g >= 0.0 && g.is_finite())), "algorithm.gamma must be finite and >= 0"),
        (z.is_some_and(|z| !(z > 0.0 && z.is_finite())), "algorithm.z must be finite and > 0"),
        (t0 == Some(0), "algorithm.t0 must be positive"),
    ];
    errors.extend(checks.iter().filter(|c| c.0).map(|c| c.1.to_string()));
    if width.is_some_and(|w: f64| w.is_nan() || w < 0.0) {
        errors.push("algorithm.linucb_width must be >= 0".into());
    }

    let env = match (m, k, horizon, d, budget_ratio, noise_variance, null_arm) {
        (Some(m), Some(k), Some(horizon), Some(d), Some(budget_ratio), Some(noise_variance), Some(null_arm)) => {
            Some(EnvConfig {
                family,
                m,
                k,
                d,
                horizon,
                budget_ratio,
                noise_variance,
                mode,
                null_arm,
            })
        }
        _ => None,
    };
    if let (Some(env), Some(sweep)) = (&env, &sweep) {
        if !(env.budget_ratio > 0.0 && env.budget_ratio <= 1.0) {
            errors.push(format!("environment.budget_ratio must lie in (0, 1], got {}", env.budget_ratio));
        } else {
            for &v in &sweep.values {
                if let Err(e) = cell_env(env, sweep.param, v).build() {
                    let what = format!("{} = {v}", sweep.param.name());
                    match e {
                        CbwkError::ConfigList(list) => {
                            errors.extend(list.into_iter().map(|l| format!("{what}: {l}")))
                        }
                        other => errors.push(format!("{what}: {other}")),
                    }
                }
            }
        }
    }

    if !errors.is_empty() {
        return Err(CbwkError::ConfigList(errors));
    }
    let (env, sweep) = (env.expect("validated"), sweep.expect("validated"));
    Ok(ExperimentConfig {
        env,
        algorithms,
        policy: PolicyConfig {
            gamma,
            radius: z,
            oracle,
            eta_scale: eta_scale.expect("validated"),
            record_features: false,
        },
        twostage: TwoStageConfig {
            t0,
            ..TwoStageConfig::default()
        },
        linucb: LinUcbConfig {
            width: width.expect("validated"),
            radius: z,
        },
        sweep,
        seed_count: seed_count.expect("validated"),
        base_seed: base_seed.expect("validated"),
        output_dir,
        record_runtime: record_runtime.expect("validated"),
    })
}

/// The environment block with the swept parameter set to `value`.
pub fn cell_env(env: &EnvConfig, param: SweepParam, value: usize) -> EnvConfig {
    let mut e = env.clone();
    match param {
        SweepParam::M => e.m = value,
        SweepParam::K => e.k = value,
        SweepParam::T => e.horizon = value,
    }
    e
}

impl ExperimentConfig {
    /// Replaces the sweep, re-validating every value.
    pub fn with_sweep(mut self, param: SweepParam, values: Vec<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(CbwkError::config("sweep needs at least one value"));
        }
        let errors: Vec<String> = values
            .iter()
            .filter_map(|&v| {
                cell_env(&self.env, param, v)
                    .build()
                    .err()
                    .map(|e| format!("{} = {v}: {e}", param.name()))
            })
            .collect();
        if !errors.is_empty() {
            return Err(CbwkError::ConfigList(errors));
        }
        self.sweep = SweepConfig { param, values };
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "environment.m = 10\nenvironment.K = 3\nenvironment.T = 500\nalgorithm.list = linucb\n";

    #[test]
    fn minimal_document_uses_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.env.d, 4);
        assert_eq!(c.env.budget(), 500.0);
        assert_eq!(c.seed_count, 10);
        assert_eq!(c.sweep.param, SweepParam::T);
        assert_eq!(c.sweep.values, vec![500]);
        assert_eq!(c.algorithms, vec![AlgorithmSpec::LinUcb]);
        assert!(!c.record_runtime);
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let CbwkError::ConfigList(errs) = parse_config("").unwrap_err() else {
            panic!("expected a list")
        };
        for key in REQUIRED {
            assert!(errs.iter().any(|e| e.contains(key)), "{key} missing from {errs:?}");
        }
    }

    #[test]
    fn every_violation_is_reported() {
        let doc = "environment.m = 3\nenvironment.K = 3\nenvironment.T = 100\nalgorithm.list = foo\nbogus.key = 1\nseeds.count = 0\n";
        let CbwkError::ConfigList(errs) = parse_config(doc).unwrap_err() else {
            panic!("expected a list")
        };
        let joined = errs.join("\n");
        for needle in ["unknown key `bogus.key`", "unknown algorithm `foo`", "seeds.count", "K <= m - 1", "m >= 5"] {
            assert!(joined.contains(needle), "{needle} not in\n{joined}");
        }
    }

    #[test]
    fn arms_equal_to_dimension_is_rejected() {
        let doc = MINIMAL.replace("environment.K = 3", "environment.K = 10");
        let err = parse_config(&doc).unwrap_err().to_string();
        assert!(err.contains("K <= m - 1"), "{err}");
    }

    #[test]
    fn value_lists_and_ranges() {
        assert_eq!(parse_values("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_values("1000:1300:100").unwrap(), vec![1000, 1100, 1200, 1300]);
        assert!(parse_values("5:1:1").is_err());
        assert!(parse_values("a,b").is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [
            AlgorithmSpec::SquareCbwk(OracleKind::GlmtronNewton),
            AlgorithmSpec::SquareCbwk(OracleKind::Ogd),
            AlgorithmSpec::TwoStage(OracleKind::Ogd),
            AlgorithmSpec::LinUcb,
        ] {
            assert_eq!(AlgorithmSpec::parse(&a.to_string(), OracleKind::Ogd), Some(a));
        }
        assert_eq!(
            AlgorithmSpec::parse("squarecbwk", OracleKind::Ogd),
            Some(AlgorithmSpec::SquareCbwk(OracleKind::Ogd))
        );
        assert_eq!(AlgorithmSpec::parse("linucb:ogd", OracleKind::Ogd), None);
    }

    #[test]
    fn sweep_values_are_validated() {
        let doc = format!("{MINIMAL}sweep.param = K\nsweep.values = 2, 9, 10\n");
        let err = parse_config(&doc).unwrap_err().to_string();
        assert!(err.contains("K = 10"), "{err}");
        assert!(!err.contains("K = 9"), "{err}");
    }

    #[test]
    fn logistic_family_builds_a_unit_ball_environment() {
        let doc = format!("{MINIMAL}environment.family = logistic\n");
        let env = parse_config(&doc).unwrap().env.build().unwrap();
        assert_eq!(env.link, LinkFunction::Logistic);
        env.check_feature_bound().unwrap();
    }
}
