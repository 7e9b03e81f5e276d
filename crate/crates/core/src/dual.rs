//! Normalized exponentiated gradient over the rescaled simplex.
//!
//! The dual set `{lambda >= 0, ||lambda||_1 <= Z}` is represented by a
//! probability vector over `d + 1` coordinates, the last one a slack that
//! absorbs unused mass; `lambda_j = Z * w_j` for `j < d`.

use crate::error::{check_len, CbwkError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    weights: Vec<f64>,
    radius: f64,
    eta: f64,
    rounds: usize,
}

impl DualState {
    /// Uniform start with step `sqrt(log(d+1) / T)`.
    pub fn new(resources: usize, radius: f64, horizon: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CbwkError::config(format!("dual radius must be positive, got {radius}")));
        }
        if horizon == 0 {
            return Err(CbwkError::config("dual horizon must be positive"));
        }
        if resources == 0 {
            return Err(CbwkError::config("at least one resource is required"));
        }
        let n = resources + 1;
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
            radius,
            eta: ((n as f64).ln() / horizon as f64).sqrt(),
            rounds: 0,
        })
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn resources(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Simplex weights including the slack coordinate.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Dual prices `lambda_j = Z * w_j`.
    pub fn lambda(&self) -> Vec<f64> {
        let d = self.resources();
        self.weights[..d].iter().map(|w| self.radius * w).collect()
    }

    /// One step against the linear loss `<gradient, lambda>`.
    ///
    /// In rescaled coordinates the loss vector is `Z * gradient` (slack 0);
    /// the step divides it by `Z` again, so `eta` acts on `gradient` directly.
    pub fn update_with_gradient(&mut self, gradient: &[f64]) -> Result<()> {
        check_len("dual gradient", self.resources(), gradient.len())?;
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(CbwkError::Numerical("non-finite dual gradient".into()));
        }
        let d = self.resources();
        let logs: Vec<f64> = (0..=d)
            .map(|j| {
                let g = if j < d { gradient[j] } else { 0.0 };
                self.weights[j].ln() - self.eta * g
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        self.weights = exps.into_iter().map(|e| e / total).collect();
        self.rounds += 1;
        Ok(())
    }

    /// Feeds the realized consumption; the loss is `<B/T - c, lambda>`.
    pub fn update(&mut self, cost: &[f64], budget_rate: f64) -> Result<()> {
        check_len("dual cost", self.resources(), cost.len())?;
        let grad: Vec<f64> = cost.iter().map(|c| budget_rate - c).collect();
        self.update_with_gradient(&grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_init_and_step() {
        let s = DualState::new(1, 3.0, 100).unwrap();
        assert_eq!(s.weights(), &[0.5, 0.5]);
        assert!((s.eta() - (2f64.ln() / 100.0).sqrt()).abs() < 1e-15);
        assert!((s.eta() - 0.08326).abs() < 1e-5);
        assert_eq!(DualState::new(3, 1.0, 10).unwrap().weights(), &[0.25; 4]);
        assert!(DualState::new(1, 0.0, 10).unwrap_err().is_config());
        assert!(DualState::new(1, 1.0, 0).unwrap_err().is_config());
    }

    #[test]
    fn lambda_scaling() {
        let s = DualState::new(1, 2.0, 10).unwrap();
        assert_eq!(s.lambda(), vec![1.0]);
        let mut s = DualState::new(2, 3.0, 10).unwrap();
        s.weights = vec![0.0, 0.0, 1.0];
        assert_eq!(s.lambda(), vec![0.0, 0.0]);
        s.weights = vec![1.0, 0.0, 0.0];
        assert_eq!(s.lambda(), vec![3.0, 0.0]);
    }

    #[test]
    fn balanced_consumption_is_a_fixed_point() {
        let mut s = DualState::new(3, 2.0, 100).unwrap();
        let before = s.clone();
        s.update(&[0.4, 0.4, 0.4], 0.4).unwrap();
        assert_eq!(s.weights(), before.weights());
    }

    #[test]
    fn over_and_under_consumption() {
        let mut s = DualState::new(1, 1.0, 100).unwrap().with_eta(0.1);
        s.update(&[1.5], 0.5).unwrap();
        assert!((s.weights()[0] - 0.52497918747894).abs() < 1e-12);
        assert!((s.weights()[1] - 0.47502081252106).abs() < 1e-12);

        let mut s = DualState::new(1, 1.0, 100).unwrap().with_eta(0.1);
        s.update(&[0.0], 1.0).unwrap();
        assert!((s.weights()[0] - 0.47502081252106).abs() < 1e-12);
    }

    #[test]
    fn over_consumed_price_rises_against_all_others() {
        let mut s = DualState::new(4, 2.0, 1000).unwrap();
        s.update(&[0.1, 0.9, 0.1, 0.1], 0.5).unwrap();
        let w = s.weights();
        assert!(w[1] > w[0] && w[1] > w[2] && w[1] > w[3] && w[1] > w[4]);
    }

    #[test]
    fn simplex_is_preserved_over_a_million_updates() {
        let mut s = DualState::new(4, 2.0, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1_000_000 {
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..2.0)).collect();
            s.update(&c, 0.5).unwrap();
        }
        let sum: f64 = s.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(s.weights().iter().all(|w| *w >= 0.0));
    }
}
