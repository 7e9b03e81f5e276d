use super::online::{OnlinePredictor, OracleKind};
use crate::env::LinkFunction;
use crate::error::{check_len, CbwkError, Result};

/// Vector-valued cost oracle built from one scalar oracle per resource.
///
/// Each coordinate is predicted and updated independently, so the
/// sup-norm squared error of the vector is bounded by the sum of the
/// per-coordinate squared errors.
#[derive(Debug, Clone)]
pub struct VectorPredictor {
    coords: Vec<OnlinePredictor>,
}

impl VectorPredictor {
    pub fn new(kind: OracleKind, dim: usize, outputs: usize, link: LinkFunction) -> Self {
        Self {
            coords: (0..outputs)
                .map(|_| OnlinePredictor::new(kind, dim, link))
                .collect(),
        }
    }

    /// Lifts `d` scalar oracles of the same kind and dimension.
    pub fn lift(coords: Vec<OnlinePredictor>) -> Result<Self> {
        let Some(first) = coords.first() else {
            return Err(CbwkError::config("vector oracle needs at least one coordinate"));
        };
        let (kind, dim) = (first.kind(), first.dim());
        if coords.iter().any(|c| c.kind() != kind || c.dim() != dim) {
            return Err(CbwkError::config(
                "all coordinate oracles must share kind and dimension",
            ));
        }
        Ok(Self { coords })
    }

    pub fn with_eta_scale(self, eta_scale: f64) -> Self {
        Self {
            coords: self
                .coords
                .into_iter()
                .map(|c| c.with_eta_scale(eta_scale))
                .collect(),
        }
    }

    pub fn outputs(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinates(&self) -> &[OnlinePredictor] {
        &self.coords
    }

    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.coords.iter().map(|c| c.predict(features)).collect()
    }

    pub fn update(&mut self, features: &[f64], targets: &[f64]) -> Result<()> {
        check_len("cost vector", self.coords.len(), targets.len())?;
        for (c, &y) in self.coords.iter_mut().zip(targets) {
            c.update(features, y)?;
        }
        Ok(())
    }

    pub fn update_coordinate(&mut self, index: usize, features: &[f64], target: f64) -> Result<()> {
        let n = self.coords.len();
        let c = self.coords.get_mut(index).ok_or(CbwkError::Shape {
            what: "cost coordinate",
            expected: n,
            found: index + 1,
        })?;
        c.update(features, target)
    }

    pub fn reinitializations(&self) -> usize {
        self.coords.iter().map(OnlinePredictor::reinitializations).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_coordinate_matches_scalar_oracle() {
        let mut v = VectorPredictor::new(OracleKind::GlmtronNewton, 3, 1, LinkFunction::Identity);
        let mut s = OnlinePredictor::new(OracleKind::GlmtronNewton, 3, LinkFunction::Identity);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let phi: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
            let y = rng.random_range(0.0..1.0);
            v.update(&phi, &[y]).unwrap();
            s.update(&phi, y).unwrap();
            assert_eq!(v.predict(&phi).unwrap(), vec![s.predict(&phi).unwrap()]);
        }
    }

    #[test]
    fn coordinate_update_leaves_others_untouched() {
        let mut v = VectorPredictor::new(OracleKind::Ogd, 2, 3, LinkFunction::Identity);
        v.update(&[0.3, 0.4], &[0.2, 0.9, 0.5]).unwrap();
        let before = v.clone();
        v.update_coordinate(1, &[0.6, 0.1], 0.7).unwrap();
        for i in [0, 2] {
            assert_eq!(v.coordinates()[i].theta(), before.coordinates()[i].theta());
            assert_eq!(v.coordinates()[i].steps(), before.coordinates()[i].steps());
        }
        assert_ne!(v.coordinates()[1].theta(), before.coordinates()[1].theta());
    }

    #[test]
    fn length_mismatch_is_a_shape_error() {
        let mut v = VectorPredictor::new(OracleKind::Ogd, 2, 3, LinkFunction::Identity);
        assert!(matches!(
            v.update(&[0.1, 0.1], &[0.0, 1.0]),
            Err(CbwkError::Shape { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn lift_rejects_mixed_kinds() {
        let a = OnlinePredictor::new(OracleKind::Ogd, 2, LinkFunction::Identity);
        let b = OnlinePredictor::new(OracleKind::GlmtronNewton, 2, LinkFunction::Identity);
        assert!(VectorPredictor::lift(vec![a.clone(), b]).is_err());
        assert_eq!(VectorPredictor::lift(vec![a.clone(), a]).unwrap().outputs(), 2);
    }

    #[test]
    fn sup_norm_regret_is_bounded_by_coordinate_sum() {
        let (m, d, rounds) = (4, 3, 500);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let truth: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..m).map(|_| rng.random_range(0.0..0.45)).collect())
            .collect();
        let mut v = VectorPredictor::new(OracleKind::GlmtronNewton, m, d, LinkFunction::Identity);
        let (mut sup, mut per) = (0.0, vec![0.0; d]);
        for _ in 0..rounds {
            let phi: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.5)).collect();
            let mean: Vec<f64> = truth.iter().map(|t| crate::env::dot(t, &phi)).collect();
            let pred = v.predict(&phi).unwrap();
            let errs: Vec<f64> = pred.iter().zip(&mean).map(|(p, g)| (p - g).powi(2)).collect();
            sup += errs.iter().cloned().fold(0.0, f64::max);
            per.iter_mut().zip(&errs).for_each(|(s, e)| *s += e);
            let y: Vec<f64> = mean.iter().map(|g| g + rng.random_range(-0.1..0.1)).collect();
            v.update(&phi, &y).unwrap();
        }
        assert!(sup <= per.iter().sum::<f64>());
    }
}
