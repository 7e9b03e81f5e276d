use super::online::OnlinePredictor;
use super::vector::VectorPredictor;
use crate::env::{dot, LinkFunction};
use crate::error::{check_len, CbwkError, Result};

/// Uniform average of the predictors an online oracle produced while
/// streaming through a dataset.
///
/// Iterate `i` is the predictor in force before sample `i` was observed,
/// so a one-sample dataset yields the initial predictor.
#[derive(Debug, Clone)]
pub struct BatchPredictor {
    iterates: Vec<Vec<f64>>,
    link: LinkFunction,
}

impl BatchPredictor {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        let dim = self.iterates.first().map_or(0, Vec::len);
        check_len("batch features", dim, features.len())?;
        let sum: f64 = self
            .iterates
            .iter()
            .map(|th| self.link.apply(dot(th, features)).clamp(0.0, 1.0))
            .sum();
        Ok(sum / self.iterates.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct VectorBatchPredictor {
    coords: Vec<BatchPredictor>,
}

impl VectorBatchPredictor {
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.coords.iter().map(|c| c.predict(features)).collect()
    }

    pub fn outputs(&self) -> usize {
        self.coords.len()
    }
}

/// Runs a fresh copy of `template` once over `data` in order and averages
/// its iterates.
pub fn otb_convert(template: &OnlinePredictor, data: &[(Vec<f64>, f64)]) -> Result<BatchPredictor> {
    if data.is_empty() {
        return Err(CbwkError::config("online-to-batch conversion needs M >= 1 samples"));
    }
    let mut oracle = template.clone();
    let mut iterates = Vec::with_capacity(data.len());
    for (x, y) in data {
        iterates.push(oracle.theta().as_slice().to_vec());
        oracle.update(x, *y)?;
    }
    Ok(BatchPredictor {
        iterates,
        link: template.link(),
    })
}

pub fn otb_convert_vector(
    template: &VectorPredictor,
    data: &[(Vec<f64>, Vec<f64>)],
) -> Result<VectorBatchPredictor> {
    if data.is_empty() {
        return Err(CbwkError::config("online-to-batch conversion needs M >= 1 samples"));
    }
    let coords = template
        .coordinates()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let scalar: Vec<(Vec<f64>, f64)> = data
                .iter()
                .map(|(x, y)| {
                    check_len("cost vector", template.outputs(), y.len())?;
                    Ok((x.clone(), y[j]))
                })
                .collect::<Result<_>>()?;
            otb_convert(c, &scalar)
        })
        .collect::<Result<_>>()?;
    Ok(VectorBatchPredictor { coords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::OracleKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_sample_is_the_initial_predictor() {
        let t = OnlinePredictor::new(OracleKind::GlmtronNewton, 2, LinkFunction::Logistic);
        let b = otb_convert(&t, &[(vec![0.5, 0.5], 1.0)]).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.predict(&[0.3, -0.9]).unwrap(), t.predict(&[0.3, -0.9]).unwrap());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let t = OnlinePredictor::new(OracleKind::Ogd, 2, LinkFunction::Identity);
        assert!(otb_convert(&t, &[]).unwrap_err().is_config());
    }

    #[test]
    fn noiseless_linear_data_is_learned() {
        let m = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let mut x = vec![0.5];
            x.extend((1..m).map(|_| rng.random_range(-0.4..0.4)));
            x
        };
        let theta = [0.6, 0.3, -0.2, 0.4, 0.1];
        let data: Vec<_> = (0..2000)
            .map(|_| {
                let x = draw(&mut rng);
                let y = dot(&theta, &x);
                (x, y)
            })
            .collect();
        let t = OnlinePredictor::new(OracleKind::GlmtronNewton, m, LinkFunction::Identity);
        let b = otb_convert(&t, &data).unwrap();
        let mse = (0..1000)
            .map(|_| {
                let x = draw(&mut rng);
                (b.predict(&x).unwrap() - dot(&theta, &x)).powi(2)
            })
            .sum::<f64>()
            / 1000.0;
        assert!(mse < 0.01, "{mse}");
    }

    #[test]
    fn zero_targets_error_shrinks_with_more_data() {
        let x = vec![0.8, 0.0];
        let t = OnlinePredictor::new(OracleKind::Ogd, 2, LinkFunction::Logistic);
        let mut last = f64::MAX;
        for n in [1, 10, 100, 1000] {
            let data = vec![(x.clone(), 0.0); n];
            let p = otb_convert(&t, &data).unwrap().predict(&x).unwrap();
            assert!(p <= 0.5 + 1e-15);
            assert!(p <= last);
            last = p;
        }
        assert!(last < 0.45);
    }
}
