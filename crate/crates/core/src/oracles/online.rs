use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::env::LinkFunction;
use crate::error::{check_len, CbwkError, Result};

/// Bisection steps used for the design-norm projection.
const PROJECTION_STEPS: usize = 20;

/// Relative residual above which the running inverse is rebuilt.
const INVERSE_DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleKind {
    /// Projected online gradient descent with step `eta_scale / sqrt(t)`.
    Ogd,
    /// Residual step preconditioned by the inverse design matrix.
    GlmtronNewton,
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Ogd => "ogd",
            OracleKind::GlmtronNewton => "glmtron",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ogd" => Some(OracleKind::Ogd),
            "glmtron" => Some(OracleKind::GlmtronNewton),
            _ => None,
        }
    }
}

/// `A = I + sum phi phi^T` and its inverse, updated by Sherman-Morrison.
#[derive(Debug, Clone)]
struct Design {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

/// State of one scalar online regression oracle over `theta` in the unit ball.
#[derive(Debug, Clone)]
pub struct OnlinePredictor {
    kind: OracleKind,
    link: LinkFunction,
    theta: DVector<f64>,
    design: Option<Design>,
    steps: usize,
    eta_scale: f64,
    radius: f64,
    reinitializations: usize,
}

impl OnlinePredictor {
    pub fn new(kind: OracleKind, dim: usize, link: LinkFunction) -> Self {
        let design = match kind {
            OracleKind::GlmtronNewton => Some(Design {
                matrix: DMatrix::identity(dim, dim),
                inverse: DMatrix::identity(dim, dim),
            }),
            OracleKind::Ogd => None,
        };
        Self {
            kind,
            link,
            theta: DVector::zeros(dim),
            design,
            steps: 0,
            eta_scale: 1.0,
            radius: 1.0,
            reinitializations: 0,
        }
    }

    /// Multiplies the gradient-descent step size. Ignored by GLMtron.
    pub fn with_eta_scale(mut self, eta_scale: f64) -> Self {
        self.eta_scale = eta_scale;
        self
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn link(&self) -> LinkFunction {
        self.link
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    /// How many times the inverse design matrix was rebuilt from scratch.
    pub fn reinitializations(&self) -> usize {
        self.reinitializations
    }

    pub fn design_inverse(&self) -> Option<&DMatrix<f64>> {
        self.design.as_ref().map(|d| &d.inverse)
    }

    pub fn design_matrix(&self) -> Option<&DMatrix<f64>> {
        self.design.as_ref().map(|d| &d.matrix)
    }

    fn margin(&self, features: &[f64]) -> f64 {
        self.theta
            .iter()
            .zip(features)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `clip(sigma(<theta, phi>), 0, 1)`.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        check_len("oracle features", self.dim(), features.len())?;
        Ok(self.link.apply(self.margin(features)).clamp(0.0, 1.0))
    }

    pub fn update(&mut self, features: &[f64], target: f64) -> Result<()> {
        check_len("oracle features", self.dim(), features.len())?;
        if !target.is_finite() {
            return Err(CbwkError::Numerical(format!("non-finite target {target}")));
        }
        match self.kind {
            OracleKind::Ogd => self.ogd_update(features, target),
            OracleKind::GlmtronNewton => self.glmtron_update(features, target),
        }
        Ok(())
    }

    fn ogd_update(&mut self, features: &[f64], target: f64) {
        self.steps += 1;
        let eta = self.eta_scale / (self.steps as f64).sqrt();
        let z = self.margin(features);
        let scale = 2.0 * (self.link.apply(z) - target) * self.link.derivative(z);
        for (t, x) in self.theta.iter_mut().zip(features) {
            *t -= eta * scale * x;
        }
        let n = self.theta.norm();
        if n > self.radius {
            self.theta *= self.radius / n;
        }
    }

    fn glmtron_update(&mut self, features: &[f64], target: f64) {
        self.steps += 1;
        let residual = self.link.apply(self.margin(features)) - target;
        let phi = DVector::from_column_slice(features);
        let design = self.design.as_mut().expect("GLMtron carries a design");

        design.matrix.ger(1.0, &phi, &phi, 1.0);
        let v = &design.inverse * &phi;
        let denom = 1.0 + phi.dot(&v);
        let mut rebuilt = false;
        if denom.is_finite() && denom >= 1.0 - 1e-12 {
            design.inverse.ger(-1.0 / denom, &v, &v, 1.0);
        } else {
            rebuilt = true;
        }
        // A_{t+1}^{-1} phi = v / denom; check it against the accumulated matrix.
        let mut step = v / denom;
        if !rebuilt {
            let resid = (&design.matrix * &step - &phi).norm();
            let tol = INVERSE_DRIFT_TOL * (1.0 + phi.norm() * design.matrix.norm());
            rebuilt = resid.is_nan() || resid > tol;
        }
        if rebuilt {
            design.inverse = invert_spd(&design.matrix);
            step = &design.inverse * &phi;
            self.reinitializations += 1;
        }

        let proposal = &self.theta - step * residual;
        self.theta = project_design_ball(&design.matrix, proposal, self.radius);
    }

    /// Replaces the running inverse; exercises the drift check in tests.
    #[cfg(test)]
    pub(crate) fn corrupt_inverse(&mut self, m: DMatrix<f64>) {
        self.design.as_mut().unwrap().inverse = m;
    }
}

fn invert_spd(m: &DMatrix<f64>) -> DMatrix<f64> {
    match m.clone().cholesky() {
        Some(c) => c.inverse(),
        None => m
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::identity(m.nrows(), m.ncols())),
    }
}

/// Projection of `y` onto `{||theta|| <= radius}` in the norm induced by `a`.
///
/// The minimizer is `(A + mu I)^{-1} A y` for the multiplier `mu >= 0` that
/// puts it on the sphere; `mu` is located by bisection in the eigenbasis of
/// `A`, keeping the feasible end of the bracket.
pub fn project_design_ball(a: &DMatrix<f64>, y: DVector<f64>, radius: f64) -> DVector<f64> {
    let ny = y.norm();
    if ny <= radius {
        return y;
    }
    let eig = SymmetricEigen::new(a.clone());
    let z = eig.eigenvectors.transpose() * &y;
    let lambdas = &eig.eigenvalues;
    let lmax = lambdas.iter().cloned().fold(f64::MIN, f64::max).max(1e-300);
    let norm_sq_at = |mu: f64| -> f64 {
        lambdas
            .iter()
            .zip(z.iter())
            .map(|(&l, &zi)| (l * zi / (l + mu)).powi(2))
            .sum()
    };

    let target = radius * radius;
    let mut lo = 0.0;
    let mut hi = lmax * ny / radius;
    for _ in 0..PROJECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if norm_sq_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scaled = DVector::from_iterator(
        z.len(),
        lambdas.iter().zip(z.iter()).map(|(&l, &zi)| l * zi / (l + hi)),
    );
    let mut theta = &eig.eigenvectors * scaled;
    let n = theta.norm();
    if n > radius {
        theta *= radius / n;
    }
    theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(i: usize, m: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v
    }

    #[test]
    fn predict_clips() {
        let mut p = OnlinePredictor::new(OracleKind::Ogd, 3, LinkFunction::Identity);
        assert_eq!(p.predict(&[0.3, -0.2, 1.0]).unwrap(), 0.0);
        p.theta = DVector::from_vec(e(0, 3));
        assert!((p.predict(&[0.7, 0.0, 0.0]).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(p.predict(&[1.4, 0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            p.predict(&[1.0, 0.0]),
            Err(CbwkError::Shape { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn ogd_fixed_point_and_first_step() {
        let mut p = OnlinePredictor::new(OracleKind::Ogd, 2, LinkFunction::Identity);
        p.update(&e(0, 2), 0.0).unwrap();
        assert_eq!(p.theta().as_slice(), &[0.0, 0.0]);

        let mut p = OnlinePredictor::new(OracleKind::Ogd, 2, LinkFunction::Identity);
        // gradient -2 e1, eta_1 = 1, pre-projection 2 e1, projected to e1
        p.update(&e(0, 2), 1.0).unwrap();
        assert!((p.theta()[0] - 1.0).abs() < 1e-15);
        assert_eq!(p.theta()[1], 0.0);
        assert_eq!(p.steps(), 1);
    }

    #[test]
    fn ogd_projection_caps_norm() {
        let mut p = OnlinePredictor::new(OracleKind::Ogd, 2, LinkFunction::Identity);
        // pre-projection iterate 3 e1
        p.update(&[1.5, 0.0], 1.5).unwrap();
        assert!((p.theta().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn glmtron_zero_residual_keeps_theta() {
        let mut p = OnlinePredictor::new(OracleKind::GlmtronNewton, 3, LinkFunction::Logistic);
        p.theta = DVector::from_vec(vec![0.2, -0.1, 0.3]);
        let phi = [0.5, 0.5, 0.1];
        let y = LinkFunction::Logistic.apply(p.margin(&phi));
        let before = p.theta.clone();
        p.update(&phi, y).unwrap();
        assert!((p.theta() - before).norm() < 1e-15);
    }

    #[test]
    fn glmtron_first_inverse_update() {
        let mut p = OnlinePredictor::new(OracleKind::GlmtronNewton, 3, LinkFunction::Identity);
        p.update(&e(0, 3), 0.4).unwrap();
        let inv = p.design_inverse().unwrap();
        let mut want = DMatrix::<f64>::identity(3, 3);
        want[(0, 0)] = 0.5;
        assert!((inv - want).norm() < 1e-15);
        // least squares with unit ridge: theta_1 = 0.4 / 2
        assert!((p.theta()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rank_one_inverse_tracks_direct_inversion() {
        let m = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = OnlinePredictor::new(OracleKind::GlmtronNewton, m, LinkFunction::Identity);
        let mut acc = DMatrix::<f64>::identity(m, m);
        for _ in 0..1000 {
            let phi: Vec<f64> = (0..m).map(|_| rng.random_range(-0.35..0.35)).collect();
            let y = rng.random_range(0.0..1.0);
            p.update(&phi, y).unwrap();
            let v = DVector::from_vec(phi);
            acc += &v * v.transpose();
        }
        let direct = acc.clone().try_inverse().unwrap();
        let inv = p.design_inverse().unwrap();
        assert!((inv - direct).norm() < 1e-6);
        assert!(inv.clone().cholesky().is_some());
        assert!((inv - inv.transpose()).norm() < 1e-12);
    }

    #[test]
    fn corrupted_inverse_is_rebuilt() {
        let mut p = OnlinePredictor::new(OracleKind::GlmtronNewton, 3, LinkFunction::Identity);
        p.update(&[0.5, 0.2, 0.1], 0.3).unwrap();
        assert_eq!(p.reinitializations(), 0);
        p.corrupt_inverse(DMatrix::from_element(3, 3, 7.0));
        p.update(&[0.1, 0.4, 0.2], 0.6).unwrap();
        assert_eq!(p.reinitializations(), 1);
        let direct = p.design_matrix().unwrap().clone().try_inverse().unwrap();
        assert!((p.design_inverse().unwrap() - direct).norm() < 1e-10);
        assert!(p.theta().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn million_identical_features_stay_finite() {
        let mut p = OnlinePredictor::new(OracleKind::GlmtronNewton, 2, LinkFunction::Identity);
        let phi = [0.6, 0.8];
        for i in 0..1_000_000 {
            p.update(&phi, if i % 2 == 0 { 1.0 } else { 0.0 }).unwrap();
        }
        let pred = p.predict(&phi).unwrap();
        assert!(pred.is_finite());
        assert!((pred - 0.5).abs() < 1e-3);
        assert!(p.design_inverse().unwrap().clone().cholesky().is_some());
    }

    #[test]
    fn design_projection_is_feasible_and_optimal_on_a_diagonal_case() {
        // With A = diag(1, 4) the answer is computable by a 1-D search.
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let p = project_design_ball(&a, y.clone(), 1.0);
        assert!(p.norm() <= 1.0 + 1e-12);
        let cost = |t: &DVector<f64>| {
            let d = t - &y;
            (d.transpose() * &a * &d)[(0, 0)]
        };
        let best = (0..=100_000)
            .map(|k| {
                let ang = k as f64 / 100_000.0 * std::f64::consts::FRAC_PI_2;
                cost(&DVector::from_vec(vec![ang.cos(), ang.sin()]))
            })
            .fold(f64::MAX, f64::min);
        assert!(cost(&p) - best < 1e-4, "{} vs {best}", cost(&p));
    }
}
