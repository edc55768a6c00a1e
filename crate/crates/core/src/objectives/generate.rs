use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use super::{local_minimizer, LogisticObjective, NewtonOptions, Objective, ObjectiveError, QuadraticObjective};

/// Random quadratics `B_i = Q diag(λ) Qᵀ` with `λ ~ U[eig_min, eig_max]` and `b_i ~ N(0, center_std² I)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadraticSpec {
    pub dim: usize,
    pub eig_min: f64,
    pub eig_max: f64,
    pub center_std: f64,
}

impl QuadraticSpec {
    pub fn new(dim: usize) -> Self {
        Self { dim, eig_min: 1.0, eig_max: 4.0, center_std: 1.0 }
    }

    /// Every node gets `B_i = I` exactly.
    pub fn identity(dim: usize) -> Self {
        Self { dim, eig_min: 1.0, eig_max: 1.0, center_std: 1.0 }
    }

    fn validate(&self) -> Result<(), ObjectiveError> {
        if self.dim == 0 {
            return Err(ObjectiveError::Invalid("dimension must be positive".into()));
        }
        if !(self.eig_min > 0.0 && self.eig_max >= self.eig_min && self.eig_max.is_finite()) {
            return Err(ObjectiveError::Invalid(format!(
                "eigenvalue range [{}, {}] must be positive and ordered",
                self.eig_min, self.eig_max
            )));
        }
        if !(self.center_std >= 0.0 && self.center_std.is_finite()) {
            return Err(ObjectiveError::Invalid("center_std must be finite and non-negative".into()));
        }
        Ok(())
    }
}

pub fn quadratic_objectives(
    nodes: usize,
    spec: &QuadraticSpec,
    seed: u64,
) -> Result<Vec<Objective>, ObjectiveError> {
    spec.validate()?;
    if nodes < 2 {
        return Err(ObjectiveError::Invalid("need at least two nodes".into()));
    }
    let n = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        let curvature = if spec.eig_min == spec.eig_max {
            DMatrix::identity(n, n) * spec.eig_min
        } else {
            let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
            let q = g.qr().q();
            let span = Uniform::new_inclusive(spec.eig_min, spec.eig_max).expect("validated range");
            let lambda = DVector::<f64>::from_fn(n, |_, _| span.sample(&mut rng));
            let b: DMatrix<f64> = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
            (&b + b.transpose()) * 0.5
        };
        let center = DVector::from_fn(n, |_, _| {
            spec.center_std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        out.push(Objective::Quadratic(QuadraticObjective::new(curvature, center)?));
    }
    Ok(out)
}

/// Balanced two-class logistic data per node.
///
/// Each class has `samples_per_class` samples whose first `dim - 1` features
/// are `N(±mean, std²)` and whose last feature is the constant 1.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogisticSpec {
    pub dim: usize,
    pub mean: f64,
    pub std: f64,
    pub samples_per_class: usize,
    /// Redraw a node's data until its local minimizer exists.
    pub redraw_separable: bool,
    pub max_redraws: usize,
}

impl LogisticSpec {
    /// Two samples per dimension, class means ±10, unit variance, no redraws.
    pub fn reference(dim: usize) -> Self {
        Self { dim, mean: 10.0, std: 1.0, samples_per_class: dim, redraw_separable: false, max_redraws: 0 }
    }

    /// Overlapping classes with enough samples that every node has a
    /// strongly convex minimizer and the certificate balls stay bounded.
    pub fn well_posed(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            mean: 0.2,
            std: 1.0,
            samples_per_class: 4 * nodes * dim,
            redraw_separable: true,
            max_redraws: 100,
        }
    }

    fn validate(&self) -> Result<(), ObjectiveError> {
        if self.dim < 2 {
            return Err(ObjectiveError::Invalid("logistic dimension must be at least 2".into()));
        }
        if self.samples_per_class == 0 {
            return Err(ObjectiveError::Invalid("samples_per_class must be positive".into()));
        }
        if !(self.std > 0.0 && self.std.is_finite() && self.mean.is_finite()) {
            return Err(ObjectiveError::Invalid("mean must be finite and std positive".into()));
        }
        Ok(())
    }
}

fn draw_logistic(spec: &LogisticSpec, rng: &mut ChaCha8Rng) -> LogisticObjective {
    let n = spec.dim;
    let m = 2 * spec.samples_per_class;
    let pos = Normal::new(spec.mean, spec.std).expect("validated");
    let neg = Normal::new(-spec.mean, spec.std).expect("validated");
    let mut features = DMatrix::zeros(m, n);
    let mut labels = DVector::zeros(m);
    for s in 0..m {
        let (label, dist) = if s % 2 == 0 { (1.0, &pos) } else { (-1.0, &neg) };
        for c in 0..n - 1 {
            features[(s, c)] = dist.sample(rng);
        }
        features[(s, n - 1)] = 1.0;
        labels[s] = label;
    }
    LogisticObjective::new(features, labels).expect("generated data is valid")
}

pub fn logistic_objectives(
    nodes: usize,
    spec: &LogisticSpec,
    seed: u64,
) -> Result<Vec<Objective>, ObjectiveError> {
    spec.validate()?;
    if nodes < 2 {
        return Err(ObjectiveError::Invalid("need at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let mut f = Objective::Logistic(draw_logistic(spec, &mut rng));
        if spec.redraw_separable {
            let mut attempts = 0;
            while let Err(e) = local_minimizer(&f, NewtonOptions::default()) {
                attempts += 1;
                if attempts > spec.max_redraws {
                    return Err(e.at_node(node));
                }
                f = Objective::Logistic(draw_logistic(spec, &mut rng));
            }
        }
        out.push(f);
    }
    Ok(out)
}
