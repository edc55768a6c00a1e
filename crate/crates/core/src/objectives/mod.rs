//! Node objective functions, Newton-based minimizers and problem instances.

mod generate;
mod instance;
mod minimize;

pub use generate::{logistic_objectives, quadratic_objectives, LogisticSpec, QuadraticSpec};
pub use instance::{InstanceFile, NodePayload, ProblemInstance, Sample};
pub use minimize::{centralized_optimum, local_minimizer, newton_minimize, NewtonOptions};

use nalgebra::{DMatrix, DVector};

use crate::linalg;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid objective: {0}")]
    Invalid(String),
    #[error("Newton did not converge after {iterations} iterations (last gradient norm {grad_norm:e}, last step norm {step_norm:e})")]
    Convergence { iterations: usize, grad_norm: f64, step_norm: f64 },
    #[error("node {node}: {source}")]
    Node {
        node: usize,
        #[source]
        source: Box<ObjectiveError>,
    },
    #[error(transparent)]
    Topology(#[from] crate::topology::TopologyError),
}

impl ObjectiveError {
    pub(crate) fn at_node(self, node: usize) -> Self {
        ObjectiveError::Node { node, source: Box::new(self) }
    }
}

/// `f(x) = (x - b)ᵀ B (x - b) / 2` with `B` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    curvature: DMatrix<f64>,
    center: DVector<f64>,
    eig_min: f64,
    eig_max: f64,
}

impl QuadraticObjective {
    pub fn new(curvature: DMatrix<f64>, center: DVector<f64>) -> Result<Self, ObjectiveError> {
        if !curvature.is_square() || curvature.nrows() != center.len() {
            return Err(ObjectiveError::Invalid("B must be n×n with b in R^n".into()));
        }
        if !linalg::is_symmetric(&curvature, 1e-12) {
            return Err(ObjectiveError::Invalid("B is not symmetric".into()));
        }
        let (eig_min, eig_max) = linalg::extreme_eigenvalues(&curvature);
        if !(eig_min > 0.0) {
            return Err(ObjectiveError::Invalid(format!("B is not positive definite (λ_min = {eig_min})")));
        }
        Ok(Self { curvature, center, eig_min, eig_max })
    }

    /// `B = scale * I`.
    pub fn isotropic(scale: f64, center: DVector<f64>) -> Result<Self, ObjectiveError> {
        let n = center.len();
        Self::new(DMatrix::identity(n, n) * scale, center)
    }

    pub fn curvature(&self) -> &DMatrix<f64> {
        &self.curvature
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn eig_min(&self) -> f64 {
        self.eig_min
    }

    pub fn eig_max(&self) -> f64 {
        self.eig_max
    }
}

/// `f(x) = Σ_j ln(1 + exp(-v_j u_jᵀ x))` over labelled samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticObjective {
    /// One sample per row.
    features: DMatrix<f64>,
    labels: DVector<f64>,
}

impl LogisticObjective {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self, ObjectiveError> {
        if features.nrows() != labels.len() || features.nrows() == 0 {
            return Err(ObjectiveError::Invalid("need one label per sample and at least one sample".into()));
        }
        if labels.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(ObjectiveError::Invalid("labels must be +1 or -1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::Invalid("non-finite feature".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    /// Largest eigenvalue of `Σ_j u_j u_jᵀ / 4`, a global bound on the Hessian.
    pub fn hessian_bound(&self) -> f64 {
        let gram = self.features.transpose() * &self.features;
        linalg::extreme_eigenvalues(&gram).1 / 4.0
    }

    fn margins(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.features * x).component_mul(&self.labels)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Quadratic,
    Logistic,
    Mixed,
}

/// A node's local objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Quadratic(QuadraticObjective),
    Logistic(LogisticObjective),
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic(q) => q.center.len(),
            Objective::Logistic(l) => l.features.ncols(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Objective::Quadratic(_))
    }

    fn check(&self, x: &DVector<f64>) -> Result<(), ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::Domain(format!(
                "point has dimension {}, objective expects {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::Domain("non-finite query point".into()));
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64, ObjectiveError> {
        self.check(x)?;
        Ok(match self {
            Objective::Quadratic(q) => {
                let d = x - &q.center;
                0.5 * d.dot(&(&q.curvature * &d))
            }
            Objective::Logistic(l) => l.margins(x).iter().map(|&z| softplus(-z)).sum(),
        })
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, ObjectiveError> {
        self.check(x)?;
        Ok(match self {
            Objective::Quadratic(q) => &q.curvature * (x - &q.center),
            Objective::Logistic(l) => {
                let z = l.margins(x);
                // d/dx ln(1+exp(-z_j)) = -σ(-z_j) v_j u_j
                let w = DVector::from_iterator(
                    z.len(),
                    z.iter().zip(l.labels.iter()).map(|(&z, &v)| -sigmoid(-z) * v),
                );
                l.features.tr_mul(&w)
            }
        })
    }

    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, ObjectiveError> {
        self.check(x)?;
        Ok(match self {
            Objective::Quadratic(q) => q.curvature.clone(),
            Objective::Logistic(l) => {
                let z = l.margins(x);
                let mut scaled = l.features.clone();
                for (mut row, &zj) in scaled.row_iter_mut().zip(z.iter()) {
                    row *= sigmoid(zj) * sigmoid(-zj);
                }
                let h = l.features.tr_mul(&scaled);
                // symmetrize away rounding asymmetry
                (&h + h.transpose()) * 0.5
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn quadratic_identity_formulas() {
        let f = Objective::Quadratic(QuadraticObjective::isotropic(1.0, dv(&[0.0, 0.0])).unwrap());
        let x = dv(&[3.0, 4.0]);
        assert_eq!(f.value(&x).unwrap(), 12.5);
        assert_eq!(f.gradient(&x).unwrap(), x);
        assert_eq!(f.hessian(&x).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn logistic_single_sample_at_origin() {
        let mut u = DMatrix::zeros(1, 4);
        u[(0, 3)] = 1.0;
        let f = Objective::Logistic(LogisticObjective::new(u, dv(&[1.0])).unwrap());
        let x = DVector::zeros(4);
        assert!((f.value(&x).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(f.gradient(&x).unwrap(), dv(&[0.0, 0.0, 0.0, -0.5]));
    }

    #[test]
    fn logistic_is_stable_at_extreme_margins() {
        let u = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let f = Objective::Logistic(LogisticObjective::new(u, dv(&[1.0, -1.0])).unwrap());
        for x in [-800.0, 800.0] {
            let x = dv(&[x]);
            let v = f.value(&x).unwrap();
            assert!((v - 800.0).abs() < 1e-9, "{v}");
            assert!(f.gradient(&x).unwrap()[0].is_finite());
            assert!(f.hessian(&x).unwrap()[(0, 0)] >= 0.0);
        }
    }

    #[test]
    fn non_finite_query_is_domain_error() {
        let f = Objective::Quadratic(QuadraticObjective::isotropic(1.0, dv(&[0.0])).unwrap());
        assert!(matches!(f.value(&dv(&[f64::NAN])), Err(ObjectiveError::Domain(_))));
        assert!(matches!(f.gradient(&dv(&[f64::INFINITY])), Err(ObjectiveError::Domain(_))));
        assert!(matches!(f.hessian(&dv(&[0.0, 1.0])), Err(ObjectiveError::Domain(_))));
    }

    #[test]
    fn invalid_construction() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(QuadraticObjective::new(b, dv(&[0.0, 0.0])).is_err());
        let u = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(LogisticObjective::new(u, dv(&[0.5])).is_err());
    }
}
