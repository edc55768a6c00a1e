//! Lyapunov function, optimality error, constant estimation, and the
//! step-size and rate certificates checked against run traces.

mod bounds;
mod constants;
mod verify;

pub use bounds::{
    certified_step_sizes, certify, eta, eta_tilde, lemma1_stepsize_bound, theorem2_stepsize_bound, theorem3_rate,
    CertificateReport, RateCertificate, StepRule,
};
pub use constants::{estimate_constants, ConstantsEstimate, EdgeConstants, EstimateOptions, NodeConstants};
pub use verify::{verify_trace, Check, CheckStatus, Verdict};

use nalgebra::DVector;

use crate::linalg;
use crate::objectives::{Objective, ObjectiveError, ProblemInstance};

#[derive(Debug, thiserror::Error)]
pub enum CertificateError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("constant estimation failed: {0}")]
    Estimation(String),
    #[error("verification error: {0}")]
    Verification(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Topology(#[from] crate::topology::TopologyError),
}

/// Bregman gap `f(y) − f(x) − ∇f(x)ᵀ(y − x)`.
fn bregman(f: &Objective, y: &DVector<f64>, x: &DVector<f64>) -> Result<f64, ObjectiveError> {
    match f {
        // closed form avoids cancellation near the optimum
        Objective::Quadratic(q) => {
            let d = y - x;
            Ok(0.5 * d.dot(&(q.curvature() * &d)))
        }
        Objective::Logistic(_) => Ok(f.value(y)? - f.value(x)? - f.gradient(x)?.dot(&(y - x))),
    }
}

/// `V(x) = Σ_i f_i(x*) − f_i(x_i) − ∇f_i(x_i)ᵀ(x* − x_i)`.
pub fn lyapunov(x: &[DVector<f64>], inst: &ProblemInstance) -> Result<f64, ObjectiveError> {
    let opt = inst.optimum();
    x.iter().zip(inst.objectives()).map(|(xi, f)| bregman(f, opt, xi)).sum()
}

/// `(Σ_i ‖x_i − x̄‖²)^½`.
pub fn consensus_error(x: &[DVector<f64>]) -> f64 {
    let m = linalg::mean(x);
    x.iter().map(|xi| (xi - &m).norm_squared()).sum::<f64>().sqrt()
}

pub fn gradient_sum(x: &[DVector<f64>], inst: &ProblemInstance) -> Result<DVector<f64>, ObjectiveError> {
    let mut g = DVector::zeros(inst.dim());
    for (xi, f) in x.iter().zip(inst.objectives()) {
        g += f.gradient(xi)?;
    }
    Ok(g)
}

/// `e = ‖Σ_i ∇f_i(x_i)‖ + (Σ_i ‖x_i − x̄‖²)^½`.
pub fn optimality_error(x: &[DVector<f64>], inst: &ProblemInstance) -> Result<f64, ObjectiveError> {
    Ok(gradient_sum(x, inst)?.norm() + consensus_error(x))
}
