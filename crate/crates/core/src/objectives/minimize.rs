use nalgebra::{DMatrix, DVector};

use super::{Objective, ObjectiveError};
use crate::linalg::SpdFactor;

/// Stopping rule for damped Newton.
///
/// A point is accepted only when the gradient norm is below `tol` *and* the
/// Newton step there is below `step_tol * (1 + ‖x‖)`. The second condition
/// rejects flat directions (separable logistic data) where the gradient
/// decays towards zero without a minimizer existing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, step_tol: 1e-6, max_iters: 200 }
    }
}

impl NewtonOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Damped Newton with Armijo backtracking from `x0`.
pub fn newton_minimize<V, G, H>(
    value: V,
    gradient: G,
    hessian: H,
    x0: DVector<f64>,
    opts: NewtonOptions,
) -> Result<DVector<f64>, ObjectiveError>
where
    V: Fn(&DVector<f64>) -> Result<f64, ObjectiveError>,
    G: Fn(&DVector<f64>) -> Result<DVector<f64>, ObjectiveError>,
    H: Fn(&DVector<f64>) -> Result<DMatrix<f64>, ObjectiveError>,
{
    if !(opts.tol > 0.0) {
        return Err(ObjectiveError::Domain(format!("tolerance {} is not positive", opts.tol)));
    }
    let mut x = x0;
    let mut fx = value(&x)?;
    let mut grad_norm = f64::INFINITY;
    let mut step_norm = f64::INFINITY;
    for _ in 0..opts.max_iters {
        let g = gradient(&x)?;
        grad_norm = g.norm();
        let factor = SpdFactor::new(&hessian(&x)?).map_err(|e| {
            ObjectiveError::Domain(format!("Hessian factorization failed during Newton: {e:?}"))
        })?;
        let d = -factor.solve(&g);
        step_norm = d.norm();
        if grad_norm <= opts.tol && step_norm <= opts.step_tol * (1.0 + x.norm()) {
            return Ok(x);
        }
        let slope = g.dot(&d);
        let mut t = 1.0;
        loop {
            let trial = &x + &d * t;
            let ft = value(&trial)?;
            // rounding slack so that steps near the optimum are not rejected
            if ft <= fx + 1e-4 * t * slope + 1e-13 * fx.abs().max(1.0) || t < 1e-10 {
                x = trial;
                fx = ft;
                break;
            }
            t *= 0.5;
        }
    }
    Err(ObjectiveError::Convergence { iterations: opts.max_iters, grad_norm, step_norm })
}

/// Minimizer of a single node objective. Quadratics return their center.
pub fn local_minimizer(f: &Objective, opts: NewtonOptions) -> Result<DVector<f64>, ObjectiveError> {
    match f {
        Objective::Quadratic(q) => Ok(q.center().clone()),
        Objective::Logistic(_) => newton_minimize(
            |x| f.value(x),
            |x| f.gradient(x),
            |x| f.hessian(x),
            DVector::zeros(f.dim()),
            opts,
        ),
    }
}

/// Minimizer of `Σ_i f_i` by damped Newton on the sum.
pub fn centralized_optimum(
    objectives: &[Objective],
    opts: NewtonOptions,
) -> Result<DVector<f64>, ObjectiveError> {
    let n = objectives
        .first()
        .ok_or_else(|| ObjectiveError::Invalid("no objectives".into()))?
        .dim();
    let value = |x: &DVector<f64>| objectives.iter().map(|f| f.value(x)).sum::<Result<f64, _>>();
    let gradient = |x: &DVector<f64>| {
        let mut g = DVector::zeros(n);
        for f in objectives {
            g += f.gradient(x)?;
        }
        Ok(g)
    };
    let hessian = |x: &DVector<f64>| {
        let mut h = DMatrix::zeros(n, n);
        for f in objectives {
            h += f.hessian(x)?;
        }
        Ok(h)
    };
    newton_minimize(value, gradient, hessian, DVector::zeros(n), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{LogisticObjective, QuadraticObjective};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn quad(scale: f64, b: &[f64]) -> Objective {
        Objective::Quadratic(QuadraticObjective::isotropic(scale, dv(b)).unwrap())
    }

    #[test]
    fn quadratic_minimizer_is_exact() {
        let x = local_minimizer(&quad(1.0, &[2.0, -1.0]), NewtonOptions::default()).unwrap();
        assert_eq!(x, dv(&[2.0, -1.0]));
    }

    #[test]
    fn single_sample_logistic_is_rejected() {
        let f = Objective::Logistic(
            LogisticObjective::new(DMatrix::from_row_slice(1, 1, &[1.0]), dv(&[1.0])).unwrap(),
        );
        let err = local_minimizer(&f, NewtonOptions::default()).unwrap_err();
        match err {
            ObjectiveError::Convergence { grad_norm, step_norm, .. } => {
                // the gradient is tiny, but the Newton step never shrinks
                assert!(grad_norm < 1e-10);
                assert!(step_norm >= 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn balanced_logistic_minimizer_is_zero() {
        // bisection on the scalar gradient brackets the root at 0
        let g = |x: f64| -1.0 / (1.0 + x.exp()) + 1.0 / (1.0 + (-x).exp());
        let (mut lo, mut hi) = (-3.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(lo.abs() < 1e-12);
        let f = Objective::Logistic(
            LogisticObjective::new(DMatrix::from_row_slice(2, 1, &[1.0, 1.0]), dv(&[1.0, -1.0])).unwrap(),
        );
        let x = local_minimizer(&f, NewtonOptions::default()).unwrap();
        assert!((x[0] - lo).abs() < 1e-12);
    }

    #[test]
    fn average_of_identity_quadratics() {
        let x = centralized_optimum(&[quad(1.0, &[0.0]), quad(1.0, &[2.0])], NewtonOptions::default())
            .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_quadratics() {
        // 1·x + 3·(x − 4) = 0
        let x = centralized_optimum(&[quad(1.0, &[0.0]), quad(3.0, &[4.0])], NewtonOptions::default())
            .unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn non_positive_tolerance_is_rejected() {
        let f = quad(1.0, &[0.0]);
        assert!(centralized_optimum(&[f], NewtonOptions::with_tol(0.0)).is_err());
    }
}
