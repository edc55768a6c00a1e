use serde::{Deserialize, Serialize};

use super::bounds::{CertificateReport, StepRule};
use super::CertificateError;
use crate::trace::RunTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    /// Iteration index of the first violation.
    pub first_violation: Option<usize>,
}

impl Check {
    fn skipped(name: &str, why: &str) -> Self {
        Self { name: name.into(), status: CheckStatus::Skipped, detail: why.into(), first_violation: None }
    }

    fn from_violation(name: &str, violation: Option<(usize, String)>, ok_detail: String) -> Self {
        match violation {
            Some((k, detail)) => Self { name: name.into(), status: CheckStatus::Fail, detail, first_violation: Some(k) },
            None => Self { name: name.into(), status: CheckStatus::Pass, detail: ok_detail, first_violation: None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Verdict {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const MONOTONE_TOL: f64 = 1e-12;
pub const DROP_TOL: f64 = 1e-9;
pub const ENVELOPE_FACTOR: f64 = 1.0 + 1e-6;
/// Absolute allowance, relative to `‖x⁰‖`, for rounding once the envelope
/// falls below machine resolution.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Per-step drop bound for the stacked iterate `x`:
/// `Σ_i Σ_{j∈N_i} α γ² ‖x_j − x_i‖² [(θ_i/2 − Θ_i − (L_i/2)r_i)(|N_i|/θ_i²)α + 1/(2Γ)]`.
pub fn certified_drop(report: &CertificateReport, alpha: &[f64], x: &[nalgebra::DVector<f64>]) -> f64 {
    let mut degree = vec![0usize; x.len()];
    for &(i, j) in &report.edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut total = 0.0;
    for (e, &(i, j)) in report.edges.iter().enumerate() {
        let a = alpha[e];
        let gamma = report.gamma_ij[e];
        let big_gamma = report.big_gamma_ij[e];
        let dist_sq = (&x[j] - &x[i]).norm_squared();
        for node in [i, j] {
            let theta = report.theta_i[node];
            let gap = theta / 2.0 - report.big_theta_i[node] - report.l_i[node] / 2.0 * report.radius_i[node];
            let bracket = gap * degree[node] as f64 / (theta * theta) * a + 1.0 / (2.0 * big_gamma);
            total += a * gamma * gamma * dist_sq * bracket;
        }
    }
    total
}

/// Check a run trace against its certificate report:
/// monotone `V`, the certified per-step drop, the linear-rate envelope and
/// ε-accuracy, each when the report and trace carry what the check needs.
pub fn verify_trace(trace: &RunTrace, report: &CertificateReport) -> Result<Verdict, CertificateError> {
    if let (Some(a), Some(b)) = (&trace.config_hash, &report.config_hash) {
        if a != b {
            return Err(CertificateError::Verification(format!(
                "trace was produced by configuration {a}, report by {b}"
            )));
        }
    }
    let mut warnings = Vec::new();
    if trace.records.is_empty() {
        warnings.push("empty trace: nothing to verify".to_string());
        return Ok(Verdict { passed: true, checks: Vec::new(), warnings });
    }
    let recs = &trace.records;
    let v0 = recs[0].v;
    let mut checks = Vec::new();

    let violation = recs.windows(2).find(|w| w[1].v > w[0].v + MONOTONE_TOL * v0).map(|w| {
        (w[1].k, format!("V rose from {:e} to {:e} at k = {}", w[0].v, w[1].v, w[1].k))
    });
    checks.push(Check::from_violation(
        "monotone",
        violation,
        format!("{} consecutive pairs non-increasing", recs.len() - 1),
    ));

    checks.push(match (&trace.iterates, &report.alpha_ij) {
        (Some(its), Some(alpha)) if its.len() == recs.len() => {
            let violation = recs.windows(2).zip(its).find_map(|(w, x)| {
                let drop = w[0].v - w[1].v;
                let need = certified_drop(report, alpha, x);
                (drop < need - DROP_TOL * v0)
                    .then(|| (w[0].k, format!("drop {drop:e} below certified {need:e} at k = {}", w[0].k)))
            });
            Check::from_violation("drop", violation, "every step meets the certified drop".into())
        }
        (None, _) => Check::skipped("drop", "iterates were not recorded"),
        _ => Check::skipped("drop", "report has no step sizes"),
    });

    checks.push(if !report.theorem3_applicable {
        Check::skipped("envelope", report.theorem3_reason.as_deref().unwrap_or("rate certificate not applicable"))
    } else {
        let q = report.q.expect("applicable implies q");
        let c = report.trajectory_constant.expect("applicable implies constant");
        let floor = ENVELOPE_FLOOR * report.x0_norm.max(1.0);
        let distances: Option<Vec<f64>> = match (&trace.iterates, report.suboptimality_bound) {
            (Some(its), _) => {
                let last = its.last().expect("non-empty");
                Some(
                    its.iter()
                        .map(|x| x.iter().zip(last).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt())
                        .collect(),
                )
            }
            // the consensus limit is x* itself
            (None, Some(0.0)) => Some(recs.iter().map(|r| r.dist_to_opt).collect()),
            _ => None,
        };
        match distances {
            None => Check::skipped("envelope", "neither iterates nor an exact consensus limit are available"),
            Some(d) => {
                let violation = recs.iter().zip(&d).find_map(|(r, &dist)| {
                    let env = c * q.powi(r.k as i32);
                    (dist > env * ENVELOPE_FACTOR + floor)
                        .then(|| (r.k, format!("distance {dist:e} exceeds envelope {env:e} at k = {}", r.k)))
                });
                Check::from_violation("envelope", violation, format!("‖x^k − x̃‖ ≤ {c:e}·{q}^k"))
            }
        }
    });

    checks.push(match (report.step_rule, report.epsilon) {
        (Some(StepRule::Theorem2 { epsilon, .. }), _) => {
            let last = recs.last().expect("non-empty");
            let violation = (last.dist_to_opt >= epsilon)
                .then(|| (last.k, format!("final distance {:e} is not below ε = {epsilon}", last.dist_to_opt)));
            Check::from_violation("epsilon", violation, format!("final distance {:e} < {epsilon}", last.dist_to_opt))
        }
        _ => Check::skipped("epsilon", "step sizes were not chosen for ε-accuracy"),
    });

    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(Verdict { passed, checks, warnings })
}
