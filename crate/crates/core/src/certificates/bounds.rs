use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::constants::{ConstantsEstimate, Estimator, EstimateOptions, NodeConstants};
use super::CertificateError;
use crate::dean::SurrogateFamily;
use crate::objectives::ProblemInstance;
use crate::topology::{spectrum, unit_laplacian, EdgeWeights, Graph};

/// How a run's per-link step sizes were chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Uniform(f64),
    /// Fraction of the Lyapunov-monotonicity bound.
    Lemma1Fraction(f64),
    /// Fraction of the ε-accuracy bound.
    Theorem2 { epsilon: f64, fraction: f64 },
    PerEdge,
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Uniform(a) => write!(f, "uniform:{a}"),
            StepRule::Lemma1Fraction(x) => write!(f, "lemma1-frac:{x}"),
            StepRule::Theorem2 { epsilon, fraction } => write!(f, "theorem2:{epsilon}:{fraction}"),
            StepRule::PerEdge => write!(f, "file"),
        }
    }
}

impl FromStr for StepRule {
    type Err = CertificateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CertificateError::Parameter(format!("unrecognised step rule {s:?}"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let rule = match parts.as_slice() {
            ["uniform", a] => StepRule::Uniform(num(a)?),
            ["lemma1-frac", x] => StepRule::Lemma1Fraction(num(x)?),
            ["theorem2", e] => StepRule::Theorem2 { epsilon: num(e)?, fraction: 0.9 },
            ["theorem2", e, x] => StepRule::Theorem2 { epsilon: num(e)?, fraction: num(x)? },
            ["file"] => StepRule::PerEdge,
            _ => return Err(bad()),
        };
        match rule {
            StepRule::Uniform(a) if !(a > 0.0 && a.is_finite()) => Err(bad()),
            StepRule::Lemma1Fraction(x) | StepRule::Theorem2 { fraction: x, .. } if !(x > 0.0 && x < 1.0) => {
                Err(CertificateError::Parameter(format!("fraction {x} must lie in (0, 1)")))
            }
            StepRule::Theorem2 { epsilon, .. } if !(epsilon > 0.0) => {
                Err(CertificateError::Parameter(format!("ε = {epsilon} must be positive")))
            }
            r => Ok(r),
        }
    }
}

impl Serialize for StepRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StepRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `Θ' − θ'/2 + (L'/2)·√(2V(x⁰)/θ)`
fn ext_curvature_gap(c: &NodeConstants) -> f64 {
    c.smoothness_ext - c.convexity_ext / 2.0 + c.hessian_lipschitz_ext / 2.0 * c.radius
}

/// `θ_i/2 − Θ_i − (L_i/2)·√(2V(x⁰)/θ_i)`, negative in practice.
fn base_curvature_gap(c: &NodeConstants) -> f64 {
    c.convexity / 2.0 - c.smoothness - c.hessian_lipschitz / 2.0 * c.radius
}

fn per_edge(
    graph: &Graph,
    c: &ConstantsEstimate,
    value: impl Fn(usize, usize, usize) -> f64,
) -> Result<EdgeWeights, CertificateError> {
    check_shape(graph, c)?;
    let w = graph.edges().iter().enumerate().map(|(e, &(i, j))| ((i, j), value(e, i, j)));
    EdgeWeights::new(graph, w).map_err(|e| CertificateError::Estimation(format!("non-positive bound: {e}")))
}

fn check_shape(graph: &Graph, c: &ConstantsEstimate) -> Result<(), CertificateError> {
    if c.nodes.len() != graph.node_count() || c.edges.len() != graph.edge_count() {
        return Err(CertificateError::Parameter("constants do not match the graph".into()));
    }
    Ok(())
}

/// Per-link step-size ceiling under which `V` cannot increase.
pub fn lemma1_stepsize_bound(c: &ConstantsEstimate, graph: &Graph) -> Result<EdgeWeights, CertificateError> {
    let term = |i: usize| {
        let n = &c.nodes[i];
        n.convexity * n.convexity / (graph.degree(i) as f64 * ext_curvature_gap(n))
    };
    per_edge(graph, c, |e, i, j| term(i).min(term(j)) / (2.0 * c.edges[e].smoothness))
}

fn hull_convexity_sum(c: &ConstantsEstimate) -> f64 {
    c.nodes.iter().map(|n| n.convexity_hull).sum()
}

/// `|N_i| L_i √N V(x⁰) / (θ_i² Σ_ℓ θ̄_ℓ)`
pub fn eta(c: &ConstantsEstimate, graph: &Graph, i: usize) -> f64 {
    let n = &c.nodes[i];
    graph.degree(i) as f64 * n.hessian_lipschitz * (c.nodes.len() as f64).sqrt() * c.v0
        / (n.convexity * n.convexity * hull_convexity_sum(c))
}

/// `2|N_i| (Θ'_i − θ'_i/2 + (L'_i/2)√(2V(x⁰)/θ_i)) / θ_i²`
pub fn eta_tilde(c: &ConstantsEstimate, graph: &Graph, i: usize) -> f64 {
    let n = &c.nodes[i];
    2.0 * graph.degree(i) as f64 * ext_curvature_gap(n) / (n.convexity * n.convexity)
}

/// Per-link step-size ceiling that keeps the limit within `epsilon` of `x*`.
pub fn theorem2_stepsize_bound(
    c: &ConstantsEstimate,
    graph: &Graph,
    epsilon: f64,
) -> Result<EdgeWeights, CertificateError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CertificateError::Parameter(format!("ε = {epsilon} must be positive")));
    }
    let term = |i: usize| 1.0 / (eta(c, graph, i) + eta_tilde(c, graph, i) * epsilon);
    per_edge(graph, c, |e, i, j| epsilon / c.edges[e].smoothness * term(i).min(term(j)))
}

/// Linear-rate certificate for identity surrogates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub applicable: bool,
    pub reason: Option<String>,
    pub q: f64,
    pub trajectory_constant: Option<f64>,
    pub suboptimality_bound: Option<f64>,
    pub rho: Vec<f64>,
    pub rho_tilde: Vec<f64>,
    pub lambda_2: f64,
    pub lambda_max: f64,
}

/// Rate `q`, envelope constant and distance bound from the consensus limit
/// to `x*`. Violated preconditions give `applicable == false`, not an error.
pub fn theorem3_rate(
    c: &ConstantsEstimate,
    graph: &Graph,
    g: &SurrogateFamily,
    alpha: &EdgeWeights,
    x0_norm: f64,
) -> Result<RateCertificate, CertificateError> {
    check_shape(graph, c)?;
    let spec = spectrum(&unit_laplacian(graph))?;
    let (a_max, a_min) = (alpha.max(), alpha.min());
    let theta = c.convexity_min();
    let big_theta = c.smoothness_max();
    let q = (a_max * spec.lambda_max / theta - 1.0).max(1.0 - a_min * spec.lambda_2 / big_theta);

    let mut rho = Vec::with_capacity(c.nodes.len());
    let mut rho_tilde = Vec::with_capacity(c.nodes.len());
    for (i, n) in c.nodes.iter().enumerate() {
        let deg = graph.degree(i) as f64;
        let mut max_a: f64 = 0.0;
        let mut max_ag: f64 = 0.0;
        for &j in graph.neighbors(i) {
            let a = alpha.get(i, j).unwrap_or(f64::NAN);
            let e = graph.edge_index(i, j).expect("neighbour implies link");
            max_a = max_a.max(a);
            max_ag = max_ag.max(a * c.edges[e].smoothness);
        }
        let sq = n.convexity * n.convexity;
        rho.push(sq / (2.0 * deg * max_ag) + base_curvature_gap(n));
        rho_tilde.push(sq / (2.0 * deg * max_a) + base_curvature_gap(n));
    }

    let mut reasons = Vec::new();
    if !g.all_identity() {
        reasons.push("requires identity surrogates on every link".to_string());
    }
    let lemma = lemma1_stepsize_bound(c, graph)?;
    if let Some(((i, j), a)) = alpha.iter().find(|&((i, j), a)| lemma.get(i, j).is_none_or(|b| a >= b)) {
        reasons.push(format!("step {a} on ({i},{j}) is not below the monotonicity bound"));
    }
    let deg_cap = theta / graph.max_degree() as f64;
    if a_max >= deg_cap {
        reasons.push(format!("largest step {a_max} is not below θ/max|N_i| = {deg_cap}"));
    }
    if !(q > 0.0 && q < 1.0) {
        reasons.push(format!("q = {q} outside (0, 1)"));
    }
    let valid_q = q > 0.0 && q < 1.0;
    let trajectory_constant = valid_q.then(|| a_max * spec.lambda_max * x0_norm / (theta * (1.0 - q)));
    let all_positive = rho_tilde.iter().all(|&r| r > 0.0);
    let suboptimality_bound = all_positive.then(|| {
        let worst = c
            .nodes
            .iter()
            .zip(&rho_tilde)
            .map(|(n, r)| n.hessian_lipschitz / r)
            .fold(0.0, f64::max);
        worst * (c.nodes.len() as f64).sqrt() * c.v0 / (2.0 * hull_convexity_sum(c))
    });
    Ok(RateCertificate {
        applicable: reasons.is_empty(),
        reason: (!reasons.is_empty()).then(|| reasons.join("; ")),
        q,
        trajectory_constant,
        suboptimality_bound,
        rho,
        rho_tilde,
        lambda_2: spec.lambda_2,
        lambda_max: spec.lambda_max,
    })
}

/// Step sizes at `fraction` of a certified bound, with `ᾱ` iterated until it
/// agrees with the largest resulting step. Each `α_ij ≤ ᾱ` holds on return.
pub fn certified_step_sizes(
    inst: &ProblemInstance,
    g: &SurrogateFamily,
    rule: StepRule,
    opts: EstimateOptions,
) -> Result<(EdgeWeights, ConstantsEstimate), CertificateError> {
    let graph = inst.graph();
    type BoundFn<'g> = Box<dyn Fn(&ConstantsEstimate) -> Result<EdgeWeights, CertificateError> + 'g>;
    let (fraction, bound): (f64, BoundFn) =
        match rule {
            StepRule::Lemma1Fraction(x) => (x, Box::new(|c| lemma1_stepsize_bound(c, graph))),
            StepRule::Theorem2 { epsilon, fraction } => {
                (fraction, Box::new(move |c| theorem2_stepsize_bound(c, graph, epsilon)))
            }
            other => {
                return Err(CertificateError::Parameter(format!("{other} is not a certified step rule")));
            }
        };
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CertificateError::Parameter(format!("fraction {fraction} must lie in (0, 1)")));
    }
    let est = Estimator::new(inst, g, opts)?;
    let mut alpha_bar = opts.alpha_bar;
    let mut c = est.at_alpha_bar(alpha_bar)?;
    for _ in 0..8 {
        let target = fraction * bound(&c)?.max();
        if (target - alpha_bar).abs() <= 1e-2 * alpha_bar {
            break;
        }
        alpha_bar = target;
        c = est.at_alpha_bar(alpha_bar)?;
    }
    let b = bound(&c)?;
    let alpha = EdgeWeights::new(graph, b.iter().map(|(e, v)| (e, (fraction * v).min(alpha_bar))))?;
    Ok((alpha, c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub edges: Vec<(usize, usize)>,
    #[serde(rename = "V0")]
    pub v0: f64,
    pub alpha_bar: f64,
    pub certified: bool,
    pub step_rule: Option<StepRule>,
    pub theta_i: Vec<f64>,
    #[serde(rename = "Theta_i")]
    pub big_theta_i: Vec<f64>,
    #[serde(rename = "L_i")]
    pub l_i: Vec<f64>,
    pub theta_prime_i: Vec<f64>,
    #[serde(rename = "Theta_prime_i")]
    pub big_theta_prime_i: Vec<f64>,
    #[serde(rename = "L_prime_i")]
    pub l_prime_i: Vec<f64>,
    pub theta_bar_i: Vec<f64>,
    #[serde(rename = "Theta_bar_i")]
    pub big_theta_bar_i: Vec<f64>,
    pub delta_i: Vec<f64>,
    pub radius_i: Vec<f64>,
    pub gamma_ij: Vec<f64>,
    #[serde(rename = "Gamma_ij")]
    pub big_gamma_ij: Vec<f64>,
    pub theta: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
    pub lemma1_bound_ij: Vec<f64>,
    pub alpha_ij: Option<Vec<f64>>,
    pub lemma1_holds: Option<bool>,
    pub epsilon: Option<f64>,
    pub theorem2_bound_ij: Option<Vec<f64>>,
    pub eta_i: Vec<f64>,
    pub eta_tilde_i: Vec<f64>,
    pub rho_i: Option<Vec<f64>>,
    pub rho_tilde_i: Option<Vec<f64>>,
    pub q: Option<f64>,
    pub trajectory_constant: Option<f64>,
    pub suboptimality_bound: Option<f64>,
    pub theorem3_applicable: bool,
    pub theorem3_reason: Option<String>,
    pub lambda_2: f64,
    pub lambda_max: f64,
    /// Stacked norm of the initial iterate.
    pub x0_norm: f64,
    pub sampling_budget: usize,
    pub sampling_seed: u64,
    pub rounds_i: Vec<usize>,
    pub converged_i: Vec<bool>,
    pub config_hash: Option<String>,
    pub effective_config: Option<serde_json::Value>,
}

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, CertificateError> {
        serde_json::from_str(text).map_err(|e| CertificateError::Parameter(format!("report JSON: {e}")))
    }
}

/// Assemble every applicable bound for the given constants and, when
/// supplied, the run's step sizes.
pub fn certify(
    inst: &ProblemInstance,
    g: &SurrogateFamily,
    c: &ConstantsEstimate,
    alpha: Option<&EdgeWeights>,
    rule: Option<StepRule>,
    epsilon: Option<f64>,
) -> Result<CertificateReport, CertificateError> {
    let graph = inst.graph();
    check_shape(graph, c)?;
    let col = |f: fn(&NodeConstants) -> f64| c.nodes.iter().map(f).collect::<Vec<_>>();
    let lemma = lemma1_stepsize_bound(c, graph)?;
    let by_edge = |w: &EdgeWeights| graph.edges().iter().map(|&(i, j)| w.get(i, j).unwrap_or(f64::NAN)).collect();
    let theorem2 = epsilon.map(|eps| theorem2_stepsize_bound(c, graph, eps)).transpose()?;
    let x0_norm = crate::linalg::stacked_norm(inst.local_minimizers());
    let rate = alpha.map(|a| theorem3_rate(c, graph, g, a, x0_norm)).transpose()?;
    let spec = spectrum(&unit_laplacian(graph))?;
    let lemma1_holds = alpha.map(|a| {
        graph.edges().iter().all(|&(i, j)| match (a.get(i, j), lemma.get(i, j)) {
            (Some(x), Some(b)) => x < b && x <= c.alpha_bar * (1.0 + 1e-12),
            _ => false,
        })
    });
    Ok(CertificateReport {
        edges: graph.edges().to_vec(),
        v0: c.v0,
        alpha_bar: c.alpha_bar,
        certified: c.certified(),
        step_rule: rule,
        theta_i: col(|n| n.convexity),
        big_theta_i: col(|n| n.smoothness),
        l_i: col(|n| n.hessian_lipschitz),
        theta_prime_i: col(|n| n.convexity_ext),
        big_theta_prime_i: col(|n| n.smoothness_ext),
        l_prime_i: col(|n| n.hessian_lipschitz_ext),
        theta_bar_i: col(|n| n.convexity_hull),
        big_theta_bar_i: col(|n| n.smoothness_hull),
        delta_i: col(|n| n.step_reach),
        radius_i: col(|n| n.radius),
        gamma_ij: c.edges.iter().map(|e| e.convexity).collect(),
        big_gamma_ij: c.edges.iter().map(|e| e.smoothness).collect(),
        theta: c.convexity_min(),
        big_theta: c.smoothness_max(),
        lemma1_bound_ij: by_edge(&lemma),
        alpha_ij: alpha.map(by_edge),
        lemma1_holds,
        epsilon,
        theorem2_bound_ij: theorem2.as_ref().map(by_edge),
        eta_i: (0..graph.node_count()).map(|i| eta(c, graph, i)).collect(),
        eta_tilde_i: (0..graph.node_count()).map(|i| eta_tilde(c, graph, i)).collect(),
        rho_i: rate.as_ref().map(|r| r.rho.clone()),
        rho_tilde_i: rate.as_ref().map(|r| r.rho_tilde.clone()),
        q: rate.as_ref().map(|r| r.q),
        trajectory_constant: rate.as_ref().and_then(|r| r.trajectory_constant),
        suboptimality_bound: rate.as_ref().and_then(|r| r.suboptimality_bound),
        theorem3_applicable: rate.as_ref().is_some_and(|r| r.applicable),
        theorem3_reason: match &rate {
            Some(r) => r.reason.clone(),
            None => Some("no step sizes supplied".into()),
        },
        lambda_2: spec.lambda_2,
        lambda_max: spec.lambda_max,
        x0_norm,
        sampling_budget: c.budget,
        sampling_seed: c.seed,
        rounds_i: c.nodes.iter().map(|n| n.rounds).collect(),
        converged_i: c.nodes.iter().map(|n| n.converged).collect(),
        config_hash: None,
        effective_config: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::estimate_constants;
    use crate::objectives::{NewtonOptions, Objective, QuadraticObjective};
    use nalgebra::DVector;

    fn k2(scale: f64) -> ProblemInstance {
        let q = |c: f64| {
            Objective::Quadratic(QuadraticObjective::isotropic(scale, DVector::from_vec(vec![c])).unwrap())
        };
        ProblemInstance::new(Graph::complete(2).unwrap(), vec![q(0.0), q(2.0)], NewtonOptions::default()).unwrap()
    }

    fn constants(inst: &ProblemInstance) -> ConstantsEstimate {
        estimate_constants(inst, &SurrogateFamily::identity(inst.graph()), EstimateOptions::default()).unwrap()
    }

    #[test]
    fn lemma1_worked_example() {
        let inst = k2(1.0);
        let b = lemma1_stepsize_bound(&constants(&inst), inst.graph()).unwrap();
        assert!((b.get(0, 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lemma1_scales_with_objectives_and_surrogate() {
        let base = lemma1_stepsize_bound(&constants(&k2(1.0)), k2(1.0).graph()).unwrap().get(0, 1).unwrap();
        let inst = k2(2.5);
        let scaled = lemma1_stepsize_bound(&constants(&inst), inst.graph()).unwrap().get(0, 1).unwrap();
        assert!((scaled - 2.5 * base).abs() < 1e-14);
        let mut c = constants(&inst);
        c.edges[0].smoothness *= 2.0;
        let halved = lemma1_stepsize_bound(&c, inst.graph()).unwrap().get(0, 1).unwrap();
        assert!((halved - scaled / 2.0).abs() < 1e-14);
    }

    #[test]
    fn theorem2_matches_lemma1_without_hessian_variation() {
        let inst = k2(1.0);
        let c = constants(&inst);
        for eps in [1e-1, 1e-2, 1e-6] {
            let t2 = theorem2_stepsize_bound(&c, inst.graph(), eps).unwrap().get(0, 1).unwrap();
            assert!((t2 - 1.0).abs() < 1e-12, "{t2}");
        }
        assert!(theorem2_stepsize_bound(&c, inst.graph(), 0.0).is_err());
    }

    #[test]
    fn theorem2_vanishes_linearly_with_curvature_variation() {
        let inst = k2(1.0);
        let mut c = constants(&inst);
        for n in &mut c.nodes {
            n.hessian_lipschitz = 0.5;
        }
        let b1 = theorem2_stepsize_bound(&c, inst.graph(), 1e-6).unwrap().get(0, 1).unwrap();
        let b2 = theorem2_stepsize_bound(&c, inst.graph(), 1e-7).unwrap().get(0, 1).unwrap();
        assert!((b1 / b2 - 10.0).abs() < 1e-4);
    }

    #[test]
    fn rate_worked_example() {
        let inst = k2(1.0);
        let g = SurrogateFamily::identity(inst.graph());
        let alpha = EdgeWeights::uniform(inst.graph(), 0.4).unwrap();
        let r = theorem3_rate(&constants(&inst), inst.graph(), &g, &alpha, 2.0).unwrap();
        assert!((r.q - 0.2).abs() < 1e-15);
        assert!(r.applicable, "{:?}", r.reason);
        assert_eq!(r.suboptimality_bound, Some(0.0));
    }

    #[test]
    fn rate_boundary_step_zeroes_first_branch() {
        let inst = k2(1.0);
        let g = SurrogateFamily::identity(inst.graph());
        // θ / λ_max = 1/2
        let alpha = EdgeWeights::uniform(inst.graph(), 0.5).unwrap();
        let r = theorem3_rate(&constants(&inst), inst.graph(), &g, &alpha, 2.0).unwrap();
        assert_eq!(0.5 * r.lambda_max / 1.0 - 1.0, 0.0);
        assert_eq!(r.q, 0.0);
        assert!(!r.applicable);
    }

    #[test]
    fn rate_rejects_other_surrogates() {
        let inst = k2(1.0);
        let g = SurrogateFamily::endpoint_sum(inst.graph());
        let c = estimate_constants(&inst, &g, EstimateOptions::default()).unwrap();
        let alpha = EdgeWeights::uniform(inst.graph(), 0.1).unwrap();
        let r = theorem3_rate(&c, inst.graph(), &g, &alpha, 2.0).unwrap();
        assert!(!r.applicable);
    }

    #[test]
    fn step_rule_parsing() {
        assert_eq!("lemma1-frac:0.9".parse::<StepRule>().unwrap(), StepRule::Lemma1Fraction(0.9));
        assert_eq!("uniform:0.5".parse::<StepRule>().unwrap(), StepRule::Uniform(0.5));
        assert!("lemma1-frac:1.5".parse::<StepRule>().is_err());
        assert!("nonsense".parse::<StepRule>().is_err());
        let r = StepRule::Theorem2 { epsilon: 0.01, fraction: 0.9 };
        assert_eq!(r.to_string().parse::<StepRule>().unwrap(), r);
    }

    #[test]
    fn certified_steps_stay_below_ceiling() {
        let inst = k2(1.0);
        let g = SurrogateFamily::identity(inst.graph());
        let (alpha, c) =
            certified_step_sizes(&inst, &g, StepRule::Lemma1Fraction(0.9), EstimateOptions::default()).unwrap();
        assert!((alpha.get(0, 1).unwrap() - 0.9).abs() < 1e-15);
        assert!(alpha.max() <= c.alpha_bar);
        let report = certify(&inst, &g, &c, Some(&alpha), Some(StepRule::Lemma1Fraction(0.9)), Some(0.01)).unwrap();
        assert_eq!(report.lemma1_holds, Some(true));
        let json = report.to_json();
        for key in ["\"theta_i\"", "\"Theta_i\"", "\"L_i\"", "\"gamma_ij\"", "\"Gamma_ij\"", "\"delta_i\"", "\"eta_i\"",
            "\"eta_tilde_i\"", "\"rho_i\"", "\"rho_tilde_i\"", "\"q\""]
        {
            assert!(json.contains(key), "{key}");
        }
        assert_eq!(CertificateReport::from_json(&json).unwrap(), report);
    }
}
