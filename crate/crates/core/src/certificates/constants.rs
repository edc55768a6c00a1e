use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{lyapunov, CertificateError};
use crate::dean::{Surrogate, SurrogateFamily};
use crate::linalg::{self, SINGULAR_RATIO};
use crate::objectives::{Objective, ObjectiveError, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Upper end of the admissible step-size interval.
    pub alpha_bar: f64,
    /// Sample points (and point pairs) per set.
    pub budget: usize,
    pub seed: u64,
    pub max_rounds: usize,
    pub rel_tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { alpha_bar: 1.0, budget: 40, seed: 0, max_rounds: 20, rel_tol: 1e-3 }
    }
}

/// Curvature bounds of one node objective on three nested sets around `x*`:
/// the sublevel ball of radius `radius`, that ball grown by `step_reach`
/// (the `_ext` fields), and the ball enclosing every node's set (the `_hull` fields).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConstants {
    pub convexity: f64,
    pub smoothness: f64,
    pub hessian_lipschitz: f64,
    pub convexity_ext: f64,
    pub smoothness_ext: f64,
    pub hessian_lipschitz_ext: f64,
    pub convexity_hull: f64,
    pub smoothness_hull: f64,
    pub step_reach: f64,
    pub radius: f64,
    pub exact: bool,
    pub rounds: usize,
    pub converged: bool,
}

/// Curvature bounds of a link surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeConstants {
    pub edge: (usize, usize),
    pub convexity: f64,
    pub smoothness: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEstimate {
    pub nodes: Vec<NodeConstants>,
    pub edges: Vec<EdgeConstants>,
    /// `V(x⁰)`
    pub v0: f64,
    pub alpha_bar: f64,
    pub budget: usize,
    pub seed: u64,
}

impl ConstantsEstimate {
    pub fn convexity_min(&self) -> f64 {
        self.nodes.iter().map(|c| c.convexity).fold(f64::INFINITY, f64::min)
    }

    pub fn smoothness_max(&self) -> f64 {
        self.nodes.iter().map(|c| c.smoothness).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exact analytic constants everywhere. Sampled values under-estimate
    /// the smoothness and Lipschitz bounds and over-estimate convexity.
    pub fn certified(&self) -> bool {
        self.nodes.iter().all(|c| c.exact) && self.edges.iter().all(|c| c.exact)
    }
}

/// Points in the closed unit ball: the origin, then half interior and half
/// boundary points. Scaled by the set radius at use.
struct BallTemplate {
    points: Vec<DVector<f64>>,
    pairs: Vec<(DVector<f64>, DVector<f64>)>,
}

fn unit_direction(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

fn interior_point(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let u: f64 = rng.random();
    unit_direction(n, rng) * u.powf(1.0 / n as f64)
}

impl BallTemplate {
    fn new(n: usize, budget: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut points = vec![DVector::zeros(n)];
        for s in 0..budget {
            points.push(if s % 2 == 0 { interior_point(n, rng) } else { unit_direction(n, rng) });
        }
        let pairs = (0..budget)
            .map(|s| {
                let x = interior_point(n, rng);
                // alternate close pairs (local derivative) and far pairs
                let y = if s % 2 == 0 { &x + unit_direction(n, rng) * 1e-3 } else { interior_point(n, rng) };
                (x, y)
            })
            .collect();
        Self { points, pairs }
    }
}

type HessFn<'a> = dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>, ObjectiveError> + 'a;

/// `(min λ_min, max λ_max)` over the template ball `B(center, radius)` and extra points.
fn extremes(
    hess: &HessFn<'_>,
    template: &BallTemplate,
    center: &DVector<f64>,
    radius: f64,
    extra: &[&DVector<f64>],
) -> Result<(f64, f64), ObjectiveError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let scaled = template.points.iter().map(|t| center + t * radius);
    for p in scaled.chain(extra.iter().map(|p| (*p).clone())) {
        let (a, b) = linalg::extreme_eigenvalues(&hess(&p)?);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}

fn lipschitz(
    hess: &HessFn<'_>,
    template: &BallTemplate,
    center: &DVector<f64>,
    radius: f64,
) -> Result<f64, ObjectiveError> {
    if radius == 0.0 {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for (tx, ty) in &template.pairs {
        let x = center + tx * radius;
        let y = center + ty * radius;
        let dist = (&x - &y).norm();
        if dist > 0.0 {
            let diff = hess(&x)? - hess(&y)?;
            best = best.max(linalg::symmetric_norm(&diff) / dist);
        }
    }
    Ok(best)
}

struct BaseNode {
    constants: NodeConstants,
    template: Option<BallTemplate>,
}

/// Everything that does not depend on `ᾱ`, so the extended-set constants
/// can be re-evaluated cheaply for several step-size ceilings.
pub(crate) struct Estimator<'a> {
    inst: &'a ProblemInstance,
    nodes: Vec<BaseNode>,
    edges: Vec<EdgeConstants>,
    v0: f64,
    opts: EstimateOptions,
}

impl<'a> Estimator<'a> {
    pub(crate) fn new(
        inst: &'a ProblemInstance,
        g: &SurrogateFamily,
        opts: EstimateOptions,
    ) -> Result<Self, CertificateError> {
        if opts.budget < 10 {
            return Err(CertificateError::Parameter(format!("sample budget {} is below 10", opts.budget)));
        }
        if !(opts.alpha_bar > 0.0 && opts.alpha_bar.is_finite()) {
            return Err(CertificateError::Parameter(format!("ᾱ = {} must be positive", opts.alpha_bar)));
        }
        if g.len() != inst.graph().edge_count() {
            return Err(CertificateError::Parameter("surrogate family does not match the graph".into()));
        }
        let v0 = lyapunov(inst.local_minimizers(), inst)?;
        let opt = inst.optimum();
        let n = inst.dim();
        let mut nodes = Vec::with_capacity(inst.node_count());
        for (i, f) in inst.objectives().iter().enumerate() {
            nodes.push(match f {
                Objective::Quadratic(q) => BaseNode {
                    constants: exact_node(q.eig_min(), q.eig_max(), v0),
                    template: None,
                },
                Objective::Logistic(_) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(i as u64);
                    let template = BallTemplate::new(n, opts.budget, &mut rng);
                    let constants = sampled_node(i, f, &template, opt, &inst.local_minimizers()[i], v0, &opts)?;
                    BaseNode { constants, template: Some(template) }
                }
            });
        }
        // the hull ball encloses every node's sublevel ball
        let hull_radius = nodes.iter().map(|b| b.constants.radius).fold(0.0, f64::max);
        for (i, b) in nodes.iter_mut().enumerate() {
            if let Some(t) = &b.template {
                let f = inst.objective(i);
                let (lo, hi) = extremes(&|x| f.hessian(x), t, opt, hull_radius, &[])?;
                b.constants.convexity_hull = lo.min(b.constants.convexity);
                b.constants.smoothness_hull = hi.max(b.constants.smoothness);
                if !(b.constants.convexity_hull > 0.0) {
                    return Err(CertificateError::Estimation(format!(
                        "node {i}: sampled convexity on the enclosing ball is {lo:e}"
                    )));
                }
            }
        }
        let mut edges = Vec::with_capacity(inst.graph().edge_count());
        for (e, &(i, j)) in inst.graph().edges().iter().enumerate() {
            edges.push(edge_constants(inst, g, e, (i, j), &nodes, v0, &opts)?);
        }
        Ok(Self { inst, nodes, edges, v0, opts })
    }

    /// Complete the estimate for step sizes in `(0, alpha_bar]`.
    pub(crate) fn at_alpha_bar(&self, alpha_bar: f64) -> Result<ConstantsEstimate, CertificateError> {
        if !(alpha_bar > 0.0 && alpha_bar.is_finite()) {
            return Err(CertificateError::Parameter(format!("ᾱ = {alpha_bar} must be positive")));
        }
        let graph = self.inst.graph();
        let opt = self.inst.optimum();
        let mut nodes: Vec<NodeConstants> = self.nodes.iter().map(|b| b.constants.clone()).collect();
        for i in 0..nodes.len() {
            let theta = nodes[i].convexity;
            let reach: f64 = graph
                .neighbors(i)
                .iter()
                .map(|&j| {
                    let e = graph.edge_index(i, j).expect("neighbour implies link");
                    self.edges[e].smoothness * (nodes[i].radius + nodes[j].radius)
                })
                .sum::<f64>()
                * alpha_bar
                / theta;
            nodes[i].step_reach = reach;
            if let Some(t) = &self.nodes[i].template {
                let f = self.inst.objective(i);
                let hess = |x: &DVector<f64>| f.hessian(x);
                let r = nodes[i].radius + reach;
                let (lo, hi) = extremes(&hess, t, opt, r, &[])?;
                let lip = lipschitz(&hess, t, opt, r)?;
                let c = &mut nodes[i];
                c.convexity_ext = lo.min(c.convexity);
                c.smoothness_ext = hi.max(c.smoothness);
                c.hessian_lipschitz_ext = lip.max(c.hessian_lipschitz);
                if !(c.convexity_ext > SINGULAR_RATIO * c.smoothness_ext) {
                    return Err(CertificateError::Estimation(format!(
                        "node {i}: sampled convexity on the extended ball is {lo:e}"
                    )));
                }
            }
        }
        Ok(ConstantsEstimate {
            nodes,
            edges: self.edges.clone(),
            v0: self.v0,
            alpha_bar,
            budget: self.opts.budget,
            seed: self.opts.seed,
        })
    }
}

fn exact_node(eig_min: f64, eig_max: f64, v0: f64) -> NodeConstants {
    NodeConstants {
        convexity: eig_min,
        smoothness: eig_max,
        hessian_lipschitz: 0.0,
        convexity_ext: eig_min,
        smoothness_ext: eig_max,
        hessian_lipschitz_ext: 0.0,
        convexity_hull: eig_min,
        smoothness_hull: eig_max,
        step_reach: 0.0,
        radius: (2.0 * v0 / eig_min).sqrt(),
        exact: true,
        rounds: 0,
        converged: true,
    }
}

/// Fixed point of `θ ← min λ_min(∇²f)` over `B(x*, √(2V(x⁰)/θ))`.
fn sampled_node(
    node: usize,
    f: &Objective,
    template: &BallTemplate,
    opt: &DVector<f64>,
    local_min: &DVector<f64>,
    v0: f64,
    opts: &EstimateOptions,
) -> Result<NodeConstants, CertificateError> {
    let hess = |x: &DVector<f64>| f.hessian(x);
    let degenerate = |lo: f64, hi: f64| {
        CertificateError::Estimation(format!("node {node}: sampled convexity {lo:e} is degenerate (largest {hi:e})"))
    };
    let (mut theta, top) = linalg::extreme_eigenvalues(&f.hessian(opt)?);
    if !(theta > SINGULAR_RATIO * top) {
        return Err(degenerate(theta, top));
    }
    let mut rounds = 0;
    let mut converged = false;
    while rounds < opts.max_rounds {
        rounds += 1;
        let r = (2.0 * v0 / theta).sqrt();
        let (lo, hi) = extremes(&hess, template, opt, r, &[local_min])?;
        if !(lo > SINGULAR_RATIO * hi) {
            return Err(degenerate(lo, hi));
        }
        let change = (lo - theta).abs() / theta;
        theta = lo;
        if change < opts.rel_tol {
            converged = true;
            break;
        }
    }
    let radius = (2.0 * v0 / theta).sqrt();
    let (lo, hi) = extremes(&hess, template, opt, radius, &[local_min])?;
    if !(lo > SINGULAR_RATIO * hi) {
        return Err(degenerate(lo, hi));
    }
    let convexity = theta.min(lo);
    let lip = lipschitz(&hess, template, opt, radius)?;
    Ok(NodeConstants {
        convexity,
        smoothness: hi,
        hessian_lipschitz: lip,
        convexity_ext: convexity,
        smoothness_ext: hi,
        hessian_lipschitz_ext: lip,
        convexity_hull: convexity,
        smoothness_hull: hi,
        step_reach: 0.0,
        radius,
        exact: false,
        rounds,
        converged,
    })
}

fn edge_constants(
    inst: &ProblemInstance,
    g: &SurrogateFamily,
    e: usize,
    (i, j): (usize, usize),
    nodes: &[BaseNode],
    v0: f64,
    opts: &EstimateOptions,
) -> Result<EdgeConstants, CertificateError> {
    let exact = |m: &DMatrix<f64>| {
        let (lo, hi) = linalg::extreme_eigenvalues(m);
        Ok(EdgeConstants { edge: (i, j), convexity: lo, smoothness: hi, exact: true })
    };
    match (g.get(e), inst.objective(i), inst.objective(j)) {
        (Surrogate::IdentityQuadratic, _, _) => {
            Ok(EdgeConstants { edge: (i, j), convexity: 1.0, smoothness: 1.0, exact: true })
        }
        (Surrogate::SpdQuadratic { matrix }, _, _) => exact(matrix),
        (Surrogate::EndpointSum, Objective::Quadratic(a), Objective::Quadratic(b)) => {
            exact(&(a.curvature() + b.curvature()))
        }
        (Surrogate::EndpointSum, _, _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream((inst.node_count() + e) as u64);
            let template = BallTemplate::new(inst.dim(), opts.budget, &mut rng);
            let radius = nodes[i].constants.radius.max(nodes[j].constants.radius);
            let hess = |x: &DVector<f64>| g.hessian(inst, e, x);
            let mins = inst.local_minimizers();
            let (lo, hi) = extremes(&hess, &template, inst.optimum(), radius, &[&mins[i], &mins[j]])?;
            if !(lo > SINGULAR_RATIO * hi) {
                return Err(CertificateError::Estimation(format!(
                    "link ({i},{j}): sampled surrogate convexity {lo:e} is degenerate (V0 = {v0:e})"
                )));
            }
            Ok(EdgeConstants { edge: (i, j), convexity: lo, smoothness: hi, exact: false })
        }
    }
}

/// Constants for the sets `C_i`, `C'_i` and their hull, for step sizes in `(0, ᾱ]`.
pub fn estimate_constants(
    inst: &ProblemInstance,
    g: &SurrogateFamily,
    opts: EstimateOptions,
) -> Result<ConstantsEstimate, CertificateError> {
    Estimator::new(inst, g, opts)?.at_alpha_bar(opts.alpha_bar)
}
