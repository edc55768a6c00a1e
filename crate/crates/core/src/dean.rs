//! The DEAN iteration and its reference special cases.
//!
//! Each node moves along its local Newton direction applied to a nonlinear
//! consensus term built from per-link surrogate gradients:
//!
//! `x_i ← x_i + (∇²f_i(x_i))⁻¹ Σ_{j∈N_i} α_ij (∇g_ij(x_j) − ∇g_ij(x_i))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, FactorError, SpdFactor};
use crate::objectives::{ObjectiveError, ProblemInstance};
use crate::topology::{EdgeWeights, Graph, TopologyError, WeightedLaplacian};
use crate::trace::{has_diverged, Recorder, RunStatus, RunTrace};

#[derive(Debug, thiserror::Error)]
pub enum DeanError {
    #[error("Hessian at node {node} is singular or indefinite (λ_min = {min_eig:e}, λ_max = {max_eig:e})")]
    Singular { node: usize, min_eig: f64, max_eig: f64 },
    #[error("iterates diverged at iteration {k}")]
    Diverged { k: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Choice of `g_ij` on one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surrogate {
    /// `g(x) = xᵀx / 2`
    IdentityQuadratic,
    /// `g(x) = xᵀAx / 2`
    SpdQuadratic { matrix: DMatrix<f64> },
    /// `g(x) = f_i(x) + f_j(x)`
    EndpointSum,
}

/// One surrogate per link, indexed like `Graph::edges`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFamily {
    per_edge: Vec<Surrogate>,
}

impl SurrogateFamily {
    pub fn uniform(graph: &Graph, s: Surrogate) -> Result<Self, DeanError> {
        Self::new(graph, vec![s; graph.edge_count()])
    }

    pub fn identity(graph: &Graph) -> Self {
        Self { per_edge: vec![Surrogate::IdentityQuadratic; graph.edge_count()] }
    }

    pub fn endpoint_sum(graph: &Graph) -> Self {
        Self { per_edge: vec![Surrogate::EndpointSum; graph.edge_count()] }
    }

    pub fn new(graph: &Graph, per_edge: Vec<Surrogate>) -> Result<Self, DeanError> {
        if per_edge.len() != graph.edge_count() {
            return Err(DeanError::Parameter(format!(
                "{} surrogates for {} links",
                per_edge.len(),
                graph.edge_count()
            )));
        }
        for s in &per_edge {
            if let Surrogate::SpdQuadratic { matrix } = s {
                if !linalg::is_symmetric(matrix, 1e-12) || !(linalg::extreme_eigenvalues(matrix).0 > 0.0) {
                    return Err(DeanError::Parameter("surrogate matrix is not symmetric positive definite".into()));
                }
            }
        }
        Ok(Self { per_edge })
    }

    pub fn get(&self, edge: usize) -> &Surrogate {
        &self.per_edge[edge]
    }

    pub fn len(&self) -> usize {
        self.per_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_edge.is_empty()
    }

    pub fn all_identity(&self) -> bool {
        self.per_edge.iter().all(|s| matches!(s, Surrogate::IdentityQuadratic))
    }

    /// Reorder for a graph relabelled by `perm` (node `i` becomes `perm[i]`).
    pub fn permuted(&self, graph: &Graph, permuted_graph: &Graph, perm: &[usize]) -> Self {
        let mut per_edge = self.per_edge.clone();
        for (e, &(i, j)) in graph.edges().iter().enumerate() {
            let idx = permuted_graph.edge_index(perm[i], perm[j]).expect("permuted edge exists");
            per_edge[idx] = self.per_edge[e].clone();
        }
        Self { per_edge }
    }

    /// `∇g_ij(x)` for the link `edge = {i, j}`.
    pub fn gradient(
        &self,
        inst: &ProblemInstance,
        edge: usize,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>, ObjectiveError> {
        Ok(match &self.per_edge[edge] {
            Surrogate::IdentityQuadratic => x.clone(),
            Surrogate::SpdQuadratic { matrix } => matrix * x,
            Surrogate::EndpointSum => {
                let (i, j) = inst.graph().edges()[edge];
                inst.objective(i).gradient(x)? + inst.objective(j).gradient(x)?
            }
        })
    }

    /// `∇²g_ij(x)` for the link `edge = {i, j}`.
    pub fn hessian(
        &self,
        inst: &ProblemInstance,
        edge: usize,
        x: &DVector<f64>,
    ) -> Result<DMatrix<f64>, ObjectiveError> {
        Ok(match &self.per_edge[edge] {
            Surrogate::IdentityQuadratic => DMatrix::identity(x.len(), x.len()),
            Surrogate::SpdQuadratic { matrix } => matrix.clone(),
            Surrogate::EndpointSum => {
                let (i, j) = inst.graph().edges()[edge];
                inst.objective(i).hessian(x)? + inst.objective(j).hessian(x)?
            }
        })
    }
}

/// Stacked iterate `[x_1; …; x_N]` and iteration index.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub x: Vec<DVector<f64>>,
    pub k: usize,
}

impl NetworkState {
    pub fn new(x: Vec<DVector<f64>>) -> Result<Self, DeanError> {
        if x.iter().flat_map(|v| v.iter()).any(|v| !v.is_finite()) {
            return Err(DeanError::Parameter("state has non-finite entries".into()));
        }
        Ok(Self { x, k: 0 })
    }

    pub fn node_count(&self) -> usize {
        self.x.len()
    }

    pub fn stacked_norm(&self) -> f64 {
        linalg::stacked_norm(&self.x)
    }
}

fn check_state(s: &NetworkState, inst: &ProblemInstance) -> Result<(), DeanError> {
    if s.x.len() != inst.node_count() || s.x.iter().any(|v| v.len() != inst.dim()) {
        return Err(DeanError::Parameter(format!(
            "state shape does not match the instance ({} nodes of dimension {})",
            inst.node_count(),
            inst.dim()
        )));
    }
    Ok(())
}

/// `x_i⁰ = x_i*` for every node.
pub fn dean_init(inst: &ProblemInstance) -> NetworkState {
    NetworkState { x: inst.local_minimizers().to_vec(), k: 0 }
}

fn factor_at(inst: &ProblemInstance, node: usize, x: &DVector<f64>) -> Result<SpdFactor, DeanError> {
    let h = inst.objective(node).hessian(x)?;
    SpdFactor::new(&h).map_err(|e| match e {
        FactorError::Singular { min_eig, max_eig } => DeanError::Singular { node, min_eig, max_eig },
        FactorError::NotSquare | FactorError::NonFinite => {
            DeanError::Singular { node, min_eig: f64::NAN, max_eig: f64::NAN }
        }
    })
}

fn step_sizes_cover(graph: &Graph, alpha: &EdgeWeights) -> Result<(), DeanError> {
    for &(i, j) in graph.edges() {
        match alpha.get(i, j) {
            Some(a) if a > 0.0 && a.is_finite() => {}
            Some(a) => return Err(DeanError::Parameter(format!("step size {a} on link ({i},{j}) is not positive"))),
            None => return Err(DeanError::Parameter(format!("no step size for link ({i},{j})"))),
        }
    }
    Ok(())
}

/// One synchronous DEAN round. Every node reads its neighbours' current
/// iterates before any node writes.
pub fn dean_step(
    s: &NetworkState,
    inst: &ProblemInstance,
    g: &SurrogateFamily,
    alpha: &EdgeWeights,
) -> Result<NetworkState, DeanError> {
    dean_step_counted(s, inst, g, alpha).map(|(next, _)| next)
}

/// As [`dean_step`], also returning the number of vectors exchanged.
pub fn dean_step_counted(
    s: &NetworkState,
    inst: &ProblemInstance,
    g: &SurrogateFamily,
    alpha: &EdgeWeights,
) -> Result<(NetworkState, u64), DeanError> {
    check_state(s, inst)?;
    let graph = inst.graph();
    if g.len() != graph.edge_count() {
        return Err(DeanError::Parameter("surrogate family does not match the graph".into()));
    }
    step_sizes_cover(graph, alpha)?;
    let mut messages = 0u64;
    let mut next = Vec::with_capacity(s.x.len());
    for (i, xi) in s.x.iter().enumerate() {
        let mut drive = DVector::zeros(xi.len());
        for &j in graph.neighbors(i) {
            let e = graph.edge_index(i, j).expect("neighbour implies link");
            let a = alpha.get(i, j).expect("checked above");
            let diff = g.gradient(inst, e, &s.x[j])? - g.gradient(inst, e, xi)?;
            drive += diff * a;
            messages += 1;
        }
        let factor = factor_at(inst, i, xi)?;
        next.push(xi + factor.solve(&drive));
    }
    Ok((NetworkState { x: next, k: s.k + 1 }, messages))
}

/// `Err` unless `0 < α < 1 / max_i H_ii`.
pub fn check_consensus_step(l: &WeightedLaplacian, alpha: f64) -> Result<(), DeanError> {
    let limit = 1.0 / l.max_diagonal();
    if alpha > 0.0 && alpha < limit {
        Ok(())
    } else {
        Err(DeanError::Parameter(format!("consensus step {alpha} outside (0, {limit})")))
    }
}

/// `x ← x − α (H ⊗ I_n) x`, rejecting step sizes outside the stable range.
pub fn linear_consensus_step(
    s: &NetworkState,
    l: &WeightedLaplacian,
    alpha: f64,
) -> Result<NetworkState, DeanError> {
    check_consensus_step(l, alpha)?;
    linear_consensus_step_unchecked(s, l, alpha)
}

/// As [`linear_consensus_step`] without the step-size range check.
pub fn linear_consensus_step_unchecked(
    s: &NetworkState,
    l: &WeightedLaplacian,
    alpha: f64,
) -> Result<NetworkState, DeanError> {
    let h = l.matrix();
    if h.nrows() != s.x.len() {
        return Err(DeanError::Parameter("Laplacian size does not match the state".into()));
    }
    // rows sum to zero, so (H x)_i = Σ_j −H_ij (x_j − x_i)
    let next = s
        .x
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut drive = DVector::zeros(xi.len());
            for (j, xj) in s.x.iter().enumerate() {
                if j != i && h[(i, j)] != 0.0 {
                    drive += (xj - xi) * (-h[(i, j)] * alpha);
                }
            }
            xi + drive
        })
        .collect();
    Ok(NetworkState { x: next, k: s.k + 1 })
}

/// `x_i ← x_i − α (∇²f_i(x_i))⁻¹ ∇f_i(x_i)` at every node independently.
pub fn centralized_newton_step(
    s: &NetworkState,
    inst: &ProblemInstance,
    alpha: f64,
) -> Result<NetworkState, DeanError> {
    check_state(s, inst)?;
    let next = s
        .x
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let grad = inst.objective(i).gradient(xi)?;
            let factor = factor_at(inst, i, xi)?;
            Ok(xi - factor.solve(&grad) * alpha)
        })
        .collect::<Result<Vec<_>, DeanError>>()?;
    Ok(NetworkState { x: next, k: s.k + 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once consensus error and gradient-sum norm are both below their thresholds.
    Thresholds { consensus: f64, grad_sum: f64 },
    Never,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::Thresholds { consensus: 1e-10, grad_sum: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_iters: usize,
    pub stop: StopRule,
    pub keep_iterates: bool,
}

impl RunOptions {
    pub fn new(max_iters: usize) -> Self {
        Self { max_iters, stop: StopRule::default(), keep_iterates: false }
    }

    pub fn fixed(max_iters: usize) -> Self {
        Self { max_iters, stop: StopRule::Never, keep_iterates: false }
    }

    pub fn keep_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }
}

fn status_of(e: &DeanError) -> RunStatus {
    match e {
        DeanError::Singular { .. } => RunStatus::Singular,
        DeanError::Diverged { .. } => RunStatus::Diverged,
        DeanError::Objective(ObjectiveError::Domain(_)) => RunStatus::Diverged,
        _ => RunStatus::Failed,
    }
}

/// Drive `step` from `x0`, recording every iterate. Failures end the run
/// with the trace collected so far and a matching status.
pub fn drive<F>(inst: &ProblemInstance, algo: &str, x0: NetworkState, opts: RunOptions, mut step: F) -> RunTrace
where
    F: FnMut(&NetworkState) -> Result<(NetworkState, u64), DeanError>,
{
    let mut rec = Recorder::new(inst, algo, opts.keep_iterates);
    let mut state = x0;
    let mut k = 0;
    loop {
        let r = match rec.record(k, &state.x) {
            Ok(r) => r,
            Err(e) => return rec.finish(RunStatus::Diverged, Some(e.to_string())),
        };
        if let StopRule::Thresholds { consensus, grad_sum } = opts.stop {
            if r.consensus_err <= consensus && r.grad_sum_norm <= grad_sum {
                return rec.finish(RunStatus::Converged, None);
            }
        }
        if k >= opts.max_iters {
            return rec.finish(RunStatus::Completed, None);
        }
        match step(&state) {
            Ok((next, messages)) => {
                rec.add_messages(messages);
                if has_diverged(&next.x) {
                    let e = DeanError::Diverged { k: k + 1 };
                    return rec.finish(RunStatus::Diverged, Some(e.to_string()));
                }
                state = next;
            }
            Err(e) => return rec.finish(status_of(&e), Some(e.to_string())),
        }
        k += 1;
    }
}

/// DEAN from `x_i⁰ = x_i*`.
pub fn run(inst: &ProblemInstance, g: &SurrogateFamily, alpha: &EdgeWeights, opts: RunOptions) -> RunTrace {
    drive(inst, "dean", dean_init(inst), opts, |s| dean_step_counted(s, inst, g, alpha))
}

/// Linear consensus on the weighted Laplacian from `x_i⁰ = x_i*`.
pub fn run_consensus(inst: &ProblemInstance, l: &WeightedLaplacian, alpha: f64, opts: RunOptions) -> RunTrace {
    let msgs = 2 * inst.graph().edge_count() as u64;
    drive(inst, "consensus", dean_init(inst), opts, |s| {
        linear_consensus_step_unchecked(s, l, alpha).map(|n| (n, msgs))
    })
}

/// Independent per-node Newton from an arbitrary start (no communication).
pub fn run_newton(inst: &ProblemInstance, x0: NetworkState, alpha: f64, opts: RunOptions) -> RunTrace {
    drive(inst, "newton", x0, opts, |s| centralized_newton_step(s, inst, alpha).map(|n| (n, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{NewtonOptions, Objective, QuadraticObjective};
    use crate::topology::{laplacian, unit_laplacian};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn k2_quadratic() -> ProblemInstance {
        let q = |c: f64| Objective::Quadratic(QuadraticObjective::isotropic(1.0, dv(&[c])).unwrap());
        ProblemInstance::new(Graph::complete(2).unwrap(), vec![q(0.0), q(2.0)], NewtonOptions::default()).unwrap()
    }

    #[test]
    fn two_node_step_reaches_average() {
        let inst = k2_quadratic();
        let s = dean_init(&inst);
        assert_eq!(s.x, vec![dv(&[0.0]), dv(&[2.0])]);
        let g = SurrogateFamily::identity(inst.graph());
        let a = EdgeWeights::uniform(inst.graph(), 0.5).unwrap();
        let next = dean_step(&s, &inst, &g, &a).unwrap();
        assert_eq!(next.x, vec![dv(&[1.0]), dv(&[1.0])]);
        assert_eq!(next.k, 1);
    }

    #[test]
    fn run_stops_after_one_step() {
        let inst = k2_quadratic();
        let g = SurrogateFamily::identity(inst.graph());
        let a = EdgeWeights::uniform(inst.graph(), 0.5).unwrap();
        let t = run(&inst, &g, &a, RunOptions::new(100));
        assert_eq!(t.status, RunStatus::Converged);
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[1].consensus_err, 0.0);
        assert_eq!(t.messages, 2);
    }

    #[test]
    fn zero_iterations_gives_one_record() {
        let inst = k2_quadratic();
        let g = SurrogateFamily::identity(inst.graph());
        let a = EdgeWeights::uniform(inst.graph(), 0.5).unwrap();
        let t = run(&inst, &g, &a, RunOptions::new(0));
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].k, 0);
    }

    #[test]
    fn consensus_step_examples() {
        let g = Graph::complete(2).unwrap();
        let l = unit_laplacian(&g);
        let s = NetworkState::new(vec![dv(&[0.0]), dv(&[2.0])]).unwrap();
        let next = linear_consensus_step(&s, &l, 0.5).unwrap();
        assert_eq!(next.x, vec![dv(&[1.0]), dv(&[1.0])]);
        let err = linear_consensus_step(&s, &l, 1.0).unwrap_err();
        assert!(matches!(err, DeanError::Parameter(_)));
        let next = linear_consensus_step_unchecked(&s, &l, 1.0).unwrap();
        assert_eq!(next.x, vec![dv(&[2.0]), dv(&[0.0])]);
        let half = laplacian(&g, &EdgeWeights::uniform(&g, 0.5).unwrap()).unwrap();
        let next = linear_consensus_step(&s, &half, 1.0 / 1.5).unwrap();
        assert!((next.x[0][0] + next.x[1][0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn newton_on_quadratics_jumps_to_minimizers() {
        let inst = k2_quadratic();
        let s = NetworkState::new(vec![dv(&[5.0]), dv(&[-3.0])]).unwrap();
        let next = centralized_newton_step(&s, &inst, 1.0).unwrap();
        assert_eq!(next.x, vec![dv(&[0.0]), dv(&[2.0])]);
        let again = centralized_newton_step(&next, &inst, 1.0).unwrap();
        assert_eq!(again.x, next.x);
    }

    #[test]
    fn missing_step_size_is_rejected() {
        let inst = k2_quadratic();
        let g = SurrogateFamily::identity(inst.graph());
        let a = EdgeWeights::partial([]);
        assert!(matches!(dean_step(&dean_init(&inst), &inst, &g, &a), Err(DeanError::Parameter(_))));
    }

    #[test]
    fn singular_hessian_names_node() {
        use crate::objectives::LogisticObjective;
        let f = Objective::Logistic(
            LogisticObjective::new(
                DMatrix::from_row_slice(4, 2, &[1.0, 1.0, -1.0, 1.0, 0.5, 1.0, -0.5, 1.0]),
                dv(&[1.0, -1.0, -1.0, 1.0]),
            )
            .unwrap(),
        );
        let inst = ProblemInstance::new(Graph::complete(2).unwrap(), vec![f.clone(), f], NewtonOptions::default())
            .unwrap();
        let g = SurrogateFamily::identity(inst.graph());
        let a = EdgeWeights::uniform(inst.graph(), 1.0).unwrap();
        let s = NetworkState::new(vec![dv(&[0.0, 0.0]), dv(&[1e4, 0.0])]).unwrap();
        match dean_step(&s, &inst, &g, &a) {
            Err(DeanError::Singular { node: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spd_surrogate_must_be_definite() {
        let g = Graph::complete(2).unwrap();
        let bad = Surrogate::SpdQuadratic { matrix: DMatrix::from_row_slice(1, 1, &[-1.0]) };
        assert!(SurrogateFamily::uniform(&g, bad).is_err());
    }
}
