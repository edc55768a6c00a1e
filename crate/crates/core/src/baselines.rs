//! First-order comparison methods (EXTRA, DIGing) over a Metropolis mixing
//! matrix, plus a log-grid step-size sweep.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dean::{dean_init, drive, DeanError, NetworkState, RunOptions};
use crate::linalg;
use crate::objectives::{ObjectiveError, ProblemInstance};
use crate::topology::Graph;
use crate::trace::RunTrace;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Symmetric doubly stochastic matrix supported on the graph plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    dense: DMatrix<f64>,
    /// Nonzero entries of each row, diagonal included.
    rows: Vec<Vec<(usize, f64)>>,
}

impl MixingMatrix {
    pub fn from_matrix(w: DMatrix<f64>, graph: &Graph) -> Result<Self, BaselineError> {
        let n = graph.node_count();
        if w.nrows() != n || w.ncols() != n {
            return Err(BaselineError::Parameter(format!("mixing matrix must be {n}×{n}")));
        }
        if !linalg::is_symmetric(&w, 1e-12) {
            return Err(BaselineError::Parameter("mixing matrix is not symmetric".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let sum: f64 = w.row(i).iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(BaselineError::Parameter(format!("row {i} sums to {sum}")));
            }
            let mut row = Vec::new();
            for j in 0..n {
                let linked = i == j || graph.has_edge(i, j);
                let v = w[(i, j)];
                if linked != (v > 0.0) || v < 0.0 {
                    return Err(BaselineError::Parameter(format!("entry ({i},{j}) = {v} does not match the graph")));
                }
                if linked {
                    row.push((j, v));
                }
            }
            rows.push(row);
        }
        Ok(Self { dense: w, rows })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    /// `(W ⊗ I_n) x`.
    pub fn mix(&self, x: &[DVector<f64>]) -> Vec<DVector<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut acc = DVector::zeros(x[0].len());
                for &(j, w) in row {
                    acc.axpy(w, &x[j], 1.0);
                }
                acc
            })
            .collect()
    }

    /// Spectral radius of `W − 11ᵀ/N`.
    pub fn disagreement_radius(&self) -> f64 {
        let n = self.node_count();
        let centered = &self.dense - DMatrix::from_element(n, n, 1.0 / n as f64);
        linalg::symmetric_eigenvalues(&centered).into_iter().map(f64::abs).fold(0.0, f64::max)
    }
}

/// `W_ij = 1/(max(|N_i|, |N_j|) + 2)` on links, diagonal completing each row.
pub fn metropolis_weights(graph: &Graph) -> MixingMatrix {
    let n = graph.node_count();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in graph.edges() {
        let v = 1.0 / (graph.degree(i).max(graph.degree(j)) as f64 + 2.0);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = graph.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    let rows = (0..n)
        .map(|i| {
            let mut row: Vec<(usize, f64)> = graph.neighbors(i).iter().map(|&j| (j, w[(i, j)])).collect();
            row.push((i, w[(i, i)]));
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect();
    MixingMatrix { dense: w, rows }
}

fn local_gradients(inst: &ProblemInstance, x: &[DVector<f64>]) -> Result<Vec<DVector<f64>>, ObjectiveError> {
    x.iter()
        .zip(inst.objectives())
        .enumerate()
        .map(|(i, (xi, f))| f.gradient(xi).map_err(|e| e.at_node(i)))
        .collect()
}

fn check_shape(inst: &ProblemInstance, w: &MixingMatrix, x: &[DVector<f64>]) -> Result<(), BaselineError> {
    if w.node_count() != inst.node_count() || x.len() != inst.node_count() {
        return Err(BaselineError::Parameter("node count mismatch".into()));
    }
    if x.iter().any(|xi| xi.len() != inst.dim()) {
        return Err(BaselineError::Parameter("initial state has the wrong dimension".into()));
    }
    Ok(())
}

type Iterate = Vec<DVector<f64>>;

/// EXTRA with `W̄ = (I + W)/2`.
pub struct Extra<'a> {
    inst: &'a ProblemInstance,
    w: &'a MixingMatrix,
    alpha: f64,
    /// Previous iterate and its local gradients, absent before the first step.
    prev: Option<(Iterate, Iterate)>,
}

impl<'a> Extra<'a> {
    pub fn new(inst: &'a ProblemInstance, w: &'a MixingMatrix, alpha: f64) -> Result<Self, BaselineError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(BaselineError::Parameter(format!("EXTRA step size {alpha} must be positive")));
        }
        Ok(Self { inst, w, alpha, prev: None })
    }

    pub fn step(&mut self, x: &[DVector<f64>]) -> Result<Vec<DVector<f64>>, ObjectiveError> {
        let grad = local_gradients(self.inst, x)?;
        let wx = self.w.mix(x);
        let next: Vec<DVector<f64>> = match &self.prev {
            None => wx.iter().zip(&grad).map(|(m, g)| m - g * self.alpha).collect(),
            Some((xp, gp)) => {
                let wxp = self.w.mix(xp);
                (0..x.len())
                    .map(|i| {
                        // (I + W)x − ½(I + W)x⁻ − α(∇f(x) − ∇f(x⁻))
                        &x[i] + &wx[i] - (&xp[i] + &wxp[i]) * 0.5 - (&grad[i] - &gp[i]) * self.alpha
                    })
                    .collect()
            }
        };
        self.prev = Some((x.to_vec(), grad));
        Ok(next)
    }
}

/// DIGing gradient tracking. The tracker starts at `y⁰ = ∇f(x⁰)`.
pub struct Diging<'a> {
    inst: &'a ProblemInstance,
    w: &'a MixingMatrix,
    alpha: f64,
    tracker: Vec<DVector<f64>>,
    grad: Vec<DVector<f64>>,
}

impl<'a> Diging<'a> {
    pub fn new(
        inst: &'a ProblemInstance,
        w: &'a MixingMatrix,
        alpha: f64,
        x0: &[DVector<f64>],
    ) -> Result<Self, BaselineError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(BaselineError::Parameter(format!("DIGing step size {alpha} must be non-negative")));
        }
        check_shape(inst, w, x0)?;
        let grad = local_gradients(inst, x0)?;
        Ok(Self { inst, w, alpha, tracker: grad.clone(), grad })
    }

    pub fn tracker(&self) -> &[DVector<f64>] {
        &self.tracker
    }

    /// Local gradients at the current iterate.
    pub fn gradients(&self) -> &[DVector<f64>] {
        &self.grad
    }

    pub fn step(&mut self, x: &[DVector<f64>]) -> Result<Vec<DVector<f64>>, ObjectiveError> {
        let wx = self.w.mix(x);
        let next: Vec<DVector<f64>> = wx.iter().zip(&self.tracker).map(|(m, y)| m - y * self.alpha).collect();
        let grad = local_gradients(self.inst, &next)?;
        let wy = self.w.mix(&self.tracker);
        self.tracker = (0..x.len()).map(|i| &wy[i] + &grad[i] - &self.grad[i]).collect();
        self.grad = grad;
        Ok(next)
    }
}

fn state(x: &[DVector<f64>]) -> Result<NetworkState, BaselineError> {
    NetworkState::new(x.to_vec()).map_err(|e| BaselineError::Parameter(e.to_string()))
}

pub fn extra_run_from(
    inst: &ProblemInstance,
    w: &MixingMatrix,
    alpha: f64,
    x0: &[DVector<f64>],
    opts: RunOptions,
) -> Result<RunTrace, BaselineError> {
    check_shape(inst, w, x0)?;
    let mut method = Extra::new(inst, w, alpha)?;
    let msgs = 2 * inst.graph().edge_count() as u64;
    Ok(drive(inst, "extra", state(x0)?, opts, |s| {
        let x = method.step(&s.x).map_err(DeanError::from)?;
        Ok((NetworkState { x, k: s.k + 1 }, msgs))
    }))
}

/// EXTRA from the same start as DEAN, `x_i⁰ = x_i*`.
pub fn extra_run(
    inst: &ProblemInstance,
    w: &MixingMatrix,
    alpha: f64,
    opts: RunOptions,
) -> Result<RunTrace, BaselineError> {
    extra_run_from(inst, w, alpha, &dean_init(inst).x, opts)
}

pub fn diging_run_from(
    inst: &ProblemInstance,
    w: &MixingMatrix,
    alpha: f64,
    x0: &[DVector<f64>],
    opts: RunOptions,
) -> Result<RunTrace, BaselineError> {
    let mut method = Diging::new(inst, w, alpha, x0)?;
    // both x and y cross every link in each direction
    let msgs = 4 * inst.graph().edge_count() as u64;
    Ok(drive(inst, "diging", state(x0)?, opts, |s| {
        let x = method.step(&s.x).map_err(DeanError::from)?;
        Ok((NetworkState { x, k: s.k + 1 }, msgs))
    }))
}

/// DIGing from the same start as DEAN, `x_i⁰ = x_i*`.
pub fn diging_run(
    inst: &ProblemInstance,
    w: &MixingMatrix,
    alpha: f64,
    opts: RunOptions,
) -> Result<RunTrace, BaselineError> {
    diging_run_from(inst, w, alpha, &dean_init(inst).x, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Extra,
    Diging,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Extra => "extra",
            Baseline::Diging => "diging",
        }
    }

    pub fn run(
        self,
        inst: &ProblemInstance,
        w: &MixingMatrix,
        alpha: f64,
        opts: RunOptions,
    ) -> Result<RunTrace, BaselineError> {
        match self {
            Baseline::Extra => extra_run(inst, w, alpha, opts),
            Baseline::Diging => diging_run(inst, w, alpha, opts),
        }
    }
}

/// `points` step sizes evenly spaced in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, BaselineError> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || points == 0 {
        return Err(BaselineError::Parameter(format!("bad grid [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points).map(|s| (a + (b - a) * s as f64 / (points - 1) as f64).exp()).collect())
}

/// `e(T)/e(0)` of a trace, infinite for runs that stopped abnormally.
pub fn final_ratio(trace: &RunTrace) -> f64 {
    use crate::trace::RunStatus;
    match (trace.records.first(), trace.last(), trace.status) {
        (Some(first), Some(last), RunStatus::Converged | RunStatus::Completed) => {
            if first.e > 0.0 {
                last.e / first.e
            } else {
                0.0
            }
        }
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub best_alpha: f64,
    pub best_ratio: f64,
    pub best_trace: RunTrace,
    /// `(α, e(T)/e(0))` for every grid point.
    pub grid: Vec<(f64, f64)>,
}

/// Run `run` at each grid step size and keep the trace with the smallest
/// final normalized error. Ties go to the earlier grid point.
pub fn sweep_with<E, F>(grid: &[f64], mut run: F) -> Result<SweepResult, E>
where
    F: FnMut(f64) -> Result<RunTrace, E>,
    E: From<BaselineError>,
{
    let mut best: Option<(f64, f64, RunTrace)> = None;
    let mut scores = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let trace = run(alpha)?;
        let ratio = final_ratio(&trace);
        scores.push((alpha, ratio));
        if best.as_ref().is_none_or(|b| ratio < b.1) {
            best = Some((alpha, ratio, trace));
        }
    }
    let (best_alpha, best_ratio, best_trace) =
        best.ok_or_else(|| BaselineError::Parameter("empty step-size grid".into()))?;
    Ok(SweepResult { best_alpha, best_ratio, best_trace, grid: scores })
}

pub fn sweep(
    method: Baseline,
    inst: &ProblemInstance,
    w: &MixingMatrix,
    grid: &[f64],
    opts: RunOptions,
) -> Result<SweepResult, BaselineError> {
    sweep_with(grid, |alpha| method.run(inst, w, alpha, opts))
}
