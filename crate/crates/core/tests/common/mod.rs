#![allow(dead_code)]

use dean_core::baselines::MixingMatrix;
use dean_core::objectives::{logistic_objectives, quadratic_objectives, LogisticSpec, QuadraticSpec};
use dean_core::topology::random_connected_graph;
use dean_core::{EdgeWeights, Graph, NewtonOptions, Objective, ProblemInstance};
use nalgebra::{DMatrix, DVector};

pub fn quadratic_instance(n_nodes: usize, dim: usize, avg_degree: f64, seed: u64) -> ProblemInstance {
    let graph = random_connected_graph(n_nodes, avg_degree, seed).unwrap();
    let objs = quadratic_objectives(n_nodes, &QuadraticSpec::new(dim), seed).unwrap();
    ProblemInstance::new(graph, objs, NewtonOptions::default()).unwrap().with_seed(seed)
}

pub fn logistic_instance(n_nodes: usize, dim: usize, avg_degree: f64, seed: u64) -> ProblemInstance {
    let graph = random_connected_graph(n_nodes, avg_degree, seed).unwrap();
    let objs = logistic_objectives(n_nodes, &LogisticSpec::well_posed(dim, n_nodes), seed).unwrap();
    ProblemInstance::new(graph, objs, NewtonOptions::default()).unwrap().with_seed(seed)
}

/// Average degree that is feasible for a connected graph on `n` nodes.
pub fn degree_for(n: usize) -> f64 {
    (n as f64 - 1.0).min(4.0).max(2.0 * (n as f64 - 1.0) / n as f64)
}

pub fn curvature(f: &Objective) -> &DMatrix<f64> {
    match f {
        Objective::Quadratic(q) => q.curvature(),
        Objective::Logistic(_) => panic!("quadratic objective expected"),
    }
}

/// Weighted Laplacian `Σ α_ij (e_i − e_j)(e_i − e_j)ᵀ` built from the edge list.
pub fn weighted_laplacian(graph: &Graph, alpha: &EdgeWeights) -> DMatrix<f64> {
    let n = graph.node_count();
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in graph.edges() {
        let a = alpha.get(i, j).unwrap();
        l[(i, i)] += a;
        l[(j, j)] += a;
        l[(i, j)] -= a;
        l[(j, i)] -= a;
    }
    l
}

fn kron_identity(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    m.kronecker(&DMatrix::identity(dim, dim))
}

fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = blocks[0].nrows();
    let mut out = DMatrix::zeros(d * blocks.len(), d * blocks.len());
    for (i, b) in blocks.iter().enumerate() {
        out.view_mut((i * d, i * d), (d, d)).copy_from(b);
    }
    out
}

pub fn stack(x: &[DVector<f64>]) -> DVector<f64> {
    let d = x[0].len();
    DVector::from_fn(d * x.len(), |r, _| x[r / d][r % d])
}

/// DEAN on quadratics with identity surrogates: `x ← (I − B⁻¹(L_α ⊗ I)) x`.
pub fn dean_iteration_matrix(inst: &ProblemInstance, alpha: &EdgeWeights) -> DMatrix<f64> {
    let d = inst.dim();
    let b_inv: Vec<DMatrix<f64>> =
        inst.objectives().iter().map(|f| curvature(f).clone().try_inverse().unwrap()).collect();
    let l = kron_identity(&weighted_laplacian(inst.graph(), alpha), d);
    DMatrix::identity(l.nrows(), l.ncols()) - block_diag(&b_inv) * l
}

/// EXTRA on quadratics, state `(x^k, x^{k−1})`.
pub fn extra_iteration_matrix(inst: &ProblemInstance, w: &MixingMatrix, alpha: f64) -> DMatrix<f64> {
    let d = inst.dim();
    let b = block_diag(&inst.objectives().iter().map(|f| curvature(f).clone()).collect::<Vec<_>>());
    let wt = kron_identity(w.matrix(), d);
    let m = wt.nrows();
    let eye = DMatrix::<f64>::identity(m, m);
    let wbar = (&eye + &wt) * 0.5;
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(&(&eye + &wt - &b * alpha));
    out.view_mut((0, m), (m, m)).copy_from(&(-(wbar - &b * alpha)));
    out.view_mut((m, 0), (m, m)).copy_from(&eye);
    out
}

/// DIGing on quadratics, state `(x^k, y^k)`.
pub fn diging_iteration_matrix(inst: &ProblemInstance, w: &MixingMatrix, alpha: f64) -> DMatrix<f64> {
    let d = inst.dim();
    let b = block_diag(&inst.objectives().iter().map(|f| curvature(f).clone()).collect::<Vec<_>>());
    let wt = kron_identity(w.matrix(), d);
    let m = wt.nrows();
    let eye = DMatrix::<f64>::identity(m, m);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(&wt);
    out.view_mut((0, m), (m, m)).copy_from(&(-&eye * alpha));
    out.view_mut((m, 0), (m, m)).copy_from(&(&b * (&wt - &eye)));
    out.view_mut((m, m), (m, m)).copy_from(&(&wt - &b * alpha));
    out
}

/// Largest eigenvalue modulus after discarding the `fixed` eigenvalues
/// closest to 1 (the consensus directions).
pub fn rate_without_unit_modes(m: &DMatrix<f64>, fixed: usize) -> f64 {
    let dense = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut ev: Vec<(f64, f64)> = dense
        .eigenvalues()
        .expect("eigenvalues converge")
        .iter()
        .map(|z| ((z.re - 1.0).hypot(z.im), z.re.hypot(z.im)))
        .collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0));
    ev[fixed..].iter().map(|e| e.1).fold(0.0, f64::max)
}

/// Geometric-mean contraction of `d` between indices `from` and `to`.
pub fn empirical_rate(d: &[f64], from: usize, to: usize) -> f64 {
    (d[to] / d[from]).powf(1.0 / (to - from) as f64)
}

/// Window `[from, to]` of a decaying sequence where it stays between
/// `hi·d[0]` and `lo·d[0]`.
pub fn decay_window(d: &[f64], hi: f64, lo: f64) -> Option<(usize, usize)> {
    let from = d.iter().position(|&v| v < hi * d[0])?;
    let to = d.iter().rposition(|&v| v > lo * d[0])?;
    (to > from + 20).then_some((from, to))
}

pub fn central_gradient(f: &Objective, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |k, _| {
        let mut p = x.clone();
        let mut m = x.clone();
        p[k] += h;
        m[k] -= h;
        (f.value(&p).unwrap() - f.value(&m).unwrap()) / (2.0 * h)
    })
}

pub fn central_hessian(f: &Objective, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut p = x.clone();
        let mut m = x.clone();
        p[k] += h;
        m[k] -= h;
        let col = (f.gradient(&p).unwrap() - f.gradient(&m).unwrap()) / (2.0 * h);
        out.set_column(k, &col);
    }
    out
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
