mod common;

use common::*;
use dean_core::baselines::{diging_run, extra_run, metropolis_weights, Diging, MixingMatrix};
use dean_core::certificates::{
    certified_step_sizes, estimate_constants, theorem3_rate, EstimateOptions, StepRule,
};
use dean_core::dean::{dean_init, run};
use dean_core::linalg::{mean, stacked_norm};
use dean_core::objectives::{quadratic_objectives, QuadraticSpec};
use dean_core::topology::random_connected_graph;
use dean_core::{EdgeWeights, NewtonOptions, ProblemInstance, RunOptions, SurrogateFamily};
use proptest::prelude::*;

fn distances(its: &[Vec<nalgebra::DVector<f64>>], target: &nalgebra::DVector<f64>) -> Vec<f64> {
    its.iter().map(|x| x.iter().map(|xi| (xi - target).norm_squared()).sum::<f64>().sqrt()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metropolis_is_symmetric_doubly_stochastic(seed in 0u64..10_000, n in 2usize..25) {
        let g = random_connected_graph(n, degree_for(n), seed).unwrap();
        let w = metropolis_weights(&g);
        let m = w.matrix();
        prop_assert_eq!(m, &m.transpose());
        for i in 0..n {
            prop_assert!((m.row(i).sum() - 1.0).abs() <= 1e-12);
            prop_assert!((m.column(i).sum() - 1.0).abs() <= 1e-12);
            for j in 0..n {
                prop_assert_eq!(m[(i, j)] > 0.0, i == j || g.has_edge(i, j));
            }
        }
        prop_assert!(w.disagreement_radius() < 1.0);
        prop_assert!(MixingMatrix::from_matrix(m.clone(), &g).is_ok());
    }
}

#[test]
fn diging_tracks_the_average_gradient() {
    for seed in 0..10 {
        let inst = if seed % 2 == 0 { quadratic_instance(6, 3, 3.0, seed) } else { logistic_instance(6, 3, 3.0, seed) };
        let w = metropolis_weights(inst.graph());
        let x0 = dean_init(&inst).x;
        let mut method = Diging::new(&inst, &w, 0.01, &x0).unwrap();
        let mut x = x0;
        for _ in 0..200 {
            x = method.step(&x).unwrap();
            let grads: Vec<_> = x.iter().zip(inst.objectives()).map(|(xi, f)| f.gradient(xi).unwrap()).collect();
            let gap = (mean(method.tracker()) - mean(&grads)).norm();
            assert!(gap <= 1e-10, "seed {seed}: {gap:e}");
        }
    }
}

#[test]
fn baselines_converge_on_k2() {
    let inst = ProblemInstance::new(
        dean_core::Graph::complete(2).unwrap(),
        quadratic_objectives(2, &QuadraticSpec::new(2), 5).unwrap(),
        NewtonOptions::default(),
    )
    .unwrap();
    let w = metropolis_weights(inst.graph());
    let extra = extra_run(&inst, &w, 0.05, RunOptions::new(5000)).unwrap();
    let diging = diging_run(&inst, &w, 0.05, RunOptions::new(5000)).unwrap();
    for t in [extra, diging] {
        assert!(t.last().unwrap().e < 1e-8, "{}: {:?}", t.algo, t.last());
    }
    // the lifted systems certify the contraction
    assert!(rate_without_unit_modes(&extra_iteration_matrix(&inst, &w, 0.05), 2) < 1.0);
    assert!(rate_without_unit_modes(&diging_iteration_matrix(&inst, &w, 0.05), 2) < 1.0);
}

struct RateCase {
    measured: f64,
    oracle: f64,
}

fn measured_vs_oracle(d: &[f64], oracle: f64) -> RateCase {
    let (from, to) = decay_window(d, 1e-2, 1e-11).expect("long enough decay");
    RateCase { measured: empirical_rate(d, from, to), oracle }
}

fn small_quadratic(seed: u64) -> ProblemInstance {
    let n = 3 + (seed as usize % 3);
    quadratic_instance(n, 2, degree_for(n).min(3.0), seed)
}

#[test]
fn dean_rate_matches_lifted_matrix() {
    for seed in 0..10 {
        let inst = small_quadratic(seed);
        let g = SurrogateFamily::identity(inst.graph());
        let (alpha, _) = certified_step_sizes(&inst, &g, StepRule::Lemma1Fraction(0.9), EstimateOptions::default()).unwrap();
        let t = run(&inst, &g, &alpha, RunOptions::fixed(3000).keep_iterates());
        let d = distances(t.iterates.as_ref().unwrap(), inst.optimum());
        let oracle = rate_without_unit_modes(&dean_iteration_matrix(&inst, &alpha), inst.dim());
        let c = measured_vs_oracle(&d, oracle);
        assert!((c.measured - c.oracle).abs() <= 0.02 * c.oracle, "seed {seed}: {} vs {}", c.measured, c.oracle);
    }
}

#[test]
fn baseline_rates_match_lifted_matrices() {
    for seed in 0..10 {
        let inst = small_quadratic(seed);
        let w = metropolis_weights(inst.graph());
        let lmax = inst.objectives().iter().map(|f| dean_core::linalg::symmetric_norm(curvature(f))).fold(0.0, f64::max);
        let alpha = 0.2 / lmax;
        let opts = RunOptions::fixed(4000).keep_iterates();
        let cases = [
            (extra_run(&inst, &w, alpha, opts).unwrap(), extra_iteration_matrix(&inst, &w, alpha)),
            (diging_run(&inst, &w, alpha, opts).unwrap(), diging_iteration_matrix(&inst, &w, alpha)),
        ];
        for (t, m) in cases {
            let d = distances(t.iterates.as_ref().unwrap(), inst.optimum());
            let c = measured_vs_oracle(&d, rate_without_unit_modes(&m, inst.dim()));
            assert!(
                (c.measured - c.oracle).abs() <= 0.02 * c.oracle,
                "{} seed {seed}: {} vs {}",
                t.algo,
                c.measured,
                c.oracle
            );
        }
    }
}

#[test]
fn rate_certificate_equals_spectral_radius_for_scaled_identity_curvature() {
    for seed in 0..10 {
        let n = 3 + seed as usize % 3;
        let scale = 1.0 + seed as f64 * 0.3;
        let graph = random_connected_graph(n, degree_for(n).min(3.0), seed).unwrap();
        let spec = QuadraticSpec { eig_min: scale, eig_max: scale, ..QuadraticSpec::new(2) };
        let inst = ProblemInstance::new(graph, quadratic_objectives(n, &spec, seed).unwrap(), NewtonOptions::default()).unwrap();
        let g = SurrogateFamily::identity(inst.graph());
        let c = estimate_constants(&inst, &g, EstimateOptions::default()).unwrap();
        let alpha = EdgeWeights::uniform(inst.graph(), 0.2 * scale / inst.graph().max_degree() as f64).unwrap();
        let rate = theorem3_rate(&c, inst.graph(), &g, &alpha, stacked_norm(inst.local_minimizers())).unwrap();
        let oracle = rate_without_unit_modes(&dean_iteration_matrix(&inst, &alpha), 2);
        assert!((rate.q - oracle).abs() <= 1e-10, "seed {seed}: q = {} vs {oracle}", rate.q);
    }
}

#[test]
fn rate_certificate_bounds_spectral_radius_in_general() {
    for seed in 0..10 {
        let inst = small_quadratic(seed);
        let g = SurrogateFamily::identity(inst.graph());
        let c = estimate_constants(&inst, &g, EstimateOptions::default()).unwrap();
        let alpha = EdgeWeights::uniform(inst.graph(), 0.3 * c.convexity_min() / inst.graph().max_degree() as f64).unwrap();
        let rate = theorem3_rate(&c, inst.graph(), &g, &alpha, stacked_norm(inst.local_minimizers())).unwrap();
        let oracle = rate_without_unit_modes(&dean_iteration_matrix(&inst, &alpha), 2);
        assert!(oracle <= rate.q + 1e-12, "seed {seed}: {oracle} > {}", rate.q);
    }
}

#[test]
fn lifted_matrix_keeps_consensus_vectors() {
    let inst = small_quadratic(1);
    let alpha = EdgeWeights::uniform(inst.graph(), 0.1).unwrap();
    let m = dean_iteration_matrix(&inst, &alpha);
    let ones = stack(&vec![nalgebra::DVector::from_element(2, 1.0); inst.node_count()]);
    assert!((&m * &ones - &ones).norm() < 1e-14);
}
