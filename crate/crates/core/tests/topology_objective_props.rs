mod common;

use common::*;
use dean_core::linalg::extreme_eigenvalues;
use dean_core::objectives::{local_minimizer, logistic_objectives, quadratic_objectives, LogisticSpec, QuadraticSpec};
use dean_core::topology::{laplacian, random_connected_graph, spectrum, unit_laplacian};
use dean_core::{EdgeWeights, Graph, NewtonOptions, Objective, ObjectiveError};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reachable(g: &Graph) -> usize {
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().filter(|&&s| s).count()
}

#[test]
fn random_graphs_are_connected_with_bounded_spectrum() {
    for seed in 0..100u64 {
        let n = 2 + (seed as usize * 7) % 29;
        let g = random_connected_graph(n, degree_for(n), seed).unwrap();
        assert_eq!(reachable(&g), n);
        let s = spectrum(&unit_laplacian(&g)).unwrap();
        assert!(s.lambda_2 > 1e-12, "seed {seed}");
        let cap = (n as f64).min(2.0 * g.max_degree() as f64);
        assert!(s.lambda_max <= cap + 1e-10, "seed {seed}: {} > {cap}", s.lambda_max);
    }
}

#[test]
fn seeds_determine_graphs() {
    for seed in 0..10 {
        assert_eq!(random_connected_graph(12, 3.0, seed).unwrap(), random_connected_graph(12, 3.0, seed).unwrap());
    }
}

#[test]
fn laplacians_of_hand_built_graphs() {
    // triangle plus pendant: degrees 2, 2, 3, 1
    let g = Graph::new(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
    #[rustfmt::skip]
    let expected = DMatrix::from_row_slice(4, 4, &[
         2.0, -1.0, -1.0,  0.0,
        -1.0,  2.0, -1.0,  0.0,
        -1.0, -1.0,  3.0, -1.0,
         0.0,  0.0, -1.0,  1.0,
    ]);
    assert_eq!(unit_laplacian(&g).matrix(), &expected);
    assert_eq!(laplacian(&g, &EdgeWeights::uniform(&g, 1.0).unwrap()).unwrap().matrix(), &expected);

    let star = Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let l = unit_laplacian(&star);
    assert_eq!(l.matrix()[(0, 0)], 4.0);
    assert_eq!(l.matrix()[(3, 3)], 1.0);
    assert_eq!(l.matrix()[(1, 2)], 0.0);
    assert_eq!(l.matrix()[(0, 4)], -1.0);

    let cycle = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let w = EdgeWeights::new(&cycle, [((0, 1), 0.5), ((1, 2), 2.0), ((0, 2), 1.0)]).unwrap();
    let l = laplacian(&cycle, &w).unwrap();
    assert_eq!(l.matrix()[(0, 0)], 1.5);
    assert_eq!(l.matrix()[(1, 1)], 2.5);
    assert_eq!(l.matrix()[(2, 1)], -2.0);
}

fn random_point(dim: usize, rng: &mut ChaCha8Rng, scale: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(-scale..scale))
}

fn fd_families() -> Vec<(&'static str, Objective)> {
    let q = quadratic_objectives(2, &QuadraticSpec::new(4), 3).unwrap().remove(0);
    let l = logistic_objectives(2, &LogisticSpec::well_posed(4, 2), 3).unwrap().remove(0);
    vec![("quadratic", q), ("logistic", l)]
}

#[test]
fn gradients_and_hessians_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, f) in fd_families() {
        for _ in 0..100 {
            let x = random_point(f.dim(), &mut rng, 2.0);
            let g = f.gradient(&x).unwrap();
            let fd = central_gradient(&f, &x, 1e-5);
            let err = (&fd - &g).norm() / g.norm().max(1.0);
            assert!(err <= 1e-6, "{name} gradient: {err:e}");
            let h = f.hessian(&x).unwrap();
            let fdh = central_hessian(&f, &x, 1e-5);
            let err = (&fdh - &h).norm() / h.norm().max(1.0);
            assert!(err <= 1e-5, "{name} Hessian: {err:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logistic_hessian_is_psd(seed in 0u64..500, scale in 0.1f64..50.0) {
        let f = logistic_objectives(2, &LogisticSpec::reference(3), seed).unwrap().remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(3, &mut rng, scale);
        let (lo, _) = extreme_eigenvalues(&f.hessian(&x).unwrap());
        prop_assert!(lo >= -1e-10);
    }

    #[test]
    fn quadratic_minimizer_is_the_center(seed in 0u64..500, dim in 1usize..6) {
        let f = quadratic_objectives(2, &QuadraticSpec::new(dim), seed).unwrap().remove(0);
        let Objective::Quadratic(q) = &f else { unreachable!() };
        let x = local_minimizer(&f, NewtonOptions::default()).unwrap();
        prop_assert_eq!(&x, q.center());
        prop_assert!(f.gradient(&x).unwrap().norm() <= 1e-14 * (1.0 + q.eig_max() * x.norm()));
    }
}

#[test]
fn reference_logistic_recipe_has_no_local_minimizer() {
    // classes at ±10 with two samples per dimension are separable almost surely
    let objs = logistic_objectives(4, &LogisticSpec::reference(3), 0).unwrap();
    for f in &objs {
        assert!(matches!(local_minimizer(f, NewtonOptions::default()), Err(ObjectiveError::Convergence { .. })));
    }
}

#[test]
fn well_posed_logistic_minimizers_are_strongly_convex() {
    for seed in 0..5 {
        let objs = logistic_objectives(5, &LogisticSpec::well_posed(5, 5), seed).unwrap();
        for f in &objs {
            let x = local_minimizer(f, NewtonOptions::default()).unwrap();
            let (lo, _) = extreme_eigenvalues(&f.hessian(&x).unwrap());
            assert!(lo > 0.0);
        }
    }
}
