//! Shared fixtures for the criterion benches.

use dean_core::objectives::{logistic_objectives, quadratic_objectives, LogisticSpec, QuadraticSpec};
use dean_core::topology::random_connected_graph;
use dean_core::{NewtonOptions, ProblemInstance};

pub fn quadratic(n_nodes: usize, dim: usize, seed: u64) -> ProblemInstance {
    let graph = random_connected_graph(n_nodes, 4.0, seed).expect("valid graph parameters");
    let objs = quadratic_objectives(n_nodes, &QuadraticSpec::new(dim), seed).expect("valid quadratic spec");
    ProblemInstance::new(graph, objs, NewtonOptions::default()).expect("well-posed instance")
}

pub fn logistic(n_nodes: usize, dim: usize, seed: u64) -> ProblemInstance {
    let graph = random_connected_graph(n_nodes, 4.0, seed).expect("valid graph parameters");
    let objs = logistic_objectives(n_nodes, &LogisticSpec::well_posed(dim, n_nodes), seed).expect("valid logistic spec");
    ProblemInstance::new(graph, objs, NewtonOptions::default()).expect("well-posed instance")
}
