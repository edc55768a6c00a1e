use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    centralized_optimum, local_minimizer, Family, LogisticObjective, NewtonOptions, Objective, ObjectiveError,
    QuadraticObjective,
};
use crate::linalg;
use crate::topology::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub u: Vec<f64>,
    pub v: f64,
}

/// Serialized form of one node's objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodePayload {
    Quadratic {
        #[serde(rename = "B")]
        curvature: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Logistic { samples: Vec<Sample> },
}

impl From<&Objective> for NodePayload {
    fn from(f: &Objective) -> Self {
        match f {
            Objective::Quadratic(q) => NodePayload::Quadratic {
                curvature: q.curvature().row_iter().map(|r| r.iter().copied().collect()).collect(),
                b: q.center().iter().copied().collect(),
            },
            Objective::Logistic(l) => NodePayload::Logistic {
                samples: l
                    .features()
                    .row_iter()
                    .zip(l.labels().iter())
                    .map(|(r, &v)| Sample { u: r.iter().copied().collect(), v })
                    .collect(),
            },
        }
    }
}

impl NodePayload {
    pub fn to_objective(&self, dim: usize) -> Result<Objective, ObjectiveError> {
        match self {
            NodePayload::Quadratic { curvature, b } => {
                if curvature.len() != dim || curvature.iter().any(|r| r.len() != dim) || b.len() != dim {
                    return Err(ObjectiveError::Invalid(format!("quadratic payload is not {dim}-dimensional")));
                }
                let flat: Vec<f64> = curvature.iter().flatten().copied().collect();
                Ok(Objective::Quadratic(QuadraticObjective::new(
                    DMatrix::from_row_slice(dim, dim, &flat),
                    DVector::from_column_slice(b),
                )?))
            }
            NodePayload::Logistic { samples } => {
                if samples.iter().any(|s| s.u.len() != dim) {
                    return Err(ObjectiveError::Invalid(format!("logistic sample is not {dim}-dimensional")));
                }
                let flat: Vec<f64> = samples.iter().flat_map(|s| s.u.iter().copied()).collect();
                let labels: Vec<f64> = samples.iter().map(|s| s.v).collect();
                Ok(Objective::Logistic(LogisticObjective::new(
                    DMatrix::from_row_slice(samples.len(), dim, &flat),
                    DVector::from_vec(labels),
                )?))
            }
        }
    }
}

/// JSON document holding the node objectives of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub nodes: Vec<NodePayload>,
}

impl InstanceFile {
    pub fn from_objectives(objectives: &[Objective], seed: Option<u64>) -> Result<Self, ObjectiveError> {
        let n = objectives.first().map(Objective::dim).ok_or_else(|| ObjectiveError::Invalid("no objectives".into()))?;
        Ok(Self { n, family: family_of(objectives), seed, nodes: objectives.iter().map(NodePayload::from).collect() })
    }

    pub fn objectives(&self) -> Result<Vec<Objective>, ObjectiveError> {
        let objs = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, p)| p.to_objective(self.n).map_err(|e| e.at_node(i)))
            .collect::<Result<Vec<_>, _>>()?;
        if !objs.is_empty() && family_of(&objs) != self.family {
            return Err(ObjectiveError::Invalid("declared family does not match node payloads".into()));
        }
        Ok(objs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, ObjectiveError> {
        serde_json::from_str(text).map_err(|e| ObjectiveError::Invalid(format!("instance JSON: {e}")))
    }
}

fn family_of(objectives: &[Objective]) -> Family {
    let quad = objectives.iter().filter(|f| f.is_quadratic()).count();
    if quad == objectives.len() {
        Family::Quadratic
    } else if quad == 0 {
        Family::Logistic
    } else {
        Family::Mixed
    }
}

/// Graph, node objectives, and the cached local and global minimizers.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    graph: Graph,
    objectives: Vec<Objective>,
    dim: usize,
    local_minimizers: Vec<DVector<f64>>,
    optimum: DVector<f64>,
    seed: Option<u64>,
    newton: NewtonOptions,
}

impl ProblemInstance {
    pub fn new(graph: Graph, objectives: Vec<Objective>, newton: NewtonOptions) -> Result<Self, ObjectiveError> {
        if objectives.len() != graph.node_count() {
            return Err(ObjectiveError::Invalid(format!(
                "{} objectives for a {}-node graph",
                objectives.len(),
                graph.node_count()
            )));
        }
        let dim = objectives[0].dim();
        if objectives.iter().any(|f| f.dim() != dim) {
            return Err(ObjectiveError::Invalid("objectives have different dimensions".into()));
        }
        let local_minimizers = objectives
            .iter()
            .enumerate()
            .map(|(i, f)| local_minimizer(f, newton).map_err(|e| e.at_node(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let optimum = centralized_optimum(&objectives, newton)?;
        Ok(Self { graph, objectives, dim, local_minimizers, optimum, seed: None, newton })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn objective(&self, i: usize) -> &Objective {
        &self.objectives[i]
    }

    pub fn node_count(&self) -> usize {
        self.objectives.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn optimum(&self) -> &DVector<f64> {
        &self.optimum
    }

    pub fn local_minimizers(&self) -> &[DVector<f64>] {
        &self.local_minimizers
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn newton_options(&self) -> NewtonOptions {
        self.newton
    }

    pub fn family(&self) -> Family {
        family_of(&self.objectives)
    }

    pub fn is_quadratic(&self) -> bool {
        self.family() == Family::Quadratic
    }

    /// Magnitude against which gradient-sum drift is judged:
    /// `Σ_i ‖∇²f_i(x_i*)‖ (1 + ‖x_i*‖ + ‖x*‖)`.
    pub fn gradient_scale(&self) -> f64 {
        let opt = self.optimum.norm();
        self.objectives
            .iter()
            .zip(&self.local_minimizers)
            .map(|(f, x)| {
                let h = f.hessian(x).expect("minimizers are finite");
                linalg::symmetric_norm(&h) * (1.0 + x.norm() + opt)
            })
            .sum()
    }

    /// Same objectives on a relabelled graph: node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, ObjectiveError> {
        let graph = self.graph.permuted(perm)?;
        let mut objectives = self.objectives.clone();
        let mut local_minimizers = self.local_minimizers.clone();
        for (i, &p) in perm.iter().enumerate() {
            objectives[p] = self.objectives[i].clone();
            local_minimizers[p] = self.local_minimizers[i].clone();
        }
        Ok(Self { graph, objectives, local_minimizers, ..self.clone() })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile::from_objectives(&self.objectives, self.seed).expect("instance has objectives")
    }
}
