//! Decentralized approximate Newton (DEAN) simulation with Lyapunov-based
//! step-size and rate certificates, plus EXTRA and DIGing baselines.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod certificates;
pub mod dean;
pub mod experiment;
pub mod linalg;
pub mod objectives;
pub mod topology;
pub mod trace;

pub use baselines::{Baseline, BaselineError, MixingMatrix};
pub use certificates::{CertificateError, CertificateReport, ConstantsEstimate, StepRule};
pub use experiment::{Algo, ExperimentConfig, HarnessError};
pub use dean::{DeanError, NetworkState, RunOptions, StopRule, Surrogate, SurrogateFamily};
pub use objectives::{Family, LogisticObjective, NewtonOptions, Objective, ObjectiveError, ProblemInstance, QuadraticObjective};
pub use topology::{EdgeWeights, Graph, TopologyError, WeightedLaplacian};
pub use trace::{RunStatus, RunTrace, TraceRecord};
