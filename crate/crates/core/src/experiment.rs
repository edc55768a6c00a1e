//! Experiment configuration and orchestration behind the `dean` command:
//! instance generation, single runs, multi-algorithm comparisons and
//! certificate reports, with atomic file output.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, metropolis_weights, BaselineError, SweepResult};
use crate::certificates::{
    certified_step_sizes, certify, estimate_constants, verify_trace, CertificateError, CertificateReport,
    ConstantsEstimate, EstimateOptions, StepRule, Verdict,
};
use crate::dean::{self, check_consensus_step, DeanError, NetworkState, RunOptions, StopRule, SurrogateFamily};
use crate::objectives::{
    logistic_objectives, quadratic_objectives, Family, InstanceFile, LogisticSpec, NewtonOptions, Objective,
    ObjectiveError, ProblemInstance, QuadraticSpec,
};
use crate::topology::{random_connected_graph, read_edge_list, unit_laplacian, write_edge_list, EdgeWeights, Graph, TopologyError};
use crate::trace::{config_hash, RunStatus, RunTrace, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{0}")]
    Diverged(String),
    #[error("{0}")]
    Singular(String),
    #[error("constant estimation failed: {0}")]
    Estimation(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl HarnessError {
    /// Process exit code: 2 parameters, 3 divergence, 4 singular Hessian, 5 estimation.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parameter(_) => 2,
            HarnessError::Diverged(_) => 3,
            HarnessError::Singular(_) => 4,
            HarnessError::Estimation(_) => 5,
            HarnessError::Io { .. } | HarnessError::Failed(_) => 1,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

impl From<TopologyError> for HarnessError {
    fn from(e: TopologyError) -> Self {
        HarnessError::Parameter(e.to_string())
    }
}

impl From<ObjectiveError> for HarnessError {
    fn from(e: ObjectiveError) -> Self {
        HarnessError::Parameter(e.to_string())
    }
}

impl From<BaselineError> for HarnessError {
    fn from(e: BaselineError) -> Self {
        HarnessError::Parameter(e.to_string())
    }
}

impl From<TraceError> for HarnessError {
    fn from(e: TraceError) -> Self {
        HarnessError::Parameter(e.to_string())
    }
}

impl From<DeanError> for HarnessError {
    fn from(e: DeanError) -> Self {
        match e {
            DeanError::Singular { .. } => HarnessError::Singular(e.to_string()),
            DeanError::Diverged { .. } => HarnessError::Diverged(e.to_string()),
            _ => HarnessError::Parameter(e.to_string()),
        }
    }
}

impl From<CertificateError> for HarnessError {
    fn from(e: CertificateError) -> Self {
        match e {
            CertificateError::Parameter(_) | CertificateError::Verification(_) | CertificateError::Topology(_) => {
                HarnessError::Parameter(e.to_string())
            }
            CertificateError::Estimation(msg) => HarnessError::Estimation(msg),
            CertificateError::Objective(_) => HarnessError::Estimation(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Dean,
    Extra,
    Diging,
    Consensus,
    Newton,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Dean, Algo::Extra, Algo::Diging, Algo::Consensus, Algo::Newton];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Dean => "dean",
            Algo::Extra => "extra",
            Algo::Diging => "diging",
            Algo::Consensus => "consensus",
            Algo::Newton => "newton",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::Parameter(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    Identity,
    EndpointSum,
}

impl SurrogateKind {
    pub fn family(self, graph: &Graph) -> SurrogateFamily {
        match self {
            SurrogateKind::Identity => SurrogateFamily::identity(graph),
            SurrogateKind::EndpointSum => SurrogateFamily::endpoint_sum(graph),
        }
    }
}

impl FromStr for SurrogateKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(SurrogateKind::Identity),
            "endpoint_sum" | "endpoint-sum" => Ok(SurrogateKind::EndpointSum),
            _ => Err(HarnessError::Parameter(format!("unknown surrogate {s:?}"))),
        }
    }
}

/// Which logistic generator defaults to start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogisticPreset {
    WellPosed,
    Reference,
}

impl FromStr for LogisticPreset {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "well-posed" => Ok(LogisticPreset::WellPosed),
            "reference" => Ok(LogisticPreset::Reference),
            _ => Err(HarnessError::Parameter(format!("unknown logistic preset {s:?}"))),
        }
    }
}

/// Log-spaced step-size grid for baselines run without an explicit step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { lo: 1e-5, hi: 1.0, points: 21 }
    }
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, HarnessError> {
        Ok(baselines::log_grid(self.lo, self.hi, self.points)?)
    }
}

/// One experiment. Loaded from JSON, then overridden field by field from
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    pub avg_degree: f64,
    pub seed: u64,
    pub graph_file: Option<PathBuf>,
    pub instance_file: Option<PathBuf>,
    pub family: Family,
    pub dim: usize,
    pub logistic_preset: LogisticPreset,
    pub feature_mean: Option<f64>,
    pub samples_per_class: Option<usize>,
    pub algo: Algo,
    pub surrogate: SurrogateKind,
    pub alpha_mode: Option<StepRule>,
    pub alpha: Option<f64>,
    pub alpha_file: Option<PathBuf>,
    pub max_iters: usize,
    pub stop: StopRule,
    pub alpha_bar: f64,
    pub sample_budget: usize,
    pub sample_seed: u64,
    pub epsilon: Option<f64>,
    pub grid: GridSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_nodes: 20,
            avg_degree: 4.0,
            seed: 0,
            graph_file: None,
            instance_file: None,
            family: Family::Quadratic,
            dim: 2,
            logistic_preset: LogisticPreset::WellPosed,
            feature_mean: None,
            samples_per_class: None,
            algo: Algo::Dean,
            surrogate: SurrogateKind::Identity,
            alpha_mode: None,
            alpha: None,
            alpha_file: None,
            max_iters: 100,
            stop: StopRule::default(),
            alpha_bar: 1.0,
            sample_budget: 40,
            sample_seed: 0,
            epsilon: None,
            grid: GridSpec::default(),
        }
    }
}

pub const MAX_ITERS_LIMIT: usize = 10_000_000;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parameter(format!("config JSON: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&read(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Parameter(m));
        if self.graph_file.is_none() && self.n_nodes < 2 {
            return bad(format!("n_nodes = {} must be at least 2", self.n_nodes));
        }
        if self.instance_file.is_none() && self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.max_iters > MAX_ITERS_LIMIT {
            return bad(format!("max_iters = {} exceeds {MAX_ITERS_LIMIT}", self.max_iters));
        }
        if !(self.alpha_bar > 0.0 && self.alpha_bar.is_finite()) {
            return bad(format!("alpha_bar = {} must be positive", self.alpha_bar));
        }
        if self.sample_budget < 10 {
            return bad(format!("sample_budget = {} is below 10", self.sample_budget));
        }
        if let Some(a) = self.alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return bad(format!("alpha = {a} must be finite and non-negative"));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("epsilon = {e} must be positive"));
            }
        }
        if let StopRule::Thresholds { consensus, grad_sum } = self.stop {
            if !(consensus >= 0.0 && grad_sum >= 0.0) {
                return bad("stopping thresholds must be non-negative".into());
            }
        }
        for p in [&self.graph_file, &self.instance_file, &self.alpha_file].into_iter().flatten() {
            if !p.exists() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        if self.alpha_mode == Some(StepRule::PerEdge) && self.alpha_file.is_none() {
            return bad("alpha mode `file` needs an alpha file".into());
        }
        Ok(())
    }

    fn estimate_options(&self, alpha_bar: f64) -> EstimateOptions {
        EstimateOptions { alpha_bar, budget: self.sample_budget, seed: self.sample_seed, ..Default::default() }
    }

    fn run_options(&self) -> RunOptions {
        RunOptions { max_iters: self.max_iters, stop: self.stop, keep_iterates: false }
    }

    /// DEAN step rule implied by the alpha fields.
    pub fn step_rule(&self) -> StepRule {
        if let Some(r) = self.alpha_mode {
            r
        } else if let Some(a) = self.alpha {
            StepRule::Uniform(a)
        } else if self.alpha_file.is_some() {
            StepRule::PerEdge
        } else {
            StepRule::Lemma1Fraction(0.9)
        }
    }
}

/// Graph and instance built from a configuration, with their file forms.
#[derive(Debug, Clone)]
pub struct Setup {
    pub inst: ProblemInstance,
    pub edge_list: String,
    pub instance_json: String,
}

impl Setup {
    pub fn from_instance(inst: ProblemInstance) -> Self {
        let g = inst.graph();
        let edge_list = write_edge_list(g, &EdgeWeights::uniform(g, 1.0).expect("unit weights are valid"));
        let instance_json = inst.to_file().to_json();
        Self { inst, edge_list, instance_json }
    }

    fn fingerprint(&self) -> String {
        config_hash(&format!("{}\n{}", self.edge_list, self.instance_json))
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn generate_objectives(cfg: &ExperimentConfig, nodes: usize) -> Result<Vec<Objective>, HarnessError> {
    let logistic = || {
        let mut spec = match cfg.logistic_preset {
            LogisticPreset::WellPosed => LogisticSpec::well_posed(cfg.dim, nodes),
            LogisticPreset::Reference => LogisticSpec::reference(cfg.dim),
        };
        if let Some(m) = cfg.feature_mean {
            spec.mean = m;
        }
        if let Some(s) = cfg.samples_per_class {
            spec.samples_per_class = s;
        }
        logistic_objectives(nodes, &spec, cfg.seed)
    };
    Ok(match cfg.family {
        Family::Quadratic => quadratic_objectives(nodes, &QuadraticSpec::new(cfg.dim), cfg.seed)?,
        Family::Logistic => logistic()?,
        Family::Mixed => {
            // even nodes quadratic, odd nodes logistic
            let q = quadratic_objectives(nodes, &QuadraticSpec::new(cfg.dim), cfg.seed)?;
            let l = logistic()?;
            q.into_iter().zip(l).enumerate().map(|(i, (a, b))| if i % 2 == 0 { a } else { b }).collect()
        }
    })
}

/// Build the graph and instance from files or seeds.
pub fn build_setup(cfg: &ExperimentConfig) -> Result<Setup, HarnessError> {
    cfg.validate()?;
    let graph = match &cfg.graph_file {
        Some(p) => read_edge_list(&read(p)?)?.0,
        None => random_connected_graph(cfg.n_nodes, cfg.avg_degree, cfg.seed)?,
    };
    let (objectives, seed) = match &cfg.instance_file {
        Some(p) => {
            let file = InstanceFile::from_json(&read(p)?)?;
            let seed = file.seed;
            (file.objectives()?, seed)
        }
        None => (generate_objectives(cfg, graph.node_count())?, Some(cfg.seed)),
    };
    if objectives.len() != graph.node_count() {
        return Err(HarnessError::Parameter(format!(
            "instance has {} nodes but the graph has {}",
            objectives.len(),
            graph.node_count()
        )));
    }
    let mut inst = ProblemInstance::new(graph, objectives, NewtonOptions::default())?;
    if let Some(s) = seed {
        inst = inst.with_seed(s);
    }
    Ok(Setup::from_instance(inst))
}

/// Contents of the `<trace>.status` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusFile {
    pub algo: String,
    pub status: RunStatus,
    pub detail: Option<String>,
    pub config_hash: Option<String>,
    pub rows: usize,
    pub messages: u64,
    pub alpha: String,
}

impl StatusFile {
    pub fn path_for(trace_path: &Path) -> PathBuf {
        let mut p = trace_path.as_os_str().to_owned();
        p.push(".status");
        PathBuf::from(p)
    }

    pub fn load(trace_path: &Path) -> Result<Self, HarnessError> {
        let p = Self::path_for(trace_path);
        serde_json::from_str(&read(&p)?).map_err(|e| HarnessError::Parameter(format!("{}: {e}", p.display())))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub report: Option<CertificateReport>,
    /// Human-readable step-size choice.
    pub alpha: String,
    pub sweep: Option<SweepResult>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn status_file(&self) -> StatusFile {
        StatusFile {
            algo: self.trace.algo.clone(),
            status: self.trace.status,
            detail: self.trace.detail.clone(),
            config_hash: self.trace.config_hash.clone(),
            rows: self.trace.records.len(),
            messages: self.trace.messages,
            alpha: self.alpha.clone(),
        }
    }

    /// Error matching an abnormal trace status, if any.
    pub fn failure(&self) -> Option<HarnessError> {
        let detail = || self.trace.detail.clone().unwrap_or_default();
        match self.trace.status {
            RunStatus::Converged | RunStatus::Completed => None,
            RunStatus::Diverged => Some(HarnessError::Diverged(detail())),
            RunStatus::Singular => Some(HarnessError::Singular(detail())),
            RunStatus::Failed => Some(HarnessError::Failed(detail())),
        }
    }

    /// Trace CSV, then sidecar, then report, each written atomically.
    pub fn write(&self, trace_path: &Path, report_path: Option<&Path>, with_wall_time: bool) -> Result<(), HarnessError> {
        write_atomic(trace_path, &self.trace.to_csv(with_wall_time))?;
        let status = serde_json::to_string_pretty(&self.status_file()).expect("status serialization is infallible");
        write_atomic(&StatusFile::path_for(trace_path), &status)?;
        if let (Some(p), Some(r)) = (report_path, &self.report) {
            write_atomic(p, &r.to_json())?;
        }
        Ok(())
    }
}

fn weights_text(graph: &Graph, w: &EdgeWeights) -> String {
    graph.edges().iter().map(|&(i, j)| format!("{:.17e}", w.get(i, j).unwrap_or(f64::NAN))).collect::<Vec<_>>().join(",")
}

/// Hash tying a trace to the report for the same instance, surrogate and step sizes.
fn run_hash(setup: &Setup, algo: Algo, surrogate: Option<SurrogateKind>, steps: &str) -> String {
    config_hash(&format!(
        "{}\nalgo={algo}\nsurrogate={}\nsteps={steps}",
        setup.fingerprint(),
        surrogate.map(|s| format!("{s:?}")).unwrap_or_default()
    ))
}

/// DEAN step sizes for a configuration, with constants when a certified rule produced them.
pub fn dean_step_sizes(
    cfg: &ExperimentConfig,
    setup: &Setup,
) -> Result<(EdgeWeights, StepRule, Option<ConstantsEstimate>), HarnessError> {
    let graph = setup.inst.graph();
    let g = cfg.surrogate.family(graph);
    let rule = cfg.step_rule();
    Ok(match rule {
        StepRule::Uniform(a) => (EdgeWeights::uniform(graph, a)?, rule, None),
        StepRule::PerEdge => {
            let path = cfg.alpha_file.as_ref().ok_or_else(|| HarnessError::Parameter("no alpha file".into()))?;
            let (file_graph, w) = read_edge_list(&read(path)?)?;
            if file_graph.edges() != graph.edges() || file_graph.node_count() != graph.node_count() {
                return Err(HarnessError::Parameter("alpha file links differ from the graph".into()));
            }
            (w, rule, None)
        }
        StepRule::Lemma1Fraction(_) | StepRule::Theorem2 { .. } => {
            let (w, c) = certified_step_sizes(&setup.inst, &g, rule, cfg.estimate_options(cfg.alpha_bar))?;
            (w, rule, Some(c))
        }
    })
}

fn dean_report(
    cfg: &ExperimentConfig,
    setup: &Setup,
    alpha: Option<&EdgeWeights>,
    rule: Option<StepRule>,
    constants: Option<ConstantsEstimate>,
) -> Result<CertificateReport, HarnessError> {
    let g = cfg.surrogate.family(setup.inst.graph());
    let c = match constants {
        Some(c) => c,
        // the tightest ceiling that still admits the given steps
        None => estimate_constants(&setup.inst, &g, cfg.estimate_options(alpha.map_or(cfg.alpha_bar, EdgeWeights::max)))?,
    };
    let epsilon = cfg.epsilon.or(match rule {
        Some(StepRule::Theorem2 { epsilon, .. }) => Some(epsilon),
        _ => None,
    });
    let mut report = certify(&setup.inst, &g, &c, alpha, rule, epsilon)?;
    report.config_hash =
        alpha.map(|a| run_hash(setup, Algo::Dean, Some(cfg.surrogate), &weights_text(setup.inst.graph(), a)));
    report.effective_config = Some(serde_json::to_value(cfg).expect("config serialization is infallible"));
    Ok(report)
}

fn baseline_run(
    cfg: &ExperimentConfig,
    setup: &Setup,
    method: baselines::Baseline,
) -> Result<(RunTrace, String, Option<SweepResult>), HarnessError> {
    let w = metropolis_weights(setup.inst.graph());
    let opts = cfg.run_options();
    match cfg.alpha {
        Some(a) => Ok((method.run(&setup.inst, &w, a, opts)?, format!("{a}"), None)),
        None => {
            let res = baselines::sweep(method, &setup.inst, &w, &cfg.grid.values()?, opts)?;
            let label = format!("{} (best of grid)", res.best_alpha);
            Ok((res.best_trace.clone(), label, Some(res)))
        }
    }
}

/// Run the configured algorithm on a prepared setup.
pub fn run_with_setup(cfg: &ExperimentConfig, setup: &Setup) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    let inst = &setup.inst;
    let opts = cfg.run_options();
    let mut warnings = Vec::new();
    let (mut trace, report, alpha, steps, sweep) = match cfg.algo {
        Algo::Dean => {
            let (w, rule, constants) = dean_step_sizes(cfg, setup)?;
            let g = cfg.surrogate.family(inst.graph());
            let trace = dean::run(inst, &g, &w, opts);
            let certified = constants.is_some();
            let report = match dean_report(cfg, setup, Some(&w), Some(rule), constants) {
                Ok(r) => Some(r),
                Err(e) if !certified => {
                    warnings.push(format!("no certificate report: {e}"));
                    None
                }
                Err(e) => return Err(e),
            };
            let steps = weights_text(inst.graph(), &w);
            (trace, report, rule.to_string(), steps, None)
        }
        Algo::Extra | Algo::Diging => {
            let method = if cfg.algo == Algo::Extra { baselines::Baseline::Extra } else { baselines::Baseline::Diging };
            let (trace, alpha, sweep) = baseline_run(cfg, setup, method)?;
            let steps = sweep.as_ref().map_or_else(|| alpha.clone(), |s| format!("{:.17e}", s.best_alpha));
            (trace, None, alpha, steps, sweep)
        }
        Algo::Consensus => {
            let l = unit_laplacian(inst.graph());
            let a = cfg.alpha.unwrap_or(1.0 / (inst.graph().max_degree() as f64 + 1.0));
            check_consensus_step(&l, a)?;
            (dean::run_consensus(inst, &l, a, opts), None, format!("{a}"), format!("{a:.17e}"), None)
        }
        Algo::Newton => {
            let a = cfg.alpha.unwrap_or(1.0);
            // from the origin, since the local minimizers are already its fixed point
            let x0 = NetworkState::new(vec![DVector::zeros(inst.dim()); inst.node_count()])?;
            (dean::run_newton(inst, x0, a, opts), None, format!("{a}"), format!("{a:.17e}"), None)
        }
    };
    let surrogate = (cfg.algo == Algo::Dean).then_some(cfg.surrogate);
    trace.config_hash = Some(run_hash(setup, cfg.algo, surrogate, &steps));
    Ok(RunOutcome { trace, report, alpha, sweep, warnings })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    run_with_setup(cfg, &build_setup(cfg)?)
}

pub const COMPARE_HEADER: &str = "algo,k,e_normalized,V,consensus_err";

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub algo: String,
    pub alpha: String,
    pub status: RunStatus,
    pub final_ratio: f64,
    pub grid: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub runs: Vec<RunOutcome>,
}

impl CompareOutcome {
    /// Long-format CSV with `e(k)/e(0)` per algorithm.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARE_HEADER);
        out.push('\n');
        for run in &self.runs {
            let e0 = run.trace.records.first().map_or(0.0, |r| r.e);
            for r in &run.trace.records {
                let ratio = if e0 > 0.0 { r.e / e0 } else { 1.0 };
                writeln!(out, "{},{},{:.16e},{:.16e},{:.16e}", run.trace.algo, r.k, ratio, r.v, r.consensus_err)
                    .expect("writing to a String cannot fail");
            }
        }
        out
    }

    pub fn summary(&self) -> Vec<CompareSummary> {
        self.runs
            .iter()
            .map(|r| CompareSummary {
                algo: r.trace.algo.clone(),
                alpha: r.alpha.clone(),
                status: r.trace.status,
                final_ratio: baselines::final_ratio(&r.trace),
                grid: r.sweep.as_ref().map(|s| s.grid.clone()),
            })
            .collect()
    }
}

/// Worker count: `DEAN_THREADS` if set, else the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("DEAN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run several configurations on one shared instance, in parallel up to `threads`.
pub fn compare(cfgs: &[ExperimentConfig], threads: usize) -> Result<CompareOutcome, HarnessError> {
    let first = cfgs.first().ok_or_else(|| HarnessError::Parameter("nothing to compare".into()))?;
    let setup = build_setup(first)?;
    for (i, c) in cfgs.iter().enumerate().skip(1) {
        if build_setup(c)?.fingerprint() != setup.fingerprint() {
            return Err(HarnessError::Parameter(format!("configuration {i} describes a different instance")));
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunOutcome, HarnessError>>>> =
        Mutex::new((0..cfgs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, cfgs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cfgs.len() {
                    break;
                }
                let r = run_with_setup(&cfgs[i], &setup);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    let runs = results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompareOutcome { runs })
}

/// Certificate report for the configured DEAN run; step sizes are included
/// when the configuration fixes them.
pub fn certify_experiment(cfg: &ExperimentConfig) -> Result<CertificateReport, HarnessError> {
    let setup = build_setup(cfg)?;
    let fixes_steps = cfg.alpha_mode.is_some() || cfg.alpha.is_some() || cfg.alpha_file.is_some();
    if fixes_steps {
        let (w, rule, constants) = dean_step_sizes(cfg, &setup)?;
        dean_report(cfg, &setup, Some(&w), Some(rule), constants)
    } else {
        dean_report(cfg, &setup, None, None, None)
    }
}

/// Check a trace CSV (and its status sidecar, when present) against a report.
pub fn verify_trace_file(report: &CertificateReport, trace_path: &Path) -> Result<Verdict, HarnessError> {
    let mut trace = RunTrace::from_csv("dean", &read(trace_path)?)?;
    let sidecar = StatusFile::path_for(trace_path);
    let mut warnings = Vec::new();
    if sidecar.exists() {
        let status = StatusFile::load(trace_path)?;
        trace.config_hash = status.config_hash;
        trace.status = status.status;
    } else {
        warnings.push(format!("{} missing: configuration not cross-checked", sidecar.display()));
    }
    let mut verdict = verify_trace(&trace, report)?;
    verdict.warnings.extend(warnings);
    Ok(verdict)
}

/// Files written by `gen`.
pub fn generate(cfg: &ExperimentConfig, graph_path: &Path, instance_path: &Path) -> Result<Setup, HarnessError> {
    let setup = build_setup(cfg)?;
    write_atomic(graph_path, &setup.edge_list)?;
    write_atomic(instance_path, &setup.instance_json)?;
    Ok(setup)
}
