use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dean_core::certificates::{CheckStatus, StepRule};
use dean_core::experiment::{
    self, Algo, ExperimentConfig, GridSpec, HarnessError, LogisticPreset, SurrogateKind,
};
use dean_core::{Family, StopRule};

#[derive(Parser)]
#[command(name = "dean", version, about = "Decentralized approximate Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random graph edge list and instance JSON.
    Gen {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value = "graph.edges")]
        graph_out: PathBuf,
        #[arg(long, default_value = "instance.json")]
        instance_out: PathBuf,
    },
    /// Run one algorithm and write its trace (and, for DEAN, the certificate report).
    Run {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long, default_value = "trace.csv")]
        trace: PathBuf,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
        /// Write zeros in the wall_ms column.
        #[arg(long)]
        no_wall_time: bool,
    },
    /// Run several algorithms on one instance and write e(k)/e(0) in long format.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        algo: AlgoArgs,
        /// Comma-separated algorithms, used when no --run-config is given.
        #[arg(long, value_delimiter = ',', default_value = "dean,extra,diging")]
        algos: Vec<String>,
        /// Full configuration for one run; repeat for several.
        #[arg(long)]
        run_config: Vec<PathBuf>,
        #[arg(long, default_value = "compare.csv")]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Estimate constants and report every applicable step-size and rate bound.
    Certify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        algo: AlgoArgs,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trace CSV to check against the report.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long)]
    avg_degree: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    #[arg(long)]
    seed: Option<u64>,
    /// well-posed | reference
    #[arg(long, value_parser = parse_with::<LogisticPreset>)]
    logistic_preset: Option<LogisticPreset>,
    #[arg(long)]
    feature_mean: Option<f64>,
    #[arg(long)]
    samples_per_class: Option<usize>,
}

#[derive(Args)]
struct AlgoArgs {
    /// dean | extra | diging | consensus | newton
    #[arg(long, value_parser = parse_with::<Algo>)]
    algo: Option<Algo>,
    /// identity | endpoint_sum
    #[arg(long, value_parser = parse_with::<SurrogateKind>)]
    surrogate: Option<SurrogateKind>,
    /// Uniform step size (baselines sweep the grid when omitted).
    #[arg(long)]
    alpha: Option<f64>,
    /// uniform:A | lemma1-frac:X | theorem2:EPS[:X] | file
    #[arg(long, value_parser = parse_step_rule)]
    alpha_mode: Option<StepRule>,
    /// Per-link step sizes as an edge list.
    #[arg(long)]
    alpha_file: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Run exactly --max-iters iterations.
    #[arg(long)]
    no_stop: bool,
    #[arg(long)]
    consensus_tol: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    alpha_bar: Option<f64>,
    #[arg(long)]
    sample_budget: Option<usize>,
    #[arg(long)]
    sample_seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Baseline sweep grid LO:HI:POINTS.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
}

fn parse_with<T: std::str::FromStr<Err = HarnessError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown family {s:?}"))
}

fn parse_step_rule(s: &str) -> Result<StepRule, String> {
    s.parse().map_err(|e: dean_core::CertificateError| e.to_string())
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, points] = parts.as_slice() else {
        return Err("grid must be LO:HI:POINTS".into());
    };
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(GridSpec { lo: num(lo)?, hi: num(hi)?, points: points.parse().map_err(|e| format!("{points:?}: {e}"))? })
}

impl ProblemArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(p) = &self.graph {
            cfg.graph_file = Some(p.clone());
        }
        if let Some(p) = &self.instance {
            cfg.instance_file = Some(p.clone());
        }
        set(&mut cfg.n_nodes, self.n_nodes);
        set(&mut cfg.avg_degree, self.avg_degree);
        set(&mut cfg.dim, self.dim);
        set(&mut cfg.family, self.family);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.logistic_preset, self.logistic_preset);
        if self.feature_mean.is_some() {
            cfg.feature_mean = self.feature_mean;
        }
        if self.samples_per_class.is_some() {
            cfg.samples_per_class = self.samples_per_class;
        }
    }
}

impl AlgoArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        set(&mut cfg.algo, self.algo);
        set(&mut cfg.surrogate, self.surrogate);
        if self.alpha.is_some() {
            cfg.alpha = self.alpha;
        }
        if self.alpha_mode.is_some() {
            cfg.alpha_mode = self.alpha_mode;
        }
        if let Some(p) = &self.alpha_file {
            cfg.alpha_file = Some(p.clone());
        }
        set(&mut cfg.max_iters, self.max_iters);
        if self.no_stop {
            cfg.stop = StopRule::Never;
        } else if self.consensus_tol.is_some() || self.grad_tol.is_some() {
            let (c0, g0) = match cfg.stop {
                StopRule::Thresholds { consensus, grad_sum } => (consensus, grad_sum),
                StopRule::Never => (1e-10, 1e-8),
            };
            cfg.stop =
                StopRule::Thresholds { consensus: self.consensus_tol.unwrap_or(c0), grad_sum: self.grad_tol.unwrap_or(g0) };
        }
        set(&mut cfg.alpha_bar, self.alpha_bar);
        set(&mut cfg.sample_budget, self.sample_budget);
        set(&mut cfg.sample_seed, self.sample_seed);
        if self.epsilon.is_some() {
            cfg.epsilon = self.epsilon;
        }
        set(&mut cfg.grid, self.grid);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn in_dir(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Gen { problem, out_dir, graph_out, instance_out } => {
            let cfg = problem.config()?;
            let gp = in_dir(&out_dir, &graph_out);
            let ip = in_dir(&out_dir, &instance_out);
            let setup = experiment::generate(&cfg, &gp, &ip)?;
            println!(
                "wrote {} ({} nodes, {} links) and {}",
                gp.display(),
                setup.inst.node_count(),
                setup.inst.graph().edge_count(),
                ip.display()
            );
        }
        Command::Run { problem, algo, trace, report, no_wall_time } => {
            let mut cfg = problem.config()?;
            algo.apply(&mut cfg);
            let out = experiment::run_experiment(&cfg)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            out.write(&trace, Some(&report), !no_wall_time)?;
            let last = out.trace.last().expect("a run records at least k = 0");
            println!(
                "{} [{}] status {:?} after {} iterations, e = {:e}, V = {:e}",
                out.trace.algo, out.alpha, out.trace.status, last.k, last.e, last.v
            );
            if let Some(e) = out.failure() {
                return Err(e);
            }
        }
        Command::Compare { problem, algo, algos, run_config, out, summary } => {
            let base = problem.config()?;
            let cfgs = if run_config.is_empty() {
                algos
                    .iter()
                    .map(|a| {
                        let mut c = base.clone();
                        algo.apply(&mut c);
                        c.algo = a.parse()?;
                        Ok(c)
                    })
                    .collect::<Result<Vec<_>, HarnessError>>()?
            } else {
                run_config
                    .iter()
                    .map(|p| {
                        let mut c = ExperimentConfig::load(p)?;
                        problem.apply(&mut c);
                        algo.apply(&mut c);
                        Ok(c)
                    })
                    .collect::<Result<Vec<_>, HarnessError>>()?
            };
            let result = experiment::compare(&cfgs, experiment::thread_cap())?;
            experiment::write_atomic(&out, &result.to_csv())?;
            let rows = result.summary();
            if let Some(p) = summary {
                experiment::write_atomic(&p, &serde_json::to_string_pretty(&rows).expect("summary serializes"))?;
            }
            for r in &rows {
                println!("{:<10} alpha {:<28} status {:?}  e(T)/e(0) = {:e}", r.algo, r.alpha, r.status, r.final_ratio);
            }
        }
        Command::Certify { problem, algo, out, verify } => {
            let mut cfg = problem.config()?;
            algo.apply(&mut cfg);
            let report = experiment::certify_experiment(&cfg)?;
            match &out {
                Some(p) => experiment::write_atomic(p, &report.to_json())?,
                None => println!("{}", report.to_json()),
            }
            if let Some(trace) = verify {
                let verdict = experiment::verify_trace_file(&report, &trace)?;
                for w in &verdict.warnings {
                    eprintln!("warning: {w}");
                }
                for c in &verdict.checks {
                    let tag = match c.status {
                        CheckStatus::Pass => "pass",
                        CheckStatus::Fail => "FAIL",
                        CheckStatus::Skipped => "skip",
                    };
                    eprintln!("{tag:>4}  {:<9} {}", c.name, c.detail);
                }
                eprintln!("verdict: {}", if verdict.passed { "pass" } else { "fail" });
                if !verdict.passed {
                    return Err(HarnessError::Failed("trace violates the certificate".into()));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
