//! Command-line interface definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "crowdcorr",
    version,
    about = "Crowd-worker skill estimation and label inference from sparse label data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Analyze the worker-interaction graph: components, bipartiteness,
    /// spectra, and the identifiability verdict.
    Check(CheckArgs),
    /// Estimate worker skills (correlations -> solver -> sign recovery).
    Estimate(EstimateArgs),
    /// Predict task labels from an observation CSV and a skills JSON.
    Infer(InferArgs),
    /// Generate a synthetic instance (observations, truth, true skills).
    Synth(SynthArgs),
    /// Score predictions against ground truth; optionally score skills.
    Eval(EvalArgs),
    /// Run a multi-seed experiment described by a JSON spec.
    Sweep(SweepArgs),
}

#[derive(Args)]
pub struct CheckArgs {
    /// Observation CSV (worker_id,task_id,label).
    #[arg(long)]
    pub input: PathBuf,
    /// Number of label classes.
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Label encoding: pm1 (default for 2 classes) or indexed.
    #[arg(long)]
    pub labels: Option<String>,
    /// Failure probability for the Hoeffding radius.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SolverArgs {
    /// Solver: pgd or expgrad.
    #[arg(long, default_value = "pgd")]
    pub method: String,
    /// PGD step size (default: Lipschitz-scaled from the graph).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Exponentiated-gradient step size (default: 1/(2 sqrt(W) ||N||_2 K^2)).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Lower cube bound kappa.
    #[arg(long, default_value_t = 0.1)]
    pub kappa: f64,
    /// Upper cube bound K.
    #[arg(long, default_value_t = 1.0)]
    pub cap_k: f64,
    /// Boundary-projection parameter tau.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Gradient-norm stop (default: 1e-8 * (1 + ||N||_inf)).
    #[arg(long)]
    pub tol_grad: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_step: f64,
    /// Seed echoed into run metadata.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignPolicyArg {
    Strict,
    Majority,
    Force,
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Observation CSV (worker_id,task_id,label).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long)]
    pub labels: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Spammer threshold delta; omit to keep all edges.
    #[arg(long)]
    pub spam_delta: Option<f64>,
    /// Drop edges backed by fewer shared tasks than this.
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Estimate per component even when the graph is not identifiable,
    /// and push signs through inconsistencies.
    #[arg(long)]
    pub force: bool,
    /// Non-tree sign-check policy.
    #[arg(long, value_enum, default_value_t = SignPolicyArg::Majority)]
    pub sign_policy: SignPolicyArg,
    /// Failure probability for the reported Hoeffding radius.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Write the skills JSON here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct InferArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Skills JSON produced by `estimate` (or `synth` for oracle runs).
    #[arg(long)]
    pub skills: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long)]
    pub labels: Option<String>,
    /// Also emit the majority-vote baseline per task.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Graph family: clique, star3, ring, grid, er:<p>.
    #[arg(long)]
    pub graph: String,
    #[arg(long)]
    pub workers: usize,
    #[arg(long)]
    pub tasks: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Skill distribution: grid:lo,hi | beta:a,b | const:c | explicit:v1,v2,...
    #[arg(long, default_value = "grid:-0.3,0.8")]
    pub skill_dist: String,
    /// Task allocation: edges (round-robin pairs) or all (every worker).
    #[arg(long, default_value = "edges")]
    pub assignment: String,
    /// Sparsify after generation until every worker has at most this many
    /// co-workers (dropping single-label tasks and empty workers).
    #[arg(long)]
    pub max_degree: Option<usize>,
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving observations.csv, truth.csv, skills.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Predictions JSON from `infer`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth CSV (task_id,label).
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long)]
    pub labels: Option<String>,
    /// Estimated skills JSON, scored against --true-skills.
    #[arg(long)]
    pub est_skills: Option<PathBuf>,
    /// Ground-truth skills JSON.
    #[arg(long)]
    pub true_skills: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Append a tidy x,mean,std,series row here.
    #[arg(long)]
    pub plot_csv: Option<PathBuf>,
    /// x value for the plot row (e.g. task count or max degree).
    #[arg(long)]
    pub x: Option<f64>,
    /// Series name for the plot row.
    #[arg(long)]
    pub series: Option<String>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// JSON experiment spec.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory for the tidy CSV and the meta JSON.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads (default: CROWDCORR_THREADS or all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}
