//! Command-line harness around the `shallow_relu` library.
//!
//! Every command reads its inputs, does its work single-threaded (except exact training,
//! which may use `--threads`), prints a short summary and optionally writes a JSON
//! [`RunReport`]. All randomness comes from one generator seeded by `--seed`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use shallow_relu::exact::{train_exact, Strategy, TrainConfig};
use shallow_relu::geometry::{cover_count, enumerate_dichotomies};
use shallow_relu::interp::{fit_overparam_with, verify_interpolation, InterpConfig};
use shallow_relu::io::{self, AnyNet, Header};
use shallow_relu::reduce::{
    build_gadget, check_hard_sort, check_separability, extract_separability_witness, gadget_dataset,
    net_from_hard_sort, separable_exhaustive, HardSortWitness, SeparabilityInstance, TOL_STRICT, ZERO_LOSS_TOL,
};
use shallow_relu::{max_abs_error, squared_loss, synth, Dataset, Error, Network, Sign, TwoReluNet};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DECISION_FALSE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Default tolerance of the exact trainer and the pipeline.
pub const TRAIN_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
            _ => EXIT_ERROR,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "shallow-relu", version, about = "Exact training, interpolation and reduction tools for shallow ReLU networks")]
pub struct Cli {
    /// Seed of the run's random generator.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Numerical tolerance. Defaults: 1e-8 for training and the pipeline, 1e-9 for checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for exact training.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Write the run report as JSON to this path, or to standard output for `-`.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Write a header row `x_1,...,x_d,y` into CSV outputs. Inputs are auto-detected.
    #[arg(long, global = true)]
    pub header: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance or dataset.
    Generate(GenerateArgs),
    /// Build the gadget dataset of a separability instance.
    Reduce {
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a 2-ReLU network to global optimality.
    TrainExact(TrainArgs),
    /// Interpolate a dataset with a single-hidden-layer ReLU network.
    FitNrelu {
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a hard-sort witness against the points labeled 1 in a dataset.
    CheckHardsort { dataset: PathBuf, witness: PathBuf },
    /// Read two separating planes off a zero-loss network on a reduced instance.
    ExtractWitness {
        net: PathBuf,
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count the affine dichotomies of a dataset's points.
    EnumDichotomies {
        dataset: PathBuf,
        /// Also print the sign matrix, one dichotomy per row.
        #[arg(long)]
        signs: bool,
    },
    /// Reduce, decide, extract and cross-check against exhaustive search.
    Pipeline(PipelineArgs),
    /// Check that a network fits a dataset pointwise within the tolerance.
    Verify { net: PathBuf, dataset: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Separability instance with a planted pair of planes (JSON).
    Separable,
    /// Uniform points with fair 0/1 labels (CSV).
    RandomLabels,
    /// The thirteen bare gadget points in the plane (CSV).
    GadgetOnly,
    /// Points labeled by a random 2-ReLU network (CSV).
    PlantedNet,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub kind: Kind,
    /// Number of points.
    #[arg(long = "n", default_value_t = 10)]
    pub n: usize,
    /// Input dimension.
    #[arg(long = "d", default_value_t = 2)]
    pub d: usize,
    /// Minimum distance of separable points from the planted planes.
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Planted planes, for `separable`.
    #[arg(long)]
    pub witness: Option<PathBuf>,
    /// Planted network, for `planted-net`.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// The zero-dimensional instance whose reduction is the gadget, for `gadget-only`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    BranchAndBound,
    Exhaustive,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::BranchAndBound => Strategy::BranchAndBound,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    /// Stop at the first network with loss within the tolerance; exit 2 if none exists.
    #[arg(long)]
    pub decision: bool,
    /// Cap on convex subproblems; exceeding it exits 3.
    #[arg(long, default_value_t = TrainConfig::default().budget)]
    pub budget: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::BranchAndBound)]
    pub strategy: StrategyArg,
    /// Largest input dimension accepted.
    #[arg(long, default_value_t = TrainConfig::default().max_dim)]
    pub max_dim: usize,
    /// Permute the enumeration order with the run seed.
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().budget)]
    pub budget: u64,
    #[arg(long, default_value_t = TrainConfig::default().max_dim)]
    pub max_dim: usize,
    /// Run exhaustive search only when the instance has at most this many dichotomies.
    #[arg(long, default_value_t = 10_000)]
    pub exhaustive_limit: u128,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Reduce { .. } => "reduce",
            Command::TrainExact(_) => "train-exact",
            Command::FitNrelu { .. } => "fit-nrelu",
            Command::CheckHardsort { .. } => "check-hardsort",
            Command::ExtractWitness { .. } => "extract-witness",
            Command::EnumDichotomies { .. } => "enum-dichotomies",
            Command::Pipeline(_) => "pipeline",
            Command::Verify { .. } => "verify",
        }
    }

    /// Files the command reads, in argument order.
    pub fn inputs(&self) -> Vec<&Path> {
        match self {
            Command::Generate(_) => vec![],
            Command::Reduce { instance, .. } => vec![instance],
            Command::TrainExact(a) => vec![&a.dataset],
            Command::FitNrelu { dataset, .. } => vec![dataset],
            Command::CheckHardsort { dataset, witness } => vec![dataset, witness],
            Command::ExtractWitness { net, instance, .. } => vec![net, instance],
            Command::EnumDichotomies { dataset, .. } => vec![dataset],
            Command::Pipeline(a) => vec![&a.instance],
            Command::Verify { net, dataset } => vec![net, dataset],
        }
    }

    fn default_tol(&self) -> f64 {
        match self {
            Command::TrainExact(_) | Command::Pipeline(_) => TRAIN_TOL,
            Command::CheckHardsort { .. } => TOL_STRICT,
            _ => ZERO_LOSS_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    /// Seconds.
    pub wall_time: f64,
    pub outcome: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    DecisionFalse,
    /// The run finished but its cross-checks disagree.
    Inconsistent,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => EXIT_SUCCESS,
            Status::DecisionFalse => EXIT_DECISION_FALSE,
            Status::Inconsistent => EXIT_ERROR,
        }
    }
}

/// What a command produced: the report payload, an exit status and lines for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub outcome: Value,
    pub status: Status,
    pub summary: Vec<String>,
}

impl Run {
    fn new(outcome: Value, status: Status, summary: impl Into<String>) -> Run {
        Run {
            outcome,
            status,
            summary: vec![summary.into()],
        }
    }

    fn decided(outcome: Value, holds: bool, summary: impl Into<String>) -> Run {
        let status = if holds { Status::Success } else { Status::DecisionFalse };
        Run::new(outcome, status, summary)
    }
}

/// Run settings shared by every command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Context {
    pub seed: u64,
    pub tol: f64,
    pub threads: usize,
    pub header: bool,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digests(paths: &[&Path]) -> CliResult<Vec<InputDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

impl Cli {
    pub fn context(&self) -> CliResult<Context> {
        let tol = self.tol.unwrap_or_else(|| self.command.default_tol());
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(CliError::Usage(format!("--tol must be finite and nonnegative, got {tol}")));
        }
        if self.threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(Context {
            seed: self.seed,
            tol,
            threads: self.threads,
            header: self.header,
        })
    }
}

/// Runs the command and returns the report, the exit code and the lines for stdout.
/// Failures yield a report whose outcome is `{"error": message}`.
pub fn run(cli: &Cli) -> (RunReport, i32, Vec<String>) {
    let start = Instant::now();
    let cmd = &cli.command;
    let (inputs, result) = match digests(&cmd.inputs()) {
        Ok(inputs) => (inputs, cli.context().and_then(|ctx| dispatch(cmd, &ctx))),
        Err(e) => (vec![], Err(e)),
    };
    let (outcome, code, lines) = match result {
        Ok(r) => (r.outcome, r.status.exit_code(), r.summary),
        Err(e) => {
            let msg = e.to_string();
            (json!({ "error": msg }), e.exit_code(), vec![format!("error: {msg}")])
        }
    };
    let report = RunReport {
        command: cmd.name().to_string(),
        inputs,
        seed: cli.seed,
        wall_time: start.elapsed().as_secs_f64(),
        outcome,
    };
    (report, code, lines)
}

/// Full command-line behavior: run, print, write the report. Returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    let (report, mut code, lines) = run(cli);
    let mut out = std::io::stdout().lock();
    for line in &lines {
        if code == EXIT_ERROR || code == EXIT_BUDGET {
            eprintln!("{line}");
        } else {
            let _ = writeln!(out, "{line}");
        }
    }
    if let Some(path) = &cli.report {
        let written = if path.as_os_str() == "-" {
            io::to_json_string(&report).map(|s| {
                let _ = writeln!(out, "{s}");
            })
        } else {
            io::save_json(path, &report)
        };
        if let Err(e) = written {
            eprintln!("error: cannot write report: {e}");
            code = EXIT_ERROR;
        }
    }
    code
}

pub fn dispatch(cmd: &Command, ctx: &Context) -> CliResult<Run> {
    match cmd {
        Command::Generate(a) => generate(a, ctx),
        Command::Reduce { instance, out } => reduce(instance, out, ctx),
        Command::TrainExact(a) => train(a, ctx),
        Command::FitNrelu { dataset, out } => fit_nrelu(dataset, out.as_deref(), ctx),
        Command::CheckHardsort { dataset, witness } => check_hardsort(dataset, witness, ctx),
        Command::ExtractWitness { net, instance, out } => extract_witness(net, instance, out.as_deref()),
        Command::EnumDichotomies { dataset, signs } => enum_dichotomies(dataset, *signs),
        Command::Pipeline(a) => pipeline(a, ctx),
        Command::Verify { net, dataset } => verify(net, dataset, ctx),
    }
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    Ok(io::load_dataset(path, Header::Auto)?)
}

fn load_instance(path: &Path) -> CliResult<SeparabilityInstance> {
    let inst: SeparabilityInstance = io::load_json(path)?;
    inst.validate()?;
    Ok(inst)
}

fn generate(a: &GenerateArgs, ctx: &Context) -> CliResult<Run> {
    if !(0.0..=0.25).contains(&a.margin) {
        return Err(CliError::Usage(format!("--margin must lie in [0, 0.25], got {}", a.margin)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let run = match a.kind {
        Kind::Separable => {
            let (inst, w) = synth::planted_separable(&mut rng, a.n, a.d, a.margin)?;
            io::save_json(&a.out, &inst)?;
            if let Some(p) = &a.witness {
                io::save_json(p, &w)?;
            }
            let valid = check_separability(&inst, &w);
            Run::new(
                json!({
                    "kind": "separable", "n": a.n, "d": a.d,
                    "s1": inst.s1.len(), "s0": inst.s0.len(),
                    "planted_witness_valid": valid,
                }),
                if valid { Status::Success } else { Status::Inconsistent },
                format!("separable instance: {} points in d={}, |S1|={}", a.n, a.d, inst.s1.len()),
            )
        }
        Kind::RandomLabels => {
            let data = synth::random_labels(&mut rng, a.n, a.d)?;
            io::save_dataset(&a.out, &data, ctx.header)?;
            let ones = data.s1().len();
            Run::new(
                json!({ "kind": "random-labels", "n": a.n, "d": a.d, "ones": ones }),
                Status::Success,
                format!("random labels: {} points in d={}, {ones} ones", a.n, a.d),
            )
        }
        Kind::GadgetOnly => {
            let data = gadget_dataset();
            io::save_dataset(&a.out, &data, ctx.header)?;
            if let Some(p) = &a.instance {
                let inst = SeparabilityInstance::new(vec![vec![]], vec![0], vec![])?;
                io::save_json(p, &inst)?;
            }
            Run::new(
                json!({ "kind": "gadget-only", "n": data.len(), "d": data.dim(), "ones": data.s1().len() }),
                Status::Success,
                format!("gadget: {} points in d={}", data.len(), data.dim()),
            )
        }
        Kind::PlantedNet => {
            let (data, net) = synth::planted_net(&mut rng, a.n, a.d)?;
            io::save_dataset(&a.out, &data, ctx.header)?;
            if let Some(p) = &a.net {
                io::save_json(p, &net)?;
            }
            let loss = squared_loss(&net, &data)?;
            Run::new(
                json!({ "kind": "planted-net", "n": a.n, "d": a.d, "planted_loss": loss, "net": net }),
                Status::Success,
                format!("planted net: {} points in d={}", a.n, a.d),
            )
        }
    };
    Ok(run)
}

fn reduce(instance: &Path, out: &Path, ctx: &Context) -> CliResult<Run> {
    let inst = load_instance(instance)?;
    let norm = inst.normalized();
    let data = build_gadget(&norm)?;
    io::save_dataset(out, &data, ctx.header)?;
    Ok(Run::new(
        json!({
            "n": inst.len(), "d": inst.dim(),
            "rows": data.len(), "dim": data.dim(),
            "shift": norm.shift,
        }),
        Status::Success,
        format!("reduced {} points in d={} to {} points in d={}", inst.len(), inst.dim(), data.len(), data.dim()),
    ))
}

fn train(a: &TrainArgs, ctx: &Context) -> CliResult<Run> {
    let data = load_dataset(&a.dataset)?;
    let cfg = TrainConfig {
        tol: ctx.tol,
        decision: a.decision,
        budget: a.budget,
        max_dim: a.max_dim,
        strategy: a.strategy.into(),
        order_seed: a.shuffle.then_some(ctx.seed),
        threads: ctx.threads,
    };
    let r = train_exact(&data, &cfg)?;
    let max_error = max_abs_error(&r.net, &data)?;
    if let Some(p) = &a.out {
        io::save_json(p, &r.net)?;
    }
    let fits = r.loss <= ctx.tol;
    let outcome = json!({
        "loss": r.loss,
        "max_error": max_error,
        "certificate": r.certificate,
        "decision": a.decision.then_some(fits),
        "subproblems": r.subproblems_solved,
        "nodes": r.nodes,
        "qp": r.qp,
        "net": r.net,
    });
    let summary = format!(
        "loss {:e}, certificate {}, {} subproblems",
        r.loss, r.certificate, r.subproblems_solved
    );
    Ok(if a.decision {
        Run::decided(outcome, fits, summary)
    } else {
        Run::new(outcome, Status::Success, summary)
    })
}

fn fit_nrelu(dataset: &Path, out: Option<&Path>, ctx: &Context) -> CliResult<Run> {
    let data = load_dataset(dataset)?;
    let rep = fit_overparam_with(&data, ctx.seed, &InterpConfig::default())?;
    let max_error = max_abs_error(&rep.net, &data)?;
    let verified = verify_interpolation(&rep.net, &data, ctx.tol);
    if let Some(p) = out {
        io::save_json(p, &rep.net)?;
    }
    Ok(Run::decided(
        json!({
            "nodes": rep.net.node_count(),
            "max_error": max_error,
            "attempts": rep.attempts,
            "verified": verified,
        }),
        verified,
        format!("{} hidden nodes, max error {max_error:e}", rep.net.node_count()),
    ))
}

fn check_hardsort(dataset: &Path, witness: &Path, ctx: &Context) -> CliResult<Run> {
    let data = load_dataset(dataset)?;
    data.check_binary()?;
    let w: HardSortWitness = io::load_json(witness)?;
    let points = data.inputs();
    let pi1 = data.s1();
    let valid = check_hard_sort(&points, &pi1, &w, ctx.tol);
    let net_error = match net_from_hard_sort(&w, &points, &pi1) {
        Ok(net) => Some(max_abs_error(&net, &data)?),
        Err(_) => None,
    };
    Ok(Run::decided(
        json!({ "valid": valid, "pi1": pi1.len(), "n": data.len(), "net_max_error": net_error }),
        valid,
        format!("hard-sort witness valid: {valid}"),
    ))
}

fn extract_witness(net: &Path, instance: &Path, out: Option<&Path>) -> CliResult<Run> {
    let net: TwoReluNet = io::load_json(net)?;
    let inst = load_instance(instance)?;
    let w = extract_separability_witness(&net, &inst)?;
    let valid = check_separability(&inst, &w);
    if let Some(p) = out {
        io::save_json(p, &w)?;
    }
    Ok(Run::decided(
        json!({ "valid": valid, "margin": w.normalized().margin(&inst), "witness": w }),
        valid,
        format!("extracted witness valid: {valid}"),
    ))
}

fn sign_row(signs: &[Sign]) -> String {
    signs
        .iter()
        .map(|s| match s {
            Sign::Plus => "1",
            Sign::Minus => "-1",
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn enum_dichotomies(dataset: &Path, signs: bool) -> CliResult<Run> {
    let data = load_dataset(dataset)?;
    let (n, d) = (data.len(), data.dim());
    let found = enumerate_dichotomies(&data.inputs(), d)?;
    let bound = cover_count(n, d);
    let mut run = Run::new(
        json!({
            "n": n, "d": d, "count": found.len(),
            "general_position_count": bound.to_string(),
        }),
        Status::Success,
        found.len().to_string(),
    );
    if signs {
        run.summary.extend(found.iter().map(|dc| sign_row(&dc.signs)));
    }
    Ok(run)
}

fn pipeline(a: &PipelineArgs, ctx: &Context) -> CliResult<Run> {
    let inst = load_instance(&a.instance)?;
    let (n, d) = (inst.len(), inst.dim());
    let data = build_gadget(&inst.normalized())?;
    let cfg = TrainConfig {
        tol: ctx.tol,
        decision: true,
        budget: a.budget,
        max_dim: a.max_dim,
        threads: ctx.threads,
        ..TrainConfig::default()
    };
    let r = train_exact(&data, &cfg)?;
    let decision = r.loss <= ctx.tol;
    let witness = if decision {
        match extract_separability_witness(&r.net, &inst) {
            Ok(w) => Some(w),
            Err(Error::NotZeroLoss { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let witness_valid = witness.as_ref().is_some_and(|w| check_separability(&inst, w));
    let exhaustive = if d == 0 || cover_count(n, d) <= a.exhaustive_limit {
        Some(separable_exhaustive(&inst)?.is_some())
    } else {
        None
    };
    let agree = decision == witness_valid && exhaustive.is_none_or(|e| e == decision);
    let status = match (agree, decision) {
        (false, _) => Status::Inconsistent,
        (true, true) => Status::Success,
        (true, false) => Status::DecisionFalse,
    };
    let show = |b: Option<bool>| b.map_or("skipped".to_string(), |b| b.to_string());
    let summary = format!(
        "decision {decision}, witness valid {witness_valid}, exhaustive separable {}",
        show(exhaustive)
    );
    Ok(Run::new(
        json!({
            "n": n, "d": d,
            "decision": decision,
            "witness_valid": witness_valid,
            "exhaustive_separable": exhaustive,
            "agree": agree,
            "loss": r.loss,
            "subproblems": r.subproblems_solved,
            "witness": witness,
        }),
        status,
        summary,
    ))
}

fn verify(net: &Path, dataset: &Path, ctx: &Context) -> CliResult<Run> {
    let net: AnyNet = io::load_json(net)?;
    net.check_shape()?;
    let data = load_dataset(dataset)?;
    let max_error = max_abs_error(&net, &data)?;
    let loss = squared_loss(&net, &data)?;
    let fits = max_error <= ctx.tol;
    Ok(Run::decided(
        json!({
            "fits": fits, "max_error": max_error, "loss": loss,
            "hidden_nodes": net.node_count(), "input_dim": net.input_dim(),
        }),
        fits,
        format!("max error {max_error:e}, fits {fits}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("shallow-relu").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn global_flags_follow_the_subcommand() {
        let cli = parse(&["train-exact", "d.csv", "--decision", "--seed", "4", "--threads", "2"]);
        assert_eq!(cli.seed, 4);
        assert_eq!(cli.threads, 2);
        assert_eq!(cli.command.name(), "train-exact");
        assert_eq!(cli.context().unwrap().tol, TRAIN_TOL);
    }

    #[test]
    fn tolerance_defaults_depend_on_the_command() {
        assert_eq!(parse(&["check-hardsort", "a", "b"]).context().unwrap().tol, TOL_STRICT);
        assert_eq!(parse(&["verify", "a", "b"]).context().unwrap().tol, ZERO_LOSS_TOL);
        assert_eq!(parse(&["pipeline", "a", "--tol", "1e-6"]).context().unwrap().tol, 1e-6);
        assert!(parse(&["verify", "a", "b", "--tol=-1"]).context().is_err());
        assert!(parse(&["verify", "a", "b", "--threads", "0"]).context().is_err());
    }

    #[test]
    fn kinds_use_kebab_case() {
        let cli = parse(&["generate", "planted-net", "--n", "0", "--out", "x.csv"]);
        match cli.command {
            Command::Generate(a) => {
                assert_eq!(a.kind, Kind::PlantedNet);
                assert_eq!(a.n, 0);
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::BudgetExceeded { count: 6, budget: 5 }).exit_code(), EXIT_BUDGET);
        assert_eq!(CliError::from(Error::EmptyDataset).exit_code(), EXIT_ERROR);
        assert_eq!(Status::DecisionFalse.exit_code(), EXIT_DECISION_FALSE);
        assert_eq!(Status::Inconsistent.exit_code(), EXIT_ERROR);
    }

    #[test]
    fn digest_of_known_bytes() {
        let dir = std::env::temp_dir().join(format!("shallow-relu-digest-{}", std::process::id()));
        fs::write(&dir, b"abc").unwrap();
        let h = sha256_file(&dir).unwrap();
        fs::remove_file(&dir).unwrap();
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn missing_input_is_reported() {
        let cli = parse(&["verify", "/nonexistent/net.json", "/nonexistent/d.csv"]);
        let (report, code, lines) = run(&cli);
        assert_eq!(code, EXIT_ERROR);
        assert!(report.outcome["error"].is_string());
        assert!(lines[0].starts_with("error:"));
    }

    #[test]
    fn sign_rows() {
        assert_eq!(sign_row(&[Sign::Plus, Sign::Minus, Sign::Plus]), "1,-1,1");
    }
}
