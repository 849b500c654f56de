//! Subcommand grammar and dispatch for the `nnlscs` binary.
//!
//! [`dispatch`] never prints; it returns a [`CommandResult`] whose payload
//! the binary writes to stdout. Log lines (the chosen seed, warnings) go to
//! stderr from inside the handlers.

use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use nnlscs::bounds::{nnls_bound, BoundInputs, TauSource, TauVariant};
use nnlscs::certificates::{
    certify_mplus_biased, estimate_smallball, estimate_w, mplus_feasible, sample_complexity, threshold_value,
    DirectionPlan, MPlusCertificate, MPlusStatus, SmallBallEstimate, SmallBallRequest, ThresholdKind, WidthSet,
};
use nnlscs::ensembles::{
    generate_matrix, generate_noise, generate_signal, EnsembleKind, EnsembleSpec, RowModel, SignalKind, SignalSpec,
};
use nnlscs::experiments::{
    emit_plot_data, read_records, run_nmse_experiment, run_width_sweep, width_points_to_csv, write_records,
    ExperimentConfig, WidthSweepConfig,
};
use nnlscs::geometry::best_s_term_error;
use nnlscs::io::{read_matrix_file, read_vector_file, write_matrix, write_vector, CsvHeader};
use nnlscs::solvers::{solve_bpdn, solve_nnls, BpdnAlgorithm, SolveResult, SolverOptions};
use nnlscs::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InvalidInput,
    Infeasible,
    Indeterminate,
    SolverFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::InvalidInput => 2,
            Status::Infeasible => 3,
            Status::Indeterminate | Status::SolverFailure => 4,
        }
    }
}

/// What goes to stdout.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Json(Value),
    /// CSV, SVG or help text, written verbatim.
    Text(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommandResult {
    pub status: Status,
    pub payload: Payload,
    pub exit_code: i32,
}

impl CommandResult {
    fn new(status: Status, payload: Payload) -> Self {
        Self { status, payload, exit_code: status.exit_code() }
    }

    fn json(status: Status, value: Value) -> Self {
        Self::new(status, Payload::Json(value))
    }

    fn error(status: Status, message: impl Into<String>) -> Self {
        let message = message.into();
        Self::json(status, json!({ "status": status, "error": message }))
    }

    /// Payload as it is printed, compact or indented.
    pub fn render(&self, pretty: bool) -> String {
        match &self.payload {
            Payload::Text(t) => t.clone(),
            Payload::Json(v) => {
                let s = if pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) };
                s.expect("JSON values always serialize") + "\n"
            }
        }
    }
}

fn status_of(e: &Error) -> Status {
    match e {
        Error::Infeasible(_) | Error::Inapplicable(_) => Status::Infeasible,
        Error::Indeterminate(_) => Status::Indeterminate,
        Error::SolverFailure(_) => Status::SolverFailure,
        _ => Status::InvalidInput,
    }
}

impl From<Error> for CommandResult {
    fn from(e: Error) -> Self {
        CommandResult::error(status_of(&e), e.to_string())
    }
}

type Outcome = std::result::Result<CommandResult, Error>;

#[derive(Parser, Debug)]
#[command(name = "nnlscs", version, about = "Sparse non-negative recovery from biased measurements")]
pub struct Cli {
    /// Master seed. When omitted, `experiment nmse` uses the config's seed and
    /// other seeded commands draw a random one and log it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Indent JSON output.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a matrix, signal or noise vector as CSV.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Solve a recovery problem read from CSV.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Positive-orthant certificates.
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Monte Carlo width and small-ball estimates.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Sample-complexity threshold.
    Threshold(ThresholdArgs),
    /// Error bound for NNLS.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// NMSE and width studies.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Aggregate trial records into CSV or SVG.
    Plot(PlotArgs),
}

#[derive(Subcommand, Debug)]
pub enum GenerateCmd {
    Matrix {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value = "gaussian")]
        kind: EnsembleKind,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Signal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value = "binary")]
        kind: SignalKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Noise {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        variance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
pub struct SolveInput {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum SolveCmd {
    Nnls(SolveInput),
    Bpdn {
        #[command(flatten)]
        input: SolveInput,
        /// Residual budget.
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value = "homotopy")]
        algorithm: BpdnAlgorithm,
    },
}

#[derive(Subcommand, Debug)]
pub enum CertifyCmd {
    /// Decide whether some t has Aᵀt > 0. With --mu, check the biased witness instead.
    Mplus {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

#[derive(clap::Args, Debug)]
pub struct EnsembleArgs {
    #[arg(long, default_value = "gaussian")]
    kind: EnsembleKind,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, value_parser = parse_model, default_value = "biased")]
    model: RowModel,
}

#[derive(Subcommand, Debug)]
pub enum EstimateCmd {
    Width {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// Estimate over the cone with this ρ instead of the sparse ball.
        #[arg(long)]
        rho: Option<f64>,
        /// `lo:hi:steps`; emits CSV `mu,w_hat,std_err`.
        #[arg(long)]
        mu_sweep: Option<String>,
    },
    Smallball {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0.25)]
        xi: f64,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 2000)]
        q_draws: usize,
        #[arg(long, default_value_t = 200)]
        w_trials: usize,
    },
}

#[derive(clap::Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long, default_value = "debiased")]
    kind: ThresholdKind,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
}

#[derive(Subcommand, Debug)]
pub enum BoundCmd {
    /// Assemble the inputs from flags and JSON/CSV files, or read them whole with --inputs.
    Evaluate(BoundArgs),
}

#[derive(clap::Args, Debug)]
pub struct BoundArgs {
    /// JSON document with every field of the bound inputs.
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Output of `certify mplus --mu`.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Output of `estimate smallball`; τ is the reciprocal of its lower bound.
    #[arg(long)]
    smallball: Option<PathBuf>,
    /// Signal CSV, for σ_s(x₀)₁.
    #[arg(long)]
    signal: Option<PathBuf>,
    /// Noise CSV, for ‖e‖₂.
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    w_inv_norm: Option<f64>,
    #[arg(long)]
    t_norm: Option<f64>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long)]
    sigma_s1: Option<f64>,
    #[arg(long)]
    noise_norm: Option<f64>,
    /// Use ‖t‖₂ / s^{1−1/q} in place of ‖t‖₂.
    #[arg(long)]
    scaled: bool,
}

#[derive(Subcommand, Debug)]
pub enum ExperimentCmd {
    Nmse {
        #[arg(long)]
        config: PathBuf,
        /// Trial records CSV; overrides `output_path` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    WidthSweep {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        n: usize,
        /// `lo:hi:steps`
        #[arg(long)]
        mu: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value = "gaussian")]
        kind: EnsembleKind,
        #[arg(long, value_parser = parse_model, default_value = "biased")]
        model: RowModel,
    },
}

#[derive(clap::Args, Debug)]
pub struct PlotArgs {
    /// Trial records CSV.
    #[arg(long)]
    input: PathBuf,
    /// Destination; `.svg` renders the figure, anything else gets the aggregate CSV.
    #[arg(long)]
    out: PathBuf,
}

fn parse_model(s: &str) -> std::result::Result<RowModel, String> {
    match s {
        "biased" => Ok(RowModel::Biased),
        "debiased" => Ok(RowModel::Debiased),
        other => Err(format!("unknown row model `{other}` (biased|debiased)")),
    }
}

/// Parses `lo:hi:steps`.
pub fn parse_grid(s: &str) -> nnlscs::Result<(f64, f64, usize)> {
    let bad = || Error::InvalidParameter(format!("expected lo:hi:steps, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(bad());
    };
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
        steps.trim().parse().map_err(|_| bad())?,
    ))
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => return usage_error(e),
    };
    run(cli.command, cli.seed).unwrap_or_else(CommandResult::from)
}

/// The `--seed` value, or a fresh random seed that is logged for replay.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("nnlscs: no --seed given, using seed {s}");
        s
    })
}

fn usage_error(e: clap::Error) -> CommandResult {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            CommandResult::new(Status::Ok, Payload::Text(e.render().to_string()))
        }
        ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let grammar = Cli::command().render_long_help().to_string();
            CommandResult::error(Status::InvalidInput, format!("{}\n{}", e.render(), grammar))
        }
        _ => CommandResult::error(Status::InvalidInput, e.render().to_string()),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("domain types serialize to JSON")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> nnlscs::Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))
}

fn run(command: Command, seed: Option<u64>) -> Outcome {
    match command {
        Command::Generate(g) => generate(g, resolve_seed(seed)),
        Command::Solve(s) => solve(s),
        Command::Certify(CertifyCmd::Mplus { matrix, mu, tolerance }) => certify(&matrix, mu, tolerance),
        Command::Estimate(e) => estimate(e, resolve_seed(seed)),
        Command::Threshold(t) => threshold(t),
        Command::Bound(BoundCmd::Evaluate(b)) => bound(b),
        Command::Experiment(e) => experiment(e, seed),
        Command::Plot(p) => plot(p),
    }
}

fn emit_csv(out: Option<PathBuf>, write: impl FnOnce(&mut Vec<u8>) -> nnlscs::Result<()>, summary: Value) -> Outcome {
    let mut buf = Vec::new();
    write(&mut buf)?;
    match out {
        Some(path) => {
            std::fs::write(&path, &buf)?;
            let mut v = summary;
            v["path"] = json!(path);
            Ok(CommandResult::json(Status::Ok, v))
        }
        None => {
            let text = String::from_utf8(buf).map_err(|e| Error::InvalidData(e.to_string()))?;
            Ok(CommandResult::new(Status::Ok, Payload::Text(text)))
        }
    }
}

fn generate(cmd: GenerateCmd, seed: u64) -> Outcome {
    match cmd {
        GenerateCmd::Matrix { m, n, mu, kind, out } => {
            let spec = EnsembleSpec::new(kind, mu, m, n, seed);
            let a = generate_matrix(&spec)?;
            let header = CsvHeader::from_spec(&spec);
            emit_csv(out, |w| write_matrix(w, &a, &header), json!({ "rows": m, "cols": n, "seed": seed }))
        }
        GenerateCmd::Signal { n, s, kind, out } => {
            let x = generate_signal(&SignalSpec { kind, n, s, seed })?;
            let header = CsvHeader { kind: Some(kind.to_string()), seed: Some(seed), ..CsvHeader::plain(n, 1) };
            emit_csv(out, |w| write_vector(w, &x, &header), json!({ "rows": n, "cols": 1, "seed": seed }))
        }
        GenerateCmd::Noise { m, variance, out } => {
            let e = generate_noise(m, variance, seed)?;
            let header = CsvHeader { kind: Some("noise".into()), seed: Some(seed), ..CsvHeader::plain(m, 1) };
            emit_csv(out, |w| write_vector(w, &e, &header), json!({ "rows": m, "cols": 1, "seed": seed }))
        }
    }
}

fn solved(r: SolveResult) -> CommandResult {
    let status = if r.converged { Status::Ok } else { Status::SolverFailure };
    if !r.converged {
        eprintln!("nnlscs: solver stopped before convergence (kkt_violation = {:e})", r.kkt_violation);
    }
    CommandResult::json(status, to_json(&r))
}

fn solve(cmd: SolveCmd) -> Outcome {
    let load = |input: &SolveInput| -> nnlscs::Result<_> {
        let (a, _) = read_matrix_file(&input.matrix)?;
        let (y, _) = read_vector_file(&input.y)?;
        let opts = SolverOptions {
            tolerance: input.tolerance,
            max_iterations: input.max_iterations,
            ..SolverOptions::default()
        };
        Ok((a, y, opts))
    };
    match cmd {
        SolveCmd::Nnls(input) => {
            let (a, y, opts) = load(&input)?;
            Ok(solved(solve_nnls(&a, &y, &opts)?))
        }
        SolveCmd::Bpdn { input, eta, algorithm } => {
            let (a, y, opts) = load(&input)?;
            let opts = SolverOptions { bpdn_algorithm: algorithm, ..opts };
            Ok(solved(solve_bpdn(&a, &y, eta, &opts)?))
        }
    }
}

fn certify(matrix: &Path, mu: Option<f64>, tolerance: f64) -> Outcome {
    let (a, _) = read_matrix_file(matrix)?;
    if let Some(mu) = mu {
        let cert = certify_mplus_biased(&a, mu)?;
        // A failed witness is not a proof of infeasibility.
        let status = if cert.valid { Status::Ok } else { Status::Indeterminate };
        return Ok(CommandResult::json(status, to_json(&cert)));
    }
    let r = mplus_feasible(&a, tolerance)?;
    let status = match r.status {
        MPlusStatus::Feasible => Status::Ok,
        MPlusStatus::Infeasible => Status::Infeasible,
        MPlusStatus::Indeterminate => Status::Indeterminate,
    };
    Ok(CommandResult::json(status, to_json(&r)))
}

fn estimate(cmd: EstimateCmd, seed: u64) -> Outcome {
    match cmd {
        EstimateCmd::Width { ens, trials, rho, mu_sweep } => {
            if let Some(grid) = mu_sweep {
                if rho.is_some() {
                    return Err(Error::InvalidParameter("--mu-sweep estimates the sparse ball; drop --rho".into()));
                }
                let (mu_lo, mu_hi, steps) = parse_grid(&grid)?;
                let cfg = WidthSweepConfig {
                    kind: ens.kind,
                    n: ens.n,
                    s: ens.s,
                    m: ens.m,
                    q: ens.q,
                    model: ens.model,
                    mu_lo,
                    mu_hi,
                    steps,
                    trials,
                    seed,
                };
                let pts = run_width_sweep(&cfg)?;
                return Ok(CommandResult::new(Status::Ok, Payload::Text(width_points_to_csv(&pts)?)));
            }
            let spec = EnsembleSpec::new(ens.kind, ens.mu, ens.m, ens.n, seed);
            let set = rho.map_or(WidthSet::SparseBall, |rho| WidthSet::Cone { rho });
            let w = estimate_w(&spec, ens.model, ens.s, ens.q, set, trials)?;
            Ok(CommandResult::json(Status::Ok, to_json(&w)))
        }
        EstimateCmd::Smallball { ens, rho, xi, t, q_draws, w_trials } => {
            let req = SmallBallRequest {
                spec: EnsembleSpec::new(ens.kind, ens.mu, ens.m, ens.n, seed),
                model: ens.model,
                s: ens.s,
                q: ens.q,
                rho,
                xi,
                t_param: t,
                plan: DirectionPlan::new(ens.s, ens.q, rho),
                q_draws,
                w_trials,
            };
            let est = estimate_smallball(&req)?;
            Ok(CommandResult::json(Status::Ok, to_json(&est)))
        }
    }
}

fn threshold(t: ThresholdArgs) -> Outcome {
    let value = threshold_value(t.kind, t.s, t.n, t.q, t.rho, t.mu)?;
    let m = sample_complexity(t.kind, t.s, t.n, t.q, t.rho, t.mu)?;
    Ok(CommandResult::json(
        Status::Ok,
        json!({ "kind": t.kind, "s": t.s, "n": t.n, "q": t.q, "rho": t.rho, "mu": t.mu, "value": value, "m": m }),
    ))
}

fn required<T>(v: Option<T>, what: &str) -> nnlscs::Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("missing {what}")))
}

fn bound_inputs(b: &BoundArgs) -> nnlscs::Result<BoundInputs> {
    if let Some(path) = &b.inputs {
        return read_json(path);
    }
    let cert: Option<MPlusCertificate> = b.certificate.as_deref().map(read_json).transpose()?;
    if let Some(c) = &cert {
        if !c.valid {
            return Err(Error::Inapplicable("the certificate is not valid, so κ is undefined".into()));
        }
    }
    let kappa = b.kappa.or(cert.as_ref().and_then(|c| c.kappa_upper));
    let w_inv = b.w_inv_norm.or(cert.as_ref().and_then(|c| c.w_inv_norm()));
    let t_norm = b.t_norm.or(cert.as_ref().map(|c| c.t_norm));

    let (tau, tau_source) = match (b.tau, &b.smallball) {
        (Some(tau), _) => (tau, TauSource::Given),
        (None, Some(path)) => {
            let est: SmallBallEstimate = read_json(path)?;
            if !(est.lower_bound > 0.0) {
                return Err(Error::Inapplicable(format!(
                    "small-ball lower bound is {} so no τ > 0 is certified",
                    est.lower_bound
                )));
            }
            (1.0 / est.lower_bound, TauSource::Certified)
        }
        (None, None) => return Err(Error::InvalidParameter("missing --tau or --smallball".into())),
    };
    let s = required(b.s, "--s")?;
    let sigma_s1 = match (b.sigma_s1, &b.signal) {
        (Some(v), _) => v,
        (None, Some(path)) => best_s_term_error(read_vector_file(path)?.0.as_slice(), s, 1.0)?,
        (None, None) => return Err(Error::InvalidParameter("missing --sigma-s1 or --signal".into())),
    };
    let noise_norm = match (b.noise_norm, &b.noise) {
        (Some(v), _) => v,
        (None, Some(path)) => read_vector_file(path)?.0.norm(),
        (None, None) => return Err(Error::InvalidParameter("missing --noise-norm or --noise".into())),
    };
    Ok(BoundInputs {
        rho: required(b.rho, "--rho")?,
        tau,
        kappa: required(kappa, "--kappa or --certificate")?,
        w_inv_norm: required(w_inv, "--w-inv-norm or --certificate")?,
        t_norm: required(t_norm, "--t-norm or --certificate")?,
        s,
        p: b.p,
        q: b.q,
        sigma_s1,
        noise_norm,
        variant: if b.scaled { TauVariant::Scaled } else { TauVariant::Theorem },
        tau_source,
    })
}

fn bound(b: BoundArgs) -> Outcome {
    let inputs = bound_inputs(&b)?;
    let report = nnls_bound(&inputs)?;
    Ok(CommandResult::json(Status::Ok, to_json(&report)))
}

fn experiment(cmd: ExperimentCmd, seed: Option<u64>) -> Outcome {
    match cmd {
        ExperimentCmd::Nmse { config, out } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            // The config already names a seed; --seed only overrides it.
            let seed = seed.unwrap_or(cfg.master_seed);
            cfg.master_seed = seed;
            let result = run_nmse_experiment(&cfg, &SolverOptions::default())?;
            if !result.failures.is_empty() {
                eprintln!("nnlscs: {} trial(s) failed", result.failures.len());
            }
            if let Some(path) = out.or(cfg.output_path.clone()) {
                write_records(std::fs::File::create(&path)?, &result.records)?;
                eprintln!("nnlscs: wrote {} records to {}", result.records.len(), path.display());
            }
            Ok(CommandResult::json(
                Status::Ok,
                json!({
                    "master_seed": seed,
                    "records": result.records.len(),
                    "failures": result.failures,
                    "aggregates": result.aggregates,
                }),
            ))
        }
        ExperimentCmd::WidthSweep { s, n, mu, trials, m, q, kind, model } => {
            let (mu_lo, mu_hi, steps) = parse_grid(&mu)?;
            let seed = resolve_seed(seed);
            let cfg = WidthSweepConfig { kind, n, s, m, q, model, mu_lo, mu_hi, steps, trials, seed };
            let pts = run_width_sweep(&cfg)?;
            Ok(CommandResult::new(Status::Ok, Payload::Text(width_points_to_csv(&pts)?)))
        }
    }
}

fn plot(p: PlotArgs) -> Outcome {
    let records = read_records(std::fs::File::open(&p.input)?)?;
    let svg = p.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    let data = emit_plot_data(&records, svg)?;
    let body = if svg { data.svg.as_deref().unwrap_or_default() } else { &data.csv };
    std::fs::write(&p.out, body)?;
    Ok(CommandResult::json(
        Status::Ok,
        json!({ "path": p.out, "format": if svg { "svg" } else { "csv" }, "rows": data.rows }),
    ))
}

/// Caps the rayon pool from `NNLSCS_THREADS` (unset or 0 leaves it automatic).
pub fn configure_threads() {
    let Ok(raw) = std::env::var("NNLSCS_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("nnlscs: could not size the thread pool: {e}");
            }
        }
        Err(_) => eprintln!("nnlscs: ignoring NNLSCS_THREADS={raw:?}, expected a non-negative integer"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_status() {
        for s in [Status::Ok, Status::InvalidInput, Status::Infeasible, Status::Indeterminate, Status::SolverFailure] {
            assert_eq!(s.exit_code() == 0, s == Status::Ok);
        }
        assert_eq!(Status::Infeasible.exit_code(), 3);
        assert_eq!(Status::SolverFailure.exit_code(), 4);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:30:31").unwrap(), (0.0, 30.0, 31));
        assert!(parse_grid("0:30").is_err());
        assert!(parse_grid("a:1:2").is_err());
    }

    #[test]
    fn unknown_subcommand_dumps_grammar() {
        let r = dispatch(["nnlscs", "frobnicate"]);
        assert_eq!(r.exit_code, 2);
        let Payload::Json(v) = &r.payload else { panic!("expected JSON") };
        let msg = v["error"].as_str().unwrap();
        assert!(msg.contains("threshold") && msg.contains("experiment"));
    }

    #[test]
    fn grammar_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn threshold_needs_no_files() {
        let r = dispatch(["nnlscs", "--seed", "1", "threshold", "--s", "1", "--n", "1", "--rho", "1"]);
        assert_eq!(r.status, Status::Ok);
        let Payload::Json(v) = &r.payload else { panic!() };
        assert_eq!(v["m"], 2_654_209);
    }
}
