use clap::{Args, Parser, Subcommand, ValueEnum};
use robustflow::flow::{
    eval_latency, load_balance_from_throughput, solve_latency_linear, solve_throughput, FlowError,
    LatencyConfig, LatencyKind, ThroughputModel,
};
use robustflow::ingest::{
    load_instance, serialize_report, IngestError, InstanceDocument, KeyValueReport, OutputFormat,
    SourceFormat,
};
use robustflow::robust::{
    cold_scenario_throughput, robust_latency_linear, robust_throughput_with_caps, FailureUnits,
    RobustError, RobustOptions, DEFAULT_MAX_SCENARIOS,
};
use robustflow::robustify::{
    robustify_latency_linear, robustify_throughput, Method, OuterSettings, RobustifyResult,
};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const MAX_SCENARIOS_ENV: &str = "ROBUSTFLOW_MAX_SCENARIOS";

#[derive(Parser, Debug)]
#[command(
    name = "robustflow",
    version,
    about = "Throughput, latency and failure robustness of network flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximal concurrent flow λ*.
    Throughput(Common),
    /// Optimal load balance θ* = 1/λ*.
    LoadBalance(Common),
    /// Average latency at load β·λ*.
    Latency {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        latency: LatencyArgs,
    },
    /// Worst-case throughput over q edge failures.
    RobustThroughput {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        robust: RobustArgs,
    },
    /// Worst-case linear latency over q edge failures.
    RobustLatency {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        robust: RobustArgs,
        #[command(flatten)]
        latency: LatencyArgs,
    },
    /// Spend a capacity budget to maximize robust throughput.
    RobustifyThroughput {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        robust: RobustArgs,
        #[command(flatten)]
        outer: OuterArgs,
    },
    /// Spend a capacity budget to minimize robust linear latency.
    RobustifyLatency {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        robust: RobustArgs,
        #[command(flatten)]
        outer: OuterArgs,
        #[command(flatten)]
        latency: LatencyArgs,
    },
    /// Warm-started scenario tree against per-scenario cold solves (CSV).
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        robust: RobustArgs,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Instance file (JSON or SNDlib native).
    #[arg(long)]
    network: PathBuf,
    /// Input format; guessed from the file extension when omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Args, Debug)]
struct RobustArgs {
    /// Number of failing edges (or links with --paired-failure).
    #[arg(long, default_value_t = 1)]
    q: usize,
    /// Worker threads for the scenario enumeration.
    #[arg(long)]
    workers: Option<usize>,
    /// Enumerate even when the scenario count exceeds the limit.
    #[arg(long)]
    allow_large: bool,
    /// Fail both directions of an SNDlib link together.
    #[arg(long)]
    paired_failure: bool,
}

#[derive(Args, Debug)]
struct LatencyArgs {
    /// Load ratio relative to maximal throughput, in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = Kind::Linear)]
    latency_kind: Kind,
    /// Scale of the inverse latency.
    #[arg(long, default_value_t = 1e-6)]
    alpha_c: f64,
}

#[derive(Args, Debug)]
struct OuterArgs {
    /// Capacity budget B.
    #[arg(long)]
    budget: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::CuttingPlane)]
    method: MethodArg,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum InputFormat {
    Json,
    Sndlib,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Output {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Kind {
    Linear,
    Inverse,
    Log,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    CuttingPlane,
    Subgradient,
}

/// Failure with its exit code: 1 for data the analysis cannot handle
/// (unreadable, infeasible, disconnected), 2 for bad arguments.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        let code = match e {
            FlowError::InvalidConfig(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<RobustError> for Failure {
    fn from(e: RobustError) -> Self {
        match e {
            RobustError::Flow(f) => f.into(),
            RobustError::TooManyScenarios { .. } => Self::usage(format!(
                "{e}; pass --allow-large or raise {MAX_SCENARIOS_ENV}"
            )),
            RobustError::TooManyFailures { .. } => Self::usage(e.to_string()),
            _ => Self {
                code: 1,
                message: e.to_string(),
            },
        }
    }
}

fn load(common: &Common) -> Result<InstanceDocument, Failure> {
    let format = common.format.map(|f| match f {
        InputFormat::Json => SourceFormat::Json,
        InputFormat::Sndlib => SourceFormat::SndlibNative,
    });
    Ok(load_instance(&common.network, format)?)
}

fn output_format(common: &Common) -> OutputFormat {
    match common.output {
        Output::Json => OutputFormat::Json,
        Output::Csv => OutputFormat::Csv,
    }
}

fn latency_config(args: &LatencyArgs) -> Result<LatencyConfig, Failure> {
    let kind = match args.latency_kind {
        Kind::Linear => LatencyKind::Linear,
        Kind::Inverse => LatencyKind::Inverse,
        Kind::Log => LatencyKind::Log,
    };
    LatencyConfig::new(kind, args.beta, args.alpha_c).map_err(|e| Failure::usage(e.to_string()))
}

fn robust_options(args: &RobustArgs, doc: &InstanceDocument) -> Result<RobustOptions, Failure> {
    let max_scenarios = match std::env::var(MAX_SCENARIOS_ENV) {
        Ok(v) => v.trim().parse::<u128>().map_err(|_| {
            Failure::usage(format!(
                "{MAX_SCENARIOS_ENV} must be a non-negative integer, got `{v}`"
            ))
        })?,
        Err(_) => DEFAULT_MAX_SCENARIOS,
    };
    if args.workers == Some(0) {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    Ok(RobustOptions {
        workers: args.workers,
        max_scenarios,
        allow_large: args.allow_large,
        units: args
            .paired_failure
            .then(|| FailureUnits::grouped(doc.paired_units())),
    })
}

fn outer_settings(args: &OuterArgs) -> Result<OuterSettings, Failure> {
    if !(args.budget >= 0.0 && args.budget.is_finite()) {
        return Err(Failure::usage("--budget must be a non-negative number"));
    }
    if !(args.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    Ok(OuterSettings {
        method: match args.method {
            MethodArg::CuttingPlane => Method::CuttingPlane,
            MethodArg::Subgradient => Method::Subgradient,
        },
        max_iters: args.max_iters,
        tol: args.tol,
        gamma0: None,
    })
}

fn robustify_report(res: &RobustifyResult, value_key: &str, method: MethodArg) -> KeyValueReport {
    let history: Vec<Value> = res
        .history
        .iter()
        .map(|h| {
            json!({
                "iteration": h.iteration,
                "value": h.value,
                "best_value": h.best_value,
                "lower_bound": h.lower_bound,
            })
        })
        .collect();
    KeyValueReport::new()
        .with(value_key, res.value)
        .with("delta_b", res.allocation.delta_b.clone())
        .with("budget_used", res.allocation.total())
        .with(
            "method",
            match method {
                MethodArg::CuttingPlane => "cutting-plane",
                MethodArg::Subgradient => "subgradient",
            },
        )
        .with("iterations", res.history.len())
        .with(
            "converged",
            res.termination == robustflow::robustify::Termination::Converged,
        )
        .with("history", history)
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Throughput(common) => {
            let doc = load(&common)?;
            let sol = solve_throughput(&doc.network, &doc.demands)?;
            let report = KeyValueReport::new()
                .with("lambda", sol.lambda_star)
                .with("edge_flows", sol.flows.edge_totals())
                .with("pivots", sol.pivots);
            Ok(serialize_report(&report, output_format(&common)))
        }
        Command::LoadBalance(common) => {
            let doc = load(&common)?;
            let sol = solve_throughput(&doc.network, &doc.demands)?;
            let (theta, flows) = load_balance_from_throughput(&sol)?;
            let totals = flows.edge_totals();
            let loads: Vec<f64> = totals
                .iter()
                .zip(doc.network.capacities())
                .map(|(f, b)| f / b)
                .collect();
            let report = KeyValueReport::new()
                .with("theta", theta)
                .with("edge_flows", totals)
                .with("edge_loads", loads);
            Ok(serialize_report(&report, output_format(&common)))
        }
        Command::Latency { common, latency } => {
            let doc = load(&common)?;
            let cfg = latency_config(&latency)?;
            let lambda = solve_throughput(&doc.network, &doc.demands)?.lambda_star;
            let linear = LatencyConfig {
                kind: LatencyKind::Linear,
                ..cfg
            };
            let sol = solve_latency_linear(&doc.network, &doc.demands, &linear, lambda)?;
            let totals = sol.flows.edge_totals();
            let mut report = KeyValueReport::new()
                .with("lambda", lambda)
                .with("beta", cfg.beta)
                .with("latency", sol.latency)
                .with("edge_flows", totals.clone());
            if cfg.kind != LatencyKind::Linear {
                // the routing is the linear optimum; the requested latency is evaluated on it
                let total = eval_latency(&totals, &doc.network, &cfg)?;
                report = report.with("evaluated_latency", total / sol.normalization);
            }
            Ok(serialize_report(&report, output_format(&common)))
        }
        Command::RobustThroughput { common, robust } => {
            let doc = load(&common)?;
            let opts = robust_options(&robust, &doc)?;
            let model = ThroughputModel::new(&doc.network, &doc.demands)?;
            let rep =
                robust_throughput_with_caps(&model, &doc.network.capacities(), robust.q, &opts)?;
            Ok(serialize_report(&rep, output_format(&common)))
        }
        Command::RobustLatency {
            common,
            robust,
            latency,
        } => {
            let doc = load(&common)?;
            let cfg = latency_config(&latency)?;
            if cfg.kind != LatencyKind::Linear {
                return Err(Failure::usage(
                    "robust latency supports --latency-kind linear only",
                ));
            }
            let opts = robust_options(&robust, &doc)?;
            let rep = robust_latency_linear(&doc.network, &doc.demands, robust.q, &cfg, &opts)?;
            Ok(serialize_report(&rep, output_format(&common)))
        }
        Command::RobustifyThroughput {
            common,
            robust,
            outer,
        } => {
            let doc = load(&common)?;
            let opts = robust_options(&robust, &doc)?;
            let settings = outer_settings(&outer)?;
            let res = robustify_throughput(
                &doc.network,
                &doc.demands,
                robust.q,
                outer.budget,
                &settings,
                &opts,
            )?;
            Ok(serialize_report(
                &robustify_report(&res, "robust_throughput", outer.method),
                output_format(&common),
            ))
        }
        Command::RobustifyLatency {
            common,
            robust,
            outer,
            latency,
        } => {
            let doc = load(&common)?;
            let cfg = latency_config(&latency)?;
            if cfg.kind != LatencyKind::Linear {
                return Err(Failure::usage(
                    "robustification supports --latency-kind linear only",
                ));
            }
            let opts = robust_options(&robust, &doc)?;
            let settings = outer_settings(&outer)?;
            let res = robustify_latency_linear(
                &doc.network,
                &doc.demands,
                robust.q,
                outer.budget,
                &cfg,
                &settings,
                &opts,
            )?;
            Ok(serialize_report(
                &robustify_report(&res, "robust_latency", outer.method),
                output_format(&common),
            ))
        }
        Command::Bench { common, robust } => {
            let doc = load(&common)?;
            let opts = robust_options(&robust, &doc)?;
            bench(&doc, robust.q, &opts)
        }
    }
}

/// One row per scenario: warm-start pivots of the step into the scenario and
/// the pivots of a cold solve from the structured starting basis. Timing
/// columns come last.
fn bench(doc: &InstanceDocument, q: usize, opts: &RobustOptions) -> Result<String, Failure> {
    let model = ThroughputModel::new(&doc.network, &doc.demands)?;
    let caps = doc.network.capacities();
    let start = Instant::now();
    let rep = robust_throughput_with_caps(&model, &caps, q, opts)?;
    let warm_total_time = start.elapsed();

    let mut out = String::from(
        "scenario_edges,warm_value,cold_value,warm_pivots,cold_pivots,warm_time_us,cold_time_us\n",
    );
    let mut cold_pivots_total = 0;
    let mut cold_total_time = std::time::Duration::ZERO;
    let mut cold_worst = f64::INFINITY;
    for r in &rep.records {
        let t = Instant::now();
        let (cold_value, cold_pivots) = cold_scenario_throughput(&model, &caps, &r.scenario)?;
        let cold_time = t.elapsed();
        cold_pivots_total += cold_pivots;
        cold_total_time += cold_time;
        cold_worst = cold_worst.min(cold_value);
        let edges: Vec<String> = r.scenario.edges().iter().map(|e| e.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            edges.join(";"),
            fmt(r.value.unwrap_or(f64::NAN)),
            fmt(cold_value),
            r.pivots,
            cold_pivots,
            r.elapsed.as_micros(),
            cold_time.as_micros()
        ));
    }
    // the warm total counts inner tree nodes too
    out.push_str(&format!(
        "total,{},{},{},{},{},{}\n",
        fmt(rep.worst_value),
        fmt(cold_worst),
        rep.pivots_total,
        cold_pivots_total,
        warm_total_time.as_micros(),
        cold_total_time.as_micros()
    ));
    Ok(out)
}

fn fmt(v: f64) -> String {
    robustflow::ingest::format_number(v)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
