//! Command implementations and their error-code mapping.

use serde_json::{json, Value};

use dna_dss::analysis::{analyze, brute_force_analyze, AnalysisError};
use dna_dss::code::{ArrayCodeSpec, CodeSpecFile};
use dna_dss::exact::{
    exact_ccp_l_mean, exact_ccp_mean, exact_max_ccp_mean, exact_process_mean, ExactError,
    ExactResult, ProcessRule,
};
use dna_dss::predict::{
    predict_ccp_max, predict_corollary, predict_regen_bound, predict_scalar, Prediction,
    PredictionKind,
};
use dna_dss::sim::{ks_distance, sim_array, sim_ccp_max, sim_scalar_mds, SimAggregate, SimError};

use crate::emit::{
    read_manifest, read_z_csv, round_sig12, to_json_string, write_manifest, write_output,
    write_samples_csv, write_z_csv, RunContext,
};
use crate::{
    AnalyzeArgs, Cli, CliError, Command, ExactArgs, GumbelCheckArgs, ManifestArgs, OutputFormat,
    PredictArgs, PredictProcessArg, ProcessArg, SimulateArgs,
};

pub fn dispatch(command: Command, argv: Vec<String>) -> Result<(), CliError> {
    let mut ctx = RunContext::new(argv);
    match command {
        Command::Simulate(args) => simulate(&mut ctx, args),
        Command::Analyze(args) => analyze_cmd(&mut ctx, args),
        Command::Predict(args) => predict_cmd(&mut ctx, args),
        Command::Exact(args) => exact_cmd(&mut ctx, args),
        Command::GumbelCheck(args) => gumbel_check_cmd(&mut ctx, args),
        Command::Manifest(args) => replay(args),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn from_analysis(err: AnalysisError) -> CliError {
    match err {
        AnalysisError::TooLarge { .. } => CliError::Budget(err.to_string()),
        _ => CliError::Usage(err.to_string()),
    }
}

fn from_sim(err: SimError) -> CliError {
    match err {
        SimError::Budget(_) => CliError::Budget(err.to_string()),
        _ => CliError::Usage(err.to_string()),
    }
}

fn from_exact(err: ExactError) -> CliError {
    match err {
        ExactError::Budget { .. } => CliError::Budget(err.to_string()),
        ExactError::Numerics { .. } => CliError::Io(err.to_string()),
        _ => CliError::Usage(err.to_string()),
    }
}

fn require<T: Copy>(value: Option<T>, flag: &str, process: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("--{flag} is required for --process {process}")))
}

fn forbid<T>(value: &Option<T>, flag: &str, process: &str) -> Result<(), CliError> {
    if value.is_some() {
        return Err(usage(format!("--{flag} does not apply to --process {process}")));
    }
    Ok(())
}

/// Load a code spec from a built-in token or a JSON file path.
fn load_code(token_or_path: &str) -> Result<ArrayCodeSpec, CliError> {
    if let Some(built_in) = ArrayCodeSpec::parse_token(token_or_path) {
        return built_in.map_err(|e| usage(e.to_string()));
    }
    let text = std::fs::read_to_string(token_or_path)
        .map_err(|e| usage(format!("cannot read code spec {token_or_path}: {e}")))?;
    let file: CodeSpecFile = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{token_or_path}: invalid code spec JSON: {e}")))?;
    ArrayCodeSpec::from_file_spec(&file).map_err(|e| usage(format!("{token_or_path}: {e}")))
}

/// Run `f` under a worker pool of the requested size; --threads wins, then the
/// DSS_THREADS environment variable, then rayon's default.
fn with_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var("DSS_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| usage(format!("DSS_THREADS must be an integer, got '{v}'")))?,
            ),
            Err(_) => None,
        },
    };
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Io(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn simulate(ctx: &mut RunContext, args: SimulateArgs) -> Result<(), CliError> {
    let (aggregate, prediction): (SimAggregate, Option<Prediction>) = match args.process {
        ProcessArg::Ccp => {
            let l = require(args.l, "l", "ccp")?;
            let m = require(args.m, "m", "ccp")?;
            forbid(&args.rho, "rho", "ccp")?;
            forbid(&args.code, "code", "ccp")?;
            forbid(&args.p, "p", "ccp")?;
            let agg = with_pool(args.threads, || {
                sim_ccp_max(args.n, l, m, args.trials, args.seed)
            })?
            .map_err(from_sim)?;
            let pred = (args.n >= 3).then(|| predict_ccp_max(args.n, m, l));
            (agg, pred)
        }
        ProcessArg::Scalar => {
            let m = require(args.m, "m", "scalar")?;
            let rho = require(args.rho, "rho", "scalar")?;
            forbid(&args.l, "l", "scalar")?;
            forbid(&args.code, "code", "scalar")?;
            forbid(&args.p, "p", "scalar")?;
            let agg = with_pool(args.threads, || {
                sim_scalar_mds(args.n, m, rho, args.trials, args.seed)
            })?
            .map_err(from_sim)?;
            let pred = (args.n >= 2 && m >= 1).then(|| predict_scalar(args.n, m, rho));
            (agg, pred)
        }
        ProcessArg::Array => {
            let token = args.code.as_deref();
            let token = token.ok_or_else(|| usage("--code is required for --process array"))?;
            let p = require(args.p, "p", "array")?;
            forbid(&args.l, "l", "array")?;
            forbid(&args.m, "m", "array")?;
            forbid(&args.rho, "rho", "array")?;
            let code = load_code(token)?;
            let analysis = analyze(&code, p).map_err(from_analysis)?;
            let agg = with_pool(args.threads, || {
                sim_array(&code, p, args.n, args.trials, args.seed, &analysis.classification)
            })?
            .map_err(from_sim)?;
            let pred = Some(predict_regen_bound(args.n, &analysis.report));
            (agg, pred)
        }
    };

    if let Some(path) = &args.emit_samples {
        write_samples_csv(ctx, path, &aggregate.samples)?;
    }
    if let Some(path) = &args.emit_z {
        write_z_csv(ctx, path, &aggregate.z)?;
    }

    match args.format {
        OutputFormat::Json => {
            let mut value = serde_json::to_value(&aggregate)
                .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
            if let Value::Object(map) = &mut value {
                if let Some(path) = &args.emit_samples {
                    map.insert("samples_path".into(), json!(path.display().to_string()));
                }
                if let Some(path) = &args.emit_z {
                    map.insert("z_path".into(), json!(path.display().to_string()));
                }
            }
            let text = to_json_string(&value)?;
            write_output(ctx, args.out.as_deref(), &text)?;
        }
        OutputFormat::Csv => {
            let mut text = String::with_capacity(aggregate.samples.len() * 8);
            for v in &aggregate.samples {
                text.push_str(&v.to_string());
                text.push('\n');
            }
            write_output(ctx, args.out.as_deref(), &text)?;
        }
    }

    match aggregate.stderr {
        Some(se) => eprintln!(
            "mean {} +/- {} over {} trials (min {}, max {})",
            round_sig12(aggregate.mean),
            round_sig12(se),
            aggregate.config.trials,
            aggregate.min,
            aggregate.max
        ),
        None => eprintln!("mean {} over 1 trial", round_sig12(aggregate.mean)),
    }
    if let Some(pred) = prediction {
        let label = match pred.kind {
            PredictionKind::Expectation => "predicted",
            PredictionKind::UpperBound => "upper bound",
        };
        let deviation = (aggregate.mean - pred.value) / pred.value;
        eprintln!(
            "{label} {} (relative deviation {:+.4})",
            round_sig12(pred.value),
            deviation
        );
    }

    if let Some(path) = &args.manifest {
        write_manifest(ctx, path, "simulate", Some(args.seed))?;
    }
    Ok(())
}

fn analyze_cmd(ctx: &mut RunContext, args: AnalyzeArgs) -> Result<(), CliError> {
    let code = load_code(&args.code)?;
    let analysis =
        with_pool(args.threads, || analyze(&code, args.p))?.map_err(from_analysis)?;
    if args.brute_check {
        let brute = brute_force_analyze(&code, args.p).map_err(from_analysis)?;
        if brute != analysis.report {
            return Err(CliError::OracleMismatch(format!(
                "rank-based analysis disagrees with codeword enumeration for {} p={}",
                code.name(),
                args.p
            )));
        }
        eprintln!("brute-check passed: codeword enumeration agrees");
    }
    let text = to_json_string(&analysis.report)?;
    write_output(ctx, args.out.as_deref(), &text)?;
    eprintln!(
        "alpha* = {}, beta* = {}, |bad sets| = {}",
        analysis.report.alpha_star,
        analysis.report.beta_star,
        analysis.report.b_delta.iter().sum::<u64>()
    );
    if let Some(path) = &args.manifest {
        write_manifest(ctx, path, "analyze", None)?;
    }
    Ok(())
}

fn predict_cmd(ctx: &mut RunContext, args: PredictArgs) -> Result<(), CliError> {
    let prediction = match args.process {
        PredictProcessArg::Scalar => {
            let m = require(args.m, "m", "scalar")?;
            let rho = require(args.rho, "rho", "scalar")?;
            if args.n < 2 || m < 1 {
                return Err(usage("scalar prediction needs --n >= 2 and --m >= 1"));
            }
            predict_scalar(args.n, m, rho)
        }
        PredictProcessArg::Corollary => {
            let containers = require(args.containers, "containers", "corollary")?;
            let r = require(args.r, "r", "corollary")?;
            if r < 1 || r >= containers {
                return Err(usage("corollary needs 1 <= r < containers"));
            }
            if args.n < 2 {
                return Err(usage("corollary prediction needs --n >= 2"));
            }
            predict_corollary(args.n, containers, r)
        }
        PredictProcessArg::Ccp => {
            let m = require(args.m, "m", "ccp")?;
            let l = require(args.l, "l", "ccp")?;
            if args.n < 3 || m < 1 || l < 1 {
                return Err(usage("ccp prediction needs --n >= 3, --m >= 1, --l >= 1"));
            }
            predict_ccp_max(args.n, m, l)
        }
        PredictProcessArg::Regen => {
            let token = args.code.as_deref();
            let token = token.ok_or_else(|| usage("--code is required for --process regen"))?;
            let p = require(args.p, "p", "regen")?;
            if args.n < 1 {
                return Err(usage("regen bound needs --n >= 1"));
            }
            let code = load_code(token)?;
            let analysis = analyze(&code, p).map_err(from_analysis)?;
            predict_regen_bound(args.n, &analysis.report)
        }
    };
    let text = to_json_string(&prediction)?;
    write_output(ctx, args.out.as_deref(), &text)?;
    if let Some(path) = &args.manifest {
        write_manifest(ctx, path, "predict", None)?;
    }
    Ok(())
}

fn exact_cmd(ctx: &mut RunContext, args: ExactArgs) -> Result<(), CliError> {
    let small_n = |n: u64| -> Result<u32, CliError> {
        u32::try_from(n).map_err(|_| CliError::Budget(format!("n = {n} is far beyond any exact-oracle budget")))
    };
    let result: ExactResult = match args.process {
        ProcessArg::Ccp => {
            forbid(&args.rho, "rho", "ccp")?;
            forbid(&args.code, "code", "ccp")?;
            forbid(&args.p, "p", "ccp")?;
            let l = args.l.unwrap_or(1);
            let m = args.m.unwrap_or(1);
            if args.n < 1 || l < 1 || m < 1 {
                return Err(usage("ccp oracle needs n >= 1, l >= 1, m >= 1"));
            }
            match (l, m) {
                (1, 1) => exact_ccp_mean(args.n),
                (1, _) => exact_max_ccp_mean(small_n(args.n)?, m).map_err(from_exact)?,
                (_, 1) => exact_ccp_l_mean(small_n(args.n)?, l).map_err(from_exact)?,
                _ => {
                    return Err(usage(
                        "no exact oracle for m > 1 collectors with l > 1 copies",
                    ))
                }
            }
        }
        ProcessArg::Scalar => {
            let m = require(args.m, "m", "scalar")?;
            let rho = require(args.rho, "rho", "scalar")?;
            forbid(&args.l, "l", "scalar")?;
            forbid(&args.code, "code", "scalar")?;
            forbid(&args.p, "p", "scalar")?;
            if m < 1 {
                return Err(usage("scalar oracle needs m >= 1"));
            }
            exact_process_mean(small_n(args.n)?, 1, m + rho, ProcessRule::ScalarRows { m })
                .map_err(from_exact)?
        }
        ProcessArg::Array => {
            let token = args.code.as_deref();
            let token = token.ok_or_else(|| usage("--code is required for --process array"))?;
            let p = require(args.p, "p", "array")?;
            forbid(&args.l, "l", "array")?;
            forbid(&args.m, "m", "array")?;
            forbid(&args.rho, "rho", "array")?;
            let code = load_code(token)?;
            let analysis = analyze(&code, p).map_err(from_analysis)?;
            exact_process_mean(
                small_n(args.n)?,
                code.block_rows(),
                code.containers() - 1,
                ProcessRule::Blocks {
                    classification: &analysis.classification,
                },
            )
            .map_err(from_exact)?
        }
    };
    let text = to_json_string(&json!({
        "value": result.value,
        "states": result.states,
    }))?;
    write_output(ctx, args.out.as_deref(), &text)?;
    if let Some(path) = &args.manifest {
        write_manifest(ctx, path, "exact", None)?;
    }
    Ok(())
}

fn gumbel_check_cmd(ctx: &mut RunContext, args: GumbelCheckArgs) -> Result<(), CliError> {
    if !args.beta.is_finite() || args.beta <= 0.0 {
        return Err(usage("--beta must be positive"));
    }
    let samples = read_z_csv(&args.samples)?;
    let distance = ks_distance(&samples, args.mu, args.beta)
        .map_err(|e| usage(e.to_string()))?;
    let text = to_json_string(&json!({
        "ks_distance": distance,
        "mu": args.mu,
        "beta": args.beta,
        "n_samples": samples.len(),
    }))?;
    write_output(ctx, args.out.as_deref(), &text)?;
    if let Some(path) = &args.manifest {
        write_manifest(ctx, path, "gumbel-check", None)?;
    }
    Ok(())
}

/// Replay the argv recorded in a manifest; determinism makes the primary
/// outputs byte-identical to the original run.
fn replay(args: ManifestArgs) -> Result<(), CliError> {
    let manifest = read_manifest(&args.file)?;
    if manifest.command == "manifest" {
        return Err(usage("refusing to replay a manifest of a manifest run"));
    }
    let full: Vec<String> = std::iter::once("dna-dss".to_string())
        .chain(manifest.argv.iter().cloned())
        .collect();
    let cli = <Cli as clap::Parser>::try_parse_from(&full)
        .map_err(|e| usage(format!("recorded argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Manifest(_)) {
        return Err(usage("refusing to replay a manifest of a manifest run"));
    }
    dispatch(cli.command, manifest.argv)
}
