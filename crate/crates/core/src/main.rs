//! Command-line front end: generate states, analyze them, locate variant
//! pairs, apply the standard-form transform, and verify gate scripts.

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use stdstate::classifier::{classify, ClassifierConfig};
use stdstate::error::Error;
use stdstate::io;
use stdstate::locator::{
    explore_tree, ExactSampler, LocatorConfig, PrefixSampler, SamplingMode, ShotSampler,
};
use stdstate::report::{
    AnalysisReport, InputDescriptor, ParameterNote, TreeReport, REPORT_SCHEMA_VERSION,
};
use stdstate::sequencer::{
    run_procedure1, sequencing_trial_bound, Procedure1Config, Procedure1Outcome, StateOracle,
};
use stdstate::standard::{
    build_minimal, build_minimal_over_order, build_standard, sparse_synthesize, theorem1_transform,
    StandardStateSpec, VariantSpec,
};
use stdstate::state::StateVector;

#[derive(Parser)]
#[command(
    name = "stdstate",
    version,
    about = "Construct, analyze, and re-synthesize standard-form quantum states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a state file (and, for constructed modes, its ground-truth
    /// specification and gate script).
    Generate {
        /// Qubit count; required unless --spec provides it.
        #[arg(long)]
        n: Option<usize>,
        /// minimal | standard | sparse | random
        #[arg(long)]
        mode: String,
        /// Full specification file (base pairs, optional variants).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Variant list (JSON array) combined with seeded random base pairs.
        #[arg(long)]
        variants: Option<PathBuf>,
        /// Nonzero entries for sparse mode.
        #[arg(long, default_value_t = 8)]
        sparse_nonzeros: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output state file.
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth specification path (defaults next to --out).
        #[arg(long)]
        spec_out: Option<PathBuf>,
        /// Ground-truth gate script path (defaults next to --out).
        #[arg(long)]
        script_out: Option<PathBuf>,
    },
    /// Run the sequencing procedure and the Bayesian classification.
    Analyze {
        #[arg(long)]
        state: PathBuf,
        /// Variant-count cutoff; an integer or `2^b`. Defaults to
        /// `2^ceil(3n/5)`.
        #[arg(long)]
        k1: Option<String>,
        /// Extra confirmation trials after sequencing.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Relative tolerance of the ratio-pattern test.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Reconstruction gate script path (defaults next to --out).
        #[arg(long)]
        script_out: Option<PathBuf>,
    },
    /// Explore the measurement tree against recovered base pairs.
    Locate {
        #[arg(long)]
        state: PathBuf,
        /// Analysis report carrying the recovered order and pairs.
        #[arg(long)]
        pairs: PathBuf,
        /// `exact` or a per-node shot count.
        #[arg(long, default_value = "exact")]
        shots: String,
        /// Flag threshold in standard errors (shot mode).
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional total shot budget.
        #[arg(long)]
        shot_budget: Option<u64>,
        /// Output tree report (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Append one qubit and chain CNOTs to reach standard form.
    Transform {
        #[arg(long)]
        state: PathBuf,
        /// Output state file.
        #[arg(long)]
        out: PathBuf,
        /// Transform gate script path (defaults next to --out).
        #[arg(long)]
        script_out: Option<PathBuf>,
    },
    /// Simulate a gate script from the all-zero state and compare.
    Verify {
        /// Target state file.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

enum CliError {
    Usage(String),
    Inout(String),
    VerifyFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Inout(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::ScriptParse { .. } => {
                CliError::Inout(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    if let Err(message) = validate_thread_cap() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) | CliError::Inout(m) => eprintln!("error: {m}"),
                CliError::VerifyFailed => eprintln!("verification failed"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

/// `STDSTATE_THREADS` caps internal parallelism. The current kernels are
/// single-threaded, so any valid value is accepted as-is.
fn validate_thread_cap() -> Result<(), String> {
    match std::env::var("STDSTATE_THREADS") {
        Ok(raw) => match raw.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(()),
            _ => Err(format!(
                "STDSTATE_THREADS must be a positive integer, found `{raw}`"
            )),
        },
        Err(_) => Ok(()),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate {
            n,
            mode,
            spec,
            variants,
            sparse_nonzeros,
            seed,
            out,
            spec_out,
            script_out,
        } => cmd_generate(
            n,
            &mode,
            spec.as_deref(),
            variants.as_deref(),
            sparse_nonzeros,
            seed,
            &out,
            spec_out.as_deref(),
            script_out.as_deref(),
        ),
        Command::Analyze {
            state,
            k1,
            trials,
            tol,
            seed,
            out,
            script_out,
        } => cmd_analyze(&state, k1.as_deref(), trials, tol, seed, &out, script_out.as_deref()),
        Command::Locate {
            state,
            pairs,
            shots,
            threshold,
            seed,
            shot_budget,
            out,
        } => cmd_locate(&state, &pairs, &shots, threshold, seed, shot_budget, &out),
        Command::Transform {
            state,
            out,
            script_out,
        } => cmd_transform(&state, &out, script_out.as_deref()),
        Command::Verify { state, script, tol } => cmd_verify(&state, &script, tol),
    }
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.with_extension("");
    let mut name = stem.into_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn load_state_or_io_error(path: &Path) -> Result<StateVector, CliError> {
    io::load_state(path).map_err(|e| CliError::Inout(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    n: Option<usize>,
    mode: &str,
    spec_path: Option<&Path>,
    variants_path: Option<&Path>,
    sparse_nonzeros: usize,
    seed: u64,
    out: &Path,
    spec_out: Option<&Path>,
    script_out: Option<&Path>,
) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec_dst = spec_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sidecar(out, ".spec.json"));
    let script_dst = script_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sidecar(out, ".script.txt"));

    let check_no_spec_inputs = |what: &str| -> Result<(), CliError> {
        if spec_path.is_some() || variants_path.is_some() {
            return Err(CliError::Usage(format!(
                "--mode {what} does not take --spec or --variants"
            )));
        }
        Ok(())
    };
    let require_n = || -> Result<usize, CliError> {
        n.ok_or_else(|| CliError::Usage("--n is required for this mode".into()))
    };

    match mode {
        "minimal" | "standard" => {
            if mode == "minimal" && variants_path.is_some() {
                return Err(CliError::Usage(
                    "--mode minimal conflicts with --variants; use --mode standard".into(),
                ));
            }
            let mut spec = match spec_path {
                Some(path) => {
                    let loaded = io::load_spec(path)?;
                    if let Some(n) = n {
                        if n != loaded.n {
                            return Err(CliError::Usage(format!(
                                "--n {n} contradicts the specification file (n = {})",
                                loaded.n
                            )));
                        }
                    }
                    loaded
                }
                None => {
                    let n = require_n()?;
                    if n < 2 {
                        return Err(CliError::Usage(
                            "constructed modes need at least 2 qubits".into(),
                        ));
                    }
                    StandardStateSpec::random_minimal(n, &mut rng)
                }
            };
            if mode == "minimal" && !spec.variants.is_empty() {
                return Err(CliError::Usage(
                    "--mode minimal requires a variant-free specification".into(),
                ));
            }
            if let Some(path) = variants_path {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Inout(format!("{}: {e}", path.display())))?;
                let extra: Vec<VariantSpec> =
                    serde_json::from_str(&text).map_err(|e| CliError::Inout(e.to_string()))?;
                spec.variants.extend(extra);
            }
            spec.validate().map_err(CliError::from)?;
            let (state, script) = if mode == "minimal" {
                build_minimal(&spec)?
            } else {
                build_standard(&spec)?
            };
            io::save_state(out, &state)?;
            io::save_spec(&spec_dst, &spec)?;
            io::save_script(&script_dst, &script)?;
            Ok(())
        }
        "sparse" => {
            check_no_spec_inputs("sparse")?;
            let n = require_n()?;
            if sparse_nonzeros == 0 {
                return Err(CliError::Usage("--sparse-nonzeros must be positive".into()));
            }
            if sparse_nonzeros > 1 << n {
                return Err(CliError::Usage(format!(
                    "--sparse-nonzeros {sparse_nonzeros} exceeds 2^{n} basis states"
                )));
            }
            let mut indices = std::collections::HashSet::new();
            while indices.len() < sparse_nonzeros {
                indices.insert(rng.random_range(0..(1usize << n)));
            }
            let mut entries: Vec<(usize, Complex64)> = indices
                .into_iter()
                .map(|i| {
                    (
                        i,
                        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                    )
                })
                .collect();
            entries.sort_by_key(|(i, _)| *i);
            let norm = entries
                .iter()
                .map(|(_, a)| a.norm_sqr())
                .sum::<f64>()
                .sqrt();
            entries.iter_mut().for_each(|(_, a)| *a /= norm);
            let (state, script) = sparse_synthesize(n, &entries)?;
            io::save_state(out, &state)?;
            io::save_script(&script_dst, &script)?;
            Ok(())
        }
        "random" => {
            check_no_spec_inputs("random")?;
            let n = require_n()?;
            let dim = 1usize << n;
            let mut amps: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|a| *a /= norm);
            let state = StateVector::from_amplitudes(n, amps)?;
            io::save_state(out, &state)?;
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown mode `{other}`; expected minimal|standard|sparse|random"
        ))),
    }
}

fn parse_cutoff(raw: &str) -> Result<u128, CliError> {
    if let Some(exp) = raw.strip_prefix("2^") {
        let b: u32 = exp
            .parse()
            .map_err(|_| CliError::Usage(format!("bad cutoff exponent `{exp}`")))?;
        if b >= 127 {
            return Err(CliError::Usage("cutoff exponent too large".into()));
        }
        Ok(1u128 << b)
    } else {
        raw.parse()
            .map_err(|_| CliError::Usage(format!("bad cutoff `{raw}`")))
    }
}

fn cmd_analyze(
    state_path: &Path,
    k1: Option<&str>,
    trials: u64,
    tol: f64,
    seed: u64,
    out: &Path,
    script_out: Option<&Path>,
) -> Result<(), CliError> {
    let state = load_state_or_io_error(state_path)?;
    let n = state.num_qubits();
    if n < 3 {
        return Err(CliError::Usage(format!(
            "analysis requires at least 3 qubits, the state has {n}"
        )));
    }
    let cutoff = match k1 {
        Some(raw) => parse_cutoff(raw)?,
        None => 1u128 << ((3 * n).div_ceil(5) as u32),
    };
    let mut config = ClassifierConfig::new(n, cutoff);
    config.trial_budget = sequencing_trial_bound(n) + trials;

    let mut oracle = StateOracle::new(&state);
    let p1config = Procedure1Config {
        tol,
        extra_confirm_trials: trials,
        seed,
    };
    let procedure1 = run_procedure1(&mut oracle, &p1config)?;
    let posterior = classify(&procedure1, &config)?;

    let script_path = if let Procedure1Outcome::Success { order, pairs } = &procedure1.outcome {
        let dst = script_out
            .map(Path::to_path_buf)
            .unwrap_or_else(|| sidecar(out, ".script.txt"));
        let (_, script) = build_minimal_over_order(n, pairs, &order.sequence)?;
        io::save_script(&dst, &script)?;
        Some(dst.display().to_string())
    } else {
        None
    };

    let report = AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        input: InputDescriptor {
            path: state_path.display().to_string(),
            n,
        },
        parameter_note: ParameterNote::for_state(n, None),
        procedure1,
        posterior,
        tree: None,
        script_path,
    };
    std::fs::write(out, report.to_pretty_json()).map_err(Error::from)?;
    Ok(())
}

fn cmd_locate(
    state_path: &Path,
    pairs_path: &Path,
    shots: &str,
    threshold: f64,
    seed: u64,
    shot_budget: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let state = load_state_or_io_error(state_path)?;
    let text = std::fs::read_to_string(pairs_path)
        .map_err(|e| CliError::Inout(format!("{}: {e}", pairs_path.display())))?;
    let analysis: AnalysisReport =
        serde_json::from_str(&text).map_err(|e| CliError::Inout(e.to_string()))?;
    let (order, pairs) = match &analysis.procedure1.outcome {
        Procedure1Outcome::Success { order, pairs } => (order.sequence.clone(), pairs.clone()),
        Procedure1Outcome::FailureAtTrial { .. } => {
            return Err(CliError::Usage(
                Error::MissingRecoveredStructure.to_string(),
            ))
        }
    };

    let mode = match shots {
        "exact" => SamplingMode::Exact,
        raw => {
            let per_node: u64 = raw
                .parse()
                .map_err(|_| CliError::Usage(format!("bad --shots value `{raw}`")))?;
            if per_node == 0 {
                return Err(CliError::Usage("--shots must be positive".into()));
            }
            SamplingMode::Shots(per_node)
        }
    };
    let config = LocatorConfig {
        mode,
        flag_threshold: threshold,
        seed,
        shot_budget,
    };

    let (tree, findings) = match mode {
        SamplingMode::Exact => {
            let mut sampler =
                ExactSampler::new(&state, order).map_err(CliError::from)?;
            explore_tree(&mut sampler, &pairs, &config)?
        }
        SamplingMode::Shots(per_node) => {
            let mut sampler = ShotSampler::new(&state, order, per_node, seed)
                .map_err(CliError::from)?;
            explore_tree(&mut sampler, &pairs, &config)?
        }
    };
    let report = TreeReport::new(&tree, &findings);
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    std::fs::write(out, json).map_err(Error::from)?;
    Ok(())
}

fn cmd_transform(
    state_path: &Path,
    out: &Path,
    script_out: Option<&Path>,
) -> Result<(), CliError> {
    let state = load_state_or_io_error(state_path)?;
    let (transformed, script) = theorem1_transform(&state)?;
    io::save_state(out, &transformed)?;
    let dst = script_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sidecar(out, ".script.txt"));
    io::save_script(&dst, &script)?;
    Ok(())
}

fn cmd_verify(state_path: &Path, script_path: &Path, tol: f64) -> Result<(), CliError> {
    let target = load_state_or_io_error(state_path)?;
    let script = io::load_script(script_path)?;
    let mut replay = StateVector::new_zero(target.num_qubits())?;
    replay.apply_script(&script)?;
    if replay.equal_up_to_global_phase(&target, tol)? {
        println!("ok: script reproduces the state up to global phase");
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

// Suppress an unused-trait warning: the samplers are consumed generically.
const _: fn(&ExactSampler<'_>) -> usize = |s| PrefixSampler::num_qubits(s);
