//! quditc: synthesize, retarget, simulate and benchmark qudit circuits.
//!
//! Every command reads and writes one JSON document schema, tagged by a
//! `kind` field: `unitary` (a dense matrix), `circuit` (the IR), `counts`
//! (a measurement histogram), `state` (an amplitude dump) or `bench` (a
//! benchmark specification). Compile reports are written as bare JSON
//! objects since nothing reads them back.
//!
//! Exit codes: 0 when the requested operation's contract held, 1 when
//! synthesis or simulation failed it (budget missed, non-convergence,
//! numerical trouble), 2 when the inputs were unusable (unparsable files,
//! bad flags). The `QUDCOMP_TOL` environment variable scales all numeric
//! tolerances multiplicatively.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use qudit_core::ir::Circuit;
use qudit_core::pipeline::{
    hybrid_compile, retarget_circuit, CompileOptions, CompileReport, Method,
};
use qudit_core::sim::{run_statevector, sample, CountsResult};
use qudit_core::synth::{build_table, default_basis, ApproximationTable};
use qudit_core::{Mat, Tolerances};

#[derive(Parser)]
#[command(
    name = "quditc",
    about = "Compile unitaries over d-level systems to circuits, map them across dimensions, and run them",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a unitary into a circuit (alias: compile).
    #[command(visible_alias = "compile")]
    Synth(SynthArgs),
    /// Re-express a circuit on qudits of another dimension.
    Map(MapArgs),
    /// Run a circuit: sampled counts when it measures, amplitudes otherwise.
    Simulate(SimArgs),
    /// Time the synthesis methods over random instances, writing CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Input unitary document.
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Qudit dimension d (the matrix size must be a power of it).
    #[arg(long, short = 'd')]
    dim: usize,
    /// Output circuit document.
    #[arg(long, short = 'o')]
    output: PathBuf,
    #[command(flatten)]
    synth: SynthFlags,
    /// Also write the compile report here (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the exact pre-approximation circuit here.
    #[arg(long)]
    dump_ir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthFlags {
    /// Synthesis method: csd, sk or hybrid.
    #[arg(long, default_value = "hybrid")]
    method: String,
    /// Accuracy budget for the compiled circuit.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Recursion depth for word approximation.
    #[arg(long, default_value_t = 3)]
    sk_depth: usize,
    /// Approximation table JSON (built in-process when absent).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Disable word reuse across repeated payloads.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct MapArgs {
    /// Input circuit document.
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Target qudit dimension e >= 2.
    #[arg(long)]
    target_dim: usize,
    /// Output circuit document.
    #[arg(long, short = 'o')]
    output: PathBuf,
    #[command(flatten)]
    synth: SynthFlags,
}

#[derive(Args)]
struct SimArgs {
    /// Input circuit document.
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Output counts (or state) document.
    #[arg(long, short = 'o')]
    output: PathBuf,
    /// Measurement shots.
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    /// Sampling seed; identical seeds reproduce byte-identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark specification document.
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Output CSV path.
    #[arg(long, short = 'o')]
    output: PathBuf,
}

/// The one interchange schema. Files carry exactly one document.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Document {
    Unitary {
        matrix: Mat<f64>,
    },
    Circuit {
        circuit: Circuit<f64>,
    },
    Counts {
        counts: CountsResult,
    },
    State {
        dims: Vec<usize>,
        re: Vec<f64>,
        im: Vec<f64>,
        probabilities: Vec<f64>,
    },
    Bench {
        spec: BenchSpec,
    },
}

#[derive(Serialize, Deserialize)]
struct BenchSpec {
    d: usize,
    n: usize,
    methods: Vec<String>,
    trials: usize,
    seed: u64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_depth")]
    sk_depth: usize,
    /// Word length for the shared approximation table (built once, outside
    /// the timed region).
    #[serde(default)]
    max_len: Option<usize>,
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_depth() -> usize {
    2
}

/// Fixed bench CSV header. The lowering stage is folded into the csd column:
/// it is part of the exact phase of every method.
const BENCH_HEADER: &str = "method,d,n,trial,epsilon,csd_ms,sk_ms,total_ms,gate_h,gate_t,gate_sum,distance";

struct Failure {
    code: u8,
    msg: String,
}

/// Input-side problems: unreadable or unparsable files, bad flags.
fn input_err(msg: impl std::fmt::Display) -> Failure {
    Failure { code: 2, msg: msg.to_string() }
}

/// Operation-side problems: the requested synthesis or run failed.
fn op_err(msg: impl std::fmt::Display) -> Failure {
    Failure { code: 1, msg: msg.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Map(a) => cmd_map(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("quditc: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn read_document(path: &Path) -> Result<Document, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn write_document(path: &Path, doc: &Document) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| op_err(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| op_err(format!("{}: {e}", path.display())))
}

struct ResolvedOptions {
    method: Method,
    epsilon: f64,
    sk_depth: usize,
    cache_enabled: bool,
    table: Option<ApproximationTable<f64>>,
}

impl ResolvedOptions {
    fn as_compile_options(&self) -> CompileOptions<'_, f64> {
        CompileOptions {
            method: self.method,
            epsilon: self.epsilon,
            sk_depth: self.sk_depth,
            table: self.table.as_ref(),
            cache_enabled: self.cache_enabled,
        }
    }
}

/// Validate flags before touching any output path.
fn resolve_flags(flags: &SynthFlags, d: usize, tol: &Tolerances<f64>) -> Result<ResolvedOptions, Failure> {
    let method: Method = flags.method.parse().map_err(input_err)?;
    if !(flags.epsilon > 0.0) {
        return Err(input_err(format!("epsilon must be positive, got {}", flags.epsilon)));
    }
    let table = match &flags.table {
        None => None,
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
            let basis = default_basis::<f64>(d).map_err(input_err)?;
            Some(ApproximationTable::from_json(&value, &basis, tol).map_err(input_err)?)
        }
    };
    Ok(ResolvedOptions {
        method,
        epsilon: flags.epsilon,
        sk_depth: flags.sk_depth,
        cache_enabled: !flags.no_cache,
        table,
    })
}

fn write_report(report: &CompileReport, path: Option<&Path>) -> Result<(), Failure> {
    let json = report.to_json().map_err(op_err)?;
    match path {
        Some(p) => {
            fs::write(p, format!("{json}\n")).map_err(|e| op_err(format!("{}: {e}", p.display())))
        }
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let tol = Tolerances::<f64>::default();
    if args.dim < 2 {
        return Err(input_err(format!("--dim must be at least 2, got {}", args.dim)));
    }
    let resolved = resolve_flags(&args.synth, args.dim, &tol)?;
    let Document::Unitary { matrix } = read_document(&args.input)? else {
        return Err(input_err(format!("{}: expected a unitary document", args.input.display())));
    };

    if let Some(ir_path) = &args.dump_ir {
        let exact = CompileOptions {
            method: Method::Csd,
            epsilon: resolved.epsilon,
            sk_depth: 0,
            table: None,
            cache_enabled: false,
        };
        let (ir, _) = hybrid_compile(&matrix, args.dim, &exact, &tol).map_err(op_err)?;
        write_document(ir_path, &Document::Circuit { circuit: ir })?;
    }

    let opts = resolved.as_compile_options();
    let (circuit, report) = hybrid_compile(&matrix, args.dim, &opts, &tol).map_err(op_err)?;
    write_document(&args.output, &Document::Circuit { circuit })?;
    write_report(&report, args.report.as_deref())
}

fn cmd_map(args: MapArgs) -> Result<(), Failure> {
    let tol = Tolerances::<f64>::default();
    if args.target_dim < 2 {
        return Err(input_err(format!(
            "--target-dim must be at least 2, got {}",
            args.target_dim
        )));
    }
    let resolved = resolve_flags(&args.synth, args.target_dim, &tol)?;
    let Document::Circuit { circuit } = read_document(&args.input)? else {
        return Err(input_err(format!("{}: expected a circuit document", args.input.display())));
    };
    let opts = resolved.as_compile_options();
    let mapped = retarget_circuit(&circuit, args.target_dim, &opts, &tol).map_err(op_err)?;
    write_document(&args.output, &Document::Circuit { circuit: mapped })
}

fn cmd_simulate(args: SimArgs) -> Result<(), Failure> {
    let tol = Tolerances::<f64>::default();
    let Document::Circuit { circuit } = read_document(&args.input)? else {
        return Err(input_err(format!("{}: expected a circuit document", args.input.display())));
    };
    let dag = circuit.to_dag().map_err(input_err)?;
    let state = run_statevector(&dag, None, &tol).map_err(op_err)?;
    let measured = circuit.measurement_order();
    let doc = if measured.is_empty() {
        // No measurements: dump the full final state instead of sampling.
        let amps = state.amplitudes();
        Document::State {
            dims: state.dims().to_vec(),
            re: amps.iter().map(|z| z.re).collect(),
            im: amps.iter().map(|z| z.im).collect(),
            probabilities: amps.iter().map(|z| z.norm_sqr()).collect(),
        }
    } else {
        let counts = sample(&state, &measured, args.shots, args.seed).map_err(op_err)?;
        Document::Counts { counts }
    };
    write_document(&args.output, &doc)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let tol = Tolerances::<f64>::default();
    let Document::Bench { spec } = read_document(&args.input)? else {
        return Err(input_err(format!("{}: expected a bench document", args.input.display())));
    };
    if spec.d < 2 || spec.n == 0 || spec.trials == 0 || spec.methods.is_empty() {
        return Err(input_err("bench spec needs d >= 2, n >= 1, trials >= 1 and methods"));
    }
    let methods: Vec<Method> = spec
        .methods
        .iter()
        .map(|s| s.parse().map_err(input_err))
        .collect::<Result<_, _>>()?;

    // The table is shared across every trial and method so that timed rows
    // measure synthesis, not table construction.
    let basis = default_basis::<f64>(spec.d).map_err(input_err)?;
    let max_len = spec.max_len.unwrap_or(match spec.d {
        2 => 10,
        3 => 6,
        _ => 3,
    });
    let table = build_table(spec.d, &basis, max_len, &tol).map_err(op_err)?;

    let mut rows = vec![BENCH_HEADER.to_string()];
    for trial in 0..spec.trials {
        let seed = spec.seed.wrapping_add(trial as u64);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let dim = spec.d.pow(spec.n as u32);
        let u: Mat<f64> = qudit_core::linalg::haar_unitary(dim, &mut rng);
        for &method in &methods {
            let opts = CompileOptions {
                method,
                epsilon: spec.epsilon,
                sk_depth: spec.sk_depth,
                table: Some(&table),
                cache_enabled: method == Method::Hybrid,
            };
            let started = Instant::now();
            match hybrid_compile(&u, spec.d, &opts, &tol) {
                Ok((_, rep)) => rows.push(format!(
                    "{},{},{},{},{:.3e},{:.3},{:.3},{:.3},{},{},{},{:.6e}",
                    method,
                    spec.d,
                    spec.n,
                    trial,
                    spec.epsilon,
                    rep.csd_ms + rep.lower_ms,
                    rep.sk_ms,
                    rep.total_ms,
                    rep.gate_h,
                    rep.gate_t,
                    rep.gate_sum,
                    rep.distance
                )),
                Err(e) => {
                    // Keep the batch going; the row records what was
                    // measured and stderr carries the diagnostic.
                    let wall = started.elapsed().as_secs_f64() * 1e3;
                    let distance = match &e {
                        qudit_core::Error::BudgetNotMet { distance, .. } => *distance,
                        _ => f64::NAN,
                    };
                    eprintln!("quditc: bench trial {trial} ({method}): {e}");
                    rows.push(format!(
                        "{},{},{},{},{:.3e},nan,nan,{:.3},0,0,0,{:.6e}",
                        method, spec.d, spec.n, trial, spec.epsilon, wall, distance
                    ));
                }
            }
        }
    }
    let mut text = rows.join("\n");
    text.push('\n');
    fs::write(&args.output, text).map_err(|e| op_err(format!("{}: {e}", args.output.display())))
}
