//! `covquant` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 computation error, 4 recovery deviation above `--max-dev`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use covquant::error::Error;
use covquant::group::{GroupCarrier, SystemDescriptor, WeylSystem};
use covquant::observable::{ClassicalObservable, FunctionSpec};
use covquant::operator::{DensityOperator, Operator};
use covquant::povm::{build_povm, counts_csv, sample, Cell, OutcomePartition, PovmJson};
use covquant::quantization::{dual_symbol, quantize, recover_kernel, MapTable, QuantizationKernel};
use covquant::random::random_density;
use covquant::tolerances::Tolerances;
use covquant::verify::{self, Suite, VerifyConfig};

#[derive(Parser)]
#[command(
    name = "covquant",
    version,
    about = "Covariant quantization maps and POVMs over Weyl systems"
)]
struct Cli {
    /// JSON file with tolerance overrides; missing fields keep their defaults.
    #[arg(long, global = true)]
    tol_overrides: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a system descriptor.
    System {
        #[command(subcommand)]
        action: SystemAction,
    },
    /// Build a kernel (density operator) file.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Quantize a function: writes Γ(f) as an operator file.
    Quantize(QuantizeArgs),
    /// Write the symbol g ↦ d⁻¹ Tr[S β_g(T)] as q,p,re,im CSV.
    Symbol(SymbolArgs),
    /// Build a POVM over a partition.
    Povm {
        #[command(subcommand)]
        action: PovmAction,
    },
    /// Sample measurement outcomes: writes label,count CSV.
    Sample(SampleArgs),
    /// Recover the kernel of a covariant POVM or map table.
    Recover(RecoverArgs),
    /// Run verification suites and write a report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Finite,
    Planar,
}

#[derive(Subcommand)]
enum SystemAction {
    Build {
        #[arg(long)]
        kind: Kind,
        /// Torus order (finite).
        #[arg(long = "N")]
        n: Option<usize>,
        /// Fock truncation (planar).
        #[arg(long = "M")]
        m: Option<usize>,
        /// Window half-extent (planar).
        #[arg(long = "L")]
        l: Option<f64>,
        /// Grid step (planar).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelKind {
    Random,
    Vacuum,
    Basis,
}

#[derive(Subcommand)]
enum KernelAction {
    Build {
        #[arg(long)]
        kind: KernelKind,
        #[arg(long)]
        dim: usize,
        /// Basis index for `--kind basis`.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    kernel: PathBuf,
    /// Observable or function-spec JSON file, or a builtin such as `one`,
    /// `indicator:a,b`, `rect:q0,q1,p0,p1`, `poly-qp:2,0,0.5;0,2,0.5`,
    /// `gauss-bump:qc,pc,w`.
    #[arg(long)]
    function: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SymbolArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    kernel: PathBuf,
    /// Operator file for `S`.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PovmAction {
    Build {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        /// `singletons`, `whole`, `quadrants`, or a JSON file `{"cells":[...]}`.
        #[arg(long, default_value = "singletons")]
        partition: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    povm: PathBuf,
    /// Density operator file.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// System descriptor, needed only for POVM files without a carrier.
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    system: PathBuf,
    /// Singleton POVM or map-table file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Largest accepted candidate deviation.
    #[arg(long, default_value_t = 1e-6)]
    max_dev: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// System descriptor; without it the default systems of the suite run.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Kernel file (repeatable).
    #[arg(long)]
    kernel: Vec<PathBuf>,
    /// Random kernels per finite system.
    #[arg(long)]
    random_kernels: Option<usize>,
    #[arg(long, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    FiniteExact,
    PlanarQuadrature,
    All,
}

enum Failure {
    Usage(String),
    Compute(String),
    Verify,
    Deviation(f64, f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Deviation(dev, max)) => {
            eprintln!("error: recovery deviation {dev:e} exceeds --max-dev {max:e}");
            ExitCode::from(4)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let tol = match &cli.tol_overrides {
        Some(p) => read_json::<Tolerances>(p)?,
        None => Tolerances::default(),
    };
    match cli.command {
        Command::System { action } => system_build(action),
        Command::Kernel { action } => kernel_build(action, &tol),
        Command::Quantize(a) => cmd_quantize(a, &tol),
        Command::Symbol(a) => cmd_symbol(a, &tol),
        Command::Povm { action } => povm_build(action, &tol),
        Command::Sample(a) => cmd_sample(a, &tol),
        Command::Recover(a) => cmd_recover(a, &tol),
        Command::Verify(a) => cmd_verify(a, &tol),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::Compute(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string(value).map_err(Error::from)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn load_system(path: &Path) -> CliResult<WeylSystem> {
    let desc: SystemDescriptor = read_json(path)?;
    Ok(WeylSystem::from_descriptor(&desc)?)
}

fn load_kernel(path: &Path, tol: &Tolerances) -> CliResult<QuantizationKernel> {
    let op: Operator = read_json(path)?;
    Ok(QuantizationKernel::from_operator(op, tol)?)
}

fn system_build(action: SystemAction) -> CliResult {
    let SystemAction::Build { kind, n, m, l, h, out } = action;
    let missing = |flag: &str| Failure::Usage(format!("--{flag} is required"));
    let desc = match kind {
        Kind::Finite => SystemDescriptor::Finite {
            n: n.ok_or_else(|| missing("N"))?,
            d: None,
        },
        Kind::Planar => SystemDescriptor::Planar {
            m: m.ok_or_else(|| missing("M"))?,
            l: l.ok_or_else(|| missing("L"))?,
            h: h.ok_or_else(|| missing("h"))?,
            d: None,
        },
    };
    let system = WeylSystem::from_descriptor(&desc).map_err(|e| Failure::Usage(e.to_string()))?;
    write_json(&out, &system.descriptor())
}

fn kernel_build(action: KernelAction, tol: &Tolerances) -> CliResult {
    let KernelAction::Build {
        kind,
        dim,
        index,
        seed,
        out,
    } = action;
    if dim == 0 || (matches!(kind, KernelKind::Basis) && index >= dim) {
        return Err(Failure::Usage("need dim >= 1 and index < dim".into()));
    }
    let rho = match kind {
        KernelKind::Random => random_density(dim, &mut ChaCha20Rng::seed_from_u64(seed)),
        KernelKind::Vacuum => DensityOperator::basis(dim, 0),
        KernelKind::Basis => DensityOperator::basis(dim, index),
    };
    let rho = DensityOperator::new(rho.into_op(), tol)?;
    write_json(&out, &rho)
}

fn load_function(spec: &str, carrier: &GroupCarrier) -> CliResult<ClassicalObservable> {
    let path = Path::new(spec);
    if path.is_file() {
        let value: serde_json::Value = read_json(path)?;
        if value.get("family").is_some() {
            let f: FunctionSpec = serde_json::from_value(value).map_err(Error::from)?;
            return Ok(f.observable(carrier)?);
        }
        return Ok(serde_json::from_value(value).map_err(Error::from)?);
    }
    let f = FunctionSpec::parse(spec).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(f.observable(carrier)?)
}

fn cmd_quantize(a: QuantizeArgs, tol: &Tolerances) -> CliResult {
    let system = load_system(&a.system)?;
    let kernel = load_kernel(&a.kernel, tol)?;
    let f = load_function(&a.function, system.carrier())?;
    let gamma = quantize(&system, &kernel, &f)?;
    let tr = gamma.trace();
    println!("trace: {:.12e} {:+.12e}i", tr.re, tr.im);
    println!("hermitian_residual: {:.3e}", gamma.hermitian_residual());
    write_json(&a.out, &gamma)
}

fn cmd_symbol(a: SymbolArgs, tol: &Tolerances) -> CliResult {
    let system = load_system(&a.system)?;
    let kernel = load_kernel(&a.kernel, tol)?;
    let s: Operator = read_json(&a.state)?;
    let sym = dual_symbol(&system, &kernel, &s)?;
    let car = system.carrier();
    let mut csv = String::from("q,p,re,im\n");
    for (i, z) in sym.values().iter().enumerate() {
        let (q, p) = car.coordinates(car.element(i));
        csv.push_str(&format!("{q},{p},{:e},{:e}\n", z.re, z.im));
    }
    write_atomic(&a.out, csv.as_bytes())
}

fn povm_build(action: PovmAction, tol: &Tolerances) -> CliResult {
    let PovmAction::Build {
        system,
        kernel,
        partition,
        out,
    } = action;
    let system = load_system(&system)?;
    let kernel = load_kernel(&kernel, tol)?;
    let car = system.carrier();
    let partition = match partition.as_str() {
        "singletons" => OutcomePartition::singletons(car),
        "whole" => OutcomePartition::whole(car),
        "quadrants" => OutcomePartition::quadrants(car).map_err(|e| Failure::Usage(e.to_string()))?,
        file => {
            #[derive(serde::Deserialize)]
            struct Cells {
                cells: Vec<Cell>,
            }
            let cells: Cells = read_json(Path::new(file))?;
            OutcomePartition::new(car.clone(), cells.cells)?
        }
    };
    let povm = build_povm(&system, &kernel, &partition, tol)?;
    if !car.is_finite() {
        println!("normalization_residual: {:.3e}", povm.normalization_residual());
    }
    write_json(&out, &PovmJson::from(&povm))
}

fn cmd_sample(a: SampleArgs, tol: &Tolerances) -> CliResult {
    if a.shots == 0 {
        return Err(Failure::Usage("--shots must be positive".into()));
    }
    let carrier = a
        .system
        .as_deref()
        .map(load_system)
        .transpose()?
        .map(|s| s.carrier().clone());
    let povm = read_json::<PovmJson>(&a.povm)?.into_povm(carrier.as_ref(), tol)?;
    let rho: DensityOperator = read_json(&a.state)?;
    let counts = sample(&povm, &rho, a.shots, a.seed)?;
    write_atomic(&a.out, counts_csv(&counts).as_bytes())
}

fn cmd_recover(a: RecoverArgs, tol: &Tolerances) -> CliResult {
    let system = load_system(&a.system)?;
    let car = system.carrier();
    let value: serde_json::Value = read_json(&a.input)?;
    let table = if value.get("partition").is_some() {
        let povm = serde_json::from_value::<PovmJson>(value)
            .map_err(Error::from)?
            .into_povm(Some(car), tol)?;
        if !povm.partition().is_singletons() {
            return Err(Failure::Usage("recover needs a singleton POVM".into()));
        }
        let entries = povm
            .partition()
            .cells()
            .iter()
            .zip(povm.effects())
            .map(|(c, e)| (car.element(c.indices[0]), e.op().clone()))
            .collect();
        MapTable::from_entries(car.clone(), entries)?
    } else {
        serde_json::from_value::<MapTable>(value).map_err(Error::from)?
    };
    let rec = recover_kernel(&system, &table, tol)?;
    println!("max_deviation: {:.3e}", rec.max_deviation);
    if rec.max_deviation.is_nan() || rec.max_deviation > a.max_dev {
        return Err(Failure::Deviation(rec.max_deviation, a.max_dev));
    }
    write_json(&a.out, rec.kernel.density())
}

fn cmd_verify(a: VerifyArgs, tol: &Tolerances) -> CliResult {
    let systems = match &a.system {
        Some(p) => vec![read_json::<SystemDescriptor>(p)?],
        None => Vec::new(),
    };
    let kernels = a
        .kernel
        .iter()
        .map(|p| read_json::<Operator>(p))
        .collect::<CliResult<Vec<_>>>()?;
    let suite = match a.suite {
        SuiteArg::FiniteExact => Suite::FiniteExact,
        SuiteArg::PlanarQuadrature => Suite::PlanarQuadrature,
        SuiteArg::All => Suite::All,
    };
    let config = VerifyConfig {
        suite,
        systems,
        random_kernels: a.random_kernels.unwrap_or(if kernels.is_empty() { 20 } else { 0 }),
        kernels,
        seed: a.seed,
        tolerances: *tol,
    };
    let report = verify::run(&config).map_err(|e| match e {
        Error::InvalidGrid(_) | Error::InvalidModulus(_) => Failure::Usage(e.to_string()),
        other => other.into(),
    })?;
    write_json(&a.out, &report)?;
    for r in report.failures() {
        eprintln!("FAIL {} residual {:.3e} > {:.1e}", r.id, r.residual, r.tolerance);
    }
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}
