//! `dflab` command-line front end.
//!
//! Exit codes: 0 success, 1 a checked property fails, 2 usage or input
//! error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::axioms::{
    validate_df, CheckOptions, DecoherenceMode, PositivityReport, Strategy, ValidationReport,
};
use crate::bell::{check_behavior_consistency, Behavior, BellReport};
use crate::compose::{
    check_composability, tensor, tensor_power, ComposabilityReport, DEFAULT_DIM_CAP,
};
use crate::df::{DecoherenceFunctional, ValidationLevel};
use crate::error::{Error, Result};
use crate::lemma1::{lemma1_df, lemma1_epsilon, run_lemma1, Lemma1Report};
use crate::matrix::{ComplexMatrix, C64};
use crate::maximality::{pnn_violation_search, verify_lemma2, Lemma2Report, PnnSearchReport};
use crate::quantum::{dv_family, quantum_df, QuantumModel, QuantumModelJson};
use crate::sample::{random_quantum_model, seeded};
use crate::scan::MAX_SCAN_DIM;
use crate::tol::Tolerances;

/// Environment variable that takes precedence over `--workers`.
pub const WORKERS_ENV: &str = "DFLAB_WORKERS";

/// Largest dimension printed in full by the human format.
const PRINT_DIM: usize = 16;

#[derive(Debug, Parser)]
#[command(
    name = "dflab",
    version,
    about = "Decoherence functional checks and composition experiments"
)]
pub struct Cli {
    /// Emit JSON reports instead of the human format.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads for enumeration kernels.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Equality and positivity tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the DF axioms on a JSON file.
    Validate {
        #[arg(long)]
        input: PathBuf,
        /// Level that must be reached for exit code 0.
        #[arg(long, value_enum, default_value_t = Level::Weak)]
        level: Level,
    },
    /// Tensor two DFs or take a tensor power.
    Compose(ComposeArgs),
    /// Survives n copies but not n + 1.
    Lemma1 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Quantum partner for a non-PSD DF, or the partner search for
    /// matrices with a negative or complex entry.
    Maximality {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        pnn: bool,
    },
    /// Decoherence constraints of a Bell behavior.
    BellCheck {
        #[arg(long)]
        df: PathBuf,
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Strong)]
        mode: Mode,
    },
    /// Write a generated DF, model or behavior.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Weak,
    Strong,
}

impl From<Mode> for DecoherenceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Weak => DecoherenceMode::Weak,
            Mode::Strong => DecoherenceMode::Strong,
        }
    }
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long, conflicts_with = "power", required_unless_present = "power")]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub power: Option<usize>,
    /// Run the weak-positivity verdict on the result.
    #[arg(long)]
    pub check: bool,
    /// Check block by block without materializing large products.
    #[arg(long)]
    pub block_reduced: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Lemma1,
    Dv,
    Classical,
    Quantum,
    Behavior,
    Model,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Copies the lemma1 ε is tuned for.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Vector for `dv`: JSON array of reals or of `[re, im]` pairs.
    #[arg(long)]
    pub v: Option<String>,
    /// Probabilities for `classical`, as a JSON array.
    #[arg(long)]
    pub p: Option<String>,
    /// Quantum model file for `quantum` and `behavior`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub dim_a: usize,
    #[arg(long, default_value_t = 2)]
    pub dim_b: usize,
    #[arg(long, default_value_t = 2)]
    pub settings: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolved options shared by all commands.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub json: bool,
    pub opts: CheckOptions,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli, env_workers: Option<&str>) -> Result<Self> {
        let workers = match env_workers {
            Some(s) => s.trim().parse::<usize>().map_err(|_| {
                Error::InvalidParameter(format!("{WORKERS_ENV}={s} is not a worker count"))
            })?,
            None => cli.workers,
        };
        if workers == 0 {
            return Err(Error::InvalidParameter(
                "worker count must be at least 1".into(),
            ));
        }
        let tol = match cli.tol {
            Some(t) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "tolerance {t} must be positive"
                )))
            }
            Some(t) => Tolerances::uniform(t),
            None => Tolerances::default(),
        };
        Ok(Self {
            json: cli.json,
            opts: CheckOptions {
                tol,
                budget: None,
                workers,
            },
        })
    }
}

/// Parses `std::env::args`, runs, and returns the exit code.
pub fn main_exit_code() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let env = std::env::var(WORKERS_ENV).ok();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    run(&cli, env.as_deref(), &mut out)
}

/// Runs one command, writing the report to `out` and errors to stderr.
pub fn run(cli: &Cli, env_workers: Option<&str>, out: &mut dyn Write) -> i32 {
    let result = RunConfig::from_cli(cli, env_workers).and_then(|cfg| dispatch(&cli.command, &cfg));
    match result {
        Ok(Outcome { text, passed }) => {
            if out
                .write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return 2;
            }
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

struct Outcome {
    text: String,
    passed: bool,
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::Validate { input, level } => cmd_validate(input, *level, cfg),
        Command::Compose(args) => cmd_compose(args, cfg),
        Command::Lemma1 { n, lambda, eps } => cmd_lemma1(*n, *lambda, *eps, cfg),
        Command::Maximality { input, pnn } => cmd_maximality(input, *pnn, cfg),
        Command::BellCheck { df, behavior, mode } => cmd_bell(df, behavior, *mode, cfg),
        Command::Gen(args) => cmd_gen(args, cfg),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(format!("{what}: {e}")))
}

fn load_df(path: &Path, tol: &Tolerances) -> Result<DecoherenceFunctional> {
    DecoherenceFunctional::from_json_str(&read(path)?, tol)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn fmt_c(z: C64) -> String {
    // fold signed zeros and sub-print-precision noise into 0
    let clean = |x: f64| if x.abs() < 5e-7 { 0.0 } else { x };
    let z = C64::new(clean(z.re), clean(z.im));
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn describe_matrix(m: &ComplexMatrix) -> String {
    let mut s = String::new();
    if m.dim() <= PRINT_DIM {
        for i in 0..m.dim() {
            let row: Vec<String> = m.row(i).iter().map(|&z| fmt_c(z)).collect();
            let _ = writeln!(s, "  [{}]", row.join(", "));
        }
    } else {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for z in m.entries() {
            lo = lo.min(z.re);
            hi = hi.max(z.re);
        }
        let _ = writeln!(
            s,
            "  dim {}, Frobenius norm {:.6e}, real parts in [{:.6e}, {:.6e}]",
            m.dim(),
            m.frobenius_norm(),
            lo,
            hi
        );
    }
    s
}

fn copies(n: usize) -> String {
    if n == 1 {
        "1 copy".into()
    } else {
        format!("{n} copies")
    }
}

fn describe_positivity(r: &PositivityReport) -> String {
    let mut s = format!(
        "{:?} ({:?}, {} vectors)",
        r.verdict, r.strategy, r.vectors_checked
    );
    if let (Some(w), Some(v)) = (&r.witness, r.witness_value) {
        let _ = write!(s, ", witness {w:?} with value {v:.9e}");
    }
    if let Some(b) = &r.witness_block {
        let _ = write!(s, ", block type {b:?}");
    }
    s
}

fn describe_tolerances(t: &Tolerances) -> String {
    format!(
        "tolerances: eq {:e}, pos {:e}, spec {:e}\n",
        t.eq, t.pos, t.spec
    )
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ValidateOutput<'a> {
    tolerances: Tolerances,
    required: ValidationLevel,
    passed: bool,
    report: &'a ValidationReport,
}

fn cmd_validate(input: &Path, level: Level, cfg: &RunConfig) -> Result<Outcome> {
    let text = read(input)?;
    let json = parse(&text, "DF file")?;
    let (matrix, space) = crate::df::DfJson::parts(&json)?;
    let df = DecoherenceFunctional::raw(matrix, space)?;
    let report = validate_df(&df, &cfg.opts)?;
    let required = match level {
        Level::Weak => ValidationLevel::WeaklyPositive,
        Level::Strong => ValidationLevel::StronglyPositive,
    };
    let passed = report.level >= required;
    let text = if cfg.json {
        to_json(&ValidateOutput {
            tolerances: cfg.opts.tol,
            required,
            passed,
            report: &report,
        })
    } else {
        let mut s = format!("DF with {} histories\n", df.dim());
        s.push_str(&describe_matrix(df.matrix()));
        let _ = writeln!(
            s,
            "hermiticity: {} (max deviation {:e})",
            ok(report.hermiticity.ok),
            report.hermiticity.max_deviation
        );
        let _ = writeln!(
            s,
            "normalization: {} (total {})",
            ok(report.normalization.ok),
            fmt_c(report.normalization.value)
        );
        if let Some(w) = &report.weak_positivity {
            let _ = writeln!(s, "weak positivity: {}", describe_positivity(w));
        }
        if let Some(sp) = &report.strong_positivity {
            let _ = writeln!(
                s,
                "strong positivity: {} (min eigenvalue {:.9e})",
                ok(sp.is_sp),
                sp.min_eigenvalue
            );
        }
        let _ = writeln!(s, "level: {} (required {})", report.level, required);
        s.push_str(&describe_tolerances(&cfg.opts.tol));
        s
    };
    Ok(Outcome { text, passed })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ComposeOutput {
    tolerances: Tolerances,
    dim: Option<usize>,
    written: Option<String>,
    composability: Option<ComposabilityReport>,
    positivity: Option<PositivityReport>,
}

fn cmd_compose(args: &ComposeArgs, cfg: &RunConfig) -> Result<Outcome> {
    let tol = &cfg.opts.tol;
    let a = load_df(&args.a, tol)?;
    let b = args.b.as_deref().map(|p| load_df(p, tol)).transpose()?;
    let (factor_dim, copies) = match (&b, args.power) {
        (Some(b), _) => (a.dim().saturating_mul(b.dim()), 1),
        (None, Some(n)) => (a.dim(), n),
        (None, None) => {
            return Err(Error::InvalidParameter(
                "either --b or --power is required".into(),
            ))
        }
    };
    let dim = u32::try_from(copies)
        .ok()
        .and_then(|c| factor_dim.checked_pow(c))
        .unwrap_or(usize::MAX);
    let materialize = dim <= DEFAULT_DIM_CAP;
    if !materialize && !(args.block_reduced && args.check && args.out.is_none()) {
        return Err(Error::DimensionCap {
            dim,
            cap: DEFAULT_DIM_CAP,
        });
    }
    let product = if materialize {
        Some(match (&b, args.power) {
            (Some(b), _) => tensor(&a, b, DEFAULT_DIM_CAP)?,
            (None, Some(n)) => tensor_power(&a, n, DEFAULT_DIM_CAP)?,
            (None, None) => unreachable!(),
        })
    } else {
        None
    };

    let mut composability = None;
    let mut positivity = None;
    if args.check {
        match (args.power, &product) {
            (Some(0), Some(p)) => {
                positivity = Some(crate::axioms::check_weak_positivity(
                    p,
                    Strategy::BruteForce,
                    &cfg.opts,
                )?);
            }
            (Some(n), _) => {
                let strategy = if args.block_reduced || dim > MAX_SCAN_DIM {
                    Strategy::BlockReduced
                } else {
                    Strategy::BruteForce
                };
                composability = Some(check_composability(&a, n, strategy, &cfg.opts)?);
            }
            (None, Some(p)) => {
                let strategy = if args.block_reduced || dim > MAX_SCAN_DIM {
                    Strategy::BlockReduced
                } else {
                    Strategy::BruteForce
                };
                positivity = Some(crate::axioms::check_weak_positivity(
                    p, strategy, &cfg.opts,
                )?);
            }
            (None, None) => unreachable!(),
        }
    }
    let passed = composability.as_ref().is_none_or(|c| c.passed())
        && positivity.as_ref().is_none_or(|p| p.passed());

    let mut written = None;
    if let (Some(path), Some(p)) = (&args.out, &product) {
        write_file(path, &p.to_json_string())?;
        written = Some(path.display().to_string());
    }
    // without --out and --check the product itself is the output
    if args.out.is_none() && !args.check {
        let p = product.as_ref().expect("materialized when not checking");
        let mut text = p.to_json_string();
        text.push('\n');
        return Ok(Outcome { text, passed });
    }
    let text = if cfg.json {
        to_json(&ComposeOutput {
            tolerances: *tol,
            dim: product.as_ref().map(|p| p.dim()),
            written,
            composability,
            positivity,
        })
    } else {
        let mut s = String::new();
        if let Some(p) = &product {
            let _ = writeln!(s, "product with {} histories", p.dim());
            s.push_str(&describe_matrix(p.matrix()));
        }
        if let Some(w) = &written {
            let _ = writeln!(s, "written to {w}");
        }
        if let Some(c) = &composability {
            let _ = write!(
                s,
                "composability n={}: {:?} ({:?})",
                c.n, c.verdict, c.strategy
            );
            if let (Some(w), Some(v)) = (&c.witness_indices, c.witness_value) {
                let _ = write!(s, ", witness {w:?} with value {v:.9e}");
            }
            if let Some(bt) = &c.witness_block {
                let _ = write!(s, ", block type {bt:?}");
            }
            s.push('\n');
        }
        if let Some(p) = &positivity {
            let _ = writeln!(s, "weak positivity: {}", describe_positivity(p));
        }
        s.push_str(&describe_tolerances(tol));
        s
    };
    Ok(Outcome { text, passed })
}

fn cmd_lemma1(n: usize, lambda: Option<f64>, eps: Option<f64>, cfg: &RunConfig) -> Result<Outcome> {
    let r = run_lemma1(n, lambda, eps, &cfg.opts)?;
    let text = if cfg.json {
        to_json(&r)
    } else {
        describe_lemma1(&r)
    };
    Ok(Outcome {
        text,
        passed: r.lemma_holds,
    })
}

fn describe_lemma1(r: &Lemma1Report) -> String {
    let p = &r.params;
    let mut s = format!("λ = {}, ε = {:.9}, n = {}\n", p.lambda, p.epsilon, p.n);
    let _ = writeln!(s, "single copy: level {}", r.single_copy.level);
    if let Some(w) = &r.single_copy.weak_positivity {
        let _ = writeln!(s, "  weak positivity: {}", describe_positivity(w));
    }
    if let Some(sp) = &r.single_copy.strong_positivity {
        let _ = writeln!(s, "  min eigenvalue {:.9e}", sp.min_eigenvalue);
    }
    let _ = writeln!(
        s,
        "{} (blocks): {}",
        copies(p.n),
        describe_positivity(&r.n_copy_verdict)
    );
    if let Some(b) = &r.n_copy_brute_force {
        let _ = writeln!(s, "{} (full): {}", copies(p.n), describe_positivity(b));
    }
    if let Some(b) = &r.n_plus_one_brute_force {
        let _ = writeln!(s, "{} (full): {}", copies(p.n + 1), describe_positivity(b));
    }
    let _ = writeln!(
        s,
        "witness per copy: {:?} + {:?}",
        r.witness.tuples[0], r.witness.tuples[1]
    );
    if let Some(f) = r.witness_flat_indices {
        let _ = writeln!(s, "witness histories: {f:?}");
    }
    let _ = writeln!(s, "witness value: {:.9e} (closed form)", r.witness_value);
    let _ = writeln!(
        s,
        "witness value: {:.9e} (copy by copy)",
        r.witness_value_numeric
    );
    if let Some(v) = r.witness_value_dense {
        let _ = writeln!(s, "witness value: {v:.9e} (dense)");
    }
    let _ = writeln!(s, "n copies compose, n + 1 do not: {}", r.lemma_holds);
    s.push_str(&describe_tolerances(&r.tolerances));
    s
}

/// Bare matrix: `dim` and row-major `[re, im]` entries; DF files parse too.
#[derive(Debug, Deserialize)]
struct MatrixJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

fn cmd_maximality(input: &Path, pnn: bool, cfg: &RunConfig) -> Result<Outcome> {
    if pnn {
        let m: MatrixJson = parse(&read(input)?, "matrix file")?;
        let m = ComplexMatrix::new(
            m.dim,
            m.entries.iter().map(|&[r, i]| C64::new(r, i)).collect(),
        )?;
        let r = pnn_violation_search(&m, &cfg.opts)?;
        let text = if cfg.json {
            to_json(&r)
        } else {
            describe_pnn(&r)
        };
        return Ok(Outcome {
            text,
            passed: r.violation.is_some(),
        });
    }
    let df = load_df(input, &cfg.opts.tol)?;
    let r = verify_lemma2(&df, &cfg.opts)?;
    let text = if cfg.json {
        to_json(&r)
    } else {
        describe_lemma2(&r)
    };
    Ok(Outcome {
        text,
        passed: r.matched && r.violated,
    })
}

fn describe_lemma2(r: &Lemma2Report) -> String {
    let mut s = format!(
        "input dim {}, min eigenvalue {:.9e}\n",
        r.input_dim, r.min_eigenvalue
    );
    let v: Vec<String> = r.v.iter().map(|&z| fmt_c(z)).collect();
    let _ = writeln!(s, "eigenvector: [{}]", v.join(", "));
    let _ = writeln!(
        s,
        "partner dim {}, product dim {}",
        r.partner.dim, r.product_dim
    );
    let _ = writeln!(s, "witness histories: {:?}", r.witness);
    let _ = writeln!(s, "<w|D⊗D'|w> = {:.12e}", r.lhs);
    let _ = writeln!(s, "(1/m)<v|D|v> = {:.12e}", r.rhs);
    let _ = writeln!(
        s,
        "identity holds: {}, positivity violated: {}",
        r.matched, r.violated
    );
    let _ = writeln!(
        s,
        "witness check: {}",
        describe_positivity(&r.witness_check)
    );
    if let Some(b) = &r.block_check {
        let _ = writeln!(s, "block check: {}", describe_positivity(b));
    }
    s.push_str(&describe_tolerances(&r.tolerances));
    s
}

fn describe_pnn(r: &PnnSearchReport) -> String {
    let mut s = match &r.violation {
        Some(v) => format!(
            "violation with partner [[1, {}], [{}, {}]]: witness {:?}, value {:.9e}\n",
            v.t, v.t, v.s, v.witness, v.value
        ),
        None => "no violation found on the grid\n".to_string(),
    };
    let _ = writeln!(
        s,
        "{} vectors checked{}",
        r.vectors_checked,
        if r.budget_exhausted {
            " (budget exhausted)"
        } else {
            ""
        }
    );
    s.push_str(&describe_tolerances(&r.tolerances));
    s
}

fn cmd_bell(df: &Path, behavior: &Path, mode: Mode, cfg: &RunConfig) -> Result<Outcome> {
    let tol = &cfg.opts.tol;
    let d = load_df(df, tol)?;
    let beh: Behavior = parse(&read(behavior)?, "behavior file")?;
    let r = check_behavior_consistency(&d, &beh, mode.into(), tol)?;
    let text = if cfg.json {
        to_json(&r)
    } else {
        describe_bell(&r)
    };
    Ok(Outcome {
        text,
        passed: r.passed,
    })
}

fn describe_bell(r: &BellReport) -> String {
    let failed = r.partitions.iter().filter(|p| !p.passed).count();
    let mut s = format!(
        "{} partitions checked in {:?} mode, {} failed, worst deviation {:.3e}\n",
        r.partitions.len(),
        r.mode,
        failed,
        r.worst_deviation
    );
    for p in r.partitions.iter().filter(|p| !p.passed) {
        let _ = writeln!(
            s,
            "  {:?}: cross term {:.3e}, probability deviation {:.3e}",
            p.spec, p.max_off_diagonal, p.max_probability_deviation
        );
    }
    s.push_str(&describe_tolerances(&r.tolerances));
    s
}

/// Parses `[x, y, ...]` or `[[re, im], ...]`.
fn parse_vector(text: &str) -> Result<Vec<C64>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Real(f64),
        Complex([f64; 2]),
    }
    let entries: Vec<Entry> = parse(text, "vector")?;
    Ok(entries
        .into_iter()
        .map(|e| match e {
            Entry::Real(r) => C64::new(r, 0.0),
            Entry::Complex([r, i]) => C64::new(r, i),
        })
        .collect())
}

fn cmd_gen(args: &GenArgs, cfg: &RunConfig) -> Result<Outcome> {
    let tol = &cfg.opts.tol;
    let need = |name: &str| {
        Error::InvalidParameter(format!("gen {:?} needs --{name}", args.kind).to_lowercase())
    };
    let load_model = || -> Result<QuantumModel> {
        let path = args.model.as_deref().ok_or_else(|| need("model"))?;
        let json: QuantumModelJson = parse(&read(path)?, "model file")?;
        QuantumModel::from_json(&json, tol)
    };
    let mut text = match args.kind {
        GenKind::Lemma1 => {
            let lambda = args.lambda.ok_or_else(|| need("lambda"))?;
            let eps = args.eps.unwrap_or_else(|| lemma1_epsilon(lambda, args.n));
            lemma1_df(lambda, eps, tol)?.to_json_string()
        }
        GenKind::Dv => {
            let v = parse_vector(args.v.as_deref().ok_or_else(|| need("v"))?)?;
            dv_family(&v, tol)?.to_json_string()
        }
        GenKind::Classical => {
            let p: Vec<f64> = parse(args.p.as_deref().ok_or_else(|| need("p"))?, "probabilities")?;
            if let Some(x) = p.iter().find(|&&x| x.is_nan() || x < -tol.pos) {
                return Err(Error::InvalidParameter(format!(
                    "probability {x} is negative"
                )));
            }
            DecoherenceFunctional::classical(&p, tol)?.to_json_string()
        }
        GenKind::Quantum => quantum_df(&load_model()?, DEFAULT_DIM_CAP, tol)?.to_json_string(),
        GenKind::Behavior => {
            serde_json::to_string(&Behavior::from_model(&load_model()?, tol)?).expect("serializes")
        }
        GenKind::Model => {
            let model = random_quantum_model(
                &mut seeded(args.seed),
                args.dim_a,
                args.dim_b,
                args.settings,
                tol,
            )?;
            serde_json::to_string(&model.to_json()).expect("serializes")
        }
    };
    text.push('\n');
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            let note = if cfg.json {
                to_json(&serde_json::json!({ "written": path.display().to_string() }))
            } else {
                format!("written to {}\n", path.display())
            };
            Ok(Outcome {
                text: note,
                passed: true,
            })
        }
        None => Ok(Outcome { text, passed: true }),
    }
}
