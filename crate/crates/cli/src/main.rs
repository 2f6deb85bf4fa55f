use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use selfnorm::table::{self, format_sig6, CSV_HEADER};
use selfnorm::verify::run_verify;
use selfnorm::*;

/// Tail probabilities of self-normalized sums and Student's t-statistic.
#[derive(Parser, Debug)]
#[command(name = "selfnorm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One tail probability P(X̄/V̄ₙ ≥ b) or P(Tₙ ≥ t).
    Tail(TailArgs),
    /// Comparison table over a grid of b.
    Table(TableArgs),
    /// Monte Carlo estimate.
    Mc(McArgs),
    /// Structural checks of the solver for one distribution.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct DistArgs {
    /// normal, exp, t2, cauchy or file:<path>
    #[arg(long)]
    dist: String,
    /// Sample size.
    #[arg(long, default_value_t = 5)]
    n: usize,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Threshold {
    /// Threshold on X̄/V̄ₙ.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Threshold on the t-statistic.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
}

#[derive(Args, Debug)]
struct McFlags {
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the simulation; does not affect results.
    #[arg(long)]
    workers: Option<usize>,
}

impl McFlags {
    fn config(&self) -> McConfig {
        McConfig {
            reps: self.reps,
            seed: self.seed,
            workers: self.workers,
            ..McConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct TailArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[command(flatten)]
    threshold: Threshold,
    /// saddle, normal, edgeworth, ld or mc
    #[arg(long, default_value = "saddle")]
    method: String,
    #[command(flatten)]
    mc: McFlags,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    dist: DistArgs,
    /// start:stop:step
    #[arg(long = "b-grid")]
    b_grid: String,
    /// Comma-separated methods.
    #[arg(long, default_value = "mc,saddle,normal")]
    methods: String,
    #[command(flatten)]
    mc: McFlags,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[command(flatten)]
    threshold: Threshold,
    #[command(flatten)]
    mc: McFlags,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// normal, exp, t2, cauchy or file:<path>
    #[arg(long)]
    dist: String,
    #[arg(long = "b-grid", default_value = "0.1:0.9:0.1")]
    b_grid: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Unwritable(PathBuf, io::Error),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Lib(e) if e.is_convergence_failure() => 3,
            Failure::Lib(_) => 2,
            Failure::Unwritable(..) => 73,
            Failure::Verify => 1,
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn load_dist(spec: &str) -> std::result::Result<DistributionModel, Failure> {
    if let Some(path) = spec.strip_prefix("file:") {
        return Ok(DistributionModel::from_spec_file(Path::new(path))?);
    }
    make_builtin(spec).map_err(|e| Failure::Usage(e.to_string()))
}

fn check_n(n: usize) -> CliResult {
    if n < 2 {
        return Err(Failure::Usage(format!("--n must be at least 2, got {n}")));
    }
    Ok(())
}

fn parse_grid(spec: &str) -> std::result::Result<Vec<f64>, Failure> {
    table::parse_grid(spec).map_err(|e| Failure::Usage(e.to_string()))
}

fn parse_method(s: &str) -> std::result::Result<Method, Failure> {
    s.parse().map_err(|e: Error| Failure::Usage(e.to_string()))
}

fn write_stdout(text: &str) -> CliResult {
    let mut out = io::stdout().lock();
    // a closed pipe is not an error worth reporting
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn run_tail(args: TailArgs) -> CliResult {
    check_n(args.dist.n)?;
    let dist = load_dist(&args.dist.dist)?;
    let method = parse_method(&args.method)?;
    let opts = TailOptions {
        quadrature: QuadratureConfig::default(),
        monte_carlo: args.mc.config(),
    };
    let n = args.dist.n;
    let est = match (args.threshold.b, args.threshold.t) {
        (Some(b), _) => upper_tail(&dist, n, b, method, &opts)?,
        (None, Some(t)) => student_t_upper_tail(&dist, n, t, method, &opts)?,
        (None, None) => unreachable!("clap enforces one threshold"),
    };
    if args.json {
        let mut v = serde_json::to_value(&est).expect("serializable");
        v["distribution"] = dist.name().into();
        if let Some(t) = args.threshold.t {
            v["t"] = t.into();
        }
        return write_stdout(&to_json(&v));
    }
    let mut line = format!("probability={} method={} b={} n={}", format_sig6(est.probability), est.method, format_sig6(est.b), n);
    if let Some(t) = args.threshold.t {
        line += &format!(" t={t}");
    }
    if let Some(mc) = &est.monte_carlo {
        line += &format!(" std_err={} seed={} reps={}", format_sig6(mc.std_err), mc.seed, mc.reps);
    }
    if !est.warnings.is_empty() {
        let w: Vec<String> = est.warnings.iter().map(|w| serde_json::to_value(w).unwrap().as_str().unwrap().to_string()).collect();
        line += &format!(" warnings={}", w.join(","));
    }
    write_stdout(&(line + "\n"))
}

fn run_table(args: TableArgs) -> CliResult {
    check_n(args.dist.n)?;
    let dist = load_dist(&args.dist.dist)?;
    let grid = parse_grid(&args.b_grid)?;
    let methods: Vec<Method> = args.methods.split(',').filter(|s| !s.trim().is_empty()).map(parse_method).collect::<std::result::Result<_, _>>()?;
    if methods.is_empty() {
        return Err(Failure::Usage("--methods is empty".into()));
    }
    // fail on the output path before doing any work
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Unwritable(p.clone(), e))?),
        None => Box::new(io::stdout()),
    };
    let opts = TailOptions {
        quadrature: QuadratureConfig::default(),
        monte_carlo: args.mc.config(),
    };
    let rows = build_table(&dist, args.dist.n, &grid, &methods, &opts)?;
    if methods.contains(&Method::MonteCarlo) {
        eprintln!(
            "# dist={} n={} seed={} reps={} generator={}",
            dist.name(),
            args.dist.n,
            args.mc.seed,
            args.mc.reps,
            selfnorm::rng::GENERATOR
        );
    }
    let write_err = |e: io::Error| match &args.out {
        Some(p) => Failure::Unwritable(p.clone(), e),
        None => Failure::Unwritable(PathBuf::from("<stdout>"), e),
    };
    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            let csv_err = |e: csv::Error| write_err(io::Error::other(e.to_string()));
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &rows {
                w.write_record(r.csv_record()).map_err(csv_err)?;
            }
            w.flush().map_err(write_err)?;
        }
        Format::Json => {
            let mut sink = sink;
            sink.write_all(to_json(&rows).as_bytes()).map_err(write_err)?;
            sink.flush().map_err(write_err)?;
        }
    }
    Ok(())
}

fn run_mc(args: McArgs) -> CliResult {
    check_n(args.dist.n)?;
    let dist = load_dist(&args.dist.dist)?;
    let cfg = args.mc.config();
    let n = args.dist.n;
    let (est, label) = match (args.threshold.b, args.threshold.t) {
        (Some(b), _) => (estimate_tail(&dist, n, b, &cfg)?, format!("b={b}")),
        (None, Some(t)) => (estimate_student_t_tail(&dist, n, t, &cfg)?, format!("t={t}")),
        (None, None) => unreachable!("clap enforces one threshold"),
    };
    if args.json {
        let mut v = serde_json::to_value(est).expect("serializable");
        v["distribution"] = dist.name().into();
        v["n"] = n.into();
        match (args.threshold.b, args.threshold.t) {
            (Some(b), _) => v["b"] = b.into(),
            (_, Some(t)) => v["t"] = t.into(),
            _ => {}
        }
        return write_stdout(&to_json(&v));
    }
    write_stdout(&format!(
        "p_hat={} std_err={} ci95=[{}, {}] reps={} seed={} degenerate={} dist={} n={n} {label} generator={}\n",
        format_sig6(est.p_hat),
        format_sig6(est.std_err),
        format_sig6(est.ci95_low),
        format_sig6(est.ci95_high),
        est.reps,
        est.seed,
        est.degenerate,
        dist.name(),
        est.generator,
    ))
}

fn run_verify_cmd(args: VerifyArgs) -> CliResult {
    let dist = load_dist(&args.dist)?;
    let grid = parse_grid(&args.b_grid)?;
    if grid.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
        return Err(Failure::Usage("--b-grid values must lie in (0, 1)".into()));
    }
    let report = run_verify(&dist, &grid, args.seed, &QuadratureConfig::default());
    if args.json {
        write_stdout(&to_json(&report))?;
    } else {
        let mut text = String::new();
        for c in &report.checks {
            text += &format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        text += &format!("# dist={} seed={}\n", report.distribution, report.seed);
        write_stdout(&text)?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let result = match cli.command {
        Command::Tail(a) => run_tail(a),
        Command::Table(a) => run_table(a),
        Command::Mc(a) => run_mc(a),
        Command::Verify(a) => run_verify_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Unwritable(p, e) => eprintln!("error: cannot write {}: {e}", p.display()),
                Failure::Verify => eprintln!("error: verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
