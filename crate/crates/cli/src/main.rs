//! `ucusum`: command-line front end for the U-statistic change-point tests.
//!
//! Exit codes: 0 on success, 2 on data or configuration errors, 3 when the
//! long-run variance estimate is degenerate.

mod input;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ucusum::mcsim::{trajectory_csv, trajectory_rows};
use ucusum::{
    analyze, builtin_kernel, theta_mc, Bandwidth, BuiltinKernel, DistSpec, DriftSpec, Error,
    LrvConfig, LrvVariant, Method, Study, TestReport, TheoryReport, ThetaTriple,
};

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DegenerateVariance { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ucusum",
    version,
    about = "U-statistic CUSUM change-point tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the first-vs-full and/or first-vs-last test on a CSV series.
    Test(TestArgs),
    /// Emit the scaled difference processes of a CSV series as CSV.
    Trajectory(TrajectoryArgs),
    /// Report the eccentricity triple, power ranking and drift limits.
    Theory(TheoryArgs),
    /// Run a Monte Carlo power study described by a JSON file.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fvf,
    Fvl,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Windowed,
    #[value(name = "half_lag_zero")]
    HalfLagZero,
}

#[derive(Args)]
struct LrvArgs {
    /// Bartlett bandwidth: a positive number or `auto` for n^(1/3).
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    bandwidth: Bandwidth,
    /// Variance formula applied to the projection.
    #[arg(long, value_enum, default_value = "windowed")]
    variant: VariantArg,
}

impl LrvArgs {
    fn config(&self) -> LrvConfig {
        LrvConfig::bartlett(self.bandwidth).with_variant(match self.variant {
            VariantArg::Windowed => LrvVariant::Windowed,
            VariantArg::HalfLagZero => LrvVariant::HalfLagZero,
        })
    }
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s == "auto" {
        return Ok(Bandwidth::CUBE_ROOT);
    }
    match s.parse::<f64>() {
        Ok(b) if b > 0.0 && b.is_finite() => Ok(Bandwidth::Fixed(b)),
        _ => Err(format!("expected a positive number or `auto`, got `{s}`")),
    }
}

fn parse_kernel(s: &str) -> Result<BuiltinKernel, String> {
    builtin_kernel(s).map_err(|e| e.to_string())
}

fn parse_dist(s: &str) -> Result<DistSpec, String> {
    s.parse::<DistSpec>().map_err(|e| e.to_string())
}

fn parse_triple(s: &str) -> Result<ThetaTriple, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{p}`"))
        })
        .collect::<Result<_, _>>()?;
    match v[..] {
        [f, g, fg] => Ok(ThetaTriple::new(f, g, fg)),
        _ => Err(format!("expected theta_f,theta_g,theta_fg, got `{s}`")),
    }
}

#[derive(Args)]
struct TestArgs {
    /// CSV file with one or two numeric columns; `-` reads standard input.
    #[arg(long)]
    input: String,
    #[arg(long, default_value = "gmd", value_parser = parse_kernel)]
    kernel: BuiltinKernel,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[command(flatten)]
    lrv: LrvArgs,
    /// JSON output (the default).
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Human-readable output.
    #[arg(long)]
    text: bool,
}

/// Drift overlay source for `trajectory`.
#[derive(Args)]
struct OverlayArgs {
    /// Change fraction for the drift overlay.
    #[arg(long)]
    tau_star: Option<f64>,
    /// Explicit `theta_f,theta_g,theta_fg`.
    #[arg(long, value_parser = parse_triple, conflicts_with_all = ["before", "after"])]
    theta: Option<ThetaTriple>,
    /// Pre-change law, e.g. `normal:0,1`.
    #[arg(long, value_parser = parse_dist, requires = "after")]
    before: Option<DistSpec>,
    /// Post-change law.
    #[arg(long, value_parser = parse_dist, requires = "before")]
    after: Option<DistSpec>,
    /// Monte Carlo draws for the triple when laws are given.
    #[arg(long, default_value_t = 1_000_000)]
    mc: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[arg(long)]
    input: String,
    #[arg(long, default_value = "gmd", value_parser = parse_kernel)]
    kernel: BuiltinKernel,
    #[command(flatten)]
    overlay: OverlayArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value = "gmd", value_parser = parse_kernel)]
    kernel: BuiltinKernel,
    #[arg(long, value_parser = parse_dist)]
    before: DistSpec,
    #[arg(long, value_parser = parse_dist)]
    after: DistSpec,
    /// Monte Carlo draws for each functional.
    #[arg(long, default_value_t = 1_000_000)]
    mc: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Change fraction; enables the location checks and drift grid.
    #[arg(long)]
    tau_star: Option<f64>,
    /// Number of drift grid points (needs `--tau-star`).
    #[arg(long, default_value_t = 0)]
    grid: usize,
    /// Also write the drift grid as CSV `t,psi1,psi2`.
    #[arg(long, requires = "tau_star")]
    grid_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Study description in JSON.
    #[arg(long)]
    config: PathBuf,
    /// CSV output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the aligned text table to standard output.
    #[arg(long)]
    text: bool,
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_text(r: &TestReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} ({})", r.method, r.method.short());
    let _ = writeln!(s, "  statistic  {:.6}", r.statistic);
    let _ = writeln!(s, "  p-value    {:.6}", r.p_value);
    let _ = writeln!(
        s,
        "  location   k = {} of {} (tau = {:.4}){}",
        r.k_hat,
        r.n,
        r.tau_hat,
        if r.no_signal { ", no signal" } else { "" }
    );
    let _ = writeln!(
        s,
        "  variance   {:.6} ({}, b = {}, {})",
        r.sigma2,
        r.kernel,
        r.lrv_bandwidth.label(),
        match r.lrv_variant {
            LrvVariant::Windowed => "windowed",
            LrvVariant::HalfLagZero => "half_lag_zero",
        }
    );
    s
}

fn cmd_test(args: &TestArgs) -> Result<(), Failure> {
    let series = input::read_series(&args.input)?;
    let cfg = args.lrv.config();
    let analysis = analyze(&series, &args.kernel, &cfg)?;
    let methods: &[Method] = match args.method {
        MethodArg::Fvf => &[Method::FirstVsFull],
        MethodArg::Fvl => &[Method::FirstVsLast],
        MethodArg::Both => &[Method::FirstVsFull, Method::FirstVsLast],
    };
    let reports = methods
        .iter()
        .map(|m| analysis.report(&args.kernel, &cfg, *m))
        .collect::<Result<Vec<_>, _>>()?;
    if args.text {
        let body: Vec<String> = reports.iter().map(report_text).collect();
        print!("{}", body.join("\n"));
    } else {
        let json = match &reports[..] {
            [one] => serde_json::to_string_pretty(one),
            many => serde_json::to_string_pretty(many),
        }
        .expect("reports serialize");
        println!("{json}");
    }
    Ok(())
}

fn resolve_triple(
    kernel: BuiltinKernel,
    before: &DistSpec,
    after: &DistSpec,
    m: usize,
    seed: u64,
) -> Result<ThetaTriple, Failure> {
    let f = before.resolve(1)?;
    let g = after.resolve(1)?;
    Ok(theta_mc(&kernel, &f, &g, m, seed)?)
}

fn cmd_trajectory(args: &TrajectoryArgs) -> Result<(), Failure> {
    let series = input::read_series(&args.input)?;
    let o = &args.overlay;
    let triple = match (&o.theta, &o.before, &o.after) {
        (Some(t), _, _) => Some(*t),
        (None, Some(b), Some(a)) => Some(resolve_triple(args.kernel, b, a, o.mc, o.seed)?),
        _ => None,
    };
    let drift = match (o.tau_star, triple) {
        (Some(tau), Some(t)) => Some(DriftSpec::new(tau, &t)?),
        (None, None) => None,
        (Some(_), None) => {
            return Err(Failure::data(
                "--tau-star needs --theta or --before/--after",
            ))
        }
        (None, Some(_)) => return Err(Failure::data("the drift overlay needs --tau-star")),
    };
    let rows = trajectory_rows(&series, &args.kernel, drift.as_ref())?;
    write_output(args.out.as_ref(), &trajectory_csv(&rows))
}

fn cmd_theory(args: &TheoryArgs) -> Result<(), Failure> {
    if args.grid > 0 && args.tau_star.is_none() {
        return Err(Failure::data("--grid needs --tau-star"));
    }
    let triple = resolve_triple(args.kernel, &args.before, &args.after, args.mc, args.seed)?;
    let points = if args.grid_csv.is_some() && args.grid == 0 {
        101
    } else {
        args.grid
    };
    let report = TheoryReport::new(args.kernel.name(), triple, args.tau_star, points)?;
    if let (Some(path), Some(grid)) = (&args.grid_csv, &report.psi_grid) {
        let mut csv = String::from("t,psi1,psi2\n");
        for p in grid {
            let _ = writeln!(csv, "{},{},{}", p.t, p.psi1, p.psi2);
        }
        write_output(Some(path), &csv)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let path = args.config.display();
    let text =
        std::fs::read_to_string(&args.config).map_err(|e| Failure::data(format!("{path}: {e}")))?;
    let study: Study = serde_json::from_str(&text)
        .map_err(|e| Failure::data(format!("{path}: invalid study: {e}")))?;
    let table = study
        .run()
        .map_err(|e| Failure::data(format!("{path}: {e}")))?;
    if args.text {
        print!("{}", table.to_text());
    }
    if args.out.is_some() || !args.text {
        write_output(args.out.as_ref(), &table.to_csv())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Trajectory(a) => cmd_trajectory(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
