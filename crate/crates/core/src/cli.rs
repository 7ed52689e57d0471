//! The `busyq` command line.
//!
//! Output is CSV (default) or JSON with numbers printed to 12 significant
//! digits. Errors go to stderr as `{"code", "path", "message"}` JSON; the
//! exit status is 1 for invalid input and 2 for numerical failures.
//! `BUSYQ_THREADS` caps the number of simulation threads.

use std::ffi::OsString;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::busy_law::{busy_df, LawMethod};
use crate::busy_transform::{mean_busy, BusyTransform, TransformMethod};
use crate::distributions::QueueModel;
use crate::error::{Error, Result};
use crate::expr::{RationalTransform, RealExpr};
use crate::laplace_inversion::{invert_df, InversionConfig, InversionMethod, OverS, TransformFn};
use crate::moments::{busy_moments_with, MomentMethod};
use crate::network::{sojourn_moments, solve_traffic, NetworkModel, SojournTransform};
use crate::numeric::parse_grid;
use crate::schema::{load_network, load_queue};
use crate::simulator::{simulate_network, simulate_queue, SimConfig};
use crate::tail_analysis::{check_feasibility, recover_service_tail, FeasibilityProbe, TailTransform};
use crate::verify::run_checks;

#[derive(Debug, Parser)]
#[command(
    name = "busyq",
    version,
    about = "Busy periods of M|G|∞ queues and sojourn times in infinite-server networks"
)]
pub struct Cli {
    /// Write results to this file instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct InversionArgs {
    /// gaver-stehfest or talbot; defaults to talbot when the transform allows it.
    #[arg(long)]
    invert_method: Option<String>,
    /// Gaver–Stehfest terms (even, ≤ 20) or Talbot nodes.
    #[arg(long)]
    invert_order: Option<usize>,
}

impl InversionArgs {
    fn config(&self, f: &dyn TransformFn) -> Result<InversionConfig> {
        let method = match &self.invert_method {
            None => InversionConfig::default_for(f).method,
            Some(m) => m
                .parse::<InversionMethod>()
                .map_err(|e| Error::invalid("INVALID_ARGUMENT", "--invert-method", e.to_string()))?,
        };
        let mut cfg = match method {
            InversionMethod::GaverStehfest => InversionConfig::gaver_stehfest(14),
            InversionMethod::Talbot => InversionConfig::talbot(32),
        };
        if let Some(order) = self.invert_order {
            cfg.order = order;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn explicit(&self) -> bool {
        self.invert_method.is_some() || self.invert_order.is_some()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Busy-period transform B̄(s) on a grid of real s ≥ 0.
    Transform {
        #[arg(long)]
        model: PathBuf,
        /// start:stop:step
        #[arg(long)]
        s_grid: String,
        /// closed or quadrature; closed is used whenever it exists.
        #[arg(long)]
        method: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
    },
    /// Raw busy-period moments E[Bⁿ] for n = 1..N.
    Moments {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// auto, recursion or closed.
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long, default_value_t = crate::moments::DEFAULT_MOMENT_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
    },
    /// Busy-period distribution function on a time grid.
    BusyLaw {
        #[arg(long)]
        model: PathBuf,
        /// start:stop:step
        #[arg(long)]
        grid: String,
        /// auto, closed, series or inversion.
        #[arg(long, default_value = "auto")]
        method: String,
        #[command(flatten)]
        inversion: InversionArgs,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
    },
    /// Service-law recovery and feasibility checks.
    #[command(subcommand)]
    Tail(TailCommand),
    /// Open networks of infinite-server nodes.
    #[command(subcommand)]
    Network(NetworkCommand),
    /// Discrete-event simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Quick cross-module self-check; prints a pass/fail table.
    Verify,
}

#[derive(Debug, Subcommand)]
enum TailCommand {
    /// Recover the service tail 1 − G from a busy-tail transform H̄(s).
    Recover {
        /// rational:"<poly>/<poly>" in s.
        #[arg(long)]
        hbar: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        inversion: InversionArgs,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
    },
    /// Check whether a(t) = (1/t)∫₀ᵗβ can come from a valid service law.
    Check {
        /// Expression in t.
        #[arg(long)]
        a: String,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        grid: String,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
    },
}

#[derive(Debug, Subcommand)]
enum NetworkCommand {
    /// Sojourn-time transform, moments, d.f. or traffic rates.
    Solve {
        #[arg(long)]
        net: PathBuf,
        /// Evaluate Ḡ(s) on start:stop:step.
        #[arg(long, group = "mode")]
        s_grid: Option<String>,
        /// E[S] and E[S²].
        #[arg(long, group = "mode")]
        moments: bool,
        /// Sojourn d.f. on --grid.
        #[arg(long, group = "mode", requires = "grid")]
        invert: bool,
        /// Total arrival rate at each node.
        #[arg(long, group = "mode")]
        traffic: bool,
        #[arg(long)]
        grid: Option<String>,
        #[command(flatten)]
        inversion: InversionArgs,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
    },
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent streams; results do not depend on the thread count.
    #[arg(long, default_value_t = 8)]
    replications: usize,
    /// Print summary statistics instead of every sample.
    #[arg(long)]
    summary: bool,
    #[arg(long, value_enum, default_value = "csv")]
    out: Format,
}

#[derive(Debug, Subcommand)]
enum SimCommand {
    /// Busy periods of an M|G|∞ queue.
    Queue {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, group = "target")]
        periods: Option<usize>,
        #[arg(long, group = "target")]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        warmup: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Sojourn times of customers in a network.
    Network {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        customers: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
}

/// Formats with 12 significant digits, fixed notation for moderate magnitudes.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..12).contains(&magnitude) {
        let decimals = (11 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => format_number(*x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Rows plus optional summary fields. In CSV the summary goes to stderr.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<(&'static str, Cell)>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn pairs(columns: [&'static str; 2], xs: &[f64], ys: &[f64]) -> Self {
        let mut t = Table::new(columns.to_vec());
        t.rows = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| vec![Cell::Num(x), Cell::Num(y)])
            .collect();
        t
    }

    fn render(&self, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", line.join(","))?;
                }
                for (k, v) in &self.summary {
                    writeln!(err, "# {k}: {}", v.csv())?;
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut top = Map::new();
                for (k, v) in &self.summary {
                    top.insert(k.to_string(), v.json());
                }
                top.insert("rows".into(), Value::Array(rows));
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&Value::Object(top)).expect("serializable")
                )?;
            }
        }
        Ok(())
    }
}

fn grid_arg(spec: &str, flag: &'static str) -> Result<Vec<f64>> {
    parse_grid(spec).ok_or_else(|| {
        Error::invalid(
            "INVALID_GRID",
            flag,
            format!("expected start:stop:step with step > 0, got {spec:?}"),
        )
    })
}

fn file_error<'a>(flag: &'static str, path: &'a Path) -> impl Fn(Error) -> Error + 'a {
    move |e| match e {
        Error::Io(io) => Error::invalid("UNREADABLE_FILE", flag, format!("{}: {io}", path.display())),
        other => other,
    }
}

fn queue_arg(path: &Path) -> Result<QueueModel> {
    load_queue(path).map_err(file_error("--model", path))
}

fn network_arg(path: &Path) -> Result<NetworkModel> {
    load_network(path).map_err(file_error("--net", path))
}

fn parsed<T: std::str::FromStr<Err = Error>>(value: &str, flag: &'static str) -> Result<T> {
    value
        .parse()
        .map_err(|e: Error| Error::invalid("INVALID_ARGUMENT", flag, e.to_string()))
}

/// Thread count from `BUSYQ_THREADS`, else the machine's parallelism.
pub fn thread_budget() -> usize {
    std::env::var("BUSYQ_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, NonZeroUsize::get))
}

fn execute(cmd: Command, err: &mut dyn Write) -> Result<(Table, Format)> {
    match cmd {
        Command::Transform {
            model,
            s_grid,
            method,
            out,
        } => {
            let queue = queue_arg(&model)?;
            let s = grid_arg(&s_grid, "--s-grid")?;
            let bt = match method.as_deref() {
                None => BusyTransform::new(queue)?,
                Some("closed") => BusyTransform::with_method(queue, TransformMethod::ClosedForm)?,
                Some("quadrature") => BusyTransform::with_method(queue, TransformMethod::Quadrature)?,
                Some(other) => {
                    return Err(Error::invalid(
                        "INVALID_ARGUMENT",
                        "--method",
                        format!("expected closed or quadrature, got {other:?}"),
                    ))
                }
            };
            let values = s.iter().map(|&x| bt.eval_real(x)).collect::<Result<Vec<_>>>()?;
            Ok((Table::pairs(["s", "value"], &s, &values), out))
        }
        Command::Moments {
            model,
            n,
            method,
            cap,
            out,
        } => {
            let queue = queue_arg(&model)?;
            let method: MomentMethod = parsed(&method, "--method")?;
            let ws = busy_moments_with(&queue, n, method, cap)?;
            for w in &ws.warnings {
                writeln!(err, "# warning: {w}")?;
            }
            let mut t = Table::new(vec!["n", "value"]);
            t.rows = ws
                .moments
                .iter()
                .enumerate()
                .map(|(i, &m)| vec![Cell::Int(i as u64 + 1), Cell::Num(m)])
                .collect();
            Ok((t, out))
        }
        Command::BusyLaw {
            model,
            grid,
            method,
            inversion,
            out,
        } => {
            let queue = queue_arg(&model)?;
            let times = grid_arg(&grid, "--grid")?;
            let mut method: LawMethod = parsed(&method, "--method")?;
            if method == LawMethod::Auto && inversion.explicit() {
                method = LawMethod::Inversion;
            }
            let cfg = if method == LawMethod::Inversion {
                if times.iter().any(|&t| t <= 0.0) {
                    return Err(Error::invalid("INVALID_GRID", "--grid", "inversion needs t > 0"));
                }
                Some(inversion.config(&OverS(BusyTransform::new(queue.clone())?))?)
            } else {
                None
            };
            let values = busy_df(&queue, &times, method, cfg)?;
            Ok((Table::pairs(["t", "value"], &times, &values), out))
        }
        Command::Tail(TailCommand::Recover {
            hbar,
            lambda,
            rho,
            grid,
            inversion,
            out,
        }) => {
            let h =
                RationalTransform::parse(&hbar).map_err(|e| Error::invalid("EXPRESSION", "--hbar", e.to_string()))?;
            let times = grid_arg(&grid, "--grid")?;
            let cfg = inversion.config(&h)?;
            let tt = TailTransform::new(Arc::new(h), lambda, rho)?;
            let values = recover_service_tail(&tt, &times, &cfg)?;
            Ok((Table::pairs(["t", "value"], &times, &values), out))
        }
        Command::Tail(TailCommand::Check { a, rho, grid, out }) => {
            let expr = RealExpr::parse(&a, "t").map_err(|e| Error::invalid("EXPRESSION", "--a", e.to_string()))?;
            let times = grid_arg(&grid, "--grid")?;
            let probe = FeasibilityProbe::new(Arc::new(move |t| expr.eval(t)), rho, times);
            let report = check_feasibility(&probe)?;
            let mut t = Table::new(vec!["t", "a", "expression", "positive"]);
            t.rows = report
                .points
                .iter()
                .map(|p| {
                    vec![
                        Cell::Num(p.t),
                        Cell::Num(p.a),
                        Cell::Num(p.expression),
                        Cell::Text(p.positive().to_string()),
                    ]
                })
                .collect();
            t.summary = vec![
                ("verdict", Cell::Text(report.verdict.to_string())),
                ("limit_estimate", Cell::Num(report.limit_estimate)),
                ("limit_ok", Cell::Text(report.limit_ok.to_string())),
            ];
            if let Some(tf) = report.first_failure() {
                t.summary.push(("first_failure", Cell::Num(tf)));
            }
            Ok((t, out))
        }
        Command::Network(NetworkCommand::Solve {
            net,
            s_grid,
            moments,
            invert,
            traffic,
            grid,
            inversion,
            out,
        }) => {
            let net = network_arg(&net)?;
            if traffic {
                let rates = solve_traffic(&net)?;
                let mut t = Table::new(vec!["node", "rate"]);
                t.rows = rates
                    .iter()
                    .enumerate()
                    .map(|(j, &g)| vec![Cell::Int(j as u64), Cell::Num(g)])
                    .collect();
                return Ok((t, out));
            }
            let st = SojournTransform::new(net);
            if moments {
                let m = sojourn_moments(&st, 2)?;
                let mut t = Table::new(vec!["quantity", "value"]);
                t.rows = vec![
                    vec![Cell::Text("mean".into()), Cell::Num(m.mean)],
                    vec![
                        Cell::Text("second_moment".into()),
                        Cell::Num(m.second.unwrap_or(f64::NAN)),
                    ],
                    vec![Cell::Text("visits_mean".into()), Cell::Num(m.visits_mean)],
                ];
                return Ok((t, out));
            }
            if invert {
                let times = grid_arg(grid.as_deref().unwrap_or_default(), "--grid")?;
                if times.iter().any(|&t| t <= 0.0) {
                    return Err(Error::invalid("INVALID_GRID", "--grid", "inversion needs t > 0"));
                }
                let f = OverS(st);
                let cfg = inversion.config(&f)?;
                let inv = invert_df(&f, &times, &cfg)?;
                return Ok((Table::pairs(["t", "value"], &times, &inv.values), out));
            }
            let Some(spec) = s_grid else {
                return Err(Error::invalid(
                    "MISSING_ARGUMENT",
                    "--s-grid",
                    "one of --s-grid, --moments, --invert, --traffic is required",
                ));
            };
            let s = grid_arg(&spec, "--s-grid")?;
            let values = s.iter().map(|&x| st.eval_real(x)).collect::<Result<Vec<_>>>()?;
            Ok((Table::pairs(["s", "value"], &s, &values), out))
        }
        Command::Sim(SimCommand::Queue {
            model,
            periods,
            horizon,
            warmup,
            sim,
        }) => {
            let queue = queue_arg(&model)?;
            let mut cfg = match (periods, horizon) {
                (_, Some(h)) => SimConfig::horizon(sim.seed, h),
                (p, None) => SimConfig::periods(sim.seed, p.unwrap_or(100_000)),
            }
            .with_replications(sim.replications)
            .with_threads(thread_budget());
            cfg.warmup = warmup;
            let sample = simulate_queue(&queue, &cfg)?;
            let t = if sim.summary {
                let mut t = Table::new(vec!["quantity", "value"]);
                t.rows = vec![
                    vec![Cell::Text("periods".into()), Cell::Int(sample.periods() as u64)],
                    vec![Cell::Text("mean".into()), Cell::Num(sample.mean())],
                    vec![Cell::Text("std_error".into()), Cell::Num(sample.std_error())],
                    vec![Cell::Text("analytic_mean".into()), Cell::Num(mean_busy(&queue)?)],
                ];
                t
            } else {
                let mut t = Table::new(vec!["period", "duration", "idle"]);
                t.rows = sample
                    .durations
                    .iter()
                    .zip(&sample.idle_durations)
                    .enumerate()
                    .map(|(i, (&d, &idle))| vec![Cell::Int(i as u64), Cell::Num(d), Cell::Num(idle)])
                    .collect();
                t
            };
            Ok((t, sim.out))
        }
        Command::Sim(SimCommand::Network { net, customers, sim }) => {
            let net = network_arg(&net)?;
            let cfg = SimConfig::periods(sim.seed, 1)
                .with_replications(sim.replications)
                .with_threads(thread_budget());
            let sojourns = simulate_network(&net, customers, &cfg)?;
            let t = if sim.summary {
                let n = sojourns.len() as f64;
                let mean = sojourns.iter().sum::<f64>() / n;
                let var = sojourns.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
                let mut t = Table::new(vec!["quantity", "value"]);
                t.rows = vec![
                    vec![Cell::Text("customers".into()), Cell::Int(sojourns.len() as u64)],
                    vec![Cell::Text("mean".into()), Cell::Num(mean)],
                    vec![Cell::Text("std_error".into()), Cell::Num((var / n).sqrt())],
                ];
                t
            } else {
                let mut t = Table::new(vec!["customer", "sojourn"]);
                t.rows = sojourns
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| vec![Cell::Int(i as u64), Cell::Num(x)])
                    .collect();
                t
            };
            Ok((t, sim.out))
        }
        Command::Verify => {
            let checks = run_checks(thread_budget());
            let mut t = Table::new(vec!["check", "value", "limit", "result"]);
            t.rows = checks
                .iter()
                .map(|c| {
                    vec![
                        Cell::Text(c.name.into()),
                        Cell::Num(c.value),
                        Cell::Num(c.limit),
                        Cell::Text(if c.pass { "PASS" } else { "FAIL" }.into()),
                    ]
                })
                .collect();
            let failed = checks.iter().filter(|c| !c.pass).count();
            t.summary = vec![("failed", Cell::Int(failed as u64))];
            Ok((t, Format::Csv))
        }
    }
}

fn error_json(code: &str, path: Option<&str>, message: &str) -> String {
    json!({"code": code, "path": path, "message": message}).to_string()
}

/// Runs the CLI and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = writeln!(stderr, "{}", error_json("USAGE", None, e.to_string().trim()));
            return 1;
        }
    };
    let verify = matches!(cli.command, Command::Verify);
    let result = execute(cli.command, stderr).and_then(|(table, format)| {
        let mut buf = Vec::new();
        table.render(format, &mut buf, stderr)?;
        match &cli.output {
            Some(path) => std::fs::write(path, &buf)
                .map_err(|io| Error::invalid("UNWRITABLE_FILE", "--output", format!("{}: {io}", path.display())))?,
            None => stdout.write_all(&buf)?,
        }
        Ok(verify
            && table
                .summary
                .iter()
                .any(|(k, v)| *k == "failed" && !matches!(v, Cell::Int(0))))
    });
    match result {
        Ok(false) => 0,
        Ok(true) => 2,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(e.code(), e.path(), &e.to_string()));
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(std::f64::consts::E - 1.0), "1.71828182846");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(2.0), "2.00000000000");
        assert_eq!(format_number(123456.0), "123456.000000");
        assert_eq!(format_number(1.5e-7), "1.50000000000e-7");
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["busyq", "moments"], &mut out, &mut err), 1);
        let v: Value = serde_json::from_slice(&err).unwrap();
        assert_eq!(v["code"], "USAGE");
        assert_eq!(run(["busyq", "--help"], &mut out, &mut err), 0);
    }

    #[test]
    fn bad_grid_names_the_flag() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            [
                "busyq", "tail", "check", "--a", "exp(-t)", "--rho", "1", "--grid", "1:0:1",
            ],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 1);
        let v: Value = serde_json::from_slice(&err).unwrap();
        assert_eq!(
            (v["code"].as_str(), v["path"].as_str()),
            (Some("INVALID_GRID"), Some("--grid"))
        );
    }
}
