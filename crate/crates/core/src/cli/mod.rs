//! `diqkd-cc` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numerical failure
//! (including unwritable output paths).

pub mod format;
pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::cglmp::{cglmp_value, idmax_asymptotic, idmax_closed_form, Settings};
use crate::error::Error;
use crate::keyrate::{vcrit_asymptotic, Branch, KeyRateModel, KeyRatePoint};
use crate::polytope::{locality_check, DEFAULT_STRATEGY_CAP};
use crate::quantum::{maximally_entangled_state, protocol_table};
use crate::scenario::Visibility;
use format::sig;

/// Environment variable capping the worker threads for grid evaluation.
pub const THREADS_ENV: &str = "DIQKD_CC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "diqkd-cc", version, about = "CC-attack upper bounds on DIQKD key rates")]
pub struct Cli {
    /// Entropy unit for reported key rates.
    #[arg(long, value_enum, default_value_t = Unit::Dits, global = true)]
    pub unit: Unit,
    /// Largest number of deterministic strategies an LP may enumerate.
    #[arg(long, default_value_t = DEFAULT_STRATEGY_CAP, global = true)]
    pub strategy_cap: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Dits,
    Bits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum State {
    Max,
    Cglmp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableState {
    Both,
    Max,
    Cglmp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Analytic,
    Lp,
}

fn dimension(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    if d < 2 {
        return Err(format!("d must be at least 2 (got {d})"));
    }
    Ok(d)
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("{v} is outside [0, 1]"));
    }
    Ok(v)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form and Born-rule maximal CGLMP value of the maximally entangled state.
    Idmax {
        #[arg(long, value_parser = dimension)]
        d: usize,
    },
    /// Critical visibility where the key-rate upper bound vanishes.
    Vcrit {
        #[arg(long, value_parser = dimension)]
        d: usize,
        #[arg(long, value_enum)]
        state: State,
        /// Defaults to `analytic` for `max` and `lp` for `cglmp`.
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Append a `d,state,method,vcrit` row to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Critical-visibility table over a range of dimensions.
    Table {
        #[arg(long, value_parser = dimension)]
        d_min: usize,
        #[arg(long, value_parser = dimension)]
        d_max: usize,
        #[arg(long, value_enum, default_value_t = TableState::Both)]
        state: TableState,
        /// Method for the maximally entangled column (the CGLMP column always uses LP).
        #[arg(long, value_enum, default_value_t = Method::Analytic)]
        method: Method,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Key-rate bound on a visibility grid, as CSV and optionally SVG.
    Curve {
        #[arg(long, value_parser = dimension)]
        d: usize,
        #[arg(long, value_enum)]
        state: State,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, value_parser = unit_interval)]
        v_min: f64,
        #[arg(long, value_parser = unit_interval)]
        v_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Whether the maximally entangled table mixed at a visibility is local.
    CheckLocal {
        #[arg(long, value_parser = dimension)]
        d: usize,
        #[arg(long, value_parser = unit_interval)]
        vtilde: f64,
    },
    /// Large-d limits of the maximal violation and critical visibility.
    Asymptotic,
}

/// Command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() || matches!(e, Error::Io(_)) {
            2
        } else {
            1
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn branch_for(state: State, method: Option<Method>) -> Result<Branch, Failure> {
    match (state, method) {
        (State::Max, None | Some(Method::Analytic)) => Ok(Branch::AnalyticMaxEntangled),
        (State::Max, Some(Method::Lp)) => Ok(Branch::LpMaxEntangled),
        (State::Cglmp, None | Some(Method::Lp)) => Ok(Branch::LpCglmpState),
        (State::Cglmp, Some(Method::Analytic)) => {
            Err(Failure::usage("the analytic method applies only to --state max"))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: 2,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn model(d: usize, branch: Branch, cap: u64) -> Result<KeyRateModel, Failure> {
    Ok(KeyRateModel::with_cap(d, branch, cap)?)
}

pub fn cmd_idmax(d: usize) -> Result<String, Failure> {
    let closed = idmax_closed_form(d)?;
    let born = cglmp_value(&protocol_table(&maximally_entangled_state(d))?, Settings::default())?;
    let mut out = String::new();
    let _ = writeln!(out, "d = {d}");
    let _ = writeln!(out, "I_d^max (closed form)  = {closed:.12}");
    let _ = writeln!(out, "I_d (Born rule, max)   = {born:.12}");
    let _ = writeln!(out, "difference             = {:.3e}", (closed - born).abs());
    Ok(out)
}

pub fn cmd_vcrit(
    d: usize,
    state: State,
    method: Option<Method>,
    csv: Option<&Path>,
    cap: u64,
) -> Result<String, Failure> {
    let branch = branch_for(state, method)?;
    let vc = model(d, branch, cap)?.critical_visibility()?;
    if let Some(path) = csv {
        let fresh = !path.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Failure {
                code: 2,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
        let mut row = String::new();
        if fresh {
            row.push_str("d,state,method,vcrit\n");
        }
        let _ = writeln!(
            row,
            "{d},{},{},{}",
            state_name(state),
            method_name(branch),
            sig(vc.v_crit, 12)
        );
        f.write_all(row.as_bytes()).map_err(|e| Failure {
            code: 2,
            message: format!("cannot write {}: {e}", path.display()),
        })?;
    }
    Ok(format!("{:.5}\n", vc.v_crit))
}

fn state_name(s: State) -> &'static str {
    match s {
        State::Max => "max",
        State::Cglmp => "cglmp",
    }
}

fn method_name(b: Branch) -> &'static str {
    if b.is_lp() {
        "lp"
    } else {
        "analytic"
    }
}

/// CSV text of the critical-visibility table plus stderr notes.
pub fn cmd_table(
    d_min: usize,
    d_max: usize,
    state: TableState,
    method: Method,
    cap: u64,
) -> Result<(String, Vec<String>), Failure> {
    if d_min > d_max {
        return Err(Failure::usage(format!("--d-min {d_min} exceeds --d-max {d_max}")));
    }
    let max_branch = match method {
        Method::Analytic => Branch::AnalyticMaxEntangled,
        Method::Lp => Branch::LpMaxEntangled,
    };
    let want_max = state != TableState::Cglmp;
    let want_cglmp = state != TableState::Max;

    type Row = (usize, Option<f64>, Option<f64>, Vec<String>);
    let rows: Vec<Result<Row, Failure>> = (d_min..=d_max)
        .into_par_iter()
        .map(|d| {
            let mut notes = Vec::new();
            let mut cell = |branch: Branch| -> Result<Option<f64>, Failure> {
                match KeyRateModel::with_cap(d, branch, cap).and_then(|m| m.critical_visibility()) {
                    Ok(vc) => Ok(Some(vc.v_crit)),
                    Err(Error::StrategyCap { count, cap }) => {
                        notes.push(format!(
                            "d={d}: {} skipped, {count} strategies exceed cap {cap}; method=analytic only",
                            branch.name()
                        ));
                        Ok(None)
                    }
                    Err(e) => Err(e.into()),
                }
            };
            let m = if want_max { cell(max_branch)? } else { None };
            let c = if want_cglmp { cell(Branch::LpCglmpState)? } else { None };
            Ok((d, m, c, notes))
        })
        .collect();

    let mut csv = String::from("d,vcrit_max,vcrit_cglmp\n");
    let mut notes = Vec::new();
    let show = |v: Option<f64>| v.map(|x| format!("{x:.8}")).unwrap_or_default();
    for row in rows {
        let (d, m, c, n) = row?;
        let _ = writeln!(csv, "{d},{},{}", show(m), show(c));
        notes.extend(n);
    }
    Ok((csv, notes))
}

pub fn curve_csv(points: &[KeyRatePoint], d: usize, unit: Unit) -> String {
    let (scale, suffix) = match unit {
        Unit::Dits => (1.0, ""),
        Unit::Bits => ((d as f64).log2(), "_bits"),
    };
    let mut out = format!("V,qL,H_AE{suffix},H_AB{suffix},r_ub{suffix}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sig(p.v, 12),
            sig(p.q_l, 12),
            sig(p.pa_term * scale, 12),
            sig(p.ec_term * scale, 12),
            sig(p.r_ub * scale, 12)
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_curve(
    d: usize,
    state: State,
    method: Option<Method>,
    v_min: f64,
    v_max: f64,
    steps: usize,
    csv: &Path,
    svg_out: Option<&Path>,
    unit: Unit,
    cap: u64,
) -> Result<String, Failure> {
    let branch = branch_for(state, method)?;
    if v_min >= v_max || steps < 2 {
        return Err(Failure::usage("need --v-min < --v-max and --steps >= 2"));
    }
    let points = model(d, branch, cap)?.curve(v_min, v_max, steps)?;
    write_file(csv, &curve_csv(&points, d, unit))?;
    if let Some(path) = svg_out {
        let scale = match unit {
            Unit::Dits => 1.0,
            Unit::Bits => (d as f64).log2(),
        };
        let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.v, p.r_ub * scale)).collect();
        let title = format!("CC upper bound, d = {d}, {}", branch.name());
        let y_label = match unit {
            Unit::Dits => "r_ub [dits]",
            Unit::Bits => "r_ub [bits]",
        };
        let chart = svg::LineChart {
            title: &title,
            x_label: "visibility V",
            y_label,
            points: &xy,
            zero_line: true,
        };
        write_file(path, &chart.render())?;
    }
    Ok(format!("wrote {} points to {}\n", points.len(), csv.display()))
}

pub fn cmd_check_local(d: usize, vtilde: f64, cap: u64) -> Result<String, Failure> {
    let table = protocol_table(&maximally_entangled_state(d))?.mix_with_white_noise(Visibility::new(vtilde)?);
    let check = locality_check(&table, cap)?;
    let value = cglmp_value(&table, Settings::default())?;
    Ok(format!(
        "{} (LP residual {:.3e}, CGLMP value {:.6})\n",
        if check.local { "local" } else { "nonlocal" },
        check.residual,
        value
    ))
}

pub fn cmd_asymptotic() -> String {
    let i_max = idmax_asymptotic();
    let v_crit = vcrit_asymptotic();
    format!(
        "I_inf^max  = {i_max:.3}  ({i_max:.12})\nV_crit^inf = {v_crit:.4}  ({v_crit:.12})\nI_inf^crit = {:.3}  ({:.12})\n",
        v_crit * i_max,
        v_crit * i_max
    )
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads();
    let cap = cli.strategy_cap;
    let stdout = match cli.command {
        Command::Idmax { d } => cmd_idmax(d)?,
        Command::Vcrit { d, state, method, csv } => cmd_vcrit(d, state, method, csv.as_deref(), cap)?,
        Command::Table {
            d_min,
            d_max,
            state,
            method,
            out,
        } => {
            let (csv, notes) = cmd_table(d_min, d_max, state, method, cap)?;
            for n in notes {
                eprintln!("{n}");
            }
            match out {
                Some(path) => {
                    write_file(&path, &csv)?;
                    format!("wrote {}\n", path.display())
                }
                None => csv,
            }
        }
        Command::Curve {
            d,
            state,
            method,
            v_min,
            v_max,
            steps,
            csv,
            svg,
        } => cmd_curve(
            d,
            state,
            method,
            v_min,
            v_max,
            steps,
            &csv,
            svg.as_deref(),
            cli.unit,
            cap,
        )?,
        Command::CheckLocal { d, vtilde } => cmd_check_local(d, vtilde, cap)?,
        Command::Asymptotic => cmd_asymptotic(),
    };
    print!("{stdout}");
    Ok(())
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
