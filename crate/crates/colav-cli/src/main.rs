//! `colav` command line: simulate one guidance/avoidance scenario, run the
//! 22-case encounter benchmark, compare the supervised law against the
//! velocity-obstacle baseline, and convert traces into plot-ready files.
//!
//! Every subcommand is deterministic: repeated invocations with identical
//! inputs produce byte-identical outputs (no timestamps, no randomness).
//!
//! Exit codes of `run`: 0 reached safely, 1 bad configuration or I/O,
//! 2 safety violation (closest approach under the safe distance, dominates),
//! 3 waypoint not reached.  `bench` exits 0 even when a baseline fails on
//! safety (that is a benchmark result, not an error), 1 on bad input, 3 when
//! a simulation faults.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::exit;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use colav::metrics::{metrics, CompareTable, MetricsReport};
use colav::scenario::{imazu_case, Scenario};
use colav::sim::{read_trace, simulate, write_trace, Algorithm, SimResult, TerminalStatus, TraceRow};
use colav::supervisor::{Side, SwitchingStrategy};

const EXIT_CONFIG: i32 = 1;
const EXIT_UNSAFE: i32 = 2;
const EXIT_UNREACHED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "colav",
    version,
    about = "Predefined-time waypoint guidance with a provably-safe avoidance supervisor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario; write its trace, metric summary, and
    /// unsafe-box log.
    Run(RunArgs),
    /// Run benchmark cases under one or both algorithms; write a comparison
    /// report and per-case plot data.
    Bench(BenchArgs),
    /// Run both algorithms on the selected cases and print the comparison
    /// table.
    Compare(CompareArgs),
    /// Convert a trace file into plot-ready columnar files.
    Export(ExportArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    /// Supervised predefined-time guidance.
    Proposed,
    /// Velocity-obstacle baseline.
    Vo,
}

impl AlgorithmArg {
    fn to_algorithm(self) -> Algorithm {
        match self {
            AlgorithmArg::Proposed => Algorithm::Proposed,
            AlgorithmArg::Vo => Algorithm::Vo,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum SwitchingArg {
    Binary,
    Risk,
}

#[derive(Copy, Clone, ValueEnum)]
enum SideArg {
    Starboard,
    Port,
}

/// Scenario selection plus the common overrides.
#[derive(Args)]
struct SelectArgs {
    /// Built-in benchmark case number (1-22).
    #[arg(long, value_name = "N", conflicts_with = "scenario")]
    imazu: Option<u32>,
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Override the avoidance arming strategy.
    #[arg(long, value_enum)]
    switching: Option<SwitchingArg>,
    /// Override the preferred passing side.
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    /// Override the integration step, s.
    #[arg(long, value_name = "SECONDS")]
    dt: Option<f64>,
    /// Override the simulation horizon, s.
    #[arg(long, value_name = "SECONDS")]
    horizon: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// Algorithm to simulate.
    #[arg(long, value_enum, default_value = "proposed")]
    algorithm: AlgorithmArg,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark cases to run, e.g. "1-22", "5", "1-4,8".
    #[arg(long, value_name = "RANGE", default_value = "1-22")]
    cases: String,
    /// Restrict the bench to one algorithm (default: both).
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    /// Override the avoidance arming strategy.
    #[arg(long, value_enum)]
    switching: Option<SwitchingArg>,
    /// Override the preferred passing side.
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    /// Override the integration step, s.
    #[arg(long, value_name = "SECONDS")]
    dt: Option<f64>,
    /// Override the simulation horizon, s.
    #[arg(long, value_name = "SECONDS")]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Benchmark cases to compare, e.g. "1-22", "5", "1-4,8".
    #[arg(long, value_name = "RANGE", default_value = "1-22", conflicts_with = "scenario")]
    cases: String,
    /// Compare on a scenario file instead of benchmark cases.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Override the avoidance arming strategy.
    #[arg(long, value_enum)]
    switching: Option<SwitchingArg>,
    /// Override the preferred passing side.
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    /// Override the integration step, s.
    #[arg(long, value_name = "SECONDS")]
    dt: Option<f64>,
    /// Override the simulation horizon, s.
    #[arg(long, value_name = "SECONDS")]
    horizon: Option<f64>,
    /// Also write the report files into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Trace file produced by `run` or `bench`.
    trace: PathBuf,
    /// Benchmark case the trace came from (adds obstacle paths).
    #[arg(long, value_name = "N", conflicts_with = "scenario")]
    imazu: Option<u32>,
    /// Scenario file the trace came from (adds obstacle paths).
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors; usage problems exit 1 (2 is
            // reserved for safety violations).
            let code = if e.exit_code() == 0 { 0 } else { EXIT_CONFIG };
            let _ = e.print();
            exit(code);
        }
    };
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Export(args) => cmd_export(&args),
    };
    exit(code);
}

/// Fail to exit code 1 with a message on stderr.
macro_rules! fail {
    ($($arg:tt)*) => {{
        eprintln!($($arg)*);
        return EXIT_CONFIG;
    }};
}

// ---------------------------------------------------------------------------
// Scenario loading and overrides

fn apply_overrides(
    sc: &mut Scenario,
    switching: Option<SwitchingArg>,
    side: Option<SideArg>,
    dt: Option<f64>,
    horizon: Option<f64>,
) -> Result<(), String> {
    if let Some(s) = switching {
        sc.supervisor.switching = match s {
            SwitchingArg::Binary => SwitchingStrategy::Binary,
            SwitchingArg::Risk => SwitchingStrategy::Risk,
        };
    }
    if let Some(s) = side {
        sc.supervisor.side = match s {
            SideArg::Starboard => Side::Starboard,
            SideArg::Port => Side::Port,
        };
    }
    if let Some(dt) = dt {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(format!("--dt must be a positive number, got {dt}"));
        }
        sc.dt = dt;
    }
    if let Some(h) = horizon {
        if !h.is_finite() || h <= sc.dt {
            return Err(format!("--horizon must exceed the step {}, got {h}", sc.dt));
        }
        sc.horizon = h;
    }
    Ok(())
}

fn load_selected(sel: &SelectArgs) -> Result<Scenario, String> {
    let mut sc = match (sel.imazu, &sel.scenario) {
        (Some(n), None) => imazu_case(n).map_err(|e| e.to_string())?,
        (None, Some(path)) => Scenario::from_path(path)
            .map_err(|e| format!("{}: {e}", path.display()))?,
        (None, None) => return Err("one of --imazu or --scenario is required".into()),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    apply_overrides(&mut sc, sel.switching, sel.side, sel.dt, sel.horizon)?;
    Ok(sc)
}

fn report_warnings(sc: &Scenario) {
    for w in &sc.warnings {
        eprintln!("warning: {}: {w}", sc.name);
    }
}

/// Case selections like "1-22", "5", "1-4,8".
fn parse_case_range(text: &str) -> Result<Vec<u32>, String> {
    let mut set = BTreeSet::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            return Err(format!("empty element in case range {text:?}"));
        }
        let (lo, hi) = match tok.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (tok, tok),
        };
        let lo: u32 = lo.parse().map_err(|_| format!("bad case number {lo:?}"))?;
        let hi: u32 = hi.parse().map_err(|_| format!("bad case number {hi:?}"))?;
        if lo > hi {
            return Err(format!("descending range {tok:?}"));
        }
        for n in lo..=hi {
            if !(1..=22).contains(&n) {
                return Err(format!("case {n} outside 1-22"));
            }
            set.insert(n);
        }
    }
    Ok(set.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Output files

/// Parameterization block reproduced at the head of every report so a
/// result can be read without the invocation that produced it.
#[derive(Clone, Serialize)]
struct ParametersOut {
    dt_s: f64,
    horizon_s: f64,
    safe_distance_m: f64,
    side: String,
    switching: String,
    ship_speed_mps: f64,
    heading_lag_per_s: f64,
    command_bound_rad: f64,
    transient_time_s: f64,
    gain: f64,
    terminal_radius_m: f64,
    vo_decision_period_s: f64,
    vo_conflict_horizon_s: f64,
    vo_heading_grid_deg: f64,
}

impl ParametersOut {
    fn of(sc: &Scenario) -> Self {
        ParametersOut {
            dt_s: sc.dt,
            horizon_s: sc.horizon,
            safe_distance_m: sc.c_s,
            side: format!("{:?}", sc.supervisor.side).to_lowercase(),
            switching: format!("{:?}", sc.supervisor.switching).to_lowercase(),
            ship_speed_mps: sc.params.v,
            heading_lag_per_s: sc.params.a,
            command_bound_rad: sc.params.m,
            transient_time_s: sc.supervisor.guidance.t_p,
            gain: sc.supervisor.guidance.eta,
            terminal_radius_m: sc.supervisor.guidance.delta,
            vo_decision_period_s: colav::vo::REPLAN_PERIOD,
            vo_conflict_horizon_s: colav::vo::CONFLICT_HORIZON,
            vo_heading_grid_deg: 1.0,
        }
    }

    /// The same block as `#`-prefixed comment lines for delimited files.
    fn comment_block(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dt = {} s, horizon = {} s", self.dt_s, self.horizon_s);
        let _ = writeln!(
            s,
            "# safe distance C_s = {} m; safety column: J1 >= C_s",
            self.safe_distance_m
        );
        let _ = writeln!(
            s,
            "# supervisor: side = {}, switching = {}, transient {} s, gain {}, terminal radius {} m",
            self.side, self.switching, self.transient_time_s, self.gain, self.terminal_radius_m
        );
        let _ = writeln!(
            s,
            "# ship: speed {} m/s, heading lag {} 1/s, command bound {} rad",
            self.ship_speed_mps, self.heading_lag_per_s, self.command_bound_rad
        );
        let _ = writeln!(
            s,
            "# vo baseline: decision period {} s, conflict horizon {} s, {} deg heading grid, preferred-side-first",
            self.vo_decision_period_s, self.vo_conflict_horizon_s, self.vo_heading_grid_deg
        );
        s
    }
}

#[derive(Serialize)]
struct RunSummaryOut<'a> {
    scenario: &'a str,
    algorithm: String,
    status: String,
    parameters: ParametersOut,
    metrics: &'a MetricsReport,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct ReportOut<'a> {
    parameters: ParametersOut,
    rows: &'a CompareTable,
}

fn status_label(status: &TerminalStatus) -> String {
    match status {
        TerminalStatus::Reached { t } => format!("reached t={t:.3}"),
        TerminalStatus::HorizonExpired => "horizon-expired".into(),
        TerminalStatus::Fault { t } => format!("fault t={t:.3}"),
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("{}: {e}", path.display()))
}

fn trace_file(dir: &Path, stem: &str, res: &SimResult) -> Result<PathBuf, String> {
    let path = dir.join(format!("{stem}.trace.csv"));
    let mut buf = Vec::new();
    write_trace(&mut buf, res).map_err(|e| e.to_string())?;
    fs::write(&path, buf).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

const BOXES_HEADER: &str = "t,x0,y0,x1,y1,x2,y2,x3,y3";

fn boxes_file(dir: &Path, stem: &str, res: &SimResult) -> Result<PathBuf, String> {
    let path = dir.join(format!("{stem}.boxes.csv"));
    let mut s = String::from(BOXES_HEADER);
    s.push('\n');
    for e in &res.box_log {
        let _ = write!(s, "{:.3}", e.t);
        for v in &e.verts {
            let _ = write!(s, ",{:.6},{:.6}", v.x, v.y);
        }
        s.push('\n');
    }
    write_file(&path, &s)?;
    Ok(path)
}

/// Per-obstacle world paths sampled on the trace grid.
fn obstacles_file(dir: &Path, stem: &str, sc: &Scenario, times: &[f64]) -> Result<PathBuf, String> {
    let path = dir.join(format!("{stem}.obstacles.csv"));
    let mut s = String::from("t");
    for i in 1..=sc.tracks.len() {
        let _ = write!(s, ",x{i},y{i}");
    }
    s.push('\n');
    for &t in times {
        let _ = write!(s, "{t:.3}");
        for track in &sc.tracks {
            let p = track.position(t);
            let _ = write!(s, ",{:.6},{:.6}", p.x, p.y);
        }
        s.push('\n');
    }
    write_file(&path, &s)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// run

fn cmd_run(args: &RunArgs) -> i32 {
    let sc = match load_selected(&args.select) {
        Ok(sc) => sc,
        Err(e) => fail!("error: {e}"),
    };
    report_warnings(&sc);
    if let Err(e) = fs::create_dir_all(&args.out) {
        fail!("error: {}: {e}", args.out.display());
    }

    let alg = args.algorithm.to_algorithm();
    let res = simulate(&sc, alg);
    let m = metrics(&res, &sc);

    let stem = format!("{}.{alg}", sc.name);
    let write = || -> Result<(), String> {
        trace_file(&args.out, &stem, &res)?;
        if alg == Algorithm::Proposed {
            boxes_file(&args.out, &stem, &res)?;
        }
        let summary = RunSummaryOut {
            scenario: &sc.name,
            algorithm: alg.to_string(),
            status: status_label(&res.status),
            parameters: ParametersOut::of(&sc),
            metrics: &m,
            warnings: &sc.warnings,
        };
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        write_file(&args.out.join(format!("{stem}.metrics.json")), &(json + "\n"))
    };
    if let Err(e) = write() {
        fail!("error: {e}");
    }

    let j1 = m
        .j1_min_distance_m
        .map(|d| format!("{d:.1} m"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "{} {alg}: {}; closest approach {j1} (C_s {:.1} m) -> {}",
        sc.name,
        status_label(&res.status),
        sc.c_s,
        if m.safety_pass { "safe" } else { "UNSAFE" },
    );

    if !m.safety_pass {
        EXIT_UNSAFE
    } else if m.reached {
        0
    } else {
        EXIT_UNREACHED
    }
}

// ---------------------------------------------------------------------------
// bench / compare

/// Simulate `cases` × `algorithms`; fill `table` and optionally write
/// per-case plot data.  Returns whether any simulation faulted.
fn run_grid(
    cases: &[u32],
    algorithms: &[Algorithm],
    switching: Option<SwitchingArg>,
    side: Option<SideArg>,
    dt: Option<f64>,
    horizon: Option<f64>,
    plot_dir: Option<&Path>,
    table: &mut CompareTable,
) -> Result<bool, String> {
    let mut any_fault = false;
    for &n in cases {
        let mut sc = imazu_case(n).map_err(|e| e.to_string())?;
        apply_overrides(&mut sc, switching, side, dt, horizon)?;
        report_warnings(&sc);
        let mut times = Vec::new();
        for &alg in algorithms {
            let res = simulate(&sc, alg);
            any_fault |= matches!(res.status, TerminalStatus::Fault { .. });
            if let Some(dir) = plot_dir {
                let stem = format!("{}.{alg}", sc.name);
                trace_file(dir, &stem, &res)?;
                if alg == Algorithm::Proposed {
                    boxes_file(dir, &stem, &res)?;
                }
                if times.len() < res.records.len() {
                    times = res.records.iter().map(|r| r.t).collect();
                }
            }
            table.push(sc.name.clone(), alg.to_string(), Some(metrics(&res, &sc)));
        }
        if let Some(dir) = plot_dir {
            obstacles_file(dir, &sc.name, &sc, &times)?;
        }
    }
    Ok(any_fault)
}

fn report_parameters(dt: Option<f64>, horizon: Option<f64>, switching: Option<SwitchingArg>, side: Option<SideArg>) -> ParametersOut {
    // Reports cover many cases; the parameter block reflects case 1 with
    // the common overrides applied (all benchmark cases share them).
    let mut sc = imazu_case(1).expect("case 1 exists");
    apply_overrides(&mut sc, switching, side, dt, horizon).expect("validated earlier");
    ParametersOut::of(&sc)
}

fn write_report(dir: &Path, params: &ParametersOut, table: &CompareTable) -> Result<(), String> {
    let csv = format!("{}{}", params.comment_block(), table.to_delimited());
    write_file(&dir.join("compare_report.csv"), &csv)?;
    let report = ReportOut { parameters: params.clone(), rows: table };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&dir.join("compare_report.json"), &(json + "\n"))
}

fn cmd_bench(args: &BenchArgs) -> i32 {
    let cases = match parse_case_range(&args.cases) {
        Ok(c) => c,
        Err(e) => fail!("error: {e}"),
    };
    let algorithms: Vec<Algorithm> = match args.algorithm {
        Some(a) => vec![a.to_algorithm()],
        None => vec![Algorithm::Proposed, Algorithm::Vo],
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        fail!("error: {}: {e}", args.out.display());
    }

    let mut table = CompareTable::default();
    let any_fault = match run_grid(
        &cases,
        &algorithms,
        args.switching,
        args.side,
        args.dt,
        args.horizon,
        Some(&args.out),
        &mut table,
    ) {
        Ok(f) => f,
        Err(e) => fail!("error: {e}"),
    };

    let params = report_parameters(args.dt, args.horizon, args.switching, args.side);
    if let Err(e) = write_report(&args.out, &params, &table) {
        fail!("error: {e}");
    }

    let unsafe_rows = table
        .rows
        .iter()
        .filter(|r| r.report.as_ref().is_some_and(|m| !m.safety_pass))
        .count();
    println!(
        "bench: {} cases x {} algorithm(s), {} rows, {} safety failure(s); report in {}",
        cases.len(),
        algorithms.len(),
        table.rows.len(),
        unsafe_rows,
        args.out.display(),
    );
    if any_fault {
        EXIT_UNREACHED
    } else {
        0
    }
}

fn cmd_compare(args: &CompareArgs) -> i32 {
    let mut table = CompareTable::default();
    let params;
    let mut any_fault = false;

    if let Some(path) = &args.scenario {
        let mut sc = match Scenario::from_path(path) {
            Ok(sc) => sc,
            Err(e) => fail!("error: {}: {e}", path.display()),
        };
        if let Err(e) = apply_overrides(&mut sc, args.switching, args.side, args.dt, args.horizon) {
            fail!("error: {e}");
        }
        report_warnings(&sc);
        params = ParametersOut::of(&sc);
        for alg in [Algorithm::Proposed, Algorithm::Vo] {
            let res = simulate(&sc, alg);
            any_fault |= matches!(res.status, TerminalStatus::Fault { .. });
            table.push(sc.name.clone(), alg.to_string(), Some(metrics(&res, &sc)));
        }
    } else {
        let cases = match parse_case_range(&args.cases) {
            Ok(c) => c,
            Err(e) => fail!("error: {e}"),
        };
        any_fault = match run_grid(
            &cases,
            &[Algorithm::Proposed, Algorithm::Vo],
            args.switching,
            args.side,
            args.dt,
            args.horizon,
            None,
            &mut table,
        ) {
            Ok(f) => f,
            Err(e) => fail!("error: {e}"),
        };
        params = report_parameters(args.dt, args.horizon, args.switching, args.side);
    }

    print!("{}{}", params.comment_block(), table.to_delimited());

    if let Some(dir) = &args.out {
        if let Err(e) = fs::create_dir_all(dir) {
            fail!("error: {}: {e}", dir.display());
        }
        if let Err(e) = write_report(dir, &params, &table) {
            fail!("error: {e}");
        }
    }
    if any_fault {
        EXIT_UNREACHED
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// export

fn cmd_export(args: &ExportArgs) -> i32 {
    let file = match fs::File::open(&args.trace) {
        Ok(f) => f,
        Err(e) => fail!("error: {}: {e}", args.trace.display()),
    };
    let rows: Vec<TraceRow> = match read_trace(BufReader::new(file)) {
        Ok(rows) => rows,
        Err(e) => fail!("error: {}: {e}", args.trace.display()),
    };
    if rows.is_empty() {
        fail!("error: {}: trace has no records", args.trace.display());
    }

    let scenario = match (args.imazu, &args.scenario) {
        (Some(n), None) => match imazu_case(n) {
            Ok(sc) => Some(sc),
            Err(e) => fail!("error: {e}"),
        },
        (None, Some(path)) => match Scenario::from_path(path) {
            Ok(sc) => Some(sc),
            Err(e) => fail!("error: {}: {e}", path.display()),
        },
        _ => None,
    };

    if let Err(e) = fs::create_dir_all(&args.out) {
        fail!("error: {}: {e}", args.out.display());
    }

    // demo-static.proposed.trace.csv -> stem demo-static.proposed
    let base = args
        .trace
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("trace");
    let stem = base
        .strip_suffix(".trace.csv")
        .or_else(|| base.strip_suffix(".csv"))
        .unwrap_or(base)
        .to_string();

    let write = || -> Result<(usize, usize), String> {
        // Own-ship path.
        let mut s = String::from("t,x,y,psi,u,mode\n");
        for r in &rows {
            let _ = writeln!(
                s,
                "{:.3},{:.6},{:.6},{:.9},{:.9},{}",
                r.t, r.p.x, r.p.y, r.psi, r.u, r.mode
            );
        }
        write_file(&args.out.join(format!("{stem}.path.csv")), &s)?;

        // Mode-colored segments: consecutive same-mode rows share a segment
        // id; boundary samples appear in both segments so polylines join.
        let mut s = String::from("seg,mode,t,x,y\n");
        let mut seg = 0usize;
        let mut segments = 1usize;
        for (i, r) in rows.iter().enumerate() {
            if i > 0 && rows[i - 1].mode != r.mode {
                let _ = writeln!(
                    s,
                    "{seg},{},{:.3},{:.6},{:.6}",
                    rows[i - 1].mode, r.t, r.p.x, r.p.y
                );
                seg += 1;
                segments += 1;
            }
            let _ = writeln!(s, "{seg},{},{:.3},{:.6},{:.6}", r.mode, r.t, r.p.x, r.p.y);
        }
        write_file(&args.out.join(format!("{stem}.segments.csv")), &s)?;

        // Obstacle paths when the scenario is known.
        let mut extra = 0usize;
        if let Some(sc) = &scenario {
            if !sc.tracks.is_empty() {
                let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
                obstacles_file(&args.out, &stem, sc, &times)?;
                extra += 1;
            }
        }

        // Unsafe-box outlines recorded next to the trace by `run`/`bench`.
        let sidecar = args.trace.with_file_name(format!("{stem}.boxes.csv"));
        if sidecar.exists() && sidecar != args.out.join(format!("{stem}.boxes.csv")) {
            let content = fs::read_to_string(&sidecar)
                .map_err(|e| format!("{}: {e}", sidecar.display()))?;
            if content.lines().next() == Some(BOXES_HEADER) {
                write_file(&args.out.join(format!("{stem}.boxes.csv")), &content)?;
                extra += 1;
            }
        }
        Ok((segments, extra))
    };

    match write() {
        Ok((segments, extra)) => {
            println!(
                "exported {} records, {} mode segment(s), {} auxiliary file(s) to {}",
                rows.len(),
                segments,
                extra,
                args.out.display(),
            );
            0
        }
        Err(e) => fail!("error: {e}"),
    }
}
