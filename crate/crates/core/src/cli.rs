//! Command-line front end: `simulate`, `predict`, `scan`, `snapshot`, `norm`.
//!
//! Tables go to CSV files, a one-line JSON summary goes to standard output.
//! Floats are written with 17 significant digits so that identical
//! invocations give byte-identical output. Exit codes: 0 success, 2 invalid
//! configuration, 3 failed quality gate.

use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::effective::{self, EffectiveModel};
use crate::error::{invalid, Error};
use crate::lattice::LatticeConfig;
use crate::localized::{self, Method, NormResult};
use crate::scan::{self, ScanOptions, Solver};
use crate::walk::{find_peak, Operator, Walk};

/// Version tag of the CSV and JSON layouts.
pub const FORMAT_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "latsearch", version, about = "Quantum-walk search on periodic lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the search walk from the uniform state and record the target probability.
    Simulate(SimulateArgs),
    /// Predict b^2, the gap and the search time.
    Predict(PredictArgs),
    /// Eigenphases of U_lambda on the reduced space over a lambda window.
    Scan(ScanArgs),
    /// Per-vertex probability grids at selected times.
    Snapshot(SnapshotArgs),
    /// The normalization 1/b^2 and its breakdown by sub-lattice dimension.
    Norm(NormArgs),
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Lattice dimension.
    #[arg(long)]
    pub d: usize,
    /// Side length.
    #[arg(long)]
    pub n: usize,
    /// Marked vertex as comma-separated coordinates; defaults to the centre.
    #[arg(long, value_delimiter = ',')]
    pub v: Option<Vec<usize>>,
    /// Reserved; every computation is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl LatticeArgs {
    fn lattice(&self) -> Result<LatticeConfig, Error> {
        match &self.v {
            Some(v) => LatticeConfig::with_marked(self.d, self.n, v.clone()),
            None => LatticeConfig::new(self.d, self.n),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub steps: usize,
    /// Iterate U_lambda instead of the search walk U_1.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Trajectory CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 3 when no localisation peak is found.
    #[arg(long)]
    pub require_peak: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    /// exact-sum, asymptotic or quadrature.
    #[arg(long, default_value = "exact-sum")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = scan::DEFAULT_LAMBDA_MIN, allow_negative_numbers = true)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = scan::DEFAULT_LAMBDA_MAX, allow_negative_numbers = true)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = scan::DEFAULT_POINTS)]
    pub points: usize,
    /// secular or dense.
    #[arg(long, default_value = "secular")]
    pub solver: String,
    /// Largest reduced dimension 2N - 1 accepted.
    #[arg(long, default_value_t = scan::DEFAULT_MAX_DIM)]
    pub max_dim: usize,
    /// Eigenphase CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Comma-separated step numbers.
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[arg(long)]
    pub d: usize,
    /// Side length; optional for the large-n routes when d >= 3.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "exact-sum")]
    pub method: String,
}

/// Failure of a subcommand, with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoPeak(_) | Error::Diagnostic(_) => EXIT_GATE,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) }
}

/// Float with 17 significant digits; non-finite values become `null`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Minimal ordered JSON writer.
enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    fn render(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(x) => out.push_str(&fmt_f64(*x)),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
            Json::Arr(items) => {
                out.push('[');
                for (j, it) in items.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    it.render(out);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (j, (k, v)) in fields.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                    out.push(':');
                    v.render(out);
                }
                out.push('}');
            }
        }
    }
}

fn int(x: usize) -> Json {
    Json::Int(x as i64)
}

fn opt_num(x: Option<f64>) -> Json {
    x.map_or(Json::Null, Json::Num)
}

fn header(command: &str) -> Vec<(&'static str, Json)> {
    vec![("format_version", Json::Int(FORMAT_VERSION as i64)), ("command", Json::Str(command.into()))]
}

fn lattice_fields(fields: &mut Vec<(&'static str, Json)>, l: &LatticeConfig) {
    fields.push(("d", int(l.dim())));
    fields.push(("n", int(l.side())));
    fields.push(("v", Json::Arr(l.marked().iter().map(|&x| int(x)).collect())));
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<(), Failure> {
    let mut w = create(path)?;
    for line in lines {
        w.write_all(line.as_bytes()).map_err(|e| io_failure(path, e))?;
        w.write_all(b"\n").map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    Ok(s.parse::<Method>()?)
}

fn model_or_none(d: usize, n: usize, method: Method) -> Option<EffectiveModel> {
    effective::predict(d, n, method).ok()
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Json, Failure> {
    let lattice = args.lattice.lattice()?;
    if let Some(lambda) = args.lambda {
        if !lambda.is_finite() {
            return Err(invalid("lambda must be finite").into());
        }
    }
    let op = args.lambda.map_or(Operator::Search, Operator::Interpolated);
    let walk = Walk::new(lattice.clone());
    let traj = walk.evolve(&walk.make_phi0(), op, args.steps)?;
    if let Some(path) = &args.out {
        let rows = traj.points.iter().map(|p| format!("{},{},{}", p.step, fmt_f64(p.p_target), fmt_f64(p.p_sv)));
        write_lines(path, std::iter::once("t,p_target,p_sv".to_string()).chain(rows))?;
    }
    let peak = find_peak(&traj);
    if args.require_peak {
        if let Err(e) = &peak {
            return Err(e.clone().into());
        }
    }
    let (d, n) = (lattice.dim(), lattice.side());
    let exact = model_or_none(d, n, Method::ExactSum);
    let asym = model_or_none(d, n, Method::Asymptotic);
    let mut f = header("simulate");
    lattice_fields(&mut f, &lattice);
    f.push(("steps", int(args.steps)));
    f.push(("lambda", Json::Num(args.lambda.unwrap_or(1.0))));
    f.push(("rows", int(traj.len())));
    f.push(("peak_found", Json::Bool(peak.is_ok())));
    match &peak {
        Ok(p) => {
            f.push(("t_peak", int(p.step)));
            f.push(("p_peak", Json::Num(p.p_target)));
            f.push(("p_sv_peak", Json::Num(traj.points[p.step].p_sv)));
        }
        Err(_) => {
            f.push(("t_peak", Json::Null));
            f.push(("p_peak", Json::Null));
            f.push(("p_sv_peak", Json::Null));
        }
    }
    f.push(("T_pred_exact", exact.as_ref().map_or(Json::Null, |m| int(m.t_steps))));
    f.push(("T_pred_asymptotic", asym.as_ref().map_or(Json::Null, |m| int(m.t_steps))));
    f.push(("b2_exact", opt_num(exact.as_ref().map(|m| m.b * m.b))));
    Ok(Json::Obj(f))
}

fn cmd_predict(args: &PredictArgs) -> Result<Json, Failure> {
    if args.d < 2 {
        return Err(invalid("predictions need d >= 2").into());
    }
    let method = parse_method(&args.method)?;
    let selected = effective::predict(args.d, args.n, method)?;
    let exact = effective::predict(args.d, args.n, Method::ExactSum)?;
    let asym = effective::predict(args.d, args.n, Method::Asymptotic)?;
    let mut f = header("predict");
    f.push(("d", int(args.d)));
    f.push(("n", int(args.n)));
    f.push(("method", Json::Str(method.as_str().into())));
    f.push(("b2", Json::Num(selected.b * selected.b)));
    f.push(("T", int(selected.t_steps)));
    f.push(("T_real", Json::Num(selected.t_real)));
    f.push(("delta", Json::Num(selected.delta)));
    f.push(("b2_exact", Json::Num(exact.b * exact.b)));
    f.push(("b2_exact_method", Json::Str(Method::ExactSum.as_str().into())));
    f.push(("b2_asymptotic", Json::Num(asym.b * asym.b)));
    f.push(("b2_asymptotic_method", Json::Str(Method::Asymptotic.as_str().into())));
    f.push(("T_exact", int(exact.t_steps)));
    f.push(("T_asymptotic", int(asym.t_steps)));
    f.push(("delta_exact", Json::Num(exact.delta)));
    f.push(("delta_asymptotic", Json::Num(asym.delta)));
    Ok(Json::Obj(f))
}

fn cmd_scan(args: &ScanArgs) -> Result<Json, Failure> {
    let lattice = args.lattice.lattice()?;
    let solver: Solver = args.solver.parse()?;
    let options = ScanOptions { solver, max_dim: args.max_dim };
    let r = scan::scan(&lattice, args.lambda_min, args.lambda_max, args.points, options)?;
    let rows: usize = r.phases.iter().map(Vec::len).sum();
    if let Some(path) = &args.out {
        let body = r.lambdas.iter().zip(&r.phases).zip(&r.branches).flat_map(|((&lambda, ph), br)| {
            let mut order: Vec<usize> = (0..ph.len()).collect();
            order.sort_by_key(|&j| br[j]);
            order.into_iter().map(move |j| format!("{},{},{}", fmt_f64(lambda), br[j], fmt_f64(ph[j])))
        });
        write_lines(path, std::iter::once("lambda,branch_index,eigenphase".to_string()).chain(body))?;
    }
    let mut f = header("scan");
    lattice_fields(&mut f, &lattice);
    f.push(("solver", Json::Str(args.solver.clone())));
    f.push(("points", int(args.points)));
    f.push(("rows", int(rows)));
    f.push(("gap_numeric", Json::Num(r.gap)));
    f.push(("gap_model", Json::Num(r.gap_model)));
    f.push(("gap_ratio", Json::Num(r.gap / r.gap_model)));
    f.push(("subspace_overlap", Json::Num(r.subspace_overlap)));
    Ok(Json::Obj(f))
}

fn parse_times(raw: &[String]) -> Result<Vec<usize>, Failure> {
    let mut times = Vec::with_capacity(raw.len());
    for s in raw {
        let t = s.trim().parse::<usize>().map_err(|_| Failure::from(invalid(format!("invalid time '{s}'"))))?;
        times.push(t);
    }
    if times.is_empty() {
        return Err(invalid("no snapshot times given").into());
    }
    times.sort_unstable();
    times.dedup();
    Ok(times)
}

fn cmd_snapshot(args: &SnapshotArgs) -> Result<Json, Failure> {
    let lattice = args.lattice.lattice()?;
    let times = parse_times(&args.times)?;
    let walk = Walk::new(lattice.clone());
    let last = *times.last().expect("non-empty");
    let mut grids = Vec::with_capacity(times.len());
    let mut failure = None;
    walk.evolve_with(&walk.make_phi0(), Operator::Search, last, |t, state| {
        if times.binary_search(&t).is_ok() && failure.is_none() {
            match walk.snapshot(state) {
                Ok(g) => grids.push((t, g)),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let mut files = Vec::with_capacity(grids.len());
    for (t, grid) in &grids {
        let path = args.out_dir.join(format!("snapshot_t{t}.csv"));
        let head = (1..=lattice.dim()).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",") + ",probability";
        let rows = grid.iter().enumerate().map(|(x, p)| {
            let coords: Vec<String> = lattice.coords(x).iter().map(|c| c.to_string()).collect();
            format!("{},{}", coords.join(","), fmt_f64(*p))
        });
        write_lines(&path, std::iter::once(head).chain(rows))?;
        let (argmax, pmax) =
            grid.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (x, &p)| if p > acc.1 { (x, p) } else { acc });
        files.push(Json::Obj(vec![
            ("t", int(*t)),
            ("path", Json::Str(path.display().to_string())),
            ("total", Json::Num(grid.iter().sum())),
            ("max_probability", Json::Num(pmax)),
            ("max_vertex", Json::Arr(lattice.coords(argmax).into_iter().map(int).collect())),
        ]));
    }
    let mut f = header("snapshot");
    lattice_fields(&mut f, &lattice);
    f.push(("files", Json::Arr(files)));
    Ok(Json::Obj(f))
}

fn norm_json(r: &NormResult) -> Json {
    Json::Arr(
        r.breakdown
            .iter()
            .map(|t| {
                Json::Obj(vec![
                    ("i", int(t.i)),
                    ("binomial", Json::Int(t.binomial as i64)),
                    ("I_i", Json::Num(t.integral)),
                    ("scaled", opt_num(t.scaled)),
                    ("contribution", Json::Num(t.contribution)),
                ])
            })
            .collect(),
    )
}

fn cmd_norm(args: &NormArgs) -> Result<Json, Failure> {
    let method = parse_method(&args.method)?;
    let result = match (method, args.n) {
        (Method::ExactSum, Some(n)) => localized::inv_b2_exact(args.d, n)?,
        (Method::ExactSum, None) => return Err(invalid("the exact sum needs --n").into()),
        (Method::Asymptotic, n) => localized::inv_b2_asymptotic(args.d, n)?,
        (Method::Quadrature, n) => localized::inv_b2_quadrature(args.d, n)?,
    };
    let mut f = header("norm");
    f.push(("d", int(args.d)));
    f.push(("n", args.n.map_or(Json::Null, int)));
    f.push(("method", Json::Str(method.as_str().into())));
    f.push(("inv_b2", Json::Num(result.inv_b2)));
    f.push(("b2", Json::Num(result.b2())));
    f.push(("breakdown", norm_json(&result)));
    if let (Some(n), false) = (args.n, method == Method::ExactSum) {
        let exact = localized::inv_b2_exact(args.d, n).ok();
        f.push(("inv_b2_exact_sum", opt_num(exact.as_ref().map(|e| e.inv_b2))));
        f.push(("gap_to_exact_sum", opt_num(exact.map(|e| result.inv_b2 - e.inv_b2))));
    }
    Ok(Json::Obj(f))
}

pub fn execute(cli: &Cli) -> Result<String, Failure> {
    let json = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Predict(a) => cmd_predict(a)?,
        Command::Scan(a) => cmd_scan(a)?,
        Command::Snapshot(a) => cmd_snapshot(a)?,
        Command::Norm(a) => cmd_norm(a)?,
    };
    let mut s = String::new();
    json.render(&mut s);
    s.push('\n');
    Ok(s)
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli) {
        Ok(s) => match out.write_all(s.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_CONFIG
            }
        },
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("latsearch").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "null");
        let back: f64 = fmt_f64(0.1 + 0.2).parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn json_rendering() {
        let j = Json::Obj(vec![
            ("a", Json::Int(1)),
            ("b", Json::Arr(vec![Json::Null, Json::Bool(true)])),
            ("c", Json::Str("x\"y".into())),
            ("d", Json::Num(0.5)),
        ]);
        let mut s = String::new();
        j.render(&mut s);
        assert_eq!(s, r#"{"a":1,"b":[null,true],"c":"x\"y","d":5.0000000000000000e-1}"#);
        let parsed: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["d"], 0.5);
    }

    #[test]
    fn predict_toy() {
        let (code, out, _) = run_capture(&["predict", "--d", "2", "--n", "3", "--method", "exact-sum"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["b2"].as_f64().unwrap() - 9.0 / 16.0).abs() < 1e-14);
        assert_eq!(v["T"], 3);
        assert_eq!(v["b2_exact_method"], "exact-sum");
        assert_eq!(v["b2_asymptotic_method"], "asymptotic");
        assert_eq!(v["format_version"], 1);
    }

    #[test]
    fn config_errors_exit_2() {
        assert_eq!(run_capture(&["predict", "--d", "1", "--n", "5"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["predict", "--d", "2", "--n", "5", "--method", "guess"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["simulate", "--d", "2", "--n", "5", "--v", "9,0", "--steps", "3"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["simulate", "--d", "2"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["norm", "--d", "2", "--method", "asymptotic"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["norm", "--d", "2", "--method", "quadrature"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn require_peak_exits_3() {
        let (code, _, err) = run_capture(&["simulate", "--d", "2", "--n", "5", "--steps", "2", "--require-peak"]);
        assert_eq!(code, EXIT_GATE);
        assert!(err.contains("no peak"));
        let (code, out, _) = run_capture(&["simulate", "--d", "2", "--n", "5", "--steps", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"t_peak\":null"));
    }

    #[test]
    fn parse_times_rules() {
        assert_eq!(parse_times(&["5".into(), "0".into(), "5".into()]).unwrap(), vec![0, 5]);
        assert!(parse_times(&["-1".into()]).is_err());
        assert!(parse_times(&["x".into()]).is_err());
        assert!(parse_times(&[]).is_err());
    }
}
