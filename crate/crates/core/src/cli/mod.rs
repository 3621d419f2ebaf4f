//! Batch front-end: one config-driven task per run, with JSON and CSV
//! artifacts in an output directory.
//!
//! Exit codes: 0 on success, 2 when a solver did not converge (artifacts are
//! still written), 1 on config or I/O errors.

pub mod config;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::curves::{classify, sample_curve, write_curve_csv, CurveLabel, SpectralCurve};
use crate::dirichlet::{
    amp_scan, battery_data, isolation_scan, min_principle_verdict, mp_verdict, small_domain_threshold,
    solve_sublinear, solve_system, solve_system_monotone_mirrored, solve_system_monotone_signed,
    solve_system_newton, solve_system_picard, IsolationOptions, LaneEmden, MpContext, PrincipleReport,
    SmallDomainSetup, SystemOptions, SystemProblem,
};
use crate::eigen::{second_eigen_linear_symmetric, EigenOptions};
use crate::error::{Error, Result};
use crate::geometry::{fmt_sig17, Field};
use crate::operators::{LinearOp, OperatorKind, Sign};

pub use config::{LoadedConfig, RunConfig, SolveMethod, Task};
pub use verify::{verify_fucik, verify_scalar, CurveOrdering, FucikReport, ScalarReport};

/// Environment variable that overrides the output directory of the config.
pub const OUT_ENV: &str = "LESPECTRA_OUT";

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub task: Task,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

/// Files written by a run and whether every solve converged.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub converged: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            2
        }
    }
}

/// Runs a task and maps the result to an exit code, printing diagnostics to
/// stderr.
pub fn run(args: &RunArgs) -> i32 {
    match execute(args) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Formats JSON with sorted keys, two-space indentation and every float in
/// 17 significant digits; non-finite floats become `null`.
pub fn to_json_sig17(v: &Value) -> String {
    let mut s = String::new();
    write_json(&mut s, v, 0);
    s.push('\n');
    s
}

fn write_json(s: &mut String, v: &Value, depth: usize) {
    let pad = |s: &mut String, d: usize| s.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => s.push_str("null"),
        Value::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    s.push_str(&fmt_sig17(x));
                } else {
                    s.push_str("null");
                }
            } else {
                s.push_str(&n.to_string());
            }
        }
        Value::String(t) => s.push_str(&Value::String(t.clone()).to_string()),
        Value::Array(a) => {
            if a.is_empty() {
                s.push_str("[]");
                return;
            }
            s.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                pad(s, depth + 1);
                write_json(s, x, depth + 1);
                s.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(s, depth);
            s.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                s.push_str("{}");
                return;
            }
            s.push_str("{\n");
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for (k, key) in keys.iter().enumerate() {
                pad(s, depth + 1);
                s.push_str(&Value::String((*key).clone()).to_string());
                s.push_str(": ");
                write_json(s, &m[*key], depth + 1);
                s.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(s, depth);
            s.push('}');
        }
    }
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    serde_json::to_value(t).map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))
}

/// Errors that mean a solver ran out of iterations or lost its invariant,
/// as opposed to bad input.
fn is_nonconvergence(e: &Error) -> bool {
    matches!(
        e,
        Error::NotConverged { .. } | Error::PositivityLost { .. } | Error::MonotonicityViolated { .. }
    )
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
    result: Map<String, Value>,
    converged: bool,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Self {
        Artifacts {
            dir,
            files: Vec::new(),
            result: Map::new(),
            converged: true,
        }
    }

    fn set(&mut self, key: &str, v: Value) {
        self.result.insert(key.into(), v);
    }

    fn file(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        write(&mut w)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn field(&mut self, name: &str, f: &Field) -> Result<()> {
        self.file(&format!("field_{name}.csv"), |w| f.write_csv(w))
    }

    fn scan(&mut self, rep: &PrincipleReport) -> Result<()> {
        self.file("scan.csv", |w| rep.write_scan_csv(w))
    }

    /// Records a non-convergence error under `key`, or propagates others.
    fn absorb<T>(&mut self, key: &str, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(t) => Ok(Some(t)),
            Err(e) if is_nonconvergence(&e) => {
                self.converged = false;
                self.set(key, json!({ "status": "not_converged", "error": e.to_string() }));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn finish(mut self, task: Task, seed: u64) -> Result<Outcome> {
        self.set("task", json!(task.as_str()));
        self.set("seed", json!(seed));
        let status = if self.converged { "converged" } else { "not_converged" };
        self.set("status", json!(status));
        let text = to_json_sig17(&Value::Object(std::mem::take(&mut self.result)));
        let path = self.dir.join("result.json");
        std::fs::write(&path, text)?;
        self.files.push(path);
        Ok(Outcome {
            dir: self.dir,
            files: self.files,
            converged: self.converged,
        })
    }
}

fn output_dir(args: &RunArgs, cfg: &LoadedConfig) -> PathBuf {
    if let Some(o) = &args.out {
        return o.clone();
    }
    if let Some(o) = std::env::var_os(OUT_ENV) {
        return PathBuf::from(o);
    }
    match &cfg.config.output {
        Some(o) => {
            let base = Path::new(&cfg.path).parent().unwrap_or(Path::new("."));
            base.join(o)
        }
        None => PathBuf::from("."),
    }
}

/// Parses the config, runs the task and writes all artifacts.
pub fn execute(args: &RunArgs) -> Result<Outcome> {
    let cfg = LoadedConfig::load(&args.config)?;
    cfg.check_task(args.task)?;
    let dir = output_dir(args, &cfg);
    std::fs::create_dir_all(&dir)?;
    let mut art = Artifacts::new(dir);
    let t = args.task;
    match t {
        Task::Eigen => task_eigen(&cfg, &mut art)?,
        Task::Curve => task_curve(&cfg, &mut art)?,
        Task::Solve => task_solve(&cfg, &mut art)?,
        Task::MpCheck => task_mp_check(&cfg, &mut art, args.seed)?,
        Task::AmpScan => task_amp_scan(&cfg, &mut art)?,
        Task::SmallDomain => task_small_domain(&cfg, &mut art, args.seed)?,
        Task::Isolation => task_isolation(&cfg, &mut art, args.seed)?,
        Task::VerifyFucik => task_verify_fucik(&cfg, &mut art)?,
        Task::VerifyScalar => task_verify_scalar(&cfg, &mut art)?,
    }
    art.finish(t, args.seed)
}

fn system(cfg: &LoadedConfig, task: Task) -> Result<LaneEmden> {
    let grid = cfg.grid(task)?;
    let ops = cfg.operators(task)?;
    let exps = cfg.exponents(task)?;
    let (tau1, tau2) = cfg.weights(&grid)?;
    LaneEmden::new(ops.f1.clone(), ops.f2.clone(), tau1, tau2, exps)
}

fn eigen_opts(cfg: &LoadedConfig) -> EigenOptions {
    cfg.tolerances().eigen_options()
}

fn system_opts(cfg: &LoadedConfig) -> SystemOptions {
    let t = cfg.tolerances();
    let mut o = SystemOptions::default();
    if let Some(x) = t.solve_tol {
        o.tol = x;
    }
    if let Some(m) = t.solve_max_iter {
        o.max_iter = m;
    }
    o
}

/// Both principal half-eigenpairs, with fields and summaries recorded.
fn both_branches(sys: &LaneEmden, opts: &EigenOptions, art: &mut Artifacts) -> Result<[Option<f64>; 2]> {
    let mut out = [None, None];
    for (k, sign) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
        let name = match sign {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        };
        if let Some(pair) = art.absorb(name, sys.eigen(sign, opts))? {
            art.set(name, to_value(&pair.summary())?);
            art.set(&format!("lambda1_{name}"), json!(pair.lambda1));
            art.field(&format!("u_{name}"), &pair.u)?;
            if let Some(v) = &pair.v {
                art.field(&format!("v_{name}"), v)?;
            }
            out[k] = Some(pair.lambda1);
        }
    }
    Ok(out)
}

fn task_eigen(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<()> {
    let sys = system(cfg, Task::Eigen)?;
    art.set("p", json!(sys.exps.p));
    art.set("q", json!(sys.exps.q));
    both_branches(&sys, &eigen_opts(cfg), art)?;
    Ok(())
}

/// The shared linear operator of a symmetric `(L, L)` pair with equal weights.
fn common_linear(sys: &LaneEmden) -> Option<LinearOp> {
    let same_op = serde_json::to_string(&sys.op1).ok()? == serde_json::to_string(&sys.op2).ok()?;
    let same_w = sys.tau1.distance(&sys.tau2).ok()? == 0.0;
    let linear = sys.op1.is_linear() && sys.op1.zero_order.is_none();
    let unit = (sys.exps.p - 1.0).abs() < 1e-12 && (sys.exps.q - 1.0).abs() < 1e-12;
    match (&sys.op1.kind, same_op && same_w && linear && unit) {
        (OperatorKind::Linear { op }, true) if op.drift.iter().all(|b| b.is_zero()) => Some(op.clone()),
        _ => None,
    }
}

fn task_curve(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<()> {
    let task = Task::Curve;
    let sys = system(cfg, task)?;
    let p = cfg.parameters(task)?;
    let [lo, hi] = p.get_ref().lambda_range.ok_or_else(|| {
        cfg.error_at(Some(p.span()), "task `curve` requires parameters.lambda_range")
    })?;
    let n = p.get_ref().samples.unwrap_or(64);
    let [plus, minus] = both_branches(&sys, &eigen_opts(cfg), art)?;
    let mut curves = Vec::new();
    for (a, label) in [(plus, CurveLabel::Plus), (minus, CurveLabel::Minus)] {
        if let Some(a) = a {
            let c = SpectralCurve::new(a, sys.exps.p, label)?;
            let rows = sample_curve(&c, lo, hi, n).map_err(|e| cfg.error_at(Some(p.span()), e))?;
            curves.push((c, rows));
        }
    }
    if let Some(op) = common_linear(&sys) {
        let l2 = second_eigen_linear_symmetric(&op, &sys.tau1, sys.grid())?;
        art.set("lambda2", json!(l2));
        let c = SpectralCurve::new(l2, sys.exps.p, CurveLabel::Second)?;
        curves.push((c, sample_curve(&c, lo, hi, n)?));
    }
    art.set("p", json!(sys.exps.p));
    art.set("samples", json!(n));
    art.set("lambda_range", json!([lo, hi]));
    art.file("curve.csv", |w| write_curve_csv(w, &curves))
}

fn task_solve(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<()> {
    let task = Task::Solve;
    let sys = system(cfg, task)?;
    let lambda = cfg.param(task, "lambda", |p| p.lambda)?;
    let mu = cfg.param(task, "mu", |p| p.mu)?;
    let method = cfg.parameters(task)?.get_ref().method;
    let (f1, f2) = cfg.data(task, sys.grid())?;
    let prob = SystemProblem::new(sys, lambda, mu, f1, f2)?;
    let opts = system_opts(cfg);
    let solved = match method {
        SolveMethod::Auto => solve_system(&prob, &opts),
        SolveMethod::Picard => solve_system_picard(&prob, &opts),
        SolveMethod::Newton => solve_system_newton(&prob, &opts),
        SolveMethod::Monotone => {
            if prob.f1.max() <= 0.0 && prob.f2.max() <= 0.0 {
                solve_system_monotone_signed(&prob, &opts)
            } else {
                solve_system_monotone_mirrored(&prob, &opts)
            }
        }
        SolveMethod::Sublinear => solve_sublinear(&prob, &opts).map(|(u, v, r, plan)| {
            art.set("plan", to_value(&plan).unwrap_or(Value::Null));
            (u, v, r)
        }),
    };
    art.set("lambda", json!(lambda));
    art.set("mu", json!(mu));
    if let Some((u, v, report)) = art.absorb("report", solved)? {
        art.converged &= report.converged;
        art.set("report", to_value(&report)?);
        art.set("u_range", json!([u.min(), u.max()]));
        art.set("v_range", json!([v.min(), v.max()]));
        art.field("u", &u)?;
        art.field("v", &v)?;
    }
    Ok(())
}

fn task_mp_check(cfg: &LoadedConfig, art: &mut Artifacts, seed: u64) -> Result<()> {
    let task = Task::MpCheck;
    let sys = system(cfg, task)?;
    let lambda = cfg.param(task, "lambda", |p| p.lambda)?;
    let mu = cfg.param(task, "mu", |p| p.mu)?;
    let b = cfg.battery();
    let battery = battery_data(sys.grid(), b.count, b.amplitude, seed);
    let eo = eigen_opts(cfg);
    let Some(ctx) = art.absorb("mp", MpContext::new(sys, battery, eo))? else {
        return Ok(());
    };
    let Some(mirror) = art.absorb("min_p", ctx.mirrored())? else {
        return Ok(());
    };
    let mp = mp_verdict(&ctx, lambda, mu)?;
    let mn = min_principle_verdict(&mirror, lambda, mu)?;
    let p = ctx.system.exps.p;
    let plus = SpectralCurve::new(ctx.plus.lambda1, p, CurveLabel::Plus)?;
    let minus = SpectralCurve::new(mirror.plus.lambda1, p, CurveLabel::Minus)?;
    let region = classify(lambda, mu, &plus, &minus, None)?;
    art.set("lambda", json!(lambda));
    art.set("mu", json!(mu));
    art.set("lambda1_plus", json!(plus.anchor));
    art.set("lambda1_minus", json!(minus.anchor));
    art.set("region", to_value(&region)?);
    art.set("predicted_mp", json!(region.predicts_mp()));
    art.set("predicted_min_p", json!(region.predicts_min_p()));
    art.set(
        "agreement",
        json!(mp.verdict == Some(region.predicts_mp()) && mn.verdict == Some(region.predicts_min_p())),
    );
    if let Some((u, v)) = &mp.witness {
        art.field("witness_mp_u", u)?;
        art.field("witness_mp_v", v)?;
    }
    if let Some((u, v)) = &mn.witness {
        art.field("witness_min_p_u", u)?;
        art.field("witness_min_p_v", v)?;
    }
    art.set("mp", to_value(&mp)?);
    art.set("min_p", to_value(&mn)?);
    art.set("battery", json!({ "count": b.count, "amplitude": b.amplitude }));
    Ok(())
}

fn task_amp_scan(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<()> {
    let task = Task::AmpScan;
    let sys = system(cfg, task)?;
    let p = cfg.parameters(task)?;
    let deltas = p
        .get_ref()
        .deltas
        .clone()
        .ok_or_else(|| cfg.error_at(Some(p.span()), "task `amp-scan` requires parameters.deltas"))?;
    let (f1, f2) = cfg.data(task, sys.grid())?;
    if let Some(rep) = art.absorb(
        "amp",
        amp_scan(&sys, &f1, &f2, &deltas, &eigen_opts(cfg), &system_opts(cfg)),
    )? {
        art.scan(&rep)?;
        if let Some((u, v)) = &rep.witness {
            art.field("u", u)?;
            art.field("v", v)?;
        }
        art.set("amp", to_value(&rep)?);
    }
    Ok(())
}

fn task_small_domain(cfg: &LoadedConfig, art: &mut Artifacts, seed: u64) -> Result<()> {
    let task = Task::SmallDomain;
    let ops = cfg.operators(task)?;
    let exps = cfg.exponents(task)?;
    let lambda = cfg.param(task, "lambda", |p| p.lambda)?;
    let mu = cfg.param(task, "mu", |p| p.mu)?;
    let (tau1, tau2) = cfg.weight_coefs();
    let mut s = SmallDomainSetup::new(ops.f1.clone(), ops.f2.clone(), tau1, tau2, exps, lambda, mu);
    s.seed = seed;
    if let Some(b) = &cfg.config.small_domain {
        let b = b.get_ref();
        s.n = b.n.unwrap_or(s.n);
        s.battery = b.battery.unwrap_or(s.battery);
        s.amplitude = b.amplitude.unwrap_or(s.amplitude);
        s.length_range = b.length_range.map(|r| (r[0], r[1])).unwrap_or(s.length_range);
        s.weight_length = b.weight_length.unwrap_or(s.weight_length);
        s.weight_range = b.weight_range.map(|r| (r[0], r[1])).unwrap_or(s.weight_range);
        s.bisections = b.bisections.unwrap_or(s.bisections);
    }
    let rep = small_domain_threshold(&s)?;
    art.scan(&rep)?;
    art.set("small_domain", to_value(&rep)?);
    Ok(())
}

fn task_isolation(cfg: &LoadedConfig, art: &mut Artifacts, seed: u64) -> Result<()> {
    let task = Task::Isolation;
    let sys = system(cfg, task)?;
    let lambdas = cfg.lambda_samples(task)?;
    let mut o = IsolationOptions {
        seed,
        ..IsolationOptions::default()
    };
    if let Some(b) = &cfg.config.isolation {
        o.starts = b.get_ref().starts.unwrap_or(o.starts);
        o.sweeps = b.get_ref().sweeps.unwrap_or(o.sweeps);
    }
    let rep = isolation_scan(&sys, &lambdas, &o)?;
    art.scan(&rep)?;
    art.set("isolation", to_value(&rep)?);
    Ok(())
}

fn task_verify_fucik(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<()> {
    let task = Task::VerifyFucik;
    let grid = cfg.grid(task)?;
    let exps = cfg.exponents(task)?;
    let f = cfg.fucik(task)?;
    let base = f.get_ref().base.clone().unwrap_or_else(LinearOp::laplacian);
    let kappa = f.get_ref().kappa;
    if !(kappa > 1.0) {
        return Err(cfg.error_at(Some(f.span()), format!("fucik.kappa must exceed 1, got {kappa}")));
    }
    if let Some(r) = art.absorb("fucik", verify_fucik(kappa, exps, &base, &grid, &eigen_opts(cfg)))? {
        art.set("fucik", to_value(&r)?);
    }
    Ok(())
}

fn task_verify_scalar(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<()> {
    let task = Task::VerifyScalar;
    let grid = cfg.grid(task)?;
    let s = cfg.scalar(task)?.get_ref();
    let r = verify_scalar(
        &s.operator,
        &s.weight,
        &grid,
        (s.expected_plus, s.expected_minus),
        &eigen_opts(cfg),
    );
    if let Some(r) = art.absorb("scalar", r)? {
        art.set("scalar", to_value(&r)?);
    }
    Ok(())
}
