//! Empirical checks of sign principles: MP/mP verdicts from audited
//! witnesses, the anti-maximum scan, the small-domain threshold, the
//! isolation probe, and solvability scans.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    audit_subsolution, solve_system, solve_system_monotone_mirrored, solve_system_newton, LaneEmden,
    SystemOptions, SystemProblem,
};
use crate::curves::scaling_map;
use crate::eigen::{system_principal_eigen, EigenOptions, EigenPair, ExponentPair, SystemOperators};
use crate::error::{Error, Result};
use crate::geometry::{fmt_sig17, signed_pow, Field, Grid};
use crate::linalg::BandMatrix;
use crate::operators::{reflect, Coef, OperatorSpec, Row, Sign};
use crate::solve::{stencil_bandwidth, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PrincipleKind {
    #[serde(rename = "MP")]
    Mp,
    #[serde(rename = "mP")]
    MinP,
    #[serde(rename = "AMP")]
    Amp,
    #[serde(rename = "small_domain")]
    SmallDomain,
    #[serde(rename = "isolation")]
    Isolation,
    #[serde(rename = "solvability")]
    Solvability,
}

/// One sample of a scan: the swept parameter, the measured value, and the
/// per-sample verdict when there is one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub param: f64,
    pub value: f64,
    pub verdict: Option<bool>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipleReport {
    pub kind: PrincipleKind,
    pub verdict: Option<bool>,
    pub threshold: Option<f64>,
    /// A pair violating the sign conclusion, when one was found.
    #[serde(skip)]
    pub witness: Option<(Field, Field)>,
    /// Interior maxima of the witness components.
    pub witness_max: Option<[f64; 2]>,
    pub parameters: BTreeMap<String, f64>,
    pub param_name: String,
    pub value_name: String,
    pub table: Vec<ScanRow>,
}

impl PrincipleReport {
    fn new(kind: PrincipleKind, param_name: &str, value_name: &str) -> Self {
        PrincipleReport {
            kind,
            verdict: None,
            threshold: None,
            witness: None,
            witness_max: None,
            parameters: BTreeMap::new(),
            param_name: param_name.into(),
            value_name: value_name.into(),
            table: Vec::new(),
        }
    }

    fn set_witness(&mut self, u: Field, v: Field) {
        self.witness_max = Some([u.interior_max(), v.interior_max()]);
        self.witness = Some((u, v));
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).copied()
    }

    /// Writes the scan table with a header naming the swept parameter.
    pub fn write_scan_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{},{},verdict,converged", self.param_name, self.value_name)?;
        for r in &self.table {
            let verdict = match r.verdict {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            };
            writeln!(w, "{},{},{},{}", fmt_sig17(r.param), fmt_sig17(r.value), verdict, r.converged)?;
        }
        Ok(())
    }
}

/// Relative slack of the subsolution audit for computed pairs, which carry
/// solver and eigen residuals of order 1e-8.
pub const AUDIT_RTOL: f64 = 1e-7;

fn sign_tol(u: &Field, v: &Field) -> f64 {
    1e-9 * u.sup_norm().max(v.sup_norm())
}

/// Checks the MP conclusion `u, v <= 0` for a pair that must be a discrete
/// subsolution of the homogeneous system at `(lambda, mu)`, nonpositive on
/// the boundary.
pub fn mp_check(ops: &SystemOperators, lambda: f64, mu: f64, u: &Field, v: &Field) -> Result<PrincipleReport> {
    let g = ops.grid();
    u.check_on(g)?;
    v.check_on(g)?;
    if u.boundary_max() > 0.0 || v.boundary_max() > 0.0 {
        return Err(Error::AuditFailed("pair is positive on the boundary".into()));
    }
    let zero = Field::zeros(g);
    let prob = homogeneous(ops, lambda, mu, &zero)?;
    if !audit_subsolution(ops, &prob, u, v, AUDIT_RTOL)? {
        return Err(Error::AuditFailed(format!(
            "pair is not a subsolution at ({lambda}, {mu})"
        )));
    }
    let tol = sign_tol(u, v);
    let mut rep = PrincipleReport::new(PrincipleKind::Mp, "lambda", "max_value");
    rep.parameters.insert("lambda".into(), lambda);
    rep.parameters.insert("mu".into(), mu);
    let holds = u.interior_max() <= tol && v.interior_max() <= tol;
    rep.verdict = Some(holds);
    if !holds {
        rep.set_witness(u.clone(), v.clone());
    }
    Ok(rep)
}

fn homogeneous(ops: &SystemOperators, lambda: f64, mu: f64, zero: &Field) -> Result<SystemProblem> {
    let sys = LaneEmden {
        op1: ops.s1.dop().spec().clone(),
        op2: ops.s2.dop().spec().clone(),
        tau1: ops.tau1.clone(),
        tau2: ops.tau2.clone(),
        exps: ops.exps,
    };
    SystemProblem::new(sys, lambda, mu, zero.clone(), zero.clone())
}

/// Nonnegative smooth data pairs: a constant pair followed by random sums of
/// Gaussian bumps. Bump centres and widths are relative to the domain, so
/// the same seed gives the same shapes on any box.
pub fn battery_data(grid: &Arc<Grid>, count: usize, amplitude: f64, seed: u64) -> Vec<(Field, Field)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ext = grid.extents().to_vec();
    let dim = grid.dim();
    let bump = |rng: &mut ChaCha8Rng| {
        let base: f64 = rng.random_range(0.0..0.5);
        let bumps: Vec<(f64, [f64; 2], f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.0..1.0),
                    [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)],
                    rng.random_range(0.05..0.3),
                )
            })
            .collect();
        let ext = ext.clone();
        Field::from_fn(grid, move |x| {
            let mut s = base;
            for (w, c, r) in &bumps {
                let d2: f64 = (0..dim)
                    .map(|k| ((x[k] - ext[k].0) / (ext[k].1 - ext[k].0) - c[k]).powi(2))
                    .sum();
                s += w * (-d2 / (r * r)).exp();
            }
            amplitude * s
        })
        .with_boundary(0.0)
    };
    let mut out = Vec::with_capacity(count);
    if count > 0 {
        let one = Field::constant(grid, amplitude).with_boundary(0.0);
        out.push((one.clone(), one));
    }
    while out.len() < count {
        let a = bump(&mut rng);
        let b = bump(&mut rng);
        out.push((a, b));
    }
    out
}

/// Precomputed ingredients for MP verdicts on one system.
#[derive(Debug, Clone)]
pub struct MpContext {
    pub system: LaneEmden,
    /// Positive principal pair in the diagonal gauge.
    pub plus: EigenPair,
    pub battery: Vec<(Field, Field)>,
    pub eigen_opts: EigenOptions,
    pub solve_opts: SystemOptions,
}

impl MpContext {
    pub fn new(system: LaneEmden, battery: Vec<(Field, Field)>, eigen_opts: EigenOptions) -> Result<Self> {
        let plus = system.eigen(Sign::Plus, &eigen_opts)?;
        Ok(MpContext {
            system,
            plus,
            battery,
            eigen_opts,
            solve_opts: SystemOptions::default(),
        })
    }

    /// Context for the minimum principle: the reflected system, whose
    /// positive pair is the negated negative pair of the original.
    pub fn mirrored(&self) -> Result<Self> {
        MpContext::new(self.system.reflected(), self.battery.clone(), self.eigen_opts.clone())
    }

    /// Positive pair of `(F1, reflect F2)` (`reflect_first = false`) or of
    /// `(reflect F1, F2)`, for the witnesses at negative parameters.
    fn cross_pair(&self, reflect_first: bool) -> Result<EigenPair> {
        let s = &self.system;
        let (a, b) = if reflect_first {
            (reflect(&s.op1), s.op2.clone())
        } else {
            (s.op1.clone(), reflect(&s.op2))
        };
        system_principal_eigen(&a, &b, &s.tau1, &s.tau2, s.exps, Sign::Plus, &self.eigen_opts)
    }
}

/// Witness candidates that may violate the MP conclusion at `(lambda, mu)`.
fn witnesses(ctx: &MpContext, lambda: f64, mu: f64) -> Result<Vec<(Field, Field)>> {
    let p = ctx.system.exps.p;
    let q = ctx.system.exps.q;
    let mut out = Vec::new();
    if lambda > 0.0 && mu > 0.0 {
        // The eigenpair moved along its curve to abscissa lambda is a
        // subsolution whenever mu lies on or above the curve.
        let pl = &ctx.plus;
        let (u, v, _) = scaling_map(&pl.u, pl.v.as_ref().expect("system pair"), pl.lambda1, lambda, p)?;
        out.push((u, v));
    }
    if lambda < 0.0 {
        // (phi, -t psi) with (phi, psi) positive for (F1, reflect F2).
        let e = ctx.cross_pair(false)?;
        let l0 = e.lambda1;
        let t = (l0 / -lambda).powf(1.0 / q).max(-mu / l0).max(1.0) * (1.0 + 1e-6);
        out.push((e.u.clone(), e.v.expect("system pair").scaled(-t)));
    }
    if mu < 0.0 {
        let e = ctx.cross_pair(true)?;
        let l0 = e.lambda1;
        let t = (l0 / -mu).powf(1.0 / p).max(-lambda / l0).max(1.0) * (1.0 + 1e-6);
        out.push((e.u.scaled(-t), e.v.expect("system pair")));
    }
    Ok(out)
}

/// MP verdict at `(lambda, mu)`: the conclusion is tested on every
/// candidate that passes the subsolution audit, namely the eigen and
/// cross-branch witnesses and the solutions for the nonnegative battery
/// data. MP is reported to fail when some audited candidate is positive
/// somewhere.
pub fn mp_verdict(ctx: &MpContext, lambda: f64, mu: f64) -> Result<PrincipleReport> {
    let ops = ctx.system.operators(&ctx.solve_opts.inner)?;
    let mut rep = PrincipleReport::new(PrincipleKind::Mp, "candidate", "max_value");
    rep.parameters.insert("lambda".into(), lambda);
    rep.parameters.insert("mu".into(), mu);
    let mut candidates: Vec<(Field, Field, bool)> = witnesses(ctx, lambda, mu)?
        .into_iter()
        .map(|(u, v)| (u, v, true))
        .collect();
    if lambda >= 0.0 && mu >= 0.0 {
        for (f1, f2) in &ctx.battery {
            let prob = SystemProblem::new(ctx.system.clone(), lambda, mu, f1.clone(), f2.clone())?;
            let mono = solve_system_monotone_mirrored(&prob, &ctx.solve_opts);
            match mono {
                Ok((u, v, r)) if r.converged => candidates.push((u, v, true)),
                _ => {
                    let (u, v, r) = solve_system_newton(&prob, &ctx.solve_opts)?;
                    candidates.push((u, v, r.converged));
                }
            }
        }
    }
    let mut audited = 0usize;
    let mut holds = true;
    for (k, (u, v, converged)) in candidates.into_iter().enumerate() {
        if !converged {
            rep.table.push(ScanRow {
                param: k as f64,
                value: f64::NAN,
                verdict: None,
                converged: false,
            });
            continue;
        }
        let zero = Field::zeros(ctx.system.grid());
        let sub = audit_subsolution(&ops, &homogeneous(&ops, lambda, mu, &zero)?, &u, &v, AUDIT_RTOL)?;
        let m = u.interior_max().max(v.interior_max());
        let ok = m <= sign_tol(&u, &v);
        rep.table.push(ScanRow {
            param: k as f64,
            value: m,
            verdict: sub.then_some(ok),
            converged: true,
        });
        if sub {
            audited += 1;
            if !ok && holds {
                holds = false;
                rep.set_witness(u, v);
            }
        }
    }
    rep.parameters.insert("audited".into(), audited as f64);
    rep.verdict = Some(holds);
    Ok(rep)
}

/// mP verdict: the MP verdict of the reflected system, with the witness
/// mapped back to a nonnegative-violating supersolution.
pub fn min_principle_verdict(mirrored: &MpContext, lambda: f64, mu: f64) -> Result<PrincipleReport> {
    let mut rep = mp_verdict(mirrored, lambda, mu)?;
    rep.kind = PrincipleKind::MinP;
    if let Some((u, v)) = rep.witness.take() {
        let (u, v) = (u.scaled(-1.0), v.scaled(-1.0));
        rep.witness_max = Some([u.interior_min(), v.interior_min()]);
        rep.witness = Some((u, v));
    }
    Ok(rep)
}

/// Anti-maximum scan on the diagonal `lambda = mu = lambda1^- (1 + delta)`.
///
/// Data of one sign is normalized to `f <= 0` with `lambda1^+ <= lambda1^-`
/// by reflecting when needed. Each sample is solved by Newton, first from
/// the negative eigenpair scaled to match the data, then by continuation
/// from the previous sample. Negative `delta` rows probe the region below
/// the curve, where a solution must be nonnegative; between the two
/// principal values none need exist, and such rows report no convergence.
pub fn amp_scan(
    system: &LaneEmden,
    f1: &Field,
    f2: &Field,
    deltas: &[f64],
    eigen_opts: &EigenOptions,
    opts: &SystemOptions,
) -> Result<PrincipleReport> {
    if f1.is_zero() || f2.is_zero() {
        return Err(Error::InvalidParameter("anti-maximum scan needs nonzero data".into()));
    }
    let nonpos = f1.max() <= 0.0 && f2.max() <= 0.0;
    let nonneg = f1.min() >= 0.0 && f2.min() >= 0.0;
    let plus = system.eigen(Sign::Plus, eigen_opts)?;
    let minus = system.eigen(Sign::Minus, eigen_opts)?;
    // Work in the frame where the data is nonpositive; `other` is the
    // principal value of the opposite branch there.
    let (sys, f1, f2, minus_pair, other, mirrored) = if nonpos && plus.lambda1 <= minus.lambda1 {
        (system.clone(), f1.clone(), f2.clone(), minus, plus.lambda1, false)
    } else if nonneg && minus.lambda1 <= plus.lambda1 {
        let m = EigenPair {
            u: plus.u.scaled(-1.0),
            v: plus.v.as_ref().map(|v| v.scaled(-1.0)),
            sign: Sign::Minus,
            ..plus.clone()
        };
        (system.reflected(), f1.scaled(-1.0), f2.scaled(-1.0), m, minus.lambda1, true)
    } else {
        return Err(Error::InvalidParameter(
            "anti-maximum scan needs f <= 0 with lambda1+ <= lambda1-, or f >= 0 with lambda1- <= lambda1+".into(),
        ));
    };
    let l_minus = minus_pair.lambda1;
    let (lp, lm) = if mirrored { (l_minus, other) } else { (other, l_minus) };
    let mut rep = PrincipleReport::new(PrincipleKind::Amp, "lambda", "max_value");
    rep.parameters.insert("lambda1_plus".into(), lp);
    rep.parameters.insert("lambda1_minus".into(), lm);
    rep.parameters.insert("mirrored".into(), if mirrored { 1.0 } else { 0.0 });
    let p = sys.exps.p;
    let phi = minus_pair.u.clone();
    let psi = minus_pair.v.clone().expect("system pair");
    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prev: Option<(Field, Field)> = None;
    let mut bracket: Option<f64> = None;
    let mut broken = false;
    let mut first_failure: Option<f64> = None;
    for &d in &sorted {
        let lambda = l_minus * (1.0 + d);
        let prob = SystemProblem::new(sys.clone(), lambda, lambda, f1.clone(), f2.clone())?;
        let mut best: Option<(Field, Field, bool)> = None;
        let mut starts: Vec<(Field, Field)> = Vec::new();
        if d != 0.0 {
            let a = sys
                .tau1
                .zip_map(&psi, |t, y| (lambda - l_minus) * t * signed_pow(y, sys.exps.q))?;
            let (num, den) = sys
                .grid()
                .interior_nodes()
                .fold((0.0, 0.0), |(n, m), i| (n + a.value(i) * f1.value(i), m + a.value(i).powi(2)));
            if den > 0.0 {
                let t = (num / den).abs();
                starts.push((phi.scaled(t), psi.scaled(t.powf(p))));
            }
        }
        if let Some(pv) = &prev {
            starts.push(pv.clone());
        }
        starts.push((Field::zeros(sys.grid()), Field::zeros(sys.grid())));
        for s in starts {
            let mut o = opts.clone();
            o.initial = Some(s);
            let (u, v, r) = solve_system_newton(&prob, &o)?;
            if r.converged {
                best = Some((u, v, true));
                break;
            }
            if best.is_none() {
                best = Some((u, v, false));
            }
        }
        let (u, v, converged) = best.expect("at least one start");
        let m = u.interior_max().max(v.interior_max());
        let lo = u.interior_min().min(v.interior_min());
        let verdict = if d > 0.0 { converged && m < 0.0 } else { converged && lo >= -sign_tol(&u, &v) };
        rep.table.push(ScanRow {
            param: lambda,
            value: m,
            verdict: Some(verdict),
            converged,
        });
        if converged {
            prev = Some((u, v));
        }
        if d > 0.0 {
            if verdict && !broken {
                bracket = Some(lambda - l_minus);
            } else if !verdict && !broken {
                broken = true;
                first_failure = Some(lambda);
            }
        }
    }
    rep.threshold = bracket;
    rep.verdict = Some(bracket.is_some());
    if let Some(f) = first_failure {
        rep.parameters.insert("first_failure".into(), f);
    }
    Ok(rep)
}

/// Configuration of the small-domain experiment on intervals `(0, L)`.
#[derive(Debug, Clone)]
pub struct SmallDomainSetup {
    pub op1: OperatorSpec,
    pub op2: OperatorSpec,
    pub tau1: Coef,
    pub tau2: Coef,
    pub exps: ExponentPair,
    pub lambda: f64,
    pub mu: f64,
    pub n: usize,
    pub battery: usize,
    /// Amplitude of the battery data, which caps the sup norms of the
    /// tested subsolutions.
    pub amplitude: f64,
    pub seed: u64,
    pub length_range: (f64, f64),
    /// Interval length for the weight-multiplier bisection.
    pub weight_length: f64,
    pub weight_range: (f64, f64),
    pub bisections: usize,
}

impl SmallDomainSetup {
    pub fn new(op1: OperatorSpec, op2: OperatorSpec, tau1: Coef, tau2: Coef, exps: ExponentPair, lambda: f64, mu: f64) -> Self {
        SmallDomainSetup {
            op1,
            op2,
            tau1,
            tau2,
            exps,
            lambda,
            mu,
            n: 199,
            battery: 32,
            amplitude: 1.0,
            seed: 0,
            length_range: (0.05, 4.0),
            weight_length: 1.0,
            weight_range: (0.0, 4.0),
            bisections: 30,
        }
    }

    /// Whether every battery solution on `(0, length)` with weights scaled by
    /// `mult` satisfies `u, v <= 0`.
    pub fn mp_holds(&self, length: f64, mult: f64) -> Result<bool> {
        let g = Grid::interval(0.0, length, self.n)?;
        let t1 = Field::from_values(&g, self.tau1.sample(&g)?)?.scaled(mult);
        let t2 = Field::from_values(&g, self.tau2.sample(&g)?)?.scaled(mult);
        if t1.is_zero() || t2.is_zero() || mult == 0.0 {
            // Decoupled proper equations: the scalar comparison principle.
            return Ok(true);
        }
        let sys = LaneEmden::new(self.op1.clone(), self.op2.clone(), t1, t2, self.exps)?;
        let data = battery_data(&g, self.battery, self.amplitude, self.seed);
        let opts = SystemOptions::default();
        let all = data.par_iter().map(|(f1, f2)| -> Result<bool> {
            let prob = SystemProblem::new(sys.clone(), self.lambda, self.mu, f1.clone(), f2.clone())?;
            let (u, v, r) = solve_system(&prob, &opts)?;
            Ok(r.converged && u.interior_max() <= sign_tol(&u, &v) && v.interior_max() <= sign_tol(&u, &v))
        });
        let res: Result<Vec<bool>> = all.collect();
        Ok(res?.into_iter().all(|b| b))
    }

    fn bisect(&self, lo: f64, hi: f64, holds: impl Fn(f64) -> Result<bool>) -> Result<(f64, bool)> {
        if !holds(lo)? {
            return Ok((lo, false));
        }
        if holds(hi)? {
            return Ok((hi, true));
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..self.bisections {
            let m = 0.5 * (a + b);
            if holds(m)? {
                a = m;
            } else {
                b = m;
            }
        }
        Ok((a, false))
    }
}

/// Largest interval length at which the battery satisfies the MP
/// conclusion, and separately the largest weight multiplier at the fixed
/// length. A threshold equal to the top of its range means MP held
/// throughout.
pub fn small_domain_threshold(setup: &SmallDomainSetup) -> Result<PrincipleReport> {
    let mut rep = PrincipleReport::new(PrincipleKind::SmallDomain, "length", "holds");
    let (lo, hi) = setup.length_range;
    let (l_star, l_all) = setup.bisect(lo, hi, |l| setup.mp_holds(l, 1.0))?;
    let (wlo, whi) = setup.weight_range;
    let (c_star, c_all) = setup.bisect(wlo, whi, |c| setup.mp_holds(setup.weight_length, c))?;
    rep.threshold = Some(l_star);
    rep.verdict = Some(l_star > lo);
    rep.parameters.insert("length_threshold".into(), l_star);
    rep.parameters.insert("holds_on_whole_length_range".into(), if l_all { 1.0 } else { 0.0 });
    rep.parameters.insert("weight_threshold".into(), c_star);
    rep.parameters.insert("holds_on_whole_weight_range".into(), if c_all { 1.0 } else { 0.0 });
    rep.parameters.insert("weight_length".into(), setup.weight_length);
    rep.parameters.insert("lambda".into(), setup.lambda);
    rep.parameters.insert("mu".into(), setup.mu);
    for (l, mult) in [(0.5 * l_star, 1.0), (l_star, 1.0), (1.1 * l_star, 1.0)] {
        if l >= lo && l <= hi {
            let h = setup.mp_holds(l, mult)?;
            rep.table.push(ScanRow {
                param: l,
                value: if h { 1.0 } else { 0.0 },
                verdict: Some(h),
                converged: true,
            });
        }
    }
    Ok(rep)
}

/// Options of the isolation probe.
#[derive(Debug, Clone)]
pub struct IsolationOptions {
    pub starts: usize,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for IsolationOptions {
    fn default() -> Self {
        IsolationOptions {
            starts: 3,
            sweeps: 50,
            seed: 0,
        }
    }
}

/// Best relative eigen-residual reachable on the diagonal at `lambda`.
///
/// Each sweep freezes the policies of both operators and replaces the power
/// couplings by secants (`|v|^(q-1)` times `v`), then takes one inverse
/// iteration step with the frozen block operator. An exactly singular block
/// operator means `lambda` is a discrete eigenvalue and gives residual 0.
pub fn isolation_probe(ops: &SystemOperators, lambda: f64, opts: &IsolationOptions) -> Result<f64> {
    let g = Arc::clone(ops.grid());
    let (p, q) = (ops.exps.p, ops.exps.q);
    let m = g.interior_count();
    let bw = 2 * stencil_bandwidth(&g) + 1;
    let fixed = ops.s1.dop().is_linear() && ops.s2.dop().is_linear() && p == 1.0 && q == 1.0;
    let mut cached: Option<crate::linalg::BandLu> = None;
    let mut best = f64::INFINITY;
    for s in 0..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(1000).wrapping_add(s as u64));
        let mut u = Field::zeros(&g);
        let mut v = Field::zeros(&g);
        for i in g.interior_nodes() {
            u.set(i, rng.random_range(-1.0..1.0));
            v.set(i, rng.random_range(-1.0..1.0));
        }
        for _ in 0..opts.sweeps {
            let lu = match (&cached, fixed) {
                (Some(lu), true) => lu.clone(),
                _ => {
                    let fr1 = ops.s1.dop().freeze(&u)?;
                    let fr2 = ops.s2.dop().freeze(&v)?;
                    let floor = 1e-12 * (1.0 + u.sup_norm().max(v.sup_norm()));
                    let mut a = BandMatrix::zeros(2 * m, bw, bw);
                    for k in 0..m {
                        let i = g.interior_node(k);
                        for (comp, row) in [(0usize, &fr1.rows[k]), (1, &fr2.rows[k])] {
                            for (j, &c) in row.stencil.iter().enumerate() {
                                if c != 0.0 {
                                    let nb = g.neighbor(i, Row::offset(j)).expect("interior stencil");
                                    if let Some(t) = g.interior_slot(nb) {
                                        a.add(2 * k + comp, 2 * t + comp, c);
                                    }
                                }
                            }
                            a.add(2 * k + comp, 2 * k + comp, row.zero);
                        }
                        let sv = v.value(i).abs().max(floor).powf(q - 1.0);
                        let su = u.value(i).abs().max(floor).powf(p - 1.0);
                        a.add(2 * k, 2 * k + 1, lambda * ops.tau1.value(i) * sv);
                        a.add(2 * k + 1, 2 * k, lambda * ops.tau2.value(i) * su);
                    }
                    match a.factor() {
                        Ok(lu) => {
                            if fixed {
                                cached = Some(lu.clone());
                            }
                            lu
                        }
                        Err(Error::Singular { .. }) => return Ok(0.0),
                        Err(e) => return Err(e),
                    }
                }
            };
            let mut x = vec![0.0; 2 * m];
            for k in 0..m {
                let i = g.interior_node(k);
                x[2 * k] = u.value(i);
                x[2 * k + 1] = v.value(i);
            }
            lu.solve_in_place(&mut x);
            let su = (0..m).fold(0.0f64, |a, k| a.max(x[2 * k].abs()));
            if !(su > 0.0 && su.is_finite()) {
                break;
            }
            let sv = su.powf(p);
            for k in 0..m {
                let i = g.interior_node(k);
                u.set(i, x[2 * k] / su);
                v.set(i, x[2 * k + 1] / sv);
            }
            best = best.min(relative_eigen_residual(ops, &u, &v, lambda)?);
        }
    }
    Ok(best)
}

/// `max_i |F_i[w] + lambda coupling_i| / max(|F_i[w]|, |lambda coupling_i|)`.
fn relative_eigen_residual(ops: &SystemOperators, u: &Field, v: &Field, lambda: f64) -> Result<f64> {
    let g = ops.grid();
    let a = ops.s1.dop().apply_interior(u)?;
    let b = ops.s2.dop().apply_interior(v)?;
    let s1 = ops.source1(v);
    let s2 = ops.source2(u);
    let mut r = [0.0f64; 2];
    let mut d = [0.0f64; 2];
    for (k, i) in g.interior_nodes().enumerate() {
        let (c1, c2) = (lambda * s1.value(i), lambda * s2.value(i));
        r[0] = r[0].max((a[k] + c1).abs());
        r[1] = r[1].max((b[k] + c2).abs());
        d[0] = d[0].max(a[k].abs()).max(c1.abs());
        d[1] = d[1].max(b[k].abs()).max(c2.abs());
    }
    let rel = |k: usize| if d[k] > 0.0 { r[k] / d[k] } else { f64::INFINITY };
    Ok(rel(0).max(rel(1)))
}

/// Isolation probe over a set of diagonal samples, in parallel.
pub fn isolation_scan(system: &LaneEmden, lambdas: &[f64], opts: &IsolationOptions) -> Result<PrincipleReport> {
    let ops = system.operators(&SolveOptions::default())?;
    let rows: Result<Vec<ScanRow>> = lambdas
        .par_iter()
        .map(|&l| {
            let r = isolation_probe(&ops, l, opts)?;
            Ok(ScanRow {
                param: l,
                value: r,
                verdict: None,
                converged: true,
            })
        })
        .collect();
    let mut rep = PrincipleReport::new(PrincipleKind::Isolation, "lambda", "residual");
    rep.table = rows?;
    rep.parameters.insert("starts".into(), opts.starts as f64);
    rep.parameters.insert("sweeps".into(), opts.sweeps as f64);
    Ok(rep)
}

/// Dirichlet solves on the diagonal at each sample, in parallel; the verdict
/// is whether every sample converged.
pub fn solvability_scan(
    system: &LaneEmden,
    lambdas: &[f64],
    f1: &Field,
    f2: &Field,
    opts: &SystemOptions,
) -> Result<PrincipleReport> {
    let rows: Result<Vec<ScanRow>> = lambdas
        .par_iter()
        .map(|&l| {
            let prob = SystemProblem::new(system.clone(), l, l, f1.clone(), f2.clone())?;
            let (u, v, r) = solve_system(&prob, opts)?;
            Ok(ScanRow {
                param: l,
                value: u.sup_norm().max(v.sup_norm()),
                verdict: Some(r.converged),
                converged: r.converged,
            })
        })
        .collect();
    let mut rep = PrincipleReport::new(PrincipleKind::Solvability, "lambda", "sup_norm");
    rep.table = rows?;
    rep.verdict = Some(rep.table.iter().all(|r| r.converged));
    Ok(rep)
}

/// The Fucik pair `(max{L, kappa L}, min{L, kappa L})` with unit weights.
pub fn fucik_system(grid: &Arc<Grid>, kappa: f64, exps: ExponentPair) -> Result<LaneEmden> {
    let w = Field::constant(grid, 1.0);
    LaneEmden::new(OperatorSpec::fucik_max(kappa), OperatorSpec::fucik_min(kappa), w.clone(), w, exps)
}
