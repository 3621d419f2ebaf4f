//! Dirichlet problems for the coupled system
//!
//! ```text
//! F1[u] + lambda tau1 |v|^(q-1) v = f1,   F2[v] + mu tau2 |u|^(p-1) u = f2,
//! ```
//!
//! with zero boundary data, plus the experiments that probe maximum
//! principles, the anti-maximum principle, small domains and isolation.

mod principles;

pub use principles::*;

use std::sync::Arc;

use crate::eigen::{system_principal_eigen, EigenOptions, EigenPair, ExponentPair, Regime, SystemOperators};
use crate::error::{Error, Result};
use crate::geometry::{signed_pow, Field, Grid};
use crate::linalg::BandMatrix;
use crate::operators::{lower_envelope, reflect, row_value, Row, Sign};
use crate::operators::OperatorSpec;
use crate::solve::{stencil_bandwidth, Method, SolveOptions, SolveReport};

/// Operators, weights and exponents of a system, without parameters or data.
#[derive(Debug, Clone)]
pub struct LaneEmden {
    pub op1: OperatorSpec,
    pub op2: OperatorSpec,
    pub tau1: Field,
    pub tau2: Field,
    pub exps: ExponentPair,
}

impl LaneEmden {
    pub fn new(op1: OperatorSpec, op2: OperatorSpec, tau1: Field, tau2: Field, exps: ExponentPair) -> Result<Self> {
        tau1.check_grid(&tau2)?;
        let s = LaneEmden {
            op1,
            op2,
            tau1,
            tau2,
            exps,
        };
        s.operators(&SolveOptions::default())?;
        Ok(s)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.tau1.grid()
    }

    pub fn operators(&self, inner: &SolveOptions) -> Result<SystemOperators> {
        SystemOperators::new(&self.op1, &self.op2, &self.tau1, &self.tau2, self.exps, inner)
    }

    /// The system for `(-u, -v)`: both operators reflected.
    pub fn reflected(&self) -> LaneEmden {
        LaneEmden {
            op1: reflect(&self.op1),
            op2: reflect(&self.op2),
            ..self.clone()
        }
    }

    /// Principal half-eigenpair on branch `sign` (requires `pq = 1`).
    pub fn eigen(&self, sign: Sign, opts: &EigenOptions) -> Result<EigenPair> {
        system_principal_eigen(&self.op1, &self.op2, &self.tau1, &self.tau2, self.exps, sign, opts)
    }
}

/// A system together with its parameters and right-hand sides.
#[derive(Debug, Clone)]
pub struct SystemProblem {
    pub system: LaneEmden,
    pub lambda: f64,
    pub mu: f64,
    pub f1: Field,
    pub f2: Field,
}

impl SystemProblem {
    pub fn new(system: LaneEmden, lambda: f64, mu: f64, f1: Field, f2: Field) -> Result<Self> {
        f1.check_on(system.grid())?;
        f2.check_on(system.grid())?;
        if !(lambda.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameter("lambda and mu must be finite".into()));
        }
        Ok(SystemProblem {
            system,
            lambda,
            mu,
            f1,
            f2,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.system.grid()
    }

    /// Same system and parameters, new data.
    pub fn with_data(&self, f1: Field, f2: Field) -> Result<Self> {
        SystemProblem::new(self.system.clone(), self.lambda, self.mu, f1, f2)
    }

    /// The problem satisfied by `(-u, -v)`.
    pub fn reflected(&self) -> SystemProblem {
        SystemProblem {
            system: self.system.reflected(),
            lambda: self.lambda,
            mu: self.mu,
            f1: self.f1.scaled(-1.0),
            f2: self.f2.scaled(-1.0),
        }
    }

    fn data_scale(&self) -> f64 {
        self.f1.sup_norm().max(self.f2.sup_norm())
    }
}

#[derive(Debug, Clone)]
pub struct SystemOptions {
    /// Residual tolerance relative to `1 + data scale`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation for the alternating iteration.
    pub damping: f64,
    pub inner: SolveOptions,
    pub initial: Option<(Field, Field)>,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions {
            tol: 1e-8,
            max_iter: 5000,
            damping: 0.7,
            inner: SolveOptions::default(),
            initial: None,
        }
    }
}

/// Interior sup-norms of both equation residuals, and the scale they are
/// measured against: the largest of the data and the two coupling terms.
pub fn system_residual(ops: &SystemOperators, prob: &SystemProblem, u: &Field, v: &Field) -> Result<(f64, f64)> {
    let g = ops.grid();
    let s1 = ops.source1(v);
    let s2 = ops.source2(u);
    let a = ops.s1.dop().apply_interior(u)?;
    let b = ops.s2.dop().apply_interior(v)?;
    let mut res: f64 = 0.0;
    let mut scale = prob.data_scale();
    for (k, i) in g.interior_nodes().enumerate() {
        let c1 = prob.lambda * s1.value(i);
        let c2 = prob.mu * s2.value(i);
        res = res.max((a[k] + c1 - prob.f1.value(i)).abs());
        res = res.max((b[k] + c2 - prob.f2.value(i)).abs());
        scale = scale.max(c1.abs()).max(c2.abs());
    }
    if !res.is_finite() {
        return Err(Error::NonFinite("system residual".into()));
    }
    Ok((res, scale))
}

fn report(method: Method, iterations: usize, residual: f64, converged: bool) -> SolveReport {
    SolveReport {
        iterations,
        residual,
        policy_switches: 0,
        converged,
        method,
    }
}

fn start(prob: &SystemProblem, opts: &SystemOptions) -> Result<(Field, Field)> {
    let g = prob.grid();
    match &opts.initial {
        Some((u, v)) => {
            u.check_on(g)?;
            v.check_on(g)?;
            Ok((u.with_boundary(0.0), v.with_boundary(0.0)))
        }
        None => Ok((Field::zeros(g), Field::zeros(g))),
    }
}

/// Damped alternating (Gauss-Seidel) iteration
/// `u <- solve(F1, f1 - lambda tau1 v^q)`, `v <- solve(F2, f2 - mu tau2 u^p)`.
///
/// Contractive below the curves; above them the linearization has an
/// eigenvalue beyond 1 for every damping, and the report says so through
/// `converged = false`.
pub fn solve_system_picard(prob: &SystemProblem, opts: &SystemOptions) -> Result<(Field, Field, SolveReport)> {
    let ops = prob.system.operators(&opts.inner)?;
    let (mut u, mut v) = start(prob, opts)?;
    let w = opts.damping;
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let (r, scale) = system_residual(&ops, prob, &u, &v)?;
        residual = r;
        if r <= opts.tol * (1.0 + scale) {
            return Ok((u, v, report(Method::Picard, it, r, true)));
        }
        if it == opts.max_iter || r > 1e100 {
            break;
        }
        let rhs1 = prob.f1.sub(&ops.source1(&v).scaled(prob.lambda))?;
        let (u_star, rep1) = ops.s1.solve(&rhs1, Some(&u))?;
        u = u.zip_map(&u_star, |a, b| a + w * (b - a))?;
        let rhs2 = prob.f2.sub(&ops.source2(&u).scaled(prob.mu))?;
        let (v_star, rep2) = ops.s2.solve(&rhs2, Some(&v))?;
        v = v.zip_map(&v_star, |a, b| a + w * (b - a))?;
        if !(rep1.converged && rep2.converged) {
            return Ok((u, v, report(Method::Picard, it + 1, residual, false)));
        }
    }
    Ok((u, v, report(Method::Picard, opts.max_iter, residual, false)))
}

/// Monotone iteration from `(0, 0)` for `f1, f2 <= 0`:
/// `F1[u_{n+1}] = f1 - lambda tau1 v_n^q`, `F2[v_{n+1}] = f2 - mu tau2 u_n^p`.
/// Every sweep must not decrease either component.
pub fn solve_system_monotone_signed(prob: &SystemProblem, opts: &SystemOptions) -> Result<(Field, Field, SolveReport)> {
    if !(prob.lambda >= 0.0 && prob.mu >= 0.0) {
        return Err(Error::InvalidParameter("monotone iteration needs lambda, mu >= 0".into()));
    }
    if prob.f1.max() > 0.0 || prob.f2.max() > 0.0 {
        return Err(Error::InvalidParameter("monotone iteration needs f1, f2 <= 0".into()));
    }
    let g = Arc::clone(prob.grid());
    monotone_from(prob, opts, Field::zeros(&g), Field::zeros(&g))
}

/// Mirrored signed solver for `f1, f2 >= 0`: runs the monotone iteration on
/// the reflected problem and returns the nonpositive pair.
pub fn solve_system_monotone_mirrored(prob: &SystemProblem, opts: &SystemOptions) -> Result<(Field, Field, SolveReport)> {
    let (u, v, rep) = solve_system_monotone_signed(&prob.reflected(), opts)?;
    Ok((u.scaled(-1.0), v.scaled(-1.0), rep))
}

fn monotone_from(prob: &SystemProblem, opts: &SystemOptions, u0: Field, v0: Field) -> Result<(Field, Field, SolveReport)> {
    let ops = prob.system.operators(&opts.inner)?;
    let (mut u, mut v) = (u0, v0);
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let (r, scale) = system_residual(&ops, prob, &u, &v)?;
        residual = r;
        if r <= opts.tol * (1.0 + scale) {
            return Ok((u, v, report(Method::Monotone, it, r, true)));
        }
        if it == opts.max_iter || scale > 1e100 {
            break;
        }
        let rhs1 = prob.f1.sub(&ops.source1(&v).scaled(prob.lambda))?;
        let rhs2 = prob.f2.sub(&ops.source2(&u).scaled(prob.mu))?;
        let (un, rep1) = ops.s1.solve(&rhs1, Some(&u))?;
        let (vn, rep2) = ops.s2.solve(&rhs2, Some(&v))?;
        if !(rep1.converged && rep2.converged) {
            return Ok((u, v, report(Method::Monotone, it + 1, residual, false)));
        }
        let slack = 1e-9 * (1.0 + un.sup_norm().max(vn.sup_norm()));
        let drop = g_drop(&u, &un).max(g_drop(&v, &vn));
        if drop > slack {
            return Err(Error::MonotonicityViolated {
                iteration: it + 1,
                amount: drop,
            });
        }
        u = un;
        v = vn;
    }
    Ok((u, v, report(Method::Monotone, opts.max_iter, residual, false)))
}

/// Largest pointwise decrease from `old` to `new`.
fn g_drop(old: &Field, new: &Field) -> f64 {
    old.values()
        .iter()
        .zip(new.values())
        .fold(0.0f64, |m, (a, b)| m.max(a - b))
}

/// Derivative of `|x|^(e-1) x`, with `|x|` floored at `floor` so that
/// exponents below one stay finite at zero.
fn power_derivative(x: f64, e: f64, floor: f64) -> f64 {
    if e == 1.0 {
        1.0
    } else {
        e * x.abs().max(floor).powf(e - 1.0)
    }
}

/// Newton's method on the coupled system, with the policy of each operator
/// frozen at the current iterate (semismooth Newton) and backtracking on the
/// residual sup-norm. Unknowns are interleaved `(u_s, v_s)` per interior
/// slot so the Jacobian stays banded.
pub fn solve_system_newton(prob: &SystemProblem, opts: &SystemOptions) -> Result<(Field, Field, SolveReport)> {
    let ops = prob.system.operators(&opts.inner)?;
    let g = Arc::clone(prob.grid());
    let (p, q) = (prob.system.exps.p, prob.system.exps.q);
    let (mut u, mut v) = start(prob, opts)?;
    let m = g.interior_count();
    let bw = 2 * stencil_bandwidth(&g) + 1;
    let (mut res, mut scale) = system_residual(&ops, prob, &u, &v)?;
    for it in 0..=opts.max_iter.min(200) {
        if res <= opts.tol * (1.0 + scale) {
            return Ok((u, v, report(Method::Newton, it, res, true)));
        }
        if it == opts.max_iter.min(200) {
            break;
        }
        let fr1 = ops.s1.dop().freeze(&u)?;
        let fr2 = ops.s2.dop().freeze(&v)?;
        let floor = 1e-10 * (1.0 + u.sup_norm().max(v.sup_norm()));
        let mut jac = BandMatrix::zeros(2 * m, bw, bw);
        let mut rhs = vec![0.0; 2 * m];
        for s in 0..m {
            let i = g.interior_node(s);
            let mut add_rows = |row: &Row, comp: usize| {
                for (k, &c) in row.stencil.iter().enumerate() {
                    if c != 0.0 {
                        let j = g.neighbor(i, Row::offset(k)).expect("interior stencil");
                        if let Some(t) = g.interior_slot(j) {
                            jac.add(2 * s + comp, 2 * t + comp, c);
                        }
                    }
                }
                jac.add(2 * s + comp, 2 * s + comp, row.zero);
            };
            add_rows(&fr1.rows[s], 0);
            add_rows(&fr2.rows[s], 1);
            let (ui, vi) = (u.value(i), v.value(i));
            jac.add(2 * s, 2 * s + 1, prob.lambda * ops.tau1.value(i) * power_derivative(vi, q, floor));
            jac.add(2 * s + 1, 2 * s, prob.mu * ops.tau2.value(i) * power_derivative(ui, p, floor));
            rhs[2 * s] = -(row_value(&g, &fr1.rows[s], u.values(), i) + prob.lambda * ops.tau1.value(i) * signed_pow(vi, q)
                - prob.f1.value(i));
            rhs[2 * s + 1] = -(row_value(&g, &fr2.rows[s], v.values(), i)
                + prob.mu * ops.tau2.value(i) * signed_pow(ui, p)
                - prob.f2.value(i));
        }
        let lu = match jac.factor() {
            Ok(lu) => lu,
            Err(Error::Singular { .. }) => return Ok((u, v, report(Method::Newton, it, res, false))),
            Err(e) => return Err(e),
        };
        lu.solve_in_place(&mut rhs);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut un = u.clone();
            let mut vn = v.clone();
            for s in 0..m {
                let i = g.interior_node(s);
                un.set(i, u.value(i) + t * rhs[2 * s]);
                vn.set(i, v.value(i) + t * rhs[2 * s + 1]);
            }
            if let Ok((r, sc)) = system_residual(&ops, prob, &un, &vn) {
                if r < (1.0 - 1e-4 * t) * res {
                    u = un;
                    v = vn;
                    res = r;
                    scale = sc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok((u, v, report(Method::Newton, it + 1, res, false)));
        }
    }
    Ok((u, v, report(Method::Newton, opts.max_iter.min(200), res, false)))
}

/// Alternating iteration first; Newton from the start pair if it does not
/// converge.
pub fn solve_system(prob: &SystemProblem, opts: &SystemOptions) -> Result<(Field, Field, SolveReport)> {
    let mut quick = opts.clone();
    quick.max_iter = opts.max_iter.min(400);
    let (u, v, rep) = solve_system_picard(prob, &quick)?;
    if rep.converged {
        return Ok((u, v, rep));
    }
    solve_system_newton(prob, opts)
}

/// The explicit subsolution `(eps phi, eps^k psi)` used by the sublinear
/// solver, where `(phi, psi)` is the positive eigenpair of the concave
/// envelopes with exponents `(p, 1/p)` and weights `lambda tau1`, `mu tau2`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SublinearPlan {
    pub k: f64,
    pub eps: f64,
    pub lambda_env: f64,
    pub halvings: usize,
    #[serde(skip)]
    pub phi: Field,
    #[serde(skip)]
    pub psi: Field,
}

impl SublinearPlan {
    /// The start pair with amplitude `eps` scaled by `factor`.
    pub fn start(&self, factor: f64) -> (Field, Field) {
        let e = self.eps * factor;
        (self.phi.scaled(e), self.psi.scaled(e.powf(self.k)))
    }
}

/// Monotone iteration upward from the explicit subsolution, for `pq < 1`,
/// `f1, f2 <= 0` and `lambda, mu > 0`.
pub fn solve_sublinear(prob: &SystemProblem, opts: &SystemOptions) -> Result<(Field, Field, SolveReport, SublinearPlan)> {
    let plan = sublinear_plan(prob, &EigenOptions::default())?;
    let (u, v, rep) = solve_sublinear_scaled(prob, opts, &plan, 1.0)?;
    Ok((u, v, rep, plan))
}

/// As [`solve_sublinear`] from the plan's start with amplitude scaled by
/// `factor`; `0 < factor <= 1` keeps the start a subsolution.
pub fn solve_sublinear_scaled(
    prob: &SystemProblem,
    opts: &SystemOptions,
    plan: &SublinearPlan,
    factor: f64,
) -> Result<(Field, Field, SolveReport)> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::InvalidParameter(format!("subsolution factor {factor} outside (0, 1]")));
    }
    let (u0, v0) = plan.start(factor);
    monotone_from(prob, opts, u0, v0)
}

/// Chooses `k = (p + 1/q) / 2` and the largest `eps` allowed by
/// `l eps^(1 - k q) <= |psi|^((pq - 1)/p)` and `l eps^(k - p) <= 1`, halved,
/// then halves further until the discrete subsolution audit passes.
pub fn sublinear_plan(prob: &SystemProblem, opts: &EigenOptions) -> Result<SublinearPlan> {
    let (p, q) = (prob.system.exps.p, prob.system.exps.q);
    if prob.system.exps.regime() != Regime::Sublinear {
        return Err(Error::InvalidParameter(format!("sublinear solver needs pq < 1, got {}", p * q)));
    }
    if !(prob.lambda > 0.0 && prob.mu > 0.0) {
        return Err(Error::InvalidParameter("sublinear solver needs lambda, mu > 0".into()));
    }
    if prob.f1.max() > 0.0 || prob.f2.max() > 0.0 {
        return Err(Error::InvalidParameter("sublinear solver needs f1, f2 <= 0".into()));
    }
    let sys = &prob.system;
    let pair = system_principal_eigen(
        &lower_envelope(&sys.op1).spec,
        &lower_envelope(&sys.op2).spec,
        &sys.tau1.scaled(prob.lambda),
        &sys.tau2.scaled(prob.mu),
        ExponentPair::new(p, 1.0 / p)?,
        Sign::Plus,
        opts,
    )?;
    let l = pair.lambda1;
    let psi = pair.v.expect("system pair");
    let k = 0.5 * (p + 1.0 / q);
    let e1 = (psi.sup_norm().powf((p * q - 1.0) / p) / l).powf(1.0 / (1.0 - k * q));
    let e2 = (1.0 / l).powf(1.0 / (k - p));
    let mut plan = SublinearPlan {
        k,
        eps: 0.5 * e1.min(e2),
        lambda_env: l,
        halvings: 0,
        phi: pair.u,
        psi,
    };
    let ops = sys.operators(&SolveOptions::default())?;
    for _ in 0..=20 {
        let (u0, v0) = plan.start(1.0);
        if audit_subsolution(&ops, prob, &u0, &v0, 1e-12)? {
            return Ok(plan);
        }
        plan.eps *= 0.5;
        plan.halvings += 1;
    }
    Err(Error::AuditFailed(format!(
        "subsolution inequalities fail after 20 halvings (eps = {:e})",
        plan.eps
    )))
}

/// `F1[u] + lambda tau1 v^q >= f1` and `F2[v] + mu tau2 u^p >= f2` at every
/// interior node, up to `rtol` times the largest term involved.
pub fn audit_subsolution(ops: &SystemOperators, prob: &SystemProblem, u: &Field, v: &Field, rtol: f64) -> Result<bool> {
    let g = ops.grid();
    let a = ops.s1.dop().apply_interior(u)?;
    let b = ops.s2.dop().apply_interior(v)?;
    let s1 = ops.source1(v);
    let s2 = ops.source2(u);
    let mut scale: f64 = 0.0;
    for (k, i) in g.interior_nodes().enumerate() {
        scale = scale.max(a[k].abs()).max(b[k].abs());
        scale = scale.max((prob.lambda * s1.value(i)).abs()).max((prob.mu * s2.value(i)).abs());
    }
    let tol = rtol * scale;
    Ok(g.interior_nodes().enumerate().all(|(k, i)| {
        a[k] + prob.lambda * s1.value(i) - prob.f1.value(i) >= -tol
            && b[k] + prob.mu * s2.value(i) - prob.f2.value(i) >= -tol
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use std::f64::consts::PI;

    fn laplace_pair(n: usize, p: f64, q: f64) -> LaneEmden {
        let g = Grid::interval(0.0, 1.0, n).unwrap();
        LaneEmden::new(
            OperatorSpec::laplacian(),
            OperatorSpec::laplacian(),
            Field::constant(&g, 1.0),
            Field::constant(&g, 1.0),
            ExponentPair::new(p, q).unwrap(),
        )
        .unwrap()
    }

    fn problem(sys: &LaneEmden, lambda: f64, mu: f64, f: f64) -> SystemProblem {
        let g = sys.grid();
        let d = Field::constant(g, f).with_boundary(0.0);
        SystemProblem::new(sys.clone(), lambda, mu, d.clone(), d).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let sys = laplace_pair(49, 1.0, 1.0);
        let (u, v, rep) = solve_system_picard(&problem(&sys, 3.0, 3.0, 0.0), &SystemOptions::default()).unwrap();
        assert!(rep.converged && u.is_zero() && v.is_zero());
        let (u, v, rep) =
            solve_system_monotone_signed(&problem(&sys, 3.0, 3.0, 0.0), &SystemOptions::default()).unwrap();
        assert!(rep.converged && rep.iterations == 0 && u.is_zero() && v.is_zero());
    }

    #[test]
    fn picard_monotone_and_newton_agree() {
        let sys = laplace_pair(99, 1.0, 1.0);
        let prob = problem(&sys, PI * PI / 2.0, PI * PI / 2.0, -1.0);
        let opts = SystemOptions::default();
        let (u1, v1, r1) = solve_system_picard(&prob, &opts).unwrap();
        let (u2, v2, r2) = solve_system_monotone_signed(&prob, &opts).unwrap();
        let (u3, v3, r3) = solve_system_newton(&prob, &opts).unwrap();
        assert!(r1.converged && r2.converged && r3.converged);
        assert_eq!(r3.iterations, 1);
        assert!(u1.distance(&u2).unwrap() < 1e-7 && v1.distance(&v2).unwrap() < 1e-7);
        assert!(u1.distance(&u3).unwrap() < 1e-7 && v1.distance(&v3).unwrap() < 1e-7);
        assert!(u2.interior_min() > 0.0);
    }

    #[test]
    fn doubling_data_doubles_solution() {
        let sys = laplace_pair(49, 1.0, 1.0);
        let opts = SystemOptions::default();
        let (u1, v1, _) = solve_system_picard(&problem(&sys, 4.0, 4.0, -1.0), &opts).unwrap();
        let (u2, v2, _) = solve_system_picard(&problem(&sys, 4.0, 4.0, -2.0), &opts).unwrap();
        assert!(u2.distance(&u1.scaled(2.0)).unwrap() < 1e-8);
        assert!(v2.distance(&v1.scaled(2.0)).unwrap() < 1e-8);
    }

    #[test]
    fn mirrored_solution_is_nonpositive() {
        let g = Grid::interval(0.0, 1.0, 49).unwrap();
        let w = Field::constant(&g, 1.0);
        let sys = LaneEmden::new(
            OperatorSpec::pucci_plus(1.0, 2.0),
            OperatorSpec::pucci_plus(1.0, 2.0),
            w.clone(),
            w,
            ExponentPair::new(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let prob = problem(&sys, 5.0, 5.0, 1.0);
        let (u, v, rep) = solve_system_monotone_mirrored(&prob, &SystemOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(u.interior_max() < 0.0 && v.interior_max() < 0.0);
        let ops = sys.operators(&SolveOptions::default()).unwrap();
        let (r, s) = system_residual(&ops, &prob, &u, &v).unwrap();
        assert!(r <= 1e-8 * (1.0 + s));
    }

    #[test]
    fn monotone_rejects_positive_data() {
        let sys = laplace_pair(19, 1.0, 1.0);
        assert!(solve_system_monotone_signed(&problem(&sys, 1.0, 1.0, 1.0), &SystemOptions::default()).is_err());
    }

    #[test]
    fn picard_reports_divergence_above_curve() {
        let sys = laplace_pair(49, 1.0, 1.0);
        let prob = problem(&sys, 1.5 * PI * PI, 1.5 * PI * PI, -1.0);
        let opts = SystemOptions {
            max_iter: 300,
            ..SystemOptions::default()
        };
        let (_, _, rep) = solve_system_picard(&prob, &opts).unwrap();
        assert!(!rep.converged);
        let (u, _, rep) = solve_system(&prob, &opts).unwrap();
        assert!(rep.converged && rep.method == Method::Newton);
        // Above the first curve with f <= 0 the solution turns negative.
        assert!(u.interior_max() < 0.0);
    }

    #[test]
    fn sublinear_plan_midpoint() {
        let sys = laplace_pair(49, 0.5, 1.0);
        let prob = problem(&sys, 1.0, 1.0, 0.0);
        let plan = sublinear_plan(&prob, &EigenOptions::default()).unwrap();
        assert!((plan.k - 0.75).abs() < 1e-15);
        assert!(plan.eps > 0.0 && plan.lambda_env > 0.0);
        let bad = problem(&laplace_pair(19, 1.0, 1.0), 1.0, 1.0, 0.0);
        assert!(sublinear_plan(&bad, &EigenOptions::default()).is_err());
    }

    #[test]
    fn sublinear_solution_is_positive_and_unique() {
        let sys = laplace_pair(99, 0.5, 1.0);
        let prob = problem(&sys, 1.0, 1.0, 0.0);
        let opts = SystemOptions::default();
        let (u, v, rep, plan) = solve_sublinear(&prob, &opts).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(u.interior_min() > 0.0 && v.interior_min() > 0.0);
        let (u2, v2, rep2) = solve_sublinear_scaled(&prob, &opts, &plan, 0.5).unwrap();
        assert!(rep2.converged);
        assert!(u.distance(&u2).unwrap() <= 1e-6 && v.distance(&v2).unwrap() <= 1e-6);
    }
}
