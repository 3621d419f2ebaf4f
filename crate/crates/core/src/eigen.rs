//! Principal half-eigenvalues.
//!
//! Scalar problems `F[phi] + lambda theta phi = 0` are solved by inverse power
//! iteration on the proper part of `F`. Systems
//!
//! ```text
//! F1[u] + lambda tau1 |v|^(q-1) v = 0,   F2[v] + mu tau2 |u|^(p-1) u = 0,   pq = 1
//! ```
//!
//! use a coupled inverse iteration in which `u` and `v` are sup-normalized
//! independently. Its fixed points are points `(lambda, mu)` on the principal
//! curve, and the diagonal value is recovered as `(mu lambda^p)^(1/(p+1))`.
//! Negative branches run the positive iteration on the reflected operators.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{signed_pow, Field, Grid};
use crate::ode::Dopri5;
use crate::operators::{
    discretize, reflect, Coef, DiscreteOperator, LinearOp, OperatorSpec, Sign, ZeroOrder,
};
use crate::solve::{assemble, solve_dirichlet, PreparedLinear, SolveOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    PqEqual1,
    Sublinear,
    Superlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
}

impl ExponentPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponents must be positive, got p = {p}, q = {q}"
            )));
        }
        Ok(ExponentPair { p, q })
    }

    /// The pair `(p, 1/p)`.
    pub fn conjugate(p: f64) -> Result<Self> {
        ExponentPair::new(p, 1.0 / p)
    }

    pub fn regime(&self) -> Regime {
        let pq = self.p * self.q;
        if (pq - 1.0).abs() <= 1e-12 {
            Regime::PqEqual1
        } else if pq < 1.0 {
            Regime::Sublinear
        } else {
            Regime::Superlinear
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    pub u: Field,
    pub v: Option<Field>,
    pub sign: Sign,
    pub residual: f64,
    pub iterations: usize,
    /// Per-equation multipliers `(lambda, mu)` of the independently
    /// normalized iteration, before the diagonal gauge is applied.
    pub lambda_raw: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub sign: Sign,
    pub residual: f64,
    pub iterations: usize,
    pub lambda_raw: [f64; 2],
}

impl EigenPair {
    pub fn summary(&self) -> EigenSummary {
        EigenSummary {
            lambda1: self.lambda1,
            sign: self.sign,
            residual: self.residual,
            iterations: self.iterations,
            lambda_raw: [self.lambda_raw.0, self.lambda_raw.1],
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Relative eigen-equation residual.
    pub tol: f64,
    /// Relative change of the eigenvalue between sweeps.
    pub dtol: f64,
    pub max_iter: usize,
    pub inner: SolveOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            dtol: 1e-10,
            max_iter: 500,
            inner: SolveOptions::default(),
        }
    }
}

/// A scalar Dirichlet solver with zero boundary data that factors linear
/// operators once.
#[derive(Debug, Clone)]
pub struct ScalarSolver {
    dop: DiscreteOperator,
    prepared: Option<PreparedLinear>,
    opts: SolveOptions,
}

impl ScalarSolver {
    pub fn new(dop: DiscreteOperator, opts: SolveOptions) -> Result<Self> {
        let prepared = if dop.is_linear() {
            Some(PreparedLinear::new(&dop)?)
        } else {
            None
        };
        Ok(ScalarSolver { dop, prepared, opts })
    }

    pub fn dop(&self) -> &DiscreteOperator {
        &self.dop
    }

    /// Solves `F[w] = f` with `w = 0` on the boundary.
    pub fn solve(&self, f: &Field, initial: Option<&Field>) -> Result<(Field, SolveReport)> {
        match &self.prepared {
            Some(p) => {
                let w = p.solve(f, &Field::zeros(self.dop.grid()))?;
                Ok((
                    w,
                    SolveReport {
                        iterations: 1,
                        residual: 0.0,
                        policy_switches: 0,
                        converged: true,
                        method: crate::solve::Method::Policy,
                    },
                ))
            }
            None => {
                let mut o = self.opts.clone();
                o.initial = initial.cloned();
                solve_dirichlet(&self.dop, f, &o)
            }
        }
    }

    /// Like [`ScalarSolver::solve`] but non-convergence is an error.
    pub fn solve_strict(&self, f: &Field, initial: Option<&Field>) -> Result<Field> {
        let (w, rep) = self.solve(f, initial)?;
        if !rep.converged {
            return Err(Error::NotConverged {
                iterations: rep.iterations,
                residual: rep.residual,
            });
        }
        Ok(w)
    }
}

fn check_weight(w: &Field) -> Result<()> {
    if w.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("weights must be nonnegative".into()));
    }
    if w.interior_values().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroWeight);
    }
    Ok(())
}

/// Splits a nonproper zero-order term proportional to the weight off the
/// operator. Returns the proper operator and the proportionality constant.
fn proper_shift(spec: &OperatorSpec, grid: &Arc<Grid>, weight: &Field) -> Result<(OperatorSpec, f64)> {
    let coef = match &spec.zero_order {
        Some(ZeroOrder::Linear { c }) => c.sample(grid)?,
        Some(ZeroOrder::Abs { theta, sign: Sign::Plus }) => theta.sample(grid)?,
        _ => return Ok((spec.clone(), 0.0)),
    };
    let interior: Vec<usize> = grid.interior_nodes().collect();
    if interior.iter().all(|&i| coef[i] <= 0.0) {
        return Ok((spec.clone(), 0.0));
    }
    let (num, den) = interior
        .iter()
        .fold((0.0, 0.0), |(a, b), &i| (a + coef[i] * weight.value(i), b + weight.value(i).powi(2)));
    let s = num / den;
    let scale = coef.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if interior
        .iter()
        .any(|&i| (coef[i] - s * weight.value(i)).abs() > 1e-12 * scale)
    {
        return Err(Error::Unsupported(
            "nonproper zero-order coefficient must be a constant multiple of the weight".into(),
        ));
    }
    let mut proper = spec.clone();
    proper.zero_order = None;
    Ok((proper, s))
}

/// Interior-normalized starting field: product of distances to the faces.
pub fn initial_guess(grid: &Arc<Grid>) -> Field {
    let d = grid.distance_product();
    let m = d.sup_norm();
    d.scaled(1.0 / m)
}

fn check_positive(u: &Field, iteration: usize) -> Result<()> {
    let m = u.interior_min();
    if !(m > 0.0) {
        return Err(Error::PositivityLost { iteration, min: m });
    }
    Ok(())
}

/// Principal half-eigenvalue of `F[phi] + lambda theta phi = 0` on the branch
/// `sign`, with `max |phi| = 1`.
pub fn scalar_principal_eigen(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    weight: &Field,
    sign: Sign,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    weight.check_on(grid)?;
    check_weight(weight)?;
    let work = match sign {
        Sign::Plus => spec.clone(),
        Sign::Minus => reflect(spec),
    };
    let (proper, shift) = proper_shift(&work, grid, weight)?;
    let solver = ScalarSolver::new(discretize(&proper, grid)?, opts.inner.clone())?;
    let dop = solver.dop().clone();
    let mut u = initial_guess(grid);
    let mut lam = 0.0;
    let mut w_prev: Option<Field> = None;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let rhs = weight.mul(&u)?.scaled(-1.0);
        let w = solver.solve_strict(&rhs, w_prev.as_ref())?;
        let nrm = w.sup_norm();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::NonFinite(format!("inverse iterate at sweep {it}")));
        }
        let lam_new = 1.0 / nrm;
        let u_new = w.scaled(lam_new);
        check_positive(&u_new, it)?;
        let fu = dop.apply_interior(&u_new)?;
        let wu: Vec<f64> = grid
            .interior_nodes()
            .map(|i| weight.value(i) * u_new.value(i))
            .collect();
        let scale = wu.iter().fold(0.0f64, |m, v| m.max(v.abs())) * lam_new;
        residual = fu
            .iter()
            .zip(&wu)
            .fold(0.0f64, |m, (a, b)| m.max((a + lam_new * b).abs()))
            / scale;
        let dl = (lam_new - lam).abs();
        lam = lam_new;
        w_prev = Some(w);
        u = u_new;
        if residual <= opts.tol && dl <= opts.dtol * lam {
            let u = match sign {
                Sign::Plus => u,
                Sign::Minus => u.scaled(-1.0),
            };
            return Ok(EigenPair {
                lambda1: lam - shift,
                u,
                v: None,
                sign,
                residual,
                iterations: it,
                lambda_raw: (lam, lam),
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Lower bound `1 / (C_A |theta|_N) - 1` for the eigenvalue of an operator
/// carrying a `+theta u` term; `+inf` for a vanishing weight.
pub fn abp_lower_bound(theta: &Field, c_a: f64) -> f64 {
    let n = theta.lr_norm(theta.grid().dim() as f64);
    if n == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (c_a * n) - 1.0
    }
}

/// Operators and weights of a coupled system, discretized once.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    pub s1: ScalarSolver,
    pub s2: ScalarSolver,
    pub tau1: Field,
    pub tau2: Field,
    pub exps: ExponentPair,
}

impl SystemOperators {
    pub fn new(
        f1: &OperatorSpec,
        f2: &OperatorSpec,
        tau1: &Field,
        tau2: &Field,
        exps: ExponentPair,
        inner: &SolveOptions,
    ) -> Result<Self> {
        let grid = tau1.grid();
        tau2.check_on(grid)?;
        check_weight(tau1)?;
        check_weight(tau2)?;
        if !grid
            .interior_nodes()
            .any(|i| tau1.value(i) > 0.0 && tau2.value(i) > 0.0)
        {
            return Err(Error::DisjointWeights);
        }
        Ok(SystemOperators {
            s1: ScalarSolver::new(discretize(f1, grid)?, inner.clone())?,
            s2: ScalarSolver::new(discretize(f2, grid)?, inner.clone())?,
            tau1: tau1.clone(),
            tau2: tau2.clone(),
            exps,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.tau1.grid()
    }

    /// `tau1 |v|^(q-1) v`
    pub fn source1(&self, v: &Field) -> Field {
        let q = self.exps.q;
        self.tau1
            .zip_map(v, |t, x| t * signed_pow(x, q))
            .expect("same grid")
    }

    /// `tau2 |u|^(p-1) u`
    pub fn source2(&self, u: &Field) -> Field {
        let p = self.exps.p;
        self.tau2
            .zip_map(u, |t, x| t * signed_pow(x, p))
            .expect("same grid")
    }

    /// Relative residuals of `F1[u] + lambda tau1 v^q = 0` and
    /// `F2[v] + mu tau2 u^p = 0`.
    pub fn eigen_residual(&self, u: &Field, v: &Field, lambda: f64, mu: f64) -> Result<(f64, f64)> {
        let g = self.grid();
        let r = |dop: &DiscreteOperator, w: &Field, src: &Field, m: f64| -> Result<f64> {
            let fw = dop.apply_interior(w)?;
            let mut num: f64 = 0.0;
            let mut den: f64 = 0.0;
            for (k, i) in g.interior_nodes().enumerate() {
                num = num.max((fw[k] + m * src.value(i)).abs());
                den = den.max((m * src.value(i)).abs());
            }
            Ok(if den > 0.0 { num / den } else { num })
        };
        Ok((
            r(self.s1.dop(), u, &self.source1(v), lambda)?,
            r(self.s2.dop(), v, &self.source2(u), mu)?,
        ))
    }
}

/// One un-normalized step of the coupled iteration: solves
/// `F1[U] = -tau1 v^q` and `F2[V] = -tau2 u^p`.
pub fn coupled_step(ops: &SystemOperators, u: &Field, v: &Field) -> Result<(Field, Field)> {
    let big_u = ops.s1.solve_strict(&ops.source1(v).scaled(-1.0), None)?;
    let big_v = ops.s2.solve_strict(&ops.source2(u).scaled(-1.0), None)?;
    Ok((big_u, big_v))
}

/// Principal half-eigenvalue of a `pq = 1` system on branch `sign`. The
/// returned pair is in the diagonal gauge: `max |u| = 1` and `(u, v)` solves
/// the system with `lambda = mu = lambda1`.
pub fn system_principal_eigen(
    f1: &OperatorSpec,
    f2: &OperatorSpec,
    tau1: &Field,
    tau2: &Field,
    exps: ExponentPair,
    sign: Sign,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    system_principal_eigen_from(f1, f2, tau1, tau2, exps, sign, opts, None)
}

/// As [`system_principal_eigen`], from an explicit positive starting pair.
#[allow(clippy::too_many_arguments)]
pub fn system_principal_eigen_from(
    f1: &OperatorSpec,
    f2: &OperatorSpec,
    tau1: &Field,
    tau2: &Field,
    exps: ExponentPair,
    sign: Sign,
    opts: &EigenOptions,
    start: Option<(Field, Field)>,
) -> Result<EigenPair> {
    if exps.regime() != Regime::PqEqual1 {
        return Err(Error::InvalidParameter(format!(
            "principal eigenvalues need pq = 1, got {}",
            exps.p * exps.q
        )));
    }
    let (g1, g2) = match sign {
        Sign::Plus => (f1.clone(), f2.clone()),
        Sign::Minus => (reflect(f1), reflect(f2)),
    };
    let ops = SystemOperators::new(&g1, &g2, tau1, tau2, exps, &opts.inner)?;
    let grid = Arc::clone(ops.grid());
    let (mut u, mut v) = match start {
        Some((u0, v0)) => {
            u0.check_on(&grid)?;
            v0.check_on(&grid)?;
            check_positive(&u0, 0)?;
            check_positive(&v0, 0)?;
            (
                u0.with_boundary(0.0).scaled(1.0 / u0.sup_norm()),
                v0.with_boundary(0.0).scaled(1.0 / v0.sup_norm()),
            )
        }
        None => (initial_guess(&grid), initial_guess(&grid)),
    };
    let p = exps.p;
    let mut prev = 0.0;
    let mut warm: Option<(Field, Field)> = None;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let init = warm.as_ref();
        let big_u = ops
            .s1
            .solve_strict(&ops.source1(&v).scaled(-1.0), init.map(|w| &w.0))?;
        let big_v = ops
            .s2
            .solve_strict(&ops.source2(&u).scaled(-1.0), init.map(|w| &w.1))?;
        let (nu, nv) = (big_u.sup_norm(), big_v.sup_norm());
        if !(nu > 0.0 && nv > 0.0 && nu.is_finite() && nv.is_finite()) {
            return Err(Error::NonFinite(format!("coupled iterate at sweep {it}")));
        }
        let (lam, mu) = (1.0 / nu, 1.0 / nv);
        u = big_u.scaled(lam);
        v = big_v.scaled(mu);
        check_positive(&u, it)?;
        check_positive(&v, it)?;
        warm = Some((big_u, big_v));
        let (r1, r2) = ops.eigen_residual(&u, &v, lam, mu)?;
        residual = r1.max(r2);
        let l1 = (mu * lam.powf(p)).powf(1.0 / (p + 1.0));
        let dl = (l1 - prev).abs();
        prev = l1;
        if residual <= opts.tol && dl <= opts.dtol * l1 {
            let c = (lam / mu).powf(1.0 / (1.0 + exps.q));
            let mut v = v.scaled(c);
            let mut u = u;
            if sign == Sign::Minus {
                u = u.scaled(-1.0);
                v = v.scaled(-1.0);
            }
            return Ok(EigenPair {
                lambda1: l1,
                u,
                v: Some(v),
                sign,
                residual,
                iterations: it,
                lambda_raw: (lam, mu),
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Positive random starting pair for multi-start runs.
pub fn random_start(grid: &Arc<Grid>, seed: u64) -> (Field, Field) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = grid.distance_product();
    let mut make = || {
        let mut f = base.clone();
        for i in grid.interior_nodes() {
            let r: f64 = rng.random_range(0.05..1.0);
            f.set(i, base.value(i) * r);
        }
        f
    };
    let u = make();
    let v = make();
    (u, v)
}

/// Sup-norm distance between two eigenpairs after moving the second along
/// the gauge orbit `(t u, t^p v)` so that `|u|` norms agree.
pub fn gauge_distance(a: &EigenPair, b: &EigenPair, p: f64) -> Result<f64> {
    if a.sign != b.sign {
        return Err(Error::SignMismatch);
    }
    a.u.check_grid(&b.u)?;
    let t = a.u.sup_norm() / b.u.sup_norm();
    let mut d = a.u.distance(&b.u.scaled(t))?;
    match (&a.v, &b.v) {
        (Some(va), Some(vb)) => d = d.max(va.distance(&vb.scaled(t.powf(p)))?),
        (None, None) => {}
        _ => {
            return Err(Error::InvalidParameter(
                "cannot compare a scalar pair with a system pair".into(),
            ))
        }
    }
    Ok(d)
}

/// Boundary miss of the shooting problem on the diagonal:
/// `-u'' = lambda |v|^(q-1) v`, `-v'' = lambda |u|^(p-1) u`, `u(0) = v(0) = 0`,
/// `u'(0) = 1`, with `v'(0)` chosen so that `u` and `v` vanish together. The
/// miss is the common first zero minus 1.
pub fn shooting_boundary_miss(exps: ExponentPair, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("shooting needs lambda > 0".into()));
    }
    let (p, q) = (exps.p, exps.q);
    let ode = Dopri5::default();
    let t_max = 1e3 * (1.0 + 1.0 / lambda.sqrt());
    // Which of u, v vanishes first, and where.
    let first = |s: f64| -> Result<(usize, f64)> {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -lambda * signed_pow(y[2], q);
            dy[2] = y[3];
            dy[3] = -lambda * signed_pow(y[0], p);
        };
        ode.first_crossing(rhs, 0.0, &[0.0, 1.0, 0.0, s], t_max, &[0, 2])?
            .ok_or_else(|| Error::Bracketing(format!("no zero before t = {t_max}")))
    };
    let (mut lo, mut hi) = (-6.0f64, 6.0f64);
    if first(10f64.powf(lo))?.0 != 1 || first(10f64.powf(hi))?.0 != 0 {
        return Err(Error::Bracketing("shooting slope not bracketed".into()));
    }
    let mut z = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (who, t) = first(10f64.powf(mid))?;
        z = t;
        if who == 1 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(z - 1.0)
}

/// Root of [`shooting_boundary_miss`] by Illinois false position.
pub fn shooting_eigenvalue_1d(exps: ExponentPair) -> Result<f64> {
    let f = |l: f64| shooting_boundary_miss(exps, l);
    let (mut a, mut b) = (1.0, 2.0);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    let mut expand = 0;
    while fa * fb > 0.0 {
        if fa > 0.0 {
            a = b;
            fa = fb;
            b *= 2.0;
            fb = f(b)?;
        } else {
            b = a;
            fb = fa;
            a *= 0.5;
            fa = f(a)?;
        }
        expand += 1;
        if expand > 80 {
            return Err(Error::Bracketing("no sign change of the boundary miss".into()));
        }
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc.abs() < 1e-13 || (b - a).abs() < 1e-13 * c {
            return Ok(c);
        }
        if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok((a * fb - b * fa) / (fb - fa))
}

/// Second-smallest eigenvalue of `-L[w] = lambda tau w` for a symmetric
/// linear operator and a positive weight, by block inverse subspace iteration
/// with Rayleigh-Ritz.
pub fn second_eigen_linear_symmetric(op: &LinearOp, tau: &Field, grid: &Arc<Grid>) -> Result<f64> {
    tau.check_on(grid)?;
    let dop = discretize(&OperatorSpec::linear(op.clone()), grid)?;
    let rows = dop.freeze(&Field::zeros(grid))?.rows;
    let neg_rows: Vec<_> = rows
        .iter()
        .map(|r| {
            let mut r = *r;
            r.stencil.iter_mut().for_each(|c| *c = -*c);
            r.zero = -r.zero;
            r
        })
        .collect();
    let a = assemble(grid, &neg_rows, |_| true);
    let n = a.n();
    if !a.is_symmetric(1e-12) {
        return Err(Error::Unsupported(
            "second eigenvalue needs a symmetric discrete operator".into(),
        ));
    }
    let t: Vec<f64> = tau.interior_values();
    if t.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("weight must be positive at interior nodes".into()));
    }
    let lu = a.clone().factor()?;
    let b = 6.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::<f64>::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0));
    let mut prev = [f64::INFINITY; 2];
    for _ in 0..1000 {
        let mut y = DMatrix::<f64>::zeros(n, b);
        for j in 0..b {
            let col: Vec<f64> = (0..n).map(|i| t[i] * x[(i, j)]).collect();
            let sol = lu.solve(&col);
            for i in 0..n {
                y[(i, j)] = sol[i];
            }
        }
        // T-orthonormalize.
        let ty = DMatrix::<f64>::from_fn(n, b, |i, j| t[i] * y[(i, j)]);
        let gram = y.transpose() * &ty;
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::NonFinite("subspace basis lost rank".into()))?;
        let linv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::NonFinite("subspace basis lost rank".into()))?;
        let q = &y * linv.transpose();
        let mut aq = DMatrix::<f64>::zeros(n, b);
        for j in 0..b {
            let col: Vec<f64> = q.column(j).iter().copied().collect();
            let prod = a.matvec(&col);
            for i in 0..n {
                aq[(i, j)] = prod[i];
            }
        }
        let k = q.transpose() * aq;
        let k = 0.5 * (&k + k.transpose());
        let eig = SymmetricEigen::new(k);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vals = [eig.eigenvalues[order[0]], eig.eigenvalues[order[1.min(b - 1)]]];
        let mut sorted = DMatrix::<f64>::zeros(b, b);
        for (c, &o) in order.iter().enumerate() {
            sorted.set_column(c, &eig.eigenvectors.column(o));
        }
        x = q * sorted;
        let done = (vals[1] - prev[1]).abs() <= 1e-13 * vals[1].abs()
            && (vals[0] - prev[0]).abs() <= 1e-13 * vals[0].abs();
        prev = vals;
        if done {
            return Ok(vals[1]);
        }
    }
    Ok(prev[1])
}

/// Samples a coefficient into a field.
pub fn sample_weight(c: &Coef, grid: &Arc<Grid>) -> Result<Field> {
    Field::from_values(grid, c.sample(grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Arc<Grid> {
        Grid::interval(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn laplacian_scalar_eigen() {
        let g = unit(199);
        let w = Field::constant(&g, 1.0);
        let e = scalar_principal_eigen(&OperatorSpec::laplacian(), &g, &w, Sign::Plus, &EigenOptions::default()).unwrap();
        assert!((e.lambda1 - PI * PI).abs() < 0.01 * PI * PI);
        assert!((e.u.sup_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pucci_half_eigenvalues() {
        let g = unit(199);
        let w = Field::constant(&g, 1.0);
        let spec = OperatorSpec::pucci_plus(1.0, 2.0);
        let o = EigenOptions::default();
        let plus = scalar_principal_eigen(&spec, &g, &w, Sign::Plus, &o).unwrap();
        let minus = scalar_principal_eigen(&spec, &g, &w, Sign::Minus, &o).unwrap();
        assert!((plus.lambda1 / (PI * PI) - 1.0).abs() < 0.01);
        assert!((minus.lambda1 / (2.0 * PI * PI) - 1.0).abs() < 0.01);
        assert!(minus.u.interior_max() < 0.0);
    }

    #[test]
    fn weight_scaling_divides_eigenvalue() {
        let g = unit(99);
        let w = Field::from_fn(&g, |p| 1.0 + p[0]);
        let o = EigenOptions::default();
        let spec = OperatorSpec::fucik_max(3.0);
        let a = scalar_principal_eigen(&spec, &g, &w, Sign::Plus, &o).unwrap();
        let b = scalar_principal_eigen(&spec, &g, &w.scaled(2.5), Sign::Plus, &o).unwrap();
        assert!((a.lambda1 / b.lambda1 - 2.5).abs() < 1e-8);
    }

    #[test]
    fn nonproper_shift() {
        let g = unit(99);
        let w = Field::constant(&g, 1.0);
        let o = EigenOptions::default();
        let base = scalar_principal_eigen(&OperatorSpec::laplacian(), &g, &w, Sign::Plus, &o).unwrap();
        let spec = OperatorSpec::laplacian().with_zero_order(ZeroOrder::Linear { c: Coef::Const(1.0) });
        let shifted = scalar_principal_eigen(&spec, &g, &w, Sign::Plus, &o).unwrap();
        assert!((shifted.lambda1 - (base.lambda1 - 1.0)).abs() < 1e-8);
        assert!((shifted.lambda_raw.0 - base.lambda1).abs() < 1e-8);
    }

    #[test]
    fn zero_weight_rejected() {
        let g = unit(9);
        let r = scalar_principal_eigen(&OperatorSpec::laplacian(), &g, &Field::zeros(&g), Sign::Plus, &EigenOptions::default());
        assert!(matches!(r, Err(Error::ZeroWeight)));
    }

    #[test]
    fn abp_bound_values() {
        let g = unit(9);
        assert_eq!(abp_lower_bound(&Field::zeros(&g), 0.125), f64::INFINITY);
        let one = Field::constant(&g, 1.0);
        assert!((abp_lower_bound(&one, 0.125) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn system_laplacian_pair() {
        let g = unit(199);
        let t = Field::constant(&g, 1.0);
        let l = OperatorSpec::laplacian();
        let e = system_principal_eigen(&l, &l, &t, &t, ExponentPair::new(1.0, 1.0).unwrap(), Sign::Plus, &EigenOptions::default()).unwrap();
        assert!((e.lambda1 / (PI * PI) - 1.0).abs() < 0.01);
        assert!(e.u.distance(e.v.as_ref().unwrap()).unwrap() <= 1e-8);
        let (l0, m0) = e.lambda_raw;
        assert!(((m0 * l0).sqrt() - e.lambda1).abs() <= 1e-12 * e.lambda1);
    }

    #[test]
    fn disjoint_weights_rejected() {
        let g = unit(19);
        let a = Field::from_fn(&g, |p| if p[0] < 0.5 { 1.0 } else { 0.0 });
        let b = Field::from_fn(&g, |p| if p[0] > 0.5 { 1.0 } else { 0.0 });
        let l = OperatorSpec::laplacian();
        let r = system_principal_eigen(&l, &l, &a, &b, ExponentPair::new(1.0, 1.0).unwrap(), Sign::Plus, &EigenOptions::default());
        assert!(matches!(r, Err(Error::DisjointWeights)));
    }

    #[test]
    fn shooting_linear_case() {
        let e = ExponentPair::new(1.0, 1.0).unwrap();
        let l = shooting_eigenvalue_1d(e).unwrap();
        assert!((l - PI * PI).abs() < 1e-6);
        assert!(shooting_boundary_miss(e, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn second_eigenvalue_interval() {
        let g = unit(199);
        let l2 = second_eigen_linear_symmetric(&LinearOp::laplacian(), &Field::constant(&g, 1.0), &g).unwrap();
        assert!((l2 / (4.0 * PI * PI) - 1.0).abs() < 0.01);
        let l2c = second_eigen_linear_symmetric(&LinearOp::laplacian(), &Field::constant(&g, 2.0), &g).unwrap();
        assert!((l2 / l2c - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gauge_orbit_distance() {
        let g = unit(19);
        let u = initial_guess(&g);
        let v = u.map(|x| x * x);
        let a = EigenPair {
            lambda1: 1.0,
            u: u.clone(),
            v: Some(v.clone()),
            sign: Sign::Plus,
            residual: 0.0,
            iterations: 0,
            lambda_raw: (1.0, 1.0),
        };
        assert_eq!(gauge_distance(&a, &a, 2.0).unwrap(), 0.0);
        let b = EigenPair {
            u: u.scaled(3.0),
            v: Some(v.scaled(9.0)),
            ..a.clone()
        };
        assert!(gauge_distance(&a, &b, 2.0).unwrap() < 1e-15);
        let c = EigenPair { sign: Sign::Minus, ..a.clone() };
        assert!(matches!(gauge_distance(&a, &c, 2.0), Err(Error::SignMismatch)));
    }
}
