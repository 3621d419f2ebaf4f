//! Scalar Dirichlet problems `F[u] = f` in the interior, `u = g` on the
//! boundary, solved by Howard policy iteration with a damped Picard fallback,
//! and the ABP audit.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Field, Grid};
use crate::linalg::{BandLu, BandMatrix};
use crate::operators::{
    discretize, DiscreteOperator, EllipticityPair, LinearOp, OperatorSpec, Row, Sign,
};

/// Half-bandwidth of the interior stencil matrix.
pub fn stencil_bandwidth(grid: &Grid) -> usize {
    if grid.dim() == 1 {
        1
    } else {
        grid.n(1) + 1
    }
}

/// Assembles frozen rows into an interior matrix. Zero-order coefficients
/// for which `keep_zero` is false are left out (they are treated explicitly
/// by the caller).
pub fn assemble(grid: &Grid, rows: &[Row], keep_zero: impl Fn(f64) -> bool) -> BandMatrix {
    let bw = stencil_bandwidth(grid);
    let mut m = BandMatrix::zeros(grid.interior_count(), bw, bw);
    for (s, row) in rows.iter().enumerate() {
        let i = grid.interior_node(s);
        for (k, &c) in row.stencil.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let j = grid.neighbor(i, Row::offset(k)).expect("interior stencil");
            if let Some(t) = grid.interior_slot(j) {
                m.add(s, t, c);
            }
        }
        if keep_zero(row.zero) {
            m.add(s, s, row.zero);
        }
    }
    m
}

/// Subtracts the boundary-node contributions of each row from `rhs`.
pub fn subtract_boundary(grid: &Grid, rows: &[Row], g: &Field, rhs: &mut [f64]) {
    for (s, row) in rows.iter().enumerate() {
        let i = grid.interior_node(s);
        for (k, &c) in row.stencil.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let j = grid.neighbor(i, Row::offset(k)).expect("interior stencil");
            if grid.is_boundary(j) {
                rhs[s] -= c * g.value(j);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Policy,
    Picard,
    Newton,
    Monotone,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub policy_switches: usize,
    pub converged: bool,
    pub method: Method,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Residual tolerance relative to `max(1, |f|_inf, |g|_inf)`.
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub cycle_window: usize,
    pub initial: Option<Field>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 200,
            damping: 0.5,
            cycle_window: 10,
            initial: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub dop: DiscreteOperator,
    pub f: Field,
    pub boundary: Field,
}

impl DirichletProblem {
    pub fn new(dop: DiscreteOperator, f: Field) -> Result<Self> {
        let boundary = Field::zeros(dop.grid());
        DirichletProblem::with_boundary(dop, f, boundary)
    }

    pub fn with_boundary(dop: DiscreteOperator, f: Field, boundary: Field) -> Result<Self> {
        f.check_on(dop.grid())?;
        boundary.check_on(dop.grid())?;
        if let Some(i) = f.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("right-hand side at node {i}")));
        }
        Ok(DirichletProblem { dop, f, boundary })
    }
}

/// Solves a linear problem `L[u] = f`, `u = g` on the boundary, directly.
pub fn solve_linear(op: &LinearOp, grid: &Arc<Grid>, f: &Field, boundary: &Field) -> Result<Field> {
    let dop = discretize(&OperatorSpec::linear(op.clone()), grid)?;
    let prepared = PreparedLinear::new(&dop)?;
    prepared.solve(f, boundary)
}

/// A factored linear operator, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct PreparedLinear {
    grid: Arc<Grid>,
    rows: Vec<Row>,
    lu: BandLu,
}

impl PreparedLinear {
    pub fn new(dop: &DiscreteOperator) -> Result<Self> {
        if !dop.is_linear() {
            return Err(Error::Unsupported("operator has a policy; freeze it first".into()));
        }
        let grid = Arc::clone(dop.grid());
        let rows = dop.freeze(&Field::zeros(&grid))?.rows;
        PreparedLinear::from_rows(&grid, rows)
    }

    pub fn from_rows(grid: &Arc<Grid>, rows: Vec<Row>) -> Result<Self> {
        let lu = assemble(grid, &rows, |_| true).factor()?;
        Ok(PreparedLinear {
            grid: Arc::clone(grid),
            rows,
            lu,
        })
    }

    pub fn solve(&self, f: &Field, boundary: &Field) -> Result<Field> {
        f.check_on(&self.grid)?;
        boundary.check_on(&self.grid)?;
        let mut rhs = f.interior_values();
        subtract_boundary(&self.grid, &self.rows, boundary, &mut rhs);
        self.lu.solve_in_place(&mut rhs);
        let mut u = boundary.clone();
        for (s, v) in rhs.into_iter().enumerate() {
            u.set(self.grid.interior_node(s), v);
        }
        if u.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear solve".into()));
        }
        Ok(u)
    }
}

fn signature_hash(sig: &[u64]) -> u64 {
    let mut h = DefaultHasher::new();
    sig.hash(&mut h);
    h.finish()
}

/// Interior sup-norm of `F[u] - f`.
pub fn residual(dop: &DiscreteOperator, u: &Field, f: &Field) -> Result<f64> {
    let r = dop.apply_interior(u)?;
    Ok(dop
        .grid()
        .interior_nodes()
        .zip(r)
        .fold(0.0, |m, (i, v)| m.max((v - f.value(i)).abs())))
}

/// Policy iteration for `F[u] = f`.
///
/// Each sweep freezes the optimizing linear member at every node, splits off
/// positive (nonproper) zero-order coefficients as an explicit source, and
/// solves the frozen system. A policy signature that reappears within the
/// cycle window, other than on the previous sweep, switches to damped Picard
/// updates.
pub fn solve_nonlinear(problem: &DirichletProblem, opts: &SolveOptions) -> Result<(Field, SolveReport)> {
    let dop = &problem.dop;
    let grid = dop.grid();
    let f = &problem.f;
    let g = &problem.boundary;
    let scale = 1f64.max(f.interior_values().iter().fold(0.0, |m, v| m.max(v.abs())));
    let scale = scale.max(g.sup_norm());
    let tol = opts.tol * scale;
    let mut report = SolveReport {
        iterations: 0,
        residual: 0.0,
        policy_switches: 0,
        converged: true,
        method: Method::Policy,
    };
    if f.interior_values().iter().all(|&v| v == 0.0) && g.is_zero() {
        return Ok((Field::zeros(grid), report));
    }
    let mut u = match &opts.initial {
        Some(u0) => {
            u0.check_on(grid)?;
            let mut u = u0.clone();
            for i in grid.boundary_nodes() {
                u.set(i, g.value(i));
            }
            u
        }
        None => g.clone(),
    };
    let f_int = f.interior_values();
    let mut history: VecDeque<u64> = VecDeque::new();
    let mut last: Option<u64> = None;
    for it in 0..=opts.max_iter {
        let frozen = dop.freeze(&u)?;
        let vals = u.values();
        let mut res: f64 = 0.0;
        for (s, row) in frozen.rows.iter().enumerate() {
            let i = grid.interior_node(s);
            let r = crate::operators::row_value(grid, row, vals, i) - f_int[s];
            res = res.max(r.abs());
        }
        report.residual = res;
        if !res.is_finite() {
            return Err(Error::NonFinite(format!("iterate at sweep {it}")));
        }
        if res <= tol {
            report.converged = true;
            return Ok((u, report));
        }
        if it == opts.max_iter {
            break;
        }
        let h = signature_hash(&frozen.signature);
        if let Some(prev) = last {
            if prev != h {
                report.policy_switches += 1;
                if report.method == Method::Policy && history.contains(&h) {
                    report.method = Method::Picard;
                }
            }
        }
        history.push_back(h);
        if history.len() > opts.cycle_window {
            history.pop_front();
        }
        last = Some(h);

        let mut rhs = f_int.clone();
        for (s, row) in frozen.rows.iter().enumerate() {
            if row.zero > 0.0 {
                rhs[s] -= row.zero * vals[grid.interior_node(s)];
            }
        }
        subtract_boundary(grid, &frozen.rows, g, &mut rhs);
        let lu = assemble(grid, &frozen.rows, |z| z <= 0.0).factor()?;
        lu.solve_in_place(&mut rhs);
        let omega = if report.method == Method::Picard { opts.damping } else { 1.0 };
        let mut next = u.clone();
        for (s, w) in rhs.into_iter().enumerate() {
            let i = grid.interior_node(s);
            next.set(i, vals[i] + omega * (w - vals[i]));
        }
        u = next;
        report.iterations = it + 1;
    }
    report.converged = false;
    Ok((u, report))
}

/// Convenience wrapper for zero boundary data.
pub fn solve_dirichlet(dop: &DiscreteOperator, f: &Field, opts: &SolveOptions) -> Result<(Field, SolveReport)> {
    let problem = DirichletProblem::new(dop.clone(), f.clone())?;
    solve_nonlinear(&problem, opts)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AbpAudit {
    pub lhs: f64,
    pub rhs_norm: f64,
    pub ratio: f64,
    /// Whether `M+[u] + gamma |Du| >= f` held at every interior node.
    pub subsolution: bool,
}

/// Discrete `L^N` norm of the negative part, `N` the space dimension.
pub fn negative_part_norm(f: &Field) -> f64 {
    f.map(|v| (-v).max(0.0)).lr_norm(f.grid().dim() as f64)
}

/// Samples the ABP constant: `max u` against `max_boundary u+ + |f-|_N`.
pub fn abp_audit(u: &Field, f: &Field, gamma: f64, e: &EllipticityPair) -> Result<AbpAudit> {
    u.check_grid(f)?;
    let grid = u.grid();
    let spec = OperatorSpec::pucci_plus(e.alpha, e.beta).with_gradient(gamma.into(), Sign::Plus);
    let dop = discretize(&spec, grid)?;
    let lu = dop.apply_interior(u)?;
    let scale = 1f64.max(f.sup_norm()).max(u.sup_norm() / grid.h(0).powi(2));
    let subsolution = grid
        .interior_nodes()
        .zip(lu)
        .all(|(i, v)| v >= f.value(i) - 1e-9 * scale);
    let lhs = u.max();
    let bmax = u.boundary_max().max(0.0);
    let fneg = negative_part_norm(f);
    let ratio = if lhs - bmax <= 0.0 {
        0.0
    } else if fneg == 0.0 {
        f64::INFINITY
    } else {
        (lhs - bmax) / fneg
    };
    Ok(AbpAudit {
        lhs,
        rhs_norm: bmax + fneg,
        ratio,
        subsolution,
    })
}
