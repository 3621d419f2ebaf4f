//! Fully nonlinear elliptic operators: symbolic specs, pointwise evaluation,
//! reflection, envelopes, and the finite-difference discretization used by
//! every solver.
//!
//! An operator is `F(x, r, xi, X)` with `r = u(x)`, `xi = Du(x)` and
//! `X = D^2 u(x)`. The discrete operator evaluates `F` at interior nodes from
//! second differences, a 4-point cross difference and upwinded first
//! differences. At every node it can also be frozen into a linear stencil
//! that reproduces its value at the current iterate, which is what policy
//! iteration and the eigen solvers consume.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Field, Grid};
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticityPair {
    pub alpha: f64,
    pub beta: f64,
}

impl EllipticityPair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let e = EllipticityPair { alpha, beta };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta >= self.alpha && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ellipticity requires 0 < alpha <= beta, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Symmetric matrix of dimension 1 or 2, stored as `(a11, a12, a22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    a: [f64; 3],
}

impl SymMatrix {
    pub fn scalar(x: f64) -> Self {
        SymMatrix {
            dim: 1,
            a: [x, 0.0, 0.0],
        }
    }

    pub fn new2(a11: f64, a12: f64, a22: f64) -> Self {
        SymMatrix {
            dim: 2,
            a: [a11, a12, a22],
        }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, a: [0.0; 3] }
    }

    /// Builds from full rows, rejecting asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        match rows.len() {
            1 if rows[0].len() == 1 => Ok(SymMatrix::scalar(rows[0][0])),
            2 if rows[0].len() == 2 && rows[1].len() == 2 => {
                let gap = (rows[0][1] - rows[1][0]).abs();
                if gap > 0.0 {
                    return Err(Error::NonSymmetric(gap));
                }
                Ok(SymMatrix::new2(rows[0][0], rows[0][1], rows[1][1]))
            }
            n => Err(Error::InvalidParameter(format!(
                "matrix must be 1x1 or 2x2, got {n} rows"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> [f64; 3] {
        self.a
    }

    pub fn neg(&self) -> Self {
        SymMatrix {
            dim: self.dim,
            a: [-self.a[0], -self.a[1], -self.a[2]],
        }
    }

    pub fn add(&self, o: &SymMatrix) -> Self {
        SymMatrix {
            dim: self.dim,
            a: [self.a[0] + o.a[0], self.a[1] + o.a[1], self.a[2] + o.a[2]],
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        SymMatrix {
            dim: self.dim,
            a: [t * self.a[0], t * self.a[1], t * self.a[2]],
        }
    }

    pub fn trace(&self) -> f64 {
        if self.dim == 1 {
            self.a[0]
        } else {
            self.a[0] + self.a[2]
        }
    }

    /// `tr(A X)` for symmetric `A` given as `(a11, a12, a22)`.
    pub fn trace_with(&self, a: [f64; 3]) -> f64 {
        if self.dim == 1 {
            a[0] * self.a[0]
        } else {
            a[0] * self.a[0] + 2.0 * a[1] * self.a[1] + a[2] * self.a[2]
        }
    }

    /// Eigenvalues in ascending order; only the first `dim` are meaningful.
    pub fn eigenvalues(&self) -> [f64; 2] {
        if self.dim == 1 {
            return [self.a[0], 0.0];
        }
        let (m, d) = half_trace_and_radius(self.a);
        [m - d, m + d]
    }

    /// Eigenvalues (ascending) and unit eigenvectors of a 2x2 matrix.
    pub fn eigen2(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let [a, b, c] = self.a;
        let (m, d) = half_trace_and_radius(self.a);
        let theta = 0.5 * (2.0 * b).atan2(a - c);
        let (s, co) = theta.sin_cos();
        // (co, s) belongs to the larger eigenvalue.
        ([m - d, m + d], [[-s, co], [co, s]])
    }
}

fn half_trace_and_radius(a: [f64; 3]) -> (f64, f64) {
    let m = 0.5 * (a[0] + a[2]);
    let d = (0.5 * (a[0] - a[2])).hypot(a[1]);
    (m, d)
}

/// `sup { tr(AX) : alpha I <= A <= beta I }`.
pub fn pucci_plus(x: &SymMatrix, e: &EllipticityPair) -> f64 {
    let ev = x.eigenvalues();
    ev.iter()
        .take(x.dim())
        .map(|&l| if l > 0.0 { e.beta * l } else { e.alpha * l })
        .sum()
}

/// `inf { tr(AX) : alpha I <= A <= beta I }`, defined as `-pucci_plus(-X)`.
pub fn pucci_minus(x: &SymMatrix, e: &EllipticityPair) -> f64 {
    -pucci_plus(&x.neg(), e)
}

/// Spatially varying coefficient: a constant, a named profile, or samples on
/// a specific grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Const(f64),
    Profile(Profile),
    #[serde(skip)]
    Samples(Field),
}

impl Default for Coef {
    fn default() -> Self {
        Coef::Const(0.0)
    }
}

impl From<f64> for Coef {
    fn from(v: f64) -> Self {
        Coef::Const(v)
    }
}

impl From<Field> for Coef {
    fn from(f: Field) -> Self {
        Coef::Samples(f)
    }
}

impl Coef {
    pub fn at(&self, grid: &Grid, node: usize) -> f64 {
        match self {
            Coef::Const(c) => *c,
            Coef::Profile(p) => p.eval(grid.coords(node)),
            Coef::Samples(f) => f.value(node),
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<Vec<f64>> {
        if let Coef::Samples(f) = self {
            f.check_on(grid)?;
        }
        let v: Vec<f64> = (0..grid.node_count()).map(|i| self.at(grid, i)).collect();
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient at node {i}")));
        }
        Ok(v)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coef::Const(c) => *c == 0.0,
            Coef::Profile(Profile::Const { value }) => *value == 0.0,
            _ => false,
        }
    }

    /// Multiplies by a constant.
    pub fn scaled(&self, t: f64, grid: &Arc<Grid>) -> Result<Coef> {
        Ok(match self {
            Coef::Const(c) => Coef::Const(t * c),
            _ => Coef::Samples(Field::from_values(
                grid,
                self.sample(grid)?.into_iter().map(|v| t * v).collect(),
            )?),
        })
    }
}

fn one() -> Coef {
    Coef::Const(1.0)
}

/// `tr(A D^2 u) + b . Du + c u` with `A = [[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearOp {
    #[serde(default = "one")]
    pub a11: Coef,
    #[serde(default)]
    pub a12: Coef,
    #[serde(default = "one")]
    pub a22: Coef,
    #[serde(default)]
    pub drift: Vec<Coef>,
    #[serde(default)]
    pub c: Coef,
}

impl LinearOp {
    pub fn laplacian() -> Self {
        LinearOp::scaled_laplacian(1.0)
    }

    pub fn scaled_laplacian(k: f64) -> Self {
        LinearOp {
            a11: Coef::Const(k),
            a12: Coef::Const(0.0),
            a22: Coef::Const(k),
            drift: Vec::new(),
            c: Coef::Const(0.0),
        }
    }

    pub fn with_drift(mut self, b: Vec<Coef>) -> Self {
        self.drift = b;
        self
    }

    pub fn with_c(mut self, c: Coef) -> Self {
        self.c = c;
        self
    }

    fn sample(&self, grid: &Arc<Grid>) -> Result<MemberSamples> {
        let nn = grid.node_count();
        let drift0 = match self.drift.first() {
            Some(b) => b.sample(grid)?,
            None => vec![0.0; nn],
        };
        let drift1 = match self.drift.get(1) {
            Some(b) if grid.dim() == 2 => b.sample(grid)?,
            _ => vec![0.0; nn],
        };
        let (a12, a22) = if grid.dim() == 2 {
            (self.a12.sample(grid)?, self.a22.sample(grid)?)
        } else {
            (vec![0.0; nn], vec![0.0; nn])
        };
        let m = MemberSamples {
            a11: self.a11.sample(grid)?,
            a12,
            a22,
            b0: drift0,
            b1: drift1,
            c: self.c.sample(grid)?,
        };
        for i in 0..nn {
            let (lo, hi) = m.a_range(grid.dim(), i);
            if !(lo > 0.0) {
                return Err(Error::Ellipticity {
                    node: i,
                    lo,
                    hi,
                    alpha: 0.0,
                    beta: f64::INFINITY,
                });
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorKind {
    Linear {
        #[serde(flatten)]
        op: LinearOp,
    },
    PucciPlus {
        alpha: f64,
        beta: f64,
    },
    PucciMinus {
        alpha: f64,
        beta: f64,
    },
    MaxOf {
        members: Vec<LinearOp>,
    },
    MinOf {
        members: Vec<LinearOp>,
    },
    /// `inf_s sup_t L_{s,t}`
    InfSup {
        family: Vec<Vec<LinearOp>>,
    },
    /// `sup_s inf_t L_{s,t}`
    SupInf {
        family: Vec<Vec<LinearOp>>,
    },
}

/// Extra `+gamma |Du|` or `-gamma |Du|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientTerm {
    pub gamma: Coef,
    pub sign: Sign,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ZeroOrder {
    /// `c(x) u`
    Linear { c: Coef },
    /// `+theta |u|` or `-theta |u|`
    Abs { theta: Coef, sign: Sign },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_order: Option<ZeroOrder>,
    /// Set by [`reflect`]; reflection is applied structurally, so the flag
    /// only records provenance.
    #[serde(default)]
    pub reflected: bool,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind) -> Self {
        OperatorSpec {
            kind,
            gradient: None,
            zero_order: None,
            reflected: false,
        }
    }

    pub fn laplacian() -> Self {
        OperatorSpec::linear(LinearOp::laplacian())
    }

    pub fn linear(op: LinearOp) -> Self {
        OperatorSpec::new(OperatorKind::Linear { op })
    }

    pub fn pucci_plus(alpha: f64, beta: f64) -> Self {
        OperatorSpec::new(OperatorKind::PucciPlus { alpha, beta })
    }

    pub fn pucci_minus(alpha: f64, beta: f64) -> Self {
        OperatorSpec::new(OperatorKind::PucciMinus { alpha, beta })
    }

    pub fn max_of(members: Vec<LinearOp>) -> Self {
        OperatorSpec::new(OperatorKind::MaxOf { members })
    }

    pub fn min_of(members: Vec<LinearOp>) -> Self {
        OperatorSpec::new(OperatorKind::MinOf { members })
    }

    /// `max{L, kappa L}` with `L` the Laplacian.
    pub fn fucik_max(kappa: f64) -> Self {
        OperatorSpec::max_of(vec![LinearOp::laplacian(), LinearOp::scaled_laplacian(kappa)])
    }

    /// `min{L, kappa L}` with `L` the Laplacian.
    pub fn fucik_min(kappa: f64) -> Self {
        OperatorSpec::min_of(vec![LinearOp::laplacian(), LinearOp::scaled_laplacian(kappa)])
    }

    pub fn with_gradient(mut self, gamma: Coef, sign: Sign) -> Self {
        self.gradient = Some(GradientTerm { gamma, sign });
        self
    }

    pub fn with_zero_order(mut self, z: ZeroOrder) -> Self {
        self.zero_order = Some(z);
        self
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, OperatorKind::Linear { .. })
            && self.gradient.is_none()
            && !matches!(self.zero_order, Some(ZeroOrder::Abs { .. }))
    }

    fn members(&self) -> Vec<&LinearOp> {
        match &self.kind {
            OperatorKind::Linear { op } => vec![op],
            OperatorKind::PucciPlus { .. } | OperatorKind::PucciMinus { .. } => vec![],
            OperatorKind::MaxOf { members } | OperatorKind::MinOf { members } => {
                members.iter().collect()
            }
            OperatorKind::InfSup { family } | OperatorKind::SupInf { family } => {
                family.iter().flatten().collect()
            }
        }
    }

    fn check_family(&self) -> Result<()> {
        match &self.kind {
            OperatorKind::MaxOf { members } | OperatorKind::MinOf { members }
                if members.is_empty() =>
            {
                Err(Error::EmptyFamily)
            }
            OperatorKind::InfSup { family } | OperatorKind::SupInf { family } => {
                if family.is_empty() || family.iter().any(|row| row.is_empty()) {
                    Err(Error::EmptyFamily)
                } else {
                    Ok(())
                }
            }
            OperatorKind::PucciPlus { alpha, beta } | OperatorKind::PucciMinus { alpha, beta } => {
                EllipticityPair::new(*alpha, *beta).map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

/// `G(x, r, xi, X) = -F(x, -r, -xi, -X)`.
pub fn reflect(spec: &OperatorSpec) -> OperatorSpec {
    let kind = match &spec.kind {
        OperatorKind::Linear { op } => OperatorKind::Linear { op: op.clone() },
        OperatorKind::PucciPlus { alpha, beta } => OperatorKind::PucciMinus {
            alpha: *alpha,
            beta: *beta,
        },
        OperatorKind::PucciMinus { alpha, beta } => OperatorKind::PucciPlus {
            alpha: *alpha,
            beta: *beta,
        },
        OperatorKind::MaxOf { members } => OperatorKind::MinOf {
            members: members.clone(),
        },
        OperatorKind::MinOf { members } => OperatorKind::MaxOf {
            members: members.clone(),
        },
        OperatorKind::InfSup { family } => OperatorKind::SupInf {
            family: family.clone(),
        },
        OperatorKind::SupInf { family } => OperatorKind::InfSup {
            family: family.clone(),
        },
    };
    OperatorSpec {
        kind,
        gradient: spec.gradient.as_ref().map(|g| GradientTerm {
            gamma: g.gamma.clone(),
            sign: g.sign.flip(),
        }),
        zero_order: spec.zero_order.as_ref().map(|z| match z {
            ZeroOrder::Linear { c } => ZeroOrder::Linear { c: c.clone() },
            ZeroOrder::Abs { theta, sign } => ZeroOrder::Abs {
                theta: theta.clone(),
                sign: sign.flip(),
            },
        }),
        reflected: !spec.reflected,
    }
}

/// Result of an envelope query; `exact` is false when only a bound is known.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub spec: OperatorSpec,
    pub exact: bool,
}

/// Convex envelope `F*` (smallest convex operator above `F`), or a convex
/// upper bound for Isaacs families.
pub fn upper_envelope(spec: &OperatorSpec) -> Envelope {
    envelope(spec, true)
}

/// Concave envelope `F_*` (largest concave operator below `F`), or a concave
/// lower bound for Isaacs families.
pub fn lower_envelope(spec: &OperatorSpec) -> Envelope {
    envelope(spec, false)
}

fn envelope(spec: &OperatorSpec, upper: bool) -> Envelope {
    let mut exact = true;
    let kind = match (&spec.kind, upper) {
        (OperatorKind::Linear { op }, _) => OperatorKind::Linear { op: op.clone() },
        (OperatorKind::PucciPlus { alpha, beta }, true)
        | (OperatorKind::PucciMinus { alpha, beta }, true) => OperatorKind::PucciPlus {
            alpha: *alpha,
            beta: *beta,
        },
        (OperatorKind::PucciPlus { alpha, beta }, false)
        | (OperatorKind::PucciMinus { alpha, beta }, false) => OperatorKind::PucciMinus {
            alpha: *alpha,
            beta: *beta,
        },
        (OperatorKind::MaxOf { members }, true) | (OperatorKind::MinOf { members }, true) => {
            OperatorKind::MaxOf {
                members: members.clone(),
            }
        }
        (OperatorKind::MaxOf { members }, false) | (OperatorKind::MinOf { members }, false) => {
            OperatorKind::MinOf {
                members: members.clone(),
            }
        }
        (OperatorKind::InfSup { family }, _) | (OperatorKind::SupInf { family }, _) => {
            exact = false;
            let members: Vec<LinearOp> = family.iter().flatten().cloned().collect();
            if upper {
                OperatorKind::MaxOf { members }
            } else {
                OperatorKind::MinOf { members }
            }
        }
    };
    let want = if upper { Sign::Plus } else { Sign::Minus };
    let gradient = spec.gradient.as_ref().map(|g| {
        if g.sign != want {
            exact = false;
        }
        GradientTerm {
            gamma: g.gamma.clone(),
            sign: want,
        }
    });
    let zero_order = spec.zero_order.as_ref().map(|z| match z {
        ZeroOrder::Linear { c } => ZeroOrder::Linear { c: c.clone() },
        ZeroOrder::Abs { theta, sign } => {
            if *sign != want {
                exact = false;
            }
            ZeroOrder::Abs {
                theta: theta.clone(),
                sign: want,
            }
        }
    });
    Envelope {
        spec: OperatorSpec {
            kind,
            gradient,
            zero_order,
            reflected: spec.reflected,
        },
        exact,
    }
}

fn linear_value(op: &LinearOp, grid: &Grid, node: usize, r: f64, xi: &[f64], x: &SymMatrix) -> f64 {
    let a = [
        op.a11.at(grid, node),
        op.a12.at(grid, node),
        op.a22.at(grid, node),
    ];
    let drift: f64 = op
        .drift
        .iter()
        .take(x.dim())
        .zip(xi)
        .map(|(b, g)| b.at(grid, node) * g)
        .sum();
    x.trace_with(a) + drift + op.c.at(grid, node) * r
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Pointwise value `F(x, r, xi, X)` at grid node `node`.
pub fn evaluate(
    spec: &OperatorSpec,
    grid: &Grid,
    node: usize,
    r: f64,
    xi: &[f64],
    x: &SymMatrix,
) -> Result<f64> {
    spec.check_family()?;
    if x.dim() != grid.dim() || xi.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: x.dim(),
        });
    }
    let lv = |op: &LinearOp| linear_value(op, grid, node, r, xi, x);
    let base = match &spec.kind {
        OperatorKind::Linear { op } => lv(op),
        OperatorKind::PucciPlus { alpha, beta } => pucci_plus(
            x,
            &EllipticityPair {
                alpha: *alpha,
                beta: *beta,
            },
        ),
        OperatorKind::PucciMinus { alpha, beta } => pucci_minus(
            x,
            &EllipticityPair {
                alpha: *alpha,
                beta: *beta,
            },
        ),
        OperatorKind::MaxOf { members } => members.iter().map(lv).fold(f64::NEG_INFINITY, f64::max),
        OperatorKind::MinOf { members } => members.iter().map(lv).fold(f64::INFINITY, f64::min),
        OperatorKind::InfSup { family } => family
            .iter()
            .map(|row| row.iter().map(lv).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min),
        OperatorKind::SupInf { family } => family
            .iter()
            .map(|row| row.iter().map(lv).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max),
    };
    let grad = match &spec.gradient {
        Some(g) => g.sign.value() * g.gamma.at(grid, node) * norm(xi),
        None => 0.0,
    };
    let zero = match &spec.zero_order {
        Some(ZeroOrder::Linear { c }) => c.at(grid, node) * r,
        Some(ZeroOrder::Abs { theta, sign }) => sign.value() * theta.at(grid, node) * r.abs(),
        None => 0.0,
    };
    Ok(base + grad + zero)
}

/// Extremal data `(alpha, beta, gamma, theta)` bounding an operator at a node:
/// `L^-(r, xi, X) <= F(r, xi, X) - F(s, eta, Y)` evaluated at differences, and
/// symmetrically for `L^+`.
#[derive(Debug, Clone, Copy)]
pub struct StructureBounds {
    pub ellipticity: EllipticityPair,
    pub gamma: f64,
    pub theta: f64,
}

impl StructureBounds {
    pub fn upper(&self, r: f64, xi: &[f64], x: &SymMatrix) -> f64 {
        pucci_plus(x, &self.ellipticity) + self.gamma * norm(xi) + self.theta * r.abs()
    }

    pub fn lower(&self, r: f64, xi: &[f64], x: &SymMatrix) -> f64 {
        pucci_minus(x, &self.ellipticity) - self.gamma * norm(xi) - self.theta * r.abs()
    }
}

pub fn structure_bounds(spec: &OperatorSpec, grid: &Grid, node: usize) -> Result<StructureBounds> {
    spec.check_family()?;
    let dim = grid.dim();
    let (mut lo, mut hi, mut gamma, mut theta) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    match &spec.kind {
        OperatorKind::PucciPlus { alpha, beta } | OperatorKind::PucciMinus { alpha, beta } => {
            lo = *alpha;
            hi = *beta;
        }
        _ => {
            for op in spec.members() {
                let a = [
                    op.a11.at(grid, node),
                    op.a12.at(grid, node),
                    op.a22.at(grid, node),
                ];
                let ev = if dim == 1 {
                    [a[0], a[0]]
                } else {
                    SymMatrix::new2(a[0], a[1], a[2]).eigenvalues()
                };
                lo = lo.min(ev[0]);
                hi = hi.max(ev[1]);
                let b: Vec<f64> = op.drift.iter().take(dim).map(|b| b.at(grid, node)).collect();
                gamma = gamma.max(norm(&b));
                theta = theta.max(op.c.at(grid, node).abs());
            }
        }
    }
    if let Some(g) = &spec.gradient {
        gamma += g.gamma.at(grid, node).abs();
    }
    match &spec.zero_order {
        Some(ZeroOrder::Linear { c }) => theta += c.at(grid, node).abs(),
        Some(ZeroOrder::Abs { theta: t, .. }) => theta += t.at(grid, node).abs(),
        None => {}
    }
    Ok(StructureBounds {
        ellipticity: EllipticityPair {
            alpha: lo,
            beta: hi.max(lo),
        },
        gamma,
        theta,
    })
}

#[derive(Debug, Clone)]
struct MemberSamples {
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    b0: Vec<f64>,
    b1: Vec<f64>,
    c: Vec<f64>,
}

impl MemberSamples {
    fn a_range(&self, dim: usize, i: usize) -> (f64, f64) {
        if dim == 1 {
            (self.a11[i], self.a11[i])
        } else {
            let ev = SymMatrix::new2(self.a11[i], self.a12[i], self.a22[i]).eigenvalues();
            (ev[0], ev[1])
        }
    }

    fn has_cross(&self) -> bool {
        self.a12.iter().any(|&v| v != 0.0)
    }
}

#[derive(Debug, Clone)]
enum Base {
    Linear,
    Pucci { plus: bool, e: EllipticityPair },
    Family { max: bool },
    Isaacs { inf_sup: bool, t: usize },
}

#[derive(Debug, Clone)]
enum ZeroSamples {
    None,
    Linear(Vec<f64>),
    Abs(Vec<f64>, Sign),
}

/// Frozen linear stencil at one interior node: coefficients on the 3x3
/// neighborhood (index `(d0 + 1) * 3 + (d1 + 1)`) plus the zero-order
/// coefficient, kept apart so nonproper parts can be split off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub stencil: [f64; 9],
    pub zero: f64,
}

impl Row {
    const CENTER: usize = 4;

    fn new() -> Self {
        Row {
            stencil: [0.0; 9],
            zero: 0.0,
        }
    }

    pub fn offset(k: usize) -> [isize; 2] {
        [k as isize / 3 - 1, k as isize % 3 - 1]
    }

    fn slot(d0: isize, d1: isize) -> usize {
        ((d0 + 1) * 3 + (d1 + 1)) as usize
    }

    fn axis_slot(axis: usize, d: isize) -> usize {
        if axis == 0 {
            Row::slot(d, 0)
        } else {
            Row::slot(0, d)
        }
    }

    fn add_second(&mut self, axis: usize, h: f64, w: f64) {
        let s = w / (h * h);
        self.stencil[Row::axis_slot(axis, 1)] += s;
        self.stencil[Row::axis_slot(axis, -1)] += s;
        self.stencil[Row::CENTER] -= 2.0 * s;
    }

    fn add_cross(&mut self, h0: f64, h1: f64, w: f64) {
        let s = w / (4.0 * h0 * h1);
        self.stencil[Row::slot(1, 1)] += s;
        self.stencil[Row::slot(-1, -1)] += s;
        self.stencil[Row::slot(1, -1)] -= s;
        self.stencil[Row::slot(-1, 1)] -= s;
    }

    fn add_forward(&mut self, axis: usize, h: f64, w: f64) {
        self.stencil[Row::axis_slot(axis, 1)] += w / h;
        self.stencil[Row::CENTER] -= w / h;
    }

    fn add_backward(&mut self, axis: usize, h: f64, w: f64) {
        self.stencil[Row::CENTER] += w / h;
        self.stencil[Row::axis_slot(axis, -1)] -= w / h;
    }

    /// Diagonally dominant with nonnegative off-diagonal entries (a monotone
    /// row for a proper operator).
    pub fn is_monotone(&self) -> bool {
        self.stencil
            .iter()
            .enumerate()
            .all(|(k, &v)| k == Row::CENTER || v >= -1e-14 * v.abs().max(1.0))
    }

    pub fn center(&self) -> f64 {
        self.stencil[Row::CENTER]
    }
}

/// Local finite differences at an interior node.
#[derive(Debug, Clone, Copy)]
struct Local {
    r: f64,
    d2: [f64; 2],
    dxy: f64,
    fwd: [f64; 2],
    bwd: [f64; 2],
}

/// A frozen linearization over all interior nodes.
#[derive(Debug, Clone)]
pub struct Frozen {
    pub rows: Vec<Row>,
    pub signature: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    spec: OperatorSpec,
    base: Base,
    members: Vec<MemberSamples>,
    gamma: Option<(Vec<f64>, Sign)>,
    zero: ZeroSamples,
}

/// Builds the finite-difference realization of `spec` on `grid`.
pub fn discretize(spec: &OperatorSpec, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
    spec.check_family()?;
    let members = spec
        .members()
        .into_iter()
        .map(|m| m.sample(grid))
        .collect::<Result<Vec<_>>>()?;
    let base = match &spec.kind {
        OperatorKind::Linear { .. } => Base::Linear,
        OperatorKind::PucciPlus { alpha, beta } => Base::Pucci {
            plus: true,
            e: EllipticityPair::new(*alpha, *beta)?,
        },
        OperatorKind::PucciMinus { alpha, beta } => Base::Pucci {
            plus: false,
            e: EllipticityPair::new(*alpha, *beta)?,
        },
        OperatorKind::MaxOf { .. } => Base::Family { max: true },
        OperatorKind::MinOf { .. } => Base::Family { max: false },
        OperatorKind::InfSup { family } | OperatorKind::SupInf { family } => {
            let t = family[0].len();
            if family.iter().any(|row| row.len() != t) {
                return Err(Error::InvalidParameter(
                    "Isaacs family rows must have equal length".into(),
                ));
            }
            Base::Isaacs {
                inf_sup: matches!(spec.kind, OperatorKind::InfSup { .. }),
                t,
            }
        }
    };
    let gamma = match &spec.gradient {
        Some(g) => {
            let s = g.gamma.sample(grid)?;
            if s.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter("gradient coefficient must be >= 0".into()));
            }
            Some((s, g.sign))
        }
        None => None,
    };
    let zero = match &spec.zero_order {
        Some(ZeroOrder::Linear { c }) => ZeroSamples::Linear(c.sample(grid)?),
        Some(ZeroOrder::Abs { theta, sign }) => {
            let s = theta.sample(grid)?;
            if s.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter("zero-order |u| coefficient must be >= 0".into()));
            }
            ZeroSamples::Abs(s, *sign)
        }
        None => ZeroSamples::None,
    };
    Ok(DiscreteOperator {
        grid: Arc::clone(grid),
        spec: spec.clone(),
        base,
        members,
        gamma,
        zero,
    })
}

fn member_row(m: &MemberSamples, i: usize, dim: usize, h: [f64; 2], l: &Local) -> (f64, Row) {
    let mut row = Row::new();
    row.add_second(0, h[0], m.a11[i]);
    let mut v = m.a11[i] * l.d2[0];
    let b = [m.b0[i], m.b1[i]];
    if dim == 2 {
        row.add_second(1, h[1], m.a22[i]);
        v += m.a22[i] * l.d2[1];
        if m.a12[i] != 0.0 {
            row.add_cross(h[0], h[1], 2.0 * m.a12[i]);
            v += 2.0 * m.a12[i] * l.dxy;
        }
    }
    for k in 0..dim {
        if b[k] > 0.0 {
            row.add_forward(k, h[k], b[k]);
            v += b[k] * l.fwd[k];
        } else if b[k] < 0.0 {
            row.add_backward(k, h[k], b[k]);
            v += b[k] * l.bwd[k];
        }
    }
    row.zero = m.c[i];
    v += m.c[i] * l.r;
    (v, row)
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    /// Whether every frozen row is a monotone stencil. Two-dimensional
    /// operators with cross terms (including Hessian-eigenvalue Pucci) are
    /// not.
    pub fn is_monotone(&self) -> bool {
        if self.grid.dim() == 1 {
            return true;
        }
        match self.base {
            Base::Pucci { .. } => false,
            _ => !self.members.iter().any(MemberSamples::has_cross),
        }
    }

    /// No policy to select: the frozen rows do not depend on the iterate.
    pub fn is_linear(&self) -> bool {
        matches!(self.base, Base::Linear)
            && self.gamma.is_none()
            && !matches!(self.zero, ZeroSamples::Abs(..))
    }

    fn local(&self, u: &[f64], i: usize) -> Local {
        let g = &self.grid;
        let c = u[i];
        let mut l = Local {
            r: c,
            d2: [0.0; 2],
            dxy: 0.0,
            fwd: [0.0; 2],
            bwd: [0.0; 2],
        };
        let stride = [g.shape()[1], 1];
        for k in 0..g.dim() {
            let h = g.h(k);
            let up = u[i + stride[k]];
            let dn = u[i - stride[k]];
            l.d2[k] = (up - 2.0 * c + dn) / (h * h);
            l.fwd[k] = (up - c) / h;
            l.bwd[k] = (c - dn) / h;
        }
        if g.dim() == 2 {
            let s = stride[0];
            l.dxy = (u[i + s + 1] - u[i + s - 1] - u[i - s + 1] + u[i - s - 1])
                / (4.0 * g.h(0) * g.h(1));
        }
        l
    }

    /// Frozen row and policy signature at interior node `i`.
    fn freeze_node(&self, u: &[f64], i: usize) -> (f64, Row, u64) {
        let g = &self.grid;
        let dim = g.dim();
        let h = [g.h(0), if dim == 2 { g.h(1) } else { 1.0 }];
        let l = self.local(u, i);
        let (mut value, mut row, mut sig) = match &self.base {
            Base::Linear => {
                let (v, r) = member_row(&self.members[0], i, dim, h, &l);
                (v, r, 0u64)
            }
            Base::Pucci { plus, e } => {
                let pick = |lam: f64| {
                    let up = lam > 0.0;
                    if up == *plus {
                        e.beta
                    } else {
                        e.alpha
                    }
                };
                let mut row = Row::new();
                if dim == 1 {
                    let a = pick(l.d2[0]);
                    row.add_second(0, h[0], a);
                    (a * l.d2[0], row, (l.d2[0] > 0.0) as u64)
                } else {
                    let hess = SymMatrix::new2(l.d2[0], l.dxy, l.d2[1]);
                    let (ev, q) = hess.eigen2();
                    let a = [pick(ev[0]), pick(ev[1])];
                    let a11 = a[0] * q[0][0] * q[0][0] + a[1] * q[1][0] * q[1][0];
                    let a12 = a[0] * q[0][0] * q[0][1] + a[1] * q[1][0] * q[1][1];
                    let a22 = a[0] * q[0][1] * q[0][1] + a[1] * q[1][1] * q[1][1];
                    row.add_second(0, h[0], a11);
                    row.add_second(1, h[1], a22);
                    row.add_cross(h[0], h[1], 2.0 * a12);
                    let v = a[0] * ev[0] + a[1] * ev[1];
                    let sig = (ev[0] > 0.0) as u64 | ((ev[1] > 0.0) as u64) << 1;
                    (v, row, sig)
                }
            }
            Base::Family { max } => {
                let mut best = (0usize, f64::NAN);
                for (k, m) in self.members.iter().enumerate() {
                    let (v, _) = member_row(m, i, dim, h, &l);
                    let better = if *max { v > best.1 } else { v < best.1 };
                    if k == 0 || better {
                        best = (k, v);
                    }
                }
                let (v, r) = member_row(&self.members[best.0], i, dim, h, &l);
                (v, r, best.0 as u64)
            }
            Base::Isaacs { inf_sup, t } => {
                let s_count = self.members.len() / t;
                let mut outer = (0usize, 0usize, f64::NAN);
                for s in 0..s_count {
                    let mut inner = (0usize, f64::NAN);
                    for tt in 0..*t {
                        let (v, _) = member_row(&self.members[s * t + tt], i, dim, h, &l);
                        let better = if *inf_sup { v > inner.1 } else { v < inner.1 };
                        if tt == 0 || better {
                            inner = (tt, v);
                        }
                    }
                    let better = if *inf_sup { inner.1 < outer.2 } else { inner.1 > outer.2 };
                    if s == 0 || better {
                        outer = (s, inner.0, inner.1);
                    }
                }
                let k = outer.0 * t + outer.1;
                let (v, r) = member_row(&self.members[k], i, dim, h, &l);
                (v, r, k as u64)
            }
        };
        sig <<= 8;
        if let Some((gamma, sign)) = &self.gamma {
            let gm = gamma[i];
            let mut gv = [0.0; 2];
            let mut choice = [2u64; 2];
            for k in 0..dim {
                let (a, b) = match sign {
                    Sign::Plus => (l.fwd[k], -l.bwd[k]),
                    Sign::Minus => (-l.fwd[k], l.bwd[k]),
                };
                if a >= b && a > 0.0 {
                    gv[k] = a;
                    choice[k] = 0;
                } else if b > 0.0 {
                    gv[k] = b;
                    choice[k] = 1;
                }
            }
            let nrm = (gv[0] * gv[0] + gv[1] * gv[1]).sqrt();
            if nrm > 0.0 && gm > 0.0 {
                let s = sign.value();
                for k in 0..dim {
                    let w = s * gm * gv[k] / nrm;
                    match (choice[k], sign) {
                        (0, Sign::Plus) => row.add_forward(k, h[k], w),
                        (1, Sign::Plus) => row.add_backward(k, h[k], -w),
                        (0, Sign::Minus) => row.add_forward(k, h[k], -w),
                        (1, Sign::Minus) => row.add_backward(k, h[k], w),
                        _ => {}
                    }
                }
                value += s * gm * nrm;
            }
            sig |= choice[0] * 3 + choice[1];
        }
        sig <<= 2;
        match &self.zero {
            ZeroSamples::None => {}
            ZeroSamples::Linear(c) => {
                row.zero += c[i];
                value += c[i] * l.r;
            }
            ZeroSamples::Abs(theta, sign) => {
                // At r = 0 take the proper branch.
                let s = if l.r > 0.0 || (l.r == 0.0 && *sign == Sign::Minus) {
                    1.0
                } else {
                    -1.0
                };
                let coef = sign.value() * theta[i] * s;
                row.zero += coef;
                value += coef * l.r;
                sig |= (s > 0.0) as u64;
            }
        }
        (value, row, sig)
    }

    /// Freezes the operator at `u` (which must include boundary values).
    pub fn freeze(&self, u: &Field) -> Result<Frozen> {
        u.check_on(&self.grid)?;
        let vals = u.values();
        let (rows, signature) = self
            .grid
            .interior_nodes()
            .map(|i| {
                let (_, r, s) = self.freeze_node(vals, i);
                (r, s)
            })
            .unzip();
        Ok(Frozen { rows, signature })
    }

    /// `F[u]` at interior node `i`.
    pub fn value_at(&self, u: &Field, i: usize) -> f64 {
        self.freeze_node(u.values(), i).0
    }

    /// Residual field: `F[u]` at interior nodes, `u` on boundary nodes.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        u.check_on(&self.grid)?;
        let mut out = u.clone();
        for i in self.grid.interior_nodes() {
            out.set(i, self.freeze_node(u.values(), i).0);
        }
        Ok(out)
    }

    /// Residual field with boundary rows `u - g`.
    pub fn apply_with_boundary(&self, u: &Field, g: &Field) -> Result<Field> {
        g.check_on(&self.grid)?;
        let mut out = self.apply(u)?;
        for i in self.grid.boundary_nodes() {
            out.set(i, u.value(i) - g.value(i));
        }
        Ok(out)
    }

    /// Interior values of `F[u]` in slot order.
    pub fn apply_interior(&self, u: &Field) -> Result<Vec<f64>> {
        u.check_on(&self.grid)?;
        Ok(self
            .grid
            .interior_nodes()
            .map(|i| self.freeze_node(u.values(), i).0)
            .collect())
    }
}

/// Dot product of a frozen row with `u` around interior node `i`.
pub fn row_value(grid: &Grid, row: &Row, u: &[f64], i: usize) -> f64 {
    let mut v = row.zero * u[i];
    for (k, &c) in row.stencil.iter().enumerate() {
        if c != 0.0 {
            let j = grid.neighbor(i, Row::offset(k)).expect("interior stencil");
            v += c * u[j];
        }
    }
    v
}
