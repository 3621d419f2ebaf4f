//! Closed-form checks: the Fucik pair and scalar half-eigenvalues under grid
//! refinement.

use std::sync::Arc;

use serde::Serialize;

use crate::dirichlet::LaneEmden;
use crate::eigen::{scalar_principal_eigen, EigenOptions, ExponentPair};
use crate::error::{Error, Result};
use crate::geometry::{Field, Grid};
use crate::operators::{Coef, LinearOp, OperatorSpec, Sign};

/// Relative gap below which the two principal values count as equal.
const COINCIDE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveOrdering {
    PlusBelowMinus,
    MinusBelowPlus,
    Coincide,
}

impl CurveOrdering {
    fn measured(plus: f64, minus: f64) -> Self {
        if (plus - minus).abs() <= COINCIDE_TOL * plus.max(minus) {
            CurveOrdering::Coincide
        } else if plus < minus {
            CurveOrdering::PlusBelowMinus
        } else {
            CurveOrdering::MinusBelowPlus
        }
    }

    /// `q < 1` puts the plus curve below, `q > 1` above.
    fn predicted(q: f64) -> Self {
        if q < 1.0 {
            CurveOrdering::PlusBelowMinus
        } else if q > 1.0 {
            CurveOrdering::MinusBelowPlus
        } else {
            CurveOrdering::Coincide
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FucikReport {
    pub kappa: f64,
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub lambda1_plus: f64,
    pub lambda1_minus: f64,
    pub ratio_plus: f64,
    pub ratio_minus: f64,
    pub predicted_plus: f64,
    pub predicted_minus: f64,
    pub rel_err_plus: f64,
    pub rel_err_minus: f64,
    pub ordering: CurveOrdering,
    pub predicted_ordering: CurveOrdering,
    pub ordering_matches: bool,
}

impl FucikReport {
    pub fn max_rel_err(&self) -> f64 {
        self.rel_err_plus.max(self.rel_err_minus)
    }
}

fn scaled_op(op: &LinearOp, k: f64, grid: &Arc<Grid>) -> Result<LinearOp> {
    Ok(LinearOp {
        a11: op.a11.scaled(k, grid)?,
        a12: op.a12.scaled(k, grid)?,
        a22: op.a22.scaled(k, grid)?,
        drift: op
            .drift
            .iter()
            .map(|b| b.scaled(k, grid))
            .collect::<Result<Vec<Coef>>>()?,
        c: op.c.scaled(k, grid)?,
    })
}

/// Measures `lambda1^+/sigma` and `lambda1^-/sigma` for
/// `(max{L, kappa L}, min{L, kappa L})` with unit weights, where `sigma` is
/// the principal value of `(L, L)`, against `kappa^(q/(q+1))` and
/// `kappa^(1/(q+1))`.
pub fn verify_fucik(
    kappa: f64,
    exps: ExponentPair,
    base: &LinearOp,
    grid: &Arc<Grid>,
    opts: &EigenOptions,
) -> Result<FucikReport> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("the Fucik pair needs kappa > 1, got {kappa}")));
    }
    let (p, q) = (exps.p, exps.q);
    let w = Field::constant(grid, 1.0);
    let l = OperatorSpec::linear(base.clone());
    let sigma = LaneEmden::new(l.clone(), l, w.clone(), w.clone(), exps)?
        .eigen(Sign::Plus, opts)?
        .lambda1;
    let members = vec![base.clone(), scaled_op(base, kappa, grid)?];
    let sys = LaneEmden::new(
        OperatorSpec::max_of(members.clone()),
        OperatorSpec::min_of(members),
        w.clone(),
        w,
        exps,
    )?;
    let plus = sys.eigen(Sign::Plus, opts)?.lambda1;
    let minus = sys.eigen(Sign::Minus, opts)?.lambda1;
    let predicted_plus = kappa.powf(q / (q + 1.0));
    let predicted_minus = kappa.powf(1.0 / (q + 1.0));
    let (ratio_plus, ratio_minus) = (plus / sigma, minus / sigma);
    let ordering = CurveOrdering::measured(plus, minus);
    let predicted_ordering = CurveOrdering::predicted(q);
    Ok(FucikReport {
        kappa,
        p,
        q,
        sigma,
        lambda1_plus: plus,
        lambda1_minus: minus,
        ratio_plus,
        ratio_minus,
        predicted_plus,
        predicted_minus,
        rel_err_plus: (ratio_plus / predicted_plus - 1.0).abs(),
        rel_err_minus: (ratio_minus / predicted_minus - 1.0).abs(),
        ordering,
        predicted_ordering,
        ordering_matches: ordering == predicted_ordering,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarReport {
    pub n_fine: Vec<usize>,
    pub n_coarse: Vec<usize>,
    pub lambda1_plus: f64,
    pub lambda1_minus: f64,
    pub coarse_plus: f64,
    pub coarse_minus: f64,
    pub expected_plus: Option<f64>,
    pub expected_minus: Option<f64>,
    pub rel_err_plus: Option<f64>,
    pub rel_err_minus: Option<f64>,
    /// Coarse error over fine error; about 4 for a second-order scheme.
    pub error_ratio_plus: Option<f64>,
    pub error_ratio_minus: Option<f64>,
}

/// The grid with every interior count `n` replaced by `(n - 1) / 2`, which
/// doubles the spacing when `n` is odd.
pub fn coarsened(grid: &Grid) -> Result<Arc<Grid>> {
    let n: Vec<usize> = (0..grid.dim()).map(|a| (grid.n(a) - 1) / 2).collect();
    if n.iter().any(|&k| k < 3) {
        return Err(Error::InvalidGrid("grid too small to coarsen".into()));
    }
    Grid::uniform(grid.extents(), &n)
}

/// Scalar half-eigenvalues on a grid and its coarsening, with errors
/// against expected values when given.
pub fn verify_scalar(
    spec: &OperatorSpec,
    weight: &Coef,
    grid: &Arc<Grid>,
    expected: (Option<f64>, Option<f64>),
    opts: &EigenOptions,
) -> Result<ScalarReport> {
    let coarse = coarsened(grid)?;
    let eig = |g: &Arc<Grid>, s: Sign| -> Result<f64> {
        let w = Field::from_values(g, weight.sample(g)?)?;
        Ok(scalar_principal_eigen(spec, g, &w, s, opts)?.lambda1)
    };
    let (fp, fm) = (eig(grid, Sign::Plus)?, eig(grid, Sign::Minus)?);
    let (cp, cm) = (eig(&coarse, Sign::Plus)?, eig(&coarse, Sign::Minus)?);
    let rel = |v: f64, e: Option<f64>| e.map(|e| (v / e - 1.0).abs());
    let ratio = |f: f64, c: f64, e: Option<f64>| e.map(|e| (c - e).abs() / (f - e).abs());
    Ok(ScalarReport {
        n_fine: (0..grid.dim()).map(|a| grid.n(a)).collect(),
        n_coarse: (0..coarse.dim()).map(|a| coarse.n(a)).collect(),
        lambda1_plus: fp,
        lambda1_minus: fm,
        coarse_plus: cp,
        coarse_minus: cm,
        expected_plus: expected.0,
        expected_minus: expected.1,
        rel_err_plus: rel(fp, expected.0),
        rel_err_minus: rel(fm, expected.1),
        error_ratio_plus: ratio(fp, cp, expected.0),
        error_ratio_minus: ratio(fm, cm, expected.1),
    })
}
