//! Spectral curves `mu(lambda) = anchor^(p+1) / lambda^p` and the regions
//! they bound in the `(lambda, mu)` quadrant.
//!
//! Every curve is stored by its diagonal anchor; all queries are closed form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fmt_sig17, Field};

/// Relative tolerance for on-curve detection.
pub const ON_CURVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveLabel {
    Plus,
    Minus,
    Second,
}

impl CurveLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveLabel::Plus => "plus",
            CurveLabel::Minus => "minus",
            CurveLabel::Second => "second",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub anchor: f64,
    pub p: f64,
    pub label: CurveLabel,
}

impl SpectralCurve {
    pub fn new(anchor: f64, p: f64, label: CurveLabel) -> Result<Self> {
        if !(anchor > 0.0 && anchor.is_finite() && p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "curve needs anchor > 0 and p > 0, got ({anchor}, {p})"
            )));
        }
        Ok(SpectralCurve { anchor, p, label })
    }
}

pub fn curve_mu(c: &SpectralCurve, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("curve needs lambda > 0, got {lambda}")));
    }
    Ok(c.anchor * (c.anchor / lambda).powf(c.p))
}

/// `(mu lambda^p)^(1/(p+1))`: the diagonal anchor of the curve through
/// `(lambda, mu)`.
pub fn anchor_recovery(lambda: f64, mu: f64, p: f64) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0 && p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "anchor recovery needs positive inputs, got ({lambda}, {mu}, {p})"
        )));
    }
    Ok(lambda * (mu / lambda).powf(1.0 / (p + 1.0)))
}

/// Moves a solution of the diagonal system at `lambda0` to the point
/// `(lambda, lambda0^(p+1) / lambda^p)` on the same curve:
/// `u = u0`, `v = (lambda0 / lambda)^p v0`.
pub fn scaling_map(u0: &Field, v0: &Field, lambda0: f64, lambda: f64, p: f64) -> Result<(Field, Field, f64)> {
    if !(lambda0 > 0.0 && lambda > 0.0 && p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scaling needs positive parameters, got ({lambda0}, {lambda}, {p})"
        )));
    }
    u0.check_grid(v0)?;
    let r = lambda0 / lambda;
    let t = r.powf(p);
    Ok((u0.clone(), v0.scaled(t), lambda0 * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub in_c1_plus: bool,
    pub in_c1_minus: bool,
    pub on_plus: bool,
    pub on_minus: bool,
    /// `M1 < anchor(lambda, mu) < lambda2`; absent without a second curve.
    pub between_m1_and_second: Option<bool>,
    pub outside_first_quadrant: bool,
    /// On a nonnegative half-axis: outside the open quadrant but inside the
    /// closures of both regions, where the equations decouple.
    pub on_closed_axis: bool,
}

impl RegionVerdict {
    /// The maximum principle is predicted on the closure of the region below
    /// the plus curve, minus the curve itself.
    pub fn predicts_mp(&self) -> bool {
        self.on_closed_axis || (self.in_c1_plus && !self.on_plus)
    }

    pub fn predicts_min_p(&self) -> bool {
        self.on_closed_axis || (self.in_c1_minus && !self.on_minus)
    }
}

pub fn classify(
    lambda: f64,
    mu: f64,
    plus: &SpectralCurve,
    minus: &SpectralCurve,
    second: Option<&SpectralCurve>,
) -> Result<RegionVerdict> {
    let p = plus.p;
    if minus.p != p || second.is_some_and(|s| s.p != p) {
        return Err(Error::InvalidParameter("curves carry different exponents".into()));
    }
    if !(lambda > 0.0 && mu > 0.0) {
        return Ok(RegionVerdict {
            in_c1_plus: false,
            in_c1_minus: false,
            on_plus: false,
            on_minus: false,
            between_m1_and_second: second.map(|_| false),
            outside_first_quadrant: true,
            on_closed_axis: lambda >= 0.0 && mu >= 0.0,
        });
    }
    let a = anchor_recovery(lambda, mu, p)?;
    let on = |c: &SpectralCurve| (a - c.anchor).abs() <= ON_CURVE_TOL * c.anchor;
    let m1 = plus.anchor.max(minus.anchor);
    Ok(RegionVerdict {
        in_c1_plus: a < plus.anchor,
        in_c1_minus: a < minus.anchor,
        on_plus: on(plus),
        on_minus: on(minus),
        between_m1_and_second: second.map(|s| m1 < a && a < s.anchor),
        outside_first_quadrant: false,
        on_closed_axis: false,
    })
}

/// `n` log-spaced samples `(lambda, mu)` of a curve on `[lambda_min, lambda_max]`.
pub fn sample_curve(c: &SpectralCurve, lambda_min: f64, lambda_max: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "bad sampling range [{lambda_min}, {lambda_max}] with n = {n}"
        )));
    }
    let (a, b) = (lambda_min.ln(), lambda_max.ln());
    (0..n)
        .map(|k| {
            let l = if k == n - 1 {
                lambda_max
            } else if k == 0 {
                lambda_min
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            };
            Ok((l, curve_mu(c, l)?))
        })
        .collect()
}

/// Writes `lambda,mu,label` rows for several sampled curves.
pub fn write_curve_csv<W: Write>(mut w: W, curves: &[(SpectralCurve, Vec<(f64, f64)>)]) -> std::io::Result<()> {
    writeln!(w, "lambda,mu,label")?;
    for (c, rows) in curves {
        for (l, m) in rows {
            writeln!(w, "{},{},{}", fmt_sig17(*l), fmt_sig17(*m), c.label.as_str())?;
        }
    }
    Ok(())
}
