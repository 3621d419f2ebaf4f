//! Named analytic profiles for coefficients, weights and data.
//!
//! Profiles are a closed whitelist so config files can describe coefficients
//! without an expression evaluator.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

fn one() -> f64 {
    1.0
}

fn one_vec() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// `value`
    Const { value: f64 },
    /// `c0 + slope . x`
    Affine {
        c0: f64,
        #[serde(default)]
        slope: Vec<f64>,
    },
    /// `sum_k coeffs[k] * x_axis^k`
    Poly {
        coeffs: Vec<f64>,
        #[serde(default)]
        axis: usize,
    },
    /// `amp * prod_k sin(freq[k] * pi * x_k) + offset`
    Sine {
        #[serde(default = "one")]
        amp: f64,
        #[serde(default = "one_vec")]
        freq: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `min(cap, c / (|x - center| + eps))`, a bounded stand-in for a
    /// singular weight.
    InverseDistance {
        c: f64,
        eps: f64,
        center: Vec<f64>,
        cap: f64,
    },
    /// `inside` on the box `[lo, hi]`, `outside` elsewhere.
    Indicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "one")]
        inside: f64,
        #[serde(default)]
        outside: f64,
    },
}

impl Profile {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            Profile::Const { value } => *value,
            Profile::Affine { c0, slope } => {
                c0 + slope.iter().zip(p.iter()).map(|(s, x)| s * x).sum::<f64>()
            }
            Profile::Poly { coeffs, axis } => {
                let x = p[(*axis).min(1)];
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Profile::Sine { amp, freq, offset } => {
                let prod: f64 = freq
                    .iter()
                    .zip(p.iter())
                    .map(|(k, x)| (k * std::f64::consts::PI * x).sin())
                    .product();
                amp * prod + offset
            }
            Profile::InverseDistance { c, eps, center, cap } => {
                let d2: f64 = center
                    .iter()
                    .zip(p.iter())
                    .map(|(c, x)| (x - c) * (x - c))
                    .sum();
                (c / (d2.sqrt() + eps)).min(*cap)
            }
            Profile::Indicator {
                lo,
                hi,
                inside,
                outside,
            } => {
                let hit = lo
                    .iter()
                    .zip(hi)
                    .zip(p.iter())
                    .all(|((a, b), x)| *a <= *x && *x <= *b);
                if hit {
                    *inside
                } else {
                    *outside
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitelist_values() {
        let p = [0.5, 0.25];
        assert_eq!(Profile::Const { value: 3.0 }.eval(p), 3.0);
        let a = Profile::Affine {
            c0: 1.0,
            slope: vec![2.0, 4.0],
        };
        assert_eq!(a.eval(p), 3.0);
        let q = Profile::Poly {
            coeffs: vec![0.0, 1.0, -1.0],
            axis: 0,
        };
        assert_eq!(q.eval(p), 0.25);
        let s = Profile::Sine {
            amp: 2.0,
            freq: vec![1.0],
            offset: 0.0,
        };
        assert!((s.eval(p) - 2.0).abs() < 1e-15);
        let inv = Profile::InverseDistance {
            c: 1.0,
            eps: 1e-3,
            center: vec![0.5],
            cap: 50.0,
        };
        assert_eq!(inv.eval(p), 50.0);
        let ind = Profile::Indicator {
            lo: vec![0.4],
            hi: vec![0.6],
            inside: 2.0,
            outside: 0.0,
        };
        assert_eq!(ind.eval(p), 2.0);
        assert_eq!(ind.eval([0.7, 0.0]), 0.0);
    }

    #[test]
    fn parses_from_toml() {
        let p: Profile = toml::from_str("profile = \"sine\"\namp = 3.0\n").unwrap();
        assert_eq!(
            p,
            Profile::Sine {
                amp: 3.0,
                freq: vec![1.0],
                offset: 0.0
            }
        );
        assert!(toml::from_str::<Profile>("profile = \"const\"\nvalue = 1.0\nbogus = 2\n").is_err());
    }
}
