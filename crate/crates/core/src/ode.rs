//! Adaptive Dormand-Prince 5(4) integration with zero-crossing detection,
//! used by the one-dimensional shooting oracles.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const BS: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-11,
            atol: 1e-13,
            h_max: 0.05,
            max_steps: 200_000,
        }
    }
}

impl Dopri5 {
    /// One step of size `h`; returns the 5th-order solution and the error
    /// estimate (as a weighted RMS norm).
    fn step<F>(&self, f: &F, t: f64, y: &[f64], h: f64) -> (Vec<f64>, f64)
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        for s in 0..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            f(t + C[s] * h, &tmp, &mut k[s]);
        }
        let mut y5 = vec![0.0; n];
        let mut err = 0.0;
        for i in 0..n {
            let mut hi = 0.0;
            let mut e = 0.0;
            for s in 0..7 {
                hi += B[s] * k[s][i];
                e += (B[s] - BS[s]) * k[s][i];
            }
            y5[i] = y[i] + h * hi;
            let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
            err += (h * e / sc).powi(2);
        }
        (y5, (err / n as f64).sqrt())
    }

    /// Integrates from `t0` until every component listed in `watch` has
    /// crossed zero downward once, or `t_max` is reached. Returns the first
    /// crossing time per watched component.
    pub fn first_zeros<F>(&self, f: F, t0: f64, y0: &[f64], t_max: f64, watch: &[usize]) -> Result<Vec<Option<f64>>>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        self.zeros_impl(f, t0, y0, t_max, watch, false)
    }

    /// The earliest downward zero crossing among the watched components, as
    /// `(index into watch, time)`.
    pub fn first_crossing<F>(&self, f: F, t0: f64, y0: &[f64], t_max: f64, watch: &[usize]) -> Result<Option<(usize, f64)>>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let z = self.zeros_impl(f, t0, y0, t_max, watch, true)?;
        Ok(z
            .iter()
            .enumerate()
            .filter_map(|(k, t)| t.map(|t| (k, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1)))
    }

    fn zeros_impl<F>(&self, f: F, t0: f64, y0: &[f64], t_max: f64, watch: &[usize], any: bool) -> Result<Vec<Option<f64>>>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut h = 1e-8f64.min(self.h_max);
        let mut zeros: Vec<Option<f64>> = vec![None; watch.len()];
        for _ in 0..self.max_steps {
            let stop = if any {
                zeros.iter().any(Option::is_some)
            } else {
                zeros.iter().all(Option::is_some)
            };
            let blown = y.iter().any(|v| v.abs() > 1e150);
            if stop || blown || t >= t_max {
                return Ok(zeros);
            }
            let h_try = h.min(t_max - t);
            let (y_new, err) = self.step(&f, t, &y, h_try);
            if !err.is_finite() {
                return Err(Error::NonFinite(format!("ode step at t = {t}")));
            }
            if err <= 1.0 {
                for (w, &c) in watch.iter().enumerate() {
                    if zeros[w].is_none() && y[c] > 0.0 && y_new[c] <= 0.0 {
                        zeros[w] = Some(self.locate(&f, t, &y, h_try, c));
                    }
                }
                t += h_try;
                y = y_new;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h_try * fac).min(self.h_max);
        }
        Err(Error::NotConverged {
            iterations: self.max_steps,
            residual: t,
        })
    }

    /// Bisects the crossing inside an accepted step using partial steps from
    /// its left end.
    fn locate<F>(&self, f: &F, t: f64, y: &[f64], h: f64, c: usize) -> f64
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let (mut lo, mut hi) = (0.0, h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (ym, _) = self.step(f, t, y, mid);
            if ym[c] > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t + 0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_first_zero_is_pi() {
        let z = Dopri5::default()
            .first_zeros(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[1e-300, 1.0],
                10.0,
                &[0],
            )
            .unwrap();
        assert!((z[0].unwrap() - PI).abs() < 1e-9);
    }

    #[test]
    fn missing_zero_is_none() {
        let z = Dopri5::default()
            .first_zeros(
                |_, _y, dy| {
                    dy[0] = 1.0;
                },
                0.0,
                &[1.0],
                2.0,
                &[0],
            )
            .unwrap();
        assert!(z[0].is_none());
    }
}
