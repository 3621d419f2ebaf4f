//! Banded LU with partial pivoting.
//!
//! Every linear system in the crate is a finite-difference stencil matrix
//! whose bandwidth is one grid row, so a band solver keeps factorization cost
//! at `O(n kl (kl + ku))`.

use crate::error::{Error, Result};

/// Square band matrix. Row `i` stores columns `i - kl ..= i + kl + ku`; the
/// extra `kl` superdiagonals hold fill-in from row pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn pos(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.pos(i, j)]
        } else {
            0.0
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let p = self.pos(i, j);
        self.data[p] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.n).all(|i| {
            let hi = (i + self.ku).min(self.n - 1);
            (i..=hi).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol * scale)
        })
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::NonFinite("band matrix entry".into()));
        }
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.pos(k, k)].abs();
            for r in k + 1..=last {
                let v = self.data[self.pos(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            piv[k] = p;
            if best <= 1e-14 * scale || best == 0.0 {
                return Err(Error::Singular { row: k, pivot: best });
            }
            let cmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let a = self.pos(k, j);
                    let b = self.pos(p, j);
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.pos(k, k)];
            for r in k + 1..=last {
                let prk = self.pos(r, k);
                let m = self.data[prk] / d;
                self.data[prk] = m;
                if m != 0.0 {
                    for j in k + 1..=cmax {
                        let kj = self.data[self.pos(k, j)];
                        let rj = self.pos(r, j);
                        self.data[rj] -= m * kj;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let BandMatrix { n, kl, ku, .. } = self.m;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    b[r] -= self.m.data[self.m.pos(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.m.data[self.m.pos(k, j)] * b[j];
            }
            b[k] = s / self.m.data[self.m.pos(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
