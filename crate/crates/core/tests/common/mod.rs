//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use lespectra::geometry::Grid;
use lespectra::operators::{
    evaluate, lower_envelope, pucci_minus, pucci_plus, reflect, structure_bounds, Coef, EllipticityPair,
    LinearOp, OperatorKind, OperatorSpec, Sign, SymMatrix, ZeroOrder,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative slack for identities that hold exactly in real arithmetic.
pub const REL: f64 = 1e-10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A 3x3 interior grid on the unit square; node 12 is its center.
pub fn probe_grid() -> Arc<Grid> {
    Grid::rectangle((0.0, 1.0), (0.0, 1.0), (3, 3)).unwrap()
}

pub const PROBE_NODE: usize = 12;

pub fn random_sym(r: &mut ChaCha8Rng, scale: f64) -> SymMatrix {
    SymMatrix::new2(
        r.random_range(-scale..scale),
        r.random_range(-scale..scale),
        r.random_range(-scale..scale),
    )
}

/// `B B^T` for a random `B`: positive semidefinite.
pub fn random_psd(r: &mut ChaCha8Rng) -> SymMatrix {
    let b: [f64; 4] = std::array::from_fn(|_| r.random_range(-2.0..2.0));
    SymMatrix::new2(
        b[0] * b[0] + b[1] * b[1],
        b[0] * b[2] + b[1] * b[3],
        b[2] * b[2] + b[3] * b[3],
    )
}

pub fn random_ellipticity(r: &mut ChaCha8Rng) -> EllipticityPair {
    let a = r.random_range(0.2..2.0);
    EllipticityPair::new(a, a + r.random_range(0.0..3.0)).unwrap()
}

/// Uniformly elliptic linear operator with a rotated diffusion matrix.
pub fn random_linear(r: &mut ChaCha8Rng, lower_order: bool) -> LinearOp {
    let (l1, l2) = (r.random_range(0.3..3.0), r.random_range(0.3..3.0));
    let t: f64 = r.random_range(0.0..std::f64::consts::PI);
    let (c, s) = (t.cos(), t.sin());
    let mut op = LinearOp {
        a11: Coef::Const(l1 * c * c + l2 * s * s),
        a12: Coef::Const((l1 - l2) * c * s),
        a22: Coef::Const(l1 * s * s + l2 * c * c),
        drift: Vec::new(),
        c: Coef::Const(0.0),
    };
    if lower_order {
        op.drift = vec![
            Coef::Const(r.random_range(-1.0..1.0)),
            Coef::Const(r.random_range(-1.0..1.0)),
        ];
        op.c = Coef::Const(r.random_range(-1.0..1.0));
    }
    op
}

fn members(r: &mut ChaCha8Rng) -> Vec<LinearOp> {
    let k = r.random_range(1..5);
    (0..k)
        .map(|_| {
            let lower = r.random_bool(0.5);
            random_linear(r, lower)
        })
        .collect()
}

fn random_sign(r: &mut ChaCha8Rng) -> Sign {
    if r.random_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// An operator of any supported kind with optional gradient and zero-order
/// terms.
pub fn random_spec(r: &mut ChaCha8Rng) -> OperatorSpec {
    let kind = match r.random_range(0..7) {
        0 => OperatorKind::Linear {
            op: random_linear(r, true),
        },
        1 => {
            let e = random_ellipticity(r);
            OperatorKind::PucciPlus {
                alpha: e.alpha,
                beta: e.beta,
            }
        }
        2 => {
            let e = random_ellipticity(r);
            OperatorKind::PucciMinus {
                alpha: e.alpha,
                beta: e.beta,
            }
        }
        3 => OperatorKind::MaxOf { members: members(r) },
        4 => OperatorKind::MinOf { members: members(r) },
        5 => OperatorKind::InfSup {
            family: (0..r.random_range(1..4)).map(|_| members(r)).collect(),
        },
        _ => OperatorKind::SupInf {
            family: (0..r.random_range(1..4)).map(|_| members(r)).collect(),
        },
    };
    let mut spec = OperatorSpec::new(kind);
    if r.random_bool(0.5) {
        let s = random_sign(r);
        spec = spec.with_gradient(Coef::Const(r.random_range(0.0..1.5)), s);
    }
    spec = match r.random_range(0..3) {
        0 => spec,
        1 => spec.with_zero_order(ZeroOrder::Linear {
            c: Coef::Const(r.random_range(-1.0..1.0)),
        }),
        _ => {
            let s = random_sign(r);
            spec.with_zero_order(ZeroOrder::Abs {
                theta: Coef::Const(r.random_range(0.0..1.0)),
                sign: s,
            })
        }
    };
    spec
}

/// A random jet `(r, xi, X)` at the probe node.
pub fn random_jet(r: &mut ChaCha8Rng) -> (f64, [f64; 2], SymMatrix) {
    (
        r.random_range(-3.0..3.0),
        [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)],
        random_sym(r, 5.0),
    )
}

pub fn eval(spec: &OperatorSpec, jet: &(f64, [f64; 2], SymMatrix)) -> f64 {
    evaluate(spec, &probe_grid(), PROBE_NODE, jet.0, &jet.1, &jet.2).unwrap()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= REL * (1.0 + scale)
}

fn le(a: f64, b: f64, scale: f64) -> bool {
    a <= b + REL * (1.0 + scale)
}

/// `M^-(X) = -M^+(-X)`.
pub fn pucci_duality(seed: u64) -> Result<(), String> {
    let r = &mut rng(seed);
    let e = random_ellipticity(r);
    let x = random_sym(r, 10.0);
    let (a, b) = (pucci_minus(&x, &e), -pucci_plus(&x.neg(), &e));
    if close(a, b, a.abs()) {
        Ok(())
    } else {
        Err(format!("duality: {a} vs {b}"))
    }
}

/// `M^-(X) + M^-(Y) <= M^-(X + Y) <= M^-(X) + M^+(Y) <= M^+(X + Y) <= M^+(X) + M^+(Y)`.
pub fn pucci_subadditivity(seed: u64) -> Result<(), String> {
    let r = &mut rng(seed);
    let e = random_ellipticity(r);
    let (x, y) = (random_sym(r, 10.0), random_sym(r, 10.0));
    let s = x.add(&y);
    let chain = [
        pucci_minus(&x, &e) + pucci_minus(&y, &e),
        pucci_minus(&s, &e),
        pucci_minus(&x, &e) + pucci_plus(&y, &e),
        pucci_plus(&s, &e),
        pucci_plus(&x, &e) + pucci_plus(&y, &e),
    ];
    let scale = chain.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if chain.windows(2).all(|w| le(w[0], w[1], scale)) {
        Ok(())
    } else {
        Err(format!("subadditivity chain {chain:?}"))
    }
}

/// `F(r, xi, X) <= F(r, xi, X + P)` for `P >= 0`, for every operator kind.
pub fn monotonicity(seed: u64) -> Result<(), String> {
    let r = &mut rng(seed);
    let spec = random_spec(r);
    let jet = random_jet(r);
    let p = random_psd(r);
    let a = eval(&spec, &jet);
    let b = eval(&spec, &(jet.0, jet.1, jet.2.add(&p)));
    if le(a, b, a.abs().max(b.abs())) {
        Ok(())
    } else {
        Err(format!("monotonicity {a} > {b} for {spec:?}"))
    }
}

/// `L^- <= F_* <= F <= F^* <= L^+` with `L^+-` the extremal operators of `F`.
pub fn envelope_ordering(seed: u64) -> Result<(), String> {
    let r = &mut rng(seed);
    let spec = random_spec(r);
    let jet = random_jet(r);
    let g = probe_grid();
    let sb = structure_bounds(&spec, &g, PROBE_NODE).unwrap();
    let chain = [
        sb.lower(jet.0, &jet.1, &jet.2),
        eval(&lower_envelope(&spec).spec, &jet),
        eval(&spec, &jet),
        eval(&lespectra::operators::upper_envelope(&spec).spec, &jet),
        sb.upper(jet.0, &jet.1, &jet.2),
    ];
    let scale = chain.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if chain.windows(2).all(|w| le(w[0], w[1], scale)) {
        Ok(())
    } else {
        Err(format!("envelope chain {chain:?} for {spec:?}"))
    }
}

/// Structure condition on differences of two jets.
pub fn structure_sampling(seed: u64) -> Result<(), String> {
    let r = &mut rng(seed);
    let spec = random_spec(r);
    let (a, b) = (random_jet(r), random_jet(r));
    let g = probe_grid();
    let sb = structure_bounds(&spec, &g, PROBE_NODE).unwrap();
    let d = (a.0 - b.0, [a.1[0] - b.1[0], a.1[1] - b.1[1]], a.2.add(&b.2.neg()));
    let diff = eval(&spec, &a) - eval(&spec, &b);
    let (lo, hi) = (sb.lower(d.0, &d.1, &d.2), sb.upper(d.0, &d.1, &d.2));
    let scale = lo.abs().max(hi.abs()).max(diff.abs());
    if le(lo, diff, scale) && le(diff, hi, scale) {
        Ok(())
    } else {
        Err(format!("structure: {lo} <= {diff} <= {hi} fails for {spec:?}"))
    }
}

/// `reflect(reflect(F)) = F` and `reflect(F)(r, xi, X) = -F(-r, -xi, -X)`.
pub fn reflect_involution(seed: u64) -> Result<(), String> {
    let r = &mut rng(seed);
    let spec = random_spec(r);
    let jet = random_jet(r);
    let neg = (-jet.0, [-jet.1[0], -jet.1[1]], jet.2.neg());
    let f = eval(&spec, &jet);
    let g = eval(&reflect(&spec), &jet);
    let ff = eval(&reflect(&reflect(&spec)), &jet);
    let fneg = eval(&spec, &neg);
    let scale = f.abs().max(g.abs());
    if close(ff, f, scale) && close(g, -fneg, scale) {
        Ok(())
    } else {
        Err(format!("reflection: F = {f}, RRF = {ff}, RF = {g}, -F(-.) = {}", -fneg))
    }
}

/// `F(t r, t xi, t X) = t F(r, xi, X)` for `t >= 0`.
pub fn homogeneity(seed: u64) -> Result<(), String> {
    let r = &mut rng(seed);
    let spec = random_spec(r);
    let jet = random_jet(r);
    let t = r.random_range(0.0..10.0);
    let scaled = (t * jet.0, [t * jet.1[0], t * jet.1[1]], jet.2.scale(t));
    let (a, b) = (eval(&spec, &scaled), t * eval(&spec, &jet));
    if close(a, b, a.abs()) {
        Ok(())
    } else {
        Err(format!("homogeneity: {a} vs {b}"))
    }
}

pub type Property = (&'static str, fn(u64) -> Result<(), String>);

pub const PROPERTIES: [Property; 7] = [
    ("pucci duality", pucci_duality),
    ("pucci subadditivity", pucci_subadditivity),
    ("monotonicity", monotonicity),
    ("envelope ordering", envelope_ordering),
    ("structure sampling", structure_sampling),
    ("reflect involution", reflect_involution),
    ("1-homogeneity", homogeneity),
];

/// Matrix of `-u''` with zero Dirichlet data on `m` interior nodes.
pub fn neg_second_difference(m: usize, h: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = 2.0 / (h * h);
        if i > 0 {
            a[(i, i - 1)] = -1.0 / (h * h);
        }
        if i + 1 < m {
            a[(i, i + 1)] = -1.0 / (h * h);
        }
    }
    a
}

/// Ascending eigenvalues of the tridiagonal `-u''` matrix.
pub fn tridiagonal_eigenvalues(m: usize, h: f64) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(neg_second_difference(m, h)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Dense solve of `u'' + lambda v = f1`, `v'' + mu u = f2` on `m` interior
/// nodes of `(0, 1)`.
pub fn dense_linear_system(m: usize, lambda: f64, mu: f64, f1: &[f64], f2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / (m + 1) as f64;
    let d = neg_second_difference(m, h);
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = -d[(i, j)];
            a[(m + i, m + j)] = -d[(i, j)];
        }
        a[(i, m + i)] = lambda;
        a[(m + i, i)] = mu;
    }
    let mut b = DVector::zeros(2 * m);
    for i in 0..m {
        b[i] = f1[i];
        b[m + i] = f2[i];
    }
    let x = a.lu().solve(&b).expect("nonsingular block system");
    (x.rows(0, m).iter().copied().collect(), x.rows(m, m).iter().copied().collect())
}

/// Classical RK4 for `y' = f(t, y)` from `t0` to `t1` in `steps` steps.
pub fn rk4(f: impl Fn(f64, &[f64; 4]) -> [f64; 4], t0: f64, t1: f64, y0: [f64; 4], steps: usize) -> [f64; 4] {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let axpy = |y: &[f64; 4], k: &[f64; 4], s: f64| -> [f64; 4] { std::array::from_fn(|i| y[i] + s * k[i]) };
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + h / 2.0, &axpy(&y, &k1, h / 2.0));
        let k3 = f(t + h / 2.0, &axpy(&y, &k2, h / 2.0));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

/// Newton with a forward-difference Jacobian on a 2x2 system.
pub fn newton2(g: impl Fn([f64; 2]) -> [f64; 2], mut x: [f64; 2], tol: f64) -> Option<[f64; 2]> {
    for _ in 0..60 {
        let r = g(x);
        if r[0].abs().max(r[1].abs()) < tol {
            return Some(x);
        }
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut xp = x;
            let dx = 1e-7 * (1.0 + x[k].abs());
            xp[k] += dx;
            let rp = g(xp);
            j[0][k] = (rp[0] - r[0]) / dx;
            j[1][k] = (rp[1] - r[1]) / dx;
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let d0 = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let d1 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        x = [x[0] - d0, x[1] - d1];
    }
    None
}

/// Diagonal principal value of `-u'' = lambda |v|^(q-1) v`,
/// `-v'' = lambda |u|^(p-1) u` on `(0, 1)` by shooting from the center with
/// `u(1/2) = 1`, `u' = v' = 0`: the unknowns `(v(1/2), lambda)` are fixed by
/// `u(1) = v(1) = 0`.
pub fn center_shooting_eigen(p: f64, q: f64, guess: [f64; 2]) -> Option<[f64; 2]> {
    let sp = |x: f64, e: f64| x.abs().powf(e) * x.signum();
    let miss = |z: [f64; 2]| {
        let (b, l) = (z[0], z[1]);
        let y = rk4(
            |_, y| [y[1], -l * sp(y[2], q), y[3], -l * sp(y[0], p)],
            0.5,
            1.0,
            [1.0, 0.0, b, 0.0],
            4000,
        );
        [y[0], y[2]]
    };
    newton2(miss, guess, 1e-11)
}

/// Center values `(u(1/2), v(1/2))` of the positive solution of
/// `u'' + lambda |v|^(q-1) v = 0`, `v'' + mu |u|^(p-1) u = 0` on `(0, 1)`.
pub fn center_shooting_dirichlet(p: f64, q: f64, lambda: f64, mu: f64, guess: [f64; 2]) -> Option<[f64; 2]> {
    let pw = |x: f64, e: f64| x.max(0.0).powf(e);
    let miss = |z: [f64; 2]| {
        let y = rk4(
            |_, y| [y[1], -lambda * pw(y[2], q), y[3], -mu * pw(y[0], p)],
            0.5,
            1.0,
            [z[0], 0.0, z[1], 0.0],
            4000,
        );
        [y[0], y[2]]
    };
    newton2(miss, guess, 1e-12)
}
