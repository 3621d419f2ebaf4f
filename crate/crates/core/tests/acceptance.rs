//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Each check returns its measured evidence; a failing check is reported,
//! never retried with looser settings. The process exits 0 once every check
//! has run, so a FAIL line is the verdict and not a harness crash.

mod common;

use std::f64::consts::PI;
use std::panic::AssertUnwindSafe;
use std::time::Instant;

use lespectra::curves::{anchor_recovery, classify, curve_mu, CurveLabel, SpectralCurve};
use lespectra::dirichlet::{
    amp_scan, battery_data, fucik_system, isolation_scan, min_principle_verdict, mp_verdict, small_domain_threshold,
    solvability_scan, solve_sublinear, solve_sublinear_scaled, solve_system_picard, IsolationOptions, LaneEmden,
    MpContext, SmallDomainSetup, SystemOptions, SystemProblem,
};
use lespectra::eigen::{
    gauge_distance, random_start, scalar_principal_eigen, second_eigen_linear_symmetric, shooting_eigenvalue_1d,
    system_principal_eigen_from, EigenOptions, ExponentPair,
};
use lespectra::geometry::{Field, Grid};
use lespectra::cli::verify_fucik;
use lespectra::operators::{Coef, LinearOp, OperatorSpec, Sign};
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn unit(n: usize) -> std::sync::Arc<Grid> {
    Grid::interval(0.0, 1.0, n).unwrap()
}

fn pair(f1: OperatorSpec, f2: OperatorSpec, n: usize, p: f64, q: f64) -> LaneEmden {
    let g = unit(n);
    let w = Field::constant(&g, 1.0);
    LaneEmden::new(f1, f2, w.clone(), w, ExponentPair::new(p, q).unwrap()).unwrap()
}

fn scalar_laplace(n: usize) -> Result<f64, String> {
    let g = unit(n);
    let w = Field::constant(&g, 1.0);
    scalar_principal_eigen(&OperatorSpec::laplacian(), &g, &w, Sign::Plus, &EigenOptions::default())
        .map(|e| e.lambda1)
        .map_err(err)
}

fn c1_scalar_laplacian() -> Check {
    let (l99, l199) = (scalar_laplace(99)?, scalar_laplace(199)?);
    let pi2 = PI * PI;
    let rel = (l199 / pi2 - 1.0).abs();
    let ratio = (l99 - pi2).abs() / (l199 - pi2).abs();
    let oracle = common::tridiagonal_eigenvalues(199, 1.0 / 200.0)[0];
    let orel = (l199 / oracle - 1.0).abs();
    verdict(
        rel < 0.01 && ratio >= 3.5 && orel < 1e-9,
        format!("lambda1 = {l199:.10} (rel err {rel:.2e}), error ratio {ratio:.4}, tridiagonal oracle rel diff {orel:.1e}"),
    )
}

fn c2_pucci_half_eigenvalues() -> Check {
    let g = unit(199);
    let w = Field::constant(&g, 1.0);
    let o = EigenOptions::default();
    let spec = OperatorSpec::pucci_plus(1.0, 2.0);
    let plus = scalar_principal_eigen(&spec, &g, &w, Sign::Plus, &o).map_err(err)?.lambda1;
    let minus = scalar_principal_eigen(&spec, &g, &w, Sign::Minus, &o).map_err(err)?.lambda1;
    let pi2 = PI * PI;
    let (rp, rm) = ((plus / pi2 - 1.0).abs(), (minus / (2.0 * pi2) - 1.0).abs());
    // A positive eigenfunction is concave, so M+ acts as alpha times the
    // second derivative; a negative one is convex and sees beta.
    let lap = common::tridiagonal_eigenvalues(199, 1.0 / 200.0)[0];
    let red = (plus / lap - 1.0).abs().max((minus / (2.0 * lap) - 1.0).abs());
    verdict(
        rp < 0.01 && rm < 0.01 && red < 1e-8,
        format!("lambda1+ = {plus:.8} (rel {rp:.2e}), lambda1- = {minus:.8} (rel {rm:.2e}), sign-reduction diff {red:.1e}"),
    )
}

fn c3_system_laplacian() -> Check {
    let sys = pair(OperatorSpec::laplacian(), OperatorSpec::laplacian(), 199, 1.0, 1.0);
    let o = EigenOptions {
        tol: 1e-11,
        dtol: 1e-13,
        max_iter: 2000,
        ..EigenOptions::default()
    };
    let e = sys.eigen(Sign::Plus, &o).map_err(err)?;
    let v = e.v.clone().unwrap();
    let aligned = v.scaled(e.u.sup_norm() / v.sup_norm());
    let d = e.u.distance(&aligned).map_err(err)?;
    let rel = (e.lambda1 / (PI * PI) - 1.0).abs();
    verdict(
        rel < 0.01 && d <= 1e-8,
        format!("lambda1 = {:.10} (rel err {rel:.2e}), |u - v| = {d:.2e} after gauge alignment", e.lambda1),
    )
}

fn c4_fucik() -> Check {
    let g = unit(199);
    let mut worst: f64 = 0.0;
    let mut order_ok = true;
    let mut lines = Vec::new();
    for kappa in [2.0, 4.0] {
        for (p, q) in [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)] {
            let r = verify_fucik(
                kappa,
                ExponentPair::new(p, q).unwrap(),
                &LinearOp::laplacian(),
                &g,
                &EigenOptions::default(),
            )
            .map_err(err)?;
            worst = worst.max(r.max_rel_err());
            order_ok &= r.ordering_matches;
            lines.push(format!("k={kappa},(p,q)=({p},{q}):{:.4}/{:.4}", r.ratio_plus, r.ratio_minus));
        }
    }
    verdict(
        worst < 0.01 && order_ok,
        format!("max rel err {worst:.2e}, orderings match: {order_ok}; ratios {}", lines.join(" ")),
    )
}

fn c5_shooting() -> Check {
    let exps = ExponentPair::new(2.0, 0.5).unwrap();
    let fd = pair(OperatorSpec::laplacian(), OperatorSpec::laplacian(), 199, 2.0, 0.5)
        .eigen(Sign::Plus, &EigenOptions::default())
        .map_err(err)?
        .lambda1;
    let shoot = shooting_eigenvalue_1d(exps).map_err(err)?;
    let center = common::center_shooting_eigen(2.0, 0.5, [1.0, PI * PI]).ok_or("center shooting failed")?[1];
    let (r1, r2) = ((fd / shoot - 1.0).abs(), (shoot / center - 1.0).abs());
    verdict(
        r1 < 0.01 && r2 < 1e-6,
        format!("grid {fd:.8}, shooting {shoot:.8} (rel {r1:.2e}), test-side shooting {center:.8} (rel {r2:.1e})"),
    )
}

fn c6_curve_algebra() -> Check {
    let r = &mut common::rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = 10f64.powf(r.random_range(-1.0..3.0));
        let p = 10f64.powf(r.random_range(-1.0..1.0));
        let c = SpectralCurve::new(a, p, CurveLabel::Plus).map_err(err)?;
        let fixed = (curve_mu(&c, a).map_err(err)? / a - 1.0).abs();
        let l = a * 10f64.powf(r.random_range(-2.0..2.0));
        let m = curve_mu(&c, l).map_err(err)?;
        let back = (anchor_recovery(l, m, p).map_err(err)? / a - 1.0).abs();
        worst = worst.max(fixed).max(back);
    }
    verdict(worst <= 1e-14, format!("100 cases, max relative error {worst:.2e}"))
}

fn c7_simplicity() -> Check {
    let instances: Vec<(&str, LaneEmden)> = vec![
        ("laplace (1,1)", pair(OperatorSpec::laplacian(), OperatorSpec::laplacian(), 199, 1.0, 1.0)),
        (
            "pucci (2,1/2)",
            pair(OperatorSpec::pucci_plus(1.0, 2.0), OperatorSpec::pucci_minus(1.0, 3.0), 199, 2.0, 0.5),
        ),
        ("fucik k=4 (1/2,2)", pair(OperatorSpec::fucik_max(4.0), OperatorSpec::fucik_min(4.0), 199, 0.5, 2.0)),
        {
            let g = Grid::rectangle((0.0, 1.0), (0.0, 2.0), (19, 29)).unwrap();
            let w = Field::constant(&g, 1.0);
            let s = LaneEmden::new(
                OperatorSpec::pucci_minus(1.0, 2.0),
                OperatorSpec::laplacian(),
                w.clone(),
                w,
                ExponentPair::new(1.0, 1.0).unwrap(),
            )
            .unwrap();
            ("2D pucci/laplace (1,1)", s)
        },
    ];
    let o = EigenOptions::default();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (_, s) in &instances {
        for sign in [Sign::Plus, Sign::Minus] {
            let mut first = None;
            for seed in 0..10 {
                let start = random_start(s.grid(), 1000 + seed);
                let e = system_principal_eigen_from(&s.op1, &s.op2, &s.tau1, &s.tau2, s.exps, sign, &o, Some(start))
                    .map_err(err)?;
                runs += 1;
                match &first {
                    None => first = Some(e),
                    Some(f) => worst = worst.max(gauge_distance(f, &e, s.exps.p).map_err(err)?),
                }
            }
        }
    }
    verdict(
        worst <= 1e-6,
        format!("{runs} random-start runs over {} instances x 2 signs, max gauge distance {worst:.2e}", instances.len()),
    )
}

fn c8_mp_characterization() -> Check {
    let g = unit(99);
    let sys = fucik_system(&g, 2.0, ExponentPair::new(2.0, 0.5).unwrap()).map_err(err)?;
    let ctx = MpContext::new(sys, battery_data(&g, 8, 1.0, 8), EigenOptions::default()).map_err(err)?;
    let mirror = ctx.mirrored().map_err(err)?;
    let (lp, lm) = (ctx.plus.lambda1, mirror.plus.lambda1);
    let plus = SpectralCurve::new(lp, 2.0, CurveLabel::Plus).map_err(err)?;
    let minus = SpectralCurve::new(lm, 2.0, CurveLabel::Minus).map_err(err)?;
    let mults = [0.5, 0.8, 1.1, 1.4, 1.8];
    let (mut mp_ok, mut min_ok, mut between) = (0, 0, 0);
    let mut misses = Vec::new();
    for a in mults {
        for b in mults {
            let (l, m) = (a * lp, b * lp);
            let region = classify(l, m, &plus, &minus, None).map_err(err)?;
            if region.in_c1_minus && !region.in_c1_plus {
                between += 1;
            }
            let v = mp_verdict(&ctx, l, m).map_err(err)?.verdict;
            let w = min_principle_verdict(&mirror, l, m).map_err(err)?.verdict;
            if v == Some(region.predicts_mp()) {
                mp_ok += 1;
            } else {
                misses.push(format!("MP({a},{b})"));
            }
            if w == Some(region.predicts_min_p()) {
                min_ok += 1;
            } else {
                misses.push(format!("mP({a},{b})"));
            }
        }
    }
    verdict(
        mp_ok == 25 && min_ok == 25 && between > 0,
        format!(
            "lambda1+ = {lp:.4}, lambda1- = {lm:.4}; MP {mp_ok}/25, mP {min_ok}/25, {between} points between the curves{}",
            if misses.is_empty() { String::new() } else { format!("; misses {}", misses.join(" ")) }
        ),
    )
}

fn c9_anti_maximum() -> Check {
    let g = unit(199);
    let sys = fucik_system(&g, 2.0, ExponentPair::new(2.0, 0.5).unwrap()).map_err(err)?;
    let f = Field::constant(&g, -1.0);
    let deltas = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0, 2.0, 4.0];
    let rep = amp_scan(&sys, &f, &f, &deltas, &EigenOptions::default(), &SystemOptions::default()).map_err(err)?;
    let lm = rep.param("lambda1_minus").unwrap_or(f64::NAN);
    let lp = rep.param("lambda1_plus").unwrap_or(f64::NAN);
    let delta = rep.threshold.unwrap_or(0.0);
    let fail = rep.param("first_failure");
    verdict(
        rep.verdict == Some(true) && lp <= lm && delta >= 1e-3 * lm && fail.is_some(),
        format!(
            "lambda1+ = {lp:.4} <= lambda1- = {lm:.4}; strictly negative solutions up to Delta = {delta:.4} ({:.2e} lambda1-), first failure at lambda = {}",
            delta / lm,
            fail.map_or("none".into(), |v| format!("{v:.4}"))
        ),
    )
}

fn c10_second_eigenvalue() -> Check {
    let g = unit(199);
    let w = Field::constant(&g, 1.0);
    let l2 = second_eigen_linear_symmetric(&LinearOp::laplacian(), &w, &g).map_err(err)?;
    let r2 = (l2 / (4.0 * PI * PI) - 1.0).abs();
    let sys = pair(OperatorSpec::laplacian(), OperatorSpec::laplacian(), 199, 1.0, 1.0);
    let l1 = sys.eigen(Sign::Plus, &EigenOptions::default()).map_err(err)?.lambda1;
    let mid = 0.5 * (l1 + l2);
    let iso = isolation_scan(&sys, &[l1, 0.9 * mid, mid, 1.1 * mid], &IsolationOptions::default()).map_err(err)?;
    let on = iso.table[0].value;
    let off = iso.table[1..].iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let iso_ok = off >= 1e3 * on;
    let samples: Vec<f64> = (0..5).map(|k| 1.1 * l1 + (0.9 * l2 - 1.1 * l1) * (k as f64 + 0.5) / 5.0).collect();
    let f = Field::constant(&g, -1.0);
    let solv = solvability_scan(&sys, &samples, &f, &f, &SystemOptions::default()).map_err(err)?;
    let solved = solv.table.iter().filter(|r| r.converged).count();
    let mut picard = 0;
    for &l in &samples {
        let prob = SystemProblem::new(sys.clone(), l, l, f.clone(), f.clone()).map_err(err)?;
        let o = SystemOptions {
            max_iter: 2000,
            ..SystemOptions::default()
        };
        if solve_system_picard(&prob, &o).map_err(err)?.2.converged {
            picard += 1;
        }
    }
    verdict(
        r2 < 0.01 && iso_ok && picard == 5,
        format!(
            "lambda2 = {l2:.6} (rel {r2:.2e}); isolation residual on-eigenvalue {on:.1e}, off {off:.2e} (ratio {:.1e}); \
             Dirichlet solves converge at {solved}/5 samples (Newton), damped Picard converges at {picard}/5",
            off / on.max(f64::MIN_POSITIVE)
        ),
    )
}

fn c11_sublinear() -> Check {
    let sys = pair(OperatorSpec::pucci_minus(1.0, 2.0), OperatorSpec::laplacian(), 199, 0.5, 1.0);
    let g = sys.grid().clone();
    let f = Field::constant(&g, -1.0);
    let prob = SystemProblem::new(sys, 10.0, 5.0, f.clone(), f).map_err(err)?;
    let o = SystemOptions::default();
    let (u, v, r, plan) = solve_sublinear(&prob, &o).map_err(err)?;
    let (u2, v2, r2) = solve_sublinear_scaled(&prob, &o, &plan, 0.5).map_err(err)?;
    let scale = u.sup_norm().max(v.sup_norm());
    let d = u.distance(&u2).map_err(err)?.max(v.distance(&v2).map_err(err)?) / scale;
    let positive = u.interior_min() > 0.0 && v.interior_min() > 0.0;
    let mut hopf = f64::INFINITY;
    for b in g.boundary_nodes() {
        hopf = hopf
            .min(u.inward_boundary_derivative(b).map_err(err)?)
            .min(v.inward_boundary_derivative(b).map_err(err)?);
    }
    verdict(
        r.converged && r2.converged && d <= 1e-6 && positive && hopf > 0.0,
        format!(
            "monotone iteration converged in {} and {} sweeps (k = {}, eps = {:.3e}); starts agree to {d:.1e}; \
             min interior value {:.3e}; min Hopf quotient {hopf:.3e}",
            r.iterations,
            r2.iterations,
            plan.k,
            plan.eps,
            u.interior_min().min(v.interior_min())
        ),
    )
}

fn c12_small_domain() -> Check {
    let l = 2.0 * PI * PI;
    let setup = SmallDomainSetup::new(
        OperatorSpec::laplacian(),
        OperatorSpec::laplacian(),
        Coef::Const(1.0),
        Coef::Const(1.0),
        ExponentPair::new(1.0, 1.0).unwrap(),
        l,
        l,
    );
    let rep = small_domain_threshold(&setup).map_err(err)?;
    let ls = rep.threshold.unwrap_or(f64::NAN);
    let rel = (ls * 2f64.sqrt() - 1.0).abs();
    let c = rep.param("weight_threshold").unwrap_or(f64::NAN);
    verdict(
        rel <= 0.1,
        format!("L* = {ls:.6} vs 1/sqrt(2) = {:.6} (rel {rel:.2e}); weight threshold on (0,1) c* = {c:.6} (exact 0.5)", 0.5f64.sqrt()),
    )
}

fn c13_properties() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, prop) in common::PROPERTIES {
        let mut runner = TestRunner::new(Config {
            cases: 10_000,
            failure_persistence: None,
            ..Config::default()
        });
        let res = runner.run(&proptest::num::u64::ANY, |s| prop(s).map_err(TestCaseError::fail));
        match res {
            Ok(()) => lines.push(format!("{name} 0")),
            Err(e) => {
                ok = false;
                lines.push(format!("{name} FAILED ({e})"));
            }
        }
    }
    verdict(ok, format!("10^4 cases each, failures: {}", lines.join(", ")))
}

fn main() {
    let checks: [Criterion; 13] = [
        ("scalar Laplacian eigenvalue", c1_scalar_laplacian),
        ("Pucci half-eigenvalues", c2_pucci_half_eigenvalues),
        ("system eigenvalue, Laplacian pair", c3_system_laplacian),
        ("Fucik closed form", c4_fucik),
        ("pq = 1 asymmetric exponents vs shooting", c5_shooting),
        ("curve algebra", c6_curve_algebra),
        ("simplicity under random starts", c7_simplicity),
        ("MP/mP characterization", c8_mp_characterization),
        ("anti-maximum principle", c9_anti_maximum),
        ("second eigenvalue, isolation, solvability", c10_second_eigenvalue),
        ("sublinear regime", c11_sublinear),
        ("small-domain MP", c12_small_domain),
        ("operator property suite", c13_properties),
    ];
    let mut passed = 0;
    for (k, (name, f)) in checks.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => {
                passed += 1;
                println!("PASS {:>2} {name}: {d} [{secs:.1}s]", k + 1);
            }
            Err(d) => println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", k + 1),
        }
    }
    println!("acceptance: {passed}/{} criteria pass", checks.len());
}
