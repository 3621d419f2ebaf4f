//! Positive solution of a sublinear system by monotone iteration, started
//! from two different subsolutions.

use lespectra::dirichlet::{solve_sublinear, solve_sublinear_scaled, LaneEmden, SystemOptions, SystemProblem};
use lespectra::eigen::ExponentPair;
use lespectra::geometry::{Field, Grid};
use lespectra::operators::OperatorSpec;

fn main() -> lespectra::Result<()> {
    let g = Grid::interval(0.0, 1.0, 199)?;
    let w = Field::constant(&g, 1.0);
    let sys = LaneEmden::new(
        OperatorSpec::pucci_minus(1.0, 2.0),
        OperatorSpec::laplacian(),
        w.clone(),
        w,
        ExponentPair::new(0.5, 1.0)?,
    )?;
    let f = Field::constant(&g, -1.0);
    let prob = SystemProblem::new(sys, 10.0, 5.0, f.clone(), f)?;
    let o = SystemOptions::default();
    let (u, v, rep, plan) = solve_sublinear(&prob, &o)?;
    println!("plan: k = {}, eps = {:.4e}", plan.k, plan.eps);
    println!("converged {} in {} sweeps, max u = {:.6}, max v = {:.6}", rep.converged, rep.iterations, u.sup_norm(), v.sup_norm());
    let (u2, v2, _) = solve_sublinear_scaled(&prob, &o, &plan, 0.5)?;
    println!("difference from the half-size start: {:.2e}", u.distance(&u2)?.max(v.distance(&v2)?));
    Ok(())
}
