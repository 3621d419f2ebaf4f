//! Second eigenvalue, isolation of the first, and solvability between them.

use lespectra::dirichlet::{isolation_scan, solvability_scan, IsolationOptions, LaneEmden, SystemOptions};
use lespectra::eigen::{second_eigen_linear_symmetric, EigenOptions, ExponentPair};
use lespectra::geometry::{Field, Grid};
use lespectra::operators::{LinearOp, OperatorSpec, Sign};

fn main() -> lespectra::Result<()> {
    let g = Grid::interval(0.0, 1.0, 99)?;
    let w = Field::constant(&g, 1.0);
    let sys = LaneEmden::new(
        OperatorSpec::laplacian(),
        OperatorSpec::laplacian(),
        w.clone(),
        w.clone(),
        ExponentPair::new(1.0, 1.0)?,
    )?;
    let l1 = sys.eigen(Sign::Plus, &EigenOptions::default())?.lambda1;
    let l2 = second_eigen_linear_symmetric(&LinearOp::laplacian(), &w, &g)?;
    println!("lambda1 = {l1:.6}, lambda2 = {l2:.6}");
    let mid = 0.5 * (l1 + l2);
    let iso = isolation_scan(&sys, &[l1, 0.5 * (l1 + mid), mid], &IsolationOptions::default())?;
    for r in &iso.table {
        println!("isolation: lambda = {:.4}  residual {:.3e}", r.param, r.value);
    }
    let f = Field::constant(&g, -1.0);
    let solv = solvability_scan(&sys, &[1.2 * l1, mid, 0.9 * l2], &f, &f, &SystemOptions::default())?;
    for r in &solv.table {
        println!("solvability: lambda = {:.4}  converged {}", r.param, r.converged);
    }
    Ok(())
}
