//! Principal eigenvalue of the Laplacian pair on (0,1) under grid refinement.

use std::f64::consts::PI;

use lespectra::dirichlet::LaneEmden;
use lespectra::eigen::{EigenOptions, ExponentPair};
use lespectra::geometry::{Field, Grid};
use lespectra::operators::{OperatorSpec, Sign};

fn main() -> lespectra::Result<()> {
    let exact = PI * PI;
    let mut prev: Option<f64> = None;
    for n in [24, 49, 99, 199] {
        let g = Grid::interval(0.0, 1.0, n)?;
        let w = Field::constant(&g, 1.0);
        let sys = LaneEmden::new(
            OperatorSpec::laplacian(),
            OperatorSpec::laplacian(),
            w.clone(),
            w,
            ExponentPair::new(1.0, 1.0)?,
        )?;
        let e = sys.eigen(Sign::Plus, &EigenOptions::default())?;
        let err = (e.lambda1 - exact).abs();
        let ratio = prev.map_or(String::new(), |p| format!("  ratio {:.3}", p / err));
        println!("n = {n:>3}  lambda1 = {:.10}  error {err:.3e}{ratio}", e.lambda1);
        prev = Some(err);
    }
    Ok(())
}
