//! Anti-maximum principle: sign of solutions just above the first
//! half-eigenvalue for negative data.

use lespectra::dirichlet::{amp_scan, fucik_system, SystemOptions};
use lespectra::eigen::{EigenOptions, ExponentPair};
use lespectra::geometry::{Field, Grid};

fn main() -> lespectra::Result<()> {
    let g = Grid::interval(0.0, 1.0, 99)?;
    let sys = fucik_system(&g, 2.0, ExponentPair::new(2.0, 0.5)?)?;
    let f = Field::constant(&g, -1.0);
    let deltas = [1e-3, 1e-2, 0.1, 1.0, 4.0];
    let rep = amp_scan(&sys, &f, &f, &deltas, &EigenOptions::default(), &SystemOptions::default())?;
    println!("verdict {:?}, threshold {:?}", rep.verdict, rep.threshold);
    for (k, v) in &rep.parameters {
        println!("{k} = {v:.6}");
    }
    for row in &rep.table {
        println!("{} = {:.4}  {} = {:.4e}  {:?}", rep.param_name, row.param, rep.value_name, row.value, row.verdict);
    }
    Ok(())
}
