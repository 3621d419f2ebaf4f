//! Half-eigenvalues of Pucci operators in one and two dimensions.

use lespectra::eigen::{scalar_principal_eigen, EigenOptions};
use lespectra::geometry::{Field, Grid};
use lespectra::operators::{OperatorSpec, Sign};

fn main() -> lespectra::Result<()> {
    let o = EigenOptions::default();
    let line = Grid::interval(0.0, 1.0, 199)?;
    let square = Grid::rectangle((0.0, 1.0), (0.0, 1.0), (39, 39))?;
    for (name, g) in [("interval", &line), ("square", &square)] {
        let w = Field::constant(g, 1.0);
        for (label, spec) in [
            ("M+(1,2)", OperatorSpec::pucci_plus(1.0, 2.0)),
            ("M-(1,2)", OperatorSpec::pucci_minus(1.0, 2.0)),
        ] {
            let plus = scalar_principal_eigen(&spec, g, &w, Sign::Plus, &o)?.lambda1;
            let minus = scalar_principal_eigen(&spec, g, &w, Sign::Minus, &o)?.lambda1;
            println!("{name:<8} {label}  lambda1+ = {plus:.6}  lambda1- = {minus:.6}");
        }
    }
    Ok(())
}
