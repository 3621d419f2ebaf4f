//! Critical interval length below which the maximum principle holds for the
//! Laplacian pair at fixed parameters.

use std::f64::consts::PI;

use lespectra::dirichlet::{small_domain_threshold, SmallDomainSetup};
use lespectra::eigen::ExponentPair;
use lespectra::operators::{Coef, OperatorSpec};

fn main() -> lespectra::Result<()> {
    let l = 2.0 * PI * PI;
    let mut setup = SmallDomainSetup::new(
        OperatorSpec::laplacian(),
        OperatorSpec::laplacian(),
        Coef::Const(1.0),
        Coef::Const(1.0),
        ExponentPair::new(1.0, 1.0)?,
        l,
        l,
    );
    setup.n = 79;
    setup.battery = 8;
    setup.bisections = 16;
    let rep = small_domain_threshold(&setup)?;
    println!("L* = {:.5} (exact {:.5})", rep.threshold.unwrap_or(f64::NAN), 0.5f64.sqrt());
    for (k, v) in &rep.parameters {
        println!("{k} = {v:.5}");
    }
    Ok(())
}
