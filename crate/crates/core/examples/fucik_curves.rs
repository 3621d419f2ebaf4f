//! Half-eigenvalues of the max/min pair against the closed form, and samples
//! of both spectral curves.

use lespectra::cli::verify_fucik;
use lespectra::curves::{sample_curve, write_curve_csv, CurveLabel, SpectralCurve};
use lespectra::eigen::{EigenOptions, ExponentPair};
use lespectra::geometry::Grid;
use lespectra::operators::LinearOp;

fn main() -> lespectra::Result<()> {
    let g = Grid::interval(0.0, 1.0, 199)?;
    let exps = ExponentPair::new(2.0, 0.5)?;
    for kappa in [2.0, 4.0, 9.0] {
        let r = verify_fucik(kappa, exps, &LinearOp::laplacian(), &g, &EigenOptions::default())?;
        println!(
            "kappa = {kappa}: lambda1+ = {:.6} (ratio {:.6}, closed form {:.6}), lambda1- = {:.6} (ratio {:.6}, closed form {:.6}), {:?}",
            r.lambda1_plus, r.ratio_plus, r.predicted_plus, r.lambda1_minus, r.ratio_minus, r.predicted_minus, r.ordering
        );
        if kappa == 2.0 {
            let curves = [
                (r.lambda1_plus, CurveLabel::Plus),
                (r.lambda1_minus, CurveLabel::Minus),
            ]
            .into_iter()
            .map(|(a, l)| {
                let c = SpectralCurve::new(a, exps.p, l)?;
                let pts = sample_curve(&c, 2.0, 60.0, 5)?;
                Ok((c, pts))
            })
            .collect::<lespectra::Result<Vec<_>>>()?;
            write_curve_csv(std::io::stdout().lock(), &curves)?;
        }
    }
    Ok(())
}
