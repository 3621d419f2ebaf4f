//! Maximum-principle verdicts across the parameter plane compared with the
//! region predicted by the two spectral curves.

use lespectra::curves::{classify, CurveLabel, SpectralCurve};
use lespectra::dirichlet::{battery_data, fucik_system, min_principle_verdict, mp_verdict, MpContext};
use lespectra::eigen::{EigenOptions, ExponentPair};
use lespectra::geometry::Grid;

fn main() -> lespectra::Result<()> {
    let g = Grid::interval(0.0, 1.0, 79)?;
    let exps = ExponentPair::new(2.0, 0.5)?;
    let ctx = MpContext::new(fucik_system(&g, 2.0, exps)?, battery_data(&g, 8, 1.0, 1), EigenOptions::default())?;
    let mirror = ctx.mirrored()?;
    let (lp, lm) = (ctx.plus.lambda1, mirror.plus.lambda1);
    let plus = SpectralCurve::new(lp, exps.p, CurveLabel::Plus)?;
    let minus = SpectralCurve::new(lm, exps.p, CurveLabel::Minus)?;
    println!("lambda1+ = {lp:.4}, lambda1- = {lm:.4}");
    println!("{:>8} {:>8} {:>6} {:>6} {:>6} {:>6}", "lambda", "mu", "MP", "pred", "mP", "pred");
    for a in [0.6, 1.1, 1.6] {
        for b in [0.6, 1.1, 1.6] {
            let (l, m) = (a * lp, b * lp);
            let region = classify(l, m, &plus, &minus, None)?;
            let show = |v: Option<bool>| v.map_or("-".to_string(), |b| b.to_string());
            let mp = show(mp_verdict(&ctx, l, m)?.verdict);
            let min = show(min_principle_verdict(&mirror, l, m)?.verdict);
            println!(
                "{l:>8.3} {m:>8.3} {:>6} {:>6} {:>6} {:>6}",
                mp,
                region.predicts_mp(),
                min,
                region.predicts_min_p()
            );
        }
    }
    Ok(())
}
