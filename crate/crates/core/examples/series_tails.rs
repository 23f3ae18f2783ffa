//! The four control series with certified tail bounds, checked against a
//! long brute-force sum.

use modstab::control::{series, series_partial, ControlFunction, SeriesKind};
use modstab::DyadicVector;

fn main() -> modstab::Result<()> {
    let x: DyadicVector = "3/2^1".parse()?;
    let cases = [
        (ControlFunction::power(1.0, 0.5)?, SeriesKind::PhiUp),
        (ControlFunction::power(1.0, 0.5)?, SeriesKind::PsiUp),
        (
            ControlFunction::power(1.0, 3.0)?,
            SeriesKind::PhiDown { tau: 2.0 },
        ),
        (
            ControlFunction::power(1.0, 3.0)?,
            SeriesKind::PsiDown { tau: 2.0 },
        ),
    ];
    for (cf, kind) in cases {
        let s = series(kind, &cf, &x, &x, 1e-12)?;
        let brute = series_partial(kind, &cf, &x, &x, 0, 10_000)?;
        println!(
            "{kind:?}: value {:.12} + tail ≤ {:.1e} after {} terms (ratio {:?}); brute force {:.12}",
            s.value, s.tail_bound, s.terms_used, s.ratio, brute
        );
    }

    let divergent = series(
        SeriesKind::PhiUp,
        &ControlFunction::power(1.0, 1.0)?,
        &x,
        &x,
        1e-12,
    )?;
    println!(
        "r = 1 scaling up: converged {} ({:?})",
        divergent.converged, divergent.diagnostic
    );
    Ok(())
}
