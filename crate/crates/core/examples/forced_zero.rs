//! With a zero boundary the `paper_aq` form admits only φ ≡ 0 as an exact
//! solution; the certificate shows why x·z² is not one.

use modstab::equation::triviality_certificate;
use modstab::{DyadicVector, MapEvaluator, TensorMap};

fn main() -> modstab::Result<()> {
    let probes: Vec<(DyadicVector, DyadicVector)> = [("1", "1"), ("3/2^1", "-2"), ("-5", "1/2^2")]
        .iter()
        .map(|(x, z)| Ok((x.parse()?, z.parse()?)))
        .collect::<modstab::Result<_>>()?;

    let xz2 = MapEvaluator::new(1, 1, Some(TensorMap::scalar(1.0)?), None)?;
    let cert = triviality_certificate(&xz2, &probes, 1e-12)?;
    println!("x·z²: {}", serde_json::to_string_pretty(&cert)?);

    let zero = triviality_certificate(&MapEvaluator::zero(1, 1), &probes, 1e-12)?;
    println!(
        "zero map: solution {}, consistent {}",
        zero.solution_at_probes, zero.forced_zero_consistent
    );
    Ok(())
}
