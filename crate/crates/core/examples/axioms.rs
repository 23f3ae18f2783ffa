//! Modular axioms, Δ₂ constants and the non-convex p = 1/2 candidate.

use modstab::modular::{axiom_samples, check_axioms, delta2_tau, ModularSpec, YoungTable};

fn main() -> modstab::Result<()> {
    for p in [0.5, 1.0, 2.0, 3.0] {
        let spec = ModularSpec::power(p, 2)?;
        let report = check_axioms(&spec, &axiom_samples(p.to_bits(), 1000, 2))?;
        let tau = delta2_tau(&spec, None)?.tau;
        println!(
            "p = {p}: convex flag {}, τ = {tau}, axioms consistent with flags: {}",
            spec.convex,
            report.consistent_with(&spec)
        );
        if let Some(w) = &report.convexity.witness {
            println!(
                "  convexity witness: λ = {:?}, {:.4} > {:.4}",
                w.lambda, w.lhs, w.rhs
            );
        }
    }

    let young = YoungTable::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0), (4.0, 9.0)])?;
    let spec = ModularSpec::orlicz(young, 1)?;
    let samples: Vec<_> = axiom_samples(9, 2000, 1)
        .into_iter()
        .map(|(u, _, _)| u)
        .collect();
    let tau = delta2_tau(&spec, Some(&samples))?;
    println!(
        "Orlicz: sampled τ = {} over {:?} samples",
        tau.tau, tau.samples
    );
    Ok(())
}
