//! Sampling the residual hypothesis: an envelope map passes, a single spike
//! is caught with its witness.

use modstab::equation::FnMap;
use modstab::hypothesis::{random_tuples, verify_hypothesis};
use modstab::perturbation::{generate_perturbation, PerturbationDescriptor};
use modstab::{
    ControlFunction, DyadicVector, EquationForm, MapEvaluator, ModularSpec, ValueVector,
};

fn main() -> modstab::Result<()> {
    let spec = ModularSpec::power(1.0, 1)?;
    let cf = ControlFunction::constant(0.3)?;
    let form = EquationForm::PaperAQ;
    let tuples = random_tuples(1, 10_000, 1);

    let desc = PerturbationDescriptor::for_hypothesis(42, &cf, &spec, form)?;
    let phi = MapEvaluator::new(
        1,
        1,
        None,
        Some(generate_perturbation(&desc, &cf, &spec, form)?),
    )?;
    let ok = verify_hypothesis(form, &phi, &cf, &spec, &tuples)?;
    println!(
        "envelope map: pass rate {}, worst ratio {:.3}",
        ok.pass_rate, ok.worst_ratio
    );

    let spike: DyadicVector = "1".parse()?;
    let at = spike.clone();
    let spiky = FnMap::new(1, 1, move |x: &DyadicVector, z: &DyadicVector| {
        Ok(ValueVector::new(vec![if *x == at && *z == at {
            0.09
        } else {
            0.0
        }]))
    });
    let mut probes = tuples[..100].to_vec();
    probes.push((spike.clone(), spike.clone(), spike.clone(), spike));
    let bad = verify_hypothesis(form, &spiky, &cf, &spec, &probes)?;
    let w = &bad.witnesses[0];
    println!(
        "spike: pass {}, witness #{} ({}, {}, {}, {}) ρ = {} > {}",
        bad.pass(),
        w.index,
        w.x,
        w.y,
        w.z,
        w.w,
        w.rho_residual,
        w.control
    );
    Ok(())
}
