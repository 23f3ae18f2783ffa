//! Scaling down under Δ₂ with a power control, compared with the closed form
//! θτ²‖x‖ʳ‖z‖ʳ/(2^{r+1} − τ²).

use modstab::control::closed_form_power_bound;
use modstab::direct::{solve_point, BranchKind, SolverConfig};
use modstab::perturbation::{generate_perturbation, PerturbationDescriptor};
use modstab::{ControlFunction, DyadicVector, EquationForm, MapEvaluator, ModularSpec, Regime};

fn main() -> modstab::Result<()> {
    let spec = ModularSpec::power(1.0, 1)?;
    let tau = spec.delta2_tau.expect("power modulars carry τ");
    let (theta, r) = (1.0, 3.0);
    let cf = ControlFunction::power(theta, r)?;
    let form = EquationForm::PaperAQ;
    let desc = PerturbationDescriptor::for_hypothesis(31, &cf, &spec, form)?;
    let phi = MapEvaluator::new(
        1,
        1,
        None,
        Some(generate_perturbation(&desc, &cf, &spec, form)?),
    )?;

    let grid: Vec<(DyadicVector, DyadicVector)> = ["1 ; 1", "3/2^1 ; -1/2^1", "-2 ; 5/2^2"]
        .iter()
        .map(|row| {
            let (x, z) = row.split_once(';').unwrap();
            Ok((x.trim().parse()?, z.trim().parse()?))
        })
        .collect::<modstab::Result<_>>()?;
    let config = SolverConfig::new(BranchKind::ScaleDown, grid.clone());
    for (x, z) in &grid {
        let p = solve_point(&phi, &spec, &cf, &config, x, z)?;
        let closed = closed_form_power_bound(
            Regime::ScaleDown { tau },
            theta,
            r,
            x.euclidean_norm()?,
            z.euclidean_norm()?,
        )?;
        println!(
            "({x}; {z}): measured {:.3e} ≤ bound {:.6} (closed form {:.6}, term {:?}) pass {}",
            p.measured, p.bound, closed, p.branch_used_for_bound, p.pass
        );
    }
    Ok(())
}
