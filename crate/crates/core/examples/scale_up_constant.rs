//! Scaling up with a constant control: the bound is ε²/3 everywhere and the
//! envelope-generated map stays within it.

use modstab::config::random_grid;
use modstab::direct::{solve_grid, BranchKind, SolverConfig};
use modstab::perturbation::{generate_perturbation, PerturbationDescriptor};
use modstab::{ControlFunction, EquationForm, MapEvaluator, ModularSpec};

fn main() -> modstab::Result<()> {
    let spec = ModularSpec::power(1.0, 1)?;
    let cf = ControlFunction::constant(0.3)?;
    let form = EquationForm::PaperAQ;
    let desc = PerturbationDescriptor::for_hypothesis(42, &cf, &spec, form)?;
    println!("envelope {:?}", desc.envelope);

    let p = generate_perturbation(&desc, &cf, &spec, form)?;
    let phi = MapEvaluator::new(1, 1, None, Some(p))?;
    let config = SolverConfig::new(BranchKind::ScaleUp, random_grid(7, 100, 1, 16, (-4, 4)));
    let report = solve_grid(&phi, &spec, &cf, &config, form)?;

    let a = &report.aggregate;
    println!(
        "{}/{} points pass, worst slack {:.4}",
        a.pass_count, a.points, a.worst_slack
    );
    if let Some(p) = report.points[0].result() {
        println!(
            "first point ({}; {}): measured {:.3e}, bound {}, n = {}",
            p.x, p.z, p.measured, p.bound, p.n_used
        );
    }
    Ok(())
}
