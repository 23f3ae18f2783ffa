//! Tensor maps solve the symmetrized form exactly, and every approximant
//! reproduces them bit for bit.

use modstab::direct::{approximant, BranchKind, Slot};
use modstab::equation::{check_additive_first, check_quadratic_second, residual};
use modstab::{DyadicVector, EquationForm, MapEvaluator, TensorMap, TwoSlotMap};

fn main() -> modstab::Result<()> {
    let tensor = TensorMap::parse("0 0 0 1.5\n0 1 0 1 -0.25\n", 2, 1)?;
    let phi = MapEvaluator::new(2, 1, Some(tensor), None)?;
    let x: DyadicVector = "3, -1/2^2".parse()?;
    let z: DyadicVector = "5/2^1, 7".parse()?;
    let w: DyadicVector = "-1, 1/2^3".parse()?;

    let r = residual(EquationForm::SymmetrizedAQ, &phi, &x, &w, &z, &w)?;
    let base = residual(EquationForm::PaperAQ, &phi, &x, &w, &z, &w)?;
    println!(
        "symmetrized residual {:?}, paper_aq residual {:?}",
        r.coords(),
        base.coords()
    );

    let exact = phi.eval(&x, &z)?;
    let identical = (1..=20).all(|n| {
        [Slot::First, Slot::Second].iter().all(|&slot| {
            approximant(BranchKind::ScaleUp, slot, &phi, &x, &z, n)
                .ok()
                .as_ref()
                == Some(&exact)
        })
    });
    println!(
        "φ(x, z) = {:?}; approximants identical for n = 1..20: {identical}",
        exact.coords()
    );

    let add = check_additive_first(&phi, &[(x.clone(), w.clone(), z.clone())], 1e-12)?;
    let quad = check_quadratic_second(&phi, &[(x.clone(), z.clone(), w.clone())], 1e-12)?;
    println!(
        "additive in x: {}, quadratic in z: {}",
        add.passed, quad.passed
    );
    Ok(())
}
