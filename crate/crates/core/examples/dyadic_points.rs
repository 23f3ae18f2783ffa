//! Exact dyadic points: parsing, canonical form and power-of-two scaling.

use modstab::DyadicVector;

fn main() -> modstab::Result<()> {
    let v: DyadicVector = "6/2^2, -3/2^1".parse()?;
    println!(
        "{v}  numerators {:?} exponent {}",
        v.numerators(),
        v.exponent()
    );

    for k in [-3, -1, 0, 1, 5] {
        let s = v.scale_pow2(k)?;
        println!("2^{k:>2} · v = {s:<16} ≈ {:?}", s.to_real()?);
    }

    let w: DyadicVector = "1/2^3, 1/2^3".parse()?;
    println!("v + w = {}", v.add(&w)?);
    println!("‖v‖ = {}", v.euclidean_norm()?);

    match v.scale_pow2(2000) {
        Ok(_) => println!("unexpected"),
        Err(e) => println!("scaling by 2^2000: {e}"),
    }
    Ok(())
}
