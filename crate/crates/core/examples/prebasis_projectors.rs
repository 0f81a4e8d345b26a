//! Projectors onto the spans of every subset of a pre-basis, and the
//! density matrices built from their increments.
//!
//! Run with `cargo run --example prebasis_projectors`.

use randproj::lattice::IndexSet;
use randproj::prebasis::{GenericityMode, PreBasis, ProjectorFamily};
use randproj::random_sets::ProbabilityVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = PreBasis::from_real(
        &[&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0], &[1.0, 1.0, 2.0]],
        GenericityMode::Permissive,
    )?;
    for w in basis.warnings() {
        println!("warning: {w}");
    }
    let family = ProjectorFamily::from_prebasis(&basis);

    for set in [IndexSet::singleton(0), IndexSet::from_indices([0, 1]), IndexSet::from_indices([1, 2, 3])] {
        println!("\nΠ({set}), rank {}:\n{}", basis.rank(set), family.get(set));
    }
    println!("projector laws: {:?}", family.laws());

    let table = family.dressed_operators();
    for (i, sigma) in table.sigma.iter().enumerate() {
        println!("\nσ({}) =\n{sigma}", i + 1);
    }

    let p = ProbabilityVector::uniform(family.n(), 0.5)?;
    let average = family.random_projector_average(&p)?;
    println!("\naverage random projector at p = 1/2:\n{}", average.value());
    Ok(())
}
