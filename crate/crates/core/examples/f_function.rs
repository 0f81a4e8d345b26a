//! The function F(x1, x2) of a density matrix: exact coefficients, moments,
//! marginals and a CSV grid.
//!
//! Run with `cargo run --example f_function [output.csv]`.

use std::fs::File;
use std::io::BufWriter;

use num_traits::Zero;
use randproj::lattice::IndexSet;
use randproj::operator::Operator;
use randproj::prebasis::ProjectorFamily;
use randproj::resolution::{FFunction, GridSpec, KernelMode, ResolutionKernel};
use randproj::scalar::{rational, ExactComplex, Rational};

fn real(rows: [[i64; 3]; 3], den: i64) -> Operator<ExactComplex> {
    Operator::from_fn(3, |r, c| ExactComplex::new(rational(rows[r][c], den), Rational::zero()))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let projectors = [
        (IndexSet::from_indices([0]), real([[1, 1, 0], [1, 1, 0], [0, 0, 0]], 2)),
        (IndexSet::from_indices([1]), real([[1, 0, 1], [0, 0, 0], [1, 0, 1]], 2)),
        (IndexSet::from_indices([2]), real([[0, 0, 0], [0, 1, 1], [0, 1, 1]], 2)),
        (IndexSet::from_indices([0, 1]), real([[2, 1, 1], [1, 2, -1], [1, -1, 2]], 3)),
        (IndexSet::from_indices([0, 2]), real([[2, 1, -1], [1, 2, 1], [-1, 1, 2]], 3)),
        (IndexSet::from_indices([1, 2]), real([[2, -1, 1], [-1, 2, 1], [1, 1, 2]], 3)),
    ];
    let mut entries: std::collections::BTreeMap<_, _> = projectors.into_iter().collect();
    entries.insert(IndexSet::EMPTY, Operator::zeros(3));
    entries.insert(IndexSet::full(3), Operator::identity(3));
    let family = ProjectorFamily::explicit(3, 3, entries)?;
    let kernel = ResolutionKernel::from_family(&family, KernelMode::Strict)?;

    let one = ExactComplex::new(Rational::from_integer(1.into()), Rational::zero());
    let zero = ExactComplex::new(Rational::zero(), Rational::zero());
    let f = FFunction::pure(&kernel, &[one, zero.clone(), zero])?;

    println!("numerator coefficients A_ij of x1^i x2^j:");
    for row in f.numerator_coefficients() {
        let cells: Vec<String> = row.iter().map(|z| format!("{:>8}", z.re)).collect();
        println!("  {}", cells.join(" "));
    }
    for (mu, nu) in [(0, 0), (1, 0), (0, 1)] {
        match f.moment(mu, nu) {
            Ok(m) => println!("moment ({mu}, {nu}) = {}", m.re),
            Err(e) => println!("moment ({mu}, {nu}): {e}"),
        }
    }
    for alpha in [0, 1, 4] {
        println!("marginal at {alpha} = {}", f.marginal(&Rational::from_integer(alpha.into())).re);
    }

    if let Some(path) = std::env::args().nth(1) {
        let grid = GridSpec::default();
        grid.write_f_grid(&f.to_complex(), &mut BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
