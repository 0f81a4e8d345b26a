//! Split the cardinality of a union of overlapping sets among its members.
//!
//! Run with `cargo run --example shapley_cardinality`.

use num_traits::Zero;
use randproj::cardinality::SetFamily;
use randproj::lattice::IndexSet;
use randproj::partition::shapley_via_integral;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]])?;
    let n = family.n();
    let full = IndexSet::full(n);

    println!("|S1 ∪ .. ∪ S{n}| = {}", family.union_cardinality(full)?);
    println!("\noverlap table 𝔡(A) (nonzero entries):");
    for (set, d) in family.overlap_table().iter().filter(|(_, d)| !d.is_zero()) {
        println!("  {set:<10} {d}");
    }

    println!("\nShapley cardinality per set (three independent routes):");
    for i in 0..n {
        let direct = family.shapley_direct(full, i)?;
        let permutation = family.shapley_permutation(i)?;
        let integral = shapley_via_integral(&family, i)?;
        println!("  S{} -> {direct}  (permutation {permutation}, integral {integral})", i + 1);
    }

    let report = family.increment_totals();
    println!("\nincrements λ_a(i), rows a = 1..{n}:");
    for (a, row) in report.lambda.iter().enumerate() {
        println!("  a={} {row:?}", a + 1);
    }
    let r: Vec<String> = report.increment_averages.iter().map(ToString::to_string).collect();
    println!("r_a = {}", r.join(", "));
    Ok(())
}
