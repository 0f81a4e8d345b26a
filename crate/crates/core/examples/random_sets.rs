//! Exact distribution of a random set of indices and the average union size.
//!
//! Run with `cargo run --example random_sets`.

use randproj::cardinality::SetFamily;
use randproj::random_sets::{ProbabilityVector, RandomSetDistribution};
use randproj::scalar::{rational, rational_to_f64};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]])?;
    let p = ProbabilityVector::new(vec![rational(1, 2), rational(1, 3), rational(1, 4), rational(1, 5)])?;
    let dist = RandomSetDistribution::new(p);

    println!("{:<10} {:>8} {:>8} {:>8}", "A", "𝔭(A)", "P(A)", "P(¬A)");
    for (set, exact) in dist.exact().iter() {
        println!("{:<10} {:>8} {:>8} {:>8}", set.to_string(), exact, dist.containing()[set], dist.missing()[set]);
    }

    let index = dist.average_index_cardinality();
    let union = dist.average_union_cardinality(&family)?;
    println!("\naverage number of indices drawn: {index} ≈ {:.4}", rational_to_f64(&index));
    println!("average union cardinality:       {} ≈ {:.4}", union.value(), rational_to_f64(union.value()));

    let gradient: Vec<String> = dist.gradient(&family)?.iter().map(ToString::to_string).collect();
    println!("gradient with respect to p:      [{}]", gradient.join(", "));
    Ok(())
}
