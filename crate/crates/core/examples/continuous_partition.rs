//! Spread the union cardinality along monotone curves from p = 0 to p = 1.
//!
//! Run with `cargo run --example continuous_partition`.

use randproj::cardinality::SetFamily;
use randproj::curve::MonotoneCurve;
use randproj::partition::{DiagonalDensity, PartitionDensity};
use randproj::quadrature::Quadrature;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]])?;

    let diagonal = DiagonalDensity::new(&family);
    println!("diagonal density: M(t) = {diagonal}");
    println!("exact integral:   {}", diagonal.integral());
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  M({t:.2}) = {:.6}", diagonal.eval(t));
    }

    let quadrature = Quadrature::default();
    let curves = [
        ("power (1, 2, 3, 1/2)", MonotoneCurve::power(vec![1.0, 2.0, 3.0, 0.5])?),
        (
            "polyline through (0.8, 0.1, 0.5, 0.2)",
            MonotoneCurve::polyline(vec![0.0, 0.5, 1.0], vec![vec![0.0; 4], vec![0.8, 0.1, 0.5, 0.2], vec![1.0; 4]])?,
        ),
    ];
    for (label, curve) in &curves {
        let density = PartitionDensity::new(&family, curve)?;
        println!("\n{label}: ∫ M(t|C) dt = {:.12}", density.integrate(&quadrature)?);
        for t in [0.1, 0.5, 0.9] {
            println!("  M({t:.1}|C) = {:.6}", density.eval(t)?);
        }
    }
    Ok(())
}
