//! Seeded sampling of random sets and random projectors against the exact
//! averages.
//!
//! Run with `cargo run --release --example monte_carlo [seed] [samples]`.

use randproj::cardinality::SetFamily;
use randproj::prebasis::{PreBasis, ProjectorFamily};
use randproj::random_sets::ProbabilityVector;
use randproj::sampling::{sample_projectors, sample_sets, SampleReport, SamplerConfig, SIGMA_BAND};

fn summarize(title: &str, report: &SampleReport) {
    println!("{title}: {} draws, seed {}, {}", report.samples, report.seed, report.algorithm);
    for c in &report.comparisons {
        let sigmas = c.sigmas.map_or("inf".to_string(), |s| format!("{s:.2}"));
        println!("  {:<24} {:>10.6} ± {:<9.2e} exact {:>10.6}  {sigmas}σ", c.label, c.empirical, c.std_error, c.analytic);
    }
    println!("  all within {SIGMA_BAND}σ: {}\n", report.within_band);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let samples = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200_000);
    let config = SamplerConfig { seed, samples };

    let family = SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]])?;
    let p = ProbabilityVector::new(vec![0.5, 1.0 / 3.0, 0.25, 0.2])?;
    summarize("random sets", &sample_sets(&p, Some(&family), config)?);

    let projectors = ProjectorFamily::from_prebasis(&PreBasis::standard(2));
    let q = ProbabilityVector::new(vec![0.3, 0.9])?;
    summarize("random projectors", &sample_projectors(&projectors, &q, config)?);
    Ok(())
}
