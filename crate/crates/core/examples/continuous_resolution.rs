//! Continuous resolutions of the identity from an explicit projector family.
//!
//! Run with `cargo run --example continuous_resolution`.

use randproj::curve::MonotoneCurve;
use randproj::prebasis::{GenericityMode, PreBasis, ProjectorFamily};
use randproj::quadrature::Quadrature;
use randproj::resolution::{tau_curve_integral, KernelMode, ResolutionKernel, StateExpansion};
use randproj::scalar::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = PreBasis::from_real(
        &[&[1.0, 0.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, -1.0, 2.0]],
        GenericityMode::Strict,
    )?;
    let family = ProjectorFamily::from_prebasis(&basis);
    let kernel = ResolutionKernel::from_family(&family, KernelMode::Strict)?;

    for (a, r) in kernel.level_operators().iter().enumerate() {
        println!("R_{} =\n{r}", a + 1);
    }
    println!("checks: {:?}", kernel.checks());

    let quadrature = Quadrature::default();
    println!("\n∫ τ(t|D) dt =\n{}", kernel.tau_integral_exact());
    println!("∫ T(x) dx =\n{}", kernel.t_integral(&quadrature)?);
    let curve = MonotoneCurve::power(vec![1.0, 2.0, 0.5, 3.0])?;
    println!("∫ τ(t|C) dt along a power curve =\n{}", tau_curve_integral(&family, &curve, &quadrature)?);

    let state = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
    let expansion = StateExpansion::new(&kernel, state)?;
    println!("\nweight of |s(x)⟩:");
    for x in [0.0, 0.5, 2.0, 10.0] {
        println!("  x = {x:>4}: {:.6}", expansion.weight(x)?);
    }
    let rebuilt: Vec<String> = expansion.integral(&quadrature)?.iter().map(|z| format!("{z:.10}")).collect();
    println!("∫ |s(x)⟩ dx = [{}]", rebuilt.join(", "));
    Ok(())
}
