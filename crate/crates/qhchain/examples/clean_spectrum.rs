//! Spectrum of the clean (equal-mass) chain against the closed form
//! ω_k² = 4 sin²(kπ/2n).
//!
//! Run with `cargo run --example clean_spectrum`.

use qhchain::chain::{build_dynamics_operators, sample_masses, ChainSpec, MassLaw, Profile};
use qhchain::spectral::eigh_tridiagonal;

fn main() {
    let n = 64;
    let mut spec = ChainSpec::default();
    spec.n = n;
    spec.mass_law = MassLaw::uniform(1.0, 1.0).unwrap();
    spec.beta_profile = Profile::Constant(1.0);

    let real = sample_masses(&spec, 0).unwrap();
    let (a_p, _) = build_dynamics_operators(&real);
    let (vals, _) = eigh_tridiagonal(&a_p).unwrap();

    let mut worst = 0.0f64;
    for (k, &lambda) in vals.iter().enumerate() {
        let exact = 4.0 * (k as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin().powi(2);
        worst = worst.max((lambda - exact).abs());
    }
    println!("n = {n}: max |λ_k − 4 sin²(kπ/2n)| = {worst:.3e}");
    assert!(worst < 1e-10);
}
