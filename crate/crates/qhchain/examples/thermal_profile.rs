//! Locally-Gibbs thermal energy profile of a disordered chain: sample one
//! mass realization, assemble the Gaussian state, and print the bulk thermal
//! energy next to the equilibrium value 1/β at the local temperature.
//!
//! Run with `cargo run --example thermal_profile`.

use qhchain::chain::{
    build_gibbs_operators, discretize_profiles, sample_masses, ChainSpec,
};
use qhchain::gibbs::{gibbs_state, site_thermal_energy};
use qhchain::spectral::build_mode_basis;

fn main() {
    let spec = ChainSpec::default(); // n = 256, β(y) = 1 + 0.25 cos(πy)
    let n = spec.n;
    let real = sample_masses(&spec, 7).unwrap();
    let prof = discretize_profiles(&spec, n);

    let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
    let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
    let classical = true;
    let state = gibbs_state(&basis, &real, &prof, spec.mbar(), classical);

    println!("site   m_x     β_x     ⟨ẽ_x⟩    1/β_x");
    for x in (n / 4..3 * n / 4).step_by(n / 8) {
        let e = site_thermal_energy(&state, &real, x);
        let (m, b) = (real.masses[x - 1], prof.beta_x[x - 1]);
        println!("{x:4}  {m:.4}  {b:.4}  {e:.4}  {:.4}", 1.0 / b);
    }
}
