//! A small hydrodynamic-limit sweep: weighted empirical fields against the
//! Euler solution over a short n ladder. Scaled down from the full
//! experiment so it finishes in seconds.
//!
//! Run with `cargo run --release --example hydro_small`.

use qhchain::experiments::{hydrodynamic_convergence, ExperimentConfig, TestFunction};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.n_values = vec![64, 128, 256];
    cfg.realizations = 4;
    cfg.macro_times = vec![0.25];
    cfg.test_functions = vec![TestFunction::parse("sin1").unwrap()];

    let table = hydrodynamic_convergence(&cfg).unwrap();
    println!("obs   n    empirical   macro       |error|");
    for row in &table.rows {
        println!(
            "{:3} {:4}  {:+.6}  {:+.6}  {:.3e}",
            row.observable, row.n, row.empirical, row.macro_value, row.abs_error
        );
    }
}
