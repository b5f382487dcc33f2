//! Command-line driver: one subcommand per experiment, flat key-value
//! configuration, CSV + JSON-manifest outputs.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numerical
//! failure.

use clap::{Parser, Subcommand};
use qhchain::chain::{
    build_dynamics_operators, build_gibbs_operators, discretize_profiles, sample_masses,
};
use qhchain::config::{parse_kv, KvFile};
use qhchain::dynamics::{
    conserved_quantities, evolve, from_mode_coordinates, thermal_energy_sites, EvolutionPlan,
};
use qhchain::error::Error;
use qhchain::experiments::{
    covariance_decay_experiment, f_mu_table, hydrodynamic_convergence, initial_mode_coordinates,
    slln_experiment, ExperimentConfig, TestFunction,
};
use qhchain::gibbs::{gibbs_state, site_thermal_energy};
use qhchain::localization::localization_report;
use qhchain::report::{fmt, write_csv, RunManifest};
use qhchain::spectral::build_mode_basis;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "qhchain", version, about = "disordered quantum harmonic chain laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// flat key-value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// base seed (overrides the config file)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// worker threads (default: all cores, or QHCHAIN_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// force classical mode occupation (weight 1 for every frequency)
    #[arg(long, global = true)]
    classical: bool,

    /// exponent s of the time scale n^s·t (1 = hyperbolic)
    #[arg(long, global = true)]
    time_scale_exponent: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// eigenfrequencies and localization diagnostics of A_p⁰
    Spectrum,
    /// t = 0 locally Gibbs state dump (means + site thermal energies)
    Thermal,
    /// full trajectory at the macro times, with conserved-quantity drift
    Evolve,
    /// per-mode localization report over the high-frequency window
    Localize,
    /// disorder covariance of site thermal energies vs distance
    CovDecay,
    /// variance of weighted energy sums across realizations, per n
    Slln,
    /// f^μ(β) table over the β range of the profile
    FMu,
    /// macroscopic Euler solution on a space-time grid
    Euler,
    /// the full hydrodynamic-limit convergence table
    Hydro,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Thermal => "thermal",
            Command::Evolve => "evolve",
            Command::Localize => "localize",
            Command::CovDecay => "cov-decay",
            Command::Slln => "slln",
            Command::FMu => "f-mu",
            Command::Euler => "euler",
            Command::Hydro => "hydro",
        }
    }
}

fn load_config(cli: &Cli) -> Result<(ExperimentConfig, KvFile), Error> {
    let kv = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_kv(&text)?
        }
        None => KvFile::default(),
    };
    let mut cfg = kv.experiment_config()?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if cli.classical {
        cfg.classical = true;
    }
    if let Some(s) = cli.time_scale_exponent {
        cfg.time_scale_exponent = s;
    }
    Ok((cfg, kv))
}

fn run(cli: &Cli) -> Result<Vec<String>, Error> {
    let (cfg, _kv) = load_config(cli)?;
    let out = &cli.out;
    std::fs::create_dir_all(out)?;
    let spec = &cfg.spec;
    let n = spec.n;
    let mut outputs = Vec::new();

    match &cli.command {
        Command::Spectrum => {
            let real = sample_masses(spec, cfg.base_seed)?;
            let (a_p0, _) = build_dynamics_operators(&real);
            let basis = build_mode_basis(&a_p0, &real, None)?;
            let path = out.join("spectrum.csv");
            write_csv(
                &path,
                &["k", "omega"],
                (0..n).map(|k| vec![k.to_string(), fmt(basis.frequencies[k])]),
            )?;
            outputs.push(path.display().to_string());
            let report = localization_report(&basis, &real, cfg.alpha, cfg.eta)?;
            let path = out.join("localization.csv");
            write_csv(
                &path,
                &["k", "omega", "pr", "width", "outside_max", "decay_rate"],
                report.records.iter().map(|r| {
                    vec![
                        r.k.to_string(),
                        fmt(r.omega),
                        fmt(r.participation),
                        r.width.to_string(),
                        fmt(r.outside_max),
                        fmt(r.decay_rate),
                    ]
                }),
            )?;
            outputs.push(path.display().to_string());
        }
        Command::Thermal => {
            let real = sample_masses(spec, cfg.base_seed)?;
            let prof = discretize_profiles(spec, n);
            let (a_pb, _) = build_gibbs_operators(&real, &prof)?;
            let basis = build_mode_basis(&a_pb, &real, Some(&prof))?;
            let state = gibbs_state(&basis, &real, &prof, spec.mbar(), cfg.classical);
            let path = out.join("thermal.csv");
            write_csv(
                &path,
                &["x", "mean_p", "mean_r", "thermal_energy"],
                (1..=n).map(|x| {
                    vec![
                        x.to_string(),
                        fmt(state.mean_p[x - 1]),
                        if x < n { fmt(state.mean_r[x - 1]) } else { fmt(0.0) },
                        fmt(site_thermal_energy(&state, &real, x)),
                    ]
                }),
            )?;
            outputs.push(path.display().to_string());
        }
        Command::Evolve => {
            let real = sample_masses(spec, cfg.base_seed)?;
            let prof = discretize_profiles(spec, n);
            let (a_p0, _) = build_dynamics_operators(&real);
            let basis0 = build_mode_basis(&a_p0, &real, None)?;
            let (a_pb, _) = build_gibbs_operators(&real, &prof)?;
            let basis_b = build_mode_basis(&a_pb, &real, Some(&prof))?;
            let coords0 = initial_mode_coordinates(
                &basis_b,
                &basis0,
                &real,
                &prof,
                spec.mbar(),
                cfg.classical,
            );
            let plan =
                EvolutionPlan::new(basis0, cfg.macro_times.clone(), cfg.time_scale_exponent);
            let mut rows = Vec::new();
            let mut drift_h = 0.0f64;
            let mut drift_i = 0.0f64;
            let mut first = None;
            for &t in &cfg.macro_times {
                let coords = evolve(&coords0, &plan, t);
                let state = from_mode_coordinates(&coords, &plan, &real);
                let therm = thermal_energy_sites(&coords, &plan);
                let (h, i_bar) = conserved_quantities(&state.mean_p, &state.mean_r, &real);
                let (h0, i0) = *first.get_or_insert((h, i_bar));
                drift_h = drift_h.max((h - h0).abs() / h0.abs().max(1e-300));
                drift_i = drift_i.max((i_bar - i0).abs() / i0.abs().max(1e-300));
                for x in 1..=n {
                    let mech = state.mean_p[x - 1] * state.mean_p[x - 1]
                        / (2.0 * real.masses[x - 1])
                        + if x < n {
                            0.5 * state.mean_r[x - 1] * state.mean_r[x - 1]
                        } else {
                            0.0
                        };
                    rows.push(vec![
                        fmt(t),
                        x.to_string(),
                        fmt(state.mean_p[x - 1]),
                        if x < n { fmt(state.mean_r[x - 1]) } else { fmt(0.0) },
                        fmt(therm[x - 1]),
                        fmt(mech),
                    ]);
                }
            }
            let path = out.join("trajectory.csv");
            write_csv(
                &path,
                &["t", "x", "mean_p", "mean_r", "thermal_energy", "mechanical_energy"],
                rows,
            )?;
            outputs.push(path.display().to_string());
            println!("conserved drift: H {drift_h:.3e}, I {drift_i:.3e}");
        }
        Command::Localize => {
            let real = sample_masses(spec, cfg.base_seed)?;
            let (a_p0, _) = build_dynamics_operators(&real);
            let basis = build_mode_basis(&a_p0, &real, None)?;
            let report = localization_report(&basis, &real, cfg.alpha, cfg.eta)?;
            let path = out.join("localization.csv");
            write_csv(
                &path,
                &["k", "omega", "pr", "width", "outside_max", "decay_rate"],
                report.records.iter().map(|r| {
                    vec![
                        r.k.to_string(),
                        fmt(r.omega),
                        fmt(r.participation),
                        r.width.to_string(),
                        fmt(r.outside_max),
                        fmt(r.decay_rate),
                    ]
                }),
            )?;
            outputs.push(path.display().to_string());
            println!(
                "support pass {:.1}%, omega pass {:.1}%, c_fit {:.3e}, width~omega exponent {:.3}",
                100.0 * report.support_pass_fraction,
                100.0 * report.omega_pass_fraction,
                report.c_fit,
                report.width_omega_exponent
            );
        }
        Command::CovDecay => {
            let d_max = 40.min(n / 2 - 1);
            let res = covariance_decay_experiment(
                spec,
                n,
                cfg.realizations,
                d_max,
                cfg.base_seed,
                cfg.classical,
            )?;
            let path = out.join("covdecay.csv");
            write_csv(
                &path,
                &["distance", "covariance"],
                res.distances
                    .iter()
                    .zip(&res.covariance)
                    .map(|(d, c)| vec![d.to_string(), fmt(*c)]),
            )?;
            outputs.push(path.display().to_string());
            println!(
                "fit: rate {:.4}, amplitude {:.3e}, floor {:.3e}{}",
                res.fit_rate,
                res.fit_amplitude,
                res.floor,
                if res.fit_unstable { " (unstable fit: too few points above floor)" } else { "" }
            );
        }
        Command::Slln => {
            let g = cfg.test_functions.first().cloned().unwrap_or(TestFunction::One);
            let table = slln_experiment(
                spec,
                &cfg.n_values,
                cfg.realizations,
                &g,
                cfg.base_seed,
                cfg.classical,
            )?;
            let path = out.join("slln.csv");
            write_csv(
                &path,
                &["n", "variance"],
                table.iter().map(|(nv, v)| vec![nv.to_string(), fmt(*v)]),
            )?;
            outputs.push(path.display().to_string());
        }
        Command::FMu => {
            let table = f_mu_table(
                spec,
                n,
                cfg.realizations,
                cfg.base_seed,
                cfg.classical,
                cfg.beta_grid,
            )?;
            let path = out.join("fmu.csv");
            write_csv(
                &path,
                &["beta", "f", "beta_f"],
                table
                    .betas
                    .iter()
                    .zip(&table.values)
                    .map(|(b, f)| vec![fmt(*b), fmt(*f), fmt(b * f)]),
            )?;
            outputs.push(path.display().to_string());
        }
        Command::Euler => {
            let grid: Vec<f64> = (0..=256).map(|i| i as f64 / 256.0).collect();
            let table = f_mu_table(
                spec,
                512.min(n.max(64)),
                cfg.realizations.min(8),
                cfg.base_seed,
                cfg.classical,
                cfg.beta_grid,
            )?;
            let fmu: Vec<f64> = grid
                .iter()
                .map(|&y| table.interp(spec.beta_profile.eval(y)))
                .collect();
            let sol = qhchain::euler::macro_solution(
                &spec.pbar_profile,
                &spec.rbar_profile,
                spec.mbar(),
                cfg.k_modes,
                grid.clone(),
                cfg.macro_times.clone(),
                fmu,
            )?;
            let path = out.join("euler.csv");
            let mut rows = Vec::new();
            for (j, &t) in sol.times.iter().enumerate() {
                for (i, &y) in sol.grid.iter().enumerate() {
                    rows.push(vec![
                        fmt(y),
                        fmt(t),
                        fmt(sol.r_field[(i, j)]),
                        fmt(sol.p_field[(i, j)]),
                        fmt(sol.e_field[(i, j)]),
                    ]);
                }
            }
            write_csv(&path, &["y", "t", "r", "p", "e"], rows)?;
            outputs.push(path.display().to_string());
            println!(
                "truncation residual {:.3e}, energy residual {:.3e}",
                sol.truncation_residual, sol.energy_residual
            );
        }
        Command::Hydro => {
            let table = hydrodynamic_convergence(&cfg)?;
            let path = out.join("hydro.csv");
            write_csv(
                &path,
                &[
                    "n",
                    "t",
                    "observable",
                    "test_function",
                    "empirical",
                    "macro_value",
                    "abs_error",
                    "stderr",
                ],
                table.rows.iter().map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt(r.t),
                        r.observable.to_string(),
                        r.test_function.clone(),
                        fmt(r.empirical),
                        fmt(r.macro_value),
                        fmt(r.abs_error),
                        fmt(r.stderr),
                    ]
                }),
            )?;
            outputs.push(path.display().to_string());
        }
    }
    Ok(outputs)
}

fn main() {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("QHCHAIN_THREADS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or_else(num_cpus);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .ok();
    let start = Instant::now();
    match run(&cli) {
        Ok(outputs) => {
            let (cfg, kv) = match load_config(&cli) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    std::process::exit(2);
                }
            };
            let manifest = RunManifest {
                subcommand: cli.command.name().to_string(),
                config: kv.echo(),
                seed: cfg.base_seed,
                threads,
                classical: cfg.classical,
                time_scale_exponent: cfg.time_scale_exponent,
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_ms: start.elapsed().as_millis(),
                outputs,
            };
            if let Err(e) = manifest.write(&cli.out) {
                eprintln!("error: {e}");
                std::process::exit(3);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 2,
                _ => 3,
            };
            std::process::exit(code);
        }
    }
}

fn num_cpus() -> usize {
    std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1)
}
