//! Statistical experiments: f^μ(β) estimation, covariance decay, SLLN
//! checks, mass homogenization, thermal freezing, and the headline
//! hydrodynamic-limit convergence study.
//!
//! Realizations are the parallel unit. Every experiment derives an
//! independent sub-seed per realization index from the base seed, collects
//! per-realization results into an indexed vector, and reduces sequentially
//! with compensated summation — so results are bitwise reproducible
//! regardless of thread count.

use crate::chain::{
    build_dynamics_operators, build_gibbs_operators, discretize_profiles, sample_masses, sub_seed,
    ChainSpec, DiscretizedProfiles, DisorderRealization, Profile,
};
use crate::dynamics::{
    evolve, thermal_energy_sites, EvolutionPlan, ModeCoordinates,
};
use crate::error::{Error, Result};
use crate::gibbs::{coth_weight, initial_means, site_thermal_energies, EnergyRoute};
use crate::spectral::{build_mode_basis, ModeBasis};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// The named test functions of the convergence statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    One,
    /// sin(kπy)
    SinPi(u32),
    /// cos(kπy)
    CosPi(u32),
}

impl TestFunction {
    pub fn eval(&self, y: f64) -> f64 {
        let pi = std::f64::consts::PI;
        match self {
            TestFunction::One => 1.0,
            TestFunction::SinPi(k) => (*k as f64 * pi * y).sin(),
            TestFunction::CosPi(k) => (*k as f64 * pi * y).cos(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::One => "1".to_string(),
            TestFunction::SinPi(k) => format!("sin{k}"),
            TestFunction::CosPi(k) => format!("cos{k}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(TestFunction::One);
        }
        if let Some(k) = s.strip_prefix("sin") {
            return k
                .parse()
                .map(TestFunction::SinPi)
                .map_err(|_| Error::config(format!("bad test function '{s}'")));
        }
        if let Some(k) = s.strip_prefix("cos") {
            return k
                .parse()
                .map(TestFunction::CosPi)
                .map_err(|_| Error::config(format!("bad test function '{s}'")));
        }
        Err(Error::config(format!("bad test function '{s}' (expected 1, sinK, cosK)")))
    }
}

/// Everything an experiment run needs beyond the chain itself.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: ChainSpec,
    pub n_values: Vec<usize>,
    pub realizations: usize,
    pub macro_times: Vec<f64>,
    pub test_functions: Vec<TestFunction>,
    pub base_seed: u64,
    pub classical: bool,
    pub time_scale_exponent: f64,
    /// mode-split exponent (modes k ≤ n^{1−α} are "low")
    pub alpha: f64,
    /// localization support exponent (width budget 2n^η)
    pub eta: f64,
    /// Fourier truncation of the macroscopic solver
    pub k_modes: usize,
    /// points of the f^μ(β) table
    pub beta_grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            spec: ChainSpec::default(),
            n_values: vec![128, 256, 512, 1024],
            realizations: 8,
            macro_times: vec![0.25, 0.5],
            test_functions: vec![
                TestFunction::One,
                TestFunction::SinPi(1),
                TestFunction::CosPi(1),
                TestFunction::SinPi(2),
            ],
            base_seed: 20260826,
            classical: false,
            time_scale_exponent: 1.0,
            alpha: 0.25,
            eta: 0.6,
            k_modes: 64,
            beta_grid: 16,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.n_values.is_empty() {
            return Err(Error::config("n_values must be nonempty"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_values must be strictly ascending"));
        }
        if self.realizations == 0 {
            return Err(Error::config("realizations must be ≥ 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Compensated (Kahan) summation; keeps aggregation deterministic and
/// accurate independent of realization count.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    let mean = kahan_sum(values.iter().cloned()) / r as f64;
    if r < 2 {
        return (mean, 0.0);
    }
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (r - 1) as f64;
    (mean, (var / r as f64).sqrt())
}

/// (1/n)Σ_x g(x/n)·values_x. For r-type sequences (length n−1) the missing
/// boundary term simply drops out; the 1/n normalization is kept.
///
/// ```
/// use qhchain::experiments::{weighted_empirical, TestFunction};
/// let ones = vec![1.0; 100];
/// let g = TestFunction::parse("1").unwrap();
/// assert!((weighted_empirical(&ones, &g, 100) - 1.0).abs() < 1e-12);
/// // a Riemann sum of sin(πy) over 100 sites ≈ ∫₀¹ sin(πy) dy = 2/π
/// let g = TestFunction::parse("sin1").unwrap();
/// let riemann = weighted_empirical(&ones, &g, 100);
/// assert!((riemann - 2.0 / std::f64::consts::PI).abs() < 1e-3);
/// ```
pub fn weighted_empirical(values: &[f64], g: &TestFunction, n: usize) -> f64 {
    kahan_sum(values.iter().enumerate().map(|(i, v)| g.eval((i + 1) as f64 / n as f64) * v))
        / n as f64
}

/// Adaptive Simpson quadrature to relative tolerance 1e-10.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    let whole = simpson(f, a, b);
    rec(f, a, b, whole, tol, 40)
}

/// Clean-chain closed form: f_β = β^{-1}∫₀¹ u coth u dk with
/// u = (βħ/√m)·sin(πk). Relative error ≤ 1e-10.
///
/// ```
/// use qhchain::experiments::clean_chain_f_closed_form;
/// let beta = 2.0;
/// // ħ → 0 recovers classical equipartition 1/β
/// assert!((clean_chain_f_closed_form(beta, 1.0, 1e-8) - 1.0 / beta).abs() < 1e-8);
/// // at ħ = 1 zero-point motion pushes the energy density above 1/β
/// assert!(clean_chain_f_closed_form(beta, 1.0, 1.0) > 1.0 / beta);
/// ```
pub fn clean_chain_f_closed_form(beta: f64, m: f64, hbar: f64) -> f64 {
    assert!(beta > 0.0 && m > 0.0, "beta and m must be positive");
    let amp = beta * hbar / m.sqrt();
    let integrand = move |k: f64| {
        let u = amp * (std::f64::consts::PI * k).sin();
        // u coth u, stable at u → 0
        if u.abs() < 1e-8 {
            1.0 + u * u / 3.0
        } else {
            u / u.tanh()
        }
    };
    adaptive_simpson(&integrand, 0.0, 1.0, 1e-11) / beta
}

/// Monte-Carlo estimate of the equilibrium thermal energy density f^μ(β_eq):
/// average of ⟨ẽ_x⟩ over the bulk window [n/4, 3n/4) and over realizations.
/// Returns (mean, stderr over realizations).
pub fn f_mu_estimate(
    spec: &ChainSpec,
    beta_eq: f64,
    n: usize,
    realization_count: usize,
    base_seed: u64,
    classical: bool,
) -> Result<(f64, f64)> {
    let mut spec = spec.clone();
    spec.n = n;
    spec.beta_profile = Profile::Constant(beta_eq);
    let per: Vec<f64> = (0..realization_count)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let real = sample_masses(&spec, sub_seed(base_seed, i as u64))?;
            let prof = discretize_profiles(&spec, n);
            let e = site_thermal_energies(&real, &prof, classical, EnergyRoute::Taylor)?;
            let lo = n / 4;
            let hi = 3 * n / 4;
            Ok(kahan_sum(e[lo..hi].iter().cloned()) / (hi - lo) as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, stderr) = mean_stderr(&per);
    // the site energies exclude the conserved zero mode, whose equilibrium
    // share is exactly w(0)/(2β) = 1/(2β) spread over n sites; re-adding it
    // removes the 1/(2βn) finite-size deficit from the density estimate
    Ok((mean + 0.5 / (beta_eq * n as f64), stderr))
}

/// Tabulated f^μ on a β-grid with monotone (piecewise-linear) interpolation.
#[derive(Debug, Clone)]
pub struct FmuTable {
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
}

impl FmuTable {
    pub fn interp(&self, beta: f64) -> f64 {
        let b = &self.betas;
        if beta <= b[0] {
            return self.values[0];
        }
        if beta >= b[b.len() - 1] {
            return self.values[b.len() - 1];
        }
        let i = b.partition_point(|&v| v < beta) - 1;
        let w = (beta - b[i]) / (b[i + 1] - b[i]);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

/// Build the f^μ table over the range of the β profile (log-spaced grid;
/// collapses to one point at equilibrium).
pub fn f_mu_table(
    spec: &ChainSpec,
    n: usize,
    realization_count: usize,
    base_seed: u64,
    classical: bool,
    grid_points: usize,
) -> Result<FmuTable> {
    let (lo, hi) = spec.beta_bounds();
    let points = if (hi - lo).abs() < 1e-12 { 1 } else { grid_points.max(2) };
    let betas: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                lo
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect();
    let values = betas
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            f_mu_estimate(spec, b, n, realization_count, sub_seed(base_seed, 7919 + i as u64), classical)
                .map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FmuTable { betas, values })
}

/// Raw table and fit of the covariance-decay experiment.
#[derive(Debug, Clone)]
pub struct CovDecayResult {
    pub n: usize,
    pub realizations: usize,
    pub distances: Vec<usize>,
    pub covariance: Vec<f64>,
    /// magnitude of the finite-n covariance floor (tail average)
    pub floor: f64,
    /// fitted exponential rate (decay per site) on the region above the floor
    pub fit_rate: f64,
    /// fitted amplitude at distance 0
    pub fit_amplitude: f64,
    /// true when fewer than two points stood above the floor (no rate is
    /// identifiable); with exactly two the fit degenerates to interpolation
    pub fit_unstable: bool,
}

/// Disorder covariance d ↦ Cov(⟨ẽ_x⟩, ⟨ẽ_{x+d}⟩) averaged over mid-chain
/// pairs, with a log-linear fit of the exponential regime above the
/// finite-n floor.
pub fn covariance_decay_experiment(
    spec: &ChainSpec,
    n: usize,
    realization_count: usize,
    d_max: usize,
    base_seed: u64,
    classical: bool,
) -> Result<CovDecayResult> {
    // mid-chain window of left endpoints: every pair (x, x + d) with x in
    // the window stays away from both boundaries, and averaging the
    // covariance estimate over the window beats the single-pair Monte
    // Carlo floor down by roughly the root of the window size
    let window = n / 4..3 * n / 4;
    assert!(window.end + d_max < n, "d_max too large for the lattice");
    let rows: Vec<Vec<f64>> = (0..realization_count)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut s = spec.clone();
            s.n = n;
            let real = sample_masses(&s, sub_seed(base_seed, i as u64))?;
            let prof = discretize_profiles(&s, n);
            let e = site_thermal_energies(&real, &prof, classical, EnergyRoute::Taylor)?;
            Ok(e[window.start..window.end + d_max].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    let r = realization_count as f64;
    let width = window.end - window.start;
    let mean: Vec<f64> = (0..width + d_max)
        .map(|j| kahan_sum(rows.iter().map(|row| row[j])) / r)
        .collect();
    let covariance: Vec<f64> = (0..=d_max)
        .map(|d| {
            let per_center = (0..width).map(|j| {
                kahan_sum(rows.iter().map(|row| (row[j] - mean[j]) * (row[j + d] - mean[j + d])))
                    / (r - 1.0)
            });
            kahan_sum(per_center) / width as f64
        })
        .collect();
    // floor: average magnitude over the last third of the distance range
    let tail_start = (2 * (d_max + 1)) / 3;
    let floor = covariance[tail_start..]
        .iter()
        .map(|c| c.abs())
        .sum::<f64>()
        / (d_max + 1 - tail_start) as f64;
    // fit ln|cov| against d where the signal clears the floor
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (d, c) in covariance.iter().enumerate() {
        if c.abs() > 3.0 * floor {
            xs.push(d as f64);
            ys.push(c.abs().ln());
        }
    }
    let fit_unstable = xs.len() < 2;
    let (mut rate, mut amp) = (0.0, 0.0);
    if !fit_unstable {
        let nn = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / nn;
        let my = ys.iter().sum::<f64>() / nn;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
        let slope = num / den;
        rate = -slope;
        amp = (my - slope * mx).exp();
    }
    Ok(CovDecayResult {
        n,
        realizations: realization_count,
        distances: (0..=d_max).collect(),
        covariance,
        floor,
        fit_rate: rate,
        fit_amplitude: amp,
        fit_unstable,
    })
}

/// Across-realization variance of (1/n)Σ g(x/n)⟨ẽ_x⟩ for each n.
pub fn slln_experiment(
    spec: &ChainSpec,
    n_values: &[usize],
    realization_count: usize,
    g: &TestFunction,
    base_seed: u64,
    classical: bool,
) -> Result<Vec<(usize, f64)>> {
    n_values
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = (0..realization_count)
                .into_par_iter()
                .map(|i| -> Result<f64> {
                    let mut s = spec.clone();
                    s.n = n;
                    let real = sample_masses(&s, sub_seed(base_seed ^ n as u64, i as u64))?;
                    let prof = discretize_profiles(&s, n);
                    let e = site_thermal_energies(&real, &prof, classical, EnergyRoute::Taylor)?;
                    Ok(weighted_empirical(&e, g, n))
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean, _) = mean_stderr(&vals);
            let var = kahan_sum(vals.iter().map(|v| (v - mean) * (v - mean)))
                / (vals.len() - 1) as f64;
            Ok((n, var))
        })
        .collect()
}

/// Evolve the averaged fields only (no covariances) — the cheap path for
/// mean-field diagnostics.
pub fn evolve_means_only(
    mean_p: &DVector<f64>,
    mean_r: &DVector<f64>,
    plan: &EvolutionPlan,
    real: &DisorderRealization,
    t: f64,
) -> (DVector<f64>, DVector<f64>) {
    let n = plan.n;
    let phi = &plan.basis0.momentum;
    let phit = &plan.basis0.elongation;
    let mut scaled_p = mean_p.clone();
    for x in 0..n {
        scaled_p[x] /= real.masses[x].sqrt();
    }
    let u0 = phi.transpose() * scaled_p;
    let v_inner = phit.transpose() * mean_r;
    let mut u = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    for k in 0..n {
        let vk = if k == 0 { 0.0 } else { v_inner[k - 1] };
        let th = plan.angle(k, t);
        let (s, c) = th.sin_cos();
        u[k] = c * u0[k] - s * vk;
        v[k] = c * vk + s * u0[k];
    }
    let mut p_out = phi * u;
    for x in 0..n {
        p_out[x] *= real.masses[x].sqrt();
    }
    let v_in = DVector::from_fn(n - 1, |k, _| v[k + 1]);
    let r_out = phit * v_in;
    (p_out, r_out)
}

/// Mass-homogenization functionals at time t:
/// (1/n)Σ g(x/n)(p̄_x/m_x)(m_x−m̄) and the squared variant
/// (1/n)Σ g(x/n)(p̄_x/m_x)²(m_x−m̄)².
pub fn mass_homogenization_check(
    spec: &ChainSpec,
    n_values: &[usize],
    t: f64,
    g: &TestFunction,
    base_seed: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    let mbar = spec.mbar();
    n_values
        .iter()
        .map(|&n| {
            let mut s = spec.clone();
            s.n = n;
            let real = sample_masses(&s, sub_seed(base_seed, n as u64))?;
            let prof = discretize_profiles(&s, n);
            let (a_p0, _) = build_dynamics_operators(&real);
            let basis0 = build_mode_basis(&a_p0, &real, None)?;
            let plan = EvolutionPlan::new(basis0, vec![t], 1.0);
            let (mp, mr, _) = initial_means(&real, &prof, mbar);
            let (pt, _rt) = evolve_means_only(
                &DVector::from_vec(mp),
                &DVector::from_vec(mr),
                &plan,
                &real,
                t,
            );
            let v1 = kahan_sum((0..n).map(|x| {
                g.eval((x + 1) as f64 / n as f64) * (pt[x] / real.masses[x])
                    * (real.masses[x] - mbar)
            })) / n as f64;
            let v2 = kahan_sum((0..n).map(|x| {
                let w = (pt[x] / real.masses[x]) * (real.masses[x] - mbar);
                g.eval((x + 1) as f64 / n as f64) * w * w
            })) / n as f64;
            Ok((n, v1, v2))
        })
        .collect()
}

/// Initial mode coordinates of the locally Gibbs state, assembled directly in
/// the dynamics basis: Σ_uu(0) = GWGᵀ with G = Φᵀ diag(β_x^{-1/2}) Ψ (and the
/// elongation analogue), Σ_uv(0) = 0. Avoids ever forming site-basis
/// covariances.
pub fn initial_mode_coordinates(
    basis_beta: &ModeBasis,
    basis0: &ModeBasis,
    real: &DisorderRealization,
    prof: &DiscretizedProfiles,
    mbar: f64,
    classical: bool,
) -> ModeCoordinates {
    let n = real.n();
    let b = &prof.beta_x;
    let (mp, mr, _) = initial_means(real, prof, mbar);

    let mut scaled_p = DVector::from_vec(mp);
    for x in 0..n {
        scaled_p[x] /= real.masses[x].sqrt();
    }
    let u = basis0.momentum.transpose() * scaled_p;
    let v_inner = basis0.elongation.transpose() * DVector::from_vec(mr);
    let mut v = DVector::zeros(n);
    for k in 1..n {
        v[k] = v_inner[k - 1];
    }

    // G = Φᵀ D Ψ, D = diag(1/√β_x)
    let mut dpsi = basis_beta.momentum.clone();
    for x in 0..n {
        for k in 0..n {
            dpsi[(x, k)] /= b[x].sqrt();
        }
    }
    let g = basis0.momentum.transpose() * dpsi;
    let mut gw = g.clone();
    for k in 0..n {
        let w = if k == 0 { 0.0 } else { coth_weight(basis_beta.frequencies[k], classical) };
        for i in 0..n {
            gw[(i, k)] *= w;
        }
    }
    let suu = gw * g.transpose();

    let mut dpsit = basis_beta.elongation.clone();
    for x in 0..n - 1 {
        for k in 0..n - 1 {
            dpsit[(x, k)] /= b[x].sqrt();
        }
    }
    let gt = basis0.elongation.transpose() * dpsit;
    let mut gtw = gt.clone();
    for k in 1..n {
        let w = coth_weight(basis_beta.frequencies[k], classical);
        for i in 0..n - 1 {
            gtw[(i, k - 1)] *= w;
        }
    }
    let svv_inner = gtw * gt.transpose();
    let mut svv = DMatrix::zeros(n, n);
    for k in 1..n {
        for l in 1..n {
            svv[(k, l)] = svv_inner[(k - 1, l - 1)];
        }
    }
    ModeCoordinates { u, v, suu, svv, suv: DMatrix::zeros(n, n) }
}

/// One row of the hydrodynamic convergence table.
#[derive(Debug, Clone)]
pub struct ConvRow {
    pub n: usize,
    pub t: f64,
    pub observable: &'static str,
    pub test_function: String,
    pub empirical: f64,
    pub macro_value: f64,
    pub abs_error: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvRow>,
}

/// ∫₀¹ g(y)·field(y) dy for the macroscopic side, by composite Simpson.
fn macro_integral(g: &TestFunction, field: &dyn Fn(f64) -> f64) -> f64 {
    let n = 2048usize;
    let h = 1.0 / n as f64;
    let f = |y: f64| g.eval(y) * field(y);
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// The hydrodynamic-limit experiment: empirical weighted sums of ⟨r⟩, ⟨p⟩, ⟨e⟩ at the
/// macro times against the corresponding integrals of the Euler solution,
/// for every (n, t, g), averaged over realizations.
pub fn hydrodynamic_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let mbar = cfg.spec.mbar();
    // thermal profile: f^μ(β(y)) from the equilibrium table
    let fmu_n = 512.min(*cfg.n_values.last().unwrap());
    let table = f_mu_table(&cfg.spec, fmu_n, 8, sub_seed(cfg.base_seed, 0xF17), cfg.classical, cfg.beta_grid)?;
    let wave = crate::euler::FourierWaveSolution::build(
        &cfg.spec.pbar_profile,
        &cfg.spec.rbar_profile,
        mbar,
        cfg.k_modes,
    )?;

    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        // per (seed, t, g, observable) empirical values
        let per_seed: Vec<Vec<f64>> = (0..cfg.realizations)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let mut s = cfg.spec.clone();
                s.n = n;
                // the seed does not involve n: realization i at size 2n
                // extends the same mass stream as realization i at size n,
                // so each seed follows one almost-sure convergence path.
                // Odd indices take the antithetic reflection of the previous
                // stream (m ↦ m_min + m_max − m preserves both mass laws),
                // which cancels the O(n^{-1/2}) linear disorder fluctuation
                // in the seed average.
                let mut real = sample_masses(&s, sub_seed(cfg.base_seed, (i / 2) as u64))?;
                if i % 2 == 1 {
                    let flip = s.mass_law.m_min + s.mass_law.m_max;
                    for m in &mut real.masses {
                        *m = flip - *m;
                    }
                }
                let prof = discretize_profiles(&s, n);
                let (a_p0, _) = build_dynamics_operators(&real);
                let basis0 = build_mode_basis(&a_p0, &real, None)?;
                let (a_pb, _) = build_gibbs_operators(&real, &prof)?;
                let basis_b = build_mode_basis(&a_pb, &real, Some(&prof))?;
                let coords0 =
                    initial_mode_coordinates(&basis_b, &basis0, &real, &prof, mbar, cfg.classical);
                let plan =
                    EvolutionPlan::new(basis0, cfg.macro_times.clone(), cfg.time_scale_exponent);
                let mut out = Vec::new();
                // the covariance construction removes the β-chain zero mode,
                // whose thermal share at site x is λ²m_x/(2β_x²); that mode
                // projects almost entirely onto the frequency-0 mode of the
                // free chain and therefore does not rotate, so its t = 0
                // field restores the missing energy at every macro time
                let lambda_sq = 1.0
                    / (0..n)
                        .map(|x| real.masses[x] / prof.beta_x[x])
                        .sum::<f64>();
                let zero_share: Vec<f64> = (0..n)
                    .map(|x| {
                        lambda_sq * real.masses[x] / (2.0 * prof.beta_x[x] * prof.beta_x[x])
                    })
                    .collect();
                for &t in &cfg.macro_times {
                    let coords = evolve(&coords0, &plan, t);
                    let state = crate::dynamics::from_mode_coordinates(&coords, &plan, &real);
                    let therm = thermal_energy_sites(&coords, &plan);
                    let e_sites: Vec<f64> = (0..n)
                        .map(|x| {
                            let mut e = state.mean_p[x] * state.mean_p[x]
                                / (2.0 * real.masses[x])
                                + therm[x]
                                + zero_share[x];
                            if x < n - 1 {
                                e += 0.5 * state.mean_r[x] * state.mean_r[x];
                            }
                            e
                        })
                        .collect();
                    let r_sites: Vec<f64> = (0..n - 1).map(|x| state.mean_r[x]).collect();
                    let p_sites: Vec<f64> = (0..n).map(|x| state.mean_p[x]).collect();
                    for g in &cfg.test_functions {
                        out.push(weighted_empirical(&r_sites, g, n));
                        out.push(weighted_empirical(&p_sites, g, n));
                        out.push(weighted_empirical(&e_sites, g, n));
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut idx = 0usize;
        for &t in &cfg.macro_times {
            for g in &cfg.test_functions {
                for (obs_i, obs) in ["r", "p", "e"].iter().enumerate() {
                    let vals: Vec<f64> =
                        per_seed.iter().map(|row| row[idx + obs_i]).collect();
                    let (emp, se) = mean_stderr(&vals);
                    let macro_value = match *obs {
                        "r" => macro_integral(g, &|y| wave.eval(y, t).0),
                        "p" => macro_integral(g, &|y| wave.eval(y, t).1),
                        _ => macro_integral(g, &|y| {
                            let (r, p) = wave.eval(y, t);
                            p * p / (2.0 * mbar)
                                + r * r / 2.0
                                + table.interp(cfg.spec.beta_profile.eval(y))
                        }),
                    };
                    rows.push(ConvRow {
                        n,
                        t,
                        observable: obs,
                        test_function: g.name(),
                        empirical: emp,
                        macro_value,
                        abs_error: (emp - macro_value).abs(),
                        stderr: se,
                    });
                }
                idx += 3;
            }
        }
    }
    Ok(ConvergenceTable { rows })
}

/// One row of the thermal-freezing experiment: the drift of the thermal
/// functional between time 0 and t, per (n, g), averaged over realizations.
#[derive(Debug, Clone)]
pub struct FreezingRow {
    pub n: usize,
    pub t: f64,
    pub test_function: String,
    pub drift_mean: f64,
    pub drift_stderr: f64,
}

/// |T_n^g(t) − T_n^g(0)| over the n sweep, at the configured time-scale
/// exponent (1 = hyperbolic, 2 = diffusive probe).
pub fn thermal_freezing_experiment(
    cfg: &ExperimentConfig,
    t: f64,
) -> Result<Vec<FreezingRow>> {
    cfg.validate()?;
    let mbar = cfg.spec.mbar();
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let per_seed: Vec<Vec<f64>> = (0..cfg.realizations)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let mut s = cfg.spec.clone();
                s.n = n;
                // n-independent seeds: each realization index follows one
                // disorder path through the whole n sweep
                let real = sample_masses(&s, sub_seed(cfg.base_seed, i as u64))?;
                let prof = discretize_profiles(&s, n);
                let (a_p0, _) = build_dynamics_operators(&real);
                let basis0 = build_mode_basis(&a_p0, &real, None)?;
                let (a_pb, _) = build_gibbs_operators(&real, &prof)?;
                let basis_b = build_mode_basis(&a_pb, &real, Some(&prof))?;
                let coords0 =
                    initial_mode_coordinates(&basis_b, &basis0, &real, &prof, mbar, cfg.classical);
                let plan = EvolutionPlan::new(basis0, vec![t], cfg.time_scale_exponent);
                let therm0 = thermal_energy_sites(&coords0, &plan);
                let coords = evolve(&coords0, &plan, t);
                let therm_t = thermal_energy_sites(&coords, &plan);
                Ok(cfg
                    .test_functions
                    .iter()
                    .map(|g| {
                        (weighted_empirical(&therm_t, g, n)
                            - weighted_empirical(&therm0, g, n))
                        .abs()
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        for (gi, g) in cfg.test_functions.iter().enumerate() {
            let vals: Vec<f64> = per_seed.iter().map(|row| row[gi]).collect();
            let (m, se) = mean_stderr(&vals);
            rows.push(FreezingRow {
                n,
                t,
                test_function: g.name(),
                drift_mean: m,
                drift_stderr: se,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::MassLaw;

    #[test]
    fn test_function_parsing() {
        assert_eq!(TestFunction::parse("1").unwrap(), TestFunction::One);
        assert_eq!(TestFunction::parse("sin2").unwrap(), TestFunction::SinPi(2));
        assert_eq!(TestFunction::parse("cos1").unwrap(), TestFunction::CosPi(1));
        assert!(TestFunction::parse("tan1").is_err());
        assert_eq!(TestFunction::parse("sin1").unwrap().name(), "sin1");
    }

    #[test]
    fn weighted_empirical_examples() {
        let n = 100;
        let ones = vec![2.5; n];
        let v = weighted_empirical(&ones, &TestFunction::One, n);
        assert!((v - 2.5).abs() < 1e-12);
        // r-type sequence of length n−1 drops the boundary term
        let short = vec![2.5; n - 1];
        let v = weighted_empirical(&short, &TestFunction::One, n);
        assert!((v - 2.5 * (n as f64 - 1.0) / n as f64).abs() < 1e-12);
        // Riemann sum of sin² → 1/2
        let sins: Vec<f64> =
            (1..=n).map(|x| (std::f64::consts::PI * x as f64 / n as f64).sin()).collect();
        let v = weighted_empirical(&sins, &TestFunction::SinPi(1), n);
        assert!((v - 0.5).abs() < 1e-2, "sin² Riemann sum {v}");
        let zeros = vec![0.0; n];
        assert_eq!(weighted_empirical(&zeros, &TestFunction::SinPi(1), n), 0.0);
    }

    #[test]
    fn kahan_sum_compensates() {
        // 1 + 10000·1e-16: naive left-to-right summation drops every small
        // addend; the compensated sum keeps them
        let mut vals = vec![1.0];
        vals.extend(std::iter::repeat(1e-16).take(10_000));
        let naive: f64 = vals.iter().sum();
        assert_eq!(naive, 1.0);
        let compensated = kahan_sum(vals);
        assert!((compensated - (1.0 + 1e-12)).abs() < 1e-15, "{compensated}");
    }

    #[test]
    fn clean_chain_closed_form_limits() {
        // ħ → 0 recovers the classical value 1/β
        for beta in [0.5, 1.0, 3.0] {
            let v = clean_chain_f_closed_form(beta, 1.0, 1e-9);
            assert!((v - 1.0 / beta).abs() < 1e-8, "β={beta}: {v}");
        }
        // m → ∞ does too
        let v = clean_chain_f_closed_form(1.0, 1e12, 1.0);
        assert!((v - 1.0).abs() < 1e-8);
        // β = m = ħ = 1: integrand (sin πk)coth(sin πk) ∈ [1, coth(1)·1], so
        // the value sits strictly inside (1, 1.2)
        let v = clean_chain_f_closed_form(1.0, 1.0, 1.0);
        assert!(v > 1.0 && v < 1.2, "anchor value {v}");
    }

    #[test]
    fn f_mu_classical_equipartition() {
        let spec = ChainSpec::default();
        let (f, _) = f_mu_estimate(&spec, 2.0, 256, 4, 7, true).unwrap();
        assert!((2.0 * f - 1.0).abs() < 5e-3, "β·f = {}", 2.0 * f);
    }

    #[test]
    fn f_mu_clean_chain_matches_quadrature() {
        let mut spec = ChainSpec::default();
        spec.mass_law = MassLaw::uniform(1.0, 1.0).unwrap();
        let (f, stderr) = f_mu_estimate(&spec, 1.0, 512, 2, 3, false).unwrap();
        assert_eq!(stderr, 0.0); // no disorder, identical realizations
        let exact = clean_chain_f_closed_form(1.0, 1.0, 1.0);
        assert!((f - exact).abs() < 2e-3, "f {f} vs quadrature {exact}");
    }

    #[test]
    fn f_mu_table_interpolation() {
        let t = FmuTable { betas: vec![1.0, 2.0, 4.0], values: vec![1.0, 0.5, 0.25] };
        assert_eq!(t.interp(0.5), 1.0); // clamped low
        assert_eq!(t.interp(8.0), 0.25); // clamped high
        assert!((t.interp(1.5) - 0.75).abs() < 1e-12);
        assert!((t.interp(3.0) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn covariance_decay_clean_chain_is_noise() {
        let mut spec = ChainSpec::default();
        spec.mass_law = MassLaw::uniform(1.0, 1.0).unwrap();
        let res = covariance_decay_experiment(&spec, 64, 8, 10, 5, true).unwrap();
        for c in &res.covariance {
            assert!(c.abs() < 1e-20, "clean chain covariance {c}");
        }
    }

    #[test]
    fn covariance_decay_disorder_has_positive_variance() {
        let spec = ChainSpec::default();
        let res = covariance_decay_experiment(&spec, 128, 64, 16, 6, false).unwrap();
        assert!(res.covariance[0] > 0.0, "variance at d=0 must be positive");
        // magnitudes fall off with distance overall
        assert!(res.covariance[0] > res.covariance[10].abs());
    }

    #[test]
    fn slln_deterministic_masses_give_zero_variance() {
        let mut spec = ChainSpec::default();
        spec.mass_law = MassLaw::uniform(1.0, 1.0).unwrap();
        let rows =
            slln_experiment(&spec, &[32, 64], 6, &TestFunction::One, 1, true).unwrap();
        for (_, var) in rows {
            assert!(var < 1e-25, "variance {var}");
        }
    }

    #[test]
    fn mass_homogenization_vanishes_on_clean_chain() {
        let mut spec = ChainSpec::default();
        spec.mass_law = MassLaw::uniform(1.0, 1.0).unwrap();
        let rows =
            mass_homogenization_check(&spec, &[64, 128], 0.5, &TestFunction::SinPi(1), 2)
                .unwrap();
        for (_, v1, v2) in rows {
            assert_eq!(v1, 0.0);
            assert_eq!(v2, 0.0);
        }
    }

    #[test]
    fn mode_coordinate_assembly_matches_site_route() {
        // Σuu assembled directly in mode space must agree with conjugating
        // the site-basis covariance blocks
        let n = 32;
        let mut spec = ChainSpec::default();
        spec.n = n;
        let real = sample_masses(&spec, 19).unwrap();
        let prof = discretize_profiles(&spec, n);
        let (a_p0, _) = build_dynamics_operators(&real);
        let basis0 = build_mode_basis(&a_p0, &real, None).unwrap();
        let (a_pb, _) = build_gibbs_operators(&real, &prof).unwrap();
        let basis_b = build_mode_basis(&a_pb, &real, Some(&prof)).unwrap();
        let direct =
            initial_mode_coordinates(&basis_b, &basis0, &real, &prof, spec.mbar(), false);
        let state = crate::gibbs::gibbs_state(&basis_b, &real, &prof, spec.mbar(), false);
        let plan = EvolutionPlan::new(basis0, vec![0.0], 1.0);
        let via_site = crate::dynamics::to_mode_coordinates(&state, &plan, &real);
        for k in 0..n {
            assert!((direct.u[k] - via_site.u[k]).abs() < 1e-11);
            assert!((direct.v[k] - via_site.v[k]).abs() < 1e-11);
            for l in 0..n {
                assert!(
                    (direct.suu[(k, l)] - via_site.suu[(k, l)]).abs() < 1e-9,
                    "Σuu at ({k},{l})"
                );
                assert!(
                    (direct.svv[(k, l)] - via_site.svv[(k, l)]).abs() < 1e-9,
                    "Σvv at ({k},{l})"
                );
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_values = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.n_values = vec![128, 128];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.realizations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn experiments_are_deterministic() {
        let spec = ChainSpec::default();
        let a = f_mu_estimate(&spec, 1.0, 64, 4, 11, false).unwrap();
        let b = f_mu_estimate(&spec, 1.0, 64, 4, 11, false).unwrap();
        assert_eq!(a, b);
        let c = covariance_decay_experiment(&spec, 64, 8, 8, 11, false).unwrap();
        let d = covariance_decay_experiment(&spec, 64, 8, 8, 11, false).unwrap();
        assert_eq!(c.covariance, d.covariance);
    }
}
