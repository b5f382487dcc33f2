//! Gaussian characterization of the locally Gibbs state.
//!
//! The state is fully described by the means ⟨p_x⟩, ⟨r_x⟩ and the symmetrized
//! covariances of the fluctuations p̃, r̃. Both are exactly computable:
//!
//! * means carry the small correction ℰ_n^x enforcing zero total momentum,
//! * covariances are mode sums over the β-weighted basis with the quantum
//!   occupation weight w(γ) = (γ/2)coth(γ/2),
//! * site thermal energies are diagonal entries of f(A) with
//!   f(z) = √z coth √z, which this module evaluates both spectrally and by a
//!   truncated recentered Taylor series (two independent routes).

use crate::chain::{
    build_gibbs_operators, DiscretizedProfiles, DisorderRealization, TridiagonalOperator,
};
use crate::error::{Error, Result};
use crate::spectral::ModeBasis;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// The zero-total-momentum correction ℰ_n^x = (m_x/β_x)·λ²·Π₀ with
/// λ² = (Σ m_x/β_x)^{-1} and Π₀ = Σ p̄(x/n) m_x/m̄.
#[derive(Debug, Clone)]
pub struct CorrectionTerm {
    pub lambda_sq: f64,
    pub pi0: f64,
    pub values: Vec<f64>,
}

/// Complete Gaussian state: means plus symmetrized covariance blocks.
/// `c_pr` is the symmetrized cross block ½⟨p̃r̃ + r̃p̃⟩ (zero in the Gibbs
/// state, generally nonzero after evolution).
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub mean_p: DVector<f64>,
    pub mean_r: DVector<f64>,
    pub c_pp: DMatrix<f64>,
    pub c_rr: DMatrix<f64>,
    pub c_pr: DMatrix<f64>,
}

/// ⟨p_x⟩ = (m_x/m̄)p̄_x − ℰ_n^x and ⟨r_x⟩ = r̄_x. The correction makes the
/// total momentum vanish exactly.
pub fn initial_means(
    real: &DisorderRealization,
    prof: &DiscretizedProfiles,
    mbar: f64,
) -> (Vec<f64>, Vec<f64>, CorrectionTerm) {
    let n = real.n();
    let m = &real.masses;
    let b = &prof.beta_x;
    let pi0: f64 = (0..n).map(|x| prof.pbar_x[x] * m[x] / mbar).sum();
    let lambda_sq = 1.0 / (0..n).map(|x| m[x] / b[x]).sum::<f64>();
    let values: Vec<f64> = (0..n).map(|x| (m[x] / b[x]) * lambda_sq * pi0).collect();
    let mean_p: Vec<f64> = (0..n).map(|x| (m[x] / mbar) * prof.pbar_x[x] - values[x]).collect();
    let mean_r = prof.rbar_x.clone();
    (mean_p, mean_r, CorrectionTerm { lambda_sq, pi0, values })
}

/// The quantum occupation weight w(g) = (g/2)·coth(g/2); w(0) = 1 and the
/// classical flag forces 1 for every g.
///
/// ```
/// use qhchain::gibbs::coth_weight;
/// assert_eq!(coth_weight(0.0, false), 1.0);          // equipartition at g = 0
/// assert!(coth_weight(3.0, false) > 1.0);            // quantum enhancement
/// assert_eq!(coth_weight(3.0, true), 1.0);           // classical override
/// assert!((coth_weight(1e-6, false) - 1.0).abs() < 1e-10);
/// ```
pub fn coth_weight(g: f64, classical: bool) -> f64 {
    assert!(g >= 0.0, "frequency must be nonnegative, got {g}");
    if classical {
        return 1.0;
    }
    let h = 0.5 * g;
    if h < 5e-5 {
        // h·coth h = 1 + h²/3 − h⁴/45 + …
        let h2 = h * h;
        1.0 + h2 / 3.0 - h2 * h2 / 45.0
    } else {
        h / h.tanh()
    }
}

/// f(z) = √z coth √z with f(0) = 1; z clamped at 0 from below (rounding).
pub fn xcothx_sqrt(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let h = z.sqrt();
    if h < 1e-4 {
        1.0 + z / 3.0 - z * z / 45.0
    } else {
        h / h.tanh()
    }
}

/// Covariance blocks of the locally Gibbs state from the β-weighted basis:
///
/// C_pp(x,y) = √(m_x m_y/(β_x β_y)) Σ_{k≥1} ψ^k_x ψ^k_y w(γ_k),
/// C_rr(x,y) = (β_x β_y)^{-1/2}   Σ_{k≥1} ψ̃^k_x ψ̃^k_y w(γ_k),
///
/// and C_pr = 0 (the symmetrized cross covariance vanishes at time zero).
pub fn initial_covariances(
    basis: &ModeBasis,
    real: &DisorderRealization,
    prof: &DiscretizedProfiles,
    classical: bool,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = real.n();
    assert_eq!(basis.dim(), n, "basis / realization size mismatch");
    let b = &prof.beta_x;
    let m = &real.masses;

    // S = Ψ·diag(√w) with mode 0 dropped, then C = D·S·Sᵀ·D
    let mut s = basis.momentum.clone();
    for k in 0..n {
        let w = if k == 0 { 0.0 } else { coth_weight(basis.frequencies[k], classical).sqrt() };
        for x in 0..n {
            s[(x, k)] *= w;
        }
    }
    let mut c_pp = &s * s.transpose();
    for x in 0..n {
        for y in 0..n {
            c_pp[(x, y)] *= (m[x] * m[y] / (b[x] * b[y])).sqrt();
        }
    }

    let mut st = basis.elongation.clone();
    for k in 1..n {
        let w = coth_weight(basis.frequencies[k], classical).sqrt();
        for x in 0..n - 1 {
            st[(x, k - 1)] *= w;
        }
    }
    let mut c_rr = &st * st.transpose();
    for x in 0..n - 1 {
        for y in 0..n - 1 {
            c_rr[(x, y)] /= (b[x] * b[y]).sqrt();
        }
    }
    (c_pp, c_rr)
}

/// Assemble the full locally Gibbs state (means + covariances).
pub fn gibbs_state(
    basis: &ModeBasis,
    real: &DisorderRealization,
    prof: &DiscretizedProfiles,
    mbar: f64,
    classical: bool,
) -> GaussianState {
    let n = real.n();
    let (mean_p, mean_r, _) = initial_means(real, prof, mbar);
    let (c_pp, c_rr) = initial_covariances(basis, real, prof, classical);
    GaussianState {
        mean_p: DVector::from_vec(mean_p),
        mean_r: DVector::from_vec(mean_r),
        c_pp,
        c_rr,
        c_pr: DMatrix::zeros(n, n - 1),
    }
}

/// ⟨ẽ_x⟩ = C_pp(x,x)/(2m_x) + C_rr(x,x)/2, with the r-term absent at x = n
/// (boundary convention r_n = 0). `x` is 1-indexed.
pub fn site_thermal_energy(state: &GaussianState, real: &DisorderRealization, x: usize) -> f64 {
    let n = real.n();
    assert!((1..=n).contains(&x), "site {x} out of range 1..={n}");
    let i = x - 1;
    let mut e = state.c_pp[(i, i)] / (2.0 * real.masses[i]);
    if x < n {
        e += 0.5 * state.c_rr[(i, i)];
    }
    e
}

/// V·f(Λ)·Vᵀ from the full eigendecomposition.
pub fn matrix_function_spectral(
    t: &TridiagonalOperator,
    f: impl Fn(f64) -> f64,
) -> Result<DMatrix<f64>> {
    let (vals, vecs) = crate::spectral::eigh_tridiagonal(t)?;
    let n = t.dim();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let fv = f(vals[k]);
        for i in 0..n {
            scaled[(i, k)] *= fv;
        }
    }
    let mut out = &scaled * vecs.transpose();
    // enforce exact symmetry against rounding
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = m;
            out[(j, i)] = m;
        }
    }
    Ok(out)
}

/// Exact Bernoulli numbers B_0..B_max via the defining recurrence
/// Σ_{j=0}^{m} C(m+1, j)·B_j = 0.
fn bernoulli_numbers(max: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(max + 1);
    b.push(BigRational::one());
    for m in 1..=max {
        // binomials C(m+1, j) built incrementally
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// Coefficients a_0..a_K of √z coth √z = 1 + Σ_{n≥1} a_n zⁿ with
/// a_n = 2^{2n} B_{2n}/(2n)!, computed in exact rational arithmetic and
/// converted to f64 at the end.
pub fn taylor_xcothx_coeffs(k_max: usize) -> Result<Vec<f64>> {
    if k_max > 200 {
        return Err(Error::config(format!("Taylor order capped at 200, got {k_max}")));
    }
    let bern = bernoulli_numbers(2 * k_max);
    let mut coeffs = Vec::with_capacity(k_max + 1);
    let mut pow4 = BigInt::one(); // 2^{2n}
    let mut fact = BigInt::one(); // (2n)!
    for nn in 0..=k_max {
        if nn > 0 {
            pow4 *= BigInt::from(4);
            fact = fact * BigInt::from(2 * nn - 1) * BigInt::from(2 * nn);
        }
        let a = &bern[2 * nn] * BigRational::from_integer(pow4.clone())
            / BigRational::from_integer(fact.clone());
        coeffs.push(a.to_f64().ok_or_else(|| {
            Error::numerical(format!("Taylor coefficient {nn} not representable"))
        })?);
    }
    Ok(coeffs)
}

/// z-series coefficients up to the order cap, computed once and cached.
fn xcothx_coeffs_cached() -> &'static [f64] {
    use std::sync::OnceLock;
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    CACHE.get_or_init(|| taylor_xcothx_coeffs(200).expect("coefficient table"))
}

/// Recentered coefficients b_j of f(z) = Σ_j b_j (z−α)^j obtained by binomial
/// recentering of the full z-series (internal order 200), truncated at order
/// K in the recentered variable, plus an analytic geometric remainder
/// estimate M·ϱ^{K+1}/(1−ϱ) with ϱ = α/(α+1) (Cauchy bound on the circle
/// |z−α| = α+1, M estimated on the real axis). In particular
/// b_0 = f(α) to rounding, for any K.
pub fn taylor_recentered(alpha: f64, k_max: usize) -> Result<(Vec<f64>, f64)> {
    assert!(alpha > 0.0, "Taylor center must be positive");
    if k_max > 200 {
        return Err(Error::config(format!("Taylor order capped at 200, got {k_max}")));
    }
    let a = xcothx_coeffs_cached();
    let full = a.len() - 1;
    let mut b = vec![0.0f64; k_max + 1];
    for (j, bj) in b.iter_mut().enumerate() {
        // b_j = Σ_{k≥j} a_k C(k,j) α^{k−j}, summed from the small high-order
        // tail upward for accuracy
        let mut binom = 1.0f64; // C(k, j) tracked incrementally from k = j
        let mut terms = Vec::with_capacity(full + 1 - j);
        let mut apow = 1.0f64;
        for k in j..=full {
            terms.push(a[k] * binom * apow);
            binom *= (k + 1) as f64 / (k + 1 - j) as f64;
            apow *= alpha;
        }
        *bj = terms.iter().rev().sum();
    }
    let rho = alpha / (alpha + 1.0);
    let m_est = 2.0 * xcothx_sqrt(2.0 * alpha + 1.0);
    let bound = m_est * rho.powi(k_max as i32 + 1) / (1.0 - rho);
    Ok((b, bound))
}

/// Default Taylor center α = (c₀+1)/2 with c₀ = 4β_max²/m_min, the uniform
/// spectral bound for this realization/profile.
pub fn default_taylor_center(real: &DisorderRealization, prof: &DiscretizedProfiles) -> f64 {
    let beta_max = prof.beta_x.iter().cloned().fold(0.0, f64::max);
    let m_min = real.masses.iter().cloned().fold(f64::INFINITY, f64::min);
    let c0 = 4.0 * beta_max * beta_max / m_min;
    0.5 * (c0 + 1.0)
}

/// Smallest order K whose remainder estimate at center α drops below `tol`
/// (clamped to [8, 200]).
pub fn taylor_order_for(alpha: f64, tol: f64) -> usize {
    let rho = alpha / (alpha + 1.0);
    let m_est = 2.0 * xcothx_sqrt(2.0 * alpha + 1.0);
    let mut k = 8usize;
    while k < 200 && m_est * rho.powi(k as i32 + 1) / (1.0 - rho) > tol {
        k += 1;
    }
    k
}

fn check_taylor_domain(t: &TridiagonalOperator, alpha: f64) -> Result<()> {
    // spectrum ⊂ [0, ‖T‖_∞]; the series disk |z−α| < α+π² then requires
    // ‖T‖_∞ < 2α + π²
    let top = t.norm_inf();
    if top >= 2.0 * alpha + std::f64::consts::PI * std::f64::consts::PI {
        return Err(Error::numerical(format!(
            "spectral bound {top:.3} outside the Taylor disk at center {alpha:.3}"
        )));
    }
    Ok(())
}

/// Σ_{j≤K} b_j(α)·(T − αI)^j as a dense symmetric matrix.
pub fn matrix_function_taylor(
    t: &TridiagonalOperator,
    alpha: f64,
    k_max: usize,
) -> Result<DMatrix<f64>> {
    check_taylor_domain(t, alpha)?;
    let (b, _bound) = taylor_recentered(alpha, k_max)?;
    let n = t.dim();
    let mut p = DMatrix::<f64>::identity(n, n);
    let mut out = DMatrix::<f64>::identity(n, n) * b[0];
    let mut col_in = vec![0.0; n];
    let mut col_out = vec![0.0; n];
    for &bj in &b[1..] {
        // p ← (T − αI)·p, column by column
        for c in 0..n {
            for i in 0..n {
                col_in[i] = p[(i, c)];
            }
            t.matvec(&col_in, &mut col_out);
            for i in 0..n {
                p[(i, c)] = col_out[i] - alpha * col_in[i];
            }
        }
        out.zip_apply(&p, |o, pv| *o += bj * pv);
    }
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = m;
            out[(j, i)] = m;
        }
    }
    Ok(out)
}

/// Diagonal of Σ_{j≤K} b_j(α)·(T − αI)^j without forming the dense matrix.
///
/// The power applied to a basis vector e_x has support [x−j, x+j], so each
/// site costs O(K²) and the whole diagonal O(n·K²) — the fast path that makes
/// large Monte-Carlo sweeps over realizations affordable.
pub fn matrix_function_diag_taylor(
    t: &TridiagonalOperator,
    alpha: f64,
    k_max: usize,
) -> Result<Vec<f64>> {
    check_taylor_domain(t, alpha)?;
    let (b, _bound) = taylor_recentered(alpha, k_max)?;
    let n = t.dim();
    let mut diag = vec![0.0; n];
    let mut cur = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    for x in 0..n {
        cur[x] = 1.0;
        let mut d = b[0];
        for (j, &bj) in b.iter().enumerate().skip(1) {
            let lo = x.saturating_sub(j);
            let hi = (x + j).min(n - 1);
            for i in lo..=hi {
                let mut s = (t.diag[i] - alpha) * cur[i];
                if i > 0 {
                    s += t.offdiag[i - 1] * cur[i - 1];
                }
                if i + 1 < n {
                    s += t.offdiag[i] * cur[i + 1];
                }
                next[i] = s;
            }
            for i in lo..=hi {
                cur[i] = next[i];
            }
            d += bj * cur[x];
        }
        diag[x] = d;
        let lo = x.saturating_sub(k_max + 1);
        let hi = (x + k_max + 1).min(n - 1);
        for i in lo..=hi {
            cur[i] = 0.0;
            next[i] = 0.0;
        }
    }
    Ok(diag)
}

/// I(x,k) = [max(x−⌊k/2⌋, 1), min(x+⌊k/2⌋, n)] — the mass window that
/// ⟨x, T^k x⟩ can depend on (1-indexed, clamped to the lattice).
pub fn locality_interval(x: usize, k: usize, n: usize) -> (usize, usize) {
    assert!((1..=n).contains(&x));
    let half = k / 2;
    (x.saturating_sub(half).max(1), (x + half).min(n))
}

/// ⟨x, T^k x⟩ by explicit enumeration of all stay/left/right lattice paths of
/// length k returning to x (1-indexed). Independent of linear algebra; the
/// oracle for the matrix-power route. Capped at k ≤ 12 (3^k paths).
pub fn diag_power_oracle(t: &TridiagonalOperator, x: usize, k: usize) -> Result<f64> {
    if k > 12 {
        return Err(Error::config(format!("path enumeration capped at k=12, got {k}")));
    }
    let n = t.dim();
    assert!((1..=n).contains(&x));
    fn walk(t: &TridiagonalOperator, target: usize, pos: usize, left: usize, prod: f64) -> f64 {
        let n = t.dim();
        if left == 0 {
            return if pos == target { prod } else { 0.0 };
        }
        let dist = pos.abs_diff(target);
        if dist > left {
            return 0.0;
        }
        let mut sum = walk(t, target, pos, left - 1, prod * t.diag[pos]);
        if pos > 0 {
            sum += walk(t, target, pos - 1, left - 1, prod * t.offdiag[pos - 1]);
        }
        if pos + 1 < n {
            sum += walk(t, target, pos + 1, left - 1, prod * t.offdiag[pos]);
        }
        sum
    }
    Ok(walk(t, x - 1, x - 1, k, 1.0))
}

/// Site thermal energies ⟨ẽ_x⟩ for one realization via the matrix-function
/// identity
///
/// ⟨ẽ_x⟩ = (1/2β_x)·( [f(A_pᵝ/4)]_{xx} − (ψ⁰_x)² + [f(A_rᵝ/4)]_{xx} ),
///
/// with f(z) = √z coth √z, so that the eigenvalue weight f(γ²/4) is exactly
/// the occupation factor w(γ) = (γ/2)coth(γ/2) of the mode sums. The r-term
/// is absent at x = n. `route` selects the evaluation of the diagonals; the
/// classical flag needs no linear algebra at all (f ≡ 1, completeness).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyRoute {
    Spectral,
    /// banded Taylor diagonals with remainder pushed below `1e-10`
    Taylor,
}

pub fn site_thermal_energies(
    real: &DisorderRealization,
    prof: &DiscretizedProfiles,
    classical: bool,
    route: EnergyRoute,
) -> Result<Vec<f64>> {
    let n = real.n();
    let b = &prof.beta_x;
    let m = &real.masses;
    let lambda_sq = 1.0 / (0..n).map(|x| m[x] / b[x]).sum::<f64>();
    let psi0_sq: Vec<f64> = (0..n).map(|x| lambda_sq * m[x] / b[x]).collect();
    if classical {
        // w ≡ 1: completeness gives diagonal 1 for both matrix functions
        return Ok((0..n)
            .map(|x| {
                let r_term = if x + 1 < n { 1.0 } else { 0.0 };
                (1.0 - psi0_sq[x] + r_term) / (2.0 * b[x])
            })
            .collect());
    }
    let (a_p, a_r) = build_gibbs_operators(real, prof)?;
    let (a_p, a_r) = (a_p.scaled(0.25), a_r.scaled(0.25));
    let (diag_p, diag_r) = match route {
        EnergyRoute::Spectral => {
            let fp = matrix_function_spectral(&a_p, xcothx_sqrt)?;
            let fr = matrix_function_spectral(&a_r, xcothx_sqrt)?;
            (
                (0..n).map(|x| fp[(x, x)]).collect::<Vec<_>>(),
                (0..n - 1).map(|x| fr[(x, x)]).collect::<Vec<_>>(),
            )
        }
        EnergyRoute::Taylor => {
            let alpha = default_taylor_center(real, prof);
            let k = taylor_order_for(alpha, 1e-10);
            (
                matrix_function_diag_taylor(&a_p, alpha, k)?,
                matrix_function_diag_taylor(&a_r, alpha, k)?,
            )
        }
    };
    Ok((0..n)
        .map(|x| {
            let r_term = if x + 1 < n { diag_r[x] } else { 0.0 };
            (diag_p[x] - psi0_sq[x] + r_term) / (2.0 * b[x])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{
        discretize_profiles, perturb_mass, sample_masses, ChainSpec,
        DisorderRealization, MassLaw, Profile,
    };
    use crate::spectral::build_mode_basis;

    fn disordered_spec(n: usize) -> ChainSpec {
        let mut spec = ChainSpec::default();
        spec.n = n;
        spec
    }

    #[test]
    fn correction_vanishes_without_momentum() {
        let mut spec = disordered_spec(64);
        spec.pbar_profile = Profile::Constant(0.0);
        let real = sample_masses(&spec, 1).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (mean_p, _, corr) = initial_means(&real, &prof, spec.mbar());
        assert_eq!(corr.pi0, 0.0);
        assert!(corr.values.iter().all(|&v| v == 0.0));
        assert!(mean_p.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn total_momentum_is_exactly_cancelled() {
        let spec = disordered_spec(128);
        let real = sample_masses(&spec, 3).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (mean_p, _, corr) = initial_means(&real, &prof, spec.mbar());
        let total: f64 = crate::experiments::kahan_sum(mean_p.iter().cloned());
        assert!(total.abs() < 1e-12 * corr.pi0.abs().max(1.0), "total momentum {total}");
        // ℰ bound: |ℰ_x| ≤ (m_max β_max)/(β_min m_min)·|Π₀|/n
        let (b_lo, b_hi) = spec.beta_bounds();
        let bound = (1.2 * b_hi) / (b_lo * 0.8) * corr.pi0.abs() / spec.n as f64;
        assert!(corr.values.iter().all(|&v| v.abs() <= bound * (1.0 + 1e-12)));
    }

    #[test]
    fn correction_shrinks_with_n() {
        let mut last = f64::INFINITY;
        for n in [256usize, 512, 1024] {
            let spec = disordered_spec(n);
            let real = sample_masses(&spec, 5).unwrap();
            let prof = discretize_profiles(&spec, n);
            let (_, _, corr) = initial_means(&real, &prof, spec.mbar());
            // p̄ = 0.3cos(πy) integrates to 0, so Π₀/n → 0
            let scaled = corr.pi0.abs() / n as f64;
            assert!(scaled < last);
            last = scaled;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn coth_weight_values() {
        assert_eq!(coth_weight(0.0, false), 1.0);
        let e2 = std::f64::consts::E * std::f64::consts::E;
        let coth1 = (e2 + 1.0) / (e2 - 1.0);
        assert!((coth_weight(2.0, false) - coth1).abs() < 1e-14);
        assert!((coth_weight(2.0, false) - 1.3130352854993312).abs() < 1e-10);
        assert!((coth_weight(50.0, false) - 25.0 * (25.0f64.tanh().recip())).abs() < 1e-12);
        assert!((coth_weight(50.0, false) - 25.0).abs() < 1e-12 * 25.0);
        assert_eq!(coth_weight(7.0, true), 1.0);
        // series branch continuity
        let g = 9e-5;
        let exact = (0.5 * g) / (0.5 * g as f64).tanh();
        assert!((coth_weight(g, false) - exact).abs() < 1e-15);
    }

    #[test]
    fn single_mode_covariance_two_sites() {
        let real = DisorderRealization { seed: 0, masses: vec![1.0, 1.0] };
        let prof = crate::chain::DiscretizedProfiles {
            beta_x: vec![1.0, 1.0],
            pbar_x: vec![0.0, 0.0],
            rbar_x: vec![0.0],
        };
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let (_, c_rr) = initial_covariances(&basis, &real, &prof, false);
        let w = coth_weight(2.0f64.sqrt(), false);
        assert!((c_rr[(0, 0)] - w).abs() < 1e-12, "C_rr {} vs {}", c_rr[(0, 0)], w);
    }

    #[test]
    fn classical_equilibrium_elongation_equipartition() {
        let n = 256;
        let mut spec = disordered_spec(n);
        spec.mass_law = MassLaw::uniform(1.0, 1.0).unwrap();
        spec.beta_profile = Profile::Constant(2.0);
        let real = sample_masses(&spec, 1).unwrap();
        let prof = discretize_profiles(&spec, n);
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let (_, c_rr) = initial_covariances(&basis, &real, &prof, true);
        for x in n / 4..3 * n / 4 {
            assert!((c_rr[(x, x)] - 0.5).abs() < 5e-3, "bulk C_rr(x,x) {}", c_rr[(x, x)]);
        }
    }

    #[test]
    fn covariance_diagonals_match_matrix_function_route() {
        let n = 32;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 9).unwrap();
        let prof = discretize_profiles(&spec, n);
        let (a_p, a_r) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let (c_pp, c_rr) = initial_covariances(&basis, &real, &prof, false);
        // the occupation weight w(γ) equals f(γ²/4), so the matrix function
        // acts on the quarter-scaled operators
        let fp = matrix_function_spectral(&a_p.scaled(0.25), xcothx_sqrt).unwrap();
        let fr = matrix_function_spectral(&a_r.scaled(0.25), xcothx_sqrt).unwrap();
        let lambda_sq = 1.0 / (0..n).map(|x| real.masses[x] / prof.beta_x[x]).sum::<f64>();
        for x in 0..n {
            let psi0_sq = lambda_sq * real.masses[x] / prof.beta_x[x];
            let from_fn = (fp[(x, x)] - psi0_sq) / prof.beta_x[x];
            let from_modes = c_pp[(x, x)] / real.masses[x];
            assert!((from_fn - from_modes).abs() < 1e-9, "p side at {x}");
        }
        for x in 0..n - 1 {
            let from_fn = fr[(x, x)] / prof.beta_x[x];
            assert!((from_fn - c_rr[(x, x)]).abs() < 1e-9, "r side at {x}");
        }
    }

    #[test]
    fn thermal_energy_contract() {
        let n = 48;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 10).unwrap();
        let prof = discretize_profiles(&spec, n);
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let mbar = spec.mbar();
        let quantum = gibbs_state(&basis, &real, &prof, mbar, false);
        let classical = gibbs_state(&basis, &real, &prof, mbar, true);
        for x in 1..=n {
            let q = site_thermal_energy(&quantum, &real, x);
            let c = site_thermal_energy(&classical, &real, x);
            assert!(q >= c - 1e-12, "quantum {q} < classical {c} at site {x}");
            assert!(q < 10.0, "unbounded energy at {x}");
        }
    }

    #[test]
    fn matrix_function_identity_and_constant() {
        let spec = disordered_spec(32);
        let real = sample_masses(&spec, 2).unwrap();
        let prof = discretize_profiles(&spec, 32);
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let ident = matrix_function_spectral(&a_p, |z| z).unwrap();
        let scale = a_p.norm_inf();
        for i in 0..32 {
            for j in 0..32 {
                assert!((ident[(i, j)] - a_p.get(i, j)).abs() < 1e-11 * scale);
            }
        }
        let one = matrix_function_spectral(&a_p, |_| 1.0).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((one[(i, j)] - expect).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn taylor_coefficients_exact_values() {
        let a = taylor_xcothx_coeffs(30).unwrap();
        assert_eq!(a[0], 1.0);
        assert!((a[1] - 1.0 / 3.0).abs() < 1e-16);
        assert!((a[2] + 1.0 / 45.0).abs() < 1e-17);
        // scalar convergence at z = 1: Σ a_k → coth(1)
        let sum: f64 = a.iter().rev().sum();
        let coth1 = 1.0f64 / 1.0f64.tanh();
        assert!((sum - coth1).abs() < 1e-12, "sum {sum} vs {coth1}");
        assert!(taylor_xcothx_coeffs(201).is_err());
    }

    #[test]
    fn recentered_series_zeroth_order_is_f_of_alpha() {
        for alpha in [0.5, 1.0, 3.0] {
            let (b, _) = taylor_recentered(alpha, 0).unwrap();
            assert!((b[0] - xcothx_sqrt(alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn recentered_remainder_decreases_geometrically() {
        let alpha = 2.0;
        let rho = alpha / (alpha + 1.0);
        let mut prev = f64::INFINITY;
        for k in [4usize, 8, 16, 32] {
            let (_, bound) = taylor_recentered(alpha, k).unwrap();
            assert!(bound < prev);
            prev = bound;
        }
        let (_, b8) = taylor_recentered(alpha, 8).unwrap();
        let (_, b9) = taylor_recentered(alpha, 9).unwrap();
        assert!((b9 / b8 - rho).abs() < 1e-12);
    }

    #[test]
    fn scalar_recentered_series_converges_to_f() {
        // evaluate the truncated recentered series at scalar points
        let alpha = 1.5;
        let (b, bound) = taylor_recentered(alpha, 60).unwrap();
        for z in [0.1, 1.0, 2.5, 3.0] {
            let mut acc = 0.0;
            for (j, &bj) in b.iter().enumerate().rev() {
                acc += bj * (z - alpha).powi(j as i32);
            }
            assert!((acc - xcothx_sqrt(z)).abs() <= bound + 1e-12, "z={z}");
            assert!((acc - xcothx_sqrt(z)).abs() < 1e-10, "z={z}: {acc}");
        }
    }

    #[test]
    fn taylor_matrix_route_matches_spectral() {
        let n = 64;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 14).unwrap();
        let prof = discretize_profiles(&spec, n);
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let a = a_p.scaled(0.25);
        let alpha = default_taylor_center(&real, &prof);
        let dense = matrix_function_taylor(&a, alpha, 80).unwrap();
        let spectral = matrix_function_spectral(&a, xcothx_sqrt).unwrap();
        for x in 0..n {
            assert!(
                (dense[(x, x)] - spectral[(x, x)]).abs() < 1e-8,
                "diag deviation at {x}"
            );
        }
        let diag = matrix_function_diag_taylor(&a, alpha, 80).unwrap();
        for x in 0..n {
            assert!((diag[x] - dense[(x, x)]).abs() < 1e-12, "banded diag at {x}");
        }
    }

    #[test]
    fn taylor_domain_check_rejects_wide_spectrum() {
        let t = crate::chain::TridiagonalOperator::new(vec![30.0, 30.0], vec![0.0]);
        assert!(matrix_function_taylor(&t, 1.0, 8).is_err());
    }

    #[test]
    fn locality_interval_examples() {
        assert_eq!(locality_interval(5, 4, 100), (3, 7));
        assert_eq!(locality_interval(1, 10, 100), (1, 6));
        assert_eq!(locality_interval(7, 0, 100), (7, 7));
    }

    #[test]
    fn path_oracle_low_orders() {
        let spec = disordered_spec(16);
        let real = sample_masses(&spec, 8).unwrap();
        let prof = discretize_profiles(&spec, 16);
        let (t, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        for x in [1usize, 5, 16] {
            let i = x - 1;
            assert!((diag_power_oracle(&t, x, 1).unwrap() - t.diag[i]).abs() < 1e-15);
            let mut expect2 = t.diag[i] * t.diag[i];
            if i > 0 {
                expect2 += t.offdiag[i - 1] * t.offdiag[i - 1];
            }
            if i + 1 < 16 {
                expect2 += t.offdiag[i] * t.offdiag[i];
            }
            assert!((diag_power_oracle(&t, x, 2).unwrap() - expect2).abs() < 1e-14);
        }
        assert!(diag_power_oracle(&t, 1, 13).is_err());
    }

    #[test]
    fn path_oracle_matches_matrix_powers() {
        let n = 32;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 23).unwrap();
        let prof = discretize_profiles(&spec, n);
        let (t, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        for x in [1usize, 7, 16, 32] {
            // repeated tridiagonal application to e_x
            let mut v = vec![0.0; n];
            v[x - 1] = 1.0;
            let mut out = vec![0.0; n];
            for k in 1..=8usize {
                t.matvec(&v, &mut out);
                std::mem::swap(&mut v, &mut out);
                let oracle = diag_power_oracle(&t, x, k).unwrap();
                let direct = v[x - 1];
                let scale = direct.abs().max(1.0);
                assert!((oracle - direct).abs() <= 1e-10 * scale, "x={x}, k={k}");
            }
        }
    }

    #[test]
    fn locality_of_diagonal_matrix_powers() {
        let n = 32;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 40).unwrap();
        let prof = discretize_profiles(&spec, n);
        let x = 16usize;
        for k in [2usize, 4, 8] {
            let (t, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
            let base = diag_power_oracle(&t, x, k).unwrap();
            // perturbing far-away masses leaves ⟨x, T^k x⟩ unchanged
            let far = x + k / 2 + 2;
            let shifted = perturb_mass(&real, far, 0.1).unwrap();
            let (t2, _) = crate::chain::build_gibbs_operators(&shifted, &prof).unwrap();
            let perturbed = diag_power_oracle(&t2, x, k).unwrap();
            assert!(
                (perturbed - base).abs() <= 1e-14 * base.abs(),
                "k={k}: leaked dependence"
            );
            // perturbing the site itself changes the value
            let near = perturb_mass(&real, x, 0.1).unwrap();
            let (t3, _) = crate::chain::build_gibbs_operators(&near, &prof).unwrap();
            assert!((diag_power_oracle(&t3, x, k).unwrap() - base).abs() > 1e-10);
        }
    }

    #[test]
    fn energy_routes_agree() {
        let n = 64;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 30).unwrap();
        let prof = discretize_profiles(&spec, n);
        let spectral = site_thermal_energies(&real, &prof, false, EnergyRoute::Spectral).unwrap();
        let taylor = site_thermal_energies(&real, &prof, false, EnergyRoute::Taylor).unwrap();
        for x in 0..n {
            assert!((spectral[x] - taylor[x]).abs() < 1e-9, "site {x}");
        }
    }

    #[test]
    fn classical_energies_need_no_linear_algebra_and_match_mode_sum() {
        let n = 48;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 33).unwrap();
        let prof = discretize_profiles(&spec, n);
        let closed = site_thermal_energies(&real, &prof, true, EnergyRoute::Taylor).unwrap();
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let state = gibbs_state(&basis, &real, &prof, spec.mbar(), true);
        for x in 1..=n {
            let mode_sum = site_thermal_energy(&state, &real, x);
            assert!((closed[x - 1] - mode_sum).abs() < 1e-9, "site {x}");
        }
    }

    #[test]
    fn energies_match_mode_sum_quantum() {
        let n = 48;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 34).unwrap();
        let prof = discretize_profiles(&spec, n);
        let routes = site_thermal_energies(&real, &prof, false, EnergyRoute::Spectral).unwrap();
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let state = gibbs_state(&basis, &real, &prof, spec.mbar(), false);
        for x in 1..=n {
            let mode_sum = site_thermal_energy(&state, &real, x);
            assert!((routes[x - 1] - mode_sum).abs() < 1e-9, "site {x}");
        }
    }

    #[test]
    fn covariance_blocks_positive_semidefinite() {
        let n = 64;
        let spec = disordered_spec(n);
        let real = sample_masses(&spec, 51).unwrap();
        let prof = discretize_profiles(&spec, n);
        let (a_p, _) = crate::chain::build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let (c_pp, c_rr) = initial_covariances(&basis, &real, &prof, false);
        for block in [c_pp, c_rr] {
            let eig = block.symmetric_eigen();
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
            assert!(min >= -1e-10 * max.max(1.0), "negative covariance eigenvalue {min}");
        }
    }
}
