//! Exact Heisenberg evolution at hyperbolic scaling.
//!
//! In the eigenbasis of A_p⁰ the chain decouples into harmonic modes; the
//! evolution of the Gaussian state is a family of independent 2×2 rotations
//! by angles θ_k = ω_k·n^s·t (s = 1 is the hyperbolic scale). There is no
//! time-stepping anywhere: means and covariance blocks are rotated in mode
//! space and converted back to the site basis only at requested times.

use crate::chain::DisorderRealization;
use crate::error::Result;
use crate::gibbs::GaussianState;
use crate::spectral::ModeBasis;
use nalgebra::{DMatrix, DVector};

/// Frozen ingredients of an evolution run: the β≡1 mode basis (frequencies
/// ω_k, families φ^k/φ̃^k), the size, the macroscopic times of interest, and
/// the time-scale exponent s in θ_k = ω_k·n^s·t.
#[derive(Debug, Clone)]
pub struct EvolutionPlan {
    pub n: usize,
    pub basis0: ModeBasis,
    pub macro_times: Vec<f64>,
    pub time_scale_exponent: f64,
}

impl EvolutionPlan {
    pub fn new(basis0: ModeBasis, macro_times: Vec<f64>, time_scale_exponent: f64) -> Self {
        let n = basis0.dim();
        debug_assert!(macro_times.windows(2).all(|w| w[0] <= w[1]), "macro_times must be sorted");
        EvolutionPlan { n, basis0, macro_times, time_scale_exponent }
    }

    pub fn angle(&self, k: usize, t_macro: f64) -> f64 {
        self.basis0.frequencies[k] * (self.n as f64).powf(self.time_scale_exponent) * t_macro
    }
}

/// The state in mode coordinates: u_k = ⟨M^{-1/2}φ^k, p⟩, v_k = ⟨φ̃^k, r⟩
/// (v₀ ≡ 0 pads the missing zero mode on the elongation side), plus the
/// covariance blocks Σ_uu, Σ_vv, Σ_uv of the fluctuations in the same basis.
/// Σ_uv(k,l) = cov(u_k, v_l) is not symmetric.
#[derive(Debug, Clone)]
pub struct ModeCoordinates {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub suu: DMatrix<f64>,
    pub svv: DMatrix<f64>,
    pub suv: DMatrix<f64>,
}

/// Forward change of basis. The covariance blocks are conjugated by the same
/// maps as the means; the elongation-side index 0 row/column stays zero.
pub fn to_mode_coordinates(
    state: &GaussianState,
    plan: &EvolutionPlan,
    real: &DisorderRealization,
) -> ModeCoordinates {
    let n = plan.n;
    assert_eq!(real.n(), n);
    let phi = &plan.basis0.momentum;
    let phit = &plan.basis0.elongation;
    let m = &real.masses;

    // u = Φᵀ M^{-1/2} mean_p
    let mut scaled_p = state.mean_p.clone();
    for x in 0..n {
        scaled_p[x] /= m[x].sqrt();
    }
    let u = phi.transpose() * scaled_p;

    // v_k = ⟨φ̃^k, mean_r⟩, k ≥ 1
    let v_inner = phit.transpose() * &state.mean_r;
    let mut v = DVector::zeros(n);
    for k in 1..n {
        v[k] = v_inner[k - 1];
    }

    // Σuu = Φᵀ M^{-1/2} C_pp M^{-1/2} Φ
    let mut cpp = state.c_pp.clone();
    for x in 0..n {
        for y in 0..n {
            cpp[(x, y)] /= (m[x] * m[y]).sqrt();
        }
    }
    let suu = phi.transpose() * cpp * phi;

    // Σvv (index 0 zero-padded)
    let svv_inner = phit.transpose() * &state.c_rr * phit;
    let mut svv = DMatrix::zeros(n, n);
    for k in 1..n {
        for l in 1..n {
            svv[(k, l)] = svv_inner[(k - 1, l - 1)];
        }
    }

    // Σuv(k,l) = cov(u_k, v_l) from the cross block
    let mut cpr = state.c_pr.clone();
    for x in 0..n {
        for y in 0..n - 1 {
            cpr[(x, y)] /= m[x].sqrt();
        }
    }
    let suv_inner = phi.transpose() * cpr * phit;
    let mut suv = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 1..n {
            suv[(k, l)] = suv_inner[(k, l - 1)];
        }
    }
    ModeCoordinates { u, v, suu, svv, suv }
}

/// Rotate every mode pair by θ_k = ω_k·n^s·t: u' = cosθ·u − sinθ·v,
/// v' = cosθ·v + sinθ·u, covariance blocks conjugated by the same rotations.
/// Exact for any t; composition of evolutions is an evolution.
pub fn evolve(coords: &ModeCoordinates, plan: &EvolutionPlan, t_macro: f64) -> ModeCoordinates {
    let n = plan.n;
    let (c, s): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|k| {
            let th = plan.angle(k, t_macro);
            (th.cos(), th.sin())
        })
        .unzip();
    let mut u = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    for k in 0..n {
        u[k] = c[k] * coords.u[k] - s[k] * coords.v[k];
        v[k] = c[k] * coords.v[k] + s[k] * coords.u[k];
    }
    let mut suu = DMatrix::zeros(n, n);
    let mut svv = DMatrix::zeros(n, n);
    let mut suv = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let uu = coords.suu[(k, l)];
            let vv = coords.svv[(k, l)];
            let uv = coords.suv[(k, l)];
            let vu = coords.suv[(l, k)];
            suu[(k, l)] = c[k] * c[l] * uu + s[k] * s[l] * vv - c[k] * s[l] * uv - s[k] * c[l] * vu;
            svv[(k, l)] = c[k] * c[l] * vv + s[k] * s[l] * uu + c[k] * s[l] * vu + s[k] * c[l] * uv;
            suv[(k, l)] = c[k] * c[l] * uv + c[k] * s[l] * uu - s[k] * c[l] * vv - s[k] * s[l] * vu;
        }
    }
    ModeCoordinates { u, v, suu, svv, suv }
}

/// Inverse change of basis: mean_p = M^{1/2}Φu, mean_r = Σ_{k≥1} v_k φ̃^k,
/// covariances conjugated back.
pub fn from_mode_coordinates(
    coords: &ModeCoordinates,
    plan: &EvolutionPlan,
    real: &DisorderRealization,
) -> GaussianState {
    let n = plan.n;
    let phi = &plan.basis0.momentum;
    let phit = &plan.basis0.elongation;
    let m = &real.masses;

    let mut mean_p = phi * &coords.u;
    for x in 0..n {
        mean_p[x] *= m[x].sqrt();
    }
    let v_inner = DVector::from_fn(n - 1, |k, _| coords.v[k + 1]);
    let mean_r = phit * v_inner;

    let mut c_pp = phi * &coords.suu * phi.transpose();
    for x in 0..n {
        for y in 0..n {
            c_pp[(x, y)] *= (m[x] * m[y]).sqrt();
        }
    }
    let svv_inner = DMatrix::from_fn(n - 1, n - 1, |k, l, | coords.svv[(k + 1, l + 1)]);
    let c_rr = phit * svv_inner * phit.transpose();

    let suv_inner = DMatrix::from_fn(n, n - 1, |k, l| coords.suv[(k, l + 1)]);
    let mut c_pr = phi * suv_inner * phit.transpose();
    for x in 0..n {
        for y in 0..n - 1 {
            c_pr[(x, y)] *= m[x].sqrt();
        }
    }
    GaussianState { mean_p, mean_r, c_pp, c_rr, c_pr }
}

/// The conserved functionals of the averaged dynamics:
/// H̄_n = Σ p̄_x²/(2m_x) + Σ r̄_x²/2 and the gradient form
/// Ī_n = ½⟨∇₋r̄, M^{-1}∇₋r̄⟩ + ½|∇₊M^{-1}p̄|².
pub fn conserved_quantities(
    mean_p: &DVector<f64>,
    mean_r: &DVector<f64>,
    real: &DisorderRealization,
) -> (f64, f64) {
    let n = real.n();
    let m = &real.masses;
    let mut h = 0.0;
    for x in 0..n {
        h += mean_p[x] * mean_p[x] / (2.0 * m[x]);
    }
    for x in 0..n - 1 {
        h += 0.5 * mean_r[x] * mean_r[x];
    }
    // (∇₋r)_x = r_x − r_{x−1} with r_0 = r_n = 0, x = 1..n
    let mut i_bar = 0.0;
    for x in 0..n {
        let left = if x == 0 { 0.0 } else { mean_r[x - 1] };
        let right = if x < n - 1 { mean_r[x] } else { 0.0 };
        let grad = right - left;
        i_bar += 0.5 * grad * grad / m[x];
    }
    // (∇₊M^{-1}p)_x = p_{x+1}/m_{x+1} − p_x/m_x, x = 1..n−1
    for x in 0..n - 1 {
        let grad = mean_p[x + 1] / m[x + 1] - mean_p[x] / m[x];
        i_bar += 0.5 * grad * grad;
    }
    (h, i_bar)
}

/// Output of [`mode_split_functionals`]: the thermal functional T_n^g split
/// across low modes (k ≤ n^{1−α}), high modes, and the cross term, plus the
/// mechanical functional K_n^g of the means.
#[derive(Debug, Clone, Copy)]
pub struct ModeSplit {
    pub low: f64,
    pub high: f64,
    pub cross: f64,
    pub total: f64,
    pub mechanical: f64,
}

/// T_n^g(t) = (1/n)Σ_x g(x/n)·(C_pp(x,x)/(2m_x) + C_rr(x,x)/2) split by the
/// mode cutoff k* = n^{1−α}, plus K_n^g(t) from the means. The split is
/// computed from partitioned mode blocks, so low + high + cross = total holds
/// to rounding.
pub fn mode_split_functionals(
    coords: &ModeCoordinates,
    plan: &EvolutionPlan,
    real: &DisorderRealization,
    g: impl Fn(f64) -> f64,
    alpha: f64,
) -> ModeSplit {
    assert!(alpha > 0.0 && alpha < 1.0, "split exponent must be in (0,1)");
    let n = plan.n;
    let m = &real.masses;
    let phi = &plan.basis0.momentum;
    let phit = &plan.basis0.elongation;
    let cutoff = (n as f64).powf(1.0 - alpha).floor() as usize;

    let gx: Vec<f64> = (1..=n).map(|x| g(x as f64 / n as f64)).collect();

    // site-diagonal contribution of a (k,l) mode block through basis B:
    // d(x) = Σ_{k,l∈block} B_{xk} Σ_{kl} B_{xl}; accumulated via one gemm per
    // partition pair. The p-side weight is m_x·(1/2m_x) = 1/2; the r-side 1/2.
    let half = |sel_k: &dyn Fn(usize) -> bool, sel_l: &dyn Fn(usize) -> bool| -> f64 {
        // p side: Φ is n×n over modes 0..n−1
        let mut acc = 0.0;
        let mut left = DMatrix::zeros(n, n);
        for k in 0..n {
            if sel_k(k) {
                for l in 0..n {
                    if sel_l(l) {
                        left[(k, l)] = coords.suu[(k, l)];
                    }
                }
            }
        }
        let prod = phi * left; // n×n
        for x in 0..n {
            let mut d = 0.0;
            for l in 0..n {
                d += prod[(x, l)] * phi[(x, l)];
            }
            acc += gx[x] * 0.5 * d;
        }
        // r side: Φ̃ is (n−1)×(n−1) over modes 1..n−1
        let mut leftr = DMatrix::zeros(n - 1, n - 1);
        for k in 1..n {
            if sel_k(k) {
                for l in 1..n {
                    if sel_l(l) {
                        leftr[(k - 1, l - 1)] = coords.svv[(k, l)];
                    }
                }
            }
        }
        let prodr = phit * leftr;
        for x in 0..n - 1 {
            let mut d = 0.0;
            for l in 0..n - 1 {
                d += prodr[(x, l)] * phit[(x, l)];
            }
            acc += gx[x] * 0.5 * d;
        }
        acc / n as f64
    };

    let is_low = |k: usize| k <= cutoff;
    let is_high = |k: usize| k > cutoff;
    let all = |_k: usize| true;
    let low = half(&is_low, &is_low);
    let high = half(&is_high, &is_high);
    let total = half(&all, &all);
    let cross = 2.0 * half(&is_low, &is_high);

    let mut mech = 0.0;
    // reconstruct site means for the mechanical part
    let state = from_mode_coordinates(coords, plan, real);
    for x in 0..n {
        let mut e = state.mean_p[x] * state.mean_p[x] / (2.0 * m[x]);
        if x < n - 1 {
            e += 0.5 * state.mean_r[x] * state.mean_r[x];
        }
        mech += gx[x] * e;
    }
    mech /= n as f64;

    ModeSplit { low, high, cross, total, mechanical: mech }
}

/// Site thermal-energy diagonal at the current mode coordinates, without
/// assembling full covariance blocks in the site basis (one gemm per side).
/// The mass factors cancel in C_pp(x,x)/(2m_x), so no realization is needed.
pub fn thermal_energy_sites(coords: &ModeCoordinates, plan: &EvolutionPlan) -> Vec<f64> {
    let n = plan.n;
    let phi = &plan.basis0.momentum;
    let phit = &plan.basis0.elongation;
    let prod = phi * &coords.suu;
    let svv_inner = DMatrix::from_fn(n - 1, n - 1, |k, l| coords.svv[(k + 1, l + 1)]);
    let prodr = phit * svv_inner;
    (0..n)
        .map(|x| {
            let mut dp = 0.0;
            for l in 0..n {
                dp += prod[(x, l)] * phi[(x, l)];
            }
            // C_pp(x,x)/(2 m_x) = m_x·[ΦΣΦᵀ]_xx/(2m_x)
            let mut e = 0.5 * dp;
            if x < n - 1 {
                let mut dr = 0.0;
                for l in 0..n - 1 {
                    dr += prodr[(x, l)] * phit[(x, l)];
                }
                e += 0.5 * dr;
            }
            e
        })
        .collect()
}

/// Max Hölder-½ difference ratios of the evolved means over a trajectory:
/// max over x≠x' of |r̄_x − r̄_{x'}|·√n/√|x−x'| and the p̄/m analogue, plus
/// the sup-norm of r̄. Reported for regression across n.
#[derive(Debug, Clone, Copy)]
pub struct HolderReport {
    pub r_ratio: f64,
    pub p_ratio: f64,
    pub r_sup: f64,
}

pub fn holder_check(
    trajectory: &[(DVector<f64>, DVector<f64>)],
    real: &DisorderRealization,
) -> HolderReport {
    let n = real.n();
    let m = &real.masses;
    let mut r_ratio = 0.0f64;
    let mut p_ratio = 0.0f64;
    let mut r_sup = 0.0f64;
    for (mean_p, mean_r) in trajectory {
        for x in 0..n - 1 {
            r_sup = r_sup.max(mean_r[x].abs());
            for y in x + 1..n - 1 {
                let scale = ((n as f64) / (y - x) as f64).sqrt();
                r_ratio = r_ratio.max((mean_r[x] - mean_r[y]).abs() * scale);
            }
        }
        for x in 0..n {
            for y in x + 1..n {
                let scale = ((n as f64) / (y - x) as f64).sqrt();
                p_ratio = p_ratio.max((mean_p[x] / m[x] - mean_p[y] / m[y]).abs() * scale);
            }
        }
    }
    HolderReport { r_ratio, p_ratio, r_sup }
}

/// Convenience: build the plan, move a Gibbs state to mode coordinates,
/// evolve to each requested time, and hand the site-basis state to `sink`.
pub fn run_trajectory(
    state0: &GaussianState,
    plan: &EvolutionPlan,
    real: &DisorderRealization,
    mut sink: impl FnMut(f64, &GaussianState) -> Result<()>,
) -> Result<()> {
    let coords0 = to_mode_coordinates(state0, plan, real);
    for &t in &plan.macro_times {
        let coords = evolve(&coords0, plan, t);
        let state = from_mode_coordinates(&coords, plan, real);
        sink(t, &state)?;
    }
    Ok(())
}
