//! Full eigendecomposition of symmetric tridiagonal operators and the paired
//! mode families (momentum-type / elongation-type) they generate.
//!
//! The primary path is an implicit-shift QL sweep with accumulated rotations
//! (the classic tql2/tqli algorithm). If it fails to converge — in practice
//! only for pathological input — a Sturm-count bisection plus inverse
//! iteration fallback computes the full spectrum instead; the fallback is
//! also kept as an independent oracle for clustered low frequencies.

use crate::chain::{DiscretizedProfiles, DisorderRealization, TridiagonalOperator};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Eigen-data of the momentum-side operator together with its gradient-linked
/// elongation family.
///
/// `frequencies[k] = γ_k` (= square roots of eigenvalues, ascending, γ₀ = 0
/// pinned exactly). `momentum` holds ψ^k as column k (length n); `elongation`
/// holds ψ̃^k as column k−1 (length n−1), defined for k ≥ 1 by
/// `ψ̃^k = (1/γ_k)(β°)^{1/2}∇₊M_β^{-1/2}ψ^k` and re-orthonormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    pub frequencies: Vec<f64>,
    pub momentum: DMatrix<f64>,
    pub elongation: DMatrix<f64>,
}

impl ModeBasis {
    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }
}

fn hypot(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// One implicit-shift QL sweep over the whole matrix. `d` holds the diagonal,
/// `e[i]` the coupling (i, i+1) with a spare slot e[n−1]; `z` accumulates the
/// rotations. Returns Err with the stuck index if an eigenvalue needs more
/// than 50 iterations.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> std::result::Result<(), usize> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // look for a single small subdiagonal element to split the matrix
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(l);
            }
            // form the implicit shift from the leading 2×2
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(if g >= 0.0 { 1.0 } else { -1.0 }));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    // recover from underflow by deflating early
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Number of eigenvalues of T strictly below x (Sturm sequence count).
pub(crate) fn sturm_count(t: &TridiagonalOperator, x: f64) -> usize {
    let n = t.dim();
    let mut count = 0;
    let mut q = t.diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let denom = if q.abs() < f64::MIN_POSITIVE.sqrt() {
            f64::MIN_POSITIVE.sqrt().copysign(if q < 0.0 { -1.0 } else { 1.0 })
        } else {
            q
        };
        q = t.diag[i] - x - t.offdiag[i - 1] * t.offdiag[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues by bisection on the Sturm count, ascending, to close to
/// machine precision. Independent of the QL path.
pub fn bisect_eigenvalues(t: &TridiagonalOperator) -> Vec<f64> {
    let n = t.dim();
    let bound = t.norm_inf() + 1.0;
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let mut lo = -bound;
        let mut hi = bound;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(t, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * bound {
                break;
            }
        }
        vals.push(0.5 * (lo + hi));
    }
    vals
}

/// Solve (T − λI)v = b in place by tridiagonal LU with partial pivoting
/// (row swaps create one extra superdiagonal of fill-in).
fn shifted_solve(t: &TridiagonalOperator, lambda: f64, b: &mut [f64]) {
    let n = t.dim();
    let mut dl: Vec<f64> = t.offdiag.clone(); // becomes multipliers
    let mut d: Vec<f64> = (0..n).map(|i| t.diag[i] - lambda).collect();
    let mut du: Vec<f64> = t.offdiag.clone();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    let tiny = f64::MIN_POSITIVE.sqrt();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let pivot = if d[i] == 0.0 { tiny } else { d[i] };
            let fact = dl[i] / pivot;
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            du[i] = temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    for i in 0..n - 1 {
        if swapped[i] {
            b.swap(i, i + 1);
        }
        b[i + 1] -= dl[i] * b[i];
    }
    let safe = |x: f64| if x == 0.0 { tiny } else { x };
    b[n - 1] /= safe(d[n - 1]);
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / safe(d[n - 2]);
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / safe(d[i]);
    }
}

/// Inverse iteration for the eigenvector at `lambda`, orthogonalized against
/// `prev` (vectors of the same cluster).
fn inverse_iteration(
    t: &TridiagonalOperator,
    lambda: f64,
    prev: &[Vec<f64>],
) -> Vec<f64> {
    let n = t.dim();
    // deterministic, mildly irregular start vector
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.7391) + 0.31).sin())
        .collect();
    // shift nudged off the exact eigenvalue to keep the solve finite
    let scale = t.norm_inf().max(1.0);
    let shift = lambda + scale * 1e-13;
    for _ in 0..3 {
        for p in prev {
            let dot: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
            for (vi, pi) in v.iter_mut().zip(p) {
                *vi -= dot * pi;
            }
        }
        shifted_solve(t, shift, &mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for vi in v.iter_mut() {
            *vi /= norm;
        }
    }
    for p in prev {
        let dot: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
        for (vi, pi) in v.iter_mut().zip(p) {
            *vi -= dot * pi;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    v
}

/// Full decomposition by bisection + inverse iteration. Used as the fallback
/// when QL stalls and as a test oracle.
pub fn eigh_bisection(t: &TridiagonalOperator) -> (Vec<f64>, DMatrix<f64>) {
    let n = t.dim();
    let vals = bisect_eigenvalues(t);
    let scale = t.norm_inf().max(1.0);
    let cluster_tol = 1e-13 * scale;
    let mut vecs = DMatrix::zeros(n, n);
    let mut cluster: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        if k > 0 && (vals[k] - vals[k - 1]).abs() > cluster_tol {
            cluster.clear();
        }
        let v = inverse_iteration(t, vals[k], &cluster);
        for i in 0..n {
            vecs[(i, k)] = v[i];
        }
        cluster.push(v);
    }
    (vals, vecs)
}

/// Deterministic sign convention: the first component of largest magnitude is
/// made positive, column by column.
fn fix_signs(vecs: &mut DMatrix<f64>) {
    let (n, cols) = (vecs.nrows(), vecs.ncols());
    for k in 0..cols {
        let mut best = 0;
        let mut best_abs = 0.0;
        for i in 0..n {
            let a = vecs[(i, k)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if vecs[(best, k)] < 0.0 {
            for i in 0..n {
                vecs[(i, k)] = -vecs[(i, k)];
            }
        }
    }
}

/// Full eigendecomposition of a symmetric tridiagonal operator: ascending
/// eigenvalues and orthonormal eigenvectors (columns), deterministic signs.
pub fn eigh_tridiagonal(t: &TridiagonalOperator) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = t.dim();
    let mut d = t.diag.clone();
    let mut e = t.offdiag.clone();
    e.push(0.0);
    let mut z = DMatrix::identity(n, n);
    let (mut vals, mut vecs) = match tql2(&mut d, &mut e, &mut z) {
        Ok(()) => (d, z),
        Err(_stuck) => eigh_bisection(t),
    };
    // sort ascending, permuting columns alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = DMatrix::zeros(n, n);
    for (kk, &src) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[(i, kk)] = vecs[(i, src)];
        }
    }
    vals = sorted_vals;
    vecs = sorted_vecs;
    fix_signs(&mut vecs);

    // residual guard: ‖Tv − λv‖ per pair
    let tol = 1e-11 * t.norm_inf().max(1.0);
    let mut tv = vec![0.0; n];
    let mut col = vec![0.0; n];
    for k in 0..n {
        for i in 0..n {
            col[i] = vecs[(i, k)];
        }
        t.matvec(&col, &mut tv);
        let mut res = 0.0f64;
        for i in 0..n {
            let r = tv[i] - vals[k] * col[i];
            res += r * r;
        }
        if res.sqrt() > tol {
            return Err(Error::numerical(format!(
                "eigenpair {k} residual {:.3e} exceeds {:.3e}",
                res.sqrt(),
                tol
            )));
        }
    }
    Ok((vals, vecs))
}

/// Build the paired mode families from the momentum-side operator.
///
/// `prof = None` means β ≡ 1 (the dynamics side: frequencies ω_k, families
/// φ^k / φ̃^k). γ₀ is snapped to 0 and ψ⁰ replaced by its closed form
/// `(Σ m_x/β_x)^{-1/2} M_β^{1/2} 𝟙`; the elongation family comes from the
/// gradient link and is re-orthonormalized by modified Gram–Schmidt.
pub fn build_mode_basis(
    a_p: &TridiagonalOperator,
    real: &DisorderRealization,
    prof: Option<&DiscretizedProfiles>,
) -> Result<ModeBasis> {
    let n = real.n();
    assert_eq!(a_p.dim(), n, "operator / realization size mismatch");
    let unit = DiscretizedProfiles::unit_beta(n);
    let prof = prof.unwrap_or(&unit);
    let b = &prof.beta_x;
    let m = &real.masses;

    let (vals, mut vecs) = eigh_tridiagonal(a_p)?;
    let scale = a_p.norm_inf().max(1.0);
    if vals[0].abs() > 1e-10 * scale {
        return Err(Error::numerical(format!(
            "expected an exact zero mode; smallest eigenvalue {:.3e}",
            vals[0]
        )));
    }
    let mut frequencies: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    frequencies[0] = 0.0;

    // analytic zero mode ψ⁰ ∝ M_β^{1/2}𝟙
    let lambda = (0..n).map(|x| m[x] / b[x]).sum::<f64>().powf(-0.5);
    for x in 0..n {
        vecs[(x, 0)] = lambda * (m[x] / b[x]).sqrt();
    }

    // gradient link: ψ̃^k_x = (√β_x/γ_k)(ψ^k_{x+1}√(β_{x+1}/m_{x+1}) − ψ^k_x√(β_x/m_x))
    let mut elong = DMatrix::zeros(n - 1, n - 1);
    for k in 1..n {
        let g = frequencies[k];
        for x in 0..n - 1 {
            let right = vecs[(x + 1, k)] * (b[x + 1] / m[x + 1]).sqrt();
            let left = vecs[(x, k)] * (b[x] / m[x]).sqrt();
            elong[(x, k - 1)] = b[x].sqrt() * (right - left) / g;
        }
    }
    // modified Gram–Schmidt pass to absorb rounding in the link
    for k in 0..n - 1 {
        for j in 0..k {
            let mut dot = 0.0;
            for x in 0..n - 1 {
                dot += elong[(x, j)] * elong[(x, k)];
            }
            for x in 0..n - 1 {
                let sub = dot * elong[(x, j)];
                elong[(x, k)] -= sub;
            }
        }
        let mut norm = 0.0f64;
        for x in 0..n - 1 {
            norm += elong[(x, k)] * elong[(x, k)];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(Error::numerical(format!(
                "elongation mode {} vanished during re-orthonormalization",
                k + 1
            )));
        }
        for x in 0..n - 1 {
            elong[(x, k)] /= norm;
        }
    }

    Ok(ModeBasis { frequencies, momentum: vecs, elongation: elong })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{
        build_dynamics_operators, build_gibbs_operators, discretize_profiles, sample_masses,
        ChainSpec, MassLaw, Profile,
    };

    fn disordered_spec(n: usize) -> ChainSpec {
        let mut spec = ChainSpec::default();
        spec.n = n;
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        spec
    }

    #[test]
    fn two_by_two_by_hand() {
        let t = TridiagonalOperator::new(vec![1.0, 1.0], vec![-1.0]);
        let (vals, vecs) = eigh_tridiagonal(&t).unwrap();
        assert!((vals[0] - 0.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        assert!((vecs[(0, 0)] - s).abs() < 1e-12);
        assert!((vecs[(1, 0)] - s).abs() < 1e-12);
        assert!((vecs[(0, 1)] - s).abs() < 1e-12);
        assert!((vecs[(1, 1)] + s).abs() < 1e-12);
    }

    #[test]
    fn clean_chain_spectrum_closed_form() {
        let n = 64usize;
        let masses = vec![1.0; n];
        let real = crate::chain::DisorderRealization { seed: 0, masses };
        let (a_p, _) = build_dynamics_operators(&real);
        let (vals, _) = eigh_tridiagonal(&a_p).unwrap();
        for (k, &v) in vals.iter().enumerate() {
            let exact = 4.0 * ((k as f64) * std::f64::consts::PI / (2.0 * n as f64)).sin().powi(2);
            assert!((v - exact).abs() < 1e-10, "mode {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn already_diagonal_matrix() {
        let t = TridiagonalOperator::new(vec![3.0, 1.0, 2.0], vec![0.0, 0.0]);
        let (vals, vecs) = eigh_tridiagonal(&t).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        // permuted identity: eigenvalue 1 lives at index 1, 2 at index 2, 3 at 0
        for (k, src) in [(0usize, 1usize), (1, 2), (2, 0)] {
            for i in 0..3 {
                let expect = if i == src { 1.0 } else { 0.0 };
                assert!((vecs[(i, k)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bisection_matches_ql_eigenvalues() {
        let spec = disordered_spec(64);
        let real = sample_masses(&spec, 17).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
        let (ql_vals, _) = eigh_tridiagonal(&a_p).unwrap();
        let bi_vals = bisect_eigenvalues(&a_p);
        let scale = a_p.norm_inf();
        for (a, b) in ql_vals.iter().zip(&bi_vals) {
            assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn bisection_route_produces_valid_eigenpairs() {
        let spec = disordered_spec(48);
        let real = sample_masses(&spec, 29).unwrap();
        let (a_p, _) = build_dynamics_operators(&real);
        let (vals, vecs) = eigh_bisection(&a_p);
        let n = a_p.dim();
        let tol = 1e-9 * a_p.norm_inf().max(1.0);
        let mut tv = vec![0.0; n];
        for k in 0..n {
            let col: Vec<f64> = (0..n).map(|i| vecs[(i, k)]).collect();
            a_p.matvec(&col, &mut tv);
            let res: f64 = (0..n).map(|i| (tv[i] - vals[k] * col[i]).powi(2)).sum::<f64>().sqrt();
            assert!(res <= tol, "mode {k} residual {res}");
        }
        // orthonormality
        for k in 0..n {
            for l in k..n {
                let dot: f64 = (0..n).map(|i| vecs[(i, k)] * vecs[(i, l)]).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "({k},{l}) dot {dot}");
            }
        }
    }

    #[test]
    fn eigenvectors_orthonormal_and_residuals_small() {
        let spec = disordered_spec(96);
        let real = sample_masses(&spec, 4).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
        let (_, vecs) = eigh_tridiagonal(&a_p).unwrap();
        let n = a_p.dim();
        let gram = vecs.transpose() * &vecs;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn completeness_of_momentum_family() {
        let spec = disordered_spec(128);
        let real = sample_masses(&spec, 6).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let sum = &basis.momentum * basis.momentum.transpose();
        for i in 0..spec.n {
            for j in 0..spec.n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((sum[(i, j)] - expect).abs() < 1e-9, "completeness at ({i},{j})");
            }
        }
    }

    #[test]
    fn mode_basis_clean_three_sites() {
        let real = crate::chain::DisorderRealization { seed: 0, masses: vec![1.0; 3] };
        let (a_p, _) = build_dynamics_operators(&real);
        let basis = build_mode_basis(&a_p, &real, None).unwrap();
        let s = (1.0f64 / 3.0).sqrt();
        for x in 0..3 {
            assert!((basis.momentum[(x, 0)] - s).abs() < 1e-14);
        }
        assert_eq!(basis.frequencies[0], 0.0);
    }

    #[test]
    fn mode_basis_two_sites() {
        let real = crate::chain::DisorderRealization { seed: 0, masses: vec![1.0, 1.0] };
        let (a_p, _) = build_dynamics_operators(&real);
        let basis = build_mode_basis(&a_p, &real, None).unwrap();
        assert_eq!(basis.frequencies[0], 0.0);
        assert!((basis.frequencies[1] - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((basis.elongation[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_link_consistent_with_direct_ar_diagonalization() {
        let spec = disordered_spec(64);
        let real = sample_masses(&spec, 13).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, a_r) = build_gibbs_operators(&real, &prof).unwrap();
        let basis = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        // same nonzero eigenvalues
        let ar_vals = bisect_eigenvalues(&a_r);
        for k in 1..spec.n {
            let g2 = basis.frequencies[k] * basis.frequencies[k];
            assert!(
                (g2 - ar_vals[k - 1]).abs() <= 1e-9 * a_p.norm_inf(),
                "eigenvalue mismatch at k={k}"
            );
        }
        // each linked mode is an eigenvector of A_rᵝ
        let n = spec.n;
        let mut tv = vec![0.0; n - 1];
        for k in 1..n {
            let col: Vec<f64> = (0..n - 1).map(|x| basis.elongation[(x, k - 1)]).collect();
            a_r.matvec(&col, &mut tv);
            let g2 = basis.frequencies[k] * basis.frequencies[k];
            let res: f64 =
                (0..n - 1).map(|x| (tv[x] - g2 * col[x]).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-8 * a_r.norm_inf().max(1.0), "link residual {res} at k={k}");
        }
    }

    #[test]
    fn spectrum_within_uniform_bound() {
        let mut spec = disordered_spec(128);
        spec.beta_profile = Profile::Cosine { base: 1.0, amplitude: 0.25, k: 1 };
        let real = sample_masses(&spec, 8).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
        let (vals, _) = eigh_tridiagonal(&a_p).unwrap();
        let beta_max = prof.beta_x.iter().cloned().fold(0.0, f64::max);
        let m_min = real.masses.iter().cloned().fold(f64::INFINITY, f64::min);
        let c0 = 4.0 * beta_max * beta_max / m_min;
        assert!(vals[0] >= -1e-12 * c0);
        assert!(*vals.last().unwrap() <= c0 + 1e-12);
    }

    #[test]
    fn decomposition_is_bitwise_deterministic() {
        let spec = disordered_spec(96);
        let real = sample_masses(&spec, 31).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
        let b1 = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        let b2 = build_mode_basis(&a_p, &real, Some(&prof)).unwrap();
        assert_eq!(b1, b2);
    }
}
