//! Disorder sampling, macroscopic profiles, and the tridiagonal operators of
//! the finite chain.
//!
//! The chain has `n` sites with random masses m₁..m_n, free boundaries, and
//! elongation coordinates r₁..r_{n−1}. All operators here are symmetric
//! tridiagonal and come from factoring discrete gradients:
//!
//! * `A_p⁰ = M^{-1/2}(−∇₋∇₊)M^{-1/2}`  (momentum side, size n)
//! * `A_r⁰ = −∇₊M^{-1}∇₋`              (elongation side, size n−1)
//!
//! and their inverse-temperature-weighted versions `A_pᵝ`, `A_rᵝ` with
//! `M_β = diag(m_x/β_x)` and `β° = diag(β₁..β_{n−1})`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Distribution of the i.i.d. masses.
///
/// `Uniform` is the default (exact moments, trivial sampling); `Bump` is a
/// smooth compactly supported density ∝ exp(−1/(1−t²)) on the same interval,
/// matching the smoothness hypothesis used by the localization estimates.
/// Both are symmetric about the midpoint, so `mean()` is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassLawKind {
    Uniform,
    Bump,
}

#[derive(Debug, Clone, Copy)]
pub struct MassLaw {
    pub kind: MassLawKind,
    pub m_min: f64,
    pub m_max: f64,
}

impl MassLaw {
    pub fn uniform(m_min: f64, m_max: f64) -> Result<Self> {
        let law = MassLaw { kind: MassLawKind::Uniform, m_min, m_max };
        law.validate()?;
        Ok(law)
    }

    pub fn bump(m_min: f64, m_max: f64) -> Result<Self> {
        let law = MassLaw { kind: MassLawKind::Bump, m_min, m_max };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_min > 0.0) {
            return Err(Error::config(format!("mass.min must be > 0, got {}", self.m_min)));
        }
        if self.m_max < self.m_min {
            return Err(Error::config(format!(
                "mass.max ({}) must be ≥ mass.min ({})",
                self.m_max, self.m_min
            )));
        }
        Ok(())
    }

    /// E(m_x); exact for both laws by symmetry.
    pub fn mean(&self) -> f64 {
        0.5 * (self.m_min + self.m_max)
    }

    /// Unnormalized density at m (zero outside the support). Used by the
    /// rejection sampler and by numerical normalization checks.
    pub fn density_unnormalized(&self, m: f64) -> f64 {
        if m < self.m_min || m > self.m_max {
            return 0.0;
        }
        match self.kind {
            MassLawKind::Uniform => 1.0,
            MassLawKind::Bump => {
                if self.m_max == self.m_min {
                    return 1.0;
                }
                let t = 2.0 * (m - self.m_min) / (self.m_max - self.m_min) - 1.0;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - t * t)).exp()
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.m_max == self.m_min {
            return self.m_min;
        }
        match self.kind {
            MassLawKind::Uniform => rng.gen_range(self.m_min..=self.m_max),
            MassLawKind::Bump => {
                // rejection against the uniform envelope; density max is e^{-1} at t=0
                let peak = (-1.0f64).exp();
                loop {
                    let m = rng.gen_range(self.m_min..=self.m_max);
                    let u: f64 = rng.gen();
                    if u * peak <= self.density_unnormalized(m) {
                        return m;
                    }
                }
            }
        }
    }
}

/// A macroscopic profile on [0,1], supplied as a named built-in or as
/// tabulated samples with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// base + amplitude·sin(kπy)
    Sine { base: f64, amplitude: f64, k: u32 },
    /// base + amplitude·cos(kπy)
    Cosine { base: f64, amplitude: f64, k: u32 },
    /// base + amplitude·exp(1 − 1/(1−t²)), t = 2(y−center)/width; C^∞, supported
    /// on |y−center| < width/2
    Bump { base: f64, amplitude: f64, center: f64, width: f64 },
    /// equally spaced samples on [0,1] inclusive, linearly interpolated
    Tabulated(Vec<f64>),
}

impl Profile {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Sine { base, amplitude, k } => {
                base + amplitude * (*k as f64 * std::f64::consts::PI * y).sin()
            }
            Profile::Cosine { base, amplitude, k } => {
                base + amplitude * (*k as f64 * std::f64::consts::PI * y).cos()
            }
            Profile::Bump { base, amplitude, center, width } => {
                let t = 2.0 * (y - center) / width;
                if t.abs() >= 1.0 {
                    *base
                } else {
                    base + amplitude * (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            }
            Profile::Tabulated(v) => {
                assert!(v.len() >= 2, "tabulated profile needs ≥ 2 samples");
                let s = y.clamp(0.0, 1.0) * (v.len() - 1) as f64;
                let i = (s.floor() as usize).min(v.len() - 2);
                let frac = s - i as f64;
                v[i] * (1.0 - frac) + v[i + 1] * frac
            }
        }
    }

    /// (min, max) over a fine sampling grid (2^12 + 1 points).
    pub fn range(&self) -> (f64, f64) {
        let grid = 1 << 12;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=grid {
            let v = self.eval(i as f64 / grid as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Complete specification of a chain ensemble: disorder law and the three
/// macroscopic profiles β(·), p̄(·), r̄(·).
#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub n: usize,
    pub mass_law: MassLaw,
    pub beta_profile: Profile,
    pub pbar_profile: Profile,
    pub rbar_profile: Profile,
    pub hbar: f64,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config(format!("n must be ≥ 2, got {}", self.n)));
        }
        self.mass_law.validate()?;
        let (beta_min, _) = self.beta_profile.range();
        if !(beta_min > 0.0) {
            return Err(Error::config(format!(
                "beta profile must be strictly positive; sampled minimum {beta_min}"
            )));
        }
        let r0 = self.rbar_profile.eval(0.0);
        let r1 = self.rbar_profile.eval(1.0);
        if r0.abs() > 1e-12 || r1.abs() > 1e-12 {
            return Err(Error::config(format!(
                "rbar profile must vanish at the boundary: r̄(0)={r0}, r̄(1)={r1}"
            )));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::config(format!("hbar must be > 0, got {}", self.hbar)));
        }
        Ok(())
    }

    pub fn beta_bounds(&self) -> (f64, f64) {
        self.beta_profile.range()
    }

    pub fn mbar(&self) -> f64 {
        self.mass_law.mean()
    }
}

impl Default for ChainSpec {
    /// Default laboratory setup: uniform masses on [0.8, 1.2] (m̄ = 1) and
    /// smooth profiles r̄ = 0.3·sin(πy), p̄ = 0.3·cos(πy),
    /// β = 1 + 0.25·cos(πy).
    fn default() -> Self {
        ChainSpec {
            n: 256,
            mass_law: MassLaw::uniform(0.8, 1.2).unwrap(),
            beta_profile: Profile::Cosine { base: 1.0, amplitude: 0.25, k: 1 },
            pbar_profile: Profile::Cosine { base: 0.0, amplitude: 0.3, k: 1 },
            rbar_profile: Profile::Sine { base: 0.0, amplitude: 0.3, k: 1 },
            hbar: 1.0,
        }
    }
}

/// One sampled mass sequence: the unit of Monte-Carlo work.
#[derive(Debug, Clone)]
pub struct DisorderRealization {
    pub seed: u64,
    pub masses: Vec<f64>,
}

impl DisorderRealization {
    pub fn n(&self) -> usize {
        self.masses.len()
    }
}

/// Derive an independent sub-seed for realization `index` from a base seed
/// (splitmix64 of base ⊕ golden-ratio stride).
pub fn sub_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw `n` i.i.d. masses. Deterministic per (seed, spec).
pub fn sample_masses(spec: &ChainSpec, seed: u64) -> Result<DisorderRealization> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masses = (0..spec.n).map(|_| spec.mass_law.sample(&mut rng)).collect();
    Ok(DisorderRealization { seed, masses })
}

/// Copy of `real` with mass m_y (1-indexed) shifted by `delta`.
pub fn perturb_mass(real: &DisorderRealization, y: usize, delta: f64) -> Result<DisorderRealization> {
    assert!((1..=real.n()).contains(&y), "site index out of range");
    let mut masses = real.masses.clone();
    masses[y - 1] += delta;
    if masses[y - 1] <= 0.0 {
        return Err(Error::config(format!(
            "perturbed mass at site {y} is nonpositive: {}",
            masses[y - 1]
        )));
    }
    Ok(DisorderRealization { seed: real.seed, masses })
}

/// Symmetric tridiagonal matrix given by its diagonal and single off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert_eq!(offdiag.len() + 1, diag.len(), "offdiag must have dim−1 entries");
        TridiagonalOperator { diag, offdiag }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry (i, j), 0-indexed.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.offdiag[i]
        } else if j + 1 == i {
            self.offdiag[j]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        assert_eq!(v.len(), n);
        assert_eq!(out.len(), n);
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.offdiag[i] * v[i + 1];
            }
            out[i] = s;
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.offdiag[i];
                m[(i + 1, i)] = self.offdiag[i];
            }
        }
        m
    }

    /// Entrywise scaled copy c·T.
    pub fn scaled(&self, c: f64) -> Self {
        TridiagonalOperator {
            diag: self.diag.iter().map(|d| c * d).collect(),
            offdiag: self.offdiag.iter().map(|e| c * e).collect(),
        }
    }

    /// ∞-norm (= 1-norm by symmetry); a cheap upper bound on the spectral
    /// radius via Gershgorin.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.offdiag[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }
}

/// Profiles evaluated on the lattice: β_x = β(x/n) for x = 1..n, same for p̄;
/// r̄ at x = 1..n−1.
#[derive(Debug, Clone)]
pub struct DiscretizedProfiles {
    pub beta_x: Vec<f64>,
    pub pbar_x: Vec<f64>,
    pub rbar_x: Vec<f64>,
}

pub fn discretize_profiles(spec: &ChainSpec, n: usize) -> DiscretizedProfiles {
    let beta_x = (1..=n).map(|x| spec.beta_profile.eval(x as f64 / n as f64)).collect();
    let pbar_x = (1..=n).map(|x| spec.pbar_profile.eval(x as f64 / n as f64)).collect();
    let rbar_x = (1..n).map(|x| spec.rbar_profile.eval(x as f64 / n as f64)).collect();
    DiscretizedProfiles { beta_x, pbar_x, rbar_x }
}

impl DiscretizedProfiles {
    /// β ≡ 1 on n sites (the equilibrium convention for the dynamics side).
    pub fn unit_beta(n: usize) -> Self {
        DiscretizedProfiles {
            beta_x: vec![1.0; n],
            pbar_x: vec![0.0; n],
            rbar_x: vec![0.0; n.saturating_sub(1)],
        }
    }
}

/// A_p⁰ (size n) and A_r⁰ (size n−1) for one realization.
///
/// A_p⁰ has first/last diagonal 1/m₁, 1/m_n (free boundary), interior 2/m_x,
/// off-diagonal −1/√(m_x m_{x+1}); A_r⁰ has diagonal 1/m_x + 1/m_{x+1} and
/// off-diagonal −1/m_{x+1}.
pub fn build_dynamics_operators(
    real: &DisorderRealization,
) -> (TridiagonalOperator, TridiagonalOperator) {
    let m = &real.masses;
    let n = m.len();
    let mut dp = vec![0.0; n];
    let mut ep = vec![0.0; n - 1];
    for x in 0..n {
        let left = if x == 0 { 0.0 } else { 1.0 };
        let right = if x == n - 1 { 0.0 } else { 1.0 };
        dp[x] = (left + right) / m[x];
    }
    for x in 0..n - 1 {
        ep[x] = -1.0 / (m[x] * m[x + 1]).sqrt();
    }
    let mut dr = vec![0.0; n - 1];
    let mut er = vec![0.0; n.saturating_sub(2)];
    for x in 0..n - 1 {
        dr[x] = 1.0 / m[x] + 1.0 / m[x + 1];
    }
    for x in 0..n.saturating_sub(2) {
        er[x] = -1.0 / m[x + 1];
    }
    (TridiagonalOperator::new(dp, ep), TridiagonalOperator::new(dr, er))
}

/// A_pᵝ (size n) and A_rᵝ (size n−1), built entrywise from the factored forms
///
/// `A_pᵝ = M_β^{-1/2}(−∇₋β°∇₊)M_β^{-1/2}`,
/// `A_rᵝ = (β°)^{1/2}(−∇₊M_β^{-1}∇₋)(β°)^{1/2}`,
///
/// which make the zero mode M_β^{1/2}𝟙 exact. At constant β both reduce to
/// β² times the β≡1 operators.
pub fn build_gibbs_operators(
    real: &DisorderRealization,
    prof: &DiscretizedProfiles,
) -> Result<(TridiagonalOperator, TridiagonalOperator)> {
    let m = &real.masses;
    let b = &prof.beta_x;
    let n = m.len();
    assert_eq!(b.len(), n, "beta profile / realization size mismatch");
    if let Some(bad) = b.iter().find(|&&v| v <= 0.0) {
        return Err(Error::config(format!("beta_x must be positive, got {bad}")));
    }
    // β° carries β₁..β_{n−1}; the weight matrix M_β = diag(m_x/β_x) uses all n.
    let mut dp = vec![0.0; n];
    let mut ep = vec![0.0; n - 1];
    for x in 0..n {
        let beta_left = if x == 0 { 0.0 } else { b[x - 1] };
        let beta_right = if x == n - 1 { 0.0 } else { b[x] };
        dp[x] = (beta_left + beta_right) * b[x] / m[x];
    }
    for x in 0..n - 1 {
        ep[x] = -b[x] * (b[x] * b[x + 1]).sqrt() / (m[x] * m[x + 1]).sqrt();
    }
    let mut dr = vec![0.0; n - 1];
    let mut er = vec![0.0; n.saturating_sub(2)];
    for x in 0..n - 1 {
        dr[x] = b[x] * (b[x] / m[x] + b[x + 1] / m[x + 1]);
    }
    for x in 0..n.saturating_sub(2) {
        er[x] = -(b[x + 1] / m[x + 1]) * (b[x] * b[x + 1]).sqrt();
    }
    Ok((TridiagonalOperator::new(dp, ep), TridiagonalOperator::new(dr, er)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean_spec(n: usize) -> ChainSpec {
        ChainSpec {
            n,
            mass_law: MassLaw::uniform(1.0, 1.0).unwrap(),
            beta_profile: Profile::Constant(1.0),
            pbar_profile: Profile::Constant(0.0),
            rbar_profile: Profile::Constant(0.0),
            hbar: 1.0,
        }
    }

    #[test]
    fn point_mass_law_gives_clean_chain() {
        let spec = clean_spec(16);
        let real = sample_masses(&spec, 7).unwrap();
        assert!(real.masses.iter().all(|&m| m == 1.0));
    }

    #[test]
    fn sample_mean_obeys_law_of_large_numbers() {
        let mut spec = clean_spec(100_000);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        let real = sample_masses(&spec, 12345).unwrap();
        let mean = real.masses.iter().sum::<f64>() / real.n() as f64;
        // stderr of the sample mean: (0.4/√12)/√n
        let stderr = (0.4 / 12.0f64.sqrt()) / (real.n() as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * stderr, "mean {mean} too far from 1");
        assert!(real.masses.iter().all(|&m| (0.8..=1.2).contains(&m)));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut spec = clean_spec(512);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        let a = sample_masses(&spec, 42).unwrap();
        let b = sample_masses(&spec, 42).unwrap();
        assert_eq!(a.masses, b.masses);
        let c = sample_masses(&spec, 43).unwrap();
        assert_ne!(a.masses, c.masses);
    }

    #[test]
    fn bump_law_stays_in_support_and_is_symmetric() {
        let mut spec = clean_spec(50_000);
        spec.mass_law = MassLaw::bump(0.8, 1.2).unwrap();
        let real = sample_masses(&spec, 9).unwrap();
        assert!(real.masses.iter().all(|&m| (0.8..=1.2).contains(&m)));
        let mean = real.masses.iter().sum::<f64>() / real.n() as f64;
        // the bump density is symmetric about 1 and well concentrated
        assert!((mean - 1.0).abs() < 5e-3, "bump mean {mean}");
    }

    #[test]
    fn invalid_mass_laws_are_rejected() {
        assert!(MassLaw::uniform(0.0, 1.0).is_err());
        assert!(MassLaw::uniform(-1.0, 1.0).is_err());
        assert!(MassLaw::uniform(1.0, 0.5).is_err());
    }

    #[test]
    fn spec_validation_rejects_bad_profiles() {
        let mut spec = clean_spec(8);
        spec.beta_profile = Profile::Cosine { base: 0.2, amplitude: 0.5, k: 1 };
        assert!(spec.validate().is_err());
        let mut spec = clean_spec(8);
        spec.rbar_profile = Profile::Constant(0.5);
        assert!(spec.validate().is_err());
        let mut spec = clean_spec(8);
        spec.n = 1;
        assert!(spec.validate().is_err());
        let mut spec = clean_spec(8);
        spec.hbar = 0.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn dynamics_operators_two_and_three_sites() {
        let real = DisorderRealization { seed: 0, masses: vec![1.0, 1.0] };
        let (a_p, a_r) = build_dynamics_operators(&real);
        assert_eq!(a_p.diag, vec![1.0, 1.0]);
        assert_eq!(a_p.offdiag, vec![-1.0]);
        assert_eq!(a_r.diag, vec![2.0]);
        assert!(a_r.offdiag.is_empty());

        let real = DisorderRealization { seed: 0, masses: vec![1.0, 1.0, 1.0] };
        let (a_p, _) = build_dynamics_operators(&real);
        assert_eq!(a_p.diag, vec![1.0, 2.0, 1.0]);
        assert_eq!(a_p.offdiag, vec![-1.0, -1.0]);
    }

    #[test]
    fn dynamics_zero_mode_annihilated() {
        let mut spec = clean_spec(64);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        let real = sample_masses(&spec, 3).unwrap();
        let (a_p, _) = build_dynamics_operators(&real);
        let v: Vec<f64> = real.masses.iter().map(|m| m.sqrt()).collect();
        let mut out = vec![0.0; real.n()];
        a_p.matvec(&v, &mut out);
        assert!(out.iter().all(|&o| o.abs() <= 1e-12), "zero mode residual {out:?}");
    }

    #[test]
    fn gibbs_zero_mode_annihilated() {
        let mut spec = clean_spec(64);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        spec.beta_profile = Profile::Cosine { base: 1.0, amplitude: 0.25, k: 1 };
        let real = sample_masses(&spec, 11).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
        let v: Vec<f64> = (0..real.n())
            .map(|x| (real.masses[x] / prof.beta_x[x]).sqrt())
            .collect();
        let mut out = vec![0.0; real.n()];
        a_p.matvec(&v, &mut out);
        assert!(out.iter().all(|&o| o.abs() <= 1e-12), "zero mode residual {out:?}");
    }

    #[test]
    fn constant_beta_rescales_dynamics_operators() {
        let mut spec = clean_spec(32);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        spec.beta_profile = Profile::Constant(1.7);
        let real = sample_masses(&spec, 5).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_pb, a_rb) = build_gibbs_operators(&real, &prof).unwrap();
        let (a_p0, a_r0) = build_dynamics_operators(&real);
        let b2 = 1.7f64 * 1.7;
        for x in 0..real.n() {
            assert!((a_pb.diag[x] - b2 * a_p0.diag[x]).abs() < 1e-13);
        }
        for x in 0..real.n() - 1 {
            assert!((a_pb.offdiag[x] - b2 * a_p0.offdiag[x]).abs() < 1e-13);
            assert!((a_rb.diag[x] - b2 * a_r0.diag[x]).abs() < 1e-13);
        }
        for x in 0..real.n() - 2 {
            assert!((a_rb.offdiag[x] - b2 * a_r0.offdiag[x]).abs() < 1e-13);
        }
    }

    #[test]
    fn gibbs_operators_two_sites_equilibrium() {
        let real = DisorderRealization { seed: 0, masses: vec![1.0, 1.0] };
        let prof = DiscretizedProfiles {
            beta_x: vec![1.0, 1.0],
            pbar_x: vec![0.0, 0.0],
            rbar_x: vec![0.0],
        };
        let (a_p, _) = build_gibbs_operators(&real, &prof).unwrap();
        assert_eq!(a_p.diag, vec![1.0, 1.0]);
        assert_eq!(a_p.offdiag, vec![-1.0]);
    }

    /// Dense triple-product oracle: assemble ∇₊, β°, M_β explicitly and
    /// compare the entrywise builders against the products.
    #[test]
    fn gibbs_builders_match_dense_factored_form() {
        let mut spec = clean_spec(24);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        spec.beta_profile = Profile::Sine { base: 1.0, amplitude: 0.4, k: 2 };
        let real = sample_masses(&spec, 77).unwrap();
        let n = real.n();
        let prof = discretize_profiles(&spec, n);
        let b = &prof.beta_x;
        let m = &real.masses;

        // ∇₊: (n−1)×n forward difference, (∇₊v)_x = v_{x+1} − v_x
        let mut grad = DMatrix::<f64>::zeros(n - 1, n);
        for x in 0..n - 1 {
            grad[(x, x)] = -1.0;
            grad[(x, x + 1)] = 1.0;
        }
        let beta_o = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n - 1, |x, _| b[x]));
        let mb_inv_half =
            DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |x, _| (b[x] / m[x]).sqrt()));
        let mb_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |x, _| b[x] / m[x]));
        let beta_o_half =
            DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n - 1, |x, _| b[x].sqrt()));

        // A_pᵝ = M_β^{-1/2} ∇₊ᵀ β° ∇₊ M_β^{-1/2} (−∇₋ = ∇₊ᵀ)
        let ap_dense = &mb_inv_half * grad.transpose() * &beta_o * &grad * &mb_inv_half;
        // A_rᵝ = (β°)^{1/2} ∇₊ M_β^{-1} ∇₊ᵀ (β°)^{1/2}
        let ar_dense = &beta_o_half * &grad * &mb_inv * grad.transpose() * &beta_o_half;

        let (a_p, a_r) = build_gibbs_operators(&real, &prof).unwrap();
        let scale = a_p.norm_inf();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (ap_dense[(i, j)] - a_p.get(i, j)).abs() <= 1e-14 * scale,
                    "A_p mismatch at ({i},{j})"
                );
            }
        }
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                assert!(
                    (ar_dense[(i, j)] - a_r.get(i, j)).abs() <= 1e-14 * scale,
                    "A_r mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn mass_scaling_covariance() {
        let mut spec = clean_spec(16);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        let real = sample_masses(&spec, 1).unwrap();
        let scaled = DisorderRealization {
            seed: real.seed,
            masses: real.masses.iter().map(|m| 3.0 * m).collect(),
        };
        let (a, _) = build_dynamics_operators(&real);
        let (a_scaled, _) = build_dynamics_operators(&scaled);
        for x in 0..real.n() {
            assert!((a_scaled.diag[x] - a.diag[x] / 3.0).abs() < 1e-15);
        }
        for x in 0..real.n() - 1 {
            assert!((a_scaled.offdiag[x] - a.offdiag[x] / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_discretization_examples() {
        let mut spec = clean_spec(4);
        spec.beta_profile = Profile::Constant(1.0);
        let prof = discretize_profiles(&spec, 4);
        assert_eq!(prof.beta_x, vec![1.0; 4]);

        let mut spec = clean_spec(2);
        spec.rbar_profile = Profile::Sine { base: 0.0, amplitude: 1.0, k: 1 };
        let prof = discretize_profiles(&spec, 2);
        assert_eq!(prof.rbar_x.len(), 1);
        assert!((prof.rbar_x[0] - 1.0).abs() < 1e-15);

        let mut spec = clean_spec(3);
        spec.pbar_profile = Profile::Cosine { base: 0.0, amplitude: 1.0, k: 1 };
        let prof = discretize_profiles(&spec, 3);
        assert!((prof.pbar_x[0] - 0.5).abs() < 1e-15);
        assert!((prof.pbar_x[1] + 0.5).abs() < 1e-15);
        assert!((prof.pbar_x[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_profile_interpolates_linearly() {
        let p = Profile::Tabulated(vec![0.0, 1.0, 0.0]);
        assert!((p.eval(0.25) - 0.5).abs() < 1e-15);
        assert!((p.eval(0.5) - 1.0).abs() < 1e-15);
        assert!((p.eval(1.0) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn perturb_mass_contract() {
        let mut spec = clean_spec(8);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        let real = sample_masses(&spec, 2).unwrap();
        let same = perturb_mass(&real, 3, 0.0).unwrap();
        assert_eq!(real.masses, same.masses);
        let shifted = perturb_mass(&real, 3, 0.1).unwrap();
        assert!((shifted.masses[2] - real.masses[2] - 0.1).abs() < 1e-15);
        assert!(perturb_mass(&real, 3, -10.0).is_err());
    }

    #[test]
    fn sub_seed_is_deterministic_and_spreads() {
        assert_eq!(sub_seed(1, 2), sub_seed(1, 2));
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| sub_seed(99, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn gibbs_operators_positive_semidefinite() {
        let mut spec = clean_spec(256);
        spec.mass_law = MassLaw::uniform(0.8, 1.2).unwrap();
        spec.beta_profile = Profile::Cosine { base: 1.0, amplitude: 0.25, k: 1 };
        let real = sample_masses(&spec, 21).unwrap();
        let prof = discretize_profiles(&spec, spec.n);
        let (a_p, a_r) = build_gibbs_operators(&real, &prof).unwrap();
        for t in [&a_p, &a_r] {
            let vals = crate::spectral::bisect_eigenvalues(t);
            let scale = t.norm_inf();
            assert!(vals[0] >= -1e-10 * scale, "negative eigenvalue {}", vals[0]);
        }
    }
}
