//! Numerical laboratory for the one-dimensional disordered quantum harmonic
//! chain: pinning-free chains of `n` oscillators with i.i.d. random masses,
//! prepared in locally-Gibbs Gaussian states and evolved exactly in the
//! Heisenberg picture under hyperbolic space–time scaling.
//!
//! The crate is organised around a handful of exact linear-algebra facts:
//!
//! * the dynamics is diagonalised by the eigenbasis of a symmetric
//!   tridiagonal operator ([`spectral`]),
//! * locally-Gibbs averages of quadratic observables reduce to diagonal
//!   entries of `√A coth √A` for tridiagonal `A` ([`gibbs`]),
//! * the evolution of a Gaussian state is a collection of independent 2×2
//!   rotations in mode space ([`dynamics`]),
//! * high-frequency modes are Anderson localized and freeze the thermal part
//!   of the energy profile ([`localization`]),
//! * the low-frequency part converges to a linear wave (Euler) system with
//!   a disorder-averaged thermal offset ([`euler`], [`experiments`]).
//!
//! A command-line driver (`qhchain`) exposes the experiments described in
//! [`experiments`]; see the book under `book/` for a guided tour.
//!
//! Quick start — diagonalize a small clean chain and check the textbook
//! dispersion relation ω_k² = 4 sin²(kπ/2n):
//!
//! ```
//! use qhchain::chain::{build_dynamics_operators, sample_masses, ChainSpec, MassLaw, Profile};
//! use qhchain::spectral::eigh_tridiagonal;
//!
//! let mut spec = ChainSpec::default();
//! spec.n = 16;
//! spec.mass_law = MassLaw::uniform(1.0, 1.0).unwrap();
//! spec.beta_profile = Profile::Constant(1.0);
//!
//! let real = sample_masses(&spec, 0).unwrap();
//! let (a_p, _) = build_dynamics_operators(&real);
//! let (vals, _) = eigh_tridiagonal(&a_p).unwrap();
//! for (k, lambda) in vals.iter().enumerate() {
//!     let exact = 4.0 * (k as f64 * std::f64::consts::PI / 32.0).sin().powi(2);
//!     assert!((lambda - exact).abs() < 1e-12);
//! }
//! ```

pub mod chain;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod euler;
pub mod experiments;
pub mod gibbs;
pub mod localization;
pub mod report;
pub mod spectral;

pub use error::Error;
