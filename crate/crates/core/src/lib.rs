//! Kreiss constants and the distance to uncontrollability, computed by local
//! optimization with restarts and certified globally by interpolating
//! one-variable functions of the angle.
//!
//! Each quantity is the global minimum of a σ_min-based objective (see
//! [`objective::Objective`]). A local minimum γ is certified by checking, on
//! every ray from the origin, whether the γ-level set is reached; that test
//! reads imaginary eigenvalues of a structured pencil ([`pencils`]) and is
//! wrapped in a function of the angle ([`certificates`]) that the adaptive
//! Chebyshev engine ([`chebinterp`]) approximates to find its zeros. Zeros
//! give new starting points; no zeros certifies γ.
//!
//! ```
//! use globcert::linalg::{C64, ComplexMatrix};
//! use globcert::solver::{self, SolverConfig, Status};
//!
//! let a = ComplexMatrix::from_real_rows(&[[-0.5, 5.0], [0.0, -0.5]]).unwrap();
//! let res = solver::kreiss_continuous(&a, &[C64::new(1.0, 0.0)], &SolverConfig::default()).unwrap();
//! assert_eq!(res.status, Status::Converged);
//! assert!((res.quantity - 2.6).abs() < 1e-12);
//! ```

pub mod certificates;
pub mod chebinterp;
pub mod demo;
pub mod linalg;
pub mod localopt;
pub mod objective;
pub mod oracle;
pub mod pencils;
pub mod solver;
