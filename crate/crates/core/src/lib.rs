//! Primitive rational points on expanding horocycles.
//!
//! The crate builds the finite point sets obtained by sampling closed
//! horocycles in the modular surface `SL2(Z)\SL2(R)` at rational times
//! `k/n`, optionally coupled with torus coordinates `a k^d / n` and
//! `b (k^d)^{-1} / n`, and measures how well they equidistribute against
//! observables whose Haar expectations are known exactly.
//!
//! Modules, bottom-up:
//!
//! * [`arith`]: exact integers, residues, rationals, sieving, factorization,
//!   Ramanujan and Kloosterman sums.
//! * [`sl2`]: matrices, the Möbius action, fundamental-domain reduction and
//!   heights.
//! * [`points`]: point-set generators, the `×p` actions and level projections.
//! * [`observables`]: test functions and their Haar expectations.
//! * [`stats`]: averages, exponential-sum identities, discrepancy, rate fits.
//! * [`par`]: the data-parallel execution layer (rayon behind the `parallel`
//!   feature, sequential otherwise) with bit-identical reductions.

pub mod arith;
pub mod error;
pub mod observables;
pub mod par;
pub mod points;
pub mod sl2;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
