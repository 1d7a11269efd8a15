//! implifit: numerical machinery for global implicit-function and
//! global-inversion analysis of piecewise-smooth (abs-generated) maps.
//!
//! The toolkit parses a map F: R^n x R^m -> R^n built from smooth arithmetic
//! plus absolute values, then:
//!
//! * builds Clarke generalized-Jacobian families and sampled subdifferentials
//!   ([`clarke`]),
//! * certifies maximal rank of those families over boxes by interval
//!   branch-and-bound, and gathers coercivity/growth/spectral evidence
//!   ([`certify`]),
//! * computes the global implicit function or global inverse by multistart
//!   nonsmooth least-squares descent with root auditing and continuation
//!   ([`solve`]),
//! * probes uniqueness with a discretized mountain-pass saddle search
//!   ([`mpass`]),
//! * and compares the classical global-inversion conditions (smallest
//!   singular value profiles, surjection moduli) on the same map
//!   ([`theorems`]).

pub mod certify;
pub mod clarke;
pub mod expr;
pub mod linalg;
pub mod mpass;
pub mod objective;
pub mod report;
pub mod sample;
pub mod solve;
pub mod theorems;

pub use expr::{parse_problem, ProblemDef};
