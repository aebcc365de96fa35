//! Exact symbolic computation in vertex operator algebras.
//!
//! Everything is computed over arbitrary-precision rationals: states are
//! finite linear combinations of canonical basis monomials, vertex-operator
//! modes are evaluated either recursively (through the iterate component
//! formula, with generator modes supplied by each construction) or through
//! closed-form normal-ordered expressions, and the defining identities are
//! verified coefficient by coefficient on finite windows.
//!
//! Four constructions ship:
//!
//! - [`heisenberg`]: the rank-d free boson and its highest-weight modules;
//! - [`lattice`]: even positive-definite lattices, their dual-coset modules,
//!   cocycle signs and exponential vertex operators;
//! - [`virasoro`]: the vacuum algebra of the Virasoro relations, Verma
//!   modules and the unitary discrete-series tables;
//! - [`affine`]: affine sl2 at a chosen level with the Sugawara conformal
//!   vector, and its level-ideal quotient at positive integral level.
//!
//! On top of these sit the identity checkers ([`checks`]) and the truncated
//! associative-algebra quotient ([`zhu`]).

pub mod affine;
pub mod checks;
pub mod context;
pub mod eval;
pub mod expr;
pub mod formal;
pub mod heisenberg;
pub mod lattice;
pub mod linalg;
pub mod rational;
pub mod state;
pub mod virasoro;
pub mod zhu;

pub use context::{Role, TruncationPolicy, VoaContext, VoaError, WeightOf};
pub use eval::{mode_action, virasoro_mode, Evaluator};
pub use rational::Rational;
pub use state::State;
