//! Spectral relaxation hierarchies for polynomial optimization over algebraic varieties.
//!
//! A polynomial `p` is minimized over the real points of an ideal `I`. Given
//! polynomials `h` whose squares sum to one modulo `I`, every level `k` of the
//! hierarchy yields a lower bound `λ_min(M_k(p), M_k(1))` from a pair of Gram
//! matrices, and the bounds are non-decreasing in `k`.

pub mod eig;
pub mod exact;
pub mod gram;
pub mod hierarchy;
pub mod ideal;
pub mod polyring;
pub mod problems;
pub mod spectratope;
pub mod subspace;

pub use hierarchy::{solve, BoundReport, MethodChoice, ProblemSpec, Sense};
pub use ideal::{GroebnerContext, IdealPresentation};
pub use polyring::{parse, Monomial, MonomialOrder, Polynomial, Rational};
pub use subspace::SphericalSystem;
