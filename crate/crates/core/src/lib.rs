//! Certification of classical identities through uniqueness of solutions to
//! linear initial value problems.
//!
//! An identity `lhs = rhs` is certified by exhibiting a linear differential
//! operator that annihilates the residual `lhs - rhs` (or that both sides
//! solve, with matching initial data) at a regular point. All algebra is
//! exact; sines, cosines and complex exponentials are treated as independent
//! generators, so trigonometric relations are never assumed.

pub mod algebra;
pub mod calculus;
pub mod certificate;
pub mod corpus;
pub mod exec;
pub mod expr;
pub mod ivp;
pub mod oracle;
pub mod prover;
pub mod scalar;
