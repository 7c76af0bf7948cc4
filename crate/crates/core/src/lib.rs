//! Generalized Davenport–Schinzel sequence toolkit: pattern families,
//! containment checks, lower-bound constructions, Ackermann inverses,
//! coefficient recurrences, derivation-tree decompositions, and exact
//! extremal-function search at desk scale.

pub mod ackermann;
pub mod coeffs;
pub mod construct;
pub mod containment;
pub mod decompose;
pub mod extremal;
pub mod patterns;
pub mod seqcore;
pub mod verify;
