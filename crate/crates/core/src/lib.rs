//! Explicit-state μ-calculus model checking of linear processes through
//! parameterised Boolean equation systems, with witness and counterexample
//! extraction.

pub mod encode;
pub mod evidence;
pub mod formula;
pub mod graphs;
pub mod kernel;
pub mod model;
pub mod pbes;
pub mod solve;
pub mod syntax;
pub mod transform;
