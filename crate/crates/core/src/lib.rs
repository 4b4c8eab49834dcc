//! Containment of ellipsotopes and its applications.
//!
//! An ellipsotope `E_p(G, c) = {c + G a : ||a||_p <= 1}` unifies zonotopes
//! (`p = inf`), ellipsoids (`p = 2`) and centrally symmetric V-polytopes
//! (`p = 1`) under one generator-matrix representation. The crate computes
//! the containment radius `r(inbody, circumbody)` — the smallest scaling of
//! the circumbody about its center that still contains the inbody — exactly
//! where that is tractable and through certified convex relaxations with
//! two-sided bounds otherwise.
//!
//! On top of the containment layer sit two applications:
//! * [`hardness`] reduces operator `p -> 1` norm computation to containment
//!   queries via a bisection over scaled instances, and
//! * [`safeset`] synthesizes safe sets and sampled-data controllers for LTI
//!   systems by solving one conic program whose terminal condition is a
//!   containment constraint.
//!
//! Every optimization problem is funneled through the solver-agnostic
//! [`conic`] layer; independent ground-truth computations used by tests and
//! fallback bounds live in [`oracles`].

pub mod conic;
pub mod containment;
pub mod docs;
pub mod hardness;
pub mod norms;
pub mod oracles;
pub mod safeset;
pub mod sets;

pub use norms::Exponent;
pub use sets::{Ellipsotope, HPolyhedron};
