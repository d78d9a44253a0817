//! Numerical toolkit for Sasakian and sub-Riemannian geometry.
//!
//! The crate provides explicit Sasakian models (round odd spheres, the
//! Heisenberg group and their D-homothetic deformations), checks of the
//! structure identities and curvature relations, the Hamiltonian flow of
//! normal geodesics with a shooting search for Carnot-Caratheodory
//! distances, the second-variation machinery behind the Myers-type diameter
//! bound, and the transverse energy functionals on the Hopf quotient of S^3.

pub mod dhomothety;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod models;
pub mod numerics;
pub mod subriemannian;
pub mod variations;

pub use error::{Error, Result};
pub use geometry::{ModelRef, Point, SasakiModel, TangentVector, Vector};
