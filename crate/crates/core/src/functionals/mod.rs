//! Transverse energy functionals on basic potentials of S^3.

mod energy;
mod harmonics;
mod path;
mod quotient;

pub use energy::{
    basic_check, calibrate, BasicCheck, Calibration, FunctionalReport, Functionals, IjDerivativeReport, JValue,
    MIN_INTERVALS, TRACE_FACTOR_CANDIDATES,
};
pub use harmonics::{coeff_index, SphereGrid};
pub use path::{PotentialPath, SegmentShape};
pub use quotient::{hopf, BasicPotential, HopfQuotient};
