//! Concrete Sasakian models.

mod deformed;
mod heisenberg;
mod sphere;

use std::sync::Arc;

pub use deformed::DHomothetic;
pub use heisenberg::Heisenberg;
pub use sphere::RoundSphere;

use crate::error::{Error, Result};
use crate::geometry::ModelRef;

pub fn make_round_sphere(n: usize) -> Result<ModelRef> {
    Ok(Arc::new(RoundSphere::new(n)?))
}

pub fn make_heisenberg() -> ModelRef {
    Arc::new(Heisenberg::new())
}

/// Resolves a model key: `s3`, `s5`, `s7`, `heisenberg`, or a
/// D-homothetic deformation written `<base>-dhom:<mu>` (e.g. `s3-dhom:2`).
pub fn model_from_key(key: &str) -> Result<ModelRef> {
    let key = key.trim();
    if let Some((base, mu)) = key.rsplit_once("-dhom:") {
        let mu: f64 =
            mu.parse().map_err(|_| Error::InvalidParameter(format!("bad deformation parameter in '{key}'")))?;
        let base = model_from_key(base)?;
        return Ok(Arc::new(DHomothetic::new(base, mu)?));
    }
    match key {
        "s3" => make_round_sphere(1),
        "s5" => make_round_sphere(2),
        "s7" => make_round_sphere(3),
        "heisenberg" => Ok(make_heisenberg()),
        other => Err(Error::InvalidParameter(format!("unknown model key '{other}'"))),
    }
}
