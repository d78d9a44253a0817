//! Report envelope, output and exit-code mapping.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    BudgetExhausted,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::BudgetExhausted => 3,
        }
    }

    pub fn from_checks(passed: bool) -> Self {
        if passed {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Failure dominates budget exhaustion, which dominates success.
    pub fn combine(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (BudgetExhausted, _) | (_, BudgetExhausted) => BudgetExhausted,
            _ => Pass,
        }
    }
}

/// Wraps a result in the versioned envelope. Only `timestamp` varies
/// between runs with equal configuration.
pub fn envelope(
    command: &str,
    seed: u64,
    config: impl Serialize,
    status: Status,
    result: Value,
) -> anyhow::Result<Value> {
    Ok(json!({
        "schema": SCHEMA,
        "command": command,
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "seed": seed,
        "config": serde_json::to_value(config)?,
        "status": status,
        "result": result,
    }))
}

/// Opens the report destination; a path that cannot be created is a usage error.
pub fn sink(output: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json(mut w: impl Write, value: &Value) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Exit code for an error that aborted a command: budget exhaustion is 3,
/// bad input is 1 and a failed precondition or invariant is 2.
pub fn error_code(e: &anyhow::Error) -> u8 {
    use sasaki_core::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::BudgetExhausted(_)) => 3,
        Some(
            E::InvalidParameter(_)
            | E::UnsupportedModel(_)
            | E::OffManifold { .. }
            | E::NotHorizontal { .. }
            | E::TooFewSamples { .. }
            | E::TooFewSteps { .. }
            | E::EmptySample
            | E::DegenerateHamiltonian { .. }
            | E::PositivityViolated { .. },
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}
