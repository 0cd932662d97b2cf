//! Stable, versioned JSON schema for construction traces.
//!
//! All rationals and big integers are serialized as decimal strings
//! ("num/den" for rationals) so the schema is exact and byte-stable;
//! field order is fixed by the wire structs below.

use crate::construction::{ConstructionTrace, Mode, StepChecks, StepState};
use crate::lattice::{IntVec2, RatVec2};
use crate::psi::{PsiSpec, PsiValue};
use crate::rational::{parse_rat, rat_to_string, Rat};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace JSON malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("trace invalid: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct StepWire {
    k: u32,
    m_k: [String; 2],
    m_k1: [String; 2],
    alpha: [String; 2],
    delta: i8,
    #[serde(rename = "R_lower")]
    r_lower: String,
    #[serde(rename = "R_upper")]
    r_upper: String,
    psi_hat: String,
    checks: StepChecks,
}

#[derive(Serialize, Deserialize)]
struct EnclosureWire {
    x: [String; 2],
    y: [String; 2],
}

#[derive(Serialize, Deserialize)]
struct TraceWire {
    version: u32,
    psi_spec: PsiSpec,
    mode: Mode,
    branch: String,
    steps: Vec<StepWire>,
    final_enclosure: EnclosureWire,
}

fn int_str(x: &BigInt) -> String {
    x.to_string()
}

fn parse_int(s: &str) -> Result<BigInt, TraceError> {
    BigInt::from_str(s).map_err(|e| TraceError::Invalid(format!("bad integer `{s}`: {e}")))
}

fn parse_rat_t(s: &str) -> Result<Rat, TraceError> {
    parse_rat(s).map_err(TraceError::Invalid)
}

/// Serialize a trace to its canonical JSON text (pretty-printed with a
/// trailing newline; byte-identical for identical traces).
pub fn trace_to_json(trace: &ConstructionTrace) -> String {
    let wire = TraceWire {
        version: TRACE_VERSION,
        psi_spec: trace.psi_spec.clone(),
        mode: trace.mode,
        branch: trace.branch.clone(),
        steps: trace
            .steps
            .iter()
            .map(|s| StepWire {
                k: s.k,
                m_k: [int_str(&s.m_k.x), int_str(&s.m_k.y)],
                m_k1: [int_str(&s.m_k1.x), int_str(&s.m_k1.y)],
                alpha: [rat_to_string(&s.alpha.x), rat_to_string(&s.alpha.y)],
                delta: s.delta,
                r_lower: rat_to_string(&s.r_lower),
                r_upper: rat_to_string(&s.r_upper),
                psi_hat: rat_to_string(&s.psi_hat.value),
                checks: s.checks,
            })
            .collect(),
        final_enclosure: EnclosureWire {
            x: [
                rat_to_string(&trace.final_enclosure.0 .0),
                rat_to_string(&trace.final_enclosure.0 .1),
            ],
            y: [
                rat_to_string(&trace.final_enclosure.1 .0),
                rat_to_string(&trace.final_enclosure.1 .1),
            ],
        },
    };
    let mut out = serde_json::to_string_pretty(&wire).expect("trace serialization cannot fail");
    out.push('\n');
    out
}

/// Parse a trace back from JSON. The psi enclosure of each step is not
/// stored in the schema; the parsed PsiValue carries the snapped value
/// with a degenerate enclosure, which is all the auditors consume.
pub fn trace_from_json(text: &str) -> Result<ConstructionTrace, TraceError> {
    let wire: TraceWire = serde_json::from_str(text)?;
    if wire.version != TRACE_VERSION {
        return Err(TraceError::Invalid(format!(
            "unsupported trace version {}",
            wire.version
        )));
    }
    if wire.steps.is_empty() {
        return Err(TraceError::Invalid("trace has no steps".into()));
    }
    let steps = wire
        .steps
        .iter()
        .map(|s| {
            Ok(StepState {
                k: s.k,
                m_k: IntVec2 { x: parse_int(&s.m_k[0])?, y: parse_int(&s.m_k[1])? },
                m_k1: IntVec2 { x: parse_int(&s.m_k1[0])?, y: parse_int(&s.m_k1[1])? },
                alpha: RatVec2::new(parse_rat_t(&s.alpha[0])?, parse_rat_t(&s.alpha[1])?),
                delta: s.delta,
                r_lower: parse_rat_t(&s.r_lower)?,
                r_upper: parse_rat_t(&s.r_upper)?,
                psi_hat: PsiValue::exact(parse_rat_t(&s.psi_hat)?),
                checks: s.checks,
            })
        })
        .collect::<Result<Vec<_>, TraceError>>()?;
    for st in &steps {
        if st.delta != 1 && st.delta != -1 {
            return Err(TraceError::Invalid(format!("step {}: delta must be ±1", st.k)));
        }
    }
    Ok(ConstructionTrace {
        psi_spec: wire.psi_spec,
        mode: wire.mode,
        branch: wire.branch,
        steps,
        final_enclosure: (
            (
                parse_rat_t(&wire.final_enclosure.x[0])?,
                parse_rat_t(&wire.final_enclosure.x[1])?,
            ),
            (
                parse_rat_t(&wire.final_enclosure.y[0])?,
                parse_rat_t(&wire.final_enclosure.y[1])?,
            ),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{run_construction, BranchReader};

    #[test]
    fn roundtrip_and_determinism() {
        let spec = PsiSpec::constant(parse_rat("1/28").unwrap());
        let mut br = BranchReader::default();
        let tr = run_construction(&spec, 6, Mode::Norm, &mut br).unwrap();
        let j1 = trace_to_json(&tr);
        let back = trace_from_json(&j1).unwrap();
        let j2 = trace_to_json(&back);
        assert_eq!(j1, j2, "serialization must be a fixed point after parsing");
        assert_eq!(back.steps.len(), 5);
        assert_eq!(back.steps[0].m_k1, IntVec2::new(-1, 3));
        assert!(j1.contains("\"version\": 1"));
        assert!(j1.contains("\"mode\": \"norm\""));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(trace_from_json("{}").is_err());
        assert!(trace_from_json("not json").is_err());
        let spec = PsiSpec::constant(parse_rat("1/28").unwrap());
        let mut br = BranchReader::default();
        let tr = run_construction(&spec, 3, Mode::Norm, &mut br).unwrap();
        let j = trace_to_json(&tr).replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(trace_from_json(&j), Err(TraceError::Invalid(_))));
    }
}
