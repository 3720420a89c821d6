//! Rule-table commutation check for adjacent basis gates.
//!
//! The table is a sound under-approximation: a positive verdict always means
//! the two unitaries commute, but some commuting pairs (for instance `H`
//! against anything it overlaps, or mixed `CX`/`CZ` pairs) are reported as
//! [`Rule::NoRule`].

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Gate, GateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    /// `RX` on the target of a `CX`.
    RxCxTarget,
    /// `RZ` on the control of a `CX`.
    RzCxControl,
    /// `RZ` on either qubit of a `CZ`.
    RzCz,
    CxCxSharedControl,
    CxCxSharedTarget,
    CzCz,
    DisjointQubits,
    NoRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CommutationVerdict {
    pub commutes: bool,
    pub rule: Rule,
}

impl CommutationVerdict {
    fn by(rule: Rule) -> Self {
        CommutationVerdict {
            commutes: rule != Rule::NoRule,
            rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("commutation is only defined for unitary gates, got `{0}`")]
pub struct NonUnitaryGate(pub &'static str);

pub fn commutes(a: &Gate, b: &Gate) -> Result<CommutationVerdict, NonUnitaryGate> {
    for g in [a, b] {
        if !g.kind.is_unitary() {
            return Err(NonUnitaryGate(g.kind.name()));
        }
    }
    if !a.qubits.iter().any(|q| b.qubits.contains(q)) {
        return Ok(CommutationVerdict::by(Rule::DisjointQubits));
    }
    Ok(CommutationVerdict::by(
        overlap_rule(a, b).or_else(|| overlap_rule(b, a)).unwrap_or(Rule::NoRule),
    ))
}

/// Like [`commutes`], but treats measurements and barriers as commuting with
/// nothing.
pub fn can_swap(a: &Gate, b: &Gate) -> bool {
    commutes(a, b).map(|v| v.commutes).unwrap_or(false)
}

// Rules for overlapping gates, checked with `a` in the first role.
fn overlap_rule(a: &Gate, b: &Gate) -> Option<Rule> {
    use GateKind::*;
    match (a.kind, b.kind) {
        (Rx { .. }, Cx) if a.qubits[0] == b.qubits[1] => Some(Rule::RxCxTarget),
        (Rz { .. }, Cx) if a.qubits[0] == b.qubits[0] => Some(Rule::RzCxControl),
        (Rz { .. }, Cz) => Some(Rule::RzCz),
        (Cx, Cx) if a.qubits == b.qubits => Some(Rule::CxCxSharedControl),
        (Cx, Cx) if a.qubits[0] == b.qubits[0] => Some(Rule::CxCxSharedControl),
        (Cx, Cx) if a.qubits[1] == b.qubits[1] => Some(Rule::CxCxSharedTarget),
        (Cz, Cz) => Some(Rule::CzCz),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(a: Gate, b: Gate) -> CommutationVerdict {
        commutes(&a, &b).unwrap()
    }

    #[test]
    fn rule_table_examples() {
        assert_eq!(verdict(Gate::rz(0, 0.3), Gate::cz(0, 1)).rule, Rule::RzCz);
        assert_eq!(verdict(Gate::cz(0, 1), Gate::rz(1, 0.3)).rule, Rule::RzCz);
        assert_eq!(
            verdict(Gate::cx(0, 1), Gate::cx(0, 2)).rule,
            Rule::CxCxSharedControl
        );
        assert_eq!(
            verdict(Gate::cx(0, 2), Gate::cx(1, 2)).rule,
            Rule::CxCxSharedTarget
        );
        assert_eq!(verdict(Gate::rx(1, 0.2), Gate::cx(0, 1)).rule, Rule::RxCxTarget);
        assert_eq!(verdict(Gate::rz(0, 0.2), Gate::cx(0, 1)).rule, Rule::RzCxControl);
        assert_eq!(verdict(Gate::cz(0, 1), Gate::cz(1, 2)).rule, Rule::CzCz);
        assert_eq!(verdict(Gate::h(0), Gate::h(1)).rule, Rule::DisjointQubits);
    }

    #[test]
    fn negatives() {
        let v = verdict(Gate::rx(0, 0.2), Gate::cx(0, 1));
        assert!(!v.commutes);
        assert_eq!(v.rule, Rule::NoRule);
        assert!(!verdict(Gate::rz(1, 0.2), Gate::cx(0, 1)).commutes);
        assert!(!verdict(Gate::cx(0, 1), Gate::cx(1, 2)).commutes);
        assert!(!verdict(Gate::h(0), Gate::cz(0, 1)).commutes);
        assert!(!verdict(Gate::h(0), Gate::h(0)).commutes);
        assert!(!verdict(Gate::cz(0, 1), Gate::cx(2, 1)).commutes);
        assert!(!verdict(Gate::rz(0, 0.1), Gate::rz(0, 0.2)).commutes);
    }

    #[test]
    fn non_unitary_is_an_error() {
        assert!(commutes(&Gate::measure(0, 0), &Gate::h(1)).is_err());
        assert!(!can_swap(&Gate::measure(0, 0), &Gate::h(1)));
    }
}
