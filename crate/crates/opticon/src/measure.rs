//! Photon-number post-selection and polarization coincidence measurement.
//!
//! Post-selection keeps the part of a state matching a per-mode photon-count
//! pattern and renormalizes it; the squared norm of the kept part is the
//! selection probability. Coincidence measurement assigns an H/V outcome to
//! each measured single-photon mode, yielding one [`Branch`] per realizable
//! outcome. Measuring in the 45° basis is expressed as an HWP at 45° in
//! front of an H/V measurement, mirroring the optical layout rather than an
//! abstract basis change.

use std::collections::BTreeMap;

use serde::{ser::SerializeStruct, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::{FockTerm, ModeId, Polarization, StateVector, ZERO_NORM_SQR};

/// Required total photon count per mode (summed over polarization).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DetectionPattern {
    required: BTreeMap<ModeId, u32>,
}

impl DetectionPattern {
    pub fn new() -> Self {
        DetectionPattern::default()
    }

    pub fn require(mut self, mode: ModeId, count: u32) -> Self {
        self.required.insert(mode, count);
        self
    }

    /// One photon in each of `modes`.
    pub fn one_each<I: IntoIterator<Item = ModeId>>(modes: I) -> Self {
        DetectionPattern {
            required: modes.into_iter().map(|m| (m, 1)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeId, u32)> {
        self.required.iter().map(|(m, &n)| (m, n))
    }

    pub fn matches(&self, term: &FockTerm) -> bool {
        self.required.iter().all(|(m, &n)| term.mode_total(m) == n)
    }
}

/// One H/V result per measured mode.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct CoincidenceOutcome {
    results: BTreeMap<ModeId, Polarization>,
}

impl CoincidenceOutcome {
    pub fn from_results<I: IntoIterator<Item = (ModeId, Polarization)>>(results: I) -> Self {
        CoincidenceOutcome {
            results: results.into_iter().collect(),
        }
    }

    pub fn result(&self, mode: &ModeId) -> Option<Polarization> {
        self.results.get(mode).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeId, Polarization)> {
        self.results.iter().map(|(m, &p)| (m, p))
    }

    /// Number of V results; the protocol's correction rule keys off its parity.
    pub fn v_count(&self) -> usize {
        self.results
            .values()
            .filter(|&&p| p == Polarization::V)
            .count()
    }

    pub fn label(&self) -> String {
        self.results
            .iter()
            .map(|(m, p)| format!("{m}={p}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// One measurement branch: outcome, its probability, and the renormalized
/// state of the unmeasured modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: CoincidenceOutcome,
    pub probability: f64,
    pub conditional_state: StateVector,
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Branch", 3)?;
        s.serialize_field("outcome", &self.outcome)?;
        s.serialize_field("probability", &self.probability)?;
        s.serialize_field("conditional_state", &self.conditional_state.to_text())?;
        s.end()
    }
}

/// Keeps only the terms whose per-mode photon totals match `pattern`.
///
/// Returns the selection probability and the renormalized conditional
/// state. Probability 0 is a value, not an error: the conditional is then
/// the empty (invalid) state, so degenerate inputs flow through.
pub fn post_select_counts(state: &StateVector, pattern: &DetectionPattern) -> (f64, StateVector) {
    let kept = StateVector::from_terms(
        state
            .iter()
            .filter(|(t, _)| pattern.matches(t))
            .map(|(t, a)| (t.clone(), *a)),
    );
    let probability = kept.norm_sqr();
    if probability < ZERO_NORM_SQR {
        return (0.0, StateVector::zero());
    }
    let (conditional, _) = kept.normalized().expect("norm checked above");
    (probability, conditional)
}

/// Projects each measured mode onto H or V, one branch per outcome.
///
/// Preconditions: `state` normalized; every measured mode holds exactly one
/// photon in every term, otherwise [`Error::NotSinglePhoton`] — which
/// usually means the caller skipped photon-number post-selection. Branch
/// probabilities sum to 1; branches with numerically zero probability are
/// omitted. Outcomes are enumerated in canonical order (modes sorted,
/// H before V).
pub fn coincidence_branches(state: &StateVector, measured_modes: &[ModeId]) -> Result<Vec<Branch>> {
    let mut modes: Vec<ModeId> = measured_modes.to_vec();
    modes.sort();
    modes.dedup();

    for m in &modes {
        for (term, _) in state.iter() {
            if term.single_polarization(m).is_none() {
                return Err(Error::NotSinglePhoton(m.clone()));
            }
        }
    }

    let mut branches = Vec::new();
    for index in 0..(1u32 << modes.len()) {
        let assignment: Vec<Polarization> = (0..modes.len())
            .map(|bit| {
                if index >> (modes.len() - 1 - bit) & 1 == 0 {
                    Polarization::H
                } else {
                    Polarization::V
                }
            })
            .collect();

        let kept = StateVector::from_terms(
            state
                .iter()
                .filter(|(term, _)| {
                    modes
                        .iter()
                        .zip(&assignment)
                        .all(|(m, &p)| term.single_polarization(m) == Some(p))
                })
                .map(|(term, amp)| (term.without_modes(&modes), *amp)),
        );
        let probability = kept.norm_sqr();
        if probability < ZERO_NORM_SQR {
            continue;
        }
        let (conditional_state, _) = kept.normalized().expect("norm checked above");
        branches.push(Branch {
            outcome: CoincidenceOutcome::from_results(
                modes.iter().cloned().zip(assignment.iter().copied()),
            ),
            probability,
            conditional_state,
        });
    }
    Ok(branches)
}
