//! The entanglement-concentration protocol, end to end.
//!
//! Two parties (or three) each share two copies of a non-maximally
//! entangled state α|H…H⟩ + β|V…V⟩. One party's photons from both copies
//! interfere on a PBS after the second copy is rotated by 90°; selecting
//! events with exactly one photon per output mode erases which-copy
//! information and leaves a maximally entangled 2n-photon state with
//! probability 2|αβ|². Measuring one photon per party in the 45° basis
//! (HWP at 45° followed by an H/V detection) collapses the kept photons
//! onto |φ⁺⟩-type entanglement, up to a π phase correction on outcomes
//! with odd V-parity.
//!
//! The mode wiring is data, not code: [`Scenario`] parses the circuit from
//! the JSON files under `scenarios/`, so alternative wirings can be tested
//! through the same machinery.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::element::{apply_phase_shift, Circuit, Element};
use crate::entangle::{
    canonical_state, entropy, fidelity, schmidt_spectrum, Bipartition, CanonicalKind,
};
use crate::error::{Error, Result};
use crate::fock::{FockTerm, ModeId, Polarization, StateVector};
use crate::measure::{
    coincidence_branches, post_select_counts, CoincidenceOutcome, DetectionPattern,
};
use crate::par;

const SCENARIO_2: &str = include_str!("../scenarios/concentrate_2.json");
const SCENARIO_3: &str = include_str!("../scenarios/concentrate_3.json");

/// Validated protocol parameters. Construction normalizes (α, β) exactly
/// and rejects inputs off by more than 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    alpha: Complex64,
    beta: Complex64,
    parties: u32,
    apply_correction: bool,
}

impl ProtocolConfig {
    pub fn new(
        alpha: Complex64,
        beta: Complex64,
        parties: u32,
        apply_correction: bool,
    ) -> Result<Self> {
        if parties != 2 && parties != 3 {
            return Err(Error::UnsupportedPartyCount(parties));
        }
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if (norm_sqr - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "|alpha|^2 + |beta|^2 = {norm_sqr}, expected 1"
            )));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        Ok(ProtocolConfig {
            alpha: alpha * scale,
            beta: beta * scale,
            parties,
            apply_correction,
        })
    }

    /// Real α in [0, 1] with β = √(1−α²), correction on.
    pub fn from_alpha(alpha: f64, parties: u32) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig("alpha out of range [0, 1]".into()));
        }
        let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
        ProtocolConfig::new(
            Complex64::new(alpha, 0.0),
            Complex64::new(beta, 0.0),
            parties,
            true,
        )
    }

    pub fn with_correction(mut self, apply_correction: bool) -> Self {
        self.apply_correction = apply_correction;
        self
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn parties(&self) -> u32 {
        self.parties
    }
}

/// Which maximally entangled family the protocol distills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Bell,
    Ghz,
}

/// One coincidence branch of a protocol run, with fidelities to the |φ⁺⟩
/// (or GHZ⁺) target before and after the conditional π correction.
#[derive(Debug, Clone, Serialize)]
pub struct BranchReport {
    pub outcome: CoincidenceOutcome,
    pub probability: f64,
    pub pre_correction_fidelity: f64,
    pub post_correction_fidelity: f64,
}

/// Full accounting of one protocol run.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub success_probability: f64,
    pub predicted_probability: f64,
    pub branches: Vec<BranchReport>,
    pub input_entropy_ebits: f64,
    pub output_entropy_ebits: f64,
    pub target_kind: TargetKind,
}

/// The concrete wiring of a concentration run: circuit plus mode roles.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub circuit: Circuit,
    /// Mode lists of the two source states, one mode per party, party order.
    pub sources: [Vec<ModeId>; 2],
    /// Modes required to hold exactly one photon after the interference.
    pub post_select_modes: Vec<ModeId>,
    /// Modes measured in the 45° basis, one per party.
    pub measured_modes: Vec<ModeId>,
    /// Modes left carrying the concentrated state, party order.
    pub kept_modes: Vec<ModeId>,
    /// Where the conditional π phase shift lands (party 1's kept photon).
    pub correction_mode: ModeId,
}

fn modes(labels: &[&str]) -> Vec<ModeId> {
    labels
        .iter()
        .map(|l| ModeId::new(*l).expect("static label"))
        .collect()
}

impl Scenario {
    /// The canonical wiring for 2 or 3 parties.
    ///
    /// Two parties: pair (1,2) and pair (3,4); the second pair is rotated by
    /// 90°, photons 2 and 4 interfere on the PBS into 2p/4p, photons 3 and
    /// 4p are measured at 45°, photons 1 and 2p are kept.
    ///
    /// Three parties: triples (a1,b1,c1) and (a2,b2,c2); the whole second
    /// triple is rotated by 90°, one party's photons b1 and b2 interfere on
    /// the PBS into b1p/b2p, one photon per party (a2, b2p, c2) is measured
    /// at 45°, and (a1, b1p, c1) carry the concentrated GHZ state.
    pub fn for_parties(parties: u32) -> Result<Scenario> {
        let scenario = match parties {
            2 => Scenario {
                circuit: Circuit::from_json(SCENARIO_2)
                    .map_err(|e| Error::InvalidCircuit(e.to_string()))?,
                sources: [modes(&["1", "2"]), modes(&["3", "4"])],
                post_select_modes: modes(&["1", "2p", "3", "4p"]),
                measured_modes: modes(&["3", "4p"]),
                kept_modes: modes(&["1", "2p"]),
                correction_mode: ModeId::new("1")?,
            },
            3 => Scenario {
                circuit: Circuit::from_json(SCENARIO_3)
                    .map_err(|e| Error::InvalidCircuit(e.to_string()))?,
                sources: [modes(&["a1", "b1", "c1"]), modes(&["a2", "b2", "c2"])],
                post_select_modes: modes(&["a1", "a2", "b1p", "b2p", "c1", "c2"]),
                measured_modes: modes(&["a2", "b2p", "c2"]),
                kept_modes: modes(&["a1", "b1p", "c1"]),
                correction_mode: ModeId::new("a1")?,
            },
            other => return Err(Error::UnsupportedPartyCount(other)),
        };
        scenario.circuit.validate()?;
        Ok(scenario)
    }

    /// Elements up to and including the PBS (the quantum-erasure stage) and
    /// the trailing 45° stage, in that order.
    pub fn stages(&self) -> (&[Element], &[Element]) {
        let split = self
            .circuit
            .elements
            .iter()
            .rposition(|e| matches!(e, Element::Pbs { .. }))
            .map(|i| i + 1)
            .unwrap_or(0);
        self.circuit.elements.split_at(split)
    }

    fn target_kind(&self) -> TargetKind {
        if self.kept_modes.len() == 2 {
            TargetKind::Bell
        } else {
            TargetKind::Ghz
        }
    }

    fn target_state(&self) -> Result<StateVector> {
        let kind = match self.target_kind() {
            TargetKind::Bell => CanonicalKind::BellPhiPlus,
            TargetKind::Ghz => CanonicalKind::GhzPlus,
        };
        canonical_state(kind, &self.kept_modes)
    }
}

/// α|H…H⟩ + β|V…V⟩ over `modes`.
fn source_state(alpha: Complex64, beta: Complex64, modes: &[ModeId]) -> StateVector {
    let all = |p: Polarization| FockTerm::from_occupations(modes.iter().map(|m| (m.clone(), p, 1)));
    StateVector::from_terms([(all(Polarization::H), alpha), (all(Polarization::V), beta)])
}

/// Tensor product of the two identical source states over distinct modes.
pub fn build_input(cfg: &ProtocolConfig) -> Result<StateVector> {
    let scenario = Scenario::for_parties(cfg.parties)?;
    Ok(build_input_for(cfg, &scenario))
}

fn build_input_for(cfg: &ProtocolConfig, scenario: &Scenario) -> StateVector {
    source_state(cfg.alpha, cfg.beta, &scenario.sources[0]).tensor(&source_state(
        cfg.alpha,
        cfg.beta,
        &scenario.sources[1],
    ))
}

/// The full concentration circuit for 2 or 3 parties.
pub fn build_concentration_circuit(parties: u32) -> Result<Circuit> {
    Ok(Scenario::for_parties(parties)?.circuit)
}

/// Runs the protocol: interference, photon-number post-selection, 45°
/// measurement, conditional correction, and reporting.
///
/// A zero success probability (α ∈ {0, 1}) is a physics result, not an
/// error: the report carries probability 0 and no branches.
pub fn run(cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    run_with(cfg, &Scenario::for_parties(cfg.parties)?)
}

/// Like [`run`], but over a caller-supplied wiring. Any party may host the
/// conditional π correction (`correction_mode` just has to be a kept mode),
/// and alternate circuits loaded from scenario files can be exercised
/// through the same machinery.
pub fn run_with(cfg: &ProtocolConfig, scenario: &Scenario) -> Result<ProtocolReport> {
    if scenario.sources[0].len() != cfg.parties as usize {
        return Err(Error::InvalidConfig(format!(
            "scenario wires {} parties, config asks for {}",
            scenario.sources[0].len(),
            cfg.parties
        )));
    }
    let input = build_input_for(cfg, scenario);
    let predicted_probability = 2.0 * (cfg.alpha * cfg.beta).norm_sqr();

    let one_source = source_state(cfg.alpha, cfg.beta, &scenario.sources[0]);
    let input_split = Bipartition::new(
        scenario.sources[0][..1].to_vec(),
        scenario.sources[0][1..].to_vec(),
    )?;
    let input_entropy_ebits = entropy(&schmidt_spectrum(&one_source, &input_split)?);

    let (interference, measurement) = scenario.stages();
    let mut state = input;
    for element in interference {
        state = element.apply(&state)?;
    }
    let pattern = DetectionPattern::one_each(scenario.post_select_modes.iter().cloned());
    let (success_probability, conditional) = post_select_counts(&state, &pattern);
    // 2|αβ|² peaks at 1/2 for α = β
    debug_assert!(success_probability <= 0.5 + 1e-12);
    if success_probability == 0.0 {
        return Ok(ProtocolReport {
            success_probability: 0.0,
            predicted_probability,
            branches: Vec::new(),
            input_entropy_ebits,
            output_entropy_ebits: 0.0,
            target_kind: scenario.target_kind(),
        });
    }

    let mut state = conditional;
    for element in measurement {
        state = element.apply(&state)?;
    }
    let branches = coincidence_branches(&state, &scenario.measured_modes)?;
    let target = scenario.target_state()?;

    let mut reports = Vec::with_capacity(branches.len());
    let mut first_final_state: Option<StateVector> = None;
    for branch in branches {
        let pre = fidelity(&branch.conditional_state, &target);
        let needs_flip = branch.outcome.v_count() % 2 == 1;
        let final_state = if cfg.apply_correction && needs_flip {
            apply_phase_shift(
                &branch.conditional_state,
                &scenario.correction_mode,
                Polarization::V,
                PI,
            )
        } else {
            branch.conditional_state.clone()
        };
        let post = fidelity(&final_state, &target);
        first_final_state.get_or_insert(final_state);
        reports.push(BranchReport {
            outcome: branch.outcome,
            probability: branch.probability * success_probability,
            pre_correction_fidelity: pre,
            post_correction_fidelity: post,
        });
    }

    let output_split = Bipartition::new(
        scenario.kept_modes[..1].to_vec(),
        scenario.kept_modes[1..].to_vec(),
    )?;
    let output_entropy_ebits = match &first_final_state {
        Some(s) => entropy(&schmidt_spectrum(s, &output_split)?),
        None => 0.0,
    };

    Ok(ProtocolReport {
        success_probability,
        predicted_probability,
        branches: reports,
        input_entropy_ebits,
        output_entropy_ebits,
        target_kind: scenario.target_kind(),
    })
}

/// One sweep point per α, in input order.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub p_success: f64,
    pub p_predicted: f64,
    pub input_entropy_ebits: f64,
    pub output_entropy_ebits: f64,
}

/// Runs the protocol once per α (β = √(1−α²) real, correction on).
/// Points are independent and execute concurrently under the `parallel`
/// feature; the output order is the input order either way.
pub fn sweep(alphas: &[f64], parties: u32) -> Result<Vec<SweepRow>> {
    par::try_map(alphas, |&alpha| {
        let cfg = ProtocolConfig::from_alpha(alpha, parties)?;
        let report = run(&cfg)?;
        Ok(SweepRow {
            alpha,
            p_success: report.success_probability,
            p_predicted: report.predicted_probability,
            input_entropy_ebits: report.input_entropy_ebits,
            output_entropy_ebits: report.output_entropy_ebits,
        })
    })
}

/// `steps` evenly spaced values covering [start, stop] inclusive.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    assert!(steps >= 2, "linspace needs at least two steps");
    (0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            start * (1.0 - t) + stop * t
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::mode;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn config_rejects_unnormalized_and_bad_party_counts() {
        assert!(matches!(
            ProtocolConfig::new(c(0.9, 0.0), c(0.9, 0.0), 2, true),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            ProtocolConfig::new(c(0.6, 0.0), c(0.8, 0.0), 4, true),
            Err(Error::UnsupportedPartyCount(4))
        ));
        assert!(matches!(
            ProtocolConfig::from_alpha(1.2, 2),
            Err(Error::InvalidConfig(_))
        ));
        // slight drift is normalized away
        let cfg = ProtocolConfig::new(c(0.6, 0.0), c(0.8, 0.0), 2, true).unwrap();
        assert!((cfg.alpha().norm_sqr() + cfg.beta().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn input_construction_matches_expansion() {
        // (0.6|HH⟩+0.8|VV⟩)⊗² has amplitudes {0.36, 0.48, 0.48, 0.64}
        let cfg = ProtocolConfig::from_alpha(0.6, 2).unwrap();
        let input = build_input(&cfg).unwrap();
        assert_eq!(input.term_count(), 4);
        let mut mods: Vec<f64> = input.iter().map(|(_, a)| a.norm()).collect();
        mods.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (got, want) in mods.iter().zip([0.36, 0.48, 0.48, 0.64]) {
            assert!((got - want).abs() < 1e-12);
        }

        let cfg3 = ProtocolConfig::from_alpha(0.6, 3).unwrap();
        let input3 = build_input(&cfg3).unwrap();
        assert_eq!(input3.term_count(), 4);
        assert_eq!(input3.occupied_modes().len(), 6);
    }

    #[test]
    fn two_party_circuit_shape() {
        let circuit = build_concentration_circuit(2).unwrap();
        assert_eq!(circuit.elements.len(), 5);
        let scenario = Scenario::for_parties(2).unwrap();
        let (interference, measurement) = scenario.stages();
        assert_eq!(interference.len(), 3);
        assert_eq!(measurement.len(), 2);
        assert!(matches!(interference[2], Element::Pbs { .. }));
    }

    #[test]
    fn balanced_input_concentrates_with_probability_half() {
        let cfg = ProtocolConfig::from_alpha(0.5f64.sqrt(), 2).unwrap();
        let report = run(&cfg).unwrap();
        assert!((report.success_probability - 0.5).abs() < 1e-12);
        assert_eq!(report.branches.len(), 4);
        for b in &report.branches {
            assert!((b.probability - 0.125).abs() < 1e-12);
            assert!((b.post_correction_fidelity - 1.0).abs() < 1e-12);
        }
        assert!((report.output_entropy_ebits - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skewed_input_follows_probability_law() {
        let cfg = ProtocolConfig::from_alpha(0.6, 2).unwrap();
        let report = run(&cfg).unwrap();
        assert!((report.success_probability - 0.4608).abs() < 1e-12);
        assert!((report.predicted_probability - 0.4608).abs() < 1e-12);
        let total: f64 = report.branches.iter().map(|b| b.probability).sum();
        assert!((total - report.success_probability).abs() < 1e-12);
    }

    #[test]
    fn three_party_run_distills_ghz() {
        let cfg = ProtocolConfig::from_alpha(0.6, 3).unwrap();
        let report = run(&cfg).unwrap();
        assert_eq!(report.target_kind, TargetKind::Ghz);
        assert!((report.success_probability - 0.4608).abs() < 1e-12);
        assert_eq!(report.branches.len(), 8);
        for b in &report.branches {
            assert!((b.probability - report.success_probability / 8.0).abs() < 1e-12);
            assert!((b.post_correction_fidelity - 1.0).abs() < 1e-12);
            let expected_pre = if b.outcome.v_count() % 2 == 0 {
                1.0
            } else {
                0.0
            };
            assert!((b.pre_correction_fidelity - expected_pre).abs() < 1e-12);
        }
    }

    #[test]
    fn correction_toggle_shows_up_in_fidelities() {
        let cfg = ProtocolConfig::from_alpha(0.6, 2)
            .unwrap()
            .with_correction(false);
        let report = run(&cfg).unwrap();
        for b in &report.branches {
            assert_eq!(b.pre_correction_fidelity, b.post_correction_fidelity);
        }
        let odd: Vec<_> = report
            .branches
            .iter()
            .filter(|b| b.outcome.v_count() % 2 == 1)
            .collect();
        assert_eq!(odd.len(), 2);
        for b in odd {
            assert!(b.post_correction_fidelity < 1e-12);
        }
    }

    #[test]
    fn correction_works_from_either_party() {
        let cfg = ProtocolConfig::from_alpha(0.6, 2).unwrap();
        // move the π shift from Alice's kept photon to Bob's
        let mut scenario = Scenario::for_parties(2).unwrap();
        scenario.correction_mode = mode("2p");
        let report = run_with(&cfg, &scenario).unwrap();
        assert!((report.success_probability - 0.4608).abs() < 1e-12);
        for b in &report.branches {
            assert!((b.post_correction_fidelity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn run_with_rejects_party_count_mismatch() {
        let cfg = ProtocolConfig::from_alpha(0.6, 3).unwrap();
        let scenario = Scenario::for_parties(2).unwrap();
        assert!(matches!(
            run_with(&cfg, &scenario),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn degenerate_inputs_flow_through() {
        for alpha in [0.0, 1.0] {
            for parties in [2, 3] {
                let cfg = ProtocolConfig::from_alpha(alpha, parties).unwrap();
                let report = run(&cfg).unwrap();
                assert_eq!(report.success_probability, 0.0);
                assert!(report.branches.is_empty());
                assert_eq!(report.input_entropy_ebits, 0.0);
            }
        }
    }

    #[test]
    fn interference_stage_reproduces_four_term_expansion() {
        let cfg = ProtocolConfig::from_alpha(0.6, 2).unwrap();
        let scenario = Scenario::for_parties(2).unwrap();
        let mut state = build_input(&cfg).unwrap();
        for e in scenario.stages().0 {
            state = e.apply(&state).unwrap();
        }
        assert_eq!(state.term_count(), 4);
        let bunched: Vec<_> = state
            .iter()
            .filter(|(t, _)| {
                scenario
                    .post_select_modes
                    .iter()
                    .any(|m| t.mode_total(m) == 2)
            })
            .collect();
        assert_eq!(bunched.len(), 2);
    }

    #[test]
    fn sweep_endpoints_and_peak() {
        let rows = sweep(&[0.0, 0.5f64.sqrt(), 1.0], 2).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].p_success, 0.0);
        assert!((rows[1].p_success - 0.5).abs() < 1e-12);
        assert_eq!(rows[2].p_success, 0.0);
        assert!((rows[1].output_entropy_ebits - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_of_alpha_does_not_change_probability() {
        let base = ProtocolConfig::from_alpha(0.6, 2).unwrap();
        let p0 = run(&base).unwrap().success_probability;
        for chi in [0.3, 1.1, 2.9] {
            let cfg =
                ProtocolConfig::new(Complex64::from_polar(0.6, chi), c(0.8, 0.0), 2, true).unwrap();
            let p = run(&cfg).unwrap().success_probability;
            assert!((p - p0).abs() < 1e-12);
        }
    }

    #[test]
    fn linspace_covers_endpoints() {
        let xs = linspace(0.0, 1.0, 101);
        assert_eq!(xs.len(), 101);
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[100], 1.0);
        assert!((xs[50] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn report_serializes_with_stable_field_names() {
        let cfg = ProtocolConfig::from_alpha(0.6, 2).unwrap();
        let report = run(&cfg).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["success_probability"].is_f64());
        assert!(json["predicted_probability"].is_f64());
        assert!(json["input_entropy_ebits"].is_f64());
        assert!(json["output_entropy_ebits"].is_f64());
        assert_eq!(json["target_kind"], "bell");
        assert_eq!(json["branches"].as_array().unwrap().len(), 4);
        let b0 = &json["branches"][0];
        assert!(b0["probability"].is_f64());
        assert!(b0["pre_correction_fidelity"].is_f64());
        assert!(b0["post_correction_fidelity"].is_f64());
        assert_eq!(b0["outcome"]["3"], "H");
        assert_eq!(b0["outcome"]["4p"], "H");
    }

    #[test]
    fn scenario_modes_are_consistent() {
        for parties in [2u32, 3] {
            let s = Scenario::for_parties(parties).unwrap();
            assert_eq!(s.sources[0].len(), parties as usize);
            assert_eq!(s.sources[1].len(), parties as usize);
            assert_eq!(s.measured_modes.len(), parties as usize);
            assert_eq!(s.kept_modes.len(), parties as usize);
            assert_eq!(s.post_select_modes.len(), 2 * parties as usize);
            assert!(s.post_select_modes.contains(&s.correction_mode));
            for m in &s.measured_modes {
                assert!(s.post_select_modes.contains(m));
                assert!(!s.kept_modes.contains(m));
            }
            assert!(s.kept_modes.contains(&s.correction_mode));
        }
    }

    #[test]
    fn mode_helper_builds_labels() {
        assert_eq!(mode("2p").as_str(), "2p");
    }
}
