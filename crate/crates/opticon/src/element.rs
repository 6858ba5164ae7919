//! Linear-optical elements and circuits.
//!
//! Every element is a one-photon unitary on `(mode, polarization)` slots,
//! lifted to multi-photon states by rewriting creation operators:
//!
//! * **HWP** with induced rotation θ maps |H⟩ → cosθ|H⟩ + sinθ|V⟩ and
//!   |V⟩ → sinθ|H⟩ − cosθ|V⟩. θ is the rotation the plate induces (90° swaps
//!   H and V, 45° maps onto the diagonal basis), not the physical fast-axis
//!   angle. At θ = 0 the |V⟩ component picks up a sign; that is the
//!   documented consequence of this Jones-matrix convention.
//! * **PBS** transmits horizontal and reflects vertical polarization, with
//!   unit phase on both ports. Transmission crosses ports (H entering `in_a`
//!   exits at `out_b`) and reflection stays (V entering `in_a` exits at
//!   `out_a`). A bunched output mode holding one H and one V photon occupies
//!   two distinct slots, so no bosonic enhancement factor arises.
//! * **Phase shifter** multiplies each term by e^(i·φ·n) where n is the
//!   occupation of its `(mode, pol)` slot.
//!
//! The module also carries a dense-matrix oracle ([`element_matrix`],
//! [`circuit_transfer`]) that lifts the slot unitary to a photon-number
//! sector by Ryser-permanent evaluation. The oracle shares nothing with the
//! sparse rewriting path beyond the slot unitary itself, which makes it a
//! genuinely independent route for equivalence and unitarity testing.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    sqrt_factorial, FockTerm, ModeId, Polarization, Slot, StateVector, DROP_TOLERANCE,
};

/// Sparse matrix column: `(row, value)` pairs sorted by row.
pub type SparseColumn = Vec<(usize, Complex64)>;

/// Images of one creation operator under an element's slot unitary.
type SlotTargets = Vec<(Slot, Complex64)>;

/// One optical component bound to spatial modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Element {
    /// Half-wave plate inducing a polarization rotation of `rotation_deg`.
    Hwp { mode: ModeId, rotation_deg: f64 },
    /// Polarizing beam splitter: photons enter `in`, leave on `out`.
    Pbs {
        #[serde(rename = "in")]
        input: [ModeId; 2],
        #[serde(rename = "out")]
        output: [ModeId; 2],
    },
    /// Phase shifter acting on one `(mode, polarization)` slot.
    Phase {
        mode: ModeId,
        pol: Polarization,
        phase_rad: f64,
    },
}

impl Element {
    pub fn hwp(mode: ModeId, rotation_deg: f64) -> Self {
        Element::Hwp { mode, rotation_deg }
    }

    pub fn pbs(in_a: ModeId, in_b: ModeId, out_a: ModeId, out_b: ModeId) -> Self {
        Element::Pbs {
            input: [in_a, in_b],
            output: [out_a, out_b],
        }
    }

    pub fn phase(mode: ModeId, pol: Polarization, phase_rad: f64) -> Self {
        Element::Phase {
            mode,
            pol,
            phase_rad,
        }
    }

    /// Structural checks: finite parameters, distinct PBS ports.
    pub fn validate(&self) -> Result<()> {
        match self {
            Element::Hwp { rotation_deg, .. } => {
                if !rotation_deg.is_finite() {
                    return Err(Error::InvalidCircuit("hwp rotation must be finite".into()));
                }
            }
            Element::Pbs { input, output } => {
                if input[0] == input[1] {
                    return Err(Error::InvalidCircuit("pbs input modes must differ".into()));
                }
                if output[0] == output[1] {
                    return Err(Error::InvalidCircuit("pbs output modes must differ".into()));
                }
                if input.contains(&output[0]) || input.contains(&output[1]) {
                    return Err(Error::InvalidCircuit(
                        "pbs output modes must not reuse its input modes".into(),
                    ));
                }
            }
            Element::Phase { phase_rad, .. } => {
                if !phase_rad.is_finite() {
                    return Err(Error::InvalidCircuit("phase must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Spatial modes this element reads or writes.
    pub fn modes(&self) -> Vec<ModeId> {
        match self {
            Element::Hwp { mode, .. } | Element::Phase { mode, .. } => vec![mode.clone()],
            Element::Pbs { input, output } => {
                vec![
                    input[0].clone(),
                    input[1].clone(),
                    output[0].clone(),
                    output[1].clone(),
                ]
            }
        }
    }

    /// The one-photon slot unitary: images of a creation operator on `slot`,
    /// or `None` when the element leaves the slot alone.
    ///
    /// For the PBS this is the full swap `in ↔ out`; the reverse direction is
    /// unobservable (outputs are required to be empty when applying) but
    /// keeps the map unitary on every closed basis, which the dense oracle
    /// relies on.
    fn targets(&self, slot: &Slot) -> Option<SlotTargets> {
        use Polarization::{H, V};
        match self {
            Element::Hwp { mode, rotation_deg } => {
                if &slot.0 != mode {
                    return None;
                }
                let theta = rotation_deg.to_radians();
                let (c, s) = (theta.cos(), theta.sin());
                let (h, v) = ((mode.clone(), H), (mode.clone(), V));
                Some(match slot.1 {
                    H => vec![(h, Complex64::new(c, 0.0)), (v, Complex64::new(s, 0.0))],
                    V => vec![(h, Complex64::new(s, 0.0)), (v, Complex64::new(-c, 0.0))],
                })
            }
            Element::Pbs { input, output } => {
                let m = &slot.0;
                let [ia, ib] = input;
                let [oa, ob] = output;
                let target = match slot.1 {
                    // transmission crosses ports
                    H if m == ia => ob,
                    H if m == ib => oa,
                    H if m == oa => ib,
                    H if m == ob => ia,
                    // reflection stays
                    V if m == ia => oa,
                    V if m == ib => ob,
                    V if m == oa => ia,
                    V if m == ob => ib,
                    _ => return None,
                };
                Some(vec![((target.clone(), slot.1), Complex64::new(1.0, 0.0))])
            }
            Element::Phase {
                mode,
                pol,
                phase_rad,
            } => {
                if slot == &(mode.clone(), *pol) {
                    Some(vec![(slot.clone(), Complex64::from_polar(1.0, *phase_rad))])
                } else {
                    None
                }
            }
        }
    }

    /// Applies the element to a state by creation-operator rewriting.
    ///
    /// Each term factors into untouched slots and touched slots; the touched
    /// creation operators are re-expanded target by target, and amplitudes
    /// regain the √(n!) bookkeeping of orthonormal number states. Terms
    /// below [`DROP_TOLERANCE`] are pruned afterwards.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.validate()?;
        if let Element::Pbs { output, .. } = self {
            for (term, _) in state.iter() {
                for out in output {
                    if term.occupies_mode(out) {
                        return Err(Error::ModeCollision(out.clone()));
                    }
                }
            }
        }

        let mut result = StateVector::zero();
        for (term, amp) in state.iter() {
            let mut untouched = FockTerm::vacuum();
            let mut touched: Vec<(u32, SlotTargets)> = Vec::new();
            let mut prefactor = *amp;
            for (slot, n) in term.slots() {
                match self.targets(slot) {
                    // A single-target slot map is a pure relabeling (PBS) or
                    // scaling (phase): move the photons and skip the
                    // factorial bookkeeping, which keeps amplitudes exact.
                    // Every element's slot map is injective, so relabeled
                    // slots cannot merge with each other.
                    Some(targets) if targets.len() == 1 => {
                        let (target, coeff) = &targets[0];
                        untouched.add_photons(target.0.clone(), target.1, n);
                        prefactor *= coeff.powu(n);
                    }
                    Some(targets) => {
                        prefactor /= sqrt_factorial(n);
                        touched.push((n, targets));
                    }
                    None => untouched.add_photons(slot.0.clone(), slot.1, n),
                }
            }

            // Polynomial in target creation operators, keyed by their powers.
            let mut poly: BTreeMap<FockTerm, Complex64> = BTreeMap::new();
            poly.insert(FockTerm::vacuum(), prefactor);
            for (n, targets) in &touched {
                for _ in 0..*n {
                    let mut next: BTreeMap<FockTerm, Complex64> = BTreeMap::new();
                    for (mono, coeff) in &poly {
                        for (tslot, tcoeff) in targets {
                            let mut grown = mono.clone();
                            grown.add_photons(tslot.0.clone(), tslot.1, 1);
                            *next.entry(grown).or_insert(Complex64::ZERO) += coeff * tcoeff;
                        }
                    }
                    poly = next;
                }
            }

            for (mono, coeff) in poly {
                let mut full = untouched.clone();
                let mut factor = 1.0f64;
                for (slot, k) in mono.slots() {
                    factor *= sqrt_factorial(k);
                    full.add_photons(slot.0.clone(), slot.1, k);
                }
                result.accumulate(full, coeff * factor);
            }
        }
        result.prune(DROP_TOLERANCE);
        Ok(result)
    }
}

/// Rotates the polarization of every photon in `mode` by `rotation_deg`.
pub fn apply_hwp(state: &StateVector, mode: &ModeId, rotation_deg: f64) -> StateVector {
    Element::hwp(mode.clone(), rotation_deg)
        .apply(state)
        .expect("hwp application cannot fail")
}

/// Interferes `in_a`/`in_b` on a polarizing beam splitter with outputs
/// `out_a`/`out_b`. Fails with [`Error::ModeCollision`] if photons already
/// occupy an output mode.
pub fn apply_pbs(
    state: &StateVector,
    in_a: &ModeId,
    in_b: &ModeId,
    out_a: &ModeId,
    out_b: &ModeId,
) -> Result<StateVector> {
    Element::pbs(in_a.clone(), in_b.clone(), out_a.clone(), out_b.clone()).apply(state)
}

/// Multiplies each term by e^(i·phase_rad·n), n the occupation of
/// `(mode, pol)`.
pub fn apply_phase_shift(
    state: &StateVector,
    mode: &ModeId,
    pol: Polarization,
    phase_rad: f64,
) -> StateVector {
    Element::phase(mode.clone(), pol, phase_rad)
        .apply(state)
        .expect("phase application cannot fail")
}

/// An ordered list of elements over declared input modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub modes: Vec<ModeId>,
    pub elements: Vec<Element>,
}

impl Circuit {
    pub fn new(modes: Vec<ModeId>, elements: Vec<Element>) -> Result<Self> {
        let circuit = Circuit { modes, elements };
        circuit.validate()?;
        Ok(circuit)
    }

    /// Walks the element list tracking live modes: HWP and phase act on live
    /// modes; a PBS consumes its (live) inputs and introduces fresh outputs.
    pub fn validate(&self) -> Result<()> {
        let mut live: BTreeSet<ModeId> = self.modes.iter().cloned().collect();
        if live.len() != self.modes.len() {
            return Err(Error::InvalidCircuit("duplicate declared mode".into()));
        }
        for element in &self.elements {
            element.validate()?;
            match element {
                Element::Hwp { mode, .. } | Element::Phase { mode, .. } => {
                    if !live.contains(mode) {
                        return Err(Error::InvalidCircuit(format!(
                            "element references mode `{mode}` which is not live"
                        )));
                    }
                }
                Element::Pbs { input, output } => {
                    for m in input {
                        if !live.remove(m) {
                            return Err(Error::InvalidCircuit(format!(
                                "pbs input mode `{m}` is not live"
                            )));
                        }
                    }
                    for m in output {
                        if !live.insert(m.clone()) {
                            return Err(Error::InvalidCircuit(format!(
                                "pbs output mode `{m}` collides with a live mode"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Left-fold of element applications in list order.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.validate()?;
        let mut current = state.clone();
        for element in &self.elements {
            current = element.apply(&current)?;
        }
        Ok(current)
    }

    /// Parses the circuit JSON schema.
    pub fn from_json(json: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }
}

/// Applies `circuit` to `state`; identity for an empty circuit.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    circuit.apply(state)
}

// ---------------------------------------------------------------------------
// Dense oracle: permanent-lifted matrices over explicit bases.
// ---------------------------------------------------------------------------

/// Entries reaching outside the basis above this modulus make the basis
/// "not closed"; smaller leakage is numerical dust and is ignored.
const CLOSURE_TOLERANCE: f64 = 1e-12;

/// All Fock terms with `photons` photons over the slots of `modes`,
/// in canonical order.
pub fn enumerate_sector(modes: &[ModeId], photons: u32) -> Vec<FockTerm> {
    let mut slots: Vec<Slot> = Vec::new();
    for m in modes {
        for &p in &Polarization::BOTH {
            slots.push((m.clone(), p));
        }
    }
    let mut out = Vec::new();
    let mut current: Vec<(Slot, u32)> = Vec::new();
    fn rec(
        slots: &[Slot],
        idx: usize,
        left: u32,
        current: &mut Vec<(Slot, u32)>,
        out: &mut Vec<FockTerm>,
    ) {
        if idx == slots.len() {
            if left == 0 {
                out.push(FockTerm::from_occupations(
                    current.iter().map(|(s, n)| (s.0.clone(), s.1, *n)),
                ));
            }
            return;
        }
        for take in 0..=left {
            if take > 0 {
                current.push((slots[idx].clone(), take));
            }
            rec(slots, idx + 1, left - take, current, out);
            if take > 0 {
                current.pop();
            }
        }
    }
    rec(&slots, 0, photons, &mut current, &mut out);
    out.sort();
    out
}

/// Permanent of a square complex matrix by Ryser's formula, O(2ⁿ·n).
pub fn permanent(a: &[Vec<Complex64>]) -> Complex64 {
    let n = a.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    debug_assert!(a.iter().all(|row| row.len() == n));
    let mut total = Complex64::ZERO;
    for subset in 1u32..(1 << n) {
        let mut prod = Complex64::new(1.0, 0.0);
        for row in a {
            let mut sum = Complex64::ZERO;
            for (j, v) in row.iter().enumerate() {
                if subset & (1 << j) != 0 {
                    sum += v;
                }
            }
            prod *= sum;
        }
        if (n as u32 - subset.count_ones()).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// The exact action of `element` on one basis term, as `(output term,
/// ⟨output|element|term⟩)` pairs, via the permanent lift of the slot
/// unitary. Pairs with an exactly zero entry are kept so callers can also
/// use this as a reachability superset.
pub fn column_action(element: &Element, term: &FockTerm) -> Vec<(FockTerm, Complex64)> {
    // Split into untouched slots and touched (slot, count, targets) triples.
    let mut untouched = FockTerm::vacuum();
    let mut touched: Vec<(Slot, u32, SlotTargets)> = Vec::new();
    for (slot, n) in term.slots() {
        match element.targets(slot) {
            Some(t) => touched.push((slot.clone(), n, t)),
            None => untouched.add_photons(slot.0.clone(), slot.1, n),
        }
    }
    if touched.is_empty() {
        return vec![(term.clone(), Complex64::new(1.0, 0.0))];
    }

    // Candidate outputs: distribute each touched slot's photons over its
    // target slots, in every way; distinct distributions can coincide.
    let mut candidates: BTreeSet<FockTerm> = BTreeSet::new();
    let mut stack: Vec<FockTerm> = vec![FockTerm::vacuum()];
    for (_, n, targets) in &touched {
        let mut next = Vec::new();
        for partial in &stack {
            for split in compositions(*n, targets.len() as u32) {
                let mut grown = partial.clone();
                for (k, count) in split.iter().enumerate() {
                    let (slot, _) = &targets[k];
                    grown.add_photons(slot.0.clone(), slot.1, *count);
                }
                next.push(grown);
            }
        }
        stack = next;
    }
    candidates.extend(stack);

    let input_norm: f64 = touched.iter().map(|(_, n, _)| sqrt_factorial(*n)).product();

    let mut out = Vec::new();
    for candidate in candidates {
        // Permanent over the touched block: rows are output photons,
        // columns are input photons, entry = coefficient of the row slot in
        // the column slot's target list.
        let mut cols: Vec<&SlotTargets> = Vec::new();
        for (_, n, targets) in &touched {
            for _ in 0..*n {
                cols.push(targets);
            }
        }
        let mut rows: Vec<&Slot> = Vec::new();
        let mut output_norm = 1.0f64;
        for (slot, k) in candidate.slots() {
            output_norm *= sqrt_factorial(k);
            for _ in 0..k {
                rows.push(slot);
            }
        }
        debug_assert_eq!(rows.len(), cols.len());
        let matrix: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row_slot| {
                cols.iter()
                    .map(|targets| {
                        targets
                            .iter()
                            .find(|(s, _)| s == *row_slot)
                            .map(|(_, c)| *c)
                            .unwrap_or(Complex64::ZERO)
                    })
                    .collect()
            })
            .collect();
        let entry = permanent(&matrix) / (input_norm * output_norm);

        let mut full = untouched.clone();
        for (slot, k) in candidate.slots() {
            full.add_photons(slot.0.clone(), slot.1, k);
        }
        out.push((full, entry));
    }
    out
}

/// Sparse columns of `element` over `basis`: `columns[i]` holds sorted
/// `(row, value)` pairs of `⟨basis[row]|element|basis[i]⟩`.
///
/// Errors with [`Error::BasisNotClosed`] when a non-negligible output term
/// is missing from the basis.
pub fn element_columns(element: &Element, basis: &[FockTerm]) -> Result<Vec<SparseColumn>> {
    element.validate()?;
    let index: BTreeMap<&FockTerm, usize> = basis.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let compute = |term: &FockTerm| -> Result<SparseColumn> {
        let mut col = Vec::new();
        for (out_term, value) in column_action(element, term) {
            if value == Complex64::ZERO {
                continue;
            }
            match index.get(&out_term) {
                Some(&row) => col.push((row, value)),
                None if value.norm() > CLOSURE_TOLERANCE => {
                    return Err(Error::BasisNotClosed(out_term.to_string()));
                }
                None => {}
            }
        }
        col.sort_by_key(|(row, _)| *row);
        Ok(col)
    };
    crate::par::try_map(basis, compute)
}

/// Dense matrix of `element` over `basis`, `M[j][i] = ⟨basis[j]|e|basis[i]⟩`
/// (columns are input basis terms, rows output ones).
pub fn element_matrix(element: &Element, basis: &[FockTerm]) -> Result<Vec<Vec<Complex64>>> {
    let cols = element_columns(element, basis)?;
    let dim = basis.len();
    let mut matrix = vec![vec![Complex64::ZERO; dim]; dim];
    for (i, col) in cols.iter().enumerate() {
        for &(j, v) in col {
            matrix[j][i] = v;
        }
    }
    Ok(matrix)
}

/// max `|(M†M − I)[i][j]|` over all pairs, computed from sparse columns.
pub fn unitarity_defect(columns: &[SparseColumn]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..columns.len() {
        for j in i..columns.len() {
            let mut dot = Complex64::ZERO;
            let (mut a, mut b) = (columns[i].iter().peekable(), columns[j].iter().peekable());
            while let (Some(&&(ra, va)), Some(&&(rb, vb))) = (a.peek(), b.peek()) {
                match ra.cmp(&rb) {
                    std::cmp::Ordering::Less => {
                        a.next();
                    }
                    std::cmp::Ordering::Greater => {
                        b.next();
                    }
                    std::cmp::Ordering::Equal => {
                        dot += va.conj() * vb;
                        a.next();
                        b.next();
                    }
                }
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - expect).norm());
        }
    }
    worst
}

/// The circuit's total transfer matrix over the forward-reachable basis.
///
/// Stage bases grow combinatorially from the input support, each stage
/// matrix comes from [`column_action`], and the matrices are composed in
/// order. Returns the final basis and the composed columns (one per initial
/// basis term).
pub fn circuit_transfer(
    circuit: &Circuit,
    initial_basis: &[FockTerm],
) -> Result<(Vec<FockTerm>, Vec<SparseColumn>)> {
    circuit.validate()?;
    let mut basis: Vec<FockTerm> = initial_basis.to_vec();
    basis.sort();
    basis.dedup();

    // Identity columns over the initial basis.
    let mut total: Vec<SparseColumn> = (0..basis.len())
        .map(|i| vec![(i, Complex64::new(1.0, 0.0))])
        .collect();

    for element in &circuit.elements {
        let mut next_basis: BTreeSet<FockTerm> = BTreeSet::new();
        for term in &basis {
            for (out_term, _) in column_action(element, term) {
                next_basis.insert(out_term);
            }
        }
        let next_basis: Vec<FockTerm> = next_basis.into_iter().collect();
        let index: BTreeMap<&FockTerm, usize> =
            next_basis.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let compute = |term: &FockTerm| -> Result<SparseColumn> {
            let mut col = Vec::new();
            for (out_term, value) in column_action(element, term) {
                if value != Complex64::ZERO {
                    col.push((index[&out_term], value));
                }
            }
            col.sort_by_key(|(row, _)| *row);
            Ok(col)
        };
        let stage = crate::par::try_map(&basis, compute)?;

        total = total
            .iter()
            .map(|col| {
                let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
                for &(mid, v) in col {
                    for &(row, w) in &stage[mid] {
                        *acc.entry(row).or_insert(Complex64::ZERO) += v * w;
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        basis = next_basis;
    }
    Ok((basis, total))
}

/// Compositions of `n` into `parts` non-negative summands.
fn compositions(n: u32, parts: u32) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for rest in compositions(n - first, parts - 1) {
            let mut v = Vec::with_capacity(parts as usize);
            v.push(first);
            v.extend(rest);
            out.push(v);
        }
    }
    out
}
