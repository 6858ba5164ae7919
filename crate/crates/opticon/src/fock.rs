//! Sparse polarization Fock states.
//!
//! Photons are addressed by a *slot*: a `(spatial mode, polarization)` pair.
//! A [`FockTerm`] is one occupation-number basis vector over slots, stored
//! sparsely (no zero counts). A [`StateVector`] is a sparse complex
//! superposition of such terms.
//!
//! States are expressed over *orthonormal* number states, ⟨n|n⟩ = 1. The
//! `√(n!)` combinatorics of bosonic creation operators live inside
//! [`StateVector::tensor`] and the element-application code, not inside the
//! basis, so inner products stay plain sparse dot products.
//!
//! Canonical ordering: slots sort by (mode label lexicographic, H before V),
//! terms sort lexicographically over their slot lists. All iteration and
//! serialization follow this order, which makes every output deterministic.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex amplitude attached to one Fock term.
pub type Amplitude = Complex64;

/// Default pruning threshold: terms with |amplitude| below this are dropped
/// after every element application so numerical dust cannot accumulate.
/// Callers needing a different threshold use [`StateVector::prune`] directly.
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Squared-norm threshold below which a state counts as zero.
pub const ZERO_NORM_SQR: f64 = 1e-24;

/// A spatial mode label, e.g. `"1"`, `"4p"`, `"b1"`.
///
/// Labels compare by exact string equality and order lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModeId(String);

impl ModeId {
    /// Builds a mode label. Labels are non-empty ASCII alphanumerics plus
    /// `_` and `'`, which keeps them unambiguous in the text formats.
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let ok = !label.is_empty()
            && label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
        if ok {
            Ok(ModeId(label))
        } else {
            Err(Error::InvalidModeLabel(label))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for ModeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModeId::new(s)
    }
}

impl TryFrom<String> for ModeId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        ModeId::new(s)
    }
}

impl From<ModeId> for String {
    fn from(m: ModeId) -> String {
        m.0
    }
}

/// Photon polarization. `H < V` for canonical ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    /// The orthogonal polarization.
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Polarization::H),
            "V" => Ok(Polarization::V),
            other => Err(Error::ParseState {
                line: 0,
                msg: format!("unknown polarization `{other}`"),
            }),
        }
    }
}

/// One occupied slot: a `(mode, polarization)` pair.
pub type Slot = (ModeId, Polarization);

/// One occupation-number basis vector, in canonical sparse form: the map
/// never stores a zero count, so term equality is map equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockTerm {
    occ: BTreeMap<Slot, u32>,
}

impl FockTerm {
    /// The vacuum: no photons anywhere.
    pub fn vacuum() -> Self {
        FockTerm::default()
    }

    /// A single photon in `(mode, pol)`.
    pub fn single(mode: ModeId, pol: Polarization) -> Self {
        let mut t = FockTerm::vacuum();
        t.add_photons(mode, pol, 1);
        t
    }

    /// Builds a term from `(mode, pol, count)` triples; zero counts are ignored.
    pub fn from_occupations<I>(occupations: I) -> Self
    where
        I: IntoIterator<Item = (ModeId, Polarization, u32)>,
    {
        let mut t = FockTerm::vacuum();
        for (mode, pol, n) in occupations {
            t.add_photons(mode, pol, n);
        }
        t
    }

    /// Adds `n` photons to a slot, keeping canonical form.
    pub fn add_photons(&mut self, mode: ModeId, pol: Polarization, n: u32) {
        if n > 0 {
            *self.occ.entry((mode, pol)).or_insert(0) += n;
        }
    }

    /// Photon count in one slot.
    pub fn occupation(&self, mode: &ModeId, pol: Polarization) -> u32 {
        self.occ.get(&(mode.clone(), pol)).copied().unwrap_or(0)
    }

    /// Photon count in a mode, summed over polarization.
    pub fn mode_total(&self, mode: &ModeId) -> u32 {
        Polarization::BOTH
            .iter()
            .map(|&p| self.occupation(mode, p))
            .sum()
    }

    /// Total photon number of the term.
    pub fn total_photons(&self) -> u32 {
        self.occ.values().sum()
    }

    /// Occupied slots in canonical order.
    pub fn slots(&self) -> impl Iterator<Item = (&Slot, u32)> {
        self.occ.iter().map(|(s, &n)| (s, n))
    }

    /// Spatial modes holding at least one photon, in canonical order.
    pub fn occupied_modes(&self) -> Vec<ModeId> {
        let mut modes: Vec<ModeId> = self.occ.keys().map(|(m, _)| m.clone()).collect();
        modes.dedup();
        modes
    }

    /// True if any photon sits in `mode`.
    pub fn occupies_mode(&self, mode: &ModeId) -> bool {
        self.mode_total(mode) > 0
    }

    /// The polarization of the single photon in `mode`, if the mode holds
    /// exactly one photon.
    pub fn single_polarization(&self, mode: &ModeId) -> Option<Polarization> {
        match (
            self.occupation(mode, Polarization::H),
            self.occupation(mode, Polarization::V),
        ) {
            (1, 0) => Some(Polarization::H),
            (0, 1) => Some(Polarization::V),
            _ => None,
        }
    }

    /// The same term with every photon of `modes` removed.
    pub fn without_modes(&self, modes: &[ModeId]) -> FockTerm {
        let occ = self
            .occ
            .iter()
            .filter(|((m, _), _)| !modes.contains(m))
            .map(|(s, &n)| (s.clone(), n))
            .collect();
        FockTerm { occ }
    }
}

impl fmt::Display for FockTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.occ.is_empty() {
            return f.write_str("vac");
        }
        for (i, ((mode, pol), n)) in self.occ.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{mode}:{pol}:{n}")?;
        }
        Ok(())
    }
}

/// A sparse complex superposition of Fock terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateVector {
    terms: BTreeMap<FockTerm, Amplitude>,
}

impl StateVector {
    /// The zero state (no terms). Not normalizable.
    pub fn zero() -> Self {
        StateVector::default()
    }

    /// Normalized one-photon state |mode, pol⟩.
    pub fn single_photon(mode: ModeId, pol: Polarization) -> Self {
        let mut s = StateVector::zero();
        s.accumulate(FockTerm::single(mode, pol), Complex64::new(1.0, 0.0));
        s
    }

    /// Builds a state from `(term, amplitude)` pairs, combining duplicates.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (FockTerm, Amplitude)>,
    {
        let mut s = StateVector::zero();
        for (t, a) in terms {
            s.accumulate(t, a);
        }
        s.prune(0.0);
        s
    }

    /// Adds `amp` onto a term's amplitude.
    pub fn accumulate(&mut self, term: FockTerm, amp: Amplitude) {
        *self.terms.entry(term).or_insert(Complex64::ZERO) += amp;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Terms and amplitudes in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&FockTerm, &Amplitude)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, term: &FockTerm) -> Amplitude {
        self.terms.get(term).copied().unwrap_or(Complex64::ZERO)
    }

    /// Drops terms with |amplitude| ≤ `tol`; `prune(0.0)` drops exact zeros.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, a| a.norm() > tol);
    }

    /// ⟨self|self⟩ as a real number.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// True if |⟨ψ|ψ⟩ − 1| < `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() < tol
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: Amplitude) -> StateVector {
        let terms = self
            .terms
            .iter()
            .map(|(t, a)| (t.clone(), a * factor))
            .collect();
        StateVector { terms }
    }

    /// Returns `self / ‖self‖` together with the original norm.
    ///
    /// Errors with [`Error::ZeroState`] when ⟨ψ|ψ⟩ is numerically zero,
    /// which signals an impossible post-selection branch.
    pub fn normalized(&self) -> Result<(StateVector, f64)> {
        let n2 = self.norm_sqr();
        if n2 < ZERO_NORM_SQR {
            return Err(Error::ZeroState);
        }
        let n = n2.sqrt();
        Ok((self.scaled(Complex64::new(1.0 / n, 0.0)), n))
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Amplitude {
        let mut acc = Complex64::ZERO;
        if self.terms.len() <= other.terms.len() {
            for (t, a) in self.terms.iter() {
                if let Some(b) = other.terms.get(t) {
                    acc += a.conj() * b;
                }
            }
        } else {
            for (t, b) in other.terms.iter() {
                if let Some(a) = self.terms.get(t) {
                    acc += a.conj() * b;
                }
            }
        }
        acc
    }

    /// Tensor product. Amplitudes multiply; when both factors feed the same
    /// slot, occupations add and the amplitude gains the bosonic factor
    /// √((nₐ+n_b)!/(nₐ!·n_b!)), so e.g. |1⟩⊗|1⟩ = √2·|2⟩ on one slot.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut out = StateVector::zero();
        for (ta, aa) in self.terms.iter() {
            for (tb, ab) in other.terms.iter() {
                let mut occ = ta.occ.clone();
                let mut factor = 1.0f64;
                for (slot, &nb) in tb.occ.iter() {
                    let entry = occ.entry(slot.clone()).or_insert(0);
                    let na = *entry;
                    *entry += nb;
                    if na > 0 {
                        factor *= binomial(na + nb, na);
                    }
                }
                out.accumulate(FockTerm { occ }, aa * ab * factor.sqrt());
            }
        }
        out.prune(0.0);
        out
    }

    /// Sum of two states.
    pub fn add(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        for (t, a) in other.terms.iter() {
            out.accumulate(t.clone(), *a);
        }
        out.prune(0.0);
        out
    }

    /// All amplitudes finite (no NaN/Inf).
    pub fn is_finite(&self) -> bool {
        self.terms
            .values()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// If every term carries the same total photon number, returns it.
    /// Protocol states are photon-number homogeneous; generic states need
    /// not be, so this is a predicate rather than a type invariant.
    pub fn uniform_photon_count(&self) -> Option<u32> {
        let mut counts = self.terms.keys().map(|t| t.total_photons());
        let first = counts.next()?;
        counts.all(|n| n == first).then_some(first)
    }

    /// Spatial modes occupied in any term, in canonical order.
    pub fn occupied_modes(&self) -> Vec<ModeId> {
        let mut modes: Vec<ModeId> = self.terms.keys().flat_map(|t| t.occupied_modes()).collect();
        modes.sort();
        modes.dedup();
        modes
    }

    /// Canonical text form: one line per term,
    /// `<amp_re> <amp_im> | <mode>:<pol>:<count> ...`, terms in canonical
    /// order. Floats print in shortest round-trip form, so parsing the
    /// output reproduces amplitudes bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (term, amp) in self.terms.iter() {
            out.push_str(&format!("{} {} |", amp.re, amp.im));
            for ((mode, pol), n) in term.occ.iter() {
                out.push_str(&format!(" {mode}:{pol}:{n}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the canonical text form produced by [`StateVector::to_text`].
    /// Blank lines and `#` comments are allowed.
    pub fn parse_text(input: &str) -> Result<StateVector> {
        let mut state = StateVector::zero();
        for (idx, raw) in input.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (amp_part, occ_part) = line.split_once('|').ok_or(Error::ParseState {
                line: lineno,
                msg: "missing `|` separator".into(),
            })?;
            let mut nums = amp_part.split_whitespace();
            let re = parse_f64(nums.next(), lineno, "amplitude real part")?;
            let im = parse_f64(nums.next(), lineno, "amplitude imaginary part")?;
            if nums.next().is_some() {
                return Err(Error::ParseState {
                    line: lineno,
                    msg: "amplitude takes exactly two numbers".into(),
                });
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::ParseState {
                    line: lineno,
                    msg: "amplitude must be finite".into(),
                });
            }
            let mut term = FockTerm::vacuum();
            for chunk in occ_part.split_whitespace() {
                let mut parts = chunk.split(':');
                let (Some(m), Some(p), Some(n), None) =
                    (parts.next(), parts.next(), parts.next(), parts.next())
                else {
                    return Err(Error::ParseState {
                        line: lineno,
                        msg: format!("malformed occupation `{chunk}`, expected mode:pol:count"),
                    });
                };
                let mode = ModeId::new(m).map_err(|_| Error::ParseState {
                    line: lineno,
                    msg: format!("invalid mode label `{m}`"),
                })?;
                let pol: Polarization = p.parse().map_err(|_| Error::ParseState {
                    line: lineno,
                    msg: format!("invalid polarization `{p}`"),
                })?;
                let count: u32 = n.parse().map_err(|_| Error::ParseState {
                    line: lineno,
                    msg: format!("invalid photon count `{n}`"),
                })?;
                if count == 0 {
                    return Err(Error::ParseState {
                        line: lineno,
                        msg: "zero occupation entries are not stored".into(),
                    });
                }
                if term.occupation(&mode, pol) != 0 {
                    return Err(Error::ParseState {
                        line: lineno,
                        msg: format!("duplicate slot `{mode}:{pol}`"),
                    });
                }
                term.add_photons(mode, pol, count);
            }
            state.accumulate(term, Complex64::new(re, im));
        }
        Ok(state)
    }
}

fn parse_f64(tok: Option<&str>, line: usize, what: &str) -> Result<f64> {
    tok.ok_or(Error::ParseState {
        line,
        msg: format!("missing {what}"),
    })?
    .parse()
    .map_err(|_| Error::ParseState {
        line,
        msg: format!("unreadable {what}"),
    })
}

/// Binomial coefficient as f64; exact for the photon counts in play.
pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// √(n!) as f64.
pub(crate) fn sqrt_factorial(n: u32) -> f64 {
    let mut acc = 1.0f64;
    for i in 2..=n {
        acc *= i as f64;
    }
    acc.sqrt()
}

/// Convenience constructor used across the crate and tests.
pub fn mode(label: &str) -> ModeId {
    ModeId::new(label).expect("valid mode label")
}
