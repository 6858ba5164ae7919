//! Entanglement diagnostics: Schmidt spectra, entropy, fidelity, and
//! canonical Bell/GHZ target states.
//!
//! A [`Bipartition`] splits the single-photon polarization modes of a state
//! into two sides. The squared Schmidt coefficients are the eigenvalues of
//! the reduced state on one side, computed here from the Gram matrix of the
//! coefficient matrix with a plain Jacobi eigensolver — the matrices in
//! play are tiny, so no linear-algebra dependency is warranted.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockTerm, ModeId, Polarization, StateVector};

/// A split of a state's occupied modes into two disjoint sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub side_a: Vec<ModeId>,
    pub side_b: Vec<ModeId>,
}

impl Bipartition {
    pub fn new(side_a: Vec<ModeId>, side_b: Vec<ModeId>) -> Result<Self> {
        if side_a.is_empty() || side_b.is_empty() {
            return Err(Error::QubitCondition("bipartition side is empty".into()));
        }
        for m in &side_a {
            if side_b.contains(m) {
                return Err(Error::QubitCondition(format!(
                    "mode `{m}` appears on both sides"
                )));
            }
        }
        Ok(Bipartition { side_a, side_b })
    }
}

/// Squared Schmidt coefficients (reduced-state eigenvalues), descending,
/// summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    coefficients: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Eigenvalues of the reduced state across `split`.
///
/// Preconditions: `state` normalized; every occupied mode belongs to exactly
/// one side and holds exactly one photon in every term (the qubit
/// condition). The spectrum is computed on the smaller side, clamped at 0,
/// and renormalized when the sum drifts beyond 1e-12; drift beyond 1e-9
/// reports [`Error::SpectrumDrift`] since it signals an upstream bug rather
/// than roundoff.
pub fn schmidt_spectrum(state: &StateVector, split: &Bipartition) -> Result<SchmidtSpectrum> {
    let occupied = state.occupied_modes();
    let mut declared: Vec<ModeId> = split
        .side_a
        .iter()
        .chain(split.side_b.iter())
        .cloned()
        .collect();
    declared.sort();
    if occupied != declared {
        return Err(Error::QubitCondition(
            "bipartition does not cover exactly the occupied modes".into(),
        ));
    }
    for (term, _) in state.iter() {
        for m in &declared {
            if term.single_polarization(m).is_none() {
                return Err(Error::QubitCondition(format!(
                    "mode `{m}` does not hold exactly one photon in every term"
                )));
            }
        }
    }

    // Coefficient matrix over side_a × side_b polarization configurations;
    // Gram matrix on the smaller side keeps the eigenproblem minimal.
    let (rows_side, cols_side) = if split.side_a.len() <= split.side_b.len() {
        (&split.side_a, &split.side_b)
    } else {
        (&split.side_b, &split.side_a)
    };
    let dim_r = 1usize << rows_side.len();
    let dim_c = 1usize << cols_side.len();
    let mut coeff = vec![vec![Complex64::ZERO; dim_c]; dim_r];
    for (term, amp) in state.iter() {
        let r = config_index(term, rows_side);
        let c = config_index(term, cols_side);
        coeff[r][c] += amp;
    }
    let mut gram = vec![vec![Complex64::ZERO; dim_r]; dim_r];
    for i in 0..dim_r {
        for j in 0..dim_r {
            gram[i][j] = (0..dim_c).map(|k| coeff[i][k] * coeff[j][k].conj()).sum();
        }
    }

    let mut eigenvalues = hermitian_eigenvalues(&gram);
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for v in &mut eigenvalues {
        if *v < 0.0 {
            debug_assert!(*v > -1e-12, "reduced state eigenvalue {v} is negative");
            *v = 0.0;
        }
    }
    let sum: f64 = eigenvalues.iter().sum();
    let drift = (sum - 1.0).abs();
    if drift > 1e-9 {
        return Err(Error::SpectrumDrift(sum - 1.0));
    }
    if drift > 1e-12 {
        for v in &mut eigenvalues {
            *v /= sum;
        }
    }
    Ok(SchmidtSpectrum {
        coefficients: eigenvalues,
    })
}

fn config_index(term: &FockTerm, side: &[ModeId]) -> usize {
    side.iter().fold(0usize, |acc, m| {
        let bit = match term.single_polarization(m) {
            Some(Polarization::H) => 0,
            Some(Polarization::V) => 1,
            None => unreachable!("qubit condition checked by caller"),
        };
        (acc << 1) | bit
    })
}

/// Entanglement entropy in ebits: −Σ λ·log₂λ with 0·log0 = 0.
pub fn entropy(spectrum: &SchmidtSpectrum) -> f64 {
    let h: f64 = spectrum
        .coefficients
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum();
    // a pure state yields −1·log₂1 = −0.0; report plain zero
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

/// |⟨target|state⟩|²; insensitive to global phase by construction.
pub fn fidelity(state: &StateVector, target: &StateVector) -> f64 {
    target.inner_product(state).norm_sqr()
}

/// Canonical maximally entangled targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalKind {
    BellPhiPlus,
    BellPhiMinus,
    GhzPlus,
    GhzMinus,
}

/// (|H…H⟩ ± |V…V⟩)/√2 over `modes`. Bell kinds take exactly two modes,
/// GHZ kinds at least two.
pub fn canonical_state(kind: CanonicalKind, modes: &[ModeId]) -> Result<StateVector> {
    use CanonicalKind::*;
    let (name, minus): (&'static str, bool) = match kind {
        BellPhiPlus => ("bell_phi_plus", false),
        BellPhiMinus => ("bell_phi_minus", true),
        GhzPlus => ("ghz_plus", false),
        GhzMinus => ("ghz_minus", true),
    };
    let arity_ok = match kind {
        BellPhiPlus | BellPhiMinus => modes.len() == 2,
        GhzPlus | GhzMinus => modes.len() >= 2,
    };
    if !arity_ok {
        return Err(Error::ArityMismatch {
            kind: name,
            expected: if matches!(kind, BellPhiPlus | BellPhiMinus) {
                "exactly 2"
            } else {
                "at least 2"
            },
            got: modes.len(),
        });
    }
    let r = 0.5f64.sqrt();
    let all = |p: Polarization| FockTerm::from_occupations(modes.iter().map(|m| (m.clone(), p, 1)));
    Ok(StateVector::from_terms([
        (all(Polarization::H), Complex64::new(r, 0.0)),
        (
            all(Polarization::V),
            Complex64::new(if minus { -r } else { r }, 0.0),
        ),
    ]))
}

/// Eigenvalues of a complex Hermitian matrix via its real symmetric
/// embedding [[Re, −Im], [Im, Re]], whose spectrum is the original one with
/// doubled multiplicity.
fn hermitian_eigenvalues(matrix: &[Vec<Complex64>]) -> Vec<f64> {
    let d = matrix.len();
    let mut real = vec![vec![0.0f64; 2 * d]; 2 * d];
    for i in 0..d {
        for j in 0..d {
            real[i][j] = matrix[i][j].re;
            real[i][j + d] = -matrix[i][j].im;
            real[i + d][j] = matrix[i][j].im;
            real[i + d][j + d] = matrix[i][j].re;
        }
    }
    let mut all = symmetric_eigenvalues(real);
    all.sort_by(|x, y| y.partial_cmp(x).unwrap());
    all.into_iter().step_by(2).collect()
}

/// Cyclic Jacobi for small real symmetric matrices.
#[allow(clippy::needless_range_loop)]
fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return vec![];
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-32 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}
