//! Bipartitions, Schmidt spectra and von Neumann entropies, including the
//! entropy of a state after projecting out low-probability basis states.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::GroundState;
use crate::par;

/// Split of the atoms into a prefix `A = 0..size_a` and suffix `B`.
///
/// With rung-major numbering, "the first `r` rungs" is `size_a = 2r`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    n_atoms: usize,
    size_a: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Bipartition {
    pub fn new(n_atoms: usize, size_a: usize) -> Result<Self> {
        if size_a == 0 || size_a >= n_atoms || n_atoms > 64 {
            return Err(Error::InvalidBipartition { n_atoms, size_a });
        }
        Ok(Self { n_atoms, size_a })
    }

    /// Equal halves (A gets the smaller half for odd counts).
    pub fn half(n_atoms: usize) -> Result<Self> {
        Self::new(n_atoms, n_atoms / 2)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn size_a(&self) -> usize {
        self.size_a
    }

    pub fn size_b(&self) -> usize {
        self.n_atoms - self.size_a
    }

    pub fn size(&self, side: Side) -> usize {
        match side {
            Side::A => self.size_a(),
            Side::B => self.size_b(),
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.size_a == self.size_b()
    }

    #[inline]
    pub fn a_bits(&self, n: u64) -> u64 {
        n & ((1u64 << self.size_a) - 1)
    }

    #[inline]
    pub fn b_bits(&self, n: u64) -> u64 {
        n >> self.size_a
    }

    #[inline]
    pub fn bits(&self, n: u64, side: Side) -> u64 {
        match side {
            Side::A => self.a_bits(n),
            Side::B => self.b_bits(n),
        }
    }

    fn check(&self, n_atoms: usize) -> Result<()> {
        if n_atoms != self.n_atoms {
            return Err(Error::LengthMismatch { expected: self.n_atoms, got: n_atoms });
        }
        Ok(())
    }
}

/// Eigenvalues of the reduced density matrix, nonincreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    eigenvalues: Vec<f64>,
}

/// Raw eigenvalues below this are a broken decomposition, not round-off.
const NEGATIVE_TOLERANCE: f64 = 1e-10;

impl SchmidtSpectrum {
    /// Clamps round-off negatives to zero and sorts.
    pub fn from_raw(mut raw: Vec<f64>) -> Result<Self> {
        for x in raw.iter_mut() {
            if *x < 0.0 {
                if *x < -NEGATIVE_TOLERANCE {
                    return Err(Error::NegativeEigenvalue(*x));
                }
                *x = 0.0;
            }
        }
        raw.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues: raw })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn total(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Number of eigenvalues above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.eigenvalues.iter().filter(|&&x| x > cutoff).count()
    }
}

/// Amplitude matrix `M[a, b] = c_{a + b·2^|A|}` (rows index A).
fn amplitude_matrix(amplitudes: &[f64], part: &Bipartition) -> DMatrix<f64> {
    let rows = 1usize << part.size_a();
    let cols = 1usize << part.size_b();
    // column-major storage: element (a, b) at a + b*rows, which is exactly n
    DMatrix::from_column_slice(rows, cols, amplitudes)
}

pub fn schmidt_spectrum(state: &GroundState, part: &Bipartition) -> Result<SchmidtSpectrum> {
    part.check(state.n_atoms)?;
    let expected = 1usize << part.n_atoms();
    if state.amplitudes.len() != expected {
        return Err(Error::LengthMismatch { expected, got: state.amplitudes.len() });
    }
    let m = compress(amplitude_matrix(&state.amplitudes, part));
    let sv = m.singular_values();
    SchmidtSpectrum::from_raw(sv.iter().map(|s| s * s).collect())
}

/// Drops all-zero rows and columns, which carry no singular values. Filtered
/// states are mostly zeros, so this keeps their SVDs small.
fn compress(m: DMatrix<f64>) -> DMatrix<f64> {
    let rows: Vec<usize> = (0..m.nrows()).filter(|&r| m.row(r).iter().any(|x| *x != 0.0)).collect();
    let cols: Vec<usize> = (0..m.ncols()).filter(|&c| m.column(c).iter().any(|x| *x != 0.0)).collect();
    if rows.len() == m.nrows() && cols.len() == m.ncols() {
        return m;
    }
    if rows.is_empty() {
        return DMatrix::zeros(1, 1);
    }
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// `−Σ λ ln λ` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(spec: &SchmidtSpectrum) -> f64 {
    let s: f64 = spec
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum();
    s.max(0.0)
}

pub fn entanglement_entropy(state: &GroundState, part: &Bipartition) -> Result<f64> {
    Ok(von_neumann_entropy(&schmidt_spectrum(state, part)?))
}

/// Projects onto basis states with `|c_n|² ≥ p_min` and renormalizes.
pub fn project_filter_state(state: &GroundState, p_min: f64) -> Result<GroundState> {
    if !(0.0..=1.0).contains(&p_min) {
        return Err(Error::BadThreshold(p_min));
    }
    let max_prob = state.amplitudes.iter().fold(0.0f64, |m, c| m.max(c * c));
    let mut amplitudes = state.amplitudes.clone();
    let mut dropped = false;
    for c in amplitudes.iter_mut() {
        if *c * *c < p_min {
            dropped |= *c != 0.0;
            *c = 0.0;
        }
    }
    let norm = par::norm(&amplitudes);
    if norm == 0.0 {
        return Err(Error::EmptySurvivors { p_min, max_prob });
    }
    if dropped {
        par::scale(1.0 / norm, &mut amplitudes);
    }
    Ok(GroundState { amplitudes, ..state.clone() })
}

pub fn filtered_vn_entropy(state: &GroundState, part: &Bipartition, p_min: f64) -> Result<f64> {
    entanglement_entropy(&project_filter_state(state, p_min)?, part)
}
