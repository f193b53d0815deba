//! Rydberg ladder Hamiltonian in the occupation basis.
//!
//! ```text
//! H/Ω = 1/2 Σ_i X_i − (Δ/Ω) Σ_i n_i + Σ_{i<j} V_ij n_i n_j
//! ```
//!
//! Basis state `n` is an integer whose bit `i` is the occupation of atom `i`
//! (`0 = |g⟩`, `1 = |r⟩`). The operator is real symmetric: the drive couples
//! every state to its single-flip neighbours with weight `1/2`, and everything
//! else is diagonal. Nothing is ever stored beyond the diagonal.

mod dense;
mod lanczos;
mod state_file;

pub use dense::{dense_ground_state, DENSE_MAX_DIM};
pub use lanczos::{ground_state, SolverOptions};
pub use state_file::{read_state, write_state, STATE_MAGIC};

use crate::error::{Error, Result};
use crate::lattice::{couplings, CouplingTable, LadderGeometry};
use crate::par;

#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    geometry: LadderGeometry,
    couplings: CouplingTable,
    delta_over_omega: f64,
}

impl HamiltonianSpec {
    pub fn new(geometry: LadderGeometry, rb_over_a: f64, delta_over_omega: f64) -> Result<Self> {
        let couplings = couplings(&geometry, rb_over_a)?;
        let spec = Self { geometry, couplings, delta_over_omega };
        spec.dimension()?;
        Ok(spec)
    }

    pub fn ladder(n_rungs: usize, rb_over_a: f64, delta_over_omega: f64) -> Result<Self> {
        Self::new(crate::lattice::build_ladder(n_rungs)?, rb_over_a, delta_over_omega)
    }

    pub fn geometry(&self) -> &LadderGeometry {
        &self.geometry
    }

    pub fn couplings(&self) -> &CouplingTable {
        &self.couplings
    }

    pub fn delta_over_omega(&self) -> f64 {
        self.delta_over_omega
    }

    pub fn rb_over_a(&self) -> f64 {
        self.couplings.rb_over_a()
    }

    pub fn n_atoms(&self) -> usize {
        self.geometry.n_atoms()
    }

    pub fn dimension(&self) -> Result<usize> {
        hilbert_dimension(self.n_atoms())
    }

    /// Builds the matrix-free operator (materializes the diagonal).
    pub fn operator(&self) -> Result<RydbergOperator> {
        Ok(RydbergOperator {
            n_atoms: self.n_atoms(),
            diag: diagonal_energies(self)?,
        })
    }
}

/// `2^n_atoms`, rejected when the state vector could not be addressed.
pub fn hilbert_dimension(n_atoms: usize) -> Result<usize> {
    let overflow = Error::DimensionOverflow { n_atoms };
    let dim = u32::try_from(n_atoms)
        .ok()
        .and_then(|n| 1usize.checked_shl(n))
        .ok_or(overflow)?;
    if dim.checked_mul(std::mem::size_of::<f64>()).is_none_or(|b| b > isize::MAX as usize) {
        return Err(Error::DimensionOverflow { n_atoms });
    }
    Ok(dim)
}

/// Classical energy of one occupation pattern.
#[inline]
pub fn occupation_energy(bits: u64, couplings: &CouplingTable, delta_over_omega: f64) -> f64 {
    let n = couplings.n_atoms();
    let v = couplings.as_slice();
    let mut e = 0.0;
    let mut rest = bits;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        e -= delta_over_omega;
        let row = &v[i * n..(i + 1) * n];
        let mut higher = rest;
        while higher != 0 {
            let j = higher.trailing_zeros() as usize;
            higher &= higher - 1;
            e += row[j];
        }
    }
    e
}

pub fn diagonal_energies(spec: &HamiltonianSpec) -> Result<Vec<f64>> {
    let dim = spec.dimension()?;
    let mut diag = vec![0.0; dim];
    let (c, delta) = (&spec.couplings, spec.delta_over_omega);
    par::fill_indexed(&mut diag, |n| occupation_energy(n as u64, c, delta));
    Ok(diag)
}

/// Matrix-free `H` with a cached diagonal.
#[derive(Clone, Debug)]
pub struct RydbergOperator {
    n_atoms: usize,
    diag: Vec<f64>,
}

impl RydbergOperator {
    pub fn from_diagonal(n_atoms: usize, diag: Vec<f64>) -> Result<Self> {
        let dim = hilbert_dimension(n_atoms)?;
        if diag.len() != dim {
            return Err(Error::LengthMismatch { expected: dim, got: diag.len() });
        }
        Ok(Self { n_atoms, diag })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `out = H v`. Each output entry is summed in a fixed order.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let dim = self.dim();
        for len in [v.len(), out.len()] {
            if len != dim {
                return Err(Error::LengthMismatch { expected: dim, got: len });
            }
        }
        let n_atoms = self.n_atoms;
        let diag = &self.diag;
        par::fill_indexed(out, |n| {
            let mut flips = 0.0;
            for i in 0..n_atoms {
                flips += v[n ^ (1 << i)];
            }
            diag[n] * v[n] + 0.5 * flips
        });
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `⟨v, H v⟩`
    pub fn expectation(&self, v: &[f64]) -> Result<f64> {
        Ok(par::dot(v, &self.apply(v)?))
    }
}

/// One-shot `H v`; prefer [`HamiltonianSpec::operator`] for repeated use.
pub fn apply_h(spec: &HamiltonianSpec, v: &[f64]) -> Result<Vec<f64>> {
    spec.operator()?.apply(v)
}

/// Lowest eigenpair of `H`, real amplitudes with the largest-magnitude entry
/// positive.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundState {
    pub n_atoms: usize,
    pub amplitudes: Vec<f64>,
    /// In units of Ω.
    pub energy: f64,
    /// Estimate of `E1 − E0`.
    pub gap: f64,
    pub converged: bool,
    pub residual_norm: f64,
    /// Set when the gap is below `100 · tol`; entropies of such states are
    /// not reliable.
    pub near_degenerate: bool,
    pub matvecs: usize,
}

impl GroundState {
    /// Wraps a normalized amplitude vector (e.g. a hand-built test state).
    /// Energy metadata is left at zero.
    pub fn from_amplitudes(n_atoms: usize, mut amplitudes: Vec<f64>) -> Result<Self> {
        let dim = hilbert_dimension(n_atoms)?;
        if amplitudes.len() != dim {
            return Err(Error::LengthMismatch { expected: dim, got: amplitudes.len() });
        }
        let norm = par::norm(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidDistribution("state has zero or non-finite norm".into()));
        }
        par::scale(1.0 / norm, &mut amplitudes);
        fix_sign(&mut amplitudes);
        Ok(Self {
            n_atoms,
            amplitudes,
            energy: 0.0,
            gap: 0.0,
            converged: true,
            residual_norm: 0.0,
            near_degenerate: false,
            matvecs: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn probability(&self, n: usize) -> f64 {
        self.amplitudes[n] * self.amplitudes[n]
    }
}

/// Flips the global sign so the largest-magnitude amplitude (first on ties)
/// is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
