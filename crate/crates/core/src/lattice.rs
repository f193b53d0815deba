//! Two-leg ladder geometry and van der Waals couplings.
//!
//! Lengths are in units of the inter-rung spacing `a`; the rung length is
//! `2a`. Atoms are numbered rung-major: atom `i` sits on rung `i / 2`, leg
//! `i % 2`, so the first `k` rungs are exactly the atoms `0..2k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rung length in units of the rung spacing.
pub const RUNG_LENGTH: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderGeometry {
    n_rungs: usize,
    positions: Vec<(f64, f64)>,
}

impl LadderGeometry {
    pub fn n_rungs(&self) -> usize {
        self.n_rungs
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = self.positions[i];
        let (xj, yj) = self.positions[j];
        (xi - xj).hypot(yi - yj)
    }
}

pub fn build_ladder(n_rungs: usize) -> Result<LadderGeometry> {
    if n_rungs == 0 {
        return Err(Error::ZeroRungs);
    }
    let positions = (0..2 * n_rungs)
        .map(|i| ((i / 2) as f64, RUNG_LENGTH * (i % 2) as f64))
        .collect();
    Ok(LadderGeometry { n_rungs, positions })
}

/// Pair couplings `V_ij / Ω = (R_b / a)^6 / d_ij^6`, all pairs, no cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    rb_over_a: f64,
    n: usize,
    v: Vec<f64>,
}

impl CouplingTable {
    /// Arbitrary symmetric, nonnegative, zero-diagonal table (row-major).
    pub fn from_matrix(rb_over_a: f64, n: usize, v: Vec<f64>) -> Result<Self> {
        if v.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: v.len() });
        }
        for i in 0..n {
            for j in 0..n {
                let x = v[i * n + j];
                let ok = x.is_finite() && x >= 0.0 && x == v[j * n + i] && (i != j || x == 0.0);
                if !ok {
                    return Err(Error::InvalidCouplings(format!(
                        "coupling ({i}, {j}) = {x} breaks symmetry, sign, or zero diagonal"
                    )));
                }
            }
        }
        Ok(Self { rb_over_a, n, v })
    }

    pub fn rb_over_a(&self) -> f64 {
        self.rb_over_a
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.n + j]
    }

    /// Row-major `n × n` view.
    pub fn as_slice(&self) -> &[f64] {
        &self.v
    }
}

pub fn couplings(geom: &LadderGeometry, rb_over_a: f64) -> Result<CouplingTable> {
    if !(rb_over_a > 0.0 && rb_over_a.is_finite()) {
        return Err(Error::BadBlockadeRatio(rb_over_a));
    }
    let n = geom.n_atoms();
    let rb6 = rb_over_a.powi(6);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let vij = rb6 / geom.distance(i, j).powi(6);
            v[i * n + j] = vij;
            v[j * n + i] = vij;
        }
    }
    Ok(CouplingTable { rb_over_a, n, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rung() {
        let g = build_ladder(1).unwrap();
        assert_eq!(g.positions(), &[(0.0, 0.0), (0.0, 2.0)]);
    }

    #[test]
    fn six_rungs_twelve_atoms() {
        assert_eq!(build_ladder(6).unwrap().n_atoms(), 12);
    }

    #[test]
    fn rung_major_indexing() {
        let g = build_ladder(3).unwrap();
        assert_eq!(g.positions()[4], (2.0, 0.0));
        assert_eq!(g.distance(0, 4), 2.0);
        for i in 0..g.n_atoms() {
            for j in (i + 1)..g.n_atoms() {
                assert!(g.distance(i, j) >= 1.0);
            }
        }
    }

    #[test]
    fn zero_rungs_rejected() {
        assert!(matches!(build_ladder(0), Err(Error::ZeroRungs)));
    }

    #[test]
    fn unit_ratio_values() {
        let g = build_ladder(2).unwrap();
        let c = couplings(&g, 1.0).unwrap();
        assert_eq!(c.get(0, 2), 1.0); // leg neighbours
        assert_eq!(c.get(0, 1), 0.015625); // rung partners
        assert_eq!(c.get(1, 1), 0.0);
    }

    #[test]
    fn reference_ratio_leg_neighbours() {
        // 2.35^6 = 47^6 / 20^6 exactly
        let c = couplings(&build_ladder(2).unwrap(), 2.35).unwrap();
        assert!((c.get(0, 2) - 168.425239515625).abs() < 1e-11);
    }

    #[test]
    fn bad_ratio_rejected() {
        let g = build_ladder(2).unwrap();
        assert!(couplings(&g, 0.0).is_err());
        assert!(couplings(&g, -1.0).is_err());
        assert!(couplings(&g, f64::NAN).is_err());
    }

    #[test]
    fn symmetric_and_monotone() {
        let g = build_ladder(4).unwrap();
        let lo = couplings(&g, 1.3).unwrap();
        let hi = couplings(&g, 1.31).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(lo.get(i, j), lo.get(j, i));
                if i != j {
                    assert!(hi.get(i, j) > lo.get(i, j));
                    assert!(lo.get(i, j).is_finite() && lo.get(i, j) > 0.0);
                }
            }
        }
    }
}
