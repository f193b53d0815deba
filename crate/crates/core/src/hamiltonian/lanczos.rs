//! Thick-restart Lanczos for the lowest eigenpair.
//!
//! The Krylov basis is kept fully orthogonal (two classical Gram-Schmidt
//! passes per step), so the projected matrix is read straight off the
//! orthogonalization coefficients. When the basis is full, the lowest `keep`
//! Ritz vectors and the current residual direction seed the next cycle; the
//! projected matrix then has arrow form and the usual recurrence continues
//! from there.
//!
//! The ladder spectrum is wide (blockade-violating configurations sit
//! thousands of Ω above the ground state) while low-lying gaps are small, so
//! a few hundred to a few thousand matvecs are typical for 10-20 atoms.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fix_sign, GroundState, HamiltonianSpec, RydbergOperator};
use crate::error::{Error, Result};
use crate::par;

/// Bytes of Krylov basis the solver allows itself before shrinking the
/// basis size for very large dimensions.
const BASIS_MEMORY_BUDGET: usize = 2 << 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for `‖H v − E v‖`.
    pub tol: f64,
    /// Maximum number of matrix-vector products.
    pub max_iterations: usize,
    pub seed: u64,
    /// Krylov vectors per restart cycle (capped by dimension and memory).
    pub max_basis: usize,
    /// Ritz vectors carried across a restart.
    pub keep: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 5000, seed: 0, max_basis: 40, keep: 10 }
    }
}

impl SolverOptions {
    fn basis_size(&self, dim: usize) -> usize {
        let by_memory = BASIS_MEMORY_BUDGET / (dim * std::mem::size_of::<f64>());
        self.max_basis.min(by_memory.max(16)).min(dim).max(2)
    }
}

pub fn ground_state(spec: &HamiltonianSpec, opts: &SolverOptions) -> Result<GroundState> {
    lowest_eigenpair(&spec.operator()?, opts)
}

struct Ritz {
    values: Vec<f64>,
    /// Columns sorted by ascending Ritz value.
    vectors: DMatrix<f64>,
}

fn ritz(t: &DMatrix<f64>, k: usize) -> Ritz {
    let eig = SymmetricEigen::new(t.view((0, 0), (k, k)).into_owned());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    Ritz { values, vectors }
}

/// `Σ_i coeff[i] · basis[i]`
fn combine(basis: &[Vec<f64>], coeff: impl Iterator<Item = f64>, dim: usize) -> Vec<f64> {
    let coeffs: Vec<f64> = coeff.take(basis.len()).collect();
    let mut y = vec![0.0; dim];
    par::add_combination(1.0, basis, &coeffs, &mut y);
    y
}

/// One classical Gram-Schmidt pass against the whole basis, repeated when
/// it cancels more than `1 − 1/√2` of the norm. Returns the accumulated
/// projection coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    let mut before = par::norm(w);
    for _ in 0..3 {
        let c = par::project(basis, w);
        par::add_combination(-1.0, basis, &c, w);
        for (acc, ci) in coeffs.iter_mut().zip(c) {
            *acc += ci;
        }
        let after = par::norm(w);
        if after > std::f64::consts::FRAC_1_SQRT_2 * before {
            break;
        }
        before = after;
    }
    coeffs
}

/// Removes the couplings already recorded in column `j` of `t` and the
/// diagonal term, then reorthogonalizes. Returns the new diagonal entry.
fn lanczos_step(basis: &[Vec<f64>], t: &DMatrix<f64>, j: usize, w: &mut [f64]) -> f64 {
    let known: Vec<f64> = (0..j).map(|i| t[(i, j)]).collect();
    par::add_combination(-1.0, &basis[..j], &known, w);
    let alpha = par::dot(&basis[j], w);
    par::axpy(-alpha, &basis[j], w);
    alpha + orthogonalize(basis, w)[j]
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = par::norm(&v);
    par::scale(1.0 / n, &mut v);
    v
}

pub(crate) fn lowest_eigenpair(op: &RydbergOperator, opts: &SolverOptions) -> Result<GroundState> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Config(format!("solver tolerance must be positive, got {}", opts.tol)));
    }
    let dim = op.dim();
    let m = opts.basis_size(dim);
    let keep = opts.keep.clamp(1, m - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + keep);
    basis.push(random_unit(dim, &mut rng));
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut w = vec![0.0; dim];
    let mut matvecs = 0usize;
    let mut best_residual = f64::INFINITY;
    // Krylov space exhausted the full Hilbert space (only for tiny systems).
    let mut spans_everything = false;

    loop {
        let j = basis.len() - 1;
        op.apply_into(&basis[j], &mut w)?;
        matvecs += 1;
        t[(j, j)] = lanczos_step(&basis, &t, j, &mut w);
        let beta = par::norm(&w);
        let k = j + 1;
        let rz = ritz(&t, k);
        let scale = rz.values.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        let breakdown = beta <= 1e-13 * scale;
        if k == dim {
            spans_everything = true;
        }
        let estimate = if breakdown { 0.0 } else { beta * rz.vectors[(k - 1, 0)].abs() };

        if k >= 2 && (estimate <= opts.tol || spans_everything) {
            let mut y = combine(&basis, rz.vectors.column(0).iter().copied(), dim);
            par::scale(1.0 / par::norm(&y), &mut y);
            let hy = op.apply(&y)?;
            matvecs += 1;
            let energy = par::dot(&y, &hy);
            let mut r = hy;
            par::axpy(-energy, &y, &mut r);
            let residual = par::norm(&r);
            best_residual = best_residual.min(residual);
            if residual <= opts.tol || spans_everything {
                fix_sign(&mut y);
                let gap = (rz.values[1] - rz.values[0]).max(0.0);
                return Ok(GroundState {
                    n_atoms: op.n_atoms(),
                    amplitudes: y,
                    energy,
                    gap,
                    converged: residual <= opts.tol,
                    residual_norm: residual,
                    near_degenerate: gap < 100.0 * opts.tol,
                    matvecs,
                });
            }
        } else if !breakdown {
            best_residual = best_residual.min(estimate);
        }

        if matvecs >= opts.max_iterations {
            return Err(Error::NotConverged { iterations: matvecs, best_residual });
        }

        if breakdown {
            // Invariant subspace: continue with a fresh direction.
            let mut fresh = random_unit(dim, &mut rng);
            orthogonalize(&basis, &mut fresh);
            let n = par::norm(&fresh);
            par::scale(1.0 / n, &mut fresh);
            if k < m {
                t[(k, j)] = 0.0;
                t[(j, k)] = 0.0;
                basis.push(fresh);
                continue;
            }
            w = fresh;
            restart(&mut basis, &mut t, &rz, keep, 0.0, &w, dim);
        } else if k < m {
            t[(k, j)] = beta;
            t[(j, k)] = beta;
            let mut next = w.clone();
            par::scale(1.0 / beta, &mut next);
            basis.push(next);
        } else {
            par::scale(1.0 / beta, &mut w);
            restart(&mut basis, &mut t, &rz, keep, beta, &w, dim);
        }
    }
}

fn restart(
    basis: &mut Vec<Vec<f64>>,
    t: &mut DMatrix<f64>,
    rz: &Ritz,
    keep: usize,
    beta: f64,
    next: &[f64],
    dim: usize,
) {
    let k = basis.len();
    let kept: Vec<Vec<f64>> = (0..keep)
        .map(|c| combine(basis, rz.vectors.column(c).iter().copied(), dim))
        .collect();
    basis.clear();
    basis.extend(kept);
    basis.push(next.to_vec());
    t.fill(0.0);
    for r in 0..keep {
        t[(r, r)] = rz.values[r];
        let s = beta * rz.vectors[(k - 1, r)];
        t[(r, keep)] = s;
        t[(keep, r)] = s;
    }
}
