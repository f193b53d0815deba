//! Full dense diagonalization, used as an oracle for the Krylov path.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{fix_sign, GroundState, HamiltonianSpec, RydbergOperator};
use crate::error::{Error, Result};

pub const DENSE_MAX_DIM: usize = 1 << 12;

pub fn dense_ground_state(spec: &HamiltonianSpec) -> Result<GroundState> {
    let dim = spec.dimension()?;
    if dim > DENSE_MAX_DIM {
        return Err(Error::DenseLimit { dim, limit: DENSE_MAX_DIM });
    }
    dense_lowest(&spec.operator()?)
}

pub(crate) fn dense_lowest(op: &RydbergOperator) -> Result<GroundState> {
    let dim = op.dim();
    if dim > DENSE_MAX_DIM {
        return Err(Error::DenseLimit { dim, limit: DENSE_MAX_DIM });
    }
    let n_atoms = op.n_atoms();
    let diag = op.diagonal();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..dim {
        h[(n, n)] = diag[n];
        for i in 0..n_atoms {
            h[(n, n ^ (1 << i))] = 0.5;
        }
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (e0, e1) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    let mut v: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    fix_sign(&mut v);
    let hv = &h * nalgebra::DVector::from_column_slice(&v);
    let residual = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - e0 * b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(GroundState {
        n_atoms,
        amplitudes: v,
        energy: e0,
        gap: e1 - e0,
        converged: true,
        residual_norm: residual,
        near_degenerate: false,
        matvecs: 0,
    })
}
