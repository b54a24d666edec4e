use nalgebra::{DMatrix, DVector};

use super::system::OrthonormalSystem;
use crate::error::invalid;
use crate::{Result, C64};

const DEPENDENCE_TOL: f64 = 1e-10;

/// Orthonormalizes the union of dyadic spans `W_1, W_2, W_4, …` in order.
///
/// `subspaces[i]` holds `2^i` columns of coefficients in `reference`. The result is a
/// tabulated system whose first `n` functions span every `W_{2^k}` with `2^k ≤ n/2`.
/// Columns that are linearly dependent on earlier ones are dropped; their positions
/// in the concatenated input are kept in [`OrthonormalSystem::dropped_columns`].
pub fn build_nested_basis(
    subspaces: &[DMatrix<C64>],
    reference: &OrthonormalSystem,
) -> Result<OrthonormalSystem> {
    let rows = subspaces
        .first()
        .ok_or_else(|| invalid("need at least one subspace"))?
        .nrows();
    if rows > reference.max_index() {
        return Err(invalid(format!(
            "subspaces use {rows} reference functions, system has {}",
            reference.max_index()
        )));
    }
    for (i, w) in subspaces.iter().enumerate() {
        if w.ncols() != 1 << i {
            return Err(invalid(format!(
                "subspace {i} must have {} columns, has {}",
                1 << i,
                w.ncols()
            )));
        }
        if w.nrows() != rows {
            return Err(invalid("subspaces disagree on the reference dimension"));
        }
    }

    let mut basis: Vec<DVector<C64>> = Vec::new();
    let mut dropped = Vec::new();
    let mut position = 0;
    for w in subspaces {
        for col in w.column_iter() {
            let mut v: DVector<C64> = col.into_owned();
            let scale = v.norm();
            // two Gram–Schmidt sweeps
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dotc(&v);
                    v.axpy(-proj, q, C64::new(1.0, 0.0));
                }
            }
            let norm = v.norm();
            if scale == 0.0 || norm <= DEPENDENCE_TOL * scale || basis.len() == rows {
                dropped.push(position);
            } else {
                basis.push(v.unscale(norm));
            }
            position += 1;
        }
    }
    let columns = DMatrix::from_columns(&basis);
    Ok(OrthonormalSystem::custom(reference.clone(), columns, dropped))
}
