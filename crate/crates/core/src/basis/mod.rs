//! Orthonormal systems over one-dimensional measure spaces, the finite spans
//! `V_n`, orthogonal projections onto them, and model classes of target functions
//! given as coefficient vectors.

mod model;
mod nested;
mod space;
mod system;

pub use model::{CoefficientRule, DecayCertificate, Member, MemberFamily, MemberOrigin, ModelClass};
pub use nested::build_nested_basis;
pub use space::{DomainKind, MeasureKind, MeasureSpace, Quadrature};
pub use system::{evaluate_basis, OrthonormalSystem, Structure, SystemKind};

use crate::error::invalid;
use crate::{Result, C64};

/// Orthogonal projection onto `V_n` in coefficient space: entries past `n` are zeroed,
/// the length is kept.
pub fn project(coeffs: &[C64], n: usize) -> Result<Vec<C64>> {
    if n > coeffs.len() {
        return Err(invalid(format!(
            "projection dimension {n} exceeds coefficient length {}",
            coeffs.len()
        )));
    }
    let mut out = coeffs.to_vec();
    out[n..].iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
    Ok(out)
}

/// `‖f − P_n f‖`, the ℓ₂ norm of the dropped coefficients.
pub fn projection_residual(coeffs: &[C64], n: usize) -> f64 {
    coeffs
        .iter()
        .skip(n)
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}
