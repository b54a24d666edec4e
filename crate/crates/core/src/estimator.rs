//! Weighted least-squares recovery `A_{m,n} f = Σ_k (G⁺ N f)_k b_k`.
//!
//! `N f = (ρ(x_i)^{-1/2} f(x_i))_i` is the weighted information,
//! `G = (ρ(x_i)^{-1/2} b_k(x_i))_{i≤m, k≤n}` the design matrix, and `G⁺` its
//! Moore–Penrose inverse computed from a thin SVD with relative cutoff
//! [`RANK_CUTOFF`].

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{MemberFamily, ModelClass, OrthonormalSystem};
use crate::density::SamplingDensity;
use crate::error::invalid;
use crate::linalg::thin_svd;
use crate::{Error, Result, C64};

/// Singular values below `RANK_CUTOFF · s_max` are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct WeightedDesign {
    system: OrthonormalSystem,
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    g: DMatrix<C64>,
    u: DMatrix<C64>,
    singular: Vec<f64>,
    v_t: DMatrix<C64>,
    s_min: f64,
    s_max: f64,
    frame_floor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    pub coefficients: Vec<C64>,
    /// `‖f − A_{m,n} f‖`, known when `f` was given by coefficients.
    pub residual_l2: Option<f64>,
    pub full_rank: bool,
}

/// Response of a design to every member of a search family.
#[derive(Clone, Debug)]
pub struct FamilyResponse {
    /// `‖N(f − P_n f)‖²` per member.
    pub tail_information_sq: Vec<f64>,
    /// `‖f − A_{m,n} f‖` per member.
    pub residuals: Vec<f64>,
}

impl FamilyResponse {
    pub fn sup_tail_information_sq(&self) -> f64 {
        self.tail_information_sq.iter().copied().fold(0.0, f64::max)
    }

    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Upper bound `sqrt(4 a_{⌈n/4⌉}² + s_min^{-2} S)` on the worst-case error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub value: f64,
    /// `2 a_{⌈n/4⌉}`.
    pub projection_term: f64,
    /// Searched `S = sup ‖N(f − P_n f)‖²`.
    pub sup_tail_information_sq: f64,
    pub s_min: f64,
}

impl WeightedDesign {
    /// Design at `points` with weights `ρ(x_i)` from `density`.
    pub fn assemble(
        system: &OrthonormalSystem,
        density: &SamplingDensity,
        points: &[f64],
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(points.len());
        for &x in points {
            let rho = density.eval(x)?;
            if rho <= 0.0 {
                return Err(Error::ZeroDensity(x));
            }
            weights.push(rho);
        }
        Self::from_weights(system, density.n(), points.to_vec(), weights)
    }

    /// Design with explicit positive weights (rows scaled by `weight^{-1/2}`).
    pub fn from_weights(
        system: &OrthonormalSystem,
        n: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let m = points.len();
        if n == 0 || n > system.max_index() {
            return Err(invalid(format!("design dimension n={n} unsupported by the system")));
        }
        if m < n {
            return Err(Error::Underdetermined { m, n });
        }
        if weights.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: weights.len(),
            });
        }
        for (&x, &w) in points.iter().zip(&weights) {
            system.space().check(x)?;
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::ZeroDensity(x));
            }
        }
        let mut g = DMatrix::<C64>::zeros(m, n);
        for (i, (&x, &w)) in points.iter().zip(&weights).enumerate() {
            let scale = w.sqrt().recip();
            for (k, b) in system.head_row(x, n).into_iter().enumerate() {
                g[(i, k)] = b * scale;
            }
        }
        let svd = thin_svd(&g);
        let singular = svd.singular;
        let s_min = singular.iter().copied().fold(f64::INFINITY, f64::min);
        let s_max = singular.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            system: system.clone(),
            n,
            points,
            weights,
            u: svd.u,
            v_t: svd.v.adjoint(),
            g,
            singular,
            s_min,
            s_max,
            frame_floor: None,
        })
    }

    pub(crate) fn with_frame_floor(mut self, floor: f64) -> Self {
        self.frame_floor = Some(floor);
        self
    }

    pub fn system(&self) -> &OrthonormalSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.g
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Guaranteed `s_min(G)²` floor `c₂·n` recorded when the design came from a
    /// subsampled frame.
    pub fn frame_floor(&self) -> Option<f64> {
        self.frame_floor
    }

    pub fn is_full_rank(&self) -> bool {
        self.s_min > RANK_CUTOFF * self.s_max
    }

    /// `N f` for an evaluable `f`.
    pub fn apply_information<F>(&self, f: F) -> Result<Vec<C64>>
    where
        F: Fn(f64) -> Result<C64>,
    {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| Ok(f(x)? / w.sqrt()))
            .collect()
    }

    /// `N f` for `f = Σ_k c_k b_k`.
    pub fn information_of(&self, coeffs: &[C64]) -> Vec<C64> {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| self.system.synthesize(coeffs, x) / w.sqrt())
            .collect()
    }

    /// `G⁺ y` with the relative singular-value cutoff.
    pub fn pseudo_inverse_apply(&self, samples: &[C64]) -> Vec<C64> {
        let y = DVector::from_column_slice(samples);
        let mut uty = self.u.adjoint() * y;
        for (j, s) in self.singular.iter().enumerate() {
            uty[j] = if *s > RANK_CUTOFF * self.s_max {
                uty[j] / *s
            } else {
                C64::new(0.0, 0.0)
            };
        }
        (self.v_t.adjoint() * uty).iter().copied().collect()
    }

    /// Dense `G⁺` (n × m).
    pub fn pseudo_inverse(&self) -> DMatrix<C64> {
        let mut sigma_inv = DMatrix::<C64>::zeros(self.singular.len(), self.singular.len());
        for (j, s) in self.singular.iter().enumerate() {
            if *s > RANK_CUTOFF * self.s_max {
                sigma_inv[(j, j)] = C64::new(1.0 / s, 0.0);
            }
        }
        self.v_t.adjoint() * sigma_inv * self.u.adjoint()
    }

    /// Coefficients `G⁺ · samples` of the recovered function.
    pub fn recover(&self, samples: &[C64]) -> Result<RecoveryResult> {
        if samples.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: samples.len(),
            });
        }
        Ok(RecoveryResult {
            coefficients: self.pseudo_inverse_apply(samples),
            residual_l2: None,
            full_rank: self.is_full_rank(),
        })
    }

    /// Recovers `f = Σ c_k b_k` from its samples and reports `‖f − A f‖`.
    pub fn recover_member(&self, coeffs: &[C64]) -> RecoveryResult {
        let recovered = self.pseudo_inverse_apply(&self.information_of(coeffs));
        let residual = residual_norm(coeffs, &recovered);
        RecoveryResult {
            coefficients: recovered,
            residual_l2: Some(residual),
            full_rank: self.is_full_rank(),
        }
    }

    /// Tail information and recovery residual for every member of `family`.
    pub fn evaluate_family(&self, family: &MemberFamily) -> FamilyResponse {
        let count = family.members.len();
        let len = family.members.iter().map(|m| m.coeffs.len()).max().unwrap_or(0);
        let zero = C64::new(0.0, 0.0);
        // index-major layout so each basis value touches a contiguous run
        let mut packed = vec![zero; len * count];
        for (j, member) in family.members.iter().enumerate() {
            for (k, c) in member.coeffs.iter().enumerate() {
                packed[k * count + j] = *c;
            }
        }
        let n = self.n;
        let rows: Vec<(Vec<C64>, Vec<C64>)> = self
            .points
            .par_iter()
            .zip(&self.weights)
            .map(|(&x, &w)| {
                let mut full = vec![zero; count];
                let mut tail = vec![zero; count];
                let scale = w.sqrt().recip();
                self.system.for_each_nonzero(x, len, |k, v| {
                    let v = v * scale;
                    let coeffs = &packed[(k - 1) * count..k * count];
                    let target = if k > n { &mut tail } else { &mut full };
                    for (acc, c) in target.iter_mut().zip(coeffs) {
                        *acc += c * v;
                    }
                });
                for (f, t) in full.iter_mut().zip(&tail) {
                    *f += t;
                }
                (full, tail)
            })
            .collect();

        let mut tail_information_sq = vec![0.0; count];
        let mut residuals = Vec::with_capacity(count);
        let mut column = vec![zero; self.m()];
        for (j, member) in family.members.iter().enumerate() {
            for (i, (full, tail)) in rows.iter().enumerate() {
                column[i] = full[j];
                tail_information_sq[j] += tail[j].norm_sqr();
            }
            let recovered = self.pseudo_inverse_apply(&column);
            residuals.push(residual_norm(&member.coeffs, &recovered));
        }
        FamilyResponse {
            tail_information_sq,
            residuals,
        }
    }
}

/// `‖f − Σ_{k≤n} r_k b_k‖` for `f = Σ c_k b_k`, by Parseval.
fn residual_norm(coeffs: &[C64], recovered: &[C64]) -> f64 {
    let len = coeffs.len().max(recovered.len());
    let zero = C64::new(0.0, 0.0);
    (0..len)
        .map(|k| {
            let c = coeffs.get(k).copied().unwrap_or(zero);
            let r = recovered.get(k).copied().unwrap_or(zero);
            (c - r).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Certificate from an already evaluated family response.
pub fn certificate_from_response(
    design: &WeightedDesign,
    model: &ModelClass,
    response: &FamilyResponse,
) -> Result<Certificate> {
    if !design.is_full_rank() {
        return Err(Error::RankDeficient {
            s_min: design.s_min(),
            s_max: design.s_max(),
        });
    }
    let projection_term = 2.0 * model.decay().quarter_bound(design.n());
    let s = response.sup_tail_information_sq();
    Ok(Certificate {
        value: (projection_term.powi(2) + s / design.s_min().powi(2)).sqrt(),
        projection_term,
        sup_tail_information_sq: s,
        s_min: design.s_min(),
    })
}

/// Worst-case error bound `sqrt(4 a_{⌈n/4⌉}² + s_min^{-2} · max_f ‖N(f − P_n f)‖²)`
/// with the supremum searched over `family`.
pub fn error_certificate(
    design: &WeightedDesign,
    model: &ModelClass,
    family: &MemberFamily,
) -> Result<Certificate> {
    if family.n != design.n() {
        return Err(invalid(format!(
            "family built for n={}, design has n={}",
            family.n,
            design.n()
        )));
    }
    certificate_from_response(design, model, &design.evaluate_family(family))
}
