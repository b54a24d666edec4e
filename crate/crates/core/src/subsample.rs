//! Row subsampling with two-sided frame bounds.
//!
//! Starting from `u_i = m^{-1/2} · conj(G_i)` with `Σ u_i u_i* ≈ I`, a weighted
//! barrier sparsifier (one rank-one update per step, upper and lower barrier
//! potentials) selects at most `⌈target_ratio · n⌉` rows with weights `s_i`
//! such that `Σ_J s_i u_i u_i*` has spectrum in `[c₂ n/m, c₃ n/m]`.

use nalgebra::{DMatrix, DVector};

use crate::error::invalid;
use crate::estimator::WeightedDesign;
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, outer_sum};
use crate::{Error, Result, C64};

pub const DEFAULT_TARGET_RATIO: f64 = 13.0;
pub const DEFAULT_LOWER_FLOOR: f64 = 0.1;
pub const DEFAULT_UPPER_CAP: f64 = 10.0;

const HYPOTHESIS_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct FrameInput {
    pub vectors: Vec<DVector<C64>>,
    /// Row norm hypothesis `‖u_i‖² ≤ norm_cap`, normally `2n/m`.
    pub norm_cap: f64,
    /// Rows violating the norm hypothesis.
    pub flagged: Vec<usize>,
}

impl FrameInput {
    pub fn new(vectors: Vec<DVector<C64>>, norm_cap: f64) -> Result<Self> {
        let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
        if dim == 0 {
            return Err(invalid("frame needs at least one nonempty vector"));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        let flagged = vectors
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_squared() > norm_cap * (1.0 + HYPOTHESIS_SLACK))
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            vectors,
            norm_cap,
            flagged,
        })
    }

    /// Rows of `G / √m`, conjugated so that `Σ u_i u_i* = G*G / m`.
    pub fn from_design(design: &WeightedDesign) -> Result<Self> {
        let m = design.m() as f64;
        let g = design.matrix();
        let vectors = (0..g.nrows())
            .map(|i| DVector::from_iterator(g.ncols(), g.row(i).iter().map(|z| z.conj() / m.sqrt())))
            .collect();
        Self::new(vectors, 2.0 * design.n() as f64 / m)
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `Σ u_i u_i*`.
    pub fn frame_operator(&self) -> DMatrix<C64> {
        outer_sum(self.dim(), &self.vectors)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsampleResult {
    /// Selected rows, ascending, 0-based.
    pub indices: Vec<usize>,
    /// `s_i` for each selected row, all in `(0, 1]`.
    pub scale_weights: Vec<f64>,
    /// Achieved `c₂`: `λ_min(Σ_J s_i u_i u_i*) · m/n`.
    pub lower_bound: f64,
    /// Achieved `c₃`: `λ_max(Σ_J s_i u_i u_i*) · m/n`.
    pub upper_bound: f64,
}

impl SubsampleResult {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bound_ratio(&self) -> f64 {
        self.upper_bound / self.lower_bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsifyConfig {
    pub target_ratio: f64,
    /// Smallest acceptable `c₂`.
    pub lower_floor: f64,
    /// Largest acceptable `c₃`; weights are scaled down to meet it.
    pub upper_cap: f64,
}

impl Default for SparsifyConfig {
    fn default() -> Self {
        Self {
            target_ratio: DEFAULT_TARGET_RATIO,
            lower_floor: DEFAULT_LOWER_FLOOR,
            upper_cap: DEFAULT_UPPER_CAP,
        }
    }
}

/// [`sparsify_with`] using the default floor and cap.
pub fn sparsify(input: &FrameInput, target_ratio: f64) -> Result<SubsampleResult> {
    sparsify_with(
        input,
        &SparsifyConfig {
            target_ratio,
            ..SparsifyConfig::default()
        },
    )
}

pub fn sparsify_with(input: &FrameInput, config: &SparsifyConfig) -> Result<SubsampleResult> {
    if !(config.target_ratio > 1.0 && config.target_ratio.is_finite()) {
        return Err(invalid(format!(
            "target ratio {} must exceed 1",
            config.target_ratio
        )));
    }
    if !(config.lower_floor > 0.0 && config.upper_cap >= config.lower_floor) {
        return Err(invalid("frame floor must be positive and below the cap"));
    }
    let n = input.dim();
    let m = input.len();
    let frame = input.frame_operator();
    let (eig, basis) = hermitian_eigen(&frame);
    let (lo, hi) = (eig[0], eig[n - 1]);
    if lo < 0.5 - HYPOTHESIS_SLACK || hi > 1.5 + HYPOTHESIS_SLACK {
        return Err(Error::FrameHypothesis {
            lower: lo,
            upper: hi,
        });
    }
    let budget = (config.target_ratio * n as f64).ceil() as usize;
    let raw = if m <= budget {
        vec![1.0; m]
    } else {
        barrier_weights(input, &eig, &basis, budget)?
    };
    finish(input, raw, config)
}

/// Runs `steps` barrier updates on the whitened vectors, returning accumulated
/// weights per row.
fn barrier_weights(
    input: &FrameInput,
    eig: &[f64],
    basis: &DMatrix<C64>,
    steps: usize,
) -> Result<Vec<f64>> {
    let n = input.dim();
    let m = input.len();
    let d = steps as f64 / n as f64;
    let sd = d.sqrt();
    let eps_l = 1.0 / sd;
    let eps_u = (sd - 1.0) / (d + sd);
    let delta_l = 1.0;
    let delta_u = (sd + 1.0) / (sd - 1.0);
    let mut lower = -(n as f64) / eps_l;
    let mut upper = n as f64 / eps_u;

    // v_i = A^{-1/2} u_i
    let inv_sqrt = {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            eig.iter().map(|l| C64::new(l.sqrt().recip(), 0.0)),
        ));
        basis * d * basis.adjoint()
    };
    let whitened: Vec<DVector<C64>> = input.vectors.iter().map(|u| &inv_sqrt * u).collect();

    let mut weights = vec![0.0; m];
    let mut b = DMatrix::<C64>::zeros(n, n);
    for _ in 0..steps {
        let (lam, q) = hermitian_eigen(&b);
        let up = upper + delta_u;
        let lp = lower + delta_l;
        if lam.iter().any(|&l| l <= lp) {
            return Err(stall(input, &weights));
        }
        let phi_u: f64 = lam.iter().map(|l| 1.0 / (upper - l)).sum();
        let phi_up: f64 = lam.iter().map(|l| 1.0 / (up - l)).sum();
        let phi_l: f64 = lam.iter().map(|l| 1.0 / (l - lower)).sum();
        let phi_lp: f64 = lam.iter().map(|l| 1.0 / (l - lp)).sum();
        let qa = q.adjoint();

        let mut best: Option<(usize, f64, f64)> = None;
        for (i, v) in whitened.iter().enumerate() {
            let w = &qa * v;
            let (mut u1, mut u2, mut l1, mut l2) = (0.0, 0.0, 0.0, 0.0);
            for (j, z) in w.iter().enumerate() {
                let p = z.norm_sqr();
                let du = up - lam[j];
                let dl = lam[j] - lp;
                u1 += p / du;
                u2 += p / (du * du);
                l1 += p / dl;
                l2 += p / (dl * dl);
            }
            let u_score = u2 / (phi_u - phi_up) + u1;
            let l_score = l2 / (phi_lp - phi_l) - l1;
            if !(l_score > 0.0 && u_score > 0.0 && u_score <= l_score) {
                continue;
            }
            let ratio = u_score / l_score;
            if best.is_none_or(|(_, r, _)| ratio < r) {
                best = Some((i, ratio, 2.0 / (u_score + l_score)));
            }
        }
        let Some((i, _, t)) = best else {
            return Err(stall(input, &weights));
        };
        let v = &whitened[i];
        b.gerc(C64::new(t, 0.0), v, v, C64::new(1.0, 0.0));
        weights[i] += t;
        upper = up;
        lower = lp;
    }
    Ok(weights)
}

fn stall(input: &FrameInput, weights: &[f64]) -> Error {
    let partial = summarize(input, weights.to_vec());
    Error::BarrierStall(Box::new(partial))
}

/// Normalizes raw weights to `max s_i = 1` and measures the achieved bounds.
fn summarize(input: &FrameInput, mut raw: Vec<f64>) -> SubsampleResult {
    let peak = raw.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        raw.iter_mut().for_each(|w| *w /= peak);
    }
    let indices: Vec<usize> = (0..raw.len()).filter(|&i| raw[i] > 0.0).collect();
    let scale_weights: Vec<f64> = indices.iter().map(|&i| raw[i]).collect();
    let (c2, c3) = achieved_bounds(input, &indices, &scale_weights);
    SubsampleResult {
        indices,
        scale_weights,
        lower_bound: c2,
        upper_bound: c3,
    }
}

fn finish(input: &FrameInput, raw: Vec<f64>, config: &SparsifyConfig) -> Result<SubsampleResult> {
    let mut result = summarize(input, raw);
    if result.upper_bound > config.upper_cap {
        let shrink = config.upper_cap / result.upper_bound;
        result.scale_weights.iter_mut().for_each(|s| *s *= shrink);
        result.lower_bound *= shrink;
        result.upper_bound = config.upper_cap;
    }
    if result.lower_bound < config.lower_floor {
        return Err(Error::FrameBounds {
            c2: result.lower_bound,
            c3: result.upper_bound,
            floor: config.lower_floor,
            cap: config.upper_cap,
        });
    }
    Ok(result)
}

/// `(c₂, c₃)` for a weighted selection, by dense eigen-decomposition.
pub fn achieved_bounds(input: &FrameInput, indices: &[usize], weights: &[f64]) -> (f64, f64) {
    let n = input.dim();
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for (&i, &s) in indices.iter().zip(weights) {
        let v = &input.vectors[i];
        acc.gerc(C64::new(s, 0.0), v, v, C64::new(1.0, 0.0));
    }
    let eig = hermitian_eigenvalues(&acc);
    let scale = input.len() as f64 / n as f64;
    (eig[0] * scale, eig[n - 1] * scale)
}

/// Design over the selected points with weights `ρ(x_i)/s_i`, so the rows of the
/// new design matrix are `√s_i` times the selected rows.
pub fn fold_weights(design: &WeightedDesign, result: &SubsampleResult) -> Result<WeightedDesign> {
    if result.indices.len() != result.scale_weights.len() {
        return Err(Error::DimensionMismatch {
            expected: result.indices.len(),
            got: result.scale_weights.len(),
        });
    }
    let mut points = Vec::with_capacity(result.indices.len());
    let mut weights = Vec::with_capacity(result.indices.len());
    for (&i, &s) in result.indices.iter().zip(&result.scale_weights) {
        if i >= design.m() {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: design.m() - 1,
            });
        }
        points.push(design.points()[i]);
        weights.push(design.weights()[i] / s);
    }
    let folded = WeightedDesign::from_weights(design.system(), design.n(), points, weights)?;
    Ok(folded.with_frame_floor(result.lower_bound * design.n() as f64))
}
