use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use super::space::{DomainKind, MeasureSpace, Quadrature};
use crate::error::invalid;
use crate::{Error, Result, C64};

/// Largest index served by the Fourier system.
const FOURIER_MAX_INDEX: usize = 1 << 40;
/// Exponential recurrences are re-seeded from `cis` this often.
const RESYNC_EVERY: usize = 128;

/// How the moduli `|b_k(x)|` behave; lets density and evaluation code skip work.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    /// `|b_k(x)| = 1` everywhere.
    UnitModulus,
    /// At most one `b_k` is nonzero at any point.
    DisjointSupport,
    General,
}

pub enum SystemKind {
    /// `b_k(x) = exp(2πi ν_k x)` with frequencies `0, 1, −1, 2, −2, …`.
    FourierTorus,
    /// `b_k = sqrt(3/ℓ_k) · hat_k`, hats of height one on consecutive intervals.
    NormalizedHat { lengths: Vec<f64>, breaks: Vec<f64> },
    /// `b_j = Σ_k Q[k, j] r_k` for an orthonormal reference system `r`.
    CustomTabulated {
        reference: OrthonormalSystem,
        columns: DMatrix<C64>,
        dropped: Vec<usize>,
    },
}

struct Inner {
    space: MeasureSpace,
    kind: SystemKind,
    quadrature: OnceLock<Quadrature>,
}

/// An orthonormal family `{b_k : k ≥ 1}` with pointwise evaluation. Cheap to clone.
#[derive(Clone)]
pub struct OrthonormalSystem {
    inner: Arc<Inner>,
}

impl fmt::Debug for OrthonormalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.inner.kind {
            SystemKind::FourierTorus => "fourier_torus",
            SystemKind::NormalizedHat { .. } => "normalized_hat",
            SystemKind::CustomTabulated { .. } => "custom_tabulated",
        };
        f.debug_struct("OrthonormalSystem")
            .field("kind", &kind)
            .field("max_index", &self.max_index())
            .field("space", &self.inner.space)
            .finish()
    }
}

/// `b_k(x)` with range and domain checks.
pub fn evaluate_basis(system: &OrthonormalSystem, k: usize, x: f64) -> Result<C64> {
    system.evaluate(k, x)
}

impl OrthonormalSystem {
    fn from_kind(space: MeasureSpace, kind: SystemKind) -> Self {
        Self {
            inner: Arc::new(Inner {
                space,
                kind,
                quadrature: OnceLock::new(),
            }),
        }
    }

    pub fn fourier(space: MeasureSpace) -> Result<Self> {
        if space.domain() != DomainKind::Torus {
            return Err(invalid("the Fourier system lives on the torus"));
        }
        Ok(Self::from_kind(space, SystemKind::FourierTorus))
    }

    /// Normalized hats on consecutive intervals of the given lengths, starting at 0.
    pub fn normalized_hat(space: MeasureSpace, lengths: Vec<f64>) -> Result<Self> {
        if space.domain() != DomainKind::UnitInterval {
            return Err(invalid("hat systems live on the unit interval"));
        }
        if lengths.is_empty() {
            return Err(invalid("hat system needs at least one interval"));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(invalid("hat lengths must be positive and finite"));
        }
        let mut breaks = Vec::with_capacity(lengths.len() + 1);
        let mut acc = 0.0;
        breaks.push(0.0);
        for &l in &lengths {
            acc += l;
            breaks.push(acc);
        }
        if acc > 1.0 + 1e-12 {
            return Err(invalid(format!("hat lengths sum to {acc} > 1")));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("hat lengths fall below floating-point resolution"));
        }
        Ok(Self::from_kind(space, SystemKind::NormalizedHat { lengths, breaks }))
    }

    pub(crate) fn custom(
        reference: OrthonormalSystem,
        columns: DMatrix<C64>,
        dropped: Vec<usize>,
    ) -> Self {
        let space = *reference.space();
        Self::from_kind(
            space,
            SystemKind::CustomTabulated {
                reference,
                columns,
                dropped,
            },
        )
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.inner.space
    }

    pub fn kind(&self) -> &SystemKind {
        &self.inner.kind
    }

    pub fn structure(&self) -> Structure {
        match &self.inner.kind {
            SystemKind::FourierTorus => Structure::UnitModulus,
            SystemKind::NormalizedHat { .. } => Structure::DisjointSupport,
            SystemKind::CustomTabulated { .. } => Structure::General,
        }
    }

    pub fn max_index(&self) -> usize {
        match &self.inner.kind {
            SystemKind::FourierTorus => FOURIER_MAX_INDEX,
            SystemKind::NormalizedHat { lengths, .. } => lengths.len(),
            SystemKind::CustomTabulated { columns, .. } => columns.ncols(),
        }
    }

    /// Columns dropped as linearly dependent when a nested basis was built.
    pub fn dropped_columns(&self) -> &[usize] {
        match &self.inner.kind {
            SystemKind::CustomTabulated { dropped, .. } => dropped,
            _ => &[],
        }
    }

    /// Frequency of the `k`-th exponential (Fourier systems).
    pub fn frequency(k: usize) -> i64 {
        let k = k as i64;
        if k % 2 == 0 {
            k / 2
        } else {
            -(k - 1) / 2
        }
    }

    /// Interval `I_k` of the `k`-th hat.
    pub fn hat_interval(&self, k: usize) -> Option<(f64, f64)> {
        match &self.inner.kind {
            SystemKind::NormalizedHat { breaks, .. } if (1..breaks.len()).contains(&k) => {
                Some((breaks[k - 1], breaks[k]))
            }
            _ => None,
        }
    }

    /// Index of the only basis function that can be nonzero at `x` (disjoint supports).
    pub fn active_index(&self, x: f64) -> Option<usize> {
        match &self.inner.kind {
            SystemKind::NormalizedHat { breaks, .. } => {
                let k = breaks.partition_point(|&b| b <= x);
                (k >= 1 && k < breaks.len()).then_some(k)
            }
            _ => None,
        }
    }

    pub fn evaluate(&self, k: usize, x: f64) -> Result<C64> {
        let max = self.max_index();
        if k == 0 || k > max {
            return Err(Error::IndexOutOfRange { index: k, max });
        }
        self.space().check(x)?;
        Ok(self.eval_unchecked(k, x))
    }

    pub(crate) fn eval_unchecked(&self, k: usize, x: f64) -> C64 {
        match &self.inner.kind {
            SystemKind::FourierTorus => C64::cis(TAU * Self::frequency(k) as f64 * x),
            SystemKind::NormalizedHat { breaks, .. } => {
                C64::new(hat_value(breaks[k - 1], breaks[k], x), 0.0)
            }
            SystemKind::CustomTabulated {
                reference, columns, ..
            } => {
                let mut acc = C64::new(0.0, 0.0);
                reference.for_each_nonzero_dyn(x, columns.nrows(), &mut |r, v| {
                    acc += columns[(r - 1, k - 1)] * v;
                });
                acc
            }
        }
    }

    /// Calls `f(k, b_k(x))` for every `k ≤ upto` where `b_k(x)` may be nonzero.
    pub fn for_each_nonzero(&self, x: f64, upto: usize, mut f: impl FnMut(usize, C64)) {
        let upto = upto.min(self.max_index());
        match &self.inner.kind {
            SystemKind::FourierTorus => {
                if upto == 0 {
                    return;
                }
                f(1, C64::new(1.0, 0.0));
                let step = C64::cis(TAU * x);
                let mut pos = C64::new(1.0, 0.0);
                let mut freq = 1usize;
                loop {
                    pos = if freq.is_multiple_of(RESYNC_EVERY) {
                        C64::cis(TAU * freq as f64 * x)
                    } else {
                        pos * step
                    };
                    if 2 * freq > upto {
                        break;
                    }
                    f(2 * freq, pos);
                    if 2 * freq + 1 > upto {
                        break;
                    }
                    f(2 * freq + 1, pos.conj());
                    freq += 1;
                }
            }
            SystemKind::NormalizedHat { breaks, .. } => {
                if let Some(k) = self.active_index(x) {
                    if k <= upto {
                        f(k, C64::new(hat_value(breaks[k - 1], breaks[k], x), 0.0));
                    }
                }
            }
            SystemKind::CustomTabulated {
                reference, columns, ..
            } => {
                let mut row = vec![C64::new(0.0, 0.0); columns.nrows()];
                reference.for_each_nonzero_dyn(x, columns.nrows(), &mut |r, v| row[r - 1] = v);
                for j in 0..upto {
                    let v = columns
                        .column(j)
                        .iter()
                        .zip(&row)
                        .map(|(q, b)| q * b)
                        .sum::<C64>();
                    f(j + 1, v);
                }
            }
        }
    }

    fn for_each_nonzero_dyn(&self, x: f64, upto: usize, f: &mut dyn FnMut(usize, C64)) {
        self.for_each_nonzero(x, upto, f);
    }

    /// `(b_1(x), …, b_n(x))` by direct evaluation.
    pub fn head_row(&self, x: f64, n: usize) -> Vec<C64> {
        match self.structure() {
            Structure::General => {
                let mut row = vec![C64::new(0.0, 0.0); n];
                self.for_each_nonzero(x, n, |k, v| row[k - 1] = v);
                row
            }
            _ => (1..=n).map(|k| self.eval_unchecked(k, x)).collect(),
        }
    }

    /// `Σ_k c_k b_k(x)` for a coefficient vector.
    pub fn synthesize(&self, coeffs: &[C64], x: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        self.for_each_nonzero(x, coeffs.len(), |k, v| acc += coeffs[k - 1] * v);
        acc
    }

    /// Quadrature adapted to the system: the uniform midpoint grid for
    /// exponentials, breakpoint-aligned Gauss cells for hats.
    pub fn quadrature(&self) -> &Quadrature {
        self.inner.quadrature.get_or_init(|| match &self.inner.kind {
            SystemKind::FourierTorus => self.space().midpoint_rule(),
            SystemKind::NormalizedHat { breaks, .. } => {
                let grid = self.space().midpoint_rule();
                // hats are linear between their ends and their peak
                let peaks = breaks.windows(2).map(|w| 0.5 * (w[0] + w[1]));
                let mut all: Vec<f64> = grid.breaks().iter().chain(breaks).copied().chain(peaks).collect();
                all.sort_by(f64::total_cmp);
                Quadrature::gauss3(all)
            }
            SystemKind::CustomTabulated { reference, .. } => reference.quadrature().clone(),
        })
    }

    /// `⟨f, g⟩ = ∫ f · conj(g) dμ` under the system quadrature.
    pub fn inner_product(&self, f: impl Fn(f64) -> C64, g: impl Fn(f64) -> C64) -> C64 {
        let q = self.quadrature();
        q.nodes()
            .iter()
            .zip(q.weights())
            .map(|(&x, &w)| f(x) * g(x).conj() * w)
            .sum()
    }

    /// Gram matrix `⟨b_j, b_k⟩` for `j, k ≤ window`.
    pub fn gram(&self, window: usize) -> DMatrix<C64> {
        let window = window.min(self.max_index());
        let q = self.quadrature();
        let mut gram = DMatrix::<C64>::zeros(window, window);
        let mut row = vec![C64::new(0.0, 0.0); window];
        for (&x, &w) in q.nodes().iter().zip(q.weights()) {
            row.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            self.for_each_nonzero(x, window, |k, v| row[k - 1] = v);
            for (j, bj) in row.iter().enumerate() {
                if bj.norm_sqr() == 0.0 {
                    continue;
                }
                for (k, bk) in row.iter().enumerate() {
                    gram[(j, k)] += bj * bk.conj() * w;
                }
            }
        }
        gram
    }

    /// Largest deviation of the Gram matrix on the first `window` indices from the identity.
    pub fn gram_defect(&self, window: usize) -> f64 {
        let g = self.gram(window);
        let mut worst: f64 = 0.0;
        for j in 0..g.nrows() {
            for k in 0..g.ncols() {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((g[(j, k)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

fn hat_value(lo: f64, hi: f64, x: f64) -> f64 {
    let width = hi - lo;
    let half = 0.5 * width;
    let height = 1.0 - (x - (lo + half)).abs() / half;
    if height <= 0.0 {
        0.0
    } else {
        (3.0 / width).sqrt() * height
    }
}
