use crate::error::invalid;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    UnitInterval,
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    Lebesgue,
}

/// `[0, 1]` (or the unit torus) with Lebesgue measure and a quadrature resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureSpace {
    domain: DomainKind,
    measure: MeasureKind,
    quadrature_nodes: usize,
}

impl MeasureSpace {
    pub const MIN_NODES: usize = 64;

    pub fn new(domain: DomainKind, quadrature_nodes: usize) -> Result<Self> {
        if quadrature_nodes < Self::MIN_NODES {
            return Err(invalid(format!(
                "quadrature_nodes must be at least {}, got {quadrature_nodes}",
                Self::MIN_NODES
            )));
        }
        Ok(Self {
            domain,
            measure: MeasureKind::Lebesgue,
            quadrature_nodes,
        })
    }

    pub fn unit_interval(quadrature_nodes: usize) -> Result<Self> {
        Self::new(DomainKind::UnitInterval, quadrature_nodes)
    }

    pub fn torus(quadrature_nodes: usize) -> Result<Self> {
        Self::new(DomainKind::Torus, quadrature_nodes)
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn measure(&self) -> MeasureKind {
        self.measure
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.quadrature_nodes
    }

    pub fn total_mass(&self) -> f64 {
        1.0
    }

    pub fn contains(&self, x: f64) -> bool {
        (0.0..=1.0).contains(&x)
    }

    pub(crate) fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::PointOutsideDomain(x))
        }
    }

    /// Composite midpoint rule on the uniform grid.
    pub fn midpoint_rule(&self) -> Quadrature {
        let n = self.quadrature_nodes;
        let breaks: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        Quadrature::midpoint(breaks)
    }
}

/// Composite rule: cells `[breaks[j], breaks[j+1]]`, each with `per_cell`
/// consecutive nodes.
#[derive(Clone, Debug)]
pub struct Quadrature {
    breaks: Vec<f64>,
    per_cell: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

// 3-point Gauss–Legendre on [-1, 1]; exact through degree 5
const GAUSS3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

impl Quadrature {
    pub(crate) fn midpoint(breaks: Vec<f64>) -> Self {
        let mut nodes = Vec::with_capacity(breaks.len());
        let mut weights = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            nodes.push(0.5 * (w[0] + w[1]));
            weights.push(w[1] - w[0]);
        }
        Self {
            breaks,
            per_cell: 1,
            nodes,
            weights,
        }
    }

    /// Three Gauss points per cell; cells of zero width are dropped.
    pub(crate) fn gauss3(mut breaks: Vec<f64>) -> Self {
        breaks.dedup_by(|a, b| *a <= *b);
        let mut nodes = Vec::with_capacity(3 * breaks.len());
        let mut weights = Vec::with_capacity(3 * breaks.len());
        for w in breaks.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (t, wt) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                nodes.push(mid + half * t);
                weights.push(half * wt);
            }
        }
        Self {
            breaks,
            per_cell: 3,
            nodes,
            weights,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn cell_count(&self) -> usize {
        self.breaks.len().saturating_sub(1)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Per-cell integrals, in cell order.
    pub fn cell_integrals(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes
            .chunks(self.per_cell)
            .zip(self.weights.chunks(self.per_cell))
            .map(|(xs, ws)| xs.iter().zip(ws).map(|(&x, &w)| w * f(x)).sum())
            .collect()
    }

    /// Integral over `[a, b]`, restricting every overlapping cell with its own rule.
    pub fn integrate_between(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for w in self.breaks.windows(2) {
            let (lo, hi) = (w[0].max(a), w[1].min(b));
            if hi <= lo {
                continue;
            }
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            total += GAUSS3_NODES
                .iter()
                .zip(GAUSS3_WEIGHTS)
                .map(|(t, wt)| half * wt * f(mid + half * t))
                .sum::<f64>();
        }
        total
    }
}
