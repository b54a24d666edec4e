use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::system::OrthonormalSystem;
use crate::error::invalid;
use crate::{Result, C64};

/// Certified decay `a_n ≤ c · n^{-α} · log^β(n+1)` of the approximation numbers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayCertificate {
    alpha: f64,
    beta: f64,
    c: f64,
}

impl DecayCertificate {
    /// Requires `α > 1/2`, or `α = 1/2` together with `β < −3/2` (the limit case
    /// served by logarithmic density weights).
    pub fn new(alpha: f64, beta: f64, c: f64) -> Result<Self> {
        let limit_case = alpha == 0.5 && beta < -1.5;
        if !(alpha > 0.5 || limit_case) || !alpha.is_finite() {
            return Err(invalid(format!("decay exponent α={alpha} must exceed 1/2")));
        }
        if !(c > 0.0 && c.is_finite()) || !beta.is_finite() {
            return Err(invalid("decay constant c must be positive, β finite"));
        }
        Ok(Self { alpha, beta, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `a_n` bound for `n ≥ 1`.
    pub fn bound(&self, n: usize) -> f64 {
        let n = n.max(1) as f64;
        self.c * n.powf(-self.alpha) * (n + 1.0).ln().powf(self.beta)
    }

    /// `a_{⌈n/4⌉}`, the projection-error scale of the nested basis.
    pub fn quarter_bound(&self, n: usize) -> f64 {
        self.bound(n.div_ceil(4).max(1))
    }

    /// `ε_n = n^{-α} log^β(n+1)` without the constant.
    pub fn epsilon(&self, n: usize) -> f64 {
        self.bound(n) / self.c
    }
}

/// Constraint defining the members of a model class.
#[derive(Clone, Debug)]
pub enum CoefficientRule {
    /// `|f̂(k)| ≤ bounds[k−1]`.
    Pointwise(Vec<f64>),
    /// `Σ_{k>j} |f̂(k)|² ≤ envelope[j]²` for `j = 0..K`, with a nonincreasing envelope.
    TailEnvelope(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemberOrigin {
    /// All admissible mass on one coefficient.
    Spike(usize),
    /// Flat profile on the dyadic block `{n2^ℓ+1, …, n2^{ℓ+1}}`.
    Block(usize),
    /// The whole tail beyond `n` at its bound profile.
    Tail,
    Random(usize),
}

#[derive(Clone, Debug)]
pub struct Member {
    pub coeffs: Vec<C64>,
    pub origin: MemberOrigin,
}

/// Finite search family standing in for the countable class, built for one `n`.
#[derive(Clone, Debug)]
pub struct MemberFamily {
    pub n: usize,
    pub members: Vec<Member>,
}

impl MemberFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Target functions as coefficient vectors of length `truncation` in `system`.
#[derive(Clone, Debug)]
pub struct ModelClass {
    system: OrthonormalSystem,
    rule: CoefficientRule,
    decay: DecayCertificate,
    truncation: usize,
}

const RULE_SLACK: f64 = 1e-12;

impl ModelClass {
    /// Class `{f : ‖f − P_j f‖ ≤ min_{i≤j} a_i for all j}` from a decay certificate.
    pub fn tail_decay(
        system: &OrthonormalSystem,
        decay: DecayCertificate,
        truncation: usize,
    ) -> Result<Self> {
        Self::check_truncation(system, truncation)?;
        let mut envelope = Vec::with_capacity(truncation + 1);
        let mut running = decay.bound(1);
        envelope.push(running);
        for j in 1..=truncation {
            running = running.min(decay.bound(j));
            envelope.push(running);
        }
        Ok(Self {
            system: system.clone(),
            rule: CoefficientRule::TailEnvelope(envelope),
            decay,
            truncation,
        })
    }

    /// Class `{f : |f̂(k)| ≤ bounds[k−1]}`; `decay` must dominate its tails.
    pub fn pointwise(
        system: &OrthonormalSystem,
        bounds: Vec<f64>,
        decay: DecayCertificate,
    ) -> Result<Self> {
        Self::check_truncation(system, bounds.len())?;
        if bounds.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(invalid("coefficient bounds must be nonnegative"));
        }
        Ok(Self {
            system: system.clone(),
            truncation: bounds.len(),
            rule: CoefficientRule::Pointwise(bounds),
            decay,
        })
    }

    fn check_truncation(system: &OrthonormalSystem, truncation: usize) -> Result<()> {
        if truncation == 0 || truncation > system.max_index() {
            return Err(invalid(format!(
                "truncation {truncation} outside 1..={}",
                system.max_index()
            )));
        }
        Ok(())
    }

    pub fn system(&self) -> &OrthonormalSystem {
        &self.system
    }

    pub fn rule(&self) -> &CoefficientRule {
        &self.rule
    }

    pub fn decay(&self) -> &DecayCertificate {
        &self.decay
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Whether `coeffs` (length ≤ truncation) satisfies the coefficient rule.
    pub fn respects(&self, coeffs: &[C64]) -> bool {
        if coeffs.len() > self.truncation {
            return false;
        }
        match &self.rule {
            CoefficientRule::Pointwise(bounds) => coeffs
                .iter()
                .zip(bounds)
                .all(|(c, b)| c.norm() <= b * (1.0 + RULE_SLACK)),
            CoefficientRule::TailEnvelope(env) => {
                tails(coeffs)
                    .iter()
                    .zip(env)
                    .all(|(t, e)| t.sqrt() <= e * (1.0 + RULE_SLACK) + f64::MIN_POSITIVE)
            }
        }
    }

    /// Largest `s ≥ 0` with `s · direction` admissible (infinite for the zero vector).
    pub fn max_admissible_scale(&self, direction: &[C64]) -> f64 {
        match &self.rule {
            CoefficientRule::Pointwise(bounds) => direction
                .iter()
                .zip(bounds)
                .filter(|(d, _)| d.norm() > 0.0)
                .map(|(d, b)| b / d.norm())
                .fold(f64::INFINITY, f64::min),
            CoefficientRule::TailEnvelope(env) => tails(direction)
                .iter()
                .zip(env)
                .filter(|(t, _)| **t > 0.0)
                .map(|(t, e)| e / t.sqrt())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Per-index magnitude profile used for random draws and the tail member.
    fn profile(&self, k: usize) -> f64 {
        match &self.rule {
            CoefficientRule::Pointwise(bounds) => bounds[k - 1],
            CoefficientRule::TailEnvelope(env) => (env[k - 1].powi(2) - env[k].powi(2)).max(0.0).sqrt(),
        }
    }

    fn scaled_to_boundary(&self, mut coeffs: Vec<C64>) -> Option<Vec<C64>> {
        let s = self.max_admissible_scale(&coeffs);
        if !s.is_finite() || s == 0.0 {
            return None;
        }
        coeffs.iter_mut().for_each(|c| *c *= s);
        Some(coeffs)
    }

    /// Search family for dimension `n`: extremal members (spikes at the start of
    /// every dyadic tail block, flat block profiles, the full tail at its bound)
    /// followed by `random` seeded members drawn uniformly within the bounds.
    pub fn members(&self, n: usize, random: usize, seed: u64) -> MemberFamily {
        let len = self.truncation;
        let zero = C64::new(0.0, 0.0);
        let mut members = Vec::new();
        let mut push = |coeffs: Option<Vec<C64>>, origin| {
            if let Some(coeffs) = coeffs {
                members.push(Member { coeffs, origin });
            }
        };

        let mut block = 0;
        while n.max(1) << block < len {
            let lo = (n.max(1) << block) + 1;
            let hi = (n.max(1) << (block + 1)).min(len);
            let mut spike = vec![zero; len];
            spike[lo - 1] = C64::new(1.0, 0.0);
            push(self.scaled_to_boundary(spike), MemberOrigin::Spike(lo));
            let mut flat = vec![zero; len];
            flat[lo - 1..hi].iter_mut().for_each(|c| *c = C64::new(1.0, 0.0));
            push(self.scaled_to_boundary(flat), MemberOrigin::Block(block));
            block += 1;
        }
        if n < len {
            let tail: Vec<C64> = (1..=len)
                .map(|k| C64::new(if k > n { self.profile(k) } else { 0.0 }, 0.0))
                .collect();
            push(self.scaled_to_boundary(tail), MemberOrigin::Tail);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for r in 0..random {
            let mut coeffs: Vec<C64> = (1..=len)
                .map(|k| {
                    let b = match &self.rule {
                        CoefficientRule::Pointwise(bounds) => bounds[k - 1],
                        CoefficientRule::TailEnvelope(env) => env[k - 1],
                    };
                    C64::new(b * rng.random_range(-1.0..=1.0), 0.0)
                })
                .collect();
            let s = self.max_admissible_scale(&coeffs);
            if s < 1.0 {
                coeffs.iter_mut().for_each(|c| *c *= s);
            }
            members.push(Member {
                coeffs,
                origin: MemberOrigin::Random(r),
            });
        }
        MemberFamily { n, members }
    }
}

/// `tails[j] = Σ_{k>j} |c_k|²` for `j = 0..len`.
fn tails(coeffs: &[C64]) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() + 1];
    for j in (0..coeffs.len()).rev() {
        out[j] = out[j + 1] + coeffs[j].norm_sqr();
    }
    out
}
