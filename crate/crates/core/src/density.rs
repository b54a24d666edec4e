//! The two-part sampling density
//!
//! ```text
//! ρ(x) = ½ · [ (1/n) Σ_{k≤n} |b_k(x)|²  +  (1/Z_n) Σ_{n<k≤K} w_k |b_k(x)|² ]
//! ```
//!
//! with `Z_n = Σ_{n<k≤K} w_k`, tail weights `w_k = k^{-2δ}` (or the logarithmic
//! limit-case family), and an inverse-CDF sampler for i.i.d. draws from `ρ dμ`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{OrthonormalSystem, Structure};
use crate::error::invalid;
use crate::series::{LogWeights, PowerWeights, WeightSequence};
use crate::{Error, Result};

/// Largest relative tail mass `Σ_{k>K} w_k / Z_n` a constructed density may drop.
pub const MAX_DROPPED_TAIL: f64 = 1e-3;
/// Default tail cutoff is the first `K = 64·n·2^j` meeting [`MAX_DROPPED_TAIL`].
pub const DEFAULT_CUTOFF_FACTOR: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightMode {
    /// `w_k = k^{-2δ}`, `δ > 1/2`.
    Power { delta: f64 },
    /// `w_k = k^{-1} log(k)^{2(β−δ′)}`, summable iff `δ′ > β + 1/2`.
    Log { beta: f64, delta_prime: f64 },
}

impl WeightMode {
    pub fn power(delta: f64) -> Self {
        Self::Power { delta }
    }

    /// Midpoint `(1/2 + α)/2` of the admissible interval for `δ`.
    pub fn default_delta(alpha: f64) -> f64 {
        0.5 * (0.5 + alpha)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightMode::Power { delta } if !(delta > 0.5 && delta.is_finite()) => Err(invalid(
                format!("power weights need δ > 1/2 for a summable tail, got {delta}"),
            )),
            WeightMode::Log { beta, delta_prime } if !(delta_prime > beta + 0.5) => {
                Err(invalid(format!(
                    "log weights need δ′ > β + 1/2 for a summable tail, got β={beta}, δ′={delta_prime}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.sequence().value(k as f64)
    }

    fn sequence(&self) -> Box<dyn WeightSequence + Send + Sync> {
        match *self {
            WeightMode::Power { delta } => Box::new(PowerWeights {
                exponent: 2.0 * delta,
            }),
            WeightMode::Log { beta, delta_prime } => Box::new(LogWeights {
                power: 2.0 * (beta - delta_prime),
            }),
        }
    }
}

/// `Z_n = Σ_{n<k≤K} w_k`.
pub fn tail_normalizer(n: usize, mode: WeightMode, cutoff: usize) -> Result<f64> {
    mode.validate()?;
    if cutoff <= n {
        return Err(invalid(format!("tail cutoff K={cutoff} must exceed n={n}")));
    }
    Ok(mode.sequence().range_sum(n + 1, cutoff))
}

/// `Σ_{k>K} w_k / Z_n`, the relative mass dropped by truncating at `K`.
pub fn dropped_tail_fraction(n: usize, mode: WeightMode, cutoff: usize) -> Result<f64> {
    let z = tail_normalizer(n, mode, cutoff)?;
    Ok(mode.sequence().tail_sum(cutoff + 1) / z)
}

/// Piecewise-linear CDF over the system's quadrature cells.
#[derive(Debug)]
struct CdfTable {
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Debug)]
pub struct SamplingDensity {
    system: OrthonormalSystem,
    n: usize,
    mode: WeightMode,
    cutoff: usize,
    z_n: f64,
    dropped: f64,
    cdf: OnceLock<Option<CdfTable>>,
}

impl SamplingDensity {
    /// Builds the density for head dimension `n`.
    ///
    /// With `cutoff = None` the tail is truncated at the first `K = 64·n·2^j` whose
    /// dropped relative mass is below [`MAX_DROPPED_TAIL`]; an explicit cutoff must meet
    /// the same limit.
    pub fn new(
        system: &OrthonormalSystem,
        n: usize,
        mode: WeightMode,
        cutoff: Option<usize>,
    ) -> Result<Self> {
        mode.validate()?;
        if n == 0 {
            return Err(invalid("head dimension n must be positive"));
        }
        let max = system.max_index();
        if n >= max {
            return Err(invalid(format!("system has only {max} functions, need more than n={n}")));
        }
        let cutoff = match cutoff {
            Some(k) => k,
            None => {
                let mut k = (DEFAULT_CUTOFF_FACTOR * n).min(max);
                while k < max && dropped_tail_fraction(n, mode, k)? >= MAX_DROPPED_TAIL {
                    k = k.saturating_mul(2).min(max);
                }
                k
            }
        };
        if cutoff > max {
            return Err(invalid(format!("tail cutoff {cutoff} exceeds system size {max}")));
        }
        let z_n = tail_normalizer(n, mode, cutoff)?;
        let dropped = dropped_tail_fraction(n, mode, cutoff)?;
        if dropped >= MAX_DROPPED_TAIL {
            return Err(Error::TailTruncation {
                cutoff,
                dropped,
                limit: MAX_DROPPED_TAIL,
            });
        }
        Ok(Self {
            system: system.clone(),
            n,
            mode,
            cutoff,
            z_n,
            dropped,
            cdf: OnceLock::new(),
        })
    }

    pub fn system(&self) -> &OrthonormalSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn tail_cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn z_n(&self) -> f64 {
        self.z_n
    }

    pub fn dropped_tail(&self) -> f64 {
        self.dropped
    }

    /// `Σ_{k≤n} |b_k(x)|²`.
    pub fn head_energy(&self, x: f64) -> f64 {
        match self.system.structure() {
            Structure::UnitModulus => self.n as f64,
            _ => {
                let mut acc = 0.0;
                self.system
                    .for_each_nonzero(x, self.n, |_, v| acc += v.norm_sqr());
                acc
            }
        }
    }

    /// `Σ_{k∈[lo,hi]} w_k |b_k(x)|²` when `weighted`, else the unweighted energy.
    fn range_energy(&self, x: f64, lo: usize, hi: usize, weighted: bool) -> f64 {
        if hi < lo {
            return 0.0;
        }
        match self.system.structure() {
            Structure::UnitModulus => {
                if weighted {
                    self.mode.sequence().range_sum(lo, hi)
                } else {
                    (hi - lo + 1) as f64
                }
            }
            Structure::DisjointSupport => match self.system.active_index(x) {
                Some(k) if (lo..=hi).contains(&k) => {
                    let b = self.system.eval_unchecked(k, x).norm_sqr();
                    if weighted {
                        self.mode.weight(k) * b
                    } else {
                        b
                    }
                }
                _ => 0.0,
            },
            Structure::General => {
                let mut acc = 0.0;
                self.system.for_each_nonzero(x, hi, |k, v| {
                    if k >= lo {
                        let w = if weighted { self.mode.weight(k) } else { 1.0 };
                        acc += w * v.norm_sqr();
                    }
                });
                acc
            }
        }
    }

    /// `(1/Z_n) Σ_{n<k≤K} w_k |b_k(x)|²`.
    pub fn tail_term(&self, x: f64) -> f64 {
        self.range_energy(x, self.n + 1, self.cutoff, true) / self.z_n
    }

    /// `ρ(x)` with domain check.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.system.space().check(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match self.system.structure() {
            // both halves average to one exactly
            Structure::UnitModulus => 1.0,
            _ => 0.5 * (self.head_energy(x) / self.n as f64 + self.tail_term(x)),
        }
    }

    /// `ρ(x)^{-1} Σ_{k≤n} |b_k(x)|²`, the squared norm of a design row.
    pub fn row_norm_sq(&self, x: f64) -> f64 {
        let h = self.head_energy(x);
        if h == 0.0 {
            0.0
        } else {
            h / self.eval_unchecked(x)
        }
    }

    /// `∫ ρ dμ` under the system quadrature.
    pub fn integral(&self) -> f64 {
        self.system.quadrature().integrate(|x| self.eval_unchecked(x))
    }

    /// `∫_a^b ρ dμ`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.system
            .quadrature()
            .integrate_between(a, b, |x| self.eval_unchecked(x))
    }

    /// Dyadic tail blocks `I_ℓ = {n2^ℓ+1, …, n2^{ℓ+1}}` fully inside the cutoff.
    pub fn dyadic_blocks(&self) -> Vec<(usize, usize)> {
        let mut blocks = Vec::new();
        let mut l = 0;
        while l < 60 {
            let hi = match self.n.checked_mul(1 << (l + 1)) {
                Some(hi) => hi,
                None => break,
            };
            if hi > self.cutoff {
                break;
            }
            blocks.push((self.n * (1 << l) + 1, hi));
            l += 1;
        }
        blocks
    }

    /// Row bound for block `ℓ`: `2 Z_n (n 2^{ℓ+1})^{2δ}`, from `w_k ≥ (n2^{ℓ+1})^{-2δ}`
    /// on the block. Power weights only.
    pub fn block_row_bound(&self, block: usize) -> Option<f64> {
        match self.mode {
            WeightMode::Power { delta } => {
                let top = (self.n * (1 << (block + 1))) as f64;
                Some(2.0 * self.z_n * top.powf(2.0 * delta))
            }
            WeightMode::Log { .. } => None,
        }
    }

    /// Largest ratio `ρ(x)^{-1} Σ_{k∈I_ℓ}|b_k(x)|² / bound_ℓ` over quadrature nodes and
    /// dyadic blocks (power weights); at most one when the block bounds hold.
    pub fn block_row_ratio(&self, bound: impl Fn(usize) -> f64) -> f64 {
        let blocks = self.dyadic_blocks();
        let mut worst: f64 = 0.0;
        for &x in self.system.quadrature().nodes() {
            let rho = self.eval_unchecked(x);
            if rho <= 0.0 {
                continue;
            }
            for (l, &(lo, hi)) in blocks.iter().enumerate() {
                let e = self.range_energy(x, lo, hi, false);
                worst = worst.max(e / rho / bound(l));
            }
        }
        worst
    }

    fn cdf(&self) -> Option<&CdfTable> {
        self.cdf
            .get_or_init(|| {
                let q = self.system.quadrature();
                let masses = q.cell_integrals(|x| self.eval_unchecked(x).max(0.0));
                let mut cumulative = Vec::with_capacity(masses.len() + 1);
                let mut acc = 0.0;
                cumulative.push(0.0);
                for m in masses {
                    acc += m;
                    cumulative.push(acc);
                }
                (acc > 0.0).then(|| {
                    cumulative.iter_mut().for_each(|c| *c /= acc);
                    CdfTable {
                        breaks: q.breaks().to_vec(),
                        cumulative,
                    }
                })
            })
            .as_ref()
    }

    /// `m` i.i.d. draws from `ρ dμ` by inverting the tabulated CDF; deterministic in
    /// `seed`. Points where `ρ` vanishes (hat endpoints) are redrawn.
    pub fn sample_points(&self, m: usize, seed: u64) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(invalid("sample count m must be positive"));
        }
        let table = self.cdf().ok_or(Error::DegenerateDensity)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(m);
        while points.len() < m {
            let u: f64 = rng.random();
            let x = table.invert(u);
            if self.eval_unchecked(x) > 0.0 {
                points.push(x);
            }
        }
        Ok(points)
    }
}

impl CdfTable {
    fn invert(&self, u: f64) -> f64 {
        // first cell whose upper cumulative value exceeds u
        let cell = self
            .cumulative
            .partition_point(|&c| c <= u)
            .clamp(1, self.cumulative.len() - 1)
            - 1;
        let (c0, c1) = (self.cumulative[cell], self.cumulative[cell + 1]);
        let (lo, hi) = (self.breaks[cell], self.breaks[cell + 1]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        (lo + t * (hi - lo)).clamp(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::MeasureSpace;

    fn fourier() -> OrthonormalSystem {
        OrthonormalSystem::fourier(MeasureSpace::torus(512).unwrap()).unwrap()
    }

    fn hat_system(count: usize) -> OrthonormalSystem {
        let raw: Vec<f64> = (1..=count).map(|i| (i as f64).powi(-3)).collect();
        let zeta3 = crate::series::zeta(3.0);
        OrthonormalSystem::normalized_hat(
            MeasureSpace::unit_interval(1024).unwrap(),
            raw.iter().map(|l| l / zeta3).collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalizer_single_term() {
        let z = tail_normalizer(1, WeightMode::power(1.0), 2).unwrap();
        assert_eq!(z, 0.25);
    }

    #[test]
    fn normalizer_converges_to_basel_remainder() {
        // brute-force partial sums to K = 10^7 leave a remainder ~1e-7; the analytic
        // limit π²/6 − 5/4 is the oracle
        let limit = std::f64::consts::PI.powi(2) / 6.0 - 1.25;
        assert!((limit - 0.394_934).abs() < 1e-6);
        let z = tail_normalizer(2, WeightMode::power(1.0), 1 << 40).unwrap();
        assert!((z - limit).abs() < 1e-11, "{z}");
        let brute: f64 = (3..=2_000_000u64).map(|k| 1.0 / (k * k) as f64).sum();
        assert!((brute - limit).abs() < 1e-6);
    }

    #[test]
    fn normalizer_bracket_for_three_quarters() {
        let n = 10;
        let z = tail_normalizer(n, WeightMode::power(0.75), 1 << 40).unwrap();
        let ratio = z / (n as f64).powf(-0.5);
        assert!((1.0..=4.0).contains(&ratio), "{ratio}");
        // integral comparison: ∫_{n+1}^∞ ≤ Z ≤ ∫_n^∞
        let lower = 2.0 * ((n + 1) as f64).powf(-0.5);
        let upper = 2.0 * (n as f64).powf(-0.5);
        assert!(lower <= z && z <= upper);
    }

    #[test]
    fn normalizer_bracket_for_power_weights() {
        for delta in [0.6, 0.75, 1.0, 1.5] {
            for n in [8, 16, 100, 1000] {
                let z = tail_normalizer(n, WeightMode::power(delta), 1 << 40).unwrap();
                let r = z / (n as f64).powf(1.0 - 2.0 * delta);
                let k = 2.0 * delta - 1.0;
                assert!(r >= 1.0 / (2.0 * k) && r <= 2.0 / k, "δ={delta} n={n} r={r}");
            }
        }
    }

    #[test]
    fn normalizer_rejects_bad_inputs() {
        assert!(tail_normalizer(4, WeightMode::power(0.5), 100).is_err());
        assert!(tail_normalizer(4, WeightMode::power(1.0), 4).is_err());
        let bad_log = WeightMode::Log {
            beta: 0.0,
            delta_prime: 0.4,
        };
        assert!(tail_normalizer(4, bad_log, 100).is_err());
    }

    #[test]
    fn fourier_density_is_one() {
        let s = fourier();
        let d = SamplingDensity::new(&s, 8, WeightMode::power(0.75), None).unwrap();
        for x in [0.0, 0.3, 0.99] {
            assert_eq!(d.eval(x).unwrap(), 1.0);
        }
        assert!((d.integral() - 1.0).abs() < 1e-10);
        assert!(d.dropped_tail() < MAX_DROPPED_TAIL);
    }

    #[test]
    fn explicit_short_cutoff_fails_certification() {
        let s = fourier();
        let err = SamplingDensity::new(&s, 8, WeightMode::power(0.75), Some(64 * 8)).unwrap_err();
        assert!(matches!(err, Error::TailTruncation { .. }));
    }

    #[test]
    fn hat_density_matches_direct_summation() {
        let s = hat_system(2000);
        let n = 4;
        let delta = 1.25;
        let d = SamplingDensity::new(&s, n, WeightMode::power(delta), None).unwrap();
        let z: f64 = (n + 1..=d.tail_cutoff()).map(|k| (k as f64).powf(-2.0 * delta)).sum();
        assert!((z - d.z_n()).abs() < 1e-14);
        for x in [0.1, 0.5, 0.83, 0.9, 0.95, 0.97] {
            // brute force over every index
            let mut head = 0.0;
            let mut tail = 0.0;
            for k in 1..=d.tail_cutoff() {
                let b = s.evaluate(k, x).unwrap().norm_sqr();
                if k <= n {
                    head += b;
                } else {
                    tail += (k as f64).powf(-2.0 * delta) * b;
                }
            }
            let expected = 0.5 * (head / n as f64 + tail / z);
            assert!((d.eval(x).unwrap() - expected).abs() < 1e-12 * expected.max(1.0));
        }
        assert!((d.integral() - 1.0).abs() < 5e-3);
    }

    #[test]
    fn density_vanishes_where_every_function_does() {
        let s = OrthonormalSystem::normalized_hat(
            MeasureSpace::unit_interval(128).unwrap(),
            vec![0.25; 3],
        )
        .unwrap();
        let d = SamplingDensity::new(&s, 1, WeightMode::power(1.0), Some(3)).unwrap_err();
        // K=3 cannot be certified; the zero itself is visible on any density
        assert!(matches!(d, Error::TailTruncation { .. }));
        let lengths: Vec<f64> = (0..600).map(|_| 0.5 / 600.0).collect();
        let s = OrthonormalSystem::normalized_hat(MeasureSpace::unit_interval(128).unwrap(), lengths)
            .unwrap();
        let d = SamplingDensity::new(&s, 1, WeightMode::power(1.5), None).unwrap();
        assert_eq!(d.eval(0.75).unwrap(), 0.0);
    }

    #[test]
    fn row_norm_bounded_by_twice_n() {
        let s = hat_system(3000);
        for n in [1, 2, 5, 9] {
            let d = SamplingDensity::new(&s, n, WeightMode::power(1.25), None).unwrap();
            for &x in s.quadrature().nodes().iter().step_by(7) {
                assert!(d.row_norm_sq(x) <= 2.0 * n as f64 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn block_row_bounds_hold_with_top_of_block_weight() {
        let s = hat_system(3000);
        let d = SamplingDensity::new(&s, 4, WeightMode::power(1.25), None).unwrap();
        assert!(!d.dyadic_blocks().is_empty());
        let ratio = d.block_row_ratio(|l| d.block_row_bound(l).unwrap());
        assert!(ratio <= 1.0 + 1e-12, "{ratio}");
    }

    #[test]
    fn block_bound_with_bottom_of_block_weight_fails_for_hats() {
        // 2 Z_n n^{2δ} 2^{2δℓ} undercounts k ∈ I_ℓ near the top of the block
        let s = hat_system(3000);
        let d = SamplingDensity::new(&s, 4, WeightMode::power(1.25), None).unwrap();
        let ratio = d.block_row_ratio(|l| {
            2.0 * d.z_n() * (4.0f64 * (1 << l) as f64).powf(2.5)
        });
        assert!(ratio > 1.0);
    }

    #[test]
    fn sampler_is_deterministic_and_uniform_for_fourier() {
        let s = fourier();
        let d = SamplingDensity::new(&s, 4, WeightMode::power(1.0), None).unwrap();
        let a = d.sample_points(100_000, 9).unwrap();
        let b = d.sample_points(100_000, 9).unwrap();
        assert_eq!(a, b);
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((mean - 0.5).abs() < 5e-3);
        assert!(d.sample_points(0, 1).is_err());
    }

    #[test]
    fn sampler_matches_hat_interval_mass() {
        let s = hat_system(2000);
        let d = SamplingDensity::new(&s, 4, WeightMode::power(1.25), None).unwrap();
        let (lo, hi) = s.hat_interval(1).unwrap();
        let p = d.mass_between(lo, hi);
        let m = 100_000;
        let pts = d.sample_points(m, 3).unwrap();
        let freq = pts.iter().filter(|&&x| x >= lo && x <= hi).count() as f64 / m as f64;
        let se = (p * (1.0 - p) / m as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "freq={freq} p={p} se={se}");
    }

    #[test]
    fn log_weights_density_on_fourier() {
        let s = fourier();
        let mode = WeightMode::Log {
            beta: -2.0,
            delta_prime: 2.0,
        };
        let d = SamplingDensity::new(&s, 4, mode, None).unwrap();
        assert!(d.dropped_tail() < MAX_DROPPED_TAIL);
        assert!(d.z_n() > 0.0);
        assert_eq!(d.eval(0.2).unwrap(), 1.0);
    }
}
