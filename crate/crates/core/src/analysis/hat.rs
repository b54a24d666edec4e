use crate::basis::{DecayCertificate, MeasureSpace, ModelClass, OrthonormalSystem};
use crate::density::{SamplingDensity, WeightMode};
use crate::error::invalid;
use crate::estimator::WeightedDesign;
use crate::series::{zeta, PowerWeights, WeightSequence};
use crate::Result;

/// Hats of lengths `ℓ_i = i^{-α}/ζ(α)` and heights bounded by `h_i = i^{-β}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatClassSpec {
    pub alpha_len: f64,
    pub beta_h: f64,
    /// Number of hats in the finite system.
    pub truncation: usize,
}

impl HatClassSpec {
    pub const DEFAULT_TRUNCATION: usize = 8192;

    pub fn new(alpha_len: f64, beta_h: f64, truncation: usize) -> Result<Self> {
        if !(alpha_len > 1.0 && alpha_len.is_finite()) {
            return Err(invalid(format!("hat length exponent {alpha_len} must exceed 1")));
        }
        if !(beta_h > 0.0 && beta_h.is_finite()) {
            return Err(invalid(format!("hat height exponent {beta_h} must be positive")));
        }
        if truncation < 2 {
            return Err(invalid("hat class needs at least two hats"));
        }
        Ok(Self {
            alpha_len,
            beta_h,
            truncation,
        })
    }

    pub fn length(&self, i: usize) -> f64 {
        (i as f64).powf(-self.alpha_len) / zeta(self.alpha_len)
    }

    pub fn height(&self, i: usize) -> f64 {
        (i as f64).powf(-self.beta_h)
    }

    pub fn lengths(&self) -> Vec<f64> {
        let z = zeta(self.alpha_len);
        (1..=self.truncation)
            .map(|i| (i as f64).powf(-self.alpha_len) / z)
            .collect()
    }

    /// Bound on the coefficient of the normalized hat: `h_i · sqrt(ℓ_i/3)`.
    pub fn coefficient_bound(&self, i: usize) -> f64 {
        self.height(i) * (self.length(i) / 3.0).sqrt()
    }

    /// Order `β + (α−1)/2` of the sampling numbers.
    pub fn rate(&self) -> f64 {
        self.beta_h + (self.alpha_len - 1.0) / 2.0
    }

    pub fn system(&self) -> Result<OrthonormalSystem> {
        OrthonormalSystem::normalized_hat(MeasureSpace::unit_interval(64)?, self.lengths())
    }

    /// The class as pointwise coefficient bounds, with a decay certificate
    /// `c n^{-rate}` dominating the sampling numbers.
    pub fn model(&self, system: &OrthonormalSystem) -> Result<ModelClass> {
        let rate = self.rate();
        let exponent = 2.0 * self.beta_h + self.alpha_len;
        let norm = 3.0 * zeta(self.alpha_len);
        // e_n² = Σ_{i>n} i^{-(2β+α)} / (3ζ(α)), accumulated from the far end
        let weights = PowerWeights { exponent };
        let mut tails = vec![0.0; self.truncation + 1];
        tails[self.truncation] = weights.tail_sum(self.truncation + 1);
        for n in (0..self.truncation).rev() {
            tails[n] = tails[n + 1] + weights.value((n + 1) as f64);
        }
        let c = tails
            .iter()
            .enumerate()
            .map(|(n, t)| (t / norm).sqrt() * (n.max(1) as f64).powf(rate))
            .fold(0.0, f64::max);
        let decay = DecayCertificate::new(rate, 0.0, c * (1.0 + 1e-9))?;
        let bounds = (1..=self.truncation).map(|i| self.coefficient_bound(i)).collect();
        ModelClass::pointwise(system, bounds, decay)
    }
}

/// `e_n = sqrt((1/3) Σ_{i>n} h_i² ℓ_i)` over the infinite class.
pub fn hat_sampling_number(spec: &HatClassSpec, n: usize) -> f64 {
    let tail = PowerWeights {
        exponent: 2.0 * spec.beta_h + spec.alpha_len,
    }
    .tail_sum(n + 1);
    (tail / (3.0 * zeta(spec.alpha_len))).sqrt()
}

/// Same sum cut at the finite system size.
pub fn hat_sampling_number_truncated(spec: &HatClassSpec, n: usize) -> f64 {
    let exponent = 2.0 * spec.beta_h + spec.alpha_len;
    let tail: f64 = ((n + 1)..=spec.truncation)
        .map(|i| (i as f64).powf(-exponent))
        .sum();
    (tail / (3.0 * zeta(spec.alpha_len))).sqrt()
}

/// Uniform-norm width `d_n = h_{n+1}`.
pub fn hat_kolmogorov_width(spec: &HatClassSpec, n: usize) -> f64 {
    ((n + 1) as f64).powf(-spec.beta_h)
}

/// Interpolation at the peaks of the first `n` hats, posed as a weighted
/// least-squares design with the class's sampling density as weights.
pub fn peak_interpolation_design(
    spec: &HatClassSpec,
    system: &OrthonormalSystem,
    n: usize,
) -> Result<WeightedDesign> {
    if n == 0 || n >= spec.truncation {
        return Err(invalid(format!("peak interpolation needs 1 ≤ n < {}", spec.truncation)));
    }
    let mode = WeightMode::power(WeightMode::default_delta(spec.rate()));
    let density = SamplingDensity::new(system, n, mode, None)?;
    let peaks: Vec<f64> = (1..=n)
        .map(|i| {
            let (lo, hi) = system.hat_interval(i).expect("hat system");
            0.5 * (lo + hi)
        })
        .collect();
    WeightedDesign::assemble(system, &density, &peaks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> HatClassSpec {
        HatClassSpec::new(3.0, 1.0, 2048).unwrap()
    }

    #[test]
    fn sampling_number_at_zero_matches_partial_sums() {
        let s = spec();
        // brute force with an integral remainder bound below 1e-14
        let z3: f64 = (1..=200_000u64).map(|k| (k as f64).powi(-3)).sum::<f64>() + 0.5 / 200_000f64.powi(2);
        let t5: f64 = (1..=20_000u64).map(|k| (k as f64).powi(-5)).sum::<f64>();
        let expect = (t5 / (3.0 * z3)).sqrt();
        assert!((hat_sampling_number(&s, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn sampling_number_decreases_and_truncation_converges() {
        let s = spec();
        for n in 0..200 {
            assert!(hat_sampling_number(&s, n + 1) < hat_sampling_number(&s, n));
            let gap = hat_sampling_number(&s, n) - hat_sampling_number_truncated(&s, n);
            assert!((0.0..1e-9).contains(&gap), "{n}: {gap}");
        }
    }

    #[test]
    fn zero_heights_give_zero_error() {
        // h ≡ 0 is the limit β → ∞
        let s = HatClassSpec::new(3.0, 400.0, 16).unwrap();
        assert!(hat_sampling_number_truncated(&s, 1) < 1e-100);
        assert!(hat_sampling_number(&s, 1) < 1e-100);
    }

    #[test]
    fn kolmogorov_width_values() {
        let s = spec();
        assert_eq!(hat_kolmogorov_width(&s, 0), 1.0);
        assert!((hat_kolmogorov_width(&s, 9) - 0.1).abs() < 1e-16);
        let half = HatClassSpec::new(3.0, 0.5, 16).unwrap();
        assert_eq!(hat_kolmogorov_width(&half, 3), 0.5);
    }

    #[test]
    fn lengths_decrease_and_sum_below_one() {
        let s = spec();
        let l = s.lengths();
        assert!(l.windows(2).all(|w| w[1] < w[0]));
        let total: f64 = l.iter().sum();
        assert!(total <= 1.0 && total > 1.0 - 1e-6);
        assert!(HatClassSpec::new(1.0, 1.0, 10).is_err());
        assert!(HatClassSpec::new(2.0, 0.0, 10).is_err());
    }

    #[test]
    fn peak_interpolation_reproduces_sampling_number() {
        let s = HatClassSpec::new(3.0, 1.0, HatClassSpec::DEFAULT_TRUNCATION).unwrap();
        let system = s.system().unwrap();
        let model = s.model(&system).unwrap();
        for n in [1, 3, 10] {
            let design = peak_interpolation_design(&s, &system, n).unwrap();
            assert_eq!(design.m(), n);
            let family = model.members(n, 3, 1);
            let worst = design.evaluate_family(&family).worst_residual();
            assert!((worst - hat_sampling_number(&s, n)).abs() < 1e-6);
        }
    }
}
