//! Sums of slowly decaying positive series.
//!
//! Direct summation is used for short ranges; long ranges and infinite tails
//! switch to Euler–Maclaurin with closed-form integrals and derivatives.

/// Terms summed explicitly before the Euler–Maclaurin tail takes over.
const DIRECT_TERMS: usize = 4096;
/// Ranges shorter than this are always summed term by term.
const DIRECT_RANGE: usize = 200_000;

/// A positive, eventually decreasing weight sequence `w(k)` with an analytic tail.
pub trait WeightSequence {
    fn value(&self, k: f64) -> f64;
    /// `∫_a^∞ w(x) dx`.
    fn integral_from(&self, a: f64) -> f64;
    /// Odd derivatives `w'(a)`, `w'''(a)`; the latter may be approximated.
    fn derivatives(&self, a: f64) -> (f64, f64);

    /// `Σ_{k ≥ start} w(k)`.
    fn tail_sum(&self, start: usize) -> f64 {
        let split = start.max(1).saturating_add(DIRECT_TERMS);
        let mut direct = 0.0;
        for k in start..split {
            direct += self.value(k as f64);
        }
        direct + self.euler_maclaurin_tail(split as f64)
    }

    /// `Σ_{k=lo}^{hi} w(k)`, zero for an empty range.
    fn range_sum(&self, lo: usize, hi: usize) -> f64 {
        if hi < lo {
            return 0.0;
        }
        if hi - lo < DIRECT_RANGE {
            // summed from the small end up is fine; terms are positive
            return (lo..=hi).map(|k| self.value(k as f64)).sum();
        }
        let split = lo + DIRECT_TERMS;
        let head: f64 = (lo..split).map(|k| self.value(k as f64)).sum();
        head + self.euler_maclaurin_tail(split as f64)
            - self.euler_maclaurin_tail(hi as f64 + 1.0)
    }

    /// `Σ_{k ≥ a} w(k)` for large `a` (not summed term by term).
    fn euler_maclaurin_tail(&self, a: f64) -> f64 {
        let (d1, d3) = self.derivatives(a);
        self.integral_from(a) + 0.5 * self.value(a) - d1 / 12.0 + d3 / 720.0
    }
}

/// `w(k) = k^{-s}` with `s > 1`.
#[derive(Clone, Copy, Debug)]
pub struct PowerWeights {
    pub exponent: f64,
}

impl WeightSequence for PowerWeights {
    fn value(&self, k: f64) -> f64 {
        k.powf(-self.exponent)
    }

    fn integral_from(&self, a: f64) -> f64 {
        a.powf(1.0 - self.exponent) / (self.exponent - 1.0)
    }

    fn derivatives(&self, a: f64) -> (f64, f64) {
        let s = self.exponent;
        let d1 = -s * a.powf(-s - 1.0);
        let d3 = -s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0);
        (d1, d3)
    }
}

/// `w(k) = k^{-1} ln(k)^p` with `p < -1` (summable limit-case weights).
#[derive(Clone, Copy, Debug)]
pub struct LogWeights {
    pub power: f64,
}

impl WeightSequence for LogWeights {
    fn value(&self, k: f64) -> f64 {
        if k < 2.0 {
            return 0.0;
        }
        k.ln().powf(self.power) / k
    }

    fn integral_from(&self, a: f64) -> f64 {
        -a.ln().powf(self.power + 1.0) / (self.power + 1.0)
    }

    fn derivatives(&self, a: f64) -> (f64, f64) {
        let l = a.ln();
        let p = self.power;
        let d1 = l.powf(p - 1.0) * (p - l) / (a * a);
        // leading-order third derivative; the correction is O(a^-4) anyway
        let d3 = -6.0 * l.powf(p) / a.powi(4);
        (d1, d3)
    }
}

/// Riemann zeta `ζ(s) = Σ_{k≥1} k^{-s}` for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    PowerWeights { exponent: s }.tail_sum(1)
}
