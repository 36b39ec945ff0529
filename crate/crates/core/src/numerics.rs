//! Small floating-point helpers shared by the series and polynomial code.

/// Largest finite value used in place of overflowing partial sums.
pub const SATURATED: f64 = f64::MAX;

/// Adds two nonnegative values, pinning the result at [`SATURATED`] instead of
/// overflowing to infinity. Once saturated a sum stays saturated.
#[inline]
pub fn saturating_add(acc: f64, term: f64) -> f64 {
    if acc >= SATURATED {
        return SATURATED;
    }
    let s = acc + term;
    if s.is_finite() {
        s
    } else {
        SATURATED
    }
}

/// `exp(x)` clamped to [`SATURATED`].
#[inline]
pub fn saturating_exp(x: f64) -> f64 {
    let v = x.exp();
    if v.is_finite() {
        v
    } else {
        SATURATED
    }
}

const REBASE_HI: f64 = 1e100;
const REBASE_LO: f64 = 1e-100;

/// A nonnegative quantity held as `mantissa * exp(log_scale)`.
///
/// The mantissa is rebased into `[1e-100, 1e100]` whenever it leaves that
/// range, so the represented value can span far more than the `f64` range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSum {
    mantissa: f64,
    log_scale: f64,
}

impl Default for ScaledSum {
    fn default() -> Self {
        Self::zero()
    }
}

impl ScaledSum {
    pub fn zero() -> Self {
        Self {
            mantissa: 0.0,
            log_scale: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Multiplies the value by `exp(ln_factor)`.
    pub fn scale_by_ln(&mut self, ln_factor: f64) {
        if !self.is_zero() {
            self.log_scale += ln_factor;
        }
    }

    /// Adds a nonnegative linear-domain term.
    pub fn add(&mut self, term: f64) {
        if term <= 0.0 {
            return;
        }
        if self.is_zero() {
            self.mantissa = term;
            self.log_scale = 0.0;
        } else if self.log_scale == 0.0 {
            self.mantissa += term;
        } else {
            self.add_ln(term.ln());
            return;
        }
        self.rebase();
    }

    /// Adds `exp(ln_term)`.
    pub fn add_ln(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if self.is_zero() {
            self.mantissa = 1.0;
            self.log_scale = ln_term;
            return;
        }
        let rel = ln_term - self.log_scale;
        if rel < 230.0 {
            self.mantissa += rel.exp();
        } else {
            // Term dominates: move the scale onto it.
            let current = self.mantissa.ln() + self.log_scale;
            self.mantissa = 1.0 + (current - ln_term).exp();
            self.log_scale = ln_term;
        }
        self.rebase();
    }

    fn rebase(&mut self) {
        if self.mantissa > REBASE_HI || self.mantissa < REBASE_LO {
            let shift = self.mantissa.ln();
            self.log_scale += shift;
            self.mantissa = 1.0;
        }
    }

    /// Natural log of the represented value (`-inf` for zero).
    pub fn ln(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.log_scale
        }
    }

    /// Linear value, saturating at [`SATURATED`].
    pub fn value(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else if self.log_scale == 0.0 {
            self.mantissa.min(SATURATED)
        } else {
            saturating_exp(self.ln())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturating_add_is_sticky() {
        let s = saturating_add(f64::MAX, f64::MAX);
        assert_eq!(s, SATURATED);
        assert_eq!(saturating_add(s, -1.0), SATURATED);
        assert_eq!(saturating_add(1.0, 2.0), 3.0);
    }

    #[test]
    fn scaled_sum_tracks_huge_values() {
        let mut s = ScaledSum::zero();
        s.add(1.0);
        for _ in 0..2000 {
            s.scale_by_ln(1.0);
        }
        s.add_ln(2000.0);
        // 2 * e^2000
        assert!((s.ln() - (2000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(s.value(), SATURATED);
    }

    #[test]
    fn scaled_sum_small_terms() {
        let mut s = ScaledSum::zero();
        s.add_ln(-1000.0);
        s.add_ln(-1000.0);
        assert!((s.ln() - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(s.value(), 0.0);
        let mut t = ScaledSum::zero();
        t.add(0.25);
        t.add(0.5);
        assert_eq!(t.value(), 0.75);
    }
}
