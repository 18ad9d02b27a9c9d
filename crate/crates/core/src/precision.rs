//! Double-double working precision and compensated summation.
//!
//! All coefficient construction and series evaluation runs in `Real`
//! (an unevaluated sum of two `f64`, ~106-bit significand). The alternating
//! sums over `n` in the sieve-function decompositions lose up to
//! `kappa * log10(kappa)` digits, so they go through [`CompensatedSum`].

pub use qd::Quad as Real;

/// Unit roundoff of `Real`, taken conservatively as `2^-104`.
pub const REAL_EPSILON: f64 = 4.930380657631324e-32;

/// Euler–Mascheroni constant, 0.57721566490153286060651209008240243104215933593992...
pub const EULER_GAMMA: Real = Real(0.5772156649015329, -4.942915152430645e-18);

#[inline]
pub fn real(x: f64) -> Real {
    Real::from_f64(x)
}

#[inline]
pub fn to_f64(x: Real) -> f64 {
    x.0 + x.1
}

/// `n!` as an exact double-double (exact for `n <= 25`).
pub fn factorial(n: u32) -> Real {
    (2..=n).fold(real(1.0), |acc, k| acc * real(k as f64))
}

/// Parses a plain decimal literal (`[-]digits[.digits]`) into a `Real`.
///
/// Digits past the 34th significant one are ignored; they are below the
/// resolution of the format.
pub fn parse_decimal(s: &str) -> Option<Real> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let ten = real(10.0);
    let mut acc = real(0.0);
    for ch in int_part.chars() {
        acc = acc * ten + real(ch.to_digit(10)? as f64);
    }
    let mut scale = real(1.0);
    for ch in frac_part.chars().take(34) {
        let d = ch.to_digit(10)?;
        scale /= ten;
        acc = acc.add_accurate(scale * real(d as f64));
    }
    Some(if neg { -acc } else { acc })
}

/// Error-free-transformation summation in double-double with a record of
/// the largest term magnitude, so the caller can judge cancellation.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum {
    sum: Real,
    max_term: f64,
}

impl Default for CompensatedSum {
    fn default() -> Self {
        Self::new()
    }
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self { sum: real(0.0), max_term: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, term: Real) {
        self.max_term = self.max_term.max(to_f64(term).abs());
        self.sum = self.sum.add_accurate(term);
    }

    pub fn sum(&self) -> Real {
        self.sum
    }

    pub fn max_term(&self) -> f64 {
        self.max_term
    }

    /// Largest term over the magnitude of the sum; 1 for an empty or
    /// single-signed sum, infinite if everything cancelled.
    pub fn cancellation_ratio(&self) -> f64 {
        let s = to_f64(self.sum).abs();
        if self.max_term == 0.0 {
            1.0
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            (self.max_term / s).max(1.0)
        }
    }
}

impl FromIterator<Real> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Real>>(iter: I) -> Self {
        let mut acc = Self::new();
        for t in iter {
            acc.add(t);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_reference_digits() {
        let reference =
            parse_decimal("0.57721566490153286060651209008240243104215933593992").unwrap();
        let diff = to_f64(EULER_GAMMA - reference).abs();
        assert!(diff < 1e-31, "diff {diff:e}");
    }

    #[test]
    fn factorials_are_exact() {
        assert_eq!(to_f64(factorial(0)), 1.0);
        assert_eq!(to_f64(factorial(10)), 3628800.0);
        let f20 = factorial(20);
        assert_eq!(f20.0 as u128 as i128 + f20.1 as i128, 2432902008176640000);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_decimal("1.2x").is_none());
        assert!(parse_decimal("").is_none());
        assert_eq!(to_f64(parse_decimal("-2.5").unwrap()), -2.5);
    }

    #[test]
    fn compensated_sum_survives_cancellation() {
        // 1e20 + 1 - 1e20 loses the 1 in plain f64.
        let acc: CompensatedSum = [real(1e20), real(1.0), real(-1e20)].into_iter().collect();
        assert_eq!(to_f64(acc.sum()), 1.0);
        assert!((acc.cancellation_ratio() - 1e20).abs() < 1e5);
    }
}
