//! Method-of-steps integrator for `u j'(u) = kappa j(u) - kappa j(u - 1)`.
//!
//! Independent of the series machinery: it only uses the initial segment
//! `j(u) = e^{-gamma kappa} u^kappa / Gamma(kappa + 1)` on `(0, 1]` and then
//! steps each unit interval `[m, m + 1]` with classical RK4, reading the
//! delayed term from the previous interval's cubic Hermite dense output.
//! Steps are aligned across segments so the delayed argument of every stage
//! is a grid point or a half-step of the previous segment.

use crate::error::{Error, Result};
use crate::precision::{factorial, real, to_f64, EULER_GAMMA};

/// Default global tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

const MIN_STEPS: usize = 16;
const MAX_STEPS: usize = 1 << 15;

/// Dense solution on `[index, index + 1]`: grid values and slopes with a
/// cubic Hermite interpolant on each piece.
#[derive(Debug, Clone)]
pub struct SegmentSolution {
    pub index: usize,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    errors: Vec<f64>,
}

impl SegmentSolution {
    pub fn start(&self) -> f64 {
        self.index as f64
    }

    pub fn pieces(&self) -> usize {
        self.values.len() - 1
    }

    /// Step-error estimate for piece `i`.
    pub fn piece_error(&self, i: usize) -> f64 {
        self.errors[i]
    }

    pub fn start_value(&self) -> f64 {
        self.values[0]
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let s = (u - self.start()) / self.step;
        let i = (s.floor().max(0.0) as usize).min(self.pieces() - 1);
        (i, s - i as f64)
    }

    /// Hermite interpolant at `u` in `[index, index + 1]`.
    pub fn value(&self, u: f64) -> f64 {
        let (i, t) = self.locate(u);
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }

    /// Derivative of the Hermite interpolant.
    pub fn derivative(&self, u: f64) -> f64 {
        let (i, t) = self.locate(u);
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1)
            / h
    }
}

#[derive(Debug, Clone)]
pub struct DdeSolution {
    kappa: u32,
    u_max: f64,
    initial: f64,
    steps_per_unit: usize,
    error_estimate: f64,
    segments: Vec<SegmentSolution>,
}

/// Integrates `j_kappa` on `(0, u_max]`, doubling the step count until the
/// Richardson estimate of the global error is at most `tol`.
pub fn solve_j(kappa: u32, u_max: f64, tol: f64) -> Result<DdeSolution> {
    if kappa == 0 {
        return Err(Error::InvalidParameter("kappa must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if !(u_max > 0.0) || !u_max.is_finite() {
        return Err(Error::InvalidParameter(format!("u_max must be positive, got {u_max}")));
    }
    let initial = to_f64((-(real(kappa as f64) * EULER_GAMMA)).exp() / factorial(kappa));
    let segment_count = u_max.ceil() as usize;

    let mut steps = MIN_STEPS;
    let mut coarse = integrate(kappa, initial, segment_count, steps);
    let mut best = f64::INFINITY;
    while steps < MAX_STEPS {
        let mut fine = integrate(kappa, initial, segment_count, 2 * steps);
        let estimate = attach_error_estimates(&coarse, &mut fine);
        best = best.min(estimate);
        if estimate <= tol {
            return Ok(DdeSolution {
                kappa,
                u_max,
                initial,
                steps_per_unit: 2 * steps,
                error_estimate: estimate,
                segments: fine,
            });
        }
        coarse = fine;
        steps *= 2;
    }
    Err(Error::Tolerance { tol, achieved: best })
}

/// `j'(u)` from the equation itself: `kappa (j(u) - j(u - 1)) / u`, or the
/// analytic derivative of the initial segment on `(0, 1]`.
pub fn solve_j_prime(solution: &DdeSolution, u: f64) -> Result<f64> {
    solution.j_prime(u)
}

impl DdeSolution {
    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    pub fn segments(&self) -> &[SegmentSolution] {
        &self.segments
    }

    pub fn j(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(0.0);
        }
        if u <= 1.0 {
            return Ok(self.initial * u.powi(self.kappa as i32));
        }
        self.check_range(u)?;
        let m = (u.ceil() as usize - 1).min(self.segments.len() - 1);
        Ok(self.segments[m].value(u))
    }

    pub fn j_prime(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(0.0);
        }
        let k = self.kappa as i32;
        if u <= 1.0 {
            return Ok(self.initial * k as f64 * u.powi(k - 1));
        }
        self.check_range(u)?;
        Ok(self.kappa as f64 * (self.j(u)? - self.j(u - 1.0)?) / u)
    }

    fn check_range(&self, u: f64) -> Result<()> {
        if u > self.segments.len() as f64 || !u.is_finite() {
            return Err(Error::Domain(format!(
                "u = {u} outside solved range (0, {}]",
                self.segments.len()
            )));
        }
        Ok(())
    }
}

fn integrate(kappa: u32, initial: f64, segment_count: usize, steps: usize) -> Vec<SegmentSolution> {
    let k = kappa as f64;
    let ki = kappa as i32;
    let h = 1.0 / steps as f64;
    let mut segments: Vec<SegmentSolution> = Vec::with_capacity(segment_count);

    // Segment 0 straight from the closed form.
    let grid = |i: usize| i as f64 * h;
    segments.push(SegmentSolution {
        index: 0,
        step: h,
        values: (0..=steps).map(|i| initial * grid(i).powi(ki)).collect(),
        slopes: (0..=steps).map(|i| initial * k * grid(i).powi(ki - 1)).collect(),
        errors: vec![0.0; steps],
    });

    for m in 1..segment_count {
        let prev = &segments[m - 1];
        let delayed = |s: f64| -> f64 {
            if m == 1 {
                initial * s.max(0.0).powi(ki)
            } else {
                prev.value(s)
            }
        };
        let rhs = |t: f64, y: f64| k * (y - delayed(t - 1.0)) / t;

        let start = m as f64;
        let mut values = Vec::with_capacity(steps + 1);
        let mut slopes = Vec::with_capacity(steps + 1);
        let mut y = prev.end_value();
        values.push(y);
        slopes.push(rhs(start, y));
        for i in 0..steps {
            let t = start + i as f64 * h;
            let k1 = slopes[i];
            let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
            let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
            let k4 = rhs(t + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            values.push(y);
            slopes.push(rhs(start + (i + 1) as f64 * h, y));
        }
        segments.push(SegmentSolution { index: m, step: h, values, slopes, errors: vec![0.0; steps] });
    }
    segments
}

/// Fourth-order Richardson estimate: compares the coarse grid values and
/// the coarse dense output at fine half-points against the fine solution.
fn attach_error_estimates(coarse: &[SegmentSolution], fine: &mut [SegmentSolution]) -> f64 {
    let mut global = 0.0f64;
    for (c, f) in coarse.iter().zip(fine.iter_mut()) {
        for i in 0..c.pieces() {
            let end = (c.values[i + 1] - f.values[2 * i + 2]).abs();
            let mid_u = c.start() + (i as f64 + 0.5) * c.step;
            let mid = (c.value(mid_u) - f.values[2 * i + 1]).abs();
            let est = end.max(mid) / 15.0;
            f.errors[2 * i] = est;
            f.errors[2 * i + 1] = est;
            global = global.max(est);
        }
    }
    global
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA: f64 = 0.5772156649015329;

    #[test]
    fn initial_segment_is_exact() {
        let sol = solve_j(2, 3.0, DEFAULT_TOL).unwrap();
        let c = (-2.0 * GAMMA).exp();
        assert!((sol.j(1.0).unwrap() - c / 2.0).abs() < 1e-16);
        assert!((sol.j_prime(0.5).unwrap() - c * 0.5).abs() < 1e-16);
    }

    #[test]
    fn second_segment_closed_form() {
        // On [1, 2]: j(u) = u^2 [j(1) - 2C (log u + 2/u - 1/(2u^2) - 3/2)], C = e^{-2 gamma}/2,
        // so j(2) = e^{-2 gamma} (9 - 8 log 2) / 2.
        let sol = solve_j(2, 3.0, 1e-11).unwrap();
        let expected = (-2.0 * GAMMA).exp() * (9.0 - 8.0 * 2f64.ln()) / 2.0;
        assert!((sol.j(2.0).unwrap() - expected).abs() < 1e-10);
        let c = (-2.0 * GAMMA).exp() / 2.0;
        for &u in &[1.1f64, 1.37, 1.5, 1.93] {
            let exact = u * u * (c - 2.0 * c * (u.ln() + 2.0 / u - 0.5 / (u * u) - 1.5));
            assert!((sol.j(u).unwrap() - exact).abs() < 1e-10, "u={u}");
        }
    }

    #[test]
    fn derivative_continuous_at_one() {
        let sol = solve_j(2, 3.0, DEFAULT_TOL).unwrap();
        let c = (-2.0 * GAMMA).exp();
        assert!((sol.j_prime(1.0).unwrap() - c).abs() < 1e-12);
        assert!((sol.j_prime(1.0 + 1e-9).unwrap() - c).abs() < 1e-7);
    }

    #[test]
    fn segments_join() {
        let sol = solve_j(4, 5.0, DEFAULT_TOL).unwrap();
        for pair in sol.segments().windows(2) {
            assert!((pair[0].end_value() - pair[1].start_value()).abs() < 1e-12);
        }
        assert!(sol.error_estimate() <= DEFAULT_TOL);
    }

    #[test]
    fn self_convergence() {
        let coarse = solve_j(3, 4.0, 1e-7).unwrap();
        let fine = solve_j(3, 4.0, 5e-8).unwrap();
        let mut u = 0.05;
        while u <= 4.0 {
            let d = (coarse.j(u).unwrap() - fine.j(u).unwrap()).abs();
            assert!(d <= coarse.error_estimate().max(1e-15), "u={u} d={d:e}");
            u += 0.05;
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve_j(0, 2.0, 1e-9).is_err());
        assert!(solve_j(2, 2.0, 0.0).is_err());
        assert!(solve_j(2, 2.0, 1e-30).is_err());
        let sol = solve_j(2, 2.0, 1e-9).unwrap();
        assert!(matches!(sol.j(2.5), Err(Error::Domain(_))));
        assert!(matches!(solve_j_prime(&sol, 3.0), Err(Error::Domain(_))));
        assert_eq!(sol.j(-1.0).unwrap(), 0.0);
    }
}
