//! The main term `I~ = I~1 - kappa (I~2 + I~3 + I~4)` of the lower-bound sieve
//! with weight polynomial `P`, integrated against `j~'(u - w)`:
//!
//! ```text
//! I~1 = int_0^u P(w)^2 j~'(u - w) dw
//! I~2 = int_1^u int_0^1 (P(w) - P(w - t))^2 dt/t  j~'(u - w) dw
//! I~3 = int_0^1 int_0^w (P(w) - P(w - t))^2 dt/t  j~'(u - w) dw
//! I~4 = int_0^1 P(w)^2 (-log w) j~'(u - w) dw
//! ```
//!
//! For `P(w) = w + a` the inner integrals are `1/2`, `w^2/2` and `-log w`,
//! and `I~` is a quadratic in `a`.

use crate::error::{Error, Result};
use crate::kernel_series::ChainParameters;
use crate::precision::{real, to_f64, Real};
use crate::quadrature::PanelRule;
use crate::sieve_function::SieveEvaluator;

pub const DEFAULT_PANEL_ORDER: usize = 40;

/// Largest accepted gap between the full and half order rule on one panel.
const PANEL_TOL: f64 = 1e-13;
const MAX_SPLITS: usize = 8;
/// Breakpoints closer than this are merged.
const BREAKPOINT_MERGE: f64 = 1e-13;

/// `P(w) = w + a` with `a` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearWeight {
    a: f64,
}

impl LinearWeight {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("shift a = {a} outside (0, 1)")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(vec![self.a, 1.0])
    }
}

/// Polynomial with coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn eval(&self, w: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * w + c)
    }

    pub fn square(&self) -> Self {
        let mut out = vec![0.0; 2 * self.0.len() - 1];
        for (i, &x) in self.0.iter().enumerate() {
            for (j, &y) in self.0.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Self::new(out)
    }
}

/// Outer integrands of `I~2` and `I~3` after integrating out `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerReductions {
    /// `int_0^1 t Q(w, t)^2 dt`
    pub i2: Polynomial,
    /// `int_0^w t Q(w, t)^2 dt`
    pub i3: Polynomial,
}

impl InnerReductions {
    /// The linear shortcut: `Q = 1`, so the reductions are `1/2` and `w^2/2`.
    pub fn linear() -> Self {
        Self { i2: Polynomial::new(vec![0.5]), i3: Polynomial::new(vec![0.0, 0.0, 0.5]) }
    }
}

/// Reduces the `t` integrals for any polynomial `P` through the divided
/// difference `Q(w, t) = (P(w) - P(w - t)) / t`, which is a polynomial in
/// `w` and `t`, so `(P(w) - P(w - t))^2 / t = t Q^2` integrates exactly.
pub fn inner_reductions(p: &Polynomial) -> InnerReductions {
    let deg = p.degree();
    if deg == 0 {
        let zero = Polynomial::new(vec![0.0]);
        return InnerReductions { i2: zero.clone(), i3: zero };
    }
    // q[i][j]: coefficient of w^i t^j
    let mut q = vec![vec![0.0; deg]; deg];
    for (k, &pk) in p.coeffs().iter().enumerate().skip(1) {
        let mut binom = 1.0;
        for j in 1..=k {
            binom = binom * (k + 1 - j) as f64 / j as f64;
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            q[k - j][j - 1] += sign * binom * pk;
        }
    }
    let mut q2 = vec![vec![0.0; 2 * deg - 1]; 2 * deg - 1];
    for (i1, row1) in q.iter().enumerate() {
        for (j1, &x) in row1.iter().enumerate() {
            for (i2, row2) in q.iter().enumerate() {
                for (j2, &y) in row2.iter().enumerate() {
                    q2[i1 + i2][j1 + j2] += x * y;
                }
            }
        }
    }
    let mut i2 = vec![0.0; 2 * deg - 1];
    let mut i3 = vec![0.0; 4 * deg];
    for (i, row) in q2.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            i2[i] += c / (j + 2) as f64;
            i3[i + j + 2] += c / (j + 2) as f64;
        }
    }
    InnerReductions { i2: Polynomial::new(i2), i3: Polynomial::new(i3) }
}

/// Panel layout for the outer `w` integrals.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    order: usize,
    /// Use the log-weighted product rule on the panel touching `w = 0`.
    pub log_endpoint: bool,
    full: PanelRule,
    half: PanelRule,
}

impl QuadratureRule {
    pub fn new(order: usize) -> Result<Self> {
        let full = PanelRule::new(order)?;
        let half = PanelRule::new((order / 2 + 1).max(2))?;
        Ok(Self { order, log_endpoint: true, full, half })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Sorted points of `[0, u]` where `j~'(u - w)` changes analytic piece
    /// (`w = u - n - c_nu`), together with `0`, `1` and `u`.
    pub fn breakpoints(&self, u: f64, params: &ChainParameters) -> Vec<f64> {
        let mut points = vec![0.0, u];
        if u > 1.0 {
            points.push(1.0);
        }
        let mut n = 0usize;
        while (n as f64) < u {
            for &c in params.radii() {
                let w = u - n as f64 - c;
                if w > 0.0 && w < u {
                    points.push(w);
                }
            }
            n += 1;
        }
        points.sort_by(f64::total_cmp);
        let mut merged: Vec<f64> = Vec::with_capacity(points.len());
        for p in points {
            match merged.last() {
                Some(&last) if p - last < BREAKPOINT_MERGE => {
                    if p == u {
                        *merged.last_mut().unwrap() = u;
                    }
                }
                _ => merged.push(p),
            }
        }
        merged
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(DEFAULT_PANEL_ORDER).expect("default panel order is valid")
    }
}

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Weights for `f(w) (-log w)`, only for panels inside `[0, 1]`.
    log_weights: Option<Vec<f64>>,
    jp: Vec<Real>,
    /// Pointwise truncation bound of `j~'(u - w)`, constant on the open panel.
    bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    All,
    Lower,
    Upper,
}

/// `j~'(u - w)` sampled on every panel node.
#[derive(Debug, Clone)]
struct Sampled {
    panels: Vec<Panel>,
    quad_error: f64,
}

impl Sampled {
    fn build(ev: &SieveEvaluator, u: f64, rule: &QuadratureRule) -> Result<Self> {
        let points = rule.breakpoints(u, ev.table().params());
        let mut sampled = Self { panels: Vec::new(), quad_error: 0.0 };
        for pair in points.windows(2) {
            sampled.add_panel(ev, u, rule, pair[0], pair[1], 0)?;
        }
        Ok(sampled)
    }

    fn add_panel(
        &mut self,
        ev: &SieveEvaluator,
        u: f64,
        rule: &QuadratureRule,
        a: f64,
        b: f64,
        depth: usize,
    ) -> Result<()> {
        let lower = b <= 1.0;
        let singular = a == 0.0 && lower && rule.log_endpoint;
        let full = sample_panel(ev, u, &rule.full, a, b, lower, singular)?;
        let half = sample_panel(ev, u, &rule.half, a, b, lower, singular)?;
        let mut gap = (to_f64(full.integral(false)) - to_f64(half.integral(false))).abs();
        if lower {
            gap = gap.max((to_f64(full.integral(true)) - to_f64(half.integral(true))).abs());
        }
        if gap <= PANEL_TOL {
            self.quad_error += gap;
            self.panels.push(full);
            return Ok(());
        }
        if depth >= MAX_SPLITS {
            return Err(Error::Quadrature { a, b, achieved: gap });
        }
        let mid = 0.5 * (a + b);
        self.add_panel(ev, u, rule, a, mid, depth + 1)?;
        self.add_panel(ev, u, rule, mid, b, depth + 1)
    }

    fn panels(&self, region: Region) -> impl Iterator<Item = &Panel> {
        self.panels.iter().filter(move |p| match region {
            Region::All => true,
            Region::Lower => p.b <= 1.0,
            Region::Upper => p.a >= 1.0,
        })
    }

    /// `int f(w) [-log w] j~'(u - w) dw` over `region`.
    fn integrate(&self, region: Region, log: bool, f: &Polynomial) -> Real {
        let mut acc = real(0.0);
        for panel in self.panels(region) {
            let weights = if log { panel.log_weights.as_ref().expect("lower panel") } else { &panel.weights };
            for ((&w, &wt), &jp) in panel.nodes.iter().zip(weights).zip(&panel.jp) {
                acc += real(wt * f.eval(w)) * jp;
            }
        }
        acc
    }

    /// `int |f(w)| [-log w] bound(u - w) dw`, exact for `f` with nonnegative
    /// coefficients.
    fn integrate_bound(&self, region: Region, log: bool, f: &Polynomial) -> f64 {
        self.panels(region)
            .map(|p| {
                let mass: f64 = f
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c.abs() * monomial_integral(k, p.a, p.b, log))
                    .sum();
                p.bound * mass
            })
            .sum()
    }
}

impl Panel {
    fn integral(&self, log: bool) -> Real {
        let weights = if log { self.log_weights.as_ref().expect("lower panel") } else { &self.weights };
        weights.iter().zip(&self.jp).fold(real(0.0), |acc, (&wt, &jp)| acc + real(wt) * jp)
    }
}

fn sample_panel(
    ev: &SieveEvaluator,
    u: f64,
    rule: &PanelRule,
    a: f64,
    b: f64,
    lower: bool,
    singular: bool,
) -> Result<Panel> {
    let (nodes, weights): (Vec<f64>, Vec<f64>) = rule.panel(a, b).unzip();
    let log_weights = if singular {
        Some(rule.log_panel(b).map(|(_, w)| w).collect())
    } else if lower {
        Some(nodes.iter().zip(&weights).map(|(&x, &w)| -w * x.ln()).collect())
    } else {
        None
    };
    let jp = nodes
        .iter()
        .map(|&w| ev.eval_j_prime(u - w).map(|v| v.value))
        .collect::<Result<Vec<_>>>()?;
    let bound = ev.j_prime_bound(u - 0.5 * (a + b))?;
    Ok(Panel { a, b, nodes, weights, log_weights, jp, bound })
}

/// `int_a^b w^k [-log w] dw`.
fn monomial_integral(k: usize, a: f64, b: f64, log: bool) -> f64 {
    let kp = (k + 1) as f64;
    if log {
        let anti = |w: f64| {
            if w == 0.0 {
                0.0
            } else {
                w.powf(kp) * (1.0 / (kp * kp) - w.ln() / kp)
            }
        };
        anti(b) - anti(a)
    } else {
        (b.powf(kp) - a.powf(kp)) / kp
    }
}

/// `I~(a) = A a^2 + B a + C` at fixed `(kappa, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainTermQuadratic {
    pub kappa: u32,
    pub u: f64,
    pub coef_a: Real,
    pub coef_b: Real,
    pub coef_c: Real,
    /// Truncation bound on `|I~(a) - I(a)|`, valid for every `a` in `(0, 1)`.
    pub err: f64,
    /// Sum over panels of the full/half order gaps; a pessimistic
    /// estimate of the quadrature error.
    pub quad_error: f64,
}

impl MainTermQuadratic {
    pub fn evaluate(&self, a: f64) -> f64 {
        to_f64(self.evaluate_real(a))
    }

    pub fn evaluate_real(&self, a: f64) -> Real {
        let a = real(a);
        (self.coef_a * a + self.coef_b) * a + self.coef_c
    }

    pub fn coefficients(&self) -> (f64, f64, f64) {
        (to_f64(self.coef_a), to_f64(self.coef_b), to_f64(self.coef_c))
    }
}

/// The four integrals for a general weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainTermParts {
    pub i1: Real,
    pub i2: Real,
    pub i3: Real,
    pub i4: Real,
}

impl MainTermParts {
    pub fn total(&self, kappa: u32) -> Real {
        self.i1 - real(kappa as f64) * (self.i2 + self.i3 + self.i4)
    }
}

fn check_u(ev: &SieveEvaluator, u: f64) -> Result<()> {
    if !(u >= 1.0) || u > ev.coverage() {
        return Err(Error::Domain(format!(
            "main term needs 1 <= u <= {}, got u = {u}",
            ev.coverage()
        )));
    }
    Ok(())
}

/// `I~` for `P(w) = w + a` as a quadratic in `a`, with its truncation bound.
pub fn compute_quadratic(
    ev: &SieveEvaluator,
    u: f64,
    rule: &QuadratureRule,
) -> Result<MainTermQuadratic> {
    check_u(ev, u)?;
    let s = Sampled::build(ev, u, rule)?;
    let kappa = real(ev.kappa() as f64);
    let mono = |k: usize| {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Polynomial::new(c)
    };
    let reduced = InnerReductions::linear();

    let m: Vec<Real> = (0..3).map(|k| s.integrate(Region::All, false, &mono(k))).collect();
    let l: Vec<Real> = (0..3).map(|k| s.integrate(Region::Lower, true, &mono(k))).collect();
    let i2 = s.integrate(Region::Upper, false, &reduced.i2);
    let i3 = s.integrate(Region::Lower, false, &reduced.i3);

    let two = real(2.0);
    let coef_a = m[0] - kappa * l[0];
    let coef_b = two * (m[1] - kappa * l[1]);
    let coef_c = m[2] - kappa * (i2 + i3 + l[2]);

    // (w + a)^2 <= (w + 1)^2 for a in (0, 1)
    let majorant = Polynomial::new(vec![1.0, 2.0, 1.0]);
    let k = ev.kappa() as f64;
    let err = s.integrate_bound(Region::All, false, &majorant)
        + k * (s.integrate_bound(Region::Upper, false, &reduced.i2)
            + s.integrate_bound(Region::Lower, false, &reduced.i3)
            + s.integrate_bound(Region::Lower, true, &majorant));

    Ok(MainTermQuadratic {
        kappa: ev.kappa(),
        u,
        coef_a,
        coef_b,
        coef_c,
        err,
        quad_error: s.quad_error,
    })
}

/// The four integrals for an arbitrary polynomial weight, reducing the inner
/// `t` integrals through [`inner_reductions`].
pub fn main_term_parts(
    ev: &SieveEvaluator,
    u: f64,
    rule: &QuadratureRule,
    p: &Polynomial,
) -> Result<MainTermParts> {
    check_u(ev, u)?;
    let s = Sampled::build(ev, u, rule)?;
    let p2 = p.square();
    let reduced = inner_reductions(p);
    Ok(MainTermParts {
        i1: s.integrate(Region::All, false, &p2),
        i2: s.integrate(Region::Upper, false, &reduced.i2),
        i3: s.integrate(Region::Lower, false, &reduced.i3),
        i4: s.integrate(Region::Lower, true, &p2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evaluator(kappa: u32) -> SieveEvaluator {
        SieveEvaluator::new(kappa, ChainParameters::default()).unwrap()
    }

    #[test]
    fn shift_range() {
        assert!(LinearWeight::new(0.25).is_ok());
        assert!(LinearWeight::new(0.0).is_err());
        assert!(LinearWeight::new(1.0).is_err());
        assert!(LinearWeight::new(f64::NAN).is_err());
    }

    #[test]
    fn linear_reductions_match_general_path() {
        let general = inner_reductions(&LinearWeight::new(0.3).unwrap().polynomial());
        assert_eq!(general, InnerReductions::linear());
    }

    #[test]
    fn quadratic_weight_reduction() {
        // P = w^2: Q = 2w - t, int_0^1 t (2w - t)^2 dt = 2w^2 - (4/3) w + 1/4
        let r = inner_reductions(&Polynomial::new(vec![0.0, 0.0, 1.0]));
        let expect = [0.25, -4.0 / 3.0, 2.0];
        for (got, want) in r.i2.coeffs().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
        // int_0^w t (2w - t)^2 dt = 2w^4 - (4/3) w^4 + w^4/4 = (11/12) w^4
        assert_eq!(r.i3.degree(), 4);
        assert!((r.i3.coeffs()[4] - 11.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn breakpoints_are_sorted_and_cover() {
        let params = ChainParameters::default();
        let rule = QuadratureRule::default();
        let pts = rule.breakpoints(2.3, &params);
        assert_eq!(pts[0], 0.0);
        assert_eq!(*pts.last().unwrap(), 2.3);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!(pts.contains(&1.0));
        assert!(pts.iter().any(|&p| (p - 0.3).abs() < 1e-12));
        assert!(pts.iter().any(|&p| (p - 0.8).abs() < 1e-12));
    }

    #[test]
    fn second_integral_is_a_difference_of_j() {
        let ev = evaluator(3);
        let rule = QuadratureRule::default();
        let u = 2.7601;
        let parts = main_term_parts(&ev, u, &rule, &Polynomial::new(vec![0.26, 1.0])).unwrap();
        let expect = ev.eval_j(u - 1.0).unwrap().value_f64() / 2.0;
        assert!((to_f64(parts.i2) - expect).abs() < 1e-13);
        let at_one = main_term_parts(&ev, 1.0, &rule, &Polynomial::new(vec![0.26, 1.0])).unwrap();
        assert_eq!(to_f64(at_one.i2), 0.0);
    }

    #[test]
    fn quadratic_matches_direct_evaluation() {
        let ev = evaluator(2);
        let rule = QuadratureRule::default();
        let u = 1.7581;
        let q = compute_quadratic(&ev, u, &rule).unwrap();
        for a in [0.1, 0.25, 0.4] {
            let p = LinearWeight::new(a).unwrap().polynomial();
            let direct = main_term_parts(&ev, u, &rule, &p).unwrap().total(2);
            assert!((q.evaluate(a) - to_f64(direct)).abs() < 1e-10 + q.err, "a={a}");
        }
    }

    #[test]
    fn small_kappa_row() {
        let ev = evaluator(2);
        let q = compute_quadratic(&ev, 1.7581, &QuadratureRule::default()).unwrap();
        let v = q.evaluate(0.267671);
        assert!((v - 2.9e-5).abs() < 2.9e-6, "{v}");
        assert!(q.err > 0.0 && q.err < 1e-20);
        assert!(q.quad_error < 1e-10);
    }

    #[test]
    fn rejects_u_below_one() {
        let ev = evaluator(2);
        let rule = QuadratureRule::default();
        assert!(matches!(compute_quadratic(&ev, 0.9, &rule), Err(Error::Domain(_))));
        assert!(matches!(compute_quadratic(&ev, 4.5, &rule), Err(Error::Domain(_))));
    }

    #[test]
    fn naive_endpoint_rule_loses_digits() {
        let ev = evaluator(2);
        let mut rule = QuadratureRule::default();
        let good = compute_quadratic(&ev, 1.7581, &rule).unwrap();
        rule.log_endpoint = false;
        match compute_quadratic(&ev, 1.7581, &rule) {
            Ok(naive) => {
                let gap = (naive.evaluate(0.26) - good.evaluate(0.26)).abs();
                assert!(gap > 1e-12, "{gap}");
            }
            Err(e) => assert!(matches!(e, Error::Quadrature { .. })),
        }
    }
}
