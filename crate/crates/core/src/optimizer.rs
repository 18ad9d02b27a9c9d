//! Optimal shift `a`, the smallest `u` with a certified positive main term,
//! and the sifting limit `beta = 2u + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_series::ChainParameters;
use crate::main_term::{compute_quadratic, MainTermQuadratic, QuadratureRule};
use crate::sieve_function::SieveEvaluator;

pub const DEFAULT_U_TOL: f64 = 5e-4;

/// Smallest and largest supported sieve dimension.
pub const KAPPA_RANGE: std::ops::RangeInclusive<u32> = 2..=10;

/// Keeps the clamped shift strictly inside `(0, 1)`.
const A_EDGE: f64 = 1e-12;
const GOLDEN_ITERATIONS: usize = 100;

/// A published row: `(kappa, beta, u, a, I~, error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub kappa: u32,
    pub beta: f64,
    pub u: f64,
    pub a: f64,
    pub i_tilde: f64,
    pub error: f64,
}

const fn row(kappa: u32, beta: f64, u: f64, a: f64, i_tilde: f64, error: f64) -> PublishedRow {
    PublishedRow { kappa, beta, u, a, i_tilde, error }
}

/// Published sifting limits of this sieve with the points at which they were certified.
pub const PUBLISHED: [PublishedRow; 9] = [
    row(2, 4.516, 1.7581, 0.267671, 2.9e-5, 6.3e-23),
    row(3, 6.520, 2.7601, 0.262761, 5.4e-6, 8.6e-22),
    row(4, 8.522, 3.7611, 0.260302, 2.3e-5, 1.2e-20),
    row(5, 10.523, 4.7617, 0.258785, 4.5e-5, 2.3e-19),
    row(6, 12.524, 5.7621, 0.257739, 6.7e-5, 4.9e-18),
    row(7, 14.524, 6.7623, 0.256929, 2.2e-5, 1.2e-16),
    row(8, 16.524, 7.76247, 0.256318, 9.3e-7, 3.9e-15),
    row(9, 18.525, 8.7627, 0.255870, 6.5e-5, 1.5e-13),
    row(10, 20.525, 9.7628, 0.255468, 4.8e-5, 6.7e-12),
];

/// Sifting limits of the Diamond–Halberstam–Richert sieve, `kappa = 2..=10`.
pub const DHR_BETA: [(u32, f64); 9] = [
    (2, 4.266),
    (3, 6.640),
    (4, 9.072),
    (5, 11.534),
    (6, 14.014),
    (7, 16.504),
    (8, 18.998),
    (9, 21.495),
    (10, 23.992),
];

pub fn published(kappa: u32) -> Option<PublishedRow> {
    PUBLISHED.iter().copied().find(|r| r.kappa == kappa)
}

pub fn dhr_beta(kappa: u32) -> Option<f64> {
    DHR_BETA.iter().find(|(k, _)| *k == kappa).map(|&(_, b)| b)
}

pub fn check_kappa(kappa: u32) -> Result<()> {
    if KAPPA_RANGE.contains(&kappa) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("kappa = {kappa} outside 2..=10")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiftingResult {
    pub kappa: u32,
    pub u: f64,
    pub a: f64,
    pub i_tilde: f64,
    pub err: f64,
    /// Always `2 u + 1`.
    pub beta: f64,
    pub dhr_beta: Option<f64>,
}

impl SiftingResult {
    pub fn new(kappa: u32, u: f64, a: f64, i_tilde: f64, err: f64) -> Self {
        Self { kappa, u, a, i_tilde, err, beta: 2.0 * u + 1.0, dhr_beta: dhr_beta(kappa) }
    }

    /// The main term exceeds its truncation bound.
    pub fn certified(&self) -> bool {
        self.i_tilde > self.err
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalShift {
    pub a: f64,
    pub value: f64,
    /// The quadratic was not concave, so a golden-section search was used.
    pub fallback: bool,
}

/// Maximizer of `I~(a)` over `(0, 1)`.
pub fn optimal_a(q: &MainTermQuadratic) -> OptimalShift {
    let (qa, qb, _) = q.coefficients();
    if qa < 0.0 {
        let a = (-qb / (2.0 * qa)).clamp(A_EDGE, 1.0 - A_EDGE);
        return OptimalShift { a, value: q.evaluate(a), fallback: false };
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (A_EDGE, 1.0 - A_EDGE);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (q.evaluate(x1), q.evaluate(x2));
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = q.evaluate(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = q.evaluate(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let (a, value) = [A_EDGE, mid, 1.0 - A_EDGE]
        .into_iter()
        .map(|a| (a, q.evaluate(a)))
        .fold((mid, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    OptimalShift { a, value, fallback: true }
}

/// Evaluator, quadrature rule and a row builder for one `kappa`.
#[derive(Debug)]
pub struct Optimizer {
    evaluator: SieveEvaluator,
    rule: QuadratureRule,
}

impl Optimizer {
    pub fn new(kappa: u32, params: ChainParameters, rule: QuadratureRule) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self { evaluator: SieveEvaluator::new(kappa, params)?, rule })
    }

    pub fn kappa(&self) -> u32 {
        self.evaluator.kappa()
    }

    pub fn evaluator(&self) -> &SieveEvaluator {
        &self.evaluator
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn quadratic(&self, u: f64) -> Result<MainTermQuadratic> {
        compute_quadratic(&self.evaluator, u, &self.rule)
    }

    /// Row at a given `(u, a)`.
    pub fn evaluate(&self, u: f64, a: f64) -> Result<SiftingResult> {
        let q = self.quadratic(u)?;
        Ok(SiftingResult::new(self.kappa(), u, a, q.evaluate(a), q.err))
    }

    /// Row at `u` with the optimal shift.
    pub fn optimize(&self, u: f64) -> Result<(SiftingResult, OptimalShift)> {
        let q = self.quadratic(u)?;
        let best = optimal_a(&q);
        Ok((SiftingResult::new(self.kappa(), u, best.a, best.value, q.err), best))
    }

    /// Bisects `[1, kappa + 1]` for the smallest `u` with `max_a I~ > err`,
    /// returning the upper end of the final bracket.
    pub fn find_beta(&self, u_tol: f64) -> Result<SiftingResult> {
        if !(u_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("u tolerance must be positive, got {u_tol}")));
        }
        let kappa = self.kappa();
        let (mut lo, mut hi) = (1.0, kappa as f64 + 1.0);
        let (mut best, _) = self.optimize(hi)?;
        if !best.certified() {
            return Err(Error::NoCrossing { kappa, lo, hi });
        }
        let (at_lo, _) = self.optimize(lo)?;
        if at_lo.certified() {
            return Ok(at_lo);
        }
        while hi - lo > u_tol {
            let mid = 0.5 * (lo + hi);
            let (row, _) = self.optimize(mid)?;
            if row.certified() {
                hi = mid;
                best = row;
            } else {
                lo = mid;
            }
        }
        Ok(best)
    }
}

pub fn find_beta(kappa: u32, u_tol: f64) -> Result<SiftingResult> {
    Optimizer::new(kappa, ChainParameters::default(), QuadratureRule::default())?.find_beta(u_tol)
}

/// One line of the reproduction table: the published point re-evaluated and
/// the internally optimized row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table2Row {
    pub kappa: u32,
    pub published: SiftingResult,
    pub optimized: SiftingResult,
    pub reference: PublishedRow,
}

impl Table2Row {
    pub fn reproduced(&self) -> bool {
        self.published.i_tilde > self.published.err && self.optimized.certified()
    }
}

pub fn table2_row(
    kappa: u32,
    params: ChainParameters,
    rule: QuadratureRule,
    u_tol: f64,
) -> Result<Table2Row> {
    let reference = published(kappa)
        .ok_or_else(|| Error::InvalidParameter(format!("kappa = {kappa} outside 2..=10")))?;
    let opt = Optimizer::new(kappa, params, rule)?;
    Ok(Table2Row {
        kappa,
        published: opt.evaluate(reference.u, reference.a)?,
        optimized: opt.find_beta(u_tol)?,
        reference,
    })
}

/// Rows for every `kappa` in `kappas`, in the given order.
pub fn table2(
    kappas: &[u32],
    params: ChainParameters,
    rule: &QuadratureRule,
    u_tol: f64,
) -> Result<Vec<Table2Row>> {
    kappas.iter().map(|&k| table2_row(k, params.clone(), rule.clone(), u_tol)).collect()
}
