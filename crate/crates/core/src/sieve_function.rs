//! `j_kappa(u)` and `j'_kappa(u)` from the alternating `K_n` decompositions
//!
//! ```text
//! j(u)  = e^{-kappa gamma} / Gamma(kappa + 1) * sum_{0 <= n < u} (-kappa)^n K_n(u, kappa)
//! j'(u) = e^{-kappa gamma} / Gamma(kappa)     * sum_{0 <= n < u} (-kappa)^n K_n(u, kappa - 1)
//! ```

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::kernel_series::{ChainParameters, CoefficientTable};
use crate::precision::{factorial, real, to_f64, CompensatedSum, Real, EULER_GAMMA, REAL_EPSILON};

/// Largest tolerated `cancellation_ratio * REAL_EPSILON`.
pub const CANCELLATION_LIMIT: f64 = 1e-18;

/// A value of `j~` or `j~'` with its rigorous truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveValue {
    pub value: Real,
    pub bound: f64,
    /// Largest term of the alternating sum over `|sum|`.
    pub cancellation: f64,
}

impl SieveValue {
    pub fn value_f64(&self) -> f64 {
        to_f64(self.value)
    }

    fn zero() -> Self {
        Self { value: real(0.0), bound: 0.0, cancellation: 1.0 }
    }
}

#[derive(Debug)]
pub struct SieveEvaluator {
    kappa: u32,
    table: CoefficientTable,
    front_j: Real,
    front_jp: Real,
    worst_cancellation: AtomicU64,
}

impl SieveEvaluator {
    /// Builds the coefficient table for `kappa` covering `0 < u <= kappa + 1`.
    pub fn new(kappa: u32, params: ChainParameters) -> Result<Self> {
        Self::with_n_max(kappa, params, kappa as usize + 1)
    }

    pub fn with_n_max(kappa: u32, params: ChainParameters, n_max: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidParameter("kappa must be a positive integer".into()));
        }
        let table = CoefficientTable::build(kappa, params, n_max)?;
        Ok(Self::from_table(table))
    }

    pub fn from_table(table: CoefficientTable) -> Self {
        let kappa = table.kappa();
        let damp = (-(real(kappa as f64) * EULER_GAMMA)).exp();
        Self {
            kappa,
            front_j: damp / factorial(kappa),
            front_jp: damp / factorial(kappa - 1),
            table,
            worst_cancellation: AtomicU64::new(1f64.to_bits()),
        }
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn gamma(&self) -> Real {
        EULER_GAMMA
    }

    /// `e^{-kappa gamma} / Gamma(kappa + 1)`.
    pub fn front_j(&self) -> Real {
        self.front_j
    }

    /// `e^{-kappa gamma} / Gamma(kappa)`.
    pub fn front_jp(&self) -> Real {
        self.front_jp
    }

    /// Largest cancellation ratio seen by any evaluation so far.
    pub fn cancellation_log(&self) -> f64 {
        f64::from_bits(self.worst_cancellation.load(Ordering::Relaxed))
    }

    /// Largest `u` the table can evaluate.
    pub fn coverage(&self) -> f64 {
        let reach = self.table.params().reach();
        reach.min(self.table.n_max() as f64 + 1.0)
    }

    pub fn eval_j(&self, u: f64) -> Result<SieveValue> {
        self.decomposition(u, self.kappa as usize, self.front_j)
    }

    pub fn eval_j_prime(&self, u: f64) -> Result<SieveValue> {
        self.decomposition(u, self.kappa as usize - 1, self.front_jp)
    }

    /// Rigorous bound on `|j~'(u) - j'(u)|` at a single point.
    pub fn j_prime_bound(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(0.0);
        }
        self.check_coverage(u)?;
        let lambda = self.kappa as usize - 1;
        let budget = self.table.budget();
        let params = self.table.params();
        let kappa = self.kappa as f64;
        let mut total = 0.0;
        let mut n = 0usize;
        while (n as f64) < u {
            let nu = params
                .circle_for(u - n as f64)
                .ok_or_else(|| Error::Domain(format!("u = {u} beyond circle coverage")))?;
            total += kappa.powi(n as i32) * budget.truncation_bound(nu, lambda)?;
            n += 1;
        }
        Ok(to_f64(self.front_jp) * total)
    }

    /// The per-point `j~'` bound is nondecreasing in `u` (more terms, later
    /// circles), so its supremum over `(0, u_max]` is its value at `u_max`.
    pub fn uniform_jp_error(&self, u_max: f64) -> Result<f64> {
        self.j_prime_bound(u_max)
    }

    fn check_coverage(&self, u: f64) -> Result<()> {
        if u > self.coverage() || !u.is_finite() {
            return Err(Error::Domain(format!(
                "u = {u} outside evaluator coverage (0, {}]",
                self.coverage()
            )));
        }
        Ok(())
    }

    fn decomposition(&self, u: f64, lambda: usize, front: Real) -> Result<SieveValue> {
        if u <= 0.0 {
            return Ok(SieveValue::zero());
        }
        self.check_coverage(u)?;

        let kappa = self.kappa as f64;
        let neg_kappa = real(-kappa);
        let u_real = real(u);
        let mut sum = CompensatedSum::new();
        let mut bound = 0.0;
        let mut weight = real(1.0);
        let mut n = 0usize;
        while (n as f64) < u {
            let k = self.table.eval_k_real(n, lambda, u_real)?;
            sum.add(weight * k.value);
            bound += kappa.powi(n as i32) * k.bound;
            weight *= neg_kappa;
            n += 1;
        }

        let ratio = sum.cancellation_ratio();
        if ratio * REAL_EPSILON > CANCELLATION_LIMIT {
            return Err(Error::PrecisionFault { u, ratio });
        }
        self.record_cancellation(ratio);

        Ok(SieveValue {
            value: front * sum.sum(),
            bound: to_f64(front) * bound,
            cancellation: ratio,
        })
    }

    fn record_cancellation(&self, ratio: f64) {
        let _ = self.worst_cancellation.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |bits| {
            (ratio > f64::from_bits(bits)).then_some(ratio.to_bits())
        });
    }
}
