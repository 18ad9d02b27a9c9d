//! Chained, truncated power series for Wheeler's kernels `K_n(u, lambda)`.
//!
//! `K_n(u, lambda)` is expanded about the centres `n + c_nu`, with
//! `c_nu = (3/2)^nu - 1`, and the expansion on circle `nu` is used on the
//! interval `n + c_nu < u <= n + c_{nu+1}`. Coefficients of circle `nu >= 1`
//! are anchored at the value of the circle `nu - 1` series at the new centre,
//! so truncation error propagates along the chain; [`ErrorBudget`] carries
//! the Grupp–Richert constants that bound it.
//!
//! Coefficient rows `b_j(n, c_nu, lambda)`, `0 <= j <= N`, come from three
//! sources:
//!
//! * `lambda = 0, n <= 1`: closed forms (`K_0 = 1`, `K_1(u) = log u`);
//! * `lambda = 0, n >= 2`: the two-term recursion in `j` from the `n - 1` row;
//! * `lambda >= 1`: the derivative identity `b_j(lambda) = (lambda/j) b_{j-1}(lambda - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{factorial, real, to_f64, Real};

/// Largest circle centre offset for which the coefficient bound
/// `|b_j(n, c)| <= 4 / (1 + c)^j` is proved.
pub const MAX_CENTER_OFFSET: f64 = 19.0;

/// `c_nu = (3/2)^nu - 1` for `0 <= nu <= nu_max + 1`.
///
/// Every entry is exact in `f64` (numerator `3^nu - 2^nu` stays below `2^53`).
pub fn chain_radii(nu_max: usize) -> Vec<f64> {
    let mut radii = Vec::with_capacity(nu_max + 2);
    let mut pow = 1.0f64;
    for _ in 0..=nu_max + 1 {
        radii.push(pow - 1.0);
        pow *= 1.5;
    }
    radii
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainParameters {
    truncation: usize,
    nu_max: usize,
    radii: Vec<f64>,
}

impl Default for ChainParameters {
    fn default() -> Self {
        Self::new(Self::DEFAULT_TRUNCATION, Self::DEFAULT_NU_MAX)
            .expect("default chain parameters are valid")
    }
}

impl ChainParameters {
    pub const DEFAULT_TRUNCATION: usize = 80;
    pub const DEFAULT_NU_MAX: usize = 7;

    pub fn new(truncation: usize, nu_max: usize) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::InvalidParameter(format!(
                "truncation order must be at least 2, got {truncation}"
            )));
        }
        if nu_max > 30 {
            return Err(Error::InvalidParameter(format!("too many circles: {nu_max}")));
        }
        let radii = chain_radii(nu_max);
        if radii[nu_max] > MAX_CENTER_OFFSET {
            return Err(Error::InvalidParameter(format!(
                "circle {nu_max} has centre offset {} > {MAX_CENTER_OFFSET}",
                radii[nu_max]
            )));
        }
        Ok(Self { truncation, nu_max, radii })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn nu_max(&self) -> usize {
        self.nu_max
    }

    /// `c_0, ..., c_{nu_max + 1}`.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius(&self, nu: usize) -> f64 {
        self.radii[nu]
    }

    /// Largest offset `u - n` reachable by the retained circles.
    pub fn reach(&self) -> f64 {
        self.radii[self.nu_max + 1]
    }

    /// The circle `nu` with `c_nu < x <= c_{nu+1}`, for an offset `x = u - n > 0`.
    pub fn circle_for(&self, x: f64) -> Option<usize> {
        if !(x > 0.0) || x > self.reach() {
            return None;
        }
        (0..=self.nu_max).find(|&nu| x <= self.radii[nu + 1])
    }
}

/// Truncation-error constants `M_{nu, lambda}`.
///
/// `M_nu = 4 prod_{l <= nu} (7 + c_l)/3` and
/// `M_{nu, lambda} = sum_{k <= nu} (c_{k+1} - c_k) M_{k, lambda - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    truncation: usize,
    radii: Vec<f64>,
    /// Indexed `[lambda][nu]`.
    m: Vec<Vec<f64>>,
}

impl ErrorBudget {
    pub fn new(params: &ChainParameters, lambda_max: usize) -> Self {
        let c = params.radii();
        let nu_count = params.nu_max() + 1;

        let mut base = Vec::with_capacity(nu_count);
        let mut acc = 4.0;
        for &cl in c.iter().take(nu_count) {
            acc *= (7.0 + cl) / 3.0;
            base.push(acc);
        }

        let mut m = vec![base];
        for lambda in 1..=lambda_max {
            let prev = &m[lambda - 1];
            let mut row = Vec::with_capacity(nu_count);
            let mut running = 0.0;
            for k in 0..nu_count {
                running += (c[k + 1] - c[k]) * prev[k];
                row.push(running);
            }
            m.push(row);
        }
        Self { truncation: params.truncation(), radii: c.to_vec(), m }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn lambda_max(&self) -> usize {
        self.m.len() - 1
    }

    pub fn nu_max(&self) -> usize {
        self.m[0].len() - 1
    }

    /// `M_nu` (the `lambda = 0` column).
    pub fn m0(&self, nu: usize) -> f64 {
        self.m[0][nu]
    }

    /// `M_{nu, lambda}`.
    pub fn m(&self, nu: usize, lambda: usize) -> f64 {
        self.m[lambda][nu]
    }

    /// `lambda! M_{nu,lambda} / 2^(N - lambda)`: the bound on
    /// `|K_n(u, lambda; nu) - K~_n(u, lambda; nu)|` over circle `nu`.
    pub fn truncation_bound(&self, nu: usize, lambda: usize) -> Result<f64> {
        if lambda >= self.truncation {
            return Err(Error::Domain(format!(
                "lambda = {lambda} must be below the truncation order {}",
                self.truncation
            )));
        }
        if lambda > self.lambda_max() || nu > self.nu_max() {
            return Err(Error::Domain(format!(
                "budget holds nu <= {}, lambda <= {}; asked for ({nu}, {lambda})",
                self.nu_max(),
                self.lambda_max()
            )));
        }
        if self.radii[nu] > MAX_CENTER_OFFSET {
            return Err(Error::Domain(format!("c_{nu} exceeds {MAX_CENTER_OFFSET}")));
        }
        let lam_fact = to_f64(factorial(lambda as u32));
        let scale = 2f64.powi(lambda as i32 - self.truncation as i32);
        Ok(lam_fact * self.m[lambda][nu] * scale)
    }

    /// The slack allowed on a stored `lambda = 0` coefficient of circle `nu`:
    /// `M_{nu-1} / 2^N`, zero on the first circle.
    pub fn coefficient_slack(&self, nu: usize) -> f64 {
        if nu == 0 {
            0.0
        } else {
            self.m[0][nu - 1] * 2f64.powi(-(self.truncation as i32))
        }
    }
}

/// Closed-form coefficients `b_j(n, c)` of `K_n(u, 0)` about `u = n + c`,
/// for `n` in `{0, 1, 2}` and `0 <= j <= truncation`.
pub fn base_coefficients_lambda0(n: usize, c: f64, truncation: usize) -> Result<Vec<Real>> {
    if !(0.0..=MAX_CENTER_OFFSET).contains(&c) {
        return Err(Error::Domain(format!("centre offset {c} outside [0, {MAX_CENTER_OFFSET}]")));
    }
    let len = truncation + 1;
    let cr = real(c);
    let one = real(1.0);
    match n {
        0 => {
            let mut row = vec![real(0.0); len];
            row[0] = one;
            Ok(row)
        }
        1 => {
            let base = cr + one;
            let inv = one / base;
            let mut row = Vec::with_capacity(len);
            row.push(base.ln());
            let mut pow = one;
            for j in 1..len {
                pow *= inv;
                let term = pow / real(j as f64);
                row.push(if j % 2 == 1 { term } else { -term });
            }
            Ok(row)
        }
        2 => {
            let c1 = cr + one;
            let c2 = cr + real(2.0);
            let log_c1 = c1.ln();
            let ratio = c2 / c1;
            let inv_c2 = one / c2;

            let mut row = Vec::with_capacity(len);
            row.push(k2_closed_form(cr));
            if len > 1 {
                row.push(log_c1 * inv_c2);
            }
            // partial = sum_{l=1}^{j-1} ratio^l / l
            let mut partial = real(0.0);
            let mut ratio_pow = one;
            let mut inv_pow = inv_c2;
            for j in 2..len {
                let l = j - 1;
                ratio_pow *= ratio;
                partial += ratio_pow / real(l as f64);
                inv_pow *= inv_c2;
                let magnitude = inv_pow / real(j as f64) * (log_c1 - partial);
                row.push(if j % 2 == 1 { magnitude } else { -magnitude });
            }
            Ok(row)
        }
        _ => Err(Error::Domain(format!(
            "closed forms exist only for n <= 2; n = {n} comes from the recursion"
        ))),
    }
}

/// `K_2(2 + c) = log(1 + c) log(2 + c) + Li2(-1 - c) + pi^2/12`.
fn k2_closed_form(c: Real) -> Real {
    let one = real(1.0);
    let u = c + real(2.0);
    let pi2 = Real::PI * Real::PI;
    (u - one).ln() * u.ln() + dilog_le_minus_one(-(c + one)) + pi2 / real(12.0)
}

/// Real dilogarithm for `x <= -1`.
fn dilog_le_minus_one(x: Real) -> Real {
    let one = real(1.0);
    let pi2 = Real::PI * Real::PI;
    if to_f64(x) == -1.0 {
        return -pi2 / real(12.0);
    }
    // Li2(x) = -pi^2/6 - log^2(-x)/2 - Li2(1/x), then Landen's identity for
    // y = 1/x in (-1, 0): Li2(y) = -Li2(y/(y-1)) - log^2(1-y)/2.
    let y = one / x;
    let z = y / (y - one);
    let log_neg_x = (-x).ln();
    let log_1my = (one - y).ln();
    let li2_y = -dilog_series(z) - log_1my * log_1my / real(2.0);
    -pi2 / real(6.0) - log_neg_x * log_neg_x / real(2.0) - li2_y
}

/// `sum z^k / k^2` for `0 <= z <= 1/2`.
fn dilog_series(z: Real) -> Real {
    let mut sum = real(0.0);
    let mut pow = real(1.0);
    for k in 1..=160 {
        pow *= z;
        let term = pow / real((k * k) as f64);
        sum += term;
        if to_f64(term).abs() < 1e-36 {
            break;
        }
    }
    sum
}

/// Fills `b_j(n, c)` for `1 <= j <= N` with the two-term recursion
/// `b_j(n) = (b_{j-1}(n-1) - (j-1) b_{j-1}(n)) / (j (n + c))`.
pub fn recur_coefficients(prev_row: &[Real], b0: Real, n: usize, c: f64) -> Result<Vec<Real>> {
    check_recursion_args(prev_row, n)?;
    let nc = real(n as f64) + real(c);
    let mut row = Vec::with_capacity(prev_row.len());
    row.push(b0);
    for j in 1..prev_row.len() {
        let jr = real(j as f64);
        let next = (prev_row[j - 1] - real((j - 1) as f64) * row[j - 1]) / (jr * nc);
        row.push(next);
    }
    Ok(row)
}

/// The summation form of the same recursion,
/// `b_j(n) = (-1)^{j-1}/(j (n+c)^j) sum_{l<j} (-1)^l b_l(n-1) (n+c)^l`.
///
/// Kept as an independent cross-check of [`recur_coefficients`].
pub fn recur_coefficients_summation(
    prev_row: &[Real],
    b0: Real,
    n: usize,
    c: f64,
) -> Result<Vec<Real>> {
    check_recursion_args(prev_row, n)?;
    let len = prev_row.len();
    let inv = real(1.0) / (real(n as f64) + real(c));
    let mut inv_pows = Vec::with_capacity(len + 1);
    inv_pows.push(real(1.0));
    for k in 1..=len {
        inv_pows.push(inv_pows[k - 1] * inv);
    }
    let mut row = Vec::with_capacity(len);
    row.push(b0);
    for j in 1..len {
        let mut acc = real(0.0);
        for (l, &b) in prev_row.iter().enumerate().take(j) {
            let term = b * inv_pows[j - l];
            acc = if l % 2 == 0 { acc.add_accurate(term) } else { acc.sub_accurate(term) };
        }
        let value = acc / real(j as f64);
        row.push(if (j - 1) % 2 == 0 { value } else { -value });
    }
    Ok(row)
}

fn check_recursion_args(prev_row: &[Real], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("the recursion starts at n = 1".into()));
    }
    if prev_row.len() < 3 {
        return Err(Error::Domain("coefficient rows need at least 3 entries".into()));
    }
    Ok(())
}

/// Lifts a row from order `lambda - 1` to `lambda` on the same centre:
/// `b_j(lambda) = (lambda / j) b_{j-1}(lambda - 1)` for `j >= 1`, with
/// `b_0` supplied by the caller (the chain anchor or the value at `u = n`).
pub fn lift_lambda(lower_row: &[Real], b0: Real, lambda: usize) -> Result<Vec<Real>> {
    let truncation = lower_row.len().saturating_sub(1);
    if lambda == 0 {
        return Err(Error::Domain("lift_lambda needs lambda >= 1".into()));
    }
    if lambda >= truncation {
        return Err(Error::Domain(format!(
            "lambda = {lambda} must be below the truncation order {truncation}"
        )));
    }
    let lam = real(lambda as f64);
    let mut row = Vec::with_capacity(lower_row.len());
    row.push(b0);
    for j in 1..lower_row.len() {
        row.push(lam * lower_row[j - 1] / real(j as f64));
    }
    Ok(row)
}

/// Horner evaluation of `sum_j row[j] x^j`.
#[inline]
pub(crate) fn horner(row: &[Real], x: Real) -> Real {
    row.iter().rev().fold(real(0.0), |acc, &b| acc * x + b)
}

/// A truncated-series value together with its rigorous truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Real,
    pub bound: f64,
}

/// Immutable per-`kappa` store of the chained coefficient rows
/// `b~_j(n, c_nu, lambda)` for `0 <= lambda <= kappa`, `0 <= n <= n_max`,
/// `0 <= nu <= nu_max`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    kappa: u32,
    params: ChainParameters,
    n_max: usize,
    lambda_max: usize,
    budget: ErrorBudget,
    coeffs: Vec<Vec<Real>>,
}

impl CoefficientTable {
    /// Builds the table; `lambda` runs over `0..=kappa`.
    ///
    /// Build order is `lambda`, then `n`, then `nu`, all ascending, so every
    /// row's dependencies (`n - 1`, `lambda - 1`, `nu - 1`) already exist.
    pub fn build(kappa: u32, params: ChainParameters, n_max: usize) -> Result<Self> {
        let lambda_max = kappa as usize;
        let truncation = params.truncation();
        if lambda_max >= truncation {
            return Err(Error::InvalidParameter(format!(
                "truncation order {truncation} must exceed kappa = {kappa}"
            )));
        }
        let nu_count = params.nu_max() + 1;
        let mut table = Self {
            kappa,
            budget: ErrorBudget::new(&params, lambda_max),
            params,
            n_max,
            lambda_max,
            coeffs: Vec::with_capacity((lambda_max + 1) * (n_max + 1) * nu_count),
        };

        for lambda in 0..=lambda_max {
            for n in 0..=n_max {
                for nu in 0..nu_count {
                    let row = table.build_row(lambda, n, nu)?;
                    debug_assert_eq!(table.coeffs.len(), table.index(lambda, n, nu));
                    table.coeffs.push(row);
                }
            }
        }
        Ok(table)
    }

    fn build_row(&self, lambda: usize, n: usize, nu: usize) -> Result<Vec<Real>> {
        let truncation = self.params.truncation();
        let c = self.params.radius(nu);

        if lambda == 0 {
            if n <= 1 {
                return base_coefficients_lambda0(n, c, truncation);
            }
            let b0 = if nu == 0 { real(0.0) } else { self.chain_anchor(n, nu, 0)? };
            return recur_coefficients(self.row(0, n - 1, nu), b0, n, c);
        }

        // K_n(n, lambda) = 0 for lambda >= 1 (and for n >= 1 at any lambda).
        let b0 = if nu == 0 { real(0.0) } else { self.chain_anchor(n, nu, lambda)? };
        lift_lambda(self.row(lambda - 1, n, nu), b0, lambda)
    }

    #[inline]
    fn index(&self, lambda: usize, n: usize, nu: usize) -> usize {
        (lambda * (self.n_max + 1) + n) * (self.params.nu_max() + 1) + nu
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn params(&self) -> &ChainParameters {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn lambda_max(&self) -> usize {
        self.lambda_max
    }

    pub fn budget(&self) -> &ErrorBudget {
        &self.budget
    }

    /// Coefficients `b~_0..=b~_N` of circle `nu`. Panics if out of range.
    pub fn row(&self, lambda: usize, n: usize, nu: usize) -> &[Real] {
        &self.coeffs[self.index(lambda, n, nu)]
    }

    /// `b~_0(n, c_nu, lambda)`: the circle `nu - 1` series evaluated at the
    /// new centre `n + c_nu`, i.e. at offset `c_nu - c_{nu-1}`.
    pub fn chain_anchor(&self, n: usize, nu: usize, lambda: usize) -> Result<Real> {
        if nu == 0 || nu > self.params.nu_max() {
            return Err(Error::Domain(format!("chain anchor needs 1 <= nu <= nu_max, got {nu}")));
        }
        let idx = self.index(lambda, n, nu - 1);
        let prev = self.coeffs.get(idx).ok_or_else(|| {
            Error::Domain(format!("circle {} of (n={n}, lambda={lambda}) not built", nu - 1))
        })?;
        let step = real(self.params.radius(nu)) - real(self.params.radius(nu - 1));
        Ok(horner(prev, step))
    }

    pub fn eval_k(&self, n: usize, lambda: usize, u: f64) -> Result<SeriesValue> {
        self.eval_k_real(n, lambda, real(u))
    }

    /// `K~_n(u, lambda)` with its bound `lambda! M_{nu,lambda} / 2^(N-lambda)`.
    /// Exactly zero (with zero bound) for `u <= n`.
    pub fn eval_k_real(&self, n: usize, lambda: usize, u: Real) -> Result<SeriesValue> {
        if lambda > self.lambda_max {
            return Err(Error::Domain(format!(
                "table holds lambda <= {}, asked for {lambda}",
                self.lambda_max
            )));
        }
        let offset = u - real(n as f64);
        if to_f64(offset) <= 0.0 {
            return Ok(SeriesValue { value: real(0.0), bound: 0.0 });
        }
        if n > self.n_max {
            return Err(Error::Domain(format!("table holds n <= {}, asked for {n}", self.n_max)));
        }
        let nu = self.params.circle_for(to_f64(offset)).ok_or_else(|| {
            Error::Domain(format!(
                "u = {} lies beyond the last circle for n = {n} (reach n + {})",
                to_f64(u),
                self.params.reach()
            ))
        })?;
        let x = offset - real(self.params.radius(nu));
        let value = horner(self.row(lambda, n, nu), x);
        let bound = self.budget.truncation_bound(nu, lambda)?;
        Ok(SeriesValue { value, bound })
    }

    /// Serialises the table: header then rows in build order, each entry a
    /// `[hi, lo]` pair.
    pub fn to_json(&self) -> String {
        let dump = TableDump {
            kappa: self.kappa,
            truncation: self.params.truncation(),
            nu_max: self.params.nu_max(),
            n_max: self.n_max,
            precision: PRECISION_TAG.to_string(),
            rows: self.coeffs.iter().map(|r| r.iter().map(|b| [b.0, b.1]).collect()).collect(),
        };
        serde_json::to_string(&dump).expect("table dump serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: TableDump =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if dump.precision != PRECISION_TAG {
            return Err(Error::Format(format!("unknown precision tag {:?}", dump.precision)));
        }
        let params = ChainParameters::new(dump.truncation, dump.nu_max)?;
        let lambda_max = dump.kappa as usize;
        let expected = (lambda_max + 1) * (dump.n_max + 1) * (dump.nu_max + 1);
        if dump.rows.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} rows, found {}",
                dump.rows.len()
            )));
        }
        if dump.rows.iter().any(|r| r.len() != dump.truncation + 1) {
            return Err(Error::Format("row length does not match truncation order".into()));
        }
        Ok(Self {
            kappa: dump.kappa,
            budget: ErrorBudget::new(&params, lambda_max),
            params,
            n_max: dump.n_max,
            lambda_max,
            coeffs: dump
                .rows
                .into_iter()
                .map(|r| r.into_iter().map(|[hi, lo]| Real(hi, lo)).collect())
                .collect(),
        })
    }
}

const PRECISION_TAG: &str = "double-double";

#[derive(Serialize, Deserialize)]
struct TableDump {
    kappa: u32,
    truncation: usize,
    nu_max: usize,
    n_max: usize,
    precision: String,
    rows: Vec<Vec<[f64; 2]>>,
}
