//! Panel Gauss–Legendre rules, plus a product rule for `-log w` on `[0, h]`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`, with companion
/// weights for the singular weight `-log x` on the same nodes.
///
/// The log weights integrate the degree `< m` Legendre interpolant of `f`
/// against `-log x` exactly, using the moments
/// `int_0^1 P_k(2x - 1) (-log x) dx = 1` for `k = 0` and `(-1)^k / (k (k + 1))` otherwise.
#[derive(Debug, Clone)]
pub struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(order: usize) -> Result<Self> {
        let degree = NonZeroUsize::new(order)
            .filter(|d| d.get() >= 2)
            .ok_or_else(|| Error::InvalidParameter(format!("panel order {order} < 2")))?;
        let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(degree)
            .iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();

        let moments: Vec<f64> = (0..order)
            .map(|k| {
                if k == 0 {
                    1.0
                } else {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign / (k as f64 * (k + 1) as f64)
                }
            })
            .collect();
        let log_weights = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| {
                let t = 2.0 * x - 1.0;
                let (mut p_prev, mut p) = (1.0, t);
                let mut acc = moments[0];
                for (k, &mu) in moments.iter().enumerate().skip(1) {
                    acc += (2 * k + 1) as f64 * p * mu;
                    let next = ((2 * k + 1) as f64 * t * p - k as f64 * p_prev) / (k + 1) as f64;
                    p_prev = p;
                    p = next;
                }
                w * acc
            })
            .collect();
        Ok(Self { nodes, weights, log_weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `(node, weight)` pairs for `int_a^b f(w) dw`.
    pub fn panel(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (a + h * x, h * w))
    }

    /// `(node, weight)` pairs for `int_0^h f(w) (-log w) dw`.
    pub fn log_panel(&self, h: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let neg_log_h = -h.ln();
        self.nodes
            .iter()
            .zip(self.weights.iter().zip(&self.log_weights))
            .map(move |(&x, (&w, &lw))| (h * x, h * (w * neg_log_h + lw)))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.panel(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Result of a log-weighted panel integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPanelEstimate {
    pub value: f64,
    /// `|value - value at roughly half the order|`.
    pub accuracy: f64,
}

/// `int_0^h f(w) (-log w) dw` for `f` analytic on `[0, h]`.
pub fn log_endpoint_panel<F: FnMut(f64) -> f64>(
    rule: &PanelRule,
    h: f64,
    mut f: F,
) -> Result<LogPanelEstimate> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("log panel width must be positive, got {h}")));
    }
    let value: f64 = rule.log_panel(h).map(|(x, w)| w * f(x)).sum();
    let coarse = PanelRule::new((rule.order() / 2 + 1).max(2))?;
    let check: f64 = coarse.log_panel(h).map(|(x, w)| w * f(x)).sum();
    Ok(LogPanelEstimate { value, accuracy: (value - check).abs() })
}
