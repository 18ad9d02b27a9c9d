use std::sync::OnceLock;

use proptest::prelude::*;

use sifting_limits::dde_oracle::{solve_j, DdeSolution, DEFAULT_TOL};
use sifting_limits::kernel_series::{recur_coefficients, recur_coefficients_summation};
use sifting_limits::main_term::{
    compute_quadratic, inner_reductions, main_term_parts, InnerReductions, LinearWeight,
    MainTermQuadratic, Polynomial, QuadratureRule,
};
use sifting_limits::optimizer::{optimal_a, SiftingResult};
use sifting_limits::output::{LimitRow, OutputRecord, Params, Row};
use sifting_limits::precision::{real, to_f64, REAL_EPSILON};
use sifting_limits::{ChainParameters, SieveEvaluator};

fn evaluators() -> &'static Vec<SieveEvaluator> {
    static EVS: OnceLock<Vec<SieveEvaluator>> = OnceLock::new();
    EVS.get_or_init(|| {
        (2..=10).map(|k| SieveEvaluator::new(k, ChainParameters::default()).unwrap()).collect()
    })
}

fn evaluator(kappa: u32) -> &'static SieveEvaluator {
    &evaluators()[kappa as usize - 2]
}

fn oracle(kappa: u32) -> &'static DdeSolution {
    static SOLS: OnceLock<Vec<DdeSolution>> = OnceLock::new();
    &SOLS.get_or_init(|| {
        (2..=10).map(|k| solve_j(k, k as f64 + 1.0, DEFAULT_TOL).unwrap()).collect()
    })[kappa as usize - 2]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_matches_oracle(kappa in 2u32..=10, frac in 0.0f64..1.0) {
        let u = 1e-3 + frac * kappa as f64;
        let j = evaluator(kappa).eval_j(u).unwrap().value_f64();
        prop_assert!((j - oracle(kappa).j(u).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn dde_residual_of_series_pair(kappa in 2u32..=10, frac in 0.0f64..1.0) {
        let u = 1.0 + frac * kappa as f64;
        prop_assume!((u - u.round()).abs() >= 1e-3);
        let ev = evaluator(kappa);
        let j = ev.eval_j(u).unwrap();
        let jp = ev.eval_j_prime(u).unwrap();
        let j1 = ev.eval_j(u - 1.0).unwrap();
        let k = real(kappa as f64);
        let residual = to_f64(real(u) * jp.value - k * j.value + k * j1.value).abs();
        let bounds = u * jp.bound + kappa as f64 * (j.bound + j1.bound);
        prop_assert!(residual <= 10.0 * bounds, "residual {residual:e} bounds {bounds:e}");
    }

    #[test]
    fn j_is_nondecreasing_and_bounded(kappa in 2u32..=10, frac in 0.0f64..1.0) {
        let ev = evaluator(kappa);
        let u = frac * kappa as f64;
        let a = ev.eval_j(u).unwrap();
        let b = ev.eval_j(u + 0.01).unwrap();
        prop_assert!(b.value_f64() >= a.value_f64() - (a.bound + b.bound));
        prop_assert!(a.value_f64() >= -a.bound && a.value_f64() <= 1.0 + a.bound);
    }

    #[test]
    fn derivative_identity(n in 0usize..=5, lambda in 1usize..=6, x in 0.01f64..5.0) {
        let table = evaluator(6).table();
        let params = table.params();
        prop_assume!(params.radii().iter().all(|&c| (x - c).abs() > 1e-3));
        let h = 1e-5;
        let u = real(n as f64 + x);
        let k = |l: usize, v| table.eval_k_real(n, l, v).unwrap();
        let fd = (k(lambda, u + real(h)).value - k(lambda, u - real(h)).value) / real(2.0 * h);
        let target = k(lambda - 1, u);
        let gap = to_f64(fd - real(lambda as f64) * target.value).abs();
        // h^2 |K'''| / 6 with |K'''| <= lambda^3 max(1, u - n)^lambda on these ranges
        let curvature = (lambda as f64).powi(3) * x.max(1.0).powi(lambda as i32);
        prop_assert!(gap <= 10.0 * (h * h * curvature + k(lambda, u).bound / h + lambda as f64 * target.bound) + 1e-20,
            "gap {gap:e}");
    }

    #[test]
    fn recursion_forms_agree(n in 1usize..=6, nu in 0usize..=7) {
        let table = evaluator(6).table();
        let c = table.params().radius(nu);
        let prev = table.row(0, n - 1, nu);
        let b0 = table.row(0, n, nu)[0];
        let two = recur_coefficients(prev, b0, n, c).unwrap();
        let sum = recur_coefficients_summation(prev, b0, n, c).unwrap();
        for (&x, &y) in two.iter().zip(&sum) {
            let scale = to_f64(x).abs().max(to_f64(y).abs());
            prop_assert!(to_f64(x - y).abs() <= 1e3 * REAL_EPSILON * scale);
        }
    }

    #[test]
    fn general_reduction_is_exact(coeffs in prop::collection::vec(-2.0f64..2.0, 1..5), w in 0.0f64..3.0) {
        // Compare the closed-form inner integrals with Simpson's rule in t.
        let p = Polynomial::new(coeffs);
        let r = inner_reductions(&p);
        let integrand = |t: f64| {
            if t == 0.0 { return 0.0; }
            let d = p.eval(w) - p.eval(w - t);
            d * d / t
        };
        let simpson = |hi: f64| {
            let m = 2000;
            let h = hi / m as f64;
            (0..=m).map(|i| {
                let weight = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                weight * integrand(i as f64 * h)
            }).sum::<f64>() * h / 3.0
        };
        let scale = 1.0 + r.i2.eval(w).abs() + r.i3.eval(w).abs();
        prop_assert!((r.i2.eval(w) - simpson(1.0)).abs() < 1e-9 * scale);
        prop_assert!((r.i3.eval(w) - simpson(w)).abs() < 1e-9 * scale * (1.0 + w.powi(4)));
    }

    #[test]
    fn beta_identity(kappa in 2u32..=10, u in 1.0f64..11.0) {
        let r = SiftingResult::new(kappa, u, 0.26, 1e-5, 1e-20);
        prop_assert_eq!(r.beta, 2.0 * u + 1.0);
    }

    #[test]
    fn vertex_maximizes(qa in -2.0f64..-0.01, vertex in 0.01f64..0.99, qc in -1.0f64..1.0) {
        let q = MainTermQuadratic {
            kappa: 2, u: 1.0,
            coef_a: real(qa), coef_b: real(-2.0 * qa * vertex), coef_c: real(qc),
            err: 0.0, quad_error: 0.0,
        };
        let best = optimal_a(&q);
        prop_assert!((best.a - vertex).abs() < 1e-12);
        for d in [-1e-3, 1e-3] {
            prop_assert!(q.evaluate(best.a + d) <= best.value);
        }
    }

    #[test]
    fn record_round_trips(u in 1.0f64..11.0, a in 0.0f64..1.0, i in 0.0f64..1.0, err in 0.0f64..1e-10) {
        let rec = OutputRecord {
            command: "find-beta".into(),
            params: Params { kappa: Some(vec![3]), truncation: 80, nu_max: 7, panel_order: 40, u_tol: Some(5e-4) },
            rows: vec![Row::Limit(LimitRow { kappa: 3, u, a, i_tilde: i, err, beta: 2.0 * u + 1.0, dhr_beta: None })],
            timing_ms: None,
        };
        prop_assert_eq!(OutputRecord::from_json(&rec.to_json().unwrap()).unwrap(), rec);
    }
}

#[test]
fn quadratic_reproduces_direct_quadrature() {
    let rule = QuadratureRule::default();
    for (kappa, u) in [(3, 2.7601), (7, 6.7623)] {
        let ev = evaluator(kappa);
        let q = compute_quadratic(ev, u, &rule).unwrap();
        for a in [0.1, 0.25, 0.4] {
            let p = LinearWeight::new(a).unwrap().polynomial();
            let direct = to_f64(main_term_parts(ev, u, &rule, &p).unwrap().total(kappa));
            assert!((q.evaluate(a) - direct).abs() <= 1e-10 + q.err, "kappa={kappa} a={a}");
        }
    }
}

#[test]
fn linear_shortcut_matches_general_path() {
    let rule = QuadratureRule::default();
    let ev = evaluator(4);
    let u = 3.7611;
    let p = LinearWeight::new(0.26).unwrap().polynomial();
    let general = main_term_parts(ev, u, &rule, &p).unwrap();
    let reduced = InnerReductions::linear();
    assert_eq!(inner_reductions(&p), reduced);
    let q = compute_quadratic(ev, u, &rule).unwrap();
    let direct = to_f64(general.total(4));
    assert!((q.evaluate(0.26) - direct).abs() < 1e-12);
}

#[test]
fn doubling_panel_order_is_stable() {
    let ev = evaluator(6);
    let u = 5.7621;
    let base = compute_quadratic(ev, u, &QuadratureRule::new(40).unwrap()).unwrap();
    let fine = compute_quadratic(ev, u, &QuadratureRule::new(80).unwrap()).unwrap();
    for a in [0.1, 0.257739, 0.4] {
        assert!((base.evaluate(a) - fine.evaluate(a)).abs() < 1e-10);
    }
}

#[test]
fn optimum_beats_neighbours_at_published_rows() {
    let rule = QuadratureRule::default();
    for (kappa, u) in [(2, 1.7581), (5, 4.7617), (10, 9.7628)] {
        let q = compute_quadratic(evaluator(kappa), u, &rule).unwrap();
        let best = optimal_a(&q);
        assert!(!best.fallback);
        assert!(best.value > q.err);
        for d in [-1e-3, 1e-3] {
            assert!(q.evaluate(best.a + d) <= best.value);
        }
    }
}

#[test]
fn main_term_increases_with_u() {
    let rule = QuadratureRule::default();
    for kappa in [2u32, 6, 10] {
        let ev = evaluator(kappa);
        let mut prev = f64::NEG_INFINITY;
        let start = kappa as f64 - 0.4;
        for i in 0..=16 {
            let u = start + 0.05 * i as f64;
            let q = compute_quadratic(ev, u, &rule).unwrap();
            let best = optimal_a(&q).value;
            assert!(best > prev, "kappa={kappa} u={u}");
            prev = best;
        }
    }
}
