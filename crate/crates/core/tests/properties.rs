use pbc_core::dynamics::{
    empirical_expected_log, run_trajectory, trap_bound, trap_bound_violations, SimConfig,
};
use pbc_core::maps::{MapProbe, MapSpec};
use pbc_core::noise::{expected_log_l0, expected_log_pair, NoiseSpec};
use pbc_core::scalar::{approx, ratio};
use pbc_core::stability::{
    alpha0, bernoulli_region, beta0, build_envelope, cell_verdict, mathcal_v, psi, script_l,
    ControlSpec, RegionConstants, Verdict,
};
use pbc_core::sweep::uniform_grid;
use pbc_core::Rational;
use proptest::prelude::*;

fn ricker(r: f64) -> (MapSpec<f64>, MapProbe<f64>) {
    let m = MapSpec::ricker(r).unwrap();
    let p = m.probe().unwrap();
    (m, p)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        max_global_rejects: 100_000,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn psi_partial_fractions(u in 0.0f64..50.0, v in 0.0f64..50.0) {
        let p = psi(u, v).unwrap();
        let alt = 1.0 - 1.0 / (u + 1.0) - 1.0 / (v + 1.0);
        prop_assert!((p - alt).abs() < 1e-12);
        prop_assert!(p < 1.0);
        if (u * v - 1.0).abs() > 1e-9 {
            prop_assert_eq!(p > 0.0, u * v > 1.0);
        }
        prop_assert!(psi(u + 0.5, v).unwrap() > p && psi(u, v + 0.5).unwrap() > p);
    }

    #[test]
    fn psi_exact_matches_float(a in 1i64..400, b in 1i64..400, d in 1i64..40) {
        let exact: Rational = psi(ratio(a, d), ratio(b, d)).unwrap();
        let float = psi(a as f64 / d as f64, b as f64 / d as f64).unwrap();
        prop_assert!((approx(&exact) - float).abs() < 1e-12);
    }

    #[test]
    fn beta0_is_the_product_root(lp in 0.3f64..6.0, extra in 0.0f64..6.0, beta in 0.0f64..1.0) {
        let lm = lp.max(1.0 / lp) + extra + 1e-6;
        let b0 = beta0(lm, lp).unwrap();
        prop_assert!((script_l(lm, b0) * script_l(lp, b0) - 1.0).abs() < 1e-9);
        prop_assert!(b0 >= (lp - 1.0) / (lp + 1.0) - 1e-12);
        prop_assume!((beta - b0).abs() > 1e-9);
        prop_assert_eq!(script_l(lm, beta) * script_l(lp, beta) < 1.0, beta > b0);
    }

    #[test]
    fn deterministic_v_agrees_with_beta0(lp in 1.05f64..4.0, extra in 0.0f64..4.0, t in 0.0f64..1.0) {
        let lm = lp + extra;
        let b0 = beta0(lm, lp).unwrap();
        // keep both factors positive
        let alpha = t * lp / (lp + 1.0);
        prop_assume!((alpha - b0).abs() > 1e-9);
        let v = mathcal_v(lm, lp, alpha, 0.0);
        prop_assert!((v - (script_l(lm, alpha) * script_l(lp, alpha)).powi(2)).abs() < 1e-9 * v.max(1.0));
        prop_assert_eq!(v < 1.0, alpha > b0);
    }

    #[test]
    fn alpha0_sharp_gain(l0 in 1.0f64..20.0) {
        let a0 = alpha0(l0).unwrap();
        prop_assert!((script_l(l0, a0) - 1.0).abs() < 1e-12);
        prop_assert_eq!(beta0(l0, l0).map(|b| (b - a0).abs() < 1e-12).unwrap_or(l0 <= 1.0 + 1e-12), true);
    }

    #[test]
    fn bernoulli_region_gives_negative_expected_log(l0 in 1.2f64..8.0, t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let a0 = alpha0(l0).unwrap();
        let alpha = t * a0;
        let r = bernoulli_region(l0, alpha);
        prop_assume!(r.hi - r.lo > 1e-9);
        let ell = r.lo + s * (r.hi - r.lo);
        prop_assume!(ell > r.lo + 1e-9 && ell < r.hi - 1e-9);
        let e = expected_log_l0(l0, alpha, ell, &NoiseSpec::Bernoulli).unwrap();
        prop_assert!(e < 0.0, "E ln = {e}");
    }

    #[test]
    fn deterministic_row_matches_threshold(alpha in 0.0f64..0.99, bs in 0.05f64..0.9) {
        let c = RegionConstants { l0: Some(2.5), l_minus: 2.5, l_plus: 2.5, beta_star: bs, sides: 2.5 / 3.5 };
        let v = cell_verdict(&c, &NoiseSpec::Bernoulli, alpha, 0.0);
        prop_assert_eq!(v == Verdict::Holds, alpha > bs);
        prop_assert_ne!(v, Verdict::Infeasible);
    }

    #[test]
    fn inadmissible_cells_are_infeasible(alpha in 0.0f64..1.0, ell in 0.0f64..1.0) {
        prop_assume!(alpha - ell < 0.0 || alpha + ell >= 1.0);
        let c = RegionConstants { l0: None, l_minus: 2.0, l_plus: 1.5, beta_star: 0.27, sides: 0.5 };
        prop_assert_eq!(cell_verdict(&c, &NoiseSpec::Uniform, alpha, ell), Verdict::Infeasible);
    }

    #[test]
    fn envelope_is_an_exact_involution(
        steps in proptest::collection::vec((1i64..20, 1i64..30), 1..6),
        probe in 0usize..1000,
    ) {
        let mut a: Vec<Rational> = vec![ratio(1000, 1)];
        let mut c = Vec::new();
        for (width, slope) in &steps {
            let next = a.last().unwrap().clone() - ratio::<Rational>(*width, 1);
            a.push(next);
            c.push(ratio::<Rational>(*slope, 7));
        }
        let env = build_envelope(&a, &c).unwrap();
        let (lo, hi) = env.domain();
        let x = lo.clone() + (hi - lo) * ratio::<Rational>(probe as i64, 999);
        let y = env.eval(&x).unwrap();
        prop_assert_eq!(env.eval(&y).unwrap(), x);
    }

    #[test]
    fn grids_increase(lo in -5.0f64..5.0, width in 1e-3f64..10.0, n in 2usize..500) {
        let g = uniform_grid(lo, lo + width, n).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn controlled_map_is_ordered_in_the_gain(r in 1.5f64..4.0, x in 0.01f64..4.0, a in 0.001f64..0.99, gap in 0.001f64..0.5) {
        let (m, p) = ricker(r);
        prop_assume!((x - p.k).abs() > 1e-6);
        let b = (a + gap).min(0.999);
        prop_assume!(b > a);
        let (f, ga, gb) = (m.f(x), m.controlled(a, x), m.controlled(b, x));
        if x < p.k {
            prop_assert!(f > ga && ga > gb && gb > x);
        } else {
            prop_assert!(f < ga && ga < gb && gb < x);
        }
    }

    #[test]
    fn trap_is_invariant(r in 1.5f64..4.0, t in 0.0f64..=1.0, beta in 0.0f64..1.0) {
        let (m, p) = ricker(r);
        let x = p.f2_m + t * (p.f_m - p.f2_m);
        let y = m.controlled(beta, x);
        prop_assert!(y >= p.f2_m - 1e-12 && y <= p.f_m + 1e-12);
    }

    #[test]
    fn piecewise_trap_is_invariant(which in 0usize..3, t in 0.0f64..=1.0, beta in 0.0f64..1.0) {
        let m = [MapSpec::<f64>::exglob(), MapSpec::exnotglob(), MapSpec::switching()][which].clone();
        let p = m.probe().unwrap();
        let x = p.f2_m + t * (p.f_m - p.f2_m);
        let y = m.controlled(beta, x);
        let slack = 1e-9 * p.k;
        prop_assert!(y >= p.f2_m - slack && y <= p.f_m + slack);
    }

    #[test]
    fn orbits_alternate_near_equilibrium(r in 2.0f64..3.9, s in -1.0f64..1.0, u in 0.0f64..0.999) {
        let (m, p) = ricker(r);
        let theta = pbc_core::stability::side_theta(&p);
        let (a1, a2) = m.side_slopes(p.k, theta);
        let bound = pbc_core::stability::sides_bound(a1, a2);
        let x = p.k + s * theta;
        prop_assume!(x != p.k);
        let beta = u * bound;
        prop_assert!((m.controlled(beta, x) - p.k) * (p.k - x) > 0.0);
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn trap_bound_contains_every_path(r in 1.5f64..4.0, t in 0.05f64..4.0, lo in 0.01f64..0.9, w in 0.0f64..0.3, seed in any::<u64>()) {
        let (m, p) = ricker(r);
        let hi = (lo + w).min(0.95);
        let x0 = t * p.k;
        let s0 = trap_bound(&m, &p, lo, hi, x0).unwrap();
        prop_assert!(s0 >= 1);
        prop_assert_eq!(trap_bound_violations(&m, &p, lo, hi, x0, 4, seed).unwrap(), 0);
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>(), stream in 0u64..1000, uniform in any::<bool>()) {
        let (m, p) = ricker(3.2);
        let noise = if uniform { NoiseSpec::Uniform } else { NoiseSpec::Bernoulli };
        let c = ControlSpec::new(0.3, 0.15).unwrap();
        let cfg = SimConfig::new(200);
        let a = run_trajectory(&m, &p, c, &noise, 0.7, &cfg, seed, stream).unwrap();
        let b = run_trajectory(&m, &p, c, &noise, 0.7, &cfg, seed, stream).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn monte_carlo_tracks_closed_form(lp in 1.2f64..3.0, extra in 0.0f64..2.0, t in 0.0f64..1.0, s in 0.05f64..0.45, uniform in any::<bool>(), seed in any::<u64>()) {
        let lm = lp + extra;
        let top = 0.98 * lp / (lp + 1.0);
        let ell = s * top;
        let alpha = ell + t * (top - 2.0 * ell);
        let noise = if uniform { NoiseSpec::Uniform } else { NoiseSpec::Bernoulli };
        let exact = expected_log_pair(lm, lp, alpha, ell, &noise).unwrap();
        let mc = empirical_expected_log(lm, lp, ControlSpec::new(alpha, ell).unwrap(), &noise, 200_000, seed);
        // five standard errors keeps the false-alarm rate negligible over many runs
        prop_assert!(mc.within(exact, 5.0), "mc {} ± {} vs {exact}", mc.mean, mc.std_err);
    }
}
