use archi_poles::expr::{parse_map, PolynomialMap, VarConvention};
use archi_poles::verify::*;
use num_rational::BigRational;
use proptest::prelude::*;

fn map(text: &str) -> PolynomialMap {
    parse_map(text, VarConvention::detect(text)).unwrap()
}

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// `∫₀¹ y^a dy` by Simpson's rule after `y = u²`, which removes the endpoint
/// singularity of the derivative for `a ≥ 0`.
fn simpson_power(a: f64) -> f64 {
    let n = 4000;
    let h = 1.0 / n as f64;
    let g = |u: f64| if u == 0.0 { 0.0 } else { 2.0 * u.powf(2.0 * a + 1.0) };
    let mut acc = g(0.0) + g(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn box_integral_examples() {
    let a = monomial_box_integral(&[2, 3], &[1, 1]).unwrap();
    assert_eq!(a.poles(), vec![(r(-1, 3), 1), (r(-1, 2), 1)]);
    assert_eq!(a.render(), "1/((2*s + 1)*(3*s + 1))");
    let b = monomial_box_integral(&[1, 1], &[1, 1]).unwrap();
    assert_eq!(b.poles(), vec![(r(-1, 1), 2)]);
    assert_eq!(b.degree(), 2);
    assert_eq!(b.eval_exact(&r(1, 1)), Some(r(1, 4)));
    assert_eq!(b.eval_exact(&r(-1, 1)), None);
    assert_eq!(monomial_box_integral(&[1], &[1]).unwrap().render(), "1/((s + 1))");
    assert!(monomial_box_integral(&[0], &[1]).is_err());
    assert!(monomial_box_integral(&[1, 2], &[1]).is_err());
}

#[test]
fn zeta_oracle_examples() {
    let z = monomial_zeta_oracle(&map("x1^2*x2^3")).unwrap();
    assert_eq!(z.poles(), vec![(r(-1, 3), 1), (r(-1, 2), 1)]);
    let z = monomial_zeta_oracle(&map("x1*x2")).unwrap();
    assert_eq!(z.poles(), vec![(r(-1, 1), 2)]);
    let z = monomial_zeta_oracle(&map("-3*x1*x3^2")).unwrap();
    assert_eq!(z.base, r(3, 1));
    assert_eq!(z.eval_exact(&r(2, 1)), Some(r(9, 3 * 5)));
    assert!(monomial_zeta_oracle(&map("x1 + x2")).is_err());
    assert!(monomial_zeta_oracle(&map("x1; x2")).is_err());
}

#[test]
fn volume_of_linear_and_square() {
    for (text, expo) in [("x1", 1.0), ("x1^2", 0.5)] {
        let t = mc_volume(&map(text), 1.0, &default_alphas(), 200_000, 7).unwrap();
        for row in &t.rows {
            let exact = row.alpha.powf(expo);
            assert!((row.estimate - exact).abs() <= 4.0 * row.stderr + 1e-12, "{text}: {row:?}");
            assert!((0.0..=1.0).contains(&row.estimate));
        }
        let fit = t.fit.unwrap();
        assert!((fit.slope - expo).abs() <= 2.0 * fit.stderr + 1e-9, "{text}: {fit:?}");
        assert!(fit.lower <= fit.slope && fit.slope <= fit.upper);
    }
}

#[test]
fn volume_slopes_of_monomials_within_two_sigma() {
    for m in 1..=3u32 {
        let text = format!("x1^{m}");
        let t = mc_volume(&map(&text), 1.0, &default_alphas(), 200_000, 0xA11CE).unwrap();
        let fit = t.fit.unwrap();
        assert!((fit.slope - 1.0 / m as f64).abs() <= 2.0 * fit.stderr, "m={m}: {fit:?}");
    }
}

#[test]
fn volume_rejects_bad_input() {
    let f = map("x1");
    assert!(mc_volume(&f, 1.0, &default_alphas(), 100, 1).is_err());
    assert!(mc_volume(&f, 1.0, &[0.1, 0.2], 10_000, 1).is_err());
    assert!(mc_volume(&f, -1.0, &[0.1], 10_000, 1).is_err());
}

#[test]
fn volume_is_deterministic_across_thread_counts() {
    let f = map("x^2 + y^3");
    let a = mc_volume(&f, 0.5, &default_alphas(), 50_000, 3).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| mc_volume(&f, 0.5, &default_alphas(), 50_000, 3).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
    let c = mc_volume(&f, 0.5, &default_alphas(), 50_000, 4).unwrap();
    assert_ne!(a.rows, c.rows);
}

#[test]
fn integral_at_zero_is_box_volume() {
    let t = mc_integral(&map("x1 + x2"), &[0.0], 0.5, 1000, 1).unwrap();
    assert_eq!(t.rows[0].estimate, 0.25);
    assert_eq!(t.rows[0].stderr, 0.0);
}

#[test]
fn integral_of_power_matches_closed_form() {
    // ∫₀^ε x^{ms} dx = ε^{ms+1}/(ms+1)
    let eps = 0.7;
    for m in 1..=3i32 {
        let s_values: Vec<f64> = vec![1.0, 0.5, -0.2 / m as f64, -0.4 / m as f64];
        let t = mc_integral(&map(&format!("x1^{m}")), &s_values, eps, 100_000, 11).unwrap();
        for row in &t.rows {
            let p = m as f64 * row.s + 1.0;
            let exact = eps.powf(p) / p;
            assert!((row.estimate - exact).abs() <= 4.0 * row.stderr, "m={m}: {row:?} vs {exact}");
        }
    }
}

#[test]
fn integral_is_deterministic() {
    let f = map("x^2 + y^3");
    let s = [-0.5, -0.7];
    let a = mc_integral(&f, &s, 1.0, 20_000, 5).unwrap();
    let b = mc_integral(&f, &s, 1.0, 20_000, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.plot_data(), b.plot_data());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_integral_matches_quadrature(
        pairs in prop::collection::vec((1u64..=6, 1u64..=4), 1..=3),
        s in 0.0f64..3.0,
    ) {
        let (m, g): (Vec<u64>, Vec<u64>) = pairs.into_iter().unzip();
        let rf = monomial_box_integral(&m, &g).unwrap();
        let quad: f64 = m.iter().zip(&g).map(|(&mj, &gj)| simpson_power(mj as f64 * s + gj as f64 - 1.0)).product();
        let v = rf.eval_f64(s);
        prop_assert!((v - quad).abs() <= 1e-6 * quad, "{} vs {}", v, quad);

        // at s = 1 the value is the exact product of 1/(m_j + γ_j)
        let direct = m.iter().zip(&g).fold(r(1, 1), |acc, (&mj, &gj)| acc / r((mj + gj) as i64, 1));
        prop_assert_eq!(rf.eval_exact(&r(1, 1)), Some(direct));
        let total: usize = rf.poles().iter().map(|p| p.1).sum();
        prop_assert_eq!(total, rf.degree());
    }
}
