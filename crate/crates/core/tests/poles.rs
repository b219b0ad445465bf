mod common;

use std::collections::{BTreeMap, BTreeSet};

use archi_poles::expr::{parse_map, PolynomialMap, VarConvention};
use archi_poles::fan::{simple_fan, simplicial_fan};
use archi_poles::geometry::NewtonPolyhedron;
use archi_poles::poles::*;
use common::*;
use num_rational::BigRational;
use proptest::prelude::*;

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn values(c: &[CandidatePole]) -> BTreeSet<BigRational> {
    c.iter().map(|p| p.value.clone()).collect()
}

fn map(text: &str) -> (PolynomialMap, NewtonPolyhedron) {
    let f = parse_map(text, VarConvention::detect(text)).unwrap();
    let g = NewtonPolyhedron::of_map(&f).unwrap();
    (f, g)
}

/// Poles of `∏ 1/(m_j s + 1)` with multiplicity, computed by grouping equal
/// exponents.
fn monomial_poles(m: &[u32]) -> BTreeMap<BigRational, usize> {
    let mut out = BTreeMap::new();
    for &k in m.iter().filter(|&&k| k > 0) {
        *out.entry(r(-1, k as i64)).or_insert(0) += 1;
    }
    out
}

fn in_p(s0: &BigRational, a: &[i64], d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let k = -(s0 * r(d, 1)) - r(a.iter().sum(), 1);
    k.is_integer() && k >= r(0, 1)
}

fn in_l(s0: &BigRational, l: usize) -> bool {
    let k = -s0.clone() - r(l as i64, 1);
    k.is_integer() && k >= r(0, 1)
}

/// Membership in the untruncated sharp set.
fn is_sharp_candidate(g: &NewtonPolyhedron, l: usize, s0: &BigRational) -> bool {
    in_l(s0, l) || g.facets().iter().any(|f| in_p(s0, &f.normal, f.offset))
}

/// Order bound recomputed from the face lattice and the facet list.
fn brute_order_bound(g: &NewtonPolyhedron, l: usize, s0: &BigRational) -> usize {
    let n = g.n();
    let bonus = usize::from(in_l(s0, l));
    let mut best = 1;
    for tau in g.face_lattice() {
        let ok = tau
            .defining_facets
            .iter()
            .all(|&j| in_p(s0, &g.facets()[j].normal, g.facets()[j].offset));
        if ok {
            best = best.max((n - tau.dimension + bonus).min(n));
        }
    }
    best
}

#[test]
fn gamma0_examples() {
    for (text, want) in [("x^2 + y^3", r(5, 6)), ("x^2 - y^3; x^2 - z^3", r(7, 6)), ("x1", r(1, 1))] {
        let (_, g) = map(text);
        assert_eq!(gamma0(&g, Gamma0Method::FacetMin).unwrap(), want);
        assert_eq!(gamma0(&g, Gamma0Method::Diagonal).unwrap(), want);
    }
}

#[test]
fn cusp_sharp_candidates() {
    let (_, g) = map("x^2 + y^3");
    let c = candidate_poles(&g, 1, None, Mode::Sharp, 1).unwrap();
    assert_eq!(c[0].value, r(-5, 6));
    assert_eq!(c[0].order_bound, 1);
    assert_eq!(c[0].sources.len(), 1);
    assert_eq!(c[0].sources[0].ray, vec![3, 2]);
    assert_eq!(c[0].sources[0].k, 0);
    let minus_one = c.iter().find(|p| p.value == r(-1, 1)).unwrap();
    assert!(minus_one.in_l_series);
    assert!(c.iter().any(|p| p.value == r(-2, 1)));
}

#[test]
fn cusp_pair_candidates() {
    let (_, g) = map("x^2 - y^3; x^2 - z^3");
    let c = candidate_poles(&g, 2, None, Mode::Sharp, 3).unwrap();
    let want: BTreeSet<BigRational> = (0..=3)
        .map(|k| r(-(7 + k), 6))
        .chain((0..=3).map(|k| r(-(2 + k), 1)))
        .collect();
    assert_eq!(values(&c), want);
    assert_eq!(lct_candidate(&g, 2, true).unwrap().0, r(7, 6));
    assert_eq!(largest_pole(&g, 2).unwrap(), (r(-7, 6), true));
}

#[test]
fn l_series_dropped_in_full_mode_when_l_reaches_n() {
    let (_, g) = map("x; y");
    let fan = simple_fan(&simplicial_fan(&g));
    let c = candidate_poles(&g, 2, Some(&fan), Mode::Full, 4).unwrap();
    assert!(c.iter().all(|p| !p.in_l_series));
    let sharp = candidate_poles(&g, 2, None, Mode::Sharp, 4).unwrap();
    assert!(sharp.iter().any(|p| p.in_l_series));
}

#[test]
fn order_bound_examples() {
    let (_, g) = map("x1*x2");
    assert_eq!(pole_order_bound(&g, 1, &r(-1, 1)).unwrap(), 2);
    let (_, g) = map("x^2 + y^3");
    assert_eq!(pole_order_bound(&g, 1, &r(-5, 6)).unwrap(), 1);
    assert!(pole_order_bound(&g, 1, &r(-1, 7)).is_err());
}

#[test]
fn lct_and_largest_pole() {
    let (_, g) = map("x^2 + y^3");
    assert_eq!(lct_candidate(&g, 1, false).unwrap().0, r(5, 6));
    assert_eq!(largest_pole(&g, 1).unwrap(), (r(-5, 6), true));
    let (_, g) = map("x1");
    assert_eq!(lct_candidate(&g, 1, false).unwrap().0, r(1, 1));
    assert_eq!(largest_pole(&g, 1).unwrap(), (r(-1, 1), false));
}

#[test]
fn monomial_numerical_data() {
    let (_, g) = map("x1^4");
    let fan = simple_fan(&simplicial_fan(&g));
    let data = principal_numerical_data(&fan, 1, true).unwrap();
    assert_eq!(data.entries.len(), 1);
    assert_eq!((data.entries[0].n, data.entries[0].v), (4, 1));
    assert_eq!(data.candidate_values(2), vec![r(-1, 4), r(-2, 4), r(-3, 4)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gamma0_methods_agree(n in 1usize..=4, seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts = random_support(&mut rng, n, 6, 5);
        let g = gamma_of(&pts);
        let a = gamma0(&g, Gamma0Method::FacetMin).unwrap();
        prop_assert_eq!(&a, &gamma0(&g, Gamma0Method::Diagonal).unwrap());
        // (t,…,t) ∈ Γ iff every facet inequality holds
        let t0 = a.recip();
        for f in g.facets() {
            prop_assert!(t0.clone() * r(f.normal.iter().sum(), 1) >= r(f.offset, 1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fan_invariants(pts in support(3, 5, 3), k_max in 0usize..=6) {
        let g = gamma_of(&pts);
        let simplicial = simplicial_fan(&g);
        let simple = simple_fan(&simplicial);
        let g0 = gamma0(&g, Gamma0Method::FacetMin).unwrap();
        for fan in [&simplicial, &simple] {
            for ray in fan.rays() {
                let d = g.support_value(ray).unwrap();
                if d != 0 {
                    prop_assert!(r(ray.iter().sum(), d) >= g0);
                }
            }
        }
        let full = candidate_poles(&g, 1, Some(&simple), Mode::Full, k_max).unwrap();
        let sharp = candidate_poles(&g, 1, None, Mode::Sharp, k_max).unwrap();
        prop_assert!(values(&sharp).is_subset(&values(&full)));

        let data = principal_numerical_data(&simple, 1, true).unwrap();
        let from_data: BTreeSet<BigRational> = data.candidate_values(k_max).into_iter().collect();
        prop_assert_eq!(from_data, values(&full));
        prop_assert_eq!(lct_candidate(&g, 1, true).unwrap().0, data.entries.iter().map(|e| r(e.v, e.n)).min().unwrap());

        for p in &full {
            prop_assert!(p.value < r(0, 1));
            prop_assert!(p.order_bound >= 1 && p.order_bound <= 3);
            if is_sharp_candidate(&g, 1, &p.value) {
                prop_assert_eq!(p.order_bound, brute_order_bound(&g, 1, &p.value));
            } else {
                prop_assert!(p.witness_face.is_none());
                prop_assert!(p.sources.iter().all(|s| s.tag == archi_poles::fan::RayTag::ExtraRay));
            }
            for s in &p.sources {
                let d = g.support_value(&s.ray).unwrap();
                prop_assert_eq!(&r(-(s.ray.iter().sum::<i64>() + s.k as i64), d), &p.value);
            }
        }
    }

    #[test]
    fn numerical_data_doubles(pts in support(3, 5, 3), l in 1usize..=2) {
        let f = map_from_support(&pts, l);
        let g = NewtonPolyhedron::of_map(&f).unwrap();
        let h = NewtonPolyhedron::of_map(&f.sum_of_squares()).unwrap();
        let a = principal_numerical_data(&simple_fan(&simplicial_fan(&g)), l, false).unwrap();
        let b = principal_numerical_data(&simple_fan(&simplicial_fan(&h)), l, false).unwrap();
        prop_assert_eq!(a.entries.len(), b.entries.len());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            prop_assert_eq!(&x.origin, &y.origin);
            prop_assert_eq!((2 * x.n, x.v), (y.n, y.v));
        }
    }

    #[test]
    fn monomial_oracle_poles_are_candidates(m in prop::collection::vec(0u32..=6, 1..=4), c in 1i64..9) {
        prop_assume!(m.iter().any(|&k| k > 0));
        let mut p = archi_poles::expr::Polynomial::zero(m.len());
        p.add_term(m.clone(), r(c, 1));
        let f = PolynomialMap::new(vec![p]).unwrap();
        let g = NewtonPolyhedron::of_map(&f).unwrap();
        let oracle = archi_poles::verify::monomial_zeta_oracle(&f).unwrap();
        let want = monomial_poles(&m);
        let got: BTreeMap<BigRational, usize> = oracle.poles().into_iter().collect();
        prop_assert_eq!(&got, &want);
        let cands = candidate_poles(&g, 1, None, Mode::Sharp, 10).unwrap();
        for (v, order) in want {
            let hit = cands.iter().find(|p| p.value == v);
            prop_assert!(hit.is_some(), "pole {} missing", v);
            prop_assert!(order <= hit.unwrap().order_bound);
        }
    }
}
