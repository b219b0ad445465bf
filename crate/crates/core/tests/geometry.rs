mod common;

use std::collections::BTreeSet;

use archi_poles::geometry::NewtonPolyhedron;
use common::*;
use proptest::prelude::*;

/// Facets by exhaustive search over primitive normals in a box.
fn brute_facets(pts: &[Vec<i64>], bound: i64) -> BTreeSet<(Vec<i64>, i64)> {
    let n = pts[0].len();
    box_points(n, bound)
        .into_iter()
        .filter(|a| is_primitive(a) && face_dimension(pts, a) == n - 1)
        .map(|a| {
            let d = pts.iter().map(|p| dot(&a, p)).min().unwrap();
            (a, d)
        })
        .collect()
}

fn our_facets(g: &NewtonPolyhedron) -> BTreeSet<(Vec<i64>, i64)> {
    g.facets().iter().map(|f| (f.normal.clone(), f.offset)).collect()
}

type FaceKey = (BTreeSet<Vec<i64>>, BTreeSet<usize>);

/// `F(a)` described by the support points on it and its recession directions.
fn raw_first_meet(pts: &[Vec<i64>], a: &[i64]) -> FaceKey {
    let d = pts.iter().map(|p| dot(a, p)).min().unwrap();
    (
        pts.iter().filter(|p| dot(a, p) == d).cloned().collect(),
        (0..a.len()).filter(|&j| a[j] == 0).collect(),
    )
}

fn our_key(g: &NewtonPolyhedron, idx: usize) -> FaceKey {
    let tau = g.face(idx);
    (
        g.support_points()
            .iter()
            .filter(|p| g.point_on_face(p, tau))
            .cloned()
            .collect(),
        tau.recession.clone(),
    )
}

#[test]
fn facet_examples_match_exhaustive_search() {
    for pts in [
        vec![vec![2, 0], vec![0, 3]],
        vec![vec![1, 0, 0]],
        vec![vec![2, 0, 0], vec![0, 3, 0], vec![0, 0, 3]],
    ] {
        let g = gamma_of(&pts);
        assert_eq!(our_facets(&g), brute_facets(&pts, 6));
    }
}

#[test]
fn single_point_face_count() {
    let pts = vec![vec![1, 0]];
    let g = gamma_of(&pts);
    let oracle: BTreeSet<FaceKey> = box_points(2, 6).iter().map(|a| raw_first_meet(&pts, a)).collect();
    assert_eq!(oracle.len(), 3);
    assert_eq!(g.face_lattice().len(), 3);
}

#[test]
fn every_vertex_is_a_face() {
    let g = gamma_of(&[vec![3, 0, 1], vec![0, 2, 0], vec![1, 1, 1], vec![0, 0, 4]]);
    for (i, v) in g.vertices().iter().enumerate() {
        assert!(g
            .face_lattice()
            .iter()
            .any(|f| f.dimension == 0 && f.compact && f.vertex_set == BTreeSet::from([i])));
        assert!(v.iter().any(|&x| x > 0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn support_value_is_min_over_support(
        pts in support(3, 8, 6),
        dirs in prop::collection::vec(prop::collection::vec(0i64..=50, 3), 4),
    ) {
        let g = gamma_of(&pts);
        for a in dirs {
            let brute = pts.iter().map(|p| dot(&a, p)).min().unwrap();
            prop_assert_eq!(g.support_value(&a).unwrap(), brute);
        }
        prop_assert_eq!(g.support_value(&[0, 0, 0]).unwrap(), 0);
    }

    #[test]
    fn facets_match_exhaustive_search_2d(pts in support(2, 6, 6)) {
        let g = gamma_of(&pts);
        prop_assert_eq!(our_facets(&g), brute_facets(&pts, 6));
    }

    #[test]
    fn facets_match_exhaustive_search_3d(pts in support(3, 5, 2)) {
        let g = gamma_of(&pts);
        prop_assert_eq!(our_facets(&g), brute_facets(&pts, 8));
    }

    #[test]
    fn facet_normals_are_distinct_and_primitive(pts in support(4, 6, 4)) {
        let g = gamma_of(&pts);
        let normals: BTreeSet<Vec<i64>> = g.facet_normals().into_iter().collect();
        prop_assert_eq!(normals.len(), g.facets().len());
        for f in g.facets() {
            prop_assert!(is_primitive(&f.normal));
            prop_assert!(f.normal.iter().all(|&x| x >= 0));
            for (i, v) in g.vertices().iter().enumerate() {
                let val = dot(&f.normal, v);
                prop_assert!(val >= f.offset);
                prop_assert_eq!(val == f.offset, f.incident_vertices.contains(&i));
            }
        }
    }

    #[test]
    fn face_lattice_matches_first_meet_loci(pts in support(3, 5, 3)) {
        let g = gamma_of(&pts);
        let ours: BTreeSet<FaceKey> = (0..g.face_lattice().len()).map(|i| our_key(&g, i)).collect();
        prop_assert_eq!(ours.len(), g.face_lattice().len());
        let mut oracle: BTreeSet<FaceKey> = box_points(3, 7).iter().map(|a| raw_first_meet(&pts, a)).collect();
        for tau in g.face_lattice() {
            let mut a = vec![0i64; 3];
            for &j in &tau.defining_facets {
                for (x, y) in a.iter_mut().zip(&g.facets()[j].normal) {
                    *x += y;
                }
            }
            oracle.insert(raw_first_meet(&pts, &a));
        }
        prop_assert_eq!(ours, oracle);
    }

    #[test]
    fn duality_round_trip(pts in support(3, 6, 4), weights in prop::collection::vec(1i64..20, 8)) {
        let g = gamma_of(&pts);
        for (idx, tau) in g.face_lattice().iter().enumerate() {
            let cone = g.normal_cone(tau).unwrap();
            let mut a = vec![0i64; 3];
            for (k, gen) in cone.generators.iter().enumerate() {
                for (x, y) in a.iter_mut().zip(gen) {
                    *x += weights[k % weights.len()] * y;
                }
            }
            prop_assert_eq!(g.first_meet_locus_index(&a).unwrap(), idx);
        }
    }

    #[test]
    fn compactness_criterion(pts in support(3, 6, 4)) {
        let g = gamma_of(&pts);
        for tau in g.face_lattice() {
            let v = &g.vertices()[*tau.vertex_set.iter().next().unwrap()];
            let unbounded = (0..3).any(|j| {
                let mut w = v.clone();
                w[j] += 1;
                g.point_on_face(&w, tau)
            });
            prop_assert_eq!(tau.compact, !unbounded);
            let all_positive = (0..3).all(|j| tau.defining_facets.iter().any(|&i| g.facets()[i].normal[j] > 0));
            prop_assert_eq!(tau.compact, all_positive);
        }
    }

    #[test]
    fn sum_of_squares_doubles_the_polyhedron(pts in support(3, 6, 3), l in 1usize..=2) {
        let f = map_from_support(&pts, l);
        let g = NewtonPolyhedron::of_map(&f).unwrap();
        let h = NewtonPolyhedron::of_map(&f.sum_of_squares()).unwrap();
        let doubled: BTreeSet<(Vec<i64>, i64)> = our_facets(&g).into_iter().map(|(a, d)| (a, 2 * d)).collect();
        prop_assert_eq!(our_facets(&h), doubled);
    }
}
