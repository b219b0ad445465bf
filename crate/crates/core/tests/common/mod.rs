#![allow(dead_code)]

use archi_poles::expr::{Polynomial, PolynomialMap};
use archi_poles::geometry::NewtonPolyhedron;
use num_rational::BigRational;
use num_integer::Integer;
use proptest::prelude::*;
use rand::Rng;

/// Up to `max_pts` nonzero points of `{0..=max_coord}ⁿ`.
pub fn support(n: usize, max_pts: usize, max_coord: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(0..=max_coord, n), 1..=max_pts)
        .prop_filter("origin excluded", |pts| pts.iter().all(|p| p.iter().any(|&x| x != 0)))
}

pub fn random_support(rng: &mut impl Rng, n: usize, max_pts: usize, max_coord: i64) -> Vec<Vec<i64>> {
    let k = rng.gen_range(1..=max_pts);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let p: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=max_coord)).collect();
        if p.iter().any(|&x| x != 0) {
            out.push(p);
        }
    }
    out
}

pub fn gamma_of(pts: &[Vec<i64>]) -> NewtonPolyhedron {
    NewtonPolyhedron::new(pts).expect("valid support")
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every nonzero `a ∈ {0..=bound}ⁿ`.
pub fn box_points(n: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (0..=bound).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out.retain(|p| p.iter().any(|&x| x != 0));
    out
}

pub fn is_primitive(a: &[i64]) -> bool {
    a.iter().fold(0i64, |g, &x| g.gcd(&x)) == 1
}

/// Rank over ℚ by plain fraction-free elimination on `i128`.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let (a, b) = (m[r][c], m[i][c]);
                let pivot = m[r].clone();
                for (x, p) in m[i].iter_mut().zip(&pivot) {
                    *x = *x * a - p * b;
                }
                let g = m[i].iter().fold(0i128, |g, &x| g.gcd(&x));
                if g > 1 {
                    m[i].iter_mut().for_each(|x| *x /= g);
                }
            }
        }
        r += 1;
    }
    r
}

/// Dimension of `{x ∈ Γ : ⟨a,x⟩ = d(a)}` computed from the raw support.
pub fn face_dimension(pts: &[Vec<i64>], a: &[i64]) -> usize {
    let d = pts.iter().map(|p| dot(a, p)).min().unwrap();
    let tight: Vec<&Vec<i64>> = pts.iter().filter(|p| dot(a, p) == d).collect();
    let mut dirs: Vec<Vec<i64>> = tight
        .iter()
        .map(|p| p.iter().zip(tight[0].iter()).map(|(x, y)| x - y).collect())
        .collect();
    for j in 0..a.len() {
        if a[j] == 0 {
            let mut e = vec![0; a.len()];
            e[j] = 1;
            dirs.push(e);
        }
    }
    rank(&dirs)
}

/// Absolute determinant by cofactor expansion.
pub fn det_abs(m: &[Vec<i64>]) -> i128 {
    fn det(m: &[Vec<i128>]) -> i128 {
        if m.len() == 1 {
            return m[0][0];
        }
        (0..m.len())
            .map(|j| {
                let minor: Vec<Vec<i128>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * det(&minor)
            })
            .sum()
    }
    let w: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    det(&w).abs()
}

/// A map with small positive coefficients whose combined support is `pts`.
pub fn map_from_support(pts: &[Vec<i64>], l: usize) -> PolynomialMap {
    let n = pts[0].len();
    let comps = (0..l)
        .map(|i| {
            let mut p = Polynomial::zero(n);
            for (k, e) in pts.iter().enumerate() {
                if k % l == i || k < l {
                    let c = BigRational::from_integer(((k as i64 % 5) + 1 + i as i64).into());
                    p.add_term(e.iter().map(|&x| x as u32).collect(), c);
                }
            }
            p
        })
        .collect();
    PolynomialMap::new(comps).unwrap()
}
