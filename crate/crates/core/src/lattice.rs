//! Exact integer linear algebra on small dense matrices.
//!
//! Everything here works over `i128` with fraction-free (Bareiss) elimination.
//! Inputs are exponent vectors and primitive normals of desk-scale Newton
//! polyhedra, so intermediate minors stay far from the `i128` range.

use num_integer::Integer;

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Divides out the gcd of the entries. The zero vector is returned unchanged.
pub fn primitive(v: &[i64]) -> Vec<i64> {
    let g = gcd_slice(v);
    if g <= 1 {
        return v.to_vec();
    }
    v.iter().map(|x| x / g).collect()
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant of a square matrix by Bareiss elimination.
pub fn det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return 0;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn widen(rows: &[Vec<i64>]) -> Vec<Vec<i128>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect()
}

/// Rank over the rationals.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut a = widen(rows);
    let ncols = a[0].len();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        for i in 0..a.len() {
            if i != r && a[i][c] != 0 {
                let (x, y) = (a[r][c], a[i][c]);
                let pivot = a[r].clone();
                for (v, p) in a[i].iter_mut().zip(&pivot) {
                    *v = *v * x - p * y;
                }
                let g = a[i].iter().fold(0i128, |g, &v| g.gcd(&v));
                if g > 1 {
                    a[i].iter_mut().for_each(|v| *v /= g);
                }
            }
        }
        r += 1;
        if r == a.len() {
            break;
        }
    }
    r
}

/// Primitive generator of the kernel of a `(k-1) x k` integer matrix of full
/// row rank, computed as the vector of signed maximal minors. Returns `None`
/// when the rank is deficient.
pub fn kernel_vector(rows: &[Vec<i64>], ncols: usize) -> Option<Vec<i64>> {
    debug_assert_eq!(rows.len() + 1, ncols);
    let wide = widen(rows);
    let mut out = Vec::with_capacity(ncols);
    for skip in 0..ncols {
        let minor: Vec<Vec<i128>> = wide
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &x)| x)
                    .collect()
            })
            .collect();
        let d = det(&minor);
        out.push(if skip % 2 == 0 { d } else { -d });
    }
    let g = out.iter().fold(0i128, |g, &x| g.gcd(&x));
    if g == 0 {
        return None;
    }
    Some(out.iter().map(|&x| (x / g) as i64).collect())
}

/// Gcd of all maximal minors of an `r x n` matrix (`r <= n`); this is the
/// index of the lattice spanned by the rows inside its saturation.
pub fn maximal_minor_gcd(rows: &[Vec<i64>]) -> i128 {
    let r = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let wide = widen(rows);
    let mut g = 0i128;
    for cols in combinations(n, r) {
        let minor: Vec<Vec<i128>> = wide
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        g = g.gcd(&det(&minor));
    }
    g
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Coordinates of lattice points with respect to a set of linearly
/// independent generators, `a = sum_i (num_i / den) g_i`.
///
/// A nonsingular maximal minor is fixed once; membership in the span is
/// confirmed on every coordinate afterwards.
#[derive(Clone, Debug)]
pub struct ConeCoordinates {
    gens: Vec<Vec<i64>>,
    rows: Vec<usize>,
    adj: Vec<Vec<i128>>,
    den: i128,
}

impl ConeCoordinates {
    pub fn new(gens: &[Vec<i64>]) -> Option<Self> {
        let r = gens.len();
        let n = gens.first()?.len();
        for rows in combinations(n, r) {
            // matrix with generators as columns, restricted to `rows`
            let m: Vec<Vec<i128>> = rows
                .iter()
                .map(|&i| gens.iter().map(|g| g[i] as i128).collect())
                .collect();
            let d = det(&m);
            if d == 0 {
                continue;
            }
            let adj = adjugate(&m);
            let (adj, den) = if d < 0 {
                (adj.iter().map(|r| r.iter().map(|x| -x).collect()).collect(), -d)
            } else {
                (adj, d)
            };
            return Some(Self {
                gens: gens.to_vec(),
                rows,
                adj,
                den,
            });
        }
        None
    }

    pub fn denominator(&self) -> i128 {
        self.den
    }

    /// Numerators of the coefficients, or `None` if `a` is outside the span.
    pub fn numerators(&self, a: &[i64]) -> Option<Vec<i128>> {
        let sub: Vec<i128> = self.rows.iter().map(|&i| a[i] as i128).collect();
        let num: Vec<i128> = self
            .adj
            .iter()
            .map(|row| row.iter().zip(&sub).map(|(x, y)| x * y).sum())
            .collect();
        for (i, &ai) in a.iter().enumerate() {
            let lhs: i128 = self
                .gens
                .iter()
                .zip(&num)
                .map(|(g, c)| g[i] as i128 * c)
                .sum();
            if lhs != ai as i128 * self.den {
                return None;
            }
        }
        Some(num)
    }

    pub fn in_closed_cone(&self, a: &[i64]) -> bool {
        self.numerators(a)
            .is_some_and(|num| num.iter().all(|&c| c >= 0))
    }

    pub fn in_relative_interior(&self, a: &[i64]) -> bool {
        self.numerators(a).is_some_and(|num| num.iter().all(|&c| c > 0))
    }
}

#[allow(clippy::needless_range_loop)]
fn adjugate(m: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0i128; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i128>> = (0..n)
                .filter(|&r| r != i)
                .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c]).collect())
                .collect();
            let c = det(&minor);
            // adj = transpose of the cofactor matrix
            adj[j][i] = if (i + j) % 2 == 0 { c } else { -c };
        }
    }
    adj
}
