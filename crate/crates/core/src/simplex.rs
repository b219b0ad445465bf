//! Exact two-phase simplex method over the rationals with Bland's rule.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0`. Returns `None` when the
/// problem is infeasible or unbounded.
pub fn minimize(
    c: &[BigRational],
    a: &[Vec<BigRational>],
    b: &[BigRational],
) -> Option<(BigRational, Vec<BigRational>)> {
    let m = a.len();
    let nv = c.len();
    // tableau over [x | artificials | rhs], rows normalized so rhs ≥ 0
    let width = nv + m + 1;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let flip = b[i].is_negative();
        let mut r = vec![BigRational::zero(); width];
        for j in 0..nv {
            r[j] = if flip { -row[j].clone() } else { row[j].clone() };
        }
        r[nv + i] = BigRational::one();
        r[width - 1] = if flip { -b[i].clone() } else { b[i].clone() };
        t.push(r);
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    let phase1: Vec<BigRational> = (0..nv + m)
        .map(|j| if j >= nv { BigRational::one() } else { BigRational::zero() })
        .collect();
    run(&mut t, &mut basis, &phase1, nv + m)?;
    let infeas: BigRational = basis
        .iter()
        .zip(&t)
        .filter(|(&j, _)| j >= nv)
        .map(|(_, r)| r[width - 1].clone())
        .sum();
    if !infeas.is_zero() {
        return None;
    }
    // drive degenerate artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= nv {
            if let Some(j) = (0..nv).find(|&j| !t[i][j].is_zero()) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let keep: Vec<usize> = (0..m).filter(|&i| basis[i] < nv).collect();
    let mut t: Vec<Vec<BigRational>> = keep.iter().map(|&i| t[i].clone()).collect();
    let mut basis: Vec<usize> = keep.iter().map(|&i| basis[i]).collect();
    for r in &mut t {
        r.drain(nv..nv + m);
    }
    run(&mut t, &mut basis, c, nv)?;

    let mut x = vec![BigRational::zero(); nv];
    for (i, &j) in basis.iter().enumerate() {
        x[j] = t[i][nv].clone();
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Some((value, x))
}

fn pivot(t: &mut [Vec<BigRational>], basis: &mut [usize], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        *v = &*v / &p;
    }
    let pr = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row || r[col].is_zero() {
            continue;
        }
        let f = r[col].clone();
        for (v, pv) in r.iter_mut().zip(&pr) {
            *v -= &f * pv;
        }
    }
    basis[row] = col;
}

/// Runs simplex iterations on the first `ncols` columns; `None` if unbounded.
fn run(
    t: &mut [Vec<BigRational>],
    basis: &mut [usize],
    cost: &[BigRational],
    ncols: usize,
) -> Option<()> {
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    loop {
        // reduced cost c_j - c_B B⁻¹ A_j
        let entering = (0..ncols).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let z: BigRational = basis
                .iter()
                .zip(t.iter())
                .map(|(&bi, r)| &cost[bi] * &r[j])
                .sum();
            (&cost[j] - z).is_negative()
        });
        let Some(col) = entering else {
            return Some(());
        };
        let mut best: Option<(BigRational, usize)> = None;
        for (i, r) in t.iter().enumerate() {
            if r[col].is_positive() {
                let ratio = &r[rhs] / &r[col];
                let better = match &best {
                    None => true,
                    Some((br, bi)) => ratio < *br || (ratio == *br && basis[i] < basis[*bi]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        let (_, row) = best?;
        pivot(t, basis, row, col);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let c = vec![q(-1), q(-1), q(0), q(0)];
        let a = vec![vec![q(1), q(2), q(1), q(0)], vec![q(3), q(1), q(0), q(1)]];
        let b = vec![q(4), q(6)];
        let (v, x) = minimize(&c, &a, &b).unwrap();
        assert_eq!(v, BigRational::new((-14).into(), 5.into()));
        assert_eq!(x[0], BigRational::new(8.into(), 5.into()));
    }

    #[test]
    fn infeasible() {
        let c = vec![q(1)];
        let a = vec![vec![q(1)]];
        assert!(minimize(&c, &a, &[q(-1)]).is_none());
    }
}
