//! Ground truth for the pole predictions: closed forms for monomial integrals
//! over the unit box and Monte Carlo estimates of sublevel volumes and
//! `∫ |f|^s`.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{NumericSystem, PolynomialMap};
use crate::poles::render_q;

const BATCH: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("exponents and weights must be positive")]
    NonPositive,
    #[error("the oracle needs a single monomial with l = 1")]
    NotMonomial,
    #[error("{0}")]
    InvalidArgument(String),
}

/// `base^s · ∏_j 1/(m_j s + γ_j)` kept in factored form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFunctionOfS {
    /// `|c|` for the oracle of `c·x^M`; one for plain box integrals.
    pub base: BigRational,
    pub factors: Vec<(u64, u64)>,
}

impl RationalFunctionOfS {
    /// Distinct poles `−γ/m`, largest first, with multiplicities.
    pub fn poles(&self) -> Vec<(BigRational, usize)> {
        let mut vals: Vec<BigRational> = self
            .factors
            .iter()
            .map(|&(m, g)| -BigRational::new((g as i64).into(), (m as i64).into()))
            .collect();
        vals.sort();
        let mut out: Vec<(BigRational, usize)> = Vec::new();
        for v in vals.into_iter().rev() {
            match out.last_mut() {
                Some((last, k)) if *last == v => *k += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    /// Exact value at rational `s`; `None` at a pole or when `base^s` is
    /// irrational.
    pub fn eval_exact(&self, s: &BigRational) -> Option<BigRational> {
        let mut v = BigRational::one();
        for &(m, g) in &self.factors {
            let d = s * BigRational::from_integer((m as i64).into())
                + BigRational::from_integer((g as i64).into());
            if d.is_zero() {
                return None;
            }
            v /= d;
        }
        if self.base.is_one() {
            return Some(v);
        }
        if !s.is_integer() {
            return None;
        }
        let e = s.to_integer().to_i32()?;
        Some(v * num_traits::pow::Pow::pow(&self.base, e))
    }

    pub fn eval_f64(&self, s: f64) -> f64 {
        let base = self.base.to_f64().unwrap_or(f64::NAN);
        self.factors
            .iter()
            .fold(base.powf(s), |acc, &(m, g)| acc / (m as f64 * s + g as f64))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.base.is_one() {
            let _ = write!(out, "{}^s * ", render_q(&self.base));
        }
        out.push_str("1/(");
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(m, g)| match m {
                1 => format!("(s + {g})"),
                _ => format!("({m}*s + {g})"),
            })
            .collect();
        out.push_str(&parts.join("*"));
        out.push(')');
        out
    }
}

/// `∫_{[0,1]^r} ∏ y_j^{m_j s + γ_j − 1} dy = ∏ 1/(m_j s + γ_j)`.
pub fn monomial_box_integral(m: &[u64], gamma: &[u64]) -> Result<RationalFunctionOfS, VerifyError> {
    if m.is_empty() || m.len() != gamma.len() {
        return Err(VerifyError::InvalidArgument(
            "m and γ must be nonempty and of equal length".into(),
        ));
    }
    if m.iter().chain(gamma).any(|&x| x == 0) {
        return Err(VerifyError::NonPositive);
    }
    Ok(RationalFunctionOfS {
        base: BigRational::one(),
        factors: m.iter().copied().zip(gamma.iter().copied()).collect(),
    })
}

/// `∫_{[0,1]ⁿ} |c x^M|^s dx`.
pub fn monomial_zeta_oracle(f: &PolynomialMap) -> Result<RationalFunctionOfS, VerifyError> {
    if f.l() != 1 || f.components()[0].len() != 1 {
        return Err(VerifyError::NotMonomial);
    }
    let (e, c) = f.components()[0].terms().next().expect("one term");
    let m: Vec<u64> = e.iter().filter(|&&k| k > 0).map(|&k| k as u64).collect();
    let mut r = monomial_box_integral(&m, &vec![1; m.len()])?;
    r.base = c.abs();
    Ok(r)
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

fn batches(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(BATCH))
        .map(|b| (b, BATCH.min(samples - b * BATCH)))
        .collect()
}

/// Euclidean norm of `f` at uniform points of `[0, eps]ⁿ`, batch by batch.
fn sample_norms<T: Send>(
    f: &PolynomialMap,
    eps: f64,
    samples: usize,
    seed: u64,
    reduce: impl Fn(&mut T, f64) + Sync,
    init: impl Fn() -> T + Sync,
) -> Vec<T> {
    let system = NumericSystem::new(f.components());
    let n = f.n();
    batches(samples)
        .into_par_iter()
        .map(|(b, size)| {
            let mut rng = batch_rng(seed, b);
            let mut acc = init();
            let mut x = vec![0.0; n];
            for _ in 0..size {
                for xi in x.iter_mut() {
                    *xi = eps * rng.gen::<f64>();
                }
                let norm = system.eval(&x).iter().map(|v| v * v).sum::<f64>().sqrt();
                reduce(&mut acc, norm);
            }
            acc
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeRow {
    pub alpha: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    pub rows_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeTable {
    pub rows: Vec<VolumeRow>,
    pub fit: Option<SlopeFit>,
    pub box_eps: f64,
    pub seed: u64,
    pub note: String,
}

pub fn default_alphas() -> Vec<f64> {
    (2..=8).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect()
}

/// Monte Carlo estimates of `Vol{x ∈ [0,eps]ⁿ : |f(x)| ≤ α}` with a weighted
/// log-log fit of the exponent.
pub fn mc_volume(
    f: &PolynomialMap,
    box_eps: f64,
    alphas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<VolumeTable, VerifyError> {
    if samples < 10_000 {
        return Err(VerifyError::InvalidArgument("at least 10^4 samples are required".into()));
    }
    if box_eps <= 0.0 || alphas.is_empty() || alphas.iter().any(|&a| a <= 0.0) {
        return Err(VerifyError::InvalidArgument("box and alphas must be positive".into()));
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(VerifyError::InvalidArgument("alphas must be strictly decreasing".into()));
    }
    let k = alphas.len();
    let counts = sample_norms(
        f,
        box_eps,
        samples,
        seed,
        |acc: &mut Vec<u64>, norm| {
            for (c, &a) in acc.iter_mut().zip(alphas) {
                if norm <= a {
                    *c += 1;
                }
            }
        },
        || vec![0u64; k],
    );
    let mut total = vec![0u64; k];
    for c in counts {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    let vol = box_eps.powi(f.n() as i32);
    let nf = samples as f64;
    let rows: Vec<VolumeRow> = alphas
        .iter()
        .zip(&total)
        .map(|(&alpha, &c)| {
            let p = c as f64 / nf;
            VolumeRow {
                alpha,
                estimate: vol * p,
                stderr: vol * (p * (1.0 - p) / nf).sqrt(),
                samples,
            }
        })
        .collect();
    let fit = fit_slope(&rows);
    let note = if fit.is_none() {
        "too few rows with relative stderr below 20%; no slope fitted".to_string()
    } else {
        "slope estimates the local log canonical threshold; logarithmic factors are ignored".to_string()
    };
    Ok(VolumeTable {
        rows,
        fit,
        box_eps,
        seed,
        note,
    })
}

/// Weighted least squares of `log est` on `log α`, weights `(est/stderr)²`.
fn fit_slope(rows: &[VolumeRow]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.estimate > 0.0 && r.stderr < 0.2 * r.estimate)
        .map(|r| {
            let w = if r.stderr > 0.0 {
                (r.estimate / r.stderr).powi(2)
            } else {
                1e12
            };
            (r.alpha.ln(), r.estimate.ln(), w)
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let stderr = (1.0 / sxx).sqrt();
    Some(SlopeFit {
        slope,
        stderr,
        lower: slope - 2.0 * stderr,
        upper: slope + 2.0 * stderr,
        rows_used: pts.len(),
    })
}

impl VolumeTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,estimate,stderr,samples\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:e},{:e},{:e},{}", r.alpha, r.estimate, r.stderr, r.samples);
        }
        out
    }

    /// Two columns, `log10 α` and `log10 estimate`.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("# log10(alpha) log10(volume)\n");
        for r in self.rows.iter().filter(|r| r.estimate > 0.0) {
            let _ = writeln!(out, "{} {}", r.alpha.log10(), r.estimate.log10());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralRow {
    pub s: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Heavy-tail warning: a single sample dominates or the relative error is large.
    pub unstable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralTable {
    pub rows: Vec<IntegralRow>,
    /// Estimates increase as `s` decreases.
    pub monotone_growth: bool,
    pub box_eps: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    max: Vec<f64>,
}

/// Monte Carlo estimates of `∫_{[0,eps]ⁿ} |f(x)|^s dx`, all `s` sharing the
/// same sample points.
pub fn mc_integral(
    f: &PolynomialMap,
    s_values: &[f64],
    box_eps: f64,
    samples: usize,
    seed: u64,
) -> Result<IntegralTable, VerifyError> {
    if samples == 0 || box_eps <= 0.0 {
        return Err(VerifyError::InvalidArgument("samples and box must be positive".into()));
    }
    let k = s_values.len();
    let parts = sample_norms(
        f,
        box_eps,
        samples,
        seed,
        |m: &mut Moments, norm| {
            for (i, &s) in s_values.iter().enumerate() {
                let v = if s == 0.0 { 1.0 } else { norm.powf(s) };
                m.sum[i] += v;
                m.sum_sq[i] += v * v;
                m.max[i] = m.max[i].max(v);
            }
        },
        || Moments {
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
            max: vec![0.0; k],
        },
    );
    let mut total = Moments {
        sum: vec![0.0; k],
        sum_sq: vec![0.0; k],
        max: vec![0.0; k],
    };
    for p in parts {
        for i in 0..k {
            total.sum[i] += p.sum[i];
            total.sum_sq[i] += p.sum_sq[i];
            total.max[i] = total.max[i].max(p.max[i]);
        }
    }
    let vol = box_eps.powi(f.n() as i32);
    let nf = samples as f64;
    let rows: Vec<IntegralRow> = (0..k)
        .map(|i| {
            let mean = total.sum[i] / nf;
            let var = (total.sum_sq[i] / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
            let stderr = vol * (var / nf).sqrt();
            let estimate = vol * mean;
            let unstable = !estimate.is_finite()
                || total.max[i] > 0.05 * total.sum[i]
                || stderr > 0.05 * estimate.abs();
            IntegralRow {
                s: s_values[i],
                estimate,
                stderr,
                unstable,
            }
        })
        .collect();
    let mut by_s: Vec<&IntegralRow> = rows.iter().collect();
    by_s.sort_by(|a, b| b.s.total_cmp(&a.s));
    let monotone_growth = by_s.windows(2).all(|w| w[1].estimate > w[0].estimate);
    Ok(IntegralTable {
        rows,
        monotone_growth,
        box_eps,
        samples,
        seed,
    })
}

impl IntegralTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,estimate,stderr,unstable\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e},{:e},{}", r.s, r.estimate, r.stderr, r.unstable);
        }
        out
    }

    pub fn plot_data(&self) -> String {
        let mut out = String::from("# s integral\n");
        for r in &self.rows {
            let _ = writeln!(out, "{} {}", r.s, r.estimate);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_map, VarConvention};

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn map(s: &str) -> PolynomialMap {
        parse_map(s, VarConvention::detect(s)).unwrap()
    }

    #[test]
    fn box_integrals() {
        let j = monomial_box_integral(&[2, 3], &[1, 1]).unwrap();
        assert_eq!(j.poles(), vec![(r(-1, 3), 1), (r(-1, 2), 1)]);
        assert_eq!(j.eval_exact(&r(1, 1)), Some(r(1, 12)));
        let j = monomial_box_integral(&[1, 1], &[1, 1]).unwrap();
        assert_eq!(j.poles(), vec![(r(-1, 1), 2)]);
        assert_eq!(j.eval_exact(&r(-1, 1)), None);
        assert_eq!(monomial_box_integral(&[1], &[1]).unwrap().render(), "1/((s + 1))");
        assert_eq!(monomial_box_integral(&[0], &[1]), Err(VerifyError::NonPositive));
    }

    #[test]
    fn oracle() {
        let o = monomial_zeta_oracle(&map("x1^2*x2^3")).unwrap();
        assert_eq!(o.poles(), vec![(r(-1, 3), 1), (r(-1, 2), 1)]);
        let o = monomial_zeta_oracle(&map("x1*x2")).unwrap();
        assert_eq!(o.poles(), vec![(r(-1, 1), 2)]);
        let o = monomial_zeta_oracle(&map("-3*x1*x3")).unwrap();
        assert_eq!(o.base, r(3, 1));
        assert_eq!(o.eval_exact(&r(1, 1)), Some(r(3, 4)));
        assert_eq!(monomial_zeta_oracle(&map("x1 + x2")), Err(VerifyError::NotMonomial));
    }

    #[test]
    fn volume_of_linear_form() {
        let t = mc_volume(&map("x1"), 1.0, &[0.5, 0.1, 0.01], 20_000, 7).unwrap();
        let fit = t.fit.clone().unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "{fit:?}");
        assert!(t.rows.iter().all(|r| r.estimate <= 1.0));
        assert_eq!(t, mc_volume(&map("x1"), 1.0, &[0.5, 0.1, 0.01], 20_000, 7).unwrap());
    }

    #[test]
    fn volume_rejects_bad_arguments() {
        assert!(mc_volume(&map("x1"), 1.0, &[0.1, 0.5], 20_000, 0).is_err());
        assert!(mc_volume(&map("x1"), 1.0, &[0.1], 100, 0).is_err());
    }

    #[test]
    fn integral_at_zero_is_box_volume() {
        let t = mc_integral(&map("x1 + x2"), &[0.0], 0.5, 10_000, 3).unwrap();
        assert_eq!(t.rows[0].estimate, 0.25);
    }
}
