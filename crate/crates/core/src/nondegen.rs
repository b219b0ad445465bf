//! Randomized falsification of non-degeneracy and of compatibility with the
//! sectors of a fan.
//!
//! Both properties quantify over real zeros of face restrictions, so the
//! searches here can only ever exhibit counterexamples. Zeros are located by
//! multi-start Levenberg–Marquardt on `Σ f_{i,τ}²`; rank is read off the SVD.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{face_restriction, NumericSystem, Polynomial, PolynomialMap};
use crate::fan::Fan;
use crate::geometry::NewtonPolyhedron;
use crate::lattice::combinations;

const MAX_ITERATIONS: usize = 200;
const TORUS_BOX: (f64, f64) = (1e-3, 1e3);
const SECTOR_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchOptions {
    pub trials: usize,
    /// Absolute bound on `Σ f_{i,τ}(z)²`.
    pub root_tol: f64,
    /// Relative singular-value cutoff.
    pub rank_tol: f64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            trials: 64,
            root_tol: 1e-9,
            rank_tol: 1e-7,
            seed: 0xA11CE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    NoCounterexampleFound,
    Falsified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorSpec {
    pub cone: Vec<Vec<i64>>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub k: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub face: usize,
    pub sector: Option<SectorSpec>,
    pub point: Vec<f64>,
    pub residual: f64,
    pub jacobian_rank: usize,
    pub required_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<Witness>,
    /// Number of local searches started.
    pub budget_used: usize,
    pub exact: bool,
}

impl Verdict {
    fn clean(budget_used: usize, exact: bool) -> Self {
        Self {
            status: Status::NoCounterexampleFound,
            witness: None,
            budget_used,
            exact,
        }
    }

    pub fn is_falsified(&self) -> bool {
        self.status == Status::Falsified
    }
}

fn start_rng(seed: u64, task: u64, start: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ start);
    rng
}

/// Numeric rank of `jac`, counting singular values above
/// `rank_tol · max σ(magnitude)`. Measuring against the term magnitudes keeps
/// a Jacobian that vanishes by cancellation from counting as full rank.
pub fn numeric_rank(jac: &[Vec<f64>], magnitude: &[Vec<f64>], rank_tol: f64) -> usize {
    let rows = jac.len();
    let cols = jac.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0;
    }
    let to_matrix = |m: &[Vec<f64>]| DMatrix::from_fn(rows, cols, |i, j| m[i][j]);
    let scale = to_matrix(magnitude)
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    to_matrix(jac)
        .singular_values()
        .iter()
        .filter(|&&s| s > rank_tol * scale)
        .count()
}

/// Levenberg–Marquardt on `‖r(x)‖²`. `project` is applied after every
/// accepted step. Returns the final point and `‖r‖²`.
fn levenberg_marquardt(
    mut x: Vec<f64>,
    system: impl Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
    project: impl Fn(&mut Vec<f64>),
) -> (Vec<f64>, f64) {
    let norm2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let (mut r, mut jac) = system(&x);
    let mut cost = norm2(&r);
    let mut mu = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        if cost < 1e-30 || !cost.is_finite() {
            break;
        }
        let m = r.len();
        let n = x.len();
        let j = DMatrix::from_fn(m, n, |a, b| jac[a][b]);
        let rv = DMatrix::from_fn(m, 1, |a, _| r[a]);
        // δ = −Jᵀ(JJᵀ + μI)⁻¹ r, the minimum-norm damped step
        let lhs = &j * j.transpose() + DMatrix::identity(m, m) * mu;
        let Some(y) = lhs.lu().solve(&rv) else { break };
        let step = j.transpose() * y;
        let mut cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - d).collect();
        project(&mut cand);
        let (rc, jc) = system(&cand);
        let cc = norm2(&rc);
        if cc.is_finite() && cc < cost {
            let moved: f64 = x.iter().zip(&cand).map(|(a, b)| (a - b).abs()).sum();
            x = cand;
            r = rc;
            jac = jc;
            cost = cc;
            mu = (mu / 3.0).max(1e-15);
            if moved < 1e-300 {
                break;
            }
        } else {
            mu *= 4.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    (x, cost)
}

/// Weight vector under which every `f_{i,τ}` is quasi-homogeneous.
fn face_weight(gamma: &NewtonPolyhedron, face: usize) -> Vec<f64> {
    let mut w = vec![0.0; gamma.n()];
    for &i in &gamma.face(face).defining_facets {
        for (x, &a) in w.iter_mut().zip(&gamma.facets()[i].normal) {
            *x += a as f64;
        }
    }
    w
}

/// Moves `z` along the torus orbit `t^w · z` so that `Σ w_j log|z_j| = 0`.
fn normalize_orbit(z: &mut [f64], w: &[f64]) {
    let ww: f64 = w.iter().map(|x| x * x).sum();
    if ww == 0.0 {
        return;
    }
    let c: f64 = w
        .iter()
        .zip(z.iter())
        .map(|(wi, zi)| wi * zi.abs().ln())
        .sum::<f64>()
        / ww;
    if !c.is_finite() {
        return;
    }
    for (zi, wi) in z.iter_mut().zip(w) {
        *zi *= (-c * wi).exp();
    }
}

fn in_torus_box(z: &[f64]) -> bool {
    z.iter()
        .all(|x| x.is_finite() && x.abs() >= TORUS_BOX.0 && x.abs() <= TORUS_BOX.1)
}

struct TorusZero {
    point: Vec<f64>,
    residual: f64,
    rank: usize,
}

/// Multi-start search for real torus zeros of `system`. Results are indexed
/// by start so that the caller can pick deterministically.
fn torus_zeros(
    system: &NumericSystem,
    weight: &[f64],
    opts: &SearchOptions,
    task: u64,
) -> Vec<Option<TorusZero>> {
    let n = system.nvars();
    (0..opts.trials)
        .into_par_iter()
        .map(|s| {
            let mut rng = start_rng(opts.seed, task, s as u64);
            let mut z: Vec<f64> = (0..n)
                .map(|_| {
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    sign * rng.gen_range(-1.0f64..1.0).exp()
                })
                .collect();
            normalize_orbit(&mut z, weight);
            let (z, residual) = levenberg_marquardt(
                z,
                |x| system.eval_jacobian(x),
                |x| normalize_orbit(x, weight),
            );
            if residual > opts.root_tol || !in_torus_box(&z) {
                return None;
            }
            let (_, jac) = system.eval_jacobian(&z);
            let rank = numeric_rank(&jac, &system.jacobian_magnitude(&z), opts.rank_tol);
            Some(TorusZero {
                point: z,
                residual,
                rank,
            })
        })
        .collect()
}

fn compact_faces(gamma: &NewtonPolyhedron) -> Vec<usize> {
    gamma
        .face_lattice()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.compact)
        .map(|(i, _)| i)
        .collect()
}

fn restriction(f: &PolynomialMap, gamma: &NewtonPolyhedron, face: usize) -> Vec<Polynomial> {
    face_restriction(f, gamma.face(face), gamma).expect("face of Γ(f)")
}

/// Looks for a compact face `τ` and a real torus zero of `f_τ` at which the
/// Jacobian of `f_τ` has rank below `min(l, n)`.
pub fn falsify_nondegeneracy(f: &PolynomialMap, gamma: &NewtonPolyhedron, opts: &SearchOptions) -> Verdict {
    let required = f.l().min(f.n());
    let mut used = 0;
    for face in compact_faces(gamma) {
        let system = NumericSystem::new(&restriction(f, gamma, face));
        let weight = face_weight(gamma, face);
        let found = torus_zeros(&system, &weight, opts, face as u64);
        used += opts.trials;
        if let Some(z) = found.into_iter().flatten().find(|z| z.rank < required) {
            return Verdict {
                status: Status::Falsified,
                witness: Some(Witness {
                    face,
                    sector: None,
                    point: z.point,
                    residual: z.residual,
                    jacobian_rank: z.rank,
                    required_rank: required,
                }),
                budget_used: used,
                exact: false,
            };
        }
    }
    Verdict::clean(used, false)
}

/// Whether `f` appears to vanish on the real torus near the origin, judged by
/// torus zeros of the restrictions to compact faces of positive dimension.
pub fn estimate_z_nonempty(f: &PolynomialMap, gamma: &NewtonPolyhedron, opts: &SearchOptions) -> bool {
    compact_faces(gamma)
        .into_iter()
        .filter(|&face| gamma.face(face).dimension > 0)
        .any(|face| {
            let system = NumericSystem::new(&restriction(f, gamma, face));
            let weight = face_weight(gamma, face);
            torus_zeros(&system, &weight, opts, face as u64)
                .into_iter()
                .any(|z| z.is_some())
        })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeVerdict {
    pub cone: Vec<Vec<i64>>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatReport {
    pub schema: &'static str,
    pub overall: Verdict,
    pub cones: Vec<ConeVerdict>,
}

/// `f_τ` composed with the sector parametrization
/// `z_j = ∏_{i∈K} t_i^{a_ij}`, `t_i = 1/(1+e^{−v_i})`.
struct SectorSystem<'a> {
    system: &'a NumericSystem,
    gens: Vec<&'a Vec<i64>>,
}

impl SectorSystem<'_> {
    fn point(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = v.iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect();
        let n = self.system.nvars();
        let z = (0..n)
            .map(|j| {
                self.gens
                    .iter()
                    .zip(&t)
                    .map(|(a, ti)| ti.powi(a[j] as i32))
                    .product()
            })
            .collect();
        (t, z)
    }

    fn eval(&self, v: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (t, z) = self.point(v);
        let (r, jx) = self.system.eval_jacobian(&z);
        // ∂z_j/∂v_i = a_ij · z_j · (1 − t_i)
        let jv = jx
            .iter()
            .map(|row| {
                self.gens
                    .iter()
                    .zip(&t)
                    .map(|(a, ti)| {
                        (0..z.len())
                            .map(|j| row[j] * a[j] as f64 * z[j] * (1.0 - ti))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        (r, jv)
    }
}

fn exact_at_ones(comps: &[Polynomial]) -> bool {
    let n = comps.first().map_or(0, Polynomial::nvars);
    let ones = vec![BigRational::one(); n];
    comps.iter().all(|p| p.eval_exact(&ones).is_zero())
}

fn check_cone(
    f: &PolynomialMap,
    gamma: &NewtonPolyhedron,
    gens: &[Vec<i64>],
    opts: &SearchOptions,
    task: u64,
) -> Verdict {
    let n = gamma.n();
    let l = f.l();
    let faces: Vec<_> = gens
        .iter()
        .map(|a| gamma.first_meet_locus(a).expect("nonzero ray"))
        .collect();
    let mut used = 0;
    let mut subtask = 0u64;
    for ksize in 0..=n.saturating_sub(2) {
        for k in combinations(n, ksize) {
            let rest: Vec<usize> = (0..n).filter(|x| !k.contains(x)).collect();
            // I is every nonempty proper subset of the complement of K
            for isize in 1..rest.len() {
                for pick in combinations(rest.len(), isize) {
                    subtask += 1;
                    let i: Vec<usize> = pick.iter().map(|&p| rest[p]).collect();
                    let j: Vec<usize> = rest.iter().copied().filter(|x| !i.contains(x)).collect();
                    let mut vs: BTreeSet<usize> = faces[i[0]].vertex_set.clone();
                    let mut rec: BTreeSet<usize> = faces[i[0]].recession.clone();
                    for &ii in &i[1..] {
                        vs = vs.intersection(&faces[ii].vertex_set).copied().collect();
                        rec = rec.intersection(&faces[ii].recession).copied().collect();
                    }
                    if vs.is_empty() || !rec.is_empty() {
                        continue;
                    }
                    let face = gamma.face_by_key(&vs, &rec).expect("intersection of faces");
                    let comps = restriction(f, gamma, face);
                    let sector = SectorSpec {
                        cone: gens.to_vec(),
                        i: i.clone(),
                        j,
                        k: k.clone(),
                    };
                    if k.is_empty() {
                        if exact_at_ones(&comps) {
                            return Verdict {
                                status: Status::Falsified,
                                witness: Some(Witness {
                                    face,
                                    sector: Some(sector),
                                    point: vec![1.0; n],
                                    residual: 0.0,
                                    jacobian_rank: 0,
                                    required_rank: l,
                                }),
                                budget_used: used,
                                exact: true,
                            };
                        }
                        continue;
                    }
                    let system = NumericSystem::new(&comps);
                    let ss = SectorSystem {
                        system: &system,
                        gens: k.iter().map(|&x| &gens[x]).collect(),
                    };
                    used += opts.trials;
                    let hit = (0..opts.trials)
                        .into_par_iter()
                        .map(|s| {
                            let mut rng = start_rng(opts.seed, task * 4096 + subtask, s as u64);
                            let v0: Vec<f64> = (0..k.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                            let (v, residual) = levenberg_marquardt(v0, |v| ss.eval(v), |_| {});
                            let (t, z) = ss.point(&v);
                            if residual > opts.root_tol
                                || t.iter().any(|&x| !(SECTOR_MARGIN..=1.0 - SECTOR_MARGIN).contains(&x))
                            {
                                return None;
                            }
                            let (_, jac) = system.eval_jacobian(&z);
                            let rank = numeric_rank(&jac, &system.jacobian_magnitude(&z), opts.rank_tol);
                            (k.len() < l || rank < l).then_some((z, residual, rank))
                        })
                        .collect::<Vec<_>>()
                        .into_iter()
                        .flatten()
                        .next();
                    if let Some((point, residual, rank)) = hit {
                        return Verdict {
                            status: Status::Falsified,
                            witness: Some(Witness {
                                face,
                                sector: Some(sector),
                                point,
                                residual,
                                jacobian_rank: rank,
                                required_rank: l,
                            }),
                            budget_used: used,
                            exact: false,
                        };
                    }
                }
            }
        }
    }
    Verdict::clean(used, false)
}

/// Exact criterion for `n = l = 2`: some `f_{i,γ}(1,1) ≠ 0` on every compact
/// facet `γ`.
pub fn exact_compatibility_2d(f: &PolynomialMap, gamma: &NewtonPolyhedron) -> Option<Verdict> {
    if f.n() != 2 || f.l() != 2 {
        return None;
    }
    for (face, tau) in gamma.face_lattice().iter().enumerate() {
        if tau.compact && tau.dimension == 1 {
            let comps = restriction(f, gamma, face);
            if exact_at_ones(&comps) {
                return Some(Verdict {
                    status: Status::Falsified,
                    witness: Some(Witness {
                        face,
                        sector: None,
                        point: vec![1.0, 1.0],
                        residual: 0.0,
                        jacobian_rank: 0,
                        required_rank: 2,
                    }),
                    budget_used: 0,
                    exact: true,
                });
            }
        }
    }
    Some(Verdict::clean(0, true))
}

/// Checks compatibility of `f` with every max cone of `fan`. With `exact2d`
/// and `n = l = 2` the exact criterion decides instead.
pub fn check_compatibility(f: &PolynomialMap, fan: &Fan, opts: &SearchOptions, exact2d: bool) -> CompatReport {
    let gamma = fan.gamma();
    if exact2d {
        if let Some(v) = exact_compatibility_2d(f, gamma) {
            return CompatReport {
                schema: "verdict-v1",
                overall: v,
                cones: Vec::new(),
            };
        }
    }
    let cones: Vec<ConeVerdict> = fan
        .max_cones()
        .into_iter()
        .enumerate()
        .map(|(ci, c)| ConeVerdict {
            verdict: check_cone(f, gamma, &c.generators, opts, ci as u64),
            cone: c.generators,
        })
        .collect();
    let budget: usize = cones.iter().map(|c| c.verdict.budget_used).sum();
    let overall = cones
        .iter()
        .find(|c| c.verdict.is_falsified())
        .map(|c| Verdict {
            budget_used: budget,
            ..c.verdict.clone()
        })
        .unwrap_or_else(|| Verdict::clean(budget, cones.iter().all(|c| c.verdict.exact)));
    CompatReport {
        schema: "verdict-v1",
        overall,
        cones,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomothetyResult {
    pub b: Vec<i64>,
    pub attempts: usize,
    pub report: CompatReport,
}

/// Tries `b = (1,…,1)` and then random `b ∈ {1..10}ⁿ` until `f ∘ T_b` is not
/// falsified. `Err` carries the number of attempts spent.
pub fn find_compatible_homothety(
    f: &PolynomialMap,
    fan: &Fan,
    attempts: usize,
    opts: &SearchOptions,
    exact2d: bool,
) -> Result<HomothetyResult, usize> {
    let n = f.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for attempt in 0..attempts {
        let b: Vec<i64> = if attempt == 0 {
            vec![1; n]
        } else {
            (0..n).map(|_| rng.gen_range(1..=10)).collect()
        };
        let bq: Vec<BigRational> = b.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        let g = f.apply_homothety(&bq).expect("positive scales");
        let report = check_compatibility(&g, fan, opts, exact2d);
        if !report.overall.is_falsified() {
            return Ok(HomothetyResult {
                b,
                attempts: attempt + 1,
                report,
            });
        }
    }
    Err(attempts)
}

pub fn verdict_json(v: &Verdict, kind: &str) -> serde_json::Value {
    serde_json::json!({
        "schema": "verdict-v1",
        "check": kind,
        "status": v.status,
        "witness": v.witness,
        "budget_used": v.budget_used,
        "exact": v.exact,
    })
}
