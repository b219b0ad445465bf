//! Fans subordinated to a Newton polyhedron.
//!
//! The normal fan of `Γ` is triangulated without new rays (a pulling
//! triangulation driven by a global order on facet normals) and then made
//! unimodular by stellar subdivisions. Cones are stored as sorted lists of
//! ray indices into the fan's ray table.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Polynomial, PolynomialMap};
use crate::geometry::NewtonPolyhedron;
use crate::lattice::{self, dot, ConeCoordinates};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FanError {
    #[error("cone generators are linearly dependent")]
    NotSimplicial,
    #[error("cone has {got} generators, expected {expected}")]
    NotFullDimensional { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RayTag {
    FacetNormal,
    ExtraRay,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cone {
    pub generators: Vec<Vec<i64>>,
    pub tags: Vec<RayTag>,
    /// Index into `Γ.face_lattice()` of `F(a)` for `a` in the relative interior.
    pub face_ref: Option<usize>,
    pub simplicial: bool,
    pub simple: bool,
}

impl Cone {
    pub fn new(generators: Vec<Vec<i64>>, tags: Vec<RayTag>, face_ref: Option<usize>) -> Self {
        let simplicial = lattice::rank(&generators) == generators.len();
        let simple = simplicial && lattice::maximal_minor_gcd(&generators) == 1;
        Self {
            generators,
            tags,
            face_ref,
            simplicial,
            simple,
        }
    }

    pub fn dimension(&self) -> usize {
        lattice::rank(&self.generators)
    }

    /// Sum of the generators, a point of the relative interior.
    pub fn interior_point(&self) -> Vec<i64> {
        let n = self.generators.first().map_or(0, Vec::len);
        let mut p = vec![0; n];
        for g in &self.generators {
            for (x, y) in p.iter_mut().zip(g) {
                *x += y;
            }
        }
        p
    }
}

/// Lattice index of a simplicial cone: `|det|` when full-dimensional,
/// otherwise the index of the generated lattice in its saturation.
pub fn cone_index(c: &Cone) -> Result<u64, FanError> {
    if c.generators.is_empty() {
        return Ok(1);
    }
    if lattice::rank(&c.generators) != c.generators.len() {
        return Err(FanError::NotSimplicial);
    }
    Ok(lattice::maximal_minor_gcd(&c.generators).unsigned_abs() as u64)
}

#[derive(Clone, Debug)]
pub struct Fan {
    gamma: NewtonPolyhedron,
    rays: Vec<Vec<i64>>,
    tags: Vec<RayTag>,
    max_cones: Vec<Vec<usize>>,
}

impl Fan {
    /// Assembles a fan from raw parts. No fan axioms are checked here; see
    /// [`validate_fan`].
    pub fn from_parts(
        gamma: &NewtonPolyhedron,
        rays: Vec<Vec<i64>>,
        tags: Vec<RayTag>,
        max_cones: Vec<Vec<usize>>,
    ) -> Self {
        Self {
            gamma: gamma.clone(),
            rays,
            tags,
            max_cones,
        }
    }

    pub fn gamma(&self) -> &NewtonPolyhedron {
        &self.gamma
    }

    pub fn n(&self) -> usize {
        self.gamma.n()
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn ray_tags(&self) -> &[RayTag] {
        &self.tags
    }

    /// `Λ_f`: the rays added during unimodular refinement.
    pub fn extra_rays(&self) -> Vec<Vec<i64>> {
        self.rays
            .iter()
            .zip(&self.tags)
            .filter(|(_, t)| **t == RayTag::ExtraRay)
            .map(|(r, _)| r.clone())
            .collect()
    }

    pub fn max_cone_indices(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    fn make_cone(&self, idx: &[usize]) -> Cone {
        let gens: Vec<Vec<i64>> = idx.iter().map(|&i| self.rays[i].clone()).collect();
        let tags = idx.iter().map(|&i| self.tags[i]).collect();
        let mut c = Cone::new(gens, tags, None);
        if !idx.is_empty() {
            c.face_ref = self.gamma.first_meet_locus_index(&c.interior_point()).ok();
        }
        c
    }

    pub fn max_cones(&self) -> Vec<Cone> {
        self.max_cones.iter().map(|c| self.make_cone(c)).collect()
    }

    /// Index sets of all nonzero cones: the max cones as listed, followed by
    /// their distinct proper faces.
    pub fn cone_indices(&self) -> Vec<Vec<usize>> {
        let maxset: BTreeSet<&Vec<usize>> = self.max_cones.iter().collect();
        let mut faces = BTreeSet::new();
        for c in &self.max_cones {
            for k in 1..c.len() {
                for pick in lattice::combinations(c.len(), k) {
                    let sub: Vec<usize> = pick.iter().map(|&i| c[i]).collect();
                    if !maxset.contains(&sub) {
                        faces.insert(sub);
                    }
                }
            }
        }
        self.max_cones.iter().cloned().chain(faces).collect()
    }

    pub fn cones(&self) -> Vec<Cone> {
        self.cone_indices()
            .iter()
            .map(|c| self.make_cone(c))
            .collect()
    }

    pub fn to_json(&self) -> FanReport {
        let cones = self
            .cone_indices()
            .into_iter()
            .map(|idx| {
                let c = self.make_cone(&idx);
                ConeJson {
                    maximal: idx.len() == self.n() && self.max_cones.contains(&idx),
                    index: cone_index(&c).ok(),
                    face: c.face_ref,
                    rays: idx,
                    generators: c.generators,
                    tags: c.tags,
                }
            })
            .collect();
        FanReport {
            schema: "fan-v1",
            n: self.n(),
            rays: self.rays.clone(),
            tags: self.tags.clone(),
            extra_rays: self.extra_rays(),
            cones,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeJson {
    pub rays: Vec<usize>,
    pub generators: Vec<Vec<i64>>,
    pub tags: Vec<RayTag>,
    pub index: Option<u64>,
    pub face: Option<usize>,
    pub maximal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FanReport {
    pub schema: &'static str,
    pub n: usize,
    pub rays: Vec<Vec<i64>>,
    pub tags: Vec<RayTag>,
    pub extra_rays: Vec<Vec<i64>>,
    pub cones: Vec<ConeJson>,
}

/// Triangulates the normal fan of `Γ` using only the facet normals as rays.
/// Ray `i` of the result is facet `i` of `Γ`.
pub fn simplicial_fan(gamma: &NewtonPolyhedron) -> Fan {
    let faces = gamma.face_lattice();
    let n = gamma.n();
    let mut memo: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    let mut max_cones = BTreeSet::new();
    for (i, f) in faces.iter().enumerate() {
        if f.dimension == 0 {
            for s in triangulate(gamma, i, &mut memo) {
                max_cones.insert(s);
            }
        }
    }
    let rays = gamma.facet_normals();
    let tags = vec![RayTag::FacetNormal; rays.len()];
    debug_assert!(max_cones.iter().all(|c| c.len() == n));
    Fan::from_parts(gamma, rays, tags, max_cones.into_iter().collect())
}

/// Pulling triangulation of `Δ̄_τ`: cone from the smallest facet normal over
/// the triangulations of the cone's facets not containing it.
fn triangulate(
    gamma: &NewtonPolyhedron,
    face: usize,
    memo: &mut BTreeMap<usize, Vec<Vec<usize>>>,
) -> Vec<Vec<usize>> {
    if let Some(t) = memo.get(&face) {
        return t.clone();
    }
    let faces = gamma.face_lattice();
    let tau = &faces[face];
    let defining: Vec<usize> = tau.defining_facets.iter().copied().collect();
    let codim = gamma.codimension(tau);
    let out = if defining.len() == codim {
        vec![defining]
    } else {
        let apex = defining[0];
        let mut out = Vec::new();
        for (j, sup) in faces.iter().enumerate() {
            if gamma.codimension(sup) + 1 == codim
                && sup.defining_facets.is_subset(&tau.defining_facets)
                && !sup.defining_facets.contains(&apex)
            {
                for mut s in triangulate(gamma, j, memo) {
                    s.push(apex);
                    s.sort_unstable();
                    out.push(s);
                }
            }
        }
        out
    };
    memo.insert(face, out.clone());
    out
}

/// Refines a simplicial fan into a simple one by repeated stellar
/// subdivision. New rays are tagged [`RayTag::ExtraRay`].
pub fn simple_fan(fan: &Fan) -> Fan {
    let mut rays = fan.rays.clone();
    let mut tags = fan.tags.clone();
    let mut cones: Vec<Vec<usize>> = fan.max_cones.clone();
    loop {
        let bad = cones.iter().find_map(|c| {
            let gens: Vec<Vec<i64>> = c.iter().map(|&i| rays[i].clone()).collect();
            let idx = lattice::maximal_minor_gcd(&gens).unsigned_abs();
            (idx > 1).then_some(gens)
        });
        let Some(gens) = bad else { break };
        let (p, lambda) = shortest_parallelepiped_point(&gens);
        let sigma: BTreeSet<usize> = gens
            .iter()
            .zip(&lambda)
            .filter(|(_, l)| **l > 0)
            .map(|(g, _)| rays.iter().position(|r| r == g).expect("generator is a ray"))
            .collect();
        let new = rays.len();
        rays.push(p);
        tags.push(RayTag::ExtraRay);
        let mut next = Vec::with_capacity(cones.len() + sigma.len());
        for c in cones {
            if sigma.iter().all(|s| c.contains(s)) {
                for &g in &sigma {
                    let mut child: Vec<usize> = c.iter().copied().filter(|&x| x != g).collect();
                    child.push(new);
                    child.sort_unstable();
                    next.push(child);
                }
            } else {
                next.push(c);
            }
        }
        next.sort();
        cones = next;
    }
    Fan::from_parts(&fan.gamma, rays, tags, cones)
}

/// Nonzero lattice point `p = Σ λ_i g_i`, `0 ≤ λ_i < 1`, of minimal coordinate
/// sum (ties broken lexicographically), together with the numerators of `λ`.
fn shortest_parallelepiped_point(gens: &[Vec<i64>]) -> (Vec<i64>, Vec<i128>) {
    let cc = ConeCoordinates::new(gens).expect("simplicial cone");
    let den = cc.denominator();
    let n = gens[0].len();
    // images of the unit vectors in (ℚ/ℤ)^r, scaled by den
    let units: Vec<Vec<i128>> = (0..n)
        .map(|j| {
            let mut e = vec![0i64; n];
            e[j] = 1;
            let mut num = cc.numerators(&e).unwrap_or_else(|| vec![0; gens.len()]);
            num.iter_mut().for_each(|x| *x = x.rem_euclid(den));
            num
        })
        .collect();
    let zero = vec![0i128; gens.len()];
    let mut seen = BTreeSet::from([zero.clone()]);
    let mut queue = VecDeque::from([zero]);
    let mut best: Option<(i64, Vec<i64>, Vec<i128>)> = None;
    while let Some(cur) = queue.pop_front() {
        for u in &units {
            let nxt: Vec<i128> = cur
                .iter()
                .zip(u)
                .map(|(a, b)| (a + b).rem_euclid(den))
                .collect();
            if seen.insert(nxt.clone()) {
                queue.push_back(nxt);
            }
        }
        if cur.iter().all(|&x| x == 0) {
            continue;
        }
        let p: Vec<i64> = (0..n)
            .map(|k| {
                let s: i128 = gens.iter().zip(&cur).map(|(g, l)| g[k] as i128 * l).sum();
                (s / den) as i64
            })
            .collect();
        let sum: i64 = p.iter().sum();
        let better = match &best {
            None => true,
            Some((bs, bp, _)) => (sum, &p) < (*bs, bp),
        };
        if better {
            best = Some((sum, p, cur));
        }
    }
    let (_, p, lambda) = best.expect("index > 1 gives a nonzero point");
    (p, lambda)
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub point: Vec<i64>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub coverage_failures: Vec<Witness>,
    pub disjointness_failures: Vec<Witness>,
    pub subordination_failures: Vec<Witness>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.coverage_failures.is_empty()
            && self.disjointness_failures.is_empty()
            && self.subordination_failures.is_empty()
    }
}

struct Membership {
    idx: Vec<usize>,
    coords: Option<ConeCoordinates>,
    face: Option<usize>,
}

/// Checks the fan axioms on `samples` random points of `ℝ₊ⁿ` plus a few
/// points inside every cone. Membership tests are exact.
pub fn validate_fan(
    fan: &Fan,
    gamma: &NewtonPolyhedron,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    let n = gamma.n();
    let all: Vec<Membership> = fan
        .cone_indices()
        .into_iter()
        .map(|idx| {
            let gens: Vec<Vec<i64>> = idx.iter().map(|&i| fan.rays[i].clone()).collect();
            let c = fan.make_cone(&idx);
            Membership {
                coords: ConeCoordinates::new(&gens),
                face: c.face_ref,
                idx,
            }
        })
        .collect();
    let nmax = fan.max_cones.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<i64>> = Vec::with_capacity(samples);
    while points.len() < samples {
        let p: Vec<i64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    0
                } else {
                    rng.gen_range(1..=10_000)
                }
            })
            .collect();
        if p.iter().any(|&x| x != 0) {
            points.push(p);
        }
    }
    // points in the relative interior of each cone
    let mut targeted: Vec<(usize, Vec<i64>)> = Vec::new();
    for (ci, m) in all.iter().enumerate() {
        for _ in 0..8 {
            let mut p = vec![0i64; n];
            for &r in &m.idx {
                let w = rng.gen_range(1..=97);
                for (x, y) in p.iter_mut().zip(&fan.rays[r]) {
                    *x += w * y;
                }
            }
            targeted.push((ci, p));
        }
    }

    let classify = |p: &[i64]| -> (Vec<usize>, Vec<usize>, usize) {
        let mut relint = Vec::new();
        let mut closed_max = 0;
        let mut interior_max = Vec::new();
        for (ci, m) in all.iter().enumerate() {
            let Some(cc) = &m.coords else { continue };
            let Some(num) = cc.numerators(p) else { continue };
            if num.iter().all(|&c| c >= 0) && ci < nmax {
                closed_max += 1;
            }
            if num.iter().all(|&c| c > 0) {
                relint.push(ci);
                if ci < nmax && m.idx.len() == n {
                    interior_max.push(ci);
                }
            }
        }
        (relint, interior_max, closed_max)
    };

    let check = |p: &Vec<i64>, expected: Option<usize>| -> Vec<(u8, Witness)> {
        let mut out = Vec::new();
        let (relint, interior_max, closed_max) = classify(p);
        let w = |detail: String| Witness {
            point: p.clone(),
            detail,
        };
        if closed_max == 0 || relint.is_empty() {
            out.push((0, w("point lies in no cone".into())));
        }
        if relint.len() > 1 || interior_max.len() > 1 {
            out.push((1, w(format!("relative interiors of cones {relint:?} overlap"))));
        }
        if let Some(e) = expected {
            if !relint.contains(&e) {
                out.push((1, w(format!("cone {e} does not contain its own sample"))));
            }
        }
        let fa = gamma.first_meet_locus_index(p).ok();
        for &ci in &relint {
            if all[ci].face != fa {
                out.push((
                    2,
                    w(format!(
                        "cone {:?} maps to face {:?} but F(a) is {:?}",
                        all[ci].idx, all[ci].face, fa
                    )),
                ));
            }
        }
        out
    };

    let mut findings: Vec<(u8, Witness)> = points
        .par_iter()
        .flat_map_iter(|p| check(p, None))
        .collect();
    findings.extend(
        targeted
            .par_iter()
            .flat_map_iter(|(ci, p)| check(p, Some(*ci)))
            .collect::<Vec<_>>(),
    );

    let mut report = ValidationReport {
        samples,
        ..Default::default()
    };
    for (kind, w) in findings {
        match kind {
            0 => report.coverage_failures.push(w),
            1 => report.disjointness_failures.push(w),
            _ => report.subordination_failures.push(w),
        }
    }
    report
}

#[derive(Clone, Debug)]
pub struct PullbackData {
    /// `(d(a_j), σ(a_j))` for each generator `a_j`.
    pub axes: Vec<(i64, i64)>,
    /// `f_i ∘ w`.
    pub pulled: Vec<Polynomial>,
    /// `f_i*` with `f_i ∘ w = ∏ y_j^{d(a_j)} · f_i*`.
    pub quotients: Vec<Polynomial>,
    /// Whether `f_i*(0) ≠ 0`.
    pub nonvanishing_at_origin: Vec<bool>,
    pub face_ref: Option<usize>,
}

/// Monomial change of variables `x_i = ∏_j y_j^{a_{ij}}` on a full-dimensional
/// simplicial cone, with the exact factorization of every component.
pub fn torus_pullback(
    f: &PolynomialMap,
    cone: &Cone,
    gamma: &NewtonPolyhedron,
) -> Result<PullbackData, FanError> {
    let n = gamma.n();
    if f.n() != n {
        return Err(FanError::DimensionMismatch {
            expected: n,
            got: f.n(),
        });
    }
    if cone.generators.len() != n {
        return Err(FanError::NotFullDimensional {
            expected: n,
            got: cone.generators.len(),
        });
    }
    if lattice::rank(&cone.generators) != n {
        return Err(FanError::NotSimplicial);
    }
    let d: Vec<i64> = cone
        .generators
        .iter()
        .map(|a| gamma.support_value(a))
        .collect::<Result<_, _>>()
        .map_err(|e| FanError::Invariant(e.to_string()))?;
    let axes = cone
        .generators
        .iter()
        .zip(&d)
        .map(|(a, &d)| (d, a.iter().sum()))
        .collect();
    let tau = gamma
        .first_meet_locus_index(&cone.interior_point())
        .map_err(|e| FanError::Invariant(e.to_string()))?;
    let factor = Polynomial::monomial(
        d.iter().map(|&x| x as u32).collect(),
        BigRational::from_integer(1.into()),
    );

    let mut pulled = Vec::new();
    let mut quotients = Vec::new();
    let mut nonvanishing = Vec::new();
    for fi in f.components() {
        let mut full = Polynomial::zero(n);
        let mut quot = Polynomial::zero(n);
        let mut meets = false;
        for (m, c) in fi.terms() {
            let m: Vec<i64> = m.iter().map(|&k| k as i64).collect();
            let e: Vec<i64> = cone.generators.iter().map(|a| dot(a, &m)).collect();
            if e.iter().zip(&d).any(|(x, y)| x < y) {
                return Err(FanError::Invariant(
                    "support point below the support function".into(),
                ));
            }
            full.add_term(e.iter().map(|&x| x as u32).collect(), c.clone());
            quot.add_term(e.iter().zip(&d).map(|(x, y)| (x - y) as u32).collect(), c.clone());
            meets |= gamma.point_on_face(&m, gamma.face(tau));
        }
        if factor.mul(&quot) != full {
            return Err(FanError::Invariant("pullback factorization failed".into()));
        }
        let at_zero = !quot.constant_term().is_zero();
        if at_zero != meets {
            return Err(FanError::Invariant(
                "f*(0) disagrees with the face restriction".into(),
            ));
        }
        pulled.push(full);
        quotients.push(quot);
        nonvanishing.push(at_zero);
    }
    Ok(PullbackData {
        axes,
        pulled,
        quotients,
        nonvanishing_at_origin: nonvanishing,
        face_ref: Some(tau),
    })
}
