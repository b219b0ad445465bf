//! Candidate poles of the local zeta function read off a Newton polyhedron.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::fan::{Fan, RayTag};
use crate::geometry::{GeometryError, NewtonPolyhedron};
use crate::simplex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoleError {
    #[error("ray {0:?} has d = 0 and contributes no candidate poles")]
    ZeroSupport(Vec<i64>),
    #[error("every facet has d = 0")]
    NoCompactFacet,
    #[error("full mode needs a fan")]
    MissingFan,
    #[error("{0} is not a candidate pole")]
    NotCandidate(String),
    #[error("the fan is not simple")]
    NotSimple,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Sharp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma0Method {
    FacetMin,
    Diagonal,
}

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn sigma(xi: &[i64]) -> i64 {
    xi.iter().sum()
}

/// `−(σ(ξ)+k)/d(ξ)` for `k = 0..=k_max`.
pub fn pole_progression(
    xi: &[i64],
    gamma: &NewtonPolyhedron,
    k_max: usize,
) -> Result<Vec<BigRational>, PoleError> {
    let d = gamma.support_value(xi)?;
    if d == 0 {
        return Err(PoleError::ZeroSupport(xi.to_vec()));
    }
    let s = sigma(xi);
    Ok((0..=k_max as i64)
        .map(|k| BigRational::new(BigInt::from(-(s + k)), BigInt::from(d)))
        .collect())
}

/// Whether `s0 ∈ P(ξ)` for the untruncated progression.
fn in_progression(s0: &BigRational, sigma: i64, d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let k = -(s0 * q(d)) - q(sigma);
    k.is_integer() && !k.is_negative()
}

fn in_l_series(s0: &BigRational, l: usize) -> bool {
    let k = -s0 - q(l as i64);
    k.is_integer() && !k.is_negative()
}

pub fn gamma0(gamma: &NewtonPolyhedron, method: Gamma0Method) -> Result<BigRational, PoleError> {
    match method {
        Gamma0Method::FacetMin => gamma
            .facets()
            .iter()
            .filter(|f| f.offset != 0)
            .map(|f| BigRational::new(sigma(&f.normal).into(), f.offset.into()))
            .min()
            .ok_or(PoleError::NoCompactFacet),
        Gamma0Method::Diagonal => diagonal_gamma0(gamma),
    }
}

/// `1/t₀` with `t₀ = min { t : (t,…,t) ∈ conv(V) + ℝ₊ⁿ }`, solved as a linear
/// program over the vertices.
fn diagonal_gamma0(gamma: &NewtonPolyhedron) -> Result<BigRational, PoleError> {
    let v = gamma.vertices();
    let n = gamma.n();
    let m = v.len();
    // variables: λ_1..λ_m, t, s_1..s_n
    let nv = m + 1 + n;
    let mut c = vec![BigRational::zero(); nv];
    c[m] = BigRational::one();
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for j in 0..n {
        let mut row = vec![BigRational::zero(); nv];
        for (i, vi) in v.iter().enumerate() {
            row[i] = q(vi[j]);
        }
        row[m] = q(-1);
        row[m + 1 + j] = BigRational::one();
        a.push(row);
        b.push(BigRational::zero());
    }
    let mut row = vec![BigRational::zero(); nv];
    row[..m].iter_mut().for_each(|x| *x = BigRational::one());
    a.push(row);
    b.push(BigRational::one());
    let (t0, _) = simplex::minimize(&c, &a, &b).ok_or(PoleError::NoCompactFacet)?;
    if !t0.is_positive() {
        return Err(PoleError::NoCompactFacet);
    }
    Ok(t0.recip())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PoleSource {
    pub ray: Vec<i64>,
    pub k: usize,
    pub tag: RayTag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidatePole {
    pub value: BigRational,
    pub order_bound: usize,
    pub sources: Vec<PoleSource>,
    pub in_l_series: bool,
    /// Face of `Γ` realizing the order bound, if any.
    pub witness_face: Option<usize>,
}

/// Largest admissible `ρ` together with the face attaining it.
pub fn pole_order_bound_with_witness(
    gamma: &NewtonPolyhedron,
    l: usize,
    s0: &BigRational,
) -> Result<(usize, Option<usize>), PoleError> {
    let n = gamma.n();
    let facets = gamma.facets();
    let lseries = in_l_series(s0, l);
    let in_some_p = facets
        .iter()
        .any(|f| in_progression(s0, sigma(&f.normal), f.offset));
    if !lseries && !in_some_p {
        return Err(PoleError::NotCandidate(s0.to_string()));
    }
    let bonus = usize::from(lseries);
    // ties prefer the deeper face
    let mut best = (1, 0, None);
    for (i, tau) in gamma.face_lattice().iter().enumerate() {
        let ok = tau.defining_facets.iter().all(|&j| {
            let f = &facets[j];
            in_progression(s0, sigma(&f.normal), f.offset)
        });
        if !ok {
            continue;
        }
        let codim = gamma.codimension(tau);
        let rho = (codim + bonus).min(n);
        if (rho, codim) > (best.0, best.1) {
            best = (rho, codim, Some(i));
        }
    }
    Ok((best.0, best.2))
}

/// Upper bound on the order of `s0` as a pole: the largest `ρ ≤ n` for which
/// a face of codimension `ρ` (or `ρ − 1` when `s0 ∈ −(l+ℕ)`) has every
/// containing facet's progression passing through `s0`.
pub fn pole_order_bound(
    gamma: &NewtonPolyhedron,
    l: usize,
    s0: &BigRational,
) -> Result<usize, PoleError> {
    Ok(pole_order_bound_with_witness(gamma, l, s0)?.0)
}

/// Candidate poles, largest first, truncated at `k_max` in every progression.
pub fn candidate_poles(
    gamma: &NewtonPolyhedron,
    l: usize,
    fan: Option<&Fan>,
    mode: Mode,
    k_max: usize,
) -> Result<Vec<CandidatePole>, PoleError> {
    let n = gamma.n();
    let mut rays: Vec<(Vec<i64>, RayTag)> = gamma
        .facet_normals()
        .into_iter()
        .map(|r| (r, RayTag::FacetNormal))
        .collect();
    if mode == Mode::Full {
        let fan = fan.ok_or(PoleError::MissingFan)?;
        rays.extend(fan.extra_rays().into_iter().map(|r| (r, RayTag::ExtraRay)));
    }
    let with_l = mode == Mode::Sharp || l < n;

    let mut table: BTreeMap<BigRational, (Vec<PoleSource>, bool)> = BTreeMap::new();
    for (ray, tag) in rays {
        let d = gamma.support_value(&ray)?;
        if d == 0 {
            continue;
        }
        for (k, v) in pole_progression(&ray, gamma, k_max)?.into_iter().enumerate() {
            table.entry(v).or_default().0.push(PoleSource {
                ray: ray.clone(),
                k,
                tag,
            });
        }
    }
    if with_l {
        for k in 0..=k_max {
            table.entry(q(-((l + k) as i64))).or_default().1 = true;
        }
    }
    table
        .into_iter()
        .rev()
        .map(|(value, (sources, in_l))| {
            let (order_bound, witness_face) = match pole_order_bound_with_witness(gamma, l, &value) {
                Err(PoleError::NotCandidate(_)) if mode == Mode::Full => {
                    (fan_order_bound(gamma, l, fan.ok_or(PoleError::MissingFan)?, &value)?, None)
                }
                r => r?,
            };
            Ok(CandidatePole {
                value,
                order_bound,
                sources,
                in_l_series: in_l,
                witness_face,
            })
        })
        .collect()
}

/// Order bound for a value reached only through rays of the fan: the most
/// rays of one maximal cone whose progressions contain `s0`, plus one for the
/// `l`-series when `l < n`, capped at `n`.
fn fan_order_bound(
    gamma: &NewtonPolyhedron,
    l: usize,
    fan: &Fan,
    s0: &BigRational,
) -> Result<usize, PoleError> {
    let n = gamma.n();
    let mut hits = Vec::with_capacity(fan.rays().len());
    for ray in fan.rays() {
        hits.push(in_progression(s0, sigma(ray), gamma.support_value(ray)?));
    }
    let bonus = usize::from(l < n && in_l_series(s0, l));
    let most = fan
        .max_cone_indices()
        .iter()
        .map(|c| c.iter().filter(|&&i| hits[i]).count())
        .max()
        .unwrap_or(0);
    Ok((most + bonus).clamp(1, n))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataOrigin {
    Ray(Vec<i64>),
    Exceptional,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NumericalEntry {
    #[serde(rename = "N")]
    pub n: i64,
    pub v: i64,
    pub origin: DataOrigin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NumericalData {
    pub entries: Vec<NumericalEntry>,
    pub z_nonempty: bool,
}

impl NumericalData {
    /// `{−(v+k)/N : k = 0..=k_max}` over all entries, sorted descending.
    pub fn candidate_values(&self, k_max: usize) -> Vec<BigRational> {
        let mut out: Vec<BigRational> = self
            .entries
            .iter()
            .flat_map(|e| {
                (0..=k_max as i64).map(move |k| BigRational::new((-(e.v + k)).into(), e.n.into()))
            })
            .collect();
        out.sort();
        out.dedup();
        out.reverse();
        out
    }
}

/// Numerical data `(N, v)` of the toric log-principalization attached to a
/// simple fan: `(d(ξ), σ(ξ))` for each ray with `d(ξ) ≠ 0`, and `(1, l)` for
/// the blow-up along the strict transform when it is nonempty and `l < n`.
pub fn principal_numerical_data(
    fan: &Fan,
    l: usize,
    z_nonempty: bool,
) -> Result<NumericalData, PoleError> {
    if fan.max_cones().iter().any(|c| !c.simple) {
        return Err(PoleError::NotSimple);
    }
    let gamma = fan.gamma();
    let mut entries = Vec::new();
    for ray in fan.rays() {
        let d = gamma.support_value(ray)?;
        if d != 0 {
            entries.push(NumericalEntry {
                n: d,
                v: sigma(ray),
                origin: DataOrigin::Ray(ray.clone()),
            });
        }
    }
    if z_nonempty && l < gamma.n() {
        entries.push(NumericalEntry {
            n: 1,
            v: l as i64,
            origin: DataOrigin::Exceptional,
        });
    }
    Ok(NumericalData {
        entries,
        z_nonempty,
    })
}

/// `min v/N` over the numerical data. Every ray of any subordinated fan has
/// `σ/d ≥ γ₀`, so only `γ₀` and the exceptional entry matter.
pub fn lct_candidate(
    gamma: &NewtonPolyhedron,
    l: usize,
    z_nonempty: bool,
) -> Result<(BigRational, DataOrigin), PoleError> {
    let (g0, ray) = gamma
        .facets()
        .iter()
        .filter(|f| f.offset != 0)
        .map(|f| {
            (
                BigRational::new(sigma(&f.normal).into(), f.offset.into()),
                f.normal.clone(),
            )
        })
        .min()
        .ok_or(PoleError::NoCompactFacet)?;
    if z_nonempty && l < gamma.n() && q(l as i64) < g0 {
        return Ok((q(l as i64), DataOrigin::Exceptional));
    }
    Ok((g0, DataOrigin::Ray(ray)))
}

/// `−min(γ₀, l)` (the `l` term only when `l < n`); guaranteed to be a pole
/// when `γ₀ < l`.
pub fn largest_pole(gamma: &NewtonPolyhedron, l: usize) -> Result<(BigRational, bool), PoleError> {
    let g0 = gamma0(gamma, Gamma0Method::FacetMin)?;
    let ql = q(l as i64);
    let guaranteed = g0 < ql;
    let head = if l < gamma.n() && ql < g0 { ql } else { g0 };
    Ok((-head, guaranteed))
}

pub fn render_q(v: &BigRational) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Progression {
    pub start: String,
    pub step: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateJson {
    pub value: String,
    pub order_bound: usize,
    pub sources: Vec<PoleSource>,
    pub in_l_series: bool,
    pub witness_face: Option<usize>,
    pub progression: Progression,
}

#[derive(Clone, Debug, Serialize)]
pub struct LctJson {
    pub value: String,
    pub attained_by: DataOrigin,
}

#[derive(Clone, Debug, Serialize)]
pub struct LargestPoleJson {
    pub value: String,
    pub guaranteed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZFlag {
    pub value: bool,
    pub provenance: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolesReport {
    pub schema: &'static str,
    pub gamma0: String,
    pub lct: LctJson,
    pub largest_pole: LargestPoleJson,
    pub candidates: Vec<CandidateJson>,
    pub mode: Mode,
    pub k_max: usize,
    pub field_scope: &'static str,
    pub z_nonempty: ZFlag,
    pub extra_rays: Vec<Vec<i64>>,
}

#[allow(clippy::too_many_arguments)]
pub fn poles_report(
    gamma: &NewtonPolyhedron,
    l: usize,
    fan: Option<&Fan>,
    mode: Mode,
    k_max: usize,
    z_nonempty: bool,
    z_provenance: &str,
) -> Result<PolesReport, PoleError> {
    let g0 = gamma0(gamma, Gamma0Method::FacetMin)?;
    let (lct, attained_by) = lct_candidate(gamma, l, z_nonempty)?;
    let (lp, guaranteed) = largest_pole(gamma, l)?;
    let candidates = candidate_poles(gamma, l, fan, mode, k_max)?
        .into_iter()
        .map(|c| {
            let progression = match c.sources.first() {
                Some(s) => {
                    let d = gamma.support_value(&s.ray).unwrap_or(1);
                    Progression {
                        start: render_q(&BigRational::new((-sigma(&s.ray)).into(), d.into())),
                        step: render_q(&BigRational::new((-1).into(), d.into())),
                    }
                }
                None => Progression {
                    start: render_q(&q(-(l as i64))),
                    step: "-1".into(),
                },
            };
            CandidateJson {
                value: render_q(&c.value),
                order_bound: c.order_bound,
                sources: c.sources,
                in_l_series: c.in_l_series,
                witness_face: c.witness_face,
                progression,
            }
        })
        .collect();
    Ok(PolesReport {
        schema: "poles-v1",
        gamma0: render_q(&g0),
        lct: LctJson {
            value: render_q(&lct),
            attained_by,
        },
        largest_pole: LargestPoleJson {
            value: render_q(&lp),
            guaranteed,
        },
        candidates,
        mode,
        k_max,
        field_scope: match mode {
            Mode::Full => "real and complex fields",
            Mode::Sharp => "proved for the real field",
        },
        z_nonempty: ZFlag {
            value: z_nonempty,
            provenance: z_provenance.to_string(),
        },
        extra_rays: fan.map(Fan::extra_rays).unwrap_or_default(),
    })
}
