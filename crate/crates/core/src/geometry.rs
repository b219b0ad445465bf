//! Newton polyhedra at the origin.
//!
//! `Γ(G)` is the convex hull of `∪_{m∈G} (m + ℝ₊ⁿ)`. We compute its facets
//! (primitive inward normals `a` with offsets `d(a)`), its vertices and the
//! full lattice of proper faces, all in exact integer arithmetic.
//!
//! Facets are found by brute force: a facet whose normal vanishes on the
//! coordinate set `J` is spanned by the directions `e_j, j ∈ J` together with
//! `n - |J|` affinely independent support points, so every such subset is
//! tried and the resulting hyperplane kept when it supports all points.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::expr::PolynomialMap;
use crate::fan::{Cone, RayTag};
use crate::lattice::{self, combinations, dot};

/// Face enumeration is exponential in `n`.
pub const MAX_DIMENSION: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("the support set is empty")]
    EmptySupport,
    #[error("the origin belongs to the support set")]
    OriginInSupport,
    #[error("support points must be nonnegative")]
    NegativeExponent,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIMENSION}")]
    DimensionTooLarge(usize),
    #[error("the zero vector has no first meet locus")]
    ZeroDirection,
    #[error("the face does not belong to this Newton polyhedron")]
    UnknownFace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Facet {
    /// Primitive inward normal `a(γ)`.
    pub normal: Vec<i64>,
    /// `d(a(γ))`.
    pub offset: i64,
    pub incident_vertices: BTreeSet<usize>,
}

/// A proper face `τ`, stored as the vertices it contains plus the coordinate
/// directions in its recession cone.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Face {
    /// Every facet containing the face.
    pub defining_facets: BTreeSet<usize>,
    pub dimension: usize,
    pub compact: bool,
    pub vertex_set: BTreeSet<usize>,
    pub recession: BTreeSet<usize>,
}

#[derive(Clone, Debug)]
pub struct NewtonPolyhedron {
    n: usize,
    support: Vec<Vec<i64>>,
    vertices: Vec<Vec<i64>>,
    facets: Vec<Facet>,
    faces: Vec<Face>,
    index: BTreeMap<(BTreeSet<usize>, BTreeSet<usize>), usize>,
}

impl NewtonPolyhedron {
    pub fn new(points: &[Vec<i64>]) -> Result<Self, GeometryError> {
        let first = points.first().ok_or(GeometryError::EmptySupport)?;
        let n = first.len();
        if n == 0 {
            return Err(GeometryError::EmptySupport);
        }
        if n > MAX_DIMENSION {
            return Err(GeometryError::DimensionTooLarge(n));
        }
        for p in points {
            if p.len() != n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            if p.iter().any(|&x| x < 0) {
                return Err(GeometryError::NegativeExponent);
            }
            if p.iter().all(|&x| x == 0) {
                return Err(GeometryError::OriginInSupport);
            }
        }
        let mut support = points.to_vec();
        support.sort();
        support.dedup();

        // points that are not (another point) + ℝ₊ⁿ
        let minimal: Vec<Vec<i64>> = support
            .iter()
            .filter(|p| {
                !support
                    .iter()
                    .any(|q| q != *p && q.iter().zip(p.iter()).all(|(a, b)| a <= b))
            })
            .cloned()
            .collect();

        let normals = enumerate_facets(n, &minimal);

        let mut vertices: Vec<Vec<i64>> = minimal
            .iter()
            .filter(|p| {
                let tight: Vec<Vec<i64>> = normals
                    .iter()
                    .filter(|(a, d)| dot(a, p) == *d)
                    .map(|(a, _)| a.clone())
                    .collect();
                lattice::rank(&tight) == n
            })
            .cloned()
            .collect();
        vertices.sort_by(|a, b| b.cmp(a));

        let facets: Vec<Facet> = normals
            .into_iter()
            .map(|(normal, offset)| {
                let incident_vertices = vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| dot(&normal, v) == offset)
                    .map(|(i, _)| i)
                    .collect();
                Facet {
                    normal,
                    offset,
                    incident_vertices,
                }
            })
            .collect();

        let mut gamma = Self {
            n,
            support,
            vertices,
            facets,
            faces: Vec::new(),
            index: BTreeMap::new(),
        };
        gamma.build_face_lattice();
        Ok(gamma)
    }

    /// `Γ(f) = Γ(∪ supp f_i)`.
    pub fn of_map(f: &PolynomialMap) -> Result<Self, GeometryError> {
        let pts: Vec<Vec<i64>> = f
            .support()
            .iter()
            .map(|e| e.iter().map(|&k| k as i64).collect())
            .collect();
        Self::new(&pts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    /// All distinct support points, including non-extremal ones.
    pub fn support_points(&self) -> &[Vec<i64>] {
        &self.support
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// `𝔇(Γ)` in facet order.
    pub fn facet_normals(&self) -> Vec<Vec<i64>> {
        self.facets.iter().map(|f| f.normal.clone()).collect()
    }

    /// All proper faces. The first `facets().len()` entries are the facets,
    /// in facet order.
    pub fn face_lattice(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, i: usize) -> &Face {
        &self.faces[i]
    }

    pub fn face_index(&self, tau: &Face) -> Option<usize> {
        let i = *self
            .index
            .get(&(tau.vertex_set.clone(), tau.recession.clone()))?;
        (self.faces[i] == *tau).then_some(i)
    }

    /// Index of the face with the given vertex set and recession directions.
    pub fn face_by_key(&self, vertex_set: &BTreeSet<usize>, recession: &BTreeSet<usize>) -> Option<usize> {
        self.index
            .get(&(vertex_set.clone(), recession.clone()))
            .copied()
    }

    pub fn contains_face(&self, tau: &Face) -> bool {
        self.face_index(tau).is_some()
    }

    pub fn codimension(&self, tau: &Face) -> usize {
        self.n - tau.dimension
    }

    /// Whether the lattice point `m` satisfies every defining equation of `tau`.
    pub fn point_on_face(&self, m: &[i64], tau: &Face) -> bool {
        tau.defining_facets.iter().all(|&i| {
            let f = &self.facets[i];
            dot(&f.normal, m) == f.offset
        })
    }

    fn check_direction(&self, a: &[i64]) -> Result<(), GeometryError> {
        if a.len() != self.n {
            return Err(GeometryError::DimensionMismatch {
                expected: self.n,
                got: a.len(),
            });
        }
        if a.iter().any(|&x| x < 0) {
            return Err(GeometryError::NegativeExponent);
        }
        Ok(())
    }

    /// `d(a) = min_{x∈Γ} ⟨a, x⟩` for `a ∈ ℕⁿ`; attained at a vertex.
    pub fn support_value(&self, a: &[i64]) -> Result<i64, GeometryError> {
        self.check_direction(a)?;
        Ok(self
            .vertices
            .iter()
            .map(|v| dot(a, v))
            .min()
            .expect("Γ has a vertex"))
    }

    /// Index of `F(a) = {x ∈ Γ : ⟨a, x⟩ = d(a)}`.
    pub fn first_meet_locus_index(&self, a: &[i64]) -> Result<usize, GeometryError> {
        self.check_direction(a)?;
        if a.iter().all(|&x| x == 0) {
            return Err(GeometryError::ZeroDirection);
        }
        let d = self.support_value(a)?;
        let vs: BTreeSet<usize> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| dot(a, v) == d)
            .map(|(i, _)| i)
            .collect();
        let rec: BTreeSet<usize> = (0..self.n).filter(|&j| a[j] == 0).collect();
        Ok(*self
            .index
            .get(&(vs, rec))
            .expect("every first meet locus is in the face lattice"))
    }

    pub fn first_meet_locus(&self, a: &[i64]) -> Result<&Face, GeometryError> {
        Ok(&self.faces[self.first_meet_locus_index(a)?])
    }

    /// `Δ̄_τ`: the cone spanned by the normals of the facets containing `τ`.
    pub fn normal_cone(&self, tau: &Face) -> Result<Cone, GeometryError> {
        let idx = self.face_index(tau).ok_or(GeometryError::UnknownFace)?;
        let gens: Vec<Vec<i64>> = tau
            .defining_facets
            .iter()
            .map(|&i| self.facets[i].normal.clone())
            .collect();
        let tags = vec![RayTag::FacetNormal; gens.len()];
        Ok(Cone::new(gens, tags, Some(idx)))
    }

    fn closure(&self, vs: &BTreeSet<usize>, rec: &BTreeSet<usize>) -> Face {
        let defining: BTreeSet<usize> = self
            .facets
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                vs.iter().all(|v| f.incident_vertices.contains(v))
                    && rec.iter().all(|&j| f.normal[j] == 0)
            })
            .map(|(i, _)| i)
            .collect();
        let base = &self.vertices[*vs.iter().next().expect("nonempty face")];
        let mut dirs: Vec<Vec<i64>> = vs
            .iter()
            .map(|&v| {
                self.vertices[v]
                    .iter()
                    .zip(base)
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        for &j in rec {
            let mut e = vec![0; self.n];
            e[j] = 1;
            dirs.push(e);
        }
        Face {
            defining_facets: defining,
            dimension: lattice::rank(&dirs),
            compact: rec.is_empty(),
            vertex_set: vs.clone(),
            recession: rec.clone(),
        }
    }

    /// Faces are the nonempty intersections of facets; starting from the
    /// facets we intersect with one more facet at a time until closed.
    fn build_face_lattice(&mut self) {
        let mut seen: BTreeMap<(BTreeSet<usize>, BTreeSet<usize>), Face> = BTreeMap::new();
        let mut facet_faces = Vec::new();
        let mut queue = Vec::new();
        for f in &self.facets {
            let rec: BTreeSet<usize> = (0..self.n).filter(|&j| f.normal[j] == 0).collect();
            let face = self.closure(&f.incident_vertices, &rec);
            facet_faces.push(face.clone());
            let key = (face.vertex_set.clone(), face.recession.clone());
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key) {
                e.insert(face.clone());
                queue.push(face);
            }
        }
        while let Some(face) = queue.pop() {
            for (i, g) in self.facets.iter().enumerate() {
                if face.defining_facets.contains(&i) {
                    continue;
                }
                let vs: BTreeSet<usize> = face
                    .vertex_set
                    .intersection(&g.incident_vertices)
                    .copied()
                    .collect();
                if vs.is_empty() {
                    continue;
                }
                let rec: BTreeSet<usize> = face
                    .recession
                    .iter()
                    .copied()
                    .filter(|&j| g.normal[j] == 0)
                    .collect();
                let key = (vs.clone(), rec.clone());
                if seen.contains_key(&key) {
                    continue;
                }
                let next = self.closure(&vs, &rec);
                seen.insert(key, next.clone());
                queue.push(next);
            }
        }
        let facet_keys: BTreeSet<_> = facet_faces
            .iter()
            .map(|f| (f.vertex_set.clone(), f.recession.clone()))
            .collect();
        let mut rest: Vec<Face> = seen
            .into_iter()
            .filter(|(k, _)| !facet_keys.contains(k))
            .map(|(_, f)| f)
            .collect();
        rest.sort_by(|a, b| {
            b.dimension
                .cmp(&a.dimension)
                .then_with(|| a.vertex_set.cmp(&b.vertex_set))
                .then_with(|| a.recession.cmp(&b.recession))
        });
        self.faces = facet_faces.into_iter().chain(rest).collect();
        self.index = self
            .faces
            .iter()
            .enumerate()
            .map(|(i, f)| ((f.vertex_set.clone(), f.recession.clone()), i))
            .collect();
    }

    pub fn to_json(&self) -> GammaReport {
        GammaReport {
            schema: "gamma-v1",
            n: self.n,
            vertices: self.vertices.clone(),
            facets: self.facets.clone(),
            faces: self
                .faces
                .iter()
                .map(|f| FaceReport {
                    defining_facets: f.defining_facets.iter().copied().collect(),
                    dimension: f.dimension,
                    compact: f.compact,
                    vertex_set: f.vertex_set.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

fn enumerate_facets(n: usize, points: &[Vec<i64>]) -> Vec<(Vec<i64>, i64)> {
    let mut found: BTreeMap<Vec<i64>, i64> = BTreeMap::new();
    for zeros in 0..n {
        let k = n - zeros;
        if k > points.len() {
            continue;
        }
        for free in combinations(n, k) {
            for pick in combinations(points.len(), k) {
                let base = &points[pick[0]];
                let rows: Vec<Vec<i64>> = pick[1..]
                    .iter()
                    .map(|&i| free.iter().map(|&c| points[i][c] - base[c]).collect())
                    .collect();
                let Some(kernel) = lattice::kernel_vector(&rows, k) else {
                    continue;
                };
                let sign = if kernel.iter().any(|&x| x > 0) { 1 } else { -1 };
                if kernel.iter().any(|&x| x * sign < 0) {
                    continue;
                }
                let mut a = vec![0i64; n];
                for (&c, &x) in free.iter().zip(&kernel) {
                    a[c] = x * sign;
                }
                if found.contains_key(&a) {
                    continue;
                }
                let d = dot(&a, base);
                if points.iter().all(|p| dot(&a, p) >= d) {
                    found.insert(a, d);
                }
            }
        }
    }
    found.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceReport {
    pub defining_facets: Vec<usize>,
    pub dimension: usize,
    pub compact: bool,
    pub vertex_set: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaReport {
    pub schema: &'static str,
    pub n: usize,
    pub vertices: Vec<Vec<i64>>,
    pub facets: Vec<Facet>,
    pub faces: Vec<FaceReport>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma(pts: &[&[i64]]) -> NewtonPolyhedron {
        NewtonPolyhedron::new(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn facet_set(g: &NewtonPolyhedron) -> BTreeSet<(Vec<i64>, i64)> {
        g.facets()
            .iter()
            .map(|f| (f.normal.clone(), f.offset))
            .collect()
    }

    #[test]
    fn cusp_polyhedron() {
        let g = gamma(&[&[2, 0], &[0, 3]]);
        assert_eq!(g.vertices(), &[vec![2, 0], vec![0, 3]]);
        let expected: BTreeSet<_> = [(vec![3, 2], 6), (vec![1, 0], 0), (vec![0, 1], 0)]
            .into_iter()
            .collect();
        assert_eq!(facet_set(&g), expected);
    }

    #[test]
    fn translated_orthant() {
        let g = gamma(&[&[1, 0, 0]]);
        assert_eq!(g.vertices(), &[vec![1, 0, 0]]);
        let expected: BTreeSet<_> = [(vec![1, 0, 0], 1), (vec![0, 1, 0], 0), (vec![0, 0, 1], 0)]
            .into_iter()
            .collect();
        assert_eq!(facet_set(&g), expected);
    }

    #[test]
    fn cusp_pair_polyhedron() {
        let g = gamma(&[&[2, 0, 0], &[0, 3, 0], &[0, 0, 3]]);
        let s = facet_set(&g);
        assert!(s.contains(&(vec![3, 2, 2], 6)));
        assert!(s.contains(&(vec![1, 0, 0], 0)));
        assert!(s.contains(&(vec![0, 1, 0], 0)));
        assert!(s.contains(&(vec![0, 0, 1], 0)));
        let compact: Vec<_> = g
            .face_lattice()
            .iter()
            .filter(|f| f.compact && f.dimension == 2)
            .collect();
        assert_eq!(compact.len(), 1);
    }

    #[test]
    fn support_values() {
        let g = gamma(&[&[2, 0], &[0, 3]]);
        assert_eq!(g.support_value(&[3, 2]).unwrap(), 6);
        assert_eq!(g.support_value(&[1, 1]).unwrap(), 2);
        assert_eq!(g.support_value(&[0, 0]).unwrap(), 0);
        assert!(matches!(
            g.support_value(&[1, 1, 1]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn first_meet_loci() {
        let g = gamma(&[&[2, 0], &[0, 3]]);
        let edge = g.first_meet_locus(&[3, 2]).unwrap();
        assert!(edge.compact);
        assert_eq!(edge.dimension, 1);
        assert_eq!(edge.vertex_set.len(), 2);

        let ray = g.first_meet_locus(&[1, 0]).unwrap();
        assert!(!ray.compact);
        assert_eq!(ray.vertex_set.iter().map(|&v| g.vertices()[v].clone()).collect::<Vec<_>>(), vec![vec![0, 3]]);

        let v = g.first_meet_locus(&[1, 2]).unwrap();
        assert_eq!(v.dimension, 0);
        assert_eq!(g.vertices()[*v.vertex_set.iter().next().unwrap()], vec![2, 0]);

        assert_eq!(g.first_meet_locus(&[0, 0]), Err(GeometryError::ZeroDirection));
    }

    #[test]
    fn lattice_counts() {
        assert_eq!(gamma(&[&[2, 0], &[0, 3]]).face_lattice().len(), 5);
        assert_eq!(gamma(&[&[1, 0]]).face_lattice().len(), 3);
    }

    #[test]
    fn normal_cones() {
        let g = gamma(&[&[2, 0], &[0, 3]]);
        let edge = g.first_meet_locus(&[3, 2]).unwrap().clone();
        assert_eq!(g.normal_cone(&edge).unwrap().generators, vec![vec![3, 2]]);
        let top = g.first_meet_locus(&[2, 1]).unwrap().clone();
        let mut gens = g.normal_cone(&top).unwrap().generators;
        gens.sort();
        assert_eq!(gens, vec![vec![1, 0], vec![3, 2]]);
    }

    #[test]
    fn rejects_bad_supports() {
        assert_eq!(NewtonPolyhedron::new(&[]).unwrap_err(), GeometryError::EmptySupport);
        assert_eq!(
            NewtonPolyhedron::new(&[vec![0, 0]]).unwrap_err(),
            GeometryError::OriginInSupport
        );
        assert_eq!(
            NewtonPolyhedron::new(&[vec![1; 9]]).unwrap_err(),
            GeometryError::DimensionTooLarge(9)
        );
    }

    #[test]
    fn interior_support_points_kept() {
        let g = gamma(&[&[2, 0], &[0, 2], &[1, 1], &[3, 3]]);
        assert_eq!(g.vertices().len(), 2);
        assert_eq!(g.support_points().len(), 4);
        let edge = g.first_meet_locus(&[1, 1]).unwrap();
        assert!(g.point_on_face(&[1, 1], edge));
        assert!(!g.point_on_face(&[3, 3], edge));
    }
}
