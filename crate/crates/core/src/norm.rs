//! Oriented triangulated surfaces, doubling, and ℓ¹ linear programs that
//! bound the simplicial norm of the fundamental class from above.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{minimize, minimize_from, verify_certificate};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedSurface {
    pub vertex_count: usize,
    /// Oriented triangles; `[a, b, c]` has boundary `ab + bc + ca`.
    pub triangles: Vec<[usize; 3]>,
    /// Optional vertex coordinates carried from the input file.
    pub coords: Option<Vec<Vec<f64>>>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedComplex(msg.into())
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TriangulatedSurface {
    /// Validates orientation consistency and the manifold link condition.
    pub fn new(vertex_count: usize, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let s = TriangulatedSurface { vertex_count, triangles, coords: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.vertex_count {
            return Err(malformed(format!("{} coordinates for {} vertices", coords.len(), self.vertex_count)));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(malformed("no triangles"));
        }
        let mut directed = BTreeSet::new();
        let mut sets = BTreeSet::new();
        let mut used = vec![false; self.vertex_count];
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= self.vertex_count) {
                return Err(malformed(format!("triangle {i} uses a missing vertex")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(malformed(format!("triangle {i} repeats a vertex")));
            }
            let mut key = *t;
            key.sort_unstable();
            if !sets.insert(key) {
                return Err(malformed(format!("triangle {i} appears twice")));
            }
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if !directed.insert((a, b)) {
                    return Err(malformed(format!("edge {a}-{b} is used twice in the same direction")));
                }
            }
            for &v in t {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(malformed(format!("vertex {v} is in no triangle")));
        }
        // Link of each vertex: the opposite edges must form one path or cycle.
        let mut links: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.vertex_count];
        for t in &self.triangles {
            for k in 0..3 {
                links[t[k]].push((t[(k + 1) % 3], t[(k + 2) % 3]));
            }
        }
        for (v, link) in links.iter().enumerate() {
            let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
            for &(a, b) in link {
                *degree.entry(a).or_default() += 1;
                *degree.entry(b).or_default() += 1;
            }
            if degree.values().any(|&d| d > 2) {
                return Err(malformed(format!("link of vertex {v} branches")));
            }
            let ends = degree.values().filter(|&&d| d == 1).count();
            if ends != 0 && ends != 2 {
                return Err(malformed(format!("link of vertex {v} is not a path or circle")));
            }
            let mut uf = UnionFind::new(self.vertex_count);
            for &(a, b) in link {
                uf.union(a, b);
            }
            let roots: BTreeSet<usize> = degree.keys().map(|&a| uf.find(a)).collect();
            if roots.len() != 1 {
                return Err(malformed(format!("link of vertex {v} is disconnected")));
            }
        }
        Ok(())
    }

    /// Undirected edges in sorted order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [edge_key(t[0], t[1]), edge_key(t[1], t[2]), edge_key(t[2], t[0])])
            .collect();
        set.into_iter().collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    /// Directed boundary edges, oriented as induced by the triangles.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let directed: BTreeSet<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .collect();
        directed.iter().copied().filter(|&(a, b)| !directed.contains(&(b, a))).collect()
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges().is_empty()
    }

    /// Boundary circles as vertex cycles.
    pub fn boundary_circles(&self) -> Vec<Vec<usize>> {
        let mut next: BTreeMap<usize, usize> = self.boundary_edges().into_iter().collect();
        let mut out = Vec::new();
        while let Some((&start, _)) = next.iter().next() {
            let mut circle = vec![start];
            let mut v = next.remove(&start).expect("present");
            while v != start {
                circle.push(v);
                v = next.remove(&v).expect("boundary edges form circles");
            }
            out.push(circle);
        }
        out
    }

    pub fn components(&self) -> usize {
        let mut uf = UnionFind::new(self.vertex_count);
        for t in &self.triangles {
            uf.union(t[0], t[1]);
            uf.union(t[1], t[2]);
        }
        (0..self.vertex_count).map(|v| uf.find(v)).collect::<BTreeSet<_>>().len()
    }

    /// Genus of a connected oriented surface: `(2 − χ − b) / 2`.
    pub fn genus(&self) -> Result<i64> {
        if self.components() != 1 {
            return Err(malformed("genus needs a connected surface"));
        }
        let twice = 2 - self.euler_characteristic() - self.boundary_circles().len() as i64;
        if twice < 0 || twice % 2 != 0 {
            return Err(malformed("Euler characteristic does not fit an oriented surface"));
        }
        Ok(twice / 2)
    }

    /// `∂₂` as sparse columns: per triangle, `(edge index, ±1)`.
    pub fn boundary_columns(&self) -> (Vec<(usize, usize)>, Vec<[(usize, i64); 3]>) {
        let edges = self.edges();
        let index: BTreeMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let cols = self
            .triangles
            .iter()
            .map(|t| {
                let side = |a: usize, b: usize| (index[&edge_key(a, b)], if a < b { 1 } else { -1 });
                [side(t[0], t[1]), side(t[1], t[2]), side(t[2], t[0])]
            })
            .collect();
        (edges, cols)
    }

    /// The fundamental cycle (all triangles with coefficient 1); `None` unless closed.
    pub fn fundamental_cycle(&self) -> Option<Vec<i64>> {
        self.is_closed().then(|| vec![1; self.triangles.len()])
    }

    /// Barycentric subdivision. New vertices are the old vertices, then
    /// edge barycenters, then triangle barycenters; `parents` lists the
    /// old vertices each new vertex is the barycenter of.
    pub fn barycentric_subdivision(&self) -> Subdivision {
        let edges = self.edges();
        let v = self.vertex_count;
        let e_index: BTreeMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, e)| (*e, v + i)).collect();
        let mut parents: Vec<Vec<usize>> = (0..v).map(|i| vec![i]).collect();
        parents.extend(edges.iter().map(|&(a, b)| vec![a, b]));
        let f0 = v + edges.len();
        let mut triangles = Vec::with_capacity(6 * self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let c = f0 + i;
            parents.push(t.to_vec());
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let m = e_index[&edge_key(a, b)];
                triangles.push([a, m, c]);
                triangles.push([m, b, c]);
            }
        }
        let coords = self.coords.as_ref().map(|cs| {
            parents
                .iter()
                .map(|p| {
                    let dim = cs[0].len();
                    (0..dim).map(|d| p.iter().map(|&i| cs[i][d]).sum::<f64>() / p.len() as f64).collect()
                })
                .collect()
        });
        Subdivision {
            surface: TriangulatedSurface { vertex_count: parents.len(), triangles, coords },
            parents,
        }
    }

    /// Glues a mirror copy along the boundary. Interior edges joining two
    /// boundary vertices would be doubled into a non-manifold edge, so they
    /// are rejected; subdivide first.
    pub fn double(&self) -> Result<TriangulatedSurface> {
        let boundary: BTreeSet<usize> = self.boundary_edges().iter().flat_map(|&(a, b)| [a, b]).collect();
        if boundary.is_empty() {
            return Err(malformed("doubling needs a nonempty boundary"));
        }
        let boundary_edges: BTreeSet<(usize, usize)> =
            self.boundary_edges().iter().map(|&(a, b)| edge_key(a, b)).collect();
        for (a, b) in self.edges() {
            if boundary.contains(&a) && boundary.contains(&b) && !boundary_edges.contains(&(a, b)) {
                return Err(malformed(format!(
                    "interior edge {a}-{b} joins two boundary vertices; the double would not be a manifold"
                )));
            }
        }
        let mut mirror = vec![0; self.vertex_count];
        let mut next = self.vertex_count;
        for (v, m) in mirror.iter_mut().enumerate() {
            if boundary.contains(&v) {
                *m = v;
            } else {
                *m = next;
                next += 1;
            }
        }
        let mut triangles = self.triangles.clone();
        triangles.extend(self.triangles.iter().map(|t| [mirror[t[0]], mirror[t[2]], mirror[t[1]]]));
        TriangulatedSurface::new(next, triangles)
    }
}

#[derive(Debug, Clone)]
pub struct Subdivision {
    pub surface: TriangulatedSurface,
    pub parents: Vec<Vec<usize>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = a;
        while self.0[x] != r {
            let up = self.0[x];
            self.0[x] = r;
            x = up;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Square grid of `w × h` unit squares, each split along its `(0,0)–(1,1)`
/// diagonal, with the listed squares removed. Unused vertices are dropped.
pub fn grid_surface(w: usize, h: usize, holes: &[(usize, usize)]) -> Result<TriangulatedSurface> {
    let id = |x: usize, y: usize| y * (w + 1) + x;
    let mut raw = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if holes.contains(&(x, y)) {
                continue;
            }
            raw.push([id(x, y), id(x + 1, y), id(x + 1, y + 1)]);
            raw.push([id(x, y), id(x + 1, y + 1), id(x, y + 1)]);
        }
    }
    let used: BTreeSet<usize> = raw.iter().flatten().copied().collect();
    let renum: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let coords = used.iter().map(|&v| vec![(v % (w + 1)) as f64, (v / (w + 1)) as f64]).collect();
    let triangles = raw.iter().map(|t| [renum[&t[0]], renum[&t[1]], renum[&t[2]]]).collect();
    TriangulatedSurface::new(used.len(), triangles)?.with_coords(coords)
}

/// Boundary of the tetrahedron, vertices on the unit sphere, outward oriented.
pub fn tetrahedron_sphere() -> TriangulatedSurface {
    let s = 1.0 / 3f64.sqrt();
    let pts = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let mut triangles = Vec::new();
    for skip in 0..4 {
        let mut t: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
        if det3(&pts[t[0]], &pts[t[1]], &pts[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
        triangles.push([t[0], t[1], t[2]]);
    }
    TriangulatedSurface::new(4, triangles)
        .and_then(|t| t.with_coords(pts.iter().map(|p| p.to_vec()).collect()))
        .expect("tetrahedron is a valid sphere")
}

/// Seven-vertex torus: the unit triangular lattice modulo the index-7
/// sublattice of `a e₁ + b e₂` with `a + 3b ≡ 0 (mod 7)`. Returns the surface
/// and its flat model.
pub fn seven_vertex_torus() -> (TriangulatedSurface, FlatTorus) {
    let e1 = [1.0, 0.0];
    let e2 = [0.5, 3f64.sqrt() / 2.0];
    let phi = |a: i64, b: i64| (a + 3 * b).rem_euclid(7) as usize;
    let mut triangles = Vec::new();
    for a in 0..7 {
        triangles.push([phi(a, 0), phi(a + 1, 0), phi(a, 1)]);
        triangles.push([phi(a + 1, 0), phi(a + 1, 1), phi(a, 1)]);
    }
    let surface = TriangulatedSurface::new(7, triangles).expect("seven-vertex torus is valid");
    let points = (0..7).map(|a| [a as f64 * e1[0], 0.0]).collect();
    let l1 = [7.0 * e1[0], 0.0];
    let l2 = [-3.0 * e1[0] + e2[0], e2[1]];
    (surface, FlatTorus::new(points, [l1, l2], 1.0))
}

fn det3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Signed solid angle of the geodesic triangle on unit vectors.
fn solid_angle(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    2.0 * det3(a, b, c).atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a))
}

/// Flat torus `ℝ²/L` with vertex representatives; straight triangles are
/// triples of lifted vertices with pairwise distances at most `max_edge`.
#[derive(Debug, Clone)]
pub struct FlatTorus {
    pub points: Vec<[f64; 2]>,
    pub lattice: [[f64; 2]; 2],
    pub max_edge: f64,
}

/// A lifted vertex: `points[v] + a·L₁ + b·L₂`.
type Lift = (usize, i64, i64);

impl FlatTorus {
    pub fn new(points: Vec<[f64; 2]>, lattice: [[f64; 2]; 2], max_edge: f64) -> Self {
        let lattice = gauss_reduce(lattice);
        let mut t = FlatTorus { points, lattice, max_edge };
        for i in 0..t.points.len() {
            t.points[i] = t.reduce(t.points[i]);
        }
        t
    }

    pub fn area(&self) -> f64 {
        let [l1, l2] = self.lattice;
        (l1[0] * l2[1] - l1[1] * l2[0]).abs()
    }

    fn coords(&self, p: [f64; 2]) -> [f64; 2] {
        let [l1, l2] = self.lattice;
        let det = l1[0] * l2[1] - l1[1] * l2[0];
        [(p[0] * l2[1] - p[1] * l2[0]) / det, (l1[0] * p[1] - l1[1] * p[0]) / det]
    }

    fn reduce(&self, p: [f64; 2]) -> [f64; 2] {
        let c = self.coords(p);
        let (a, b) = (c[0].floor(), c[1].floor());
        let [l1, l2] = self.lattice;
        [p[0] - a * l1[0] - b * l2[0], p[1] - a * l1[1] - b * l2[1]]
    }

    fn position(&self, l: Lift) -> [f64; 2] {
        let [l1, l2] = self.lattice;
        let p = self.points[l.0];
        [p[0] + l.1 as f64 * l1[0] + l.2 as f64 * l2[0], p[1] + l.1 as f64 * l1[1] + l.2 as f64 * l2[1]]
    }

    /// New points at barycenters of the parents, averaging lifts chosen
    /// nearest to the first parent.
    pub fn subdivided(&self, parents: &[Vec<usize>]) -> FlatTorus {
        let points = parents
            .iter()
            .map(|p| {
                let base = self.points[p[0]];
                let mut sum = [0.0, 0.0];
                for &v in p {
                    let q = self.position(self.nearest_lift(base, v));
                    sum[0] += q[0];
                    sum[1] += q[1];
                }
                [sum[0] / p.len() as f64, sum[1] / p.len() as f64]
            })
            .collect();
        FlatTorus::new(points, self.lattice, self.max_edge)
    }

    fn nearest_lift(&self, base: [f64; 2], v: usize) -> Lift {
        let mut best = (v, 0, 0);
        let mut best_d = f64::INFINITY;
        for a in -2..=2 {
            for b in -2..=2 {
                let q = self.position((v, a, b));
                let d = (q[0] - base[0]).hypot(q[1] - base[1]);
                if d < best_d {
                    best_d = d;
                    best = (v, a, b);
                }
            }
        }
        best
    }
}

fn gauss_reduce(mut l: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let n = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    loop {
        if n(l[1]) < n(l[0]) {
            l.swap(0, 1);
        }
        let ratio = (l[0][0] * l[1][0] + l[0][1] * l[1][1]) / n(l[0]);
        if ratio.abs() <= 0.5 + 1e-12 {
            return l;
        }
        let mu = ratio.round();
        l[1] = [l[1][0] - mu * l[0][0], l[1][1] - mu * l[0][1]];
    }
}

/// Candidate straight simplices for a geometric norm LP.
#[derive(Debug, Clone)]
pub enum StraightModel {
    /// Geodesic triangles on all vertex triples not coplanar with the origin.
    Sphere { points: Vec<[f64; 3]> },
    FlatTorus(FlatTorus),
}

impl StraightModel {
    /// Sphere model from 3D coordinates, projected to the unit sphere.
    pub fn sphere_from(surface: &TriangulatedSurface) -> Result<Self> {
        let coords = surface.coords.as_ref().ok_or_else(|| malformed("sphere model needs vertex coordinates"))?;
        let points = coords
            .iter()
            .map(|c| {
                if c.len() != 3 {
                    return Err(malformed("sphere model needs 3D coordinates"));
                }
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                if r < 1e-12 {
                    return Err(malformed("vertex at the origin"));
                }
                Ok([c[0] / r, c[1] / r, c[2] / r])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StraightModel::Sphere { points })
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            StraightModel::Sphere { points } => points.len(),
            StraightModel::FlatTorus(t) => t.points.len(),
        }
    }

    pub fn subdivided(&self, sub: &Subdivision) -> StraightModel {
        match self {
            StraightModel::Sphere { points } => StraightModel::Sphere {
                points: sub
                    .parents
                    .iter()
                    .map(|p| {
                        let mut s = [0.0; 3];
                        for &v in p {
                            for d in 0..3 {
                                s[d] += points[v][d];
                            }
                        }
                        let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                        [s[0] / r, s[1] / r, s[2] / r]
                    })
                    .collect(),
            },
            StraightModel::FlatTorus(t) => StraightModel::FlatTorus(t.subdivided(&sub.parents)),
        }
    }

    /// Candidate triangles, keyed by their sorted vertex lifts, with
    /// boundary edges and degree (the triangle's share of the fundamental
    /// class: signed area over total area).
    fn candidates(&self) -> Vec<Candidate> {
        match self {
            StraightModel::Sphere { points } => {
                let n = points.len();
                let mut edges = EdgeIndex::default();
                let mut out = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        for k in j + 1..n {
                            let (a, b, c) = (&points[i], &points[j], &points[k]);
                            if det3(a, b, c).abs() < 1e-9 {
                                continue;
                            }
                            let key = [(i, 0, 0), (j, 0, 0), (k, 0, 0)];
                            out.push(Candidate {
                                sides: edges.sides(&key, |p, q| ((p, q), 1)),
                                key,
                                degree: solid_angle(a, b, c) / (4.0 * std::f64::consts::PI),
                            });
                        }
                    }
                }
                out
            }
            StraightModel::FlatTorus(t) => torus_candidates(t),
        }
    }

    /// Candidate key of a surface triangle and the sign relating its
    /// orientation to the key's sorted order.
    fn triangle_key(&self, tri: [usize; 3]) -> ([Lift; 3], i64) {
        let lifts: [Lift; 3] = match self {
            StraightModel::Sphere { .. } => tri.map(|v| (v, 0, 0)),
            StraightModel::FlatTorus(t) => {
                let base = t.points[tri[0]];
                [(tri[0], 0, 0), t.nearest_lift(base, tri[1]), t.nearest_lift(base, tri[2])]
            }
        };
        canonical_triangle(lifts)
    }
}

struct Candidate {
    key: [Lift; 3],
    sides: [(usize, i64); 3],
    degree: f64,
}

#[derive(Default)]
struct EdgeIndex(BTreeMap<(Lift, Lift), usize>);

impl EdgeIndex {
    /// Boundary `PQ + QR − PR` of the sorted triangle `[P, Q, R]`, with each
    /// edge reduced by `canon` to a key and a sign.
    fn sides(&mut self, t: &[Lift; 3], canon: impl Fn(Lift, Lift) -> ((Lift, Lift), i64)) -> [(usize, i64); 3] {
        let mut out = [(0, 0); 3];
        for (k, (a, b, sign)) in [(t[0], t[1], 1), (t[1], t[2], 1), (t[0], t[2], -1)].into_iter().enumerate() {
            let (key, s) = canon(a, b);
            let next = self.0.len();
            out[k] = (*self.0.entry(key).or_insert(next), sign * s);
        }
        out
    }
}

fn translate(l: Lift, a: i64, b: i64) -> Lift {
    (l.0, l.1 + a, l.2 + b)
}

/// Smallest sorted translate of a lifted triangle, and the sign of the
/// sorting permutation.
fn canonical_triangle(tri: [Lift; 3]) -> ([Lift; 3], i64) {
    let mut best: Option<([Lift; 3], i64)> = None;
    for v in tri {
        let moved = tri.map(|w| translate(w, -v.1, -v.2));
        let mut order = [0usize, 1, 2];
        order.sort_by_key(|&k| moved[k]);
        let sign = match order {
            [0, 1, 2] | [1, 2, 0] | [2, 0, 1] => 1,
            _ => -1,
        };
        let sorted = order.map(|k| moved[k]);
        if best.is_none_or(|(b, _)| sorted < b) {
            best = Some((sorted, sign));
        }
    }
    best.expect("three translates")
}

fn torus_candidates(t: &FlatTorus) -> Vec<Candidate> {
    let n = t.points.len();
    let reach = 3;
    let close = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]) <= t.max_edge + 1e-9;
    let canon_edge = |p: Lift, q: Lift| -> ((Lift, Lift), i64) {
        let forms = [
            ((p.0, 0, 0), translate(q, -p.1, -p.2)),
            ((q.0, 0, 0), translate(p, -q.1, -q.2)),
        ];
        if forms[0] <= forms[1] {
            (forms[0], 1)
        } else {
            (forms[1], -1)
        }
    };
    let mut keys: BTreeSet<[Lift; 3]> = BTreeSet::new();
    for i in 0..n {
        let base: Lift = (i, 0, 0);
        let pb = t.position(base);
        let mut nbrs = Vec::new();
        for j in 0..n {
            for a in -reach..=reach {
                for b in -reach..=reach {
                    let l = (j, a, b);
                    if l != base && close(pb, t.position(l)) {
                        nbrs.push(l);
                    }
                }
            }
        }
        for x in 0..nbrs.len() {
            for y in x + 1..nbrs.len() {
                if close(t.position(nbrs[x]), t.position(nbrs[y])) {
                    keys.insert(canonical_triangle([base, nbrs[x], nbrs[y]]).0);
                }
            }
        }
    }
    let mut edges = EdgeIndex::default();
    let mut out = Vec::new();
    for key in keys {
        let [p, q, r] = key.map(|l| t.position(l));
        let area = ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])) / 2.0;
        if area.abs() < 1e-12 {
            continue;
        }
        out.push(Candidate { sides: edges.sides(&key, canon_edge), key, degree: area / t.area() });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    /// Minimal `Σ|rᵢ|` over candidate cycles of degree one.
    pub value: f64,
    /// Exact value when the LP ran in rational arithmetic.
    pub exact: Option<String>,
    pub candidates: usize,
    pub constraints: usize,
    pub certified: bool,
    pub pivots: usize,
    pub method: &'static str,
}

/// Combinatorial ℓ¹ LP on a closed oriented surface: minimize `Σ|rᵢ|` over
/// chains on its triangles with `∂c = 0` and `⟨c, μ⟩ = 1`, where `μ` is the
/// cocycle dual to triangle 0. Solved exactly. A 2-cycle is constant on each
/// edge-connected component (every edge has two triangles with opposite
/// induced orientations), so the LP is first reduced to one variable per
/// component.
pub fn norm_lp(t: &TriangulatedSurface) -> Result<NormReport> {
    if !t.is_closed() {
        return Err(malformed("norm LP needs a closed surface"));
    }
    let (_, cols) = t.boundary_columns();
    let mut uf = UnionFind::new(t.triangles.len());
    let mut by_edge: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, col) in cols.iter().enumerate() {
        for &(e, _) in col {
            if let Some(&j) = by_edge.get(&e) {
                uf.union(i, j);
            } else {
                by_edge.insert(e, i);
            }
        }
    }
    let mut comps: BTreeMap<usize, (i64, i64)> = BTreeMap::new();
    for i in 0..t.triangles.len() {
        let e = comps.entry(uf.find(i)).or_default();
        e.0 += 1;
        e.1 += (i == 0) as i64;
    }
    // Reduced LP over t_k = p_k − n_k: min Σ size_k (p_k + n_k), Σ μ_k (p_k − n_k) = 1.
    let q = |v: i64| BigRational::from_integer(BigInt::from(v));
    let mut c = Vec::new();
    let mut row = Vec::new();
    for (size, mu) in comps.values() {
        c.push(q(*size));
        c.push(q(*size));
        row.push(q(*mu));
        row.push(q(-mu));
    }
    let a = vec![row];
    let b = vec![q(1)];
    let sol = minimize(&c, &a, &b).map_err(|e| malformed(format!("norm LP failed: {e}")))?;
    let certified = verify_certificate(&c, &a, &b, &sol, 0.0);
    Ok(NormReport {
        value: sol.value.to_f64().unwrap_or(f64::NAN),
        exact: Some(sol.value.to_string()),
        candidates: t.triangles.len(),
        constraints: t.edges().len() + 1,
        certified,
        pivots: sol.pivots,
        method: "combinatorial",
    })
}

/// The same LP without the component reduction: variables `p, n ≥ 0` per
/// triangle, rows `∂(p − n) = 0` and `⟨p − n, μ⟩ = 1`, dense exact simplex.
pub fn norm_lp_dense(t: &TriangulatedSurface) -> Result<NormReport> {
    if !t.is_closed() {
        return Err(malformed("norm LP needs a closed surface"));
    }
    let (edges, cols) = t.boundary_columns();
    let q = |v: i64| BigRational::from_integer(BigInt::from(v));
    let f = t.triangles.len();
    let mut a = vec![vec![BigRational::zero(); 2 * f]; edges.len() + 1];
    for (i, col) in cols.iter().enumerate() {
        for &(e, s) in col {
            a[e][2 * i] = q(s);
            a[e][2 * i + 1] = q(-s);
        }
    }
    a[edges.len()][0] = q(1);
    a[edges.len()][1] = q(-1);
    let mut b = vec![BigRational::zero(); edges.len() + 1];
    b[edges.len()] = q(1);
    let c = vec![q(1); 2 * f];
    let sol = minimize(&c, &a, &b).map_err(|e| malformed(format!("norm LP failed: {e}")))?;
    let certified = verify_certificate(&c, &a, &b, &sol, 0.0) && sol.value.is_positive();
    Ok(NormReport {
        value: sol.value.to_f64().unwrap_or(f64::NAN),
        exact: Some(sol.value.to_string()),
        candidates: f,
        constraints: a.len(),
        certified,
        pivots: sol.pivots,
        method: "combinatorial-dense",
    })
}

/// ℓ¹ LP over the model's straight triangles: `∂c = 0`, degree one. The
/// degree row has irrational entries, so this one runs in `f64` and is
/// certified by a dual solution with tolerance 1e-7.
pub fn norm_lp_straight(t: &TriangulatedSurface, model: &StraightModel) -> Result<NormReport> {
    if !t.is_closed() {
        return Err(malformed("norm LP needs a closed surface"));
    }
    if model.vertex_count() != t.vertex_count {
        return Err(malformed("model and surface disagree on the vertex count"));
    }
    let cand = model.candidates();
    let edges = cand.iter().flat_map(|c| c.sides.iter().map(|e| e.0)).max().map_or(0, |m| m + 1);
    let n = cand.len();
    let mut a = vec![vec![0.0; 2 * n]; edges + 1];
    for (i, cd) in cand.iter().enumerate() {
        for &(e, s) in &cd.sides {
            a[e][2 * i] += s as f64;
            a[e][2 * i + 1] -= s as f64;
        }
        a[edges][2 * i] = cd.degree;
        a[edges][2 * i + 1] = -cd.degree;
    }
    let mut b = vec![0.0; edges + 1];
    b[edges] = 1.0;
    let c = vec![1.0; 2 * n];
    // The surface's own fundamental cycle is a feasible start when its
    // triangles are candidates.
    let index: BTreeMap<[Lift; 3], usize> = cand.iter().enumerate().map(|(i, c)| (c.key, i)).collect();
    let mut start = vec![0.0; 2 * n];
    for tri in &t.triangles {
        let (key, sign) = model.triangle_key(*tri);
        if let Some(&i) = index.get(&key) {
            start[2 * i + (sign < 0) as usize] += 1.0;
        }
    }
    let sol = minimize_from(&c, &a, &b, Some(&start)).map_err(|e| malformed(format!("norm LP failed: {e}")))?;
    let certified = verify_certificate(&c, &a, &b, &sol, 1e-7);
    Ok(NormReport {
        value: sol.value,
        exact: None,
        candidates: n,
        constraints: edges + 1,
        certified,
        pivots: sol.pivots,
        method: match model {
            StraightModel::Sphere { .. } => "straight-sphere",
            StraightModel::FlatTorus(_) => "straight-flat-torus",
        },
    })
}

/// Parses an OFF-style complex: `OFF`, a `V F E` count line, `V` coordinate
/// lines, then `F` face lines `3 a b c [±1]`; a trailing `-1` reverses the
/// face. `#` starts a comment.
pub fn parse_off(text: &str) -> Result<TriangulatedSurface> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, msg: &str| Error::Parse { column: 0, message: format!("line {line}: {msg}") };
    let (ln, head) = lines.next().ok_or_else(|| err(0, "empty complex file"))?;
    let mut counts_line = head;
    let mut counts_ln = ln;
    if head.eq_ignore_ascii_case("OFF") {
        let (l, c) = lines.next().ok_or_else(|| err(ln, "missing count line"))?;
        counts_line = c;
        counts_ln = l;
    }
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(counts_ln, "bad count")))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(err(counts_ln, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, line) = lines.next().ok_or_else(|| err(0, "missing vertex line"))?;
        let c: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(l, "bad coordinate")))
            .collect::<Result<_>>()?;
        coords.push(c);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, line) = lines.next().ok_or_else(|| err(0, "missing face line"))?;
        let v: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(l, "bad face entry")))
            .collect::<Result<_>>()?;
        if v.first() != Some(&3) || !(v.len() == 4 || v.len() == 5) {
            return Err(err(l, "faces must be triangles: `3 a b c [±1]`"));
        }
        if v[1..4].iter().any(|&x| x < 0) {
            return Err(err(l, "negative vertex index"));
        }
        let mut t = [v[1] as usize, v[2] as usize, v[3] as usize];
        match v.get(4) {
            None | Some(1) => {}
            Some(-1) => t.swap(1, 2),
            Some(_) => return Err(err(l, "orientation sign must be 1 or -1")),
        }
        triangles.push(t);
    }
    if let Some((l, _)) = lines.next() {
        return Err(err(l, "trailing data"));
    }
    let s = TriangulatedSurface::new(nv, triangles)?;
    if coords.iter().all(|c| c.is_empty()) {
        Ok(s)
    } else {
        s.with_coords(coords)
    }
}

pub fn write_off(t: &TriangulatedSurface) -> String {
    let mut out = format!("OFF\n{} {} {}\n", t.vertex_count, t.triangles.len(), t.edges().len());
    for v in 0..t.vertex_count {
        match &t.coords {
            Some(c) => {
                let parts: Vec<String> = c[v].iter().map(|x| format!("{x}")).collect();
                out.push_str(&parts.join(" "));
            }
            None => out.push('0'),
        }
        out.push('\n');
    }
    for tri in &t.triangles {
        out.push_str(&format!("3 {} {} {}\n", tri[0], tri[1], tri[2]));
    }
    out
}

/// Bundled planar pieces: a disk, an annulus and a pair of pants, each
/// subdivided once so that they can be doubled.
pub fn bundled_planar(name: &str) -> Result<TriangulatedSurface> {
    let base = match name {
        "disk" => grid_surface(2, 2, &[])?,
        "annulus" => grid_surface(3, 3, &[(1, 1)])?,
        "pants" => grid_surface(5, 3, &[(1, 1), (3, 1)])?,
        other => return Err(Error::InvalidInput(format!("no bundled surface named {other:?}"))),
    };
    Ok(base.barycentric_subdivision().surface)
}

/// `|χ|`-based lower bound for closed oriented surfaces: `4g − 4` if `g ≥ 2`.
pub fn surface_norm_oracle(genus: i64) -> i64 {
    if genus >= 2 {
        4 * genus - 4
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_pieces_and_doubles() {
        for (name, chi, circles, double_genus) in [("disk", 1, 1, 0), ("annulus", 0, 2, 1), ("pants", -1, 3, 2)] {
            let x = bundled_planar(name).unwrap();
            assert_eq!(x.euler_characteristic(), chi, "{name}");
            assert_eq!(x.boundary_circles().len(), circles, "{name}");
            let d = x.double().unwrap();
            assert!(d.is_closed());
            assert_eq!(d.euler_characteristic(), 2 * chi, "{name}");
            assert_eq!(d.genus().unwrap(), double_genus, "{name}");
            assert_eq!(d.genus().unwrap(), 2 * x.genus().unwrap() + circles as i64 - 1);
        }
    }

    #[test]
    fn doubling_rejects_non_manifold_gluing() {
        let raw = grid_surface(2, 2, &[]).unwrap();
        assert!(matches!(raw.double(), Err(Error::MalformedComplex(_))));
        assert!(tetrahedron_sphere().double().is_err());
    }

    #[test]
    fn validation() {
        assert!(TriangulatedSurface::new(3, vec![[0, 1, 2], [0, 1, 2]]).is_err());
        assert!(TriangulatedSurface::new(4, vec![[0, 1, 2], [0, 1, 3]]).is_err());
        // Two triangles meeting only at a vertex: the link is disconnected.
        assert!(TriangulatedSurface::new(5, vec![[0, 1, 2], [0, 3, 4]]).is_err());
        let (torus, _) = seven_vertex_torus();
        assert_eq!(torus.euler_characteristic(), 0);
        assert_eq!(torus.genus().unwrap(), 1);
        assert_eq!(torus.edges().len(), 21);
    }

    #[test]
    fn combinatorial_lp_counts_triangles() {
        let s = tetrahedron_sphere();
        let fast = norm_lp(&s).unwrap();
        let dense = norm_lp_dense(&s).unwrap();
        assert_eq!(fast.exact.as_deref(), Some("4"));
        assert_eq!(dense.exact.as_deref(), Some("4"));
        assert!(fast.certified && dense.certified);
        let sub = s.barycentric_subdivision().surface;
        assert_eq!(norm_lp(&sub).unwrap().exact.as_deref(), Some("24"));
    }

    #[test]
    fn sphere_straight_lp_decreases() {
        let s = tetrahedron_sphere();
        let m = StraightModel::sphere_from(&s).unwrap();
        let before = norm_lp_straight(&s, &m).unwrap();
        assert!((before.value - 4.0).abs() < 1e-9);
        assert!(before.certified);
        let sub = s.barycentric_subdivision();
        let after = norm_lp_straight(&sub.surface, &m.subdivided(&sub)).unwrap();
        assert!(after.certified);
        assert!(after.value <= before.value + 1e-9);
        // Every geodesic triangle with non-antipodal corners has area below 2π.
        assert!(after.value > 2.0);
    }

    #[test]
    fn torus_straight_lp_is_stable_under_subdivision() {
        let (t, flat) = seven_vertex_torus();
        let m = StraightModel::FlatTorus(flat);
        let before = norm_lp_straight(&t, &m).unwrap();
        assert_eq!(before.candidates, 14);
        assert!((before.value - 14.0).abs() < 1e-7, "{}", before.value);
        let sub = t.barycentric_subdivision();
        let after = norm_lp_straight(&sub.surface, &m.subdivided(&sub)).unwrap();
        assert!(after.certified);
        // Straight triangles with unit edges have area at most √3/4, and the
        // torus has area 14·√3/4, so no candidate cycle can go below 14.
        assert!((after.value - 14.0).abs() < 1e-7, "{}", after.value);
    }

    #[test]
    fn off_roundtrip_and_errors() {
        let s = tetrahedron_sphere();
        let again = parse_off(&write_off(&s)).unwrap();
        assert_eq!(again.triangles, s.triangles);
        assert!(parse_off("OFF\n3 1 0\n0 0\n1 0\n0 1\n4 0 1 2 3\n").is_err());
        let flipped = parse_off("OFF\n4 4 6\n0\n0\n0\n0\n3 0 1 2\n3 0 2 3\n3 0 3 1\n3 1 2 3 -1\n").unwrap();
        assert!(flipped.is_closed());
    }
}
