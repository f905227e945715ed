//! ε-partitions of a discretized stratified space.
//!
//! Points carry a stratum label and every stratum `S` a neighborhood `U_S`
//! given as a point set. The construction runs one step per stratum
//! dimension: `P_S = N_{ε_k}(S ∖ L) ∖ L` where `L` collects the parts built
//! in earlier steps, and `ε_k` is the largest value with
//! `N_{3ε_k}(S ∖ L) ⊆ U_S`, capped by `ε_{k-1}` and then halved.
//! Neighborhoods are open: `N_r(A) = {x : d(x, A) < r}`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stratcheck::Stratification;

#[derive(Debug, Clone)]
pub struct DiscretizedStratifiedSpace {
    pub dim: usize,
    /// Point coordinates, `dim` per point.
    pub coords: Vec<f64>,
    pub labels: Vec<usize>,
    pub strata: Stratification,
    /// `neighborhoods[s][i]` tells whether point `i` lies in `U_s`.
    pub neighborhoods: Vec<Vec<bool>>,
    /// Smallest distance between two distinct points.
    pub spacing: f64,
}

impl DiscretizedStratifiedSpace {
    /// Validates the input: `S ⊆ U_S`, `U_S` avoids the closure of every
    /// `S'` with `S ⋠ S'`, and incomparable strata only come within grid
    /// spacing of each other next to a common lower stratum.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        labels: Vec<usize>,
        strata: Stratification,
        neighborhoods: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let n = labels.len();
        if dim == 0 || dim > 3 || coords.len() != n * dim {
            return Err(Error::InvalidInput("points must have 1 to 3 coordinates each".into()));
        }
        if n < 2 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("need at least two finite points".into()));
        }
        if labels.iter().any(|&l| l >= strata.len()) || neighborhoods.len() != strata.len() {
            return Err(Error::InvalidInput("labels and neighborhoods must match the strata".into()));
        }
        if neighborhoods.iter().any(|u| u.len() != n) {
            return Err(Error::InvalidInput("one membership flag per point in each neighborhood".into()));
        }
        for (i, &l) in labels.iter().enumerate() {
            if !neighborhoods[l][i] {
                return Err(Error::InvalidInput(format!(
                    "point {i} of stratum {} is outside its neighborhood",
                    strata.names[l]
                )));
            }
            for (s, u) in neighborhoods.iter().enumerate() {
                // i lies in the closure of every stratum above its own
                let clash = (0..strata.len()).find(|&t| strata.le(l, t) && !strata.le(s, t));
                if let (true, Some(t)) = (u[i], clash) {
                    return Err(Error::InvalidInput(format!(
                        "neighborhood of {} meets the closure of {} at point {i}",
                        strata.names[s], strata.names[t]
                    )));
                }
            }
        }
        let mut space = DiscretizedStratifiedSpace { dim, coords, labels, strata, neighborhoods, spacing: 0.0 };
        space.spacing = space.min_spacing()?;
        space.check_incomparable_contacts()?;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.point(i), self.point(j))
    }

    pub fn members(&self, s: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == s).collect()
    }

    fn min_spacing(&self) -> Result<f64> {
        let index = KdIndex::new(self, 0..self.len());
        let h = (0..self.len())
            .into_par_iter()
            .filter_map(|i| index.nearest_where(self.point(i), f64::INFINITY, |j| j != i).map(|(_, d)| d))
            .reduce(|| f64::INFINITY, f64::min);
        if h <= 0.0 {
            return Err(Error::InvalidInput("duplicate points".into()));
        }
        Ok(h)
    }

    /// Two incomparable strata may come within one grid diagonal of each
    /// other only where a stratum below both is equally close; otherwise
    /// their continuum closures would meet outside any common stratum.
    fn check_incomparable_contacts(&self) -> Result<()> {
        let r = self.spacing * (self.dim as f64).sqrt() * (1.0 + 1e-9);
        let index = KdIndex::new(self, 0..self.len());
        let st = &self.strata;
        let bad = (0..self.len()).into_par_iter().find_first(|&i| {
            let near = index.within(self.point(i), r);
            near.iter().any(|&j| {
                let (a, b) = (self.labels[i], self.labels[j]);
                !st.comparable(a, b)
                    && !near.iter().any(|&z| {
                        let c = self.labels[z];
                        st.le(c, a) && st.le(c, b) && self.distance(z, j) <= r
                    })
            })
        });
        match bad {
            None => Ok(()),
            Some(i) => Err(Error::InvalidInput(format!(
                "stratum {} touches an incomparable stratum near point {:?} with no common lower stratum",
                st.names[self.labels[i]],
                self.point(i)
            ))),
        }
    }

    /// Minimum distance from any point of `from` to any point of `to`.
    pub fn set_distance(&self, from: &[usize], to: &[usize]) -> f64 {
        if from.is_empty() || to.is_empty() {
            return f64::INFINITY;
        }
        let index = KdIndex::new(self, to.iter().copied());
        from.par_iter()
            .filter_map(|&i| index.nearest_where(self.point(i), f64::INFINITY, |_| true).map(|(_, d)| d))
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Largest distance from a point of `from` to the set `to`.
    pub fn max_offset(&self, from: &[usize], to: &[usize]) -> f64 {
        if from.is_empty() {
            return 0.0;
        }
        if to.is_empty() {
            return f64::INFINITY;
        }
        let index = KdIndex::new(self, to.iter().copied());
        from.par_iter()
            .map(|&i| index.nearest_where(self.point(i), f64::INFINITY, |_| true).map_or(f64::INFINITY, |(_, d)| d))
            .reduce(|| 0.0, f64::max)
    }

    /// Flags of `N_r(sources)`.
    fn neighborhood(&self, sources: &[usize], r: f64) -> Vec<bool> {
        if sources.is_empty() {
            return vec![false; self.len()];
        }
        let index = KdIndex::new(self, sources.iter().copied());
        (0..self.len())
            .into_par_iter()
            .map(|i| index.nearest_where(self.point(i), r, |_| true).is_some())
            .collect()
    }

    /// The plane cut by three rays from the origin, sampled on an `n × n`
    /// grid with coordinates `(i − n/2)·spacing`. `R1` runs along `+x`,
    /// `R2` along `+y` and `R3` along the diagonal toward `(−1, −1)`.
    /// `U_O` is the ball of radius `0.3·n·spacing/2`, each `U_R` an open
    /// half-tube of width `0.2·n·spacing/2` around its ray, and `U_Q = Q`.
    pub fn three_ray_plane(n: usize, spacing: f64) -> Result<Self> {
        let strata = Stratification::three_rays();
        let half = n as f64 * spacing / 2.0;
        let (ball, tube) = (0.3 * half, 0.2 * half);
        let mut coords = Vec::with_capacity(2 * n * n);
        let mut labels = Vec::with_capacity(n * n);
        let dirs = [(1.0, 0.0), (0.0, 1.0), (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2)];
        let mut u = vec![Vec::with_capacity(n * n); 7];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (i as i64 - n as i64 / 2, j as i64 - n as i64 / 2);
                let (x, y) = (a as f64 * spacing, b as f64 * spacing);
                coords.extend([x, y]);
                let label = if a == 0 && b == 0 {
                    0
                } else if b == 0 && a > 0 {
                    1
                } else if a == 0 && b > 0 {
                    2
                } else if a == b && a < 0 {
                    3
                } else {
                    let theta = (b as f64).atan2(a as f64).rem_euclid(2.0 * std::f64::consts::PI);
                    if theta < std::f64::consts::FRAC_PI_2 {
                        4
                    } else if theta < 1.25 * std::f64::consts::PI {
                        5
                    } else {
                        6
                    }
                };
                labels.push(label);
                u[0].push((x * x + y * y).sqrt() < ball);
                for (k, &(dx, dy)) in dirs.iter().enumerate() {
                    let along = x * dx + y * dy;
                    let across = (x * dy - y * dx).abs();
                    u[k + 1].push(along > 1e-12 * spacing && across < tube);
                }
                for q in 4..7 {
                    u[q].push(label == q);
                }
            }
        }
        DiscretizedStratifiedSpace::new(2, coords, labels, strata, u)
    }

    /// Two lines crossing at the origin where the crossing point is not a
    /// stratum of its own; the origin is filed under line `A`.
    pub fn crossing_lines(n: usize, spacing: f64) -> Result<Self> {
        let strata = Stratification::new(
            vec!["A".into(), "B".into(), "P".into()],
            vec![1, 1, 2],
            &[(0, 2), (1, 2)],
        )?;
        let tube = 0.2 * n as f64 * spacing / 2.0;
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        let mut u = vec![Vec::new(); 3];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (i as i64 - n as i64 / 2, j as i64 - n as i64 / 2);
                let (x, y) = (a as f64 * spacing, b as f64 * spacing);
                coords.extend([x, y]);
                let label = if b == 0 { 0 } else if a == 0 { 1 } else { 2 };
                labels.push(label);
                u[0].push(y.abs() < tube && label != 1);
                u[1].push(x.abs() < tube && label != 0);
                u[2].push(label == 2);
            }
        }
        DiscretizedStratifiedSpace::new(2, coords, labels, strata, u)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Static kd-tree over a subset of the space's points, stored implicitly:
/// the median of each range splits it on axis `depth mod dim`.
struct KdIndex<'a> {
    space: &'a DiscretizedStratifiedSpace,
    order: Vec<usize>,
}

impl<'a> KdIndex<'a> {
    fn new(space: &'a DiscretizedStratifiedSpace, members: impl Iterator<Item = usize>) -> Self {
        let mut order: Vec<usize> = members.collect();
        build(space, &mut order, 0);
        KdIndex { space, order }
    }

    /// Nearest accepted member strictly closer than `limit`, ties broken by index.
    fn nearest_where(&self, p: &[f64], limit: f64, accept: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
        let mut best = (usize::MAX, limit);
        self.nearest_in(p, 0, self.order.len(), 0, &accept, &mut best);
        (best.0 != usize::MAX).then_some(best)
    }

    fn nearest_in(
        &self,
        p: &[f64],
        lo: usize,
        hi: usize,
        depth: usize,
        accept: &impl Fn(usize) -> bool,
        best: &mut (usize, f64),
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let j = self.order[mid];
        let q = self.space.point(j);
        let d = dist(p, q);
        if accept(j) && (d < best.1 || (d == best.1 && j < best.0 && best.0 != usize::MAX)) {
            *best = (j, d);
        }
        let diff = p[depth % p.len()] - q[depth % p.len()];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.nearest_in(p, near.0, near.1, depth + 1, accept, best);
        if diff.abs() <= best.1 {
            self.nearest_in(p, far.0, far.1, depth + 1, accept, best);
        }
    }

    /// Members within distance `r` (inclusive), in index order.
    fn within(&self, p: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.within_in(p, r, 0, self.order.len(), 0, &mut out);
        out.sort_unstable();
        out
    }

    fn within_in(&self, p: &[f64], r: f64, lo: usize, hi: usize, depth: usize, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let j = self.order[mid];
        let q = self.space.point(j);
        if dist(p, q) <= r {
            out.push(j);
        }
        let diff = p[depth % p.len()] - q[depth % p.len()];
        if diff <= r {
            self.within_in(p, r, lo, mid, depth + 1, out);
        }
        if diff >= -r {
            self.within_in(p, r, mid + 1, hi, depth + 1, out);
        }
    }
}

fn build(space: &DiscretizedStratifiedSpace, order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % space.dim;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        space.point(a)[axis].total_cmp(&space.point(b)[axis]).then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build(space, left, depth + 1);
    build(space, &mut right[1..], depth + 1);
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// Point indices of `P_S` for each stratum.
    pub parts: Vec<Vec<usize>>,
    /// Stratum whose part holds each point.
    pub assignment: Vec<usize>,
    /// `ε_0 > ε_1 > …`, one per stratum dimension.
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationCheck {
    pub strata: (String, String),
    pub parts: f64,
    pub part_to_stratum: f64,
    pub stratum_to_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionCheck {
    pub delta: f64,
    pub epsilon: f64,
    /// One entry per incomparable pair.
    pub separations: Vec<SeparationCheck>,
    /// `max_{x ∈ P_S} d(x, S)` per stratum.
    pub offsets: Vec<f64>,
    /// `d(P_S, X ∖ U_S)` per stratum; `N_δ(P_S) ⊆ U_S` iff this is ≥ δ.
    pub clearances: Vec<f64>,
    pub disjoint_cover: bool,
}

impl PartitionCheck {
    pub fn separated(&self) -> bool {
        self.separations
            .iter()
            .all(|s| s.parts > self.delta && s.part_to_stratum > self.delta && s.stratum_to_part > self.delta)
    }

    pub fn close(&self) -> bool {
        self.offsets.iter().all(|&o| o < self.epsilon)
    }

    pub fn contained(&self) -> bool {
        self.clearances.iter().all(|&c| c >= self.delta)
    }

    pub fn holds(&self) -> bool {
        self.disjoint_cover && self.separated() && self.close() && self.contained()
    }
}

pub fn build_partition(space: &DiscretizedStratifiedSpace, epsilon: f64) -> Result<Partition> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let st = &space.strata;
    let n = space.len();
    let top = st.dims.iter().copied().max().unwrap_or(0);
    let mut lower = vec![false; n];
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut parts = vec![Vec::new(); st.len()];
    let mut epsilons = Vec::with_capacity(top + 1);
    for k in 0..=top {
        let level: Vec<usize> = (0..st.len()).filter(|&s| st.dims[s] == k).collect();
        let cores: Vec<Vec<usize>> = level
            .iter()
            .map(|&s| (0..n).filter(|&i| space.labels[i] == s && !lower[i]).collect())
            .collect();
        let mut admissible = f64::INFINITY;
        for (&s, core) in level.iter().zip(&cores) {
            let outside: Vec<usize> = (0..n).filter(|&i| !space.neighborhoods[s][i]).collect();
            admissible = admissible.min(space.set_distance(core, &outside) / 3.0);
        }
        let prev = epsilons.last().copied().unwrap_or(epsilon);
        let eps_k = prev.min(admissible) / 2.0;
        if !(eps_k > 0.0 && eps_k.is_finite()) {
            return Err(Error::ResolutionTooCoarse(format!("no admissible radius at dimension {k}")));
        }
        for (&s, core) in level.iter().zip(&cores) {
            let hood = space.neighborhood(core, eps_k);
            for i in 0..n {
                if hood[i] && !lower[i] {
                    if let Some(t) = assignment[i] {
                        return Err(Error::ResolutionTooCoarse(format!(
                            "point {i} lies in the parts of both {} and {}",
                            st.names[t], st.names[s]
                        )));
                    }
                    assignment[i] = Some(s);
                    parts[s].push(i);
                }
            }
        }
        for i in 0..n {
            if assignment[i].is_some() {
                lower[i] = true;
            }
        }
        epsilons.push(eps_k);
    }
    let assignment: Vec<usize> = assignment
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| Error::Numerical(format!("point {i} was not assigned"))))
        .collect::<Result<_>>()?;
    let delta = epsilons[top] / 2.0;
    let partition = Partition { parts, assignment, epsilons, delta, epsilon };
    let check = verify_partition(space, &partition);
    if !check.holds() {
        return Err(Error::ResolutionTooCoarse(format!("partition fails its checks: {check:?}")));
    }
    Ok(partition)
}

/// Measures the three lemma properties on the discrete metric.
pub fn verify_partition(space: &DiscretizedStratifiedSpace, p: &Partition) -> PartitionCheck {
    let st = &space.strata;
    let members: Vec<Vec<usize>> = (0..st.len()).map(|s| space.members(s)).collect();
    let mut seen = vec![0usize; space.len()];
    for part in &p.parts {
        for &i in part {
            seen[i] += 1;
        }
    }
    let disjoint_cover = seen.iter().all(|&c| c == 1)
        && p.parts.iter().enumerate().all(|(s, part)| part.iter().all(|&i| p.assignment[i] == s));
    let mut separations = Vec::new();
    for a in 0..st.len() {
        for b in a + 1..st.len() {
            if st.comparable(a, b) {
                continue;
            }
            separations.push(SeparationCheck {
                strata: (st.names[a].clone(), st.names[b].clone()),
                parts: space.set_distance(&p.parts[a], &p.parts[b]),
                part_to_stratum: space.set_distance(&p.parts[a], &members[b]),
                stratum_to_part: space.set_distance(&members[a], &p.parts[b]),
            });
        }
    }
    let offsets = (0..st.len()).map(|s| space.max_offset(&p.parts[s], &members[s])).collect();
    let clearances = (0..st.len())
        .map(|s| {
            let outside: Vec<usize> = (0..space.len()).filter(|&i| !space.neighborhoods[s][i]).collect();
            space.set_distance(&p.parts[s], &outside)
        })
        .collect();
    PartitionCheck { delta: p.delta, epsilon: p.epsilon, separations, offsets, clearances, disjoint_cover }
}

#[derive(Debug, Serialize, Deserialize)]
struct SpaceFile {
    points: Vec<Vec<f64>>,
    labels: Vec<String>,
    strata: Vec<StratumEntry>,
    #[serde(default)]
    order: Vec<(String, String)>,
    neighborhoods: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StratumEntry {
    name: String,
    dim: usize,
}

/// Reads a space file: points, a stratum name per point, the strata with
/// their cover relations, and `U_S` as point-index lists.
pub fn parse_space(text: &str) -> Result<DiscretizedStratifiedSpace> {
    let file: SpaceFile = serde_json::from_str(text)?;
    let names: Vec<String> = file.strata.iter().map(|s| s.name.clone()).collect();
    let lookup = |n: &str| {
        names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stratum {n:?}")))
    };
    let covers = file.order.iter().map(|(a, b)| Ok((lookup(a)?, lookup(b)?))).collect::<Result<Vec<_>>>()?;
    let strata = Stratification::new(names.clone(), file.strata.iter().map(|s| s.dim).collect(), &covers)?;
    let dim = file.points.first().map_or(0, Vec::len);
    if file.points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points have differing dimensions".into()));
    }
    let n = file.points.len();
    if file.labels.len() != n {
        return Err(Error::InvalidInput("one label per point".into()));
    }
    let labels = file.labels.iter().map(|l| lookup(l)).collect::<Result<Vec<_>>>()?;
    let mut hoods = vec![vec![false; n]; names.len()];
    for (name, list) in &file.neighborhoods {
        let s = lookup(name)?;
        for &i in list {
            *hoods[s]
                .get_mut(i)
                .ok_or_else(|| Error::InvalidInput(format!("neighborhood of {name} lists missing point {i}")))? = true;
        }
    }
    DiscretizedStratifiedSpace::new(dim, file.points.concat(), labels, strata, hoods)
}

pub fn space_to_json(space: &DiscretizedStratifiedSpace) -> String {
    let st = &space.strata;
    let mut order = Vec::new();
    for a in 0..st.len() {
        for b in 0..st.len() {
            if a != b && st.le(a, b) {
                order.push((st.names[a].clone(), st.names[b].clone()));
            }
        }
    }
    let file = SpaceFile {
        points: (0..space.len()).map(|i| space.point(i).to_vec()).collect(),
        labels: space.labels.iter().map(|&l| st.names[l].clone()).collect(),
        strata: st.names.iter().zip(&st.dims).map(|(n, &d)| StratumEntry { name: n.clone(), dim: d }).collect(),
        order,
        neighborhoods: space
            .neighborhoods
            .iter()
            .enumerate()
            .map(|(s, u)| (st.names[s].clone(), (0..u.len()).filter(|&i| u[i]).collect()))
            .collect(),
    };
    serde_json::to_string(&file).expect("space serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kd_queries_match_brute_force() {
        let space = DiscretizedStratifiedSpace::three_ray_plane(30, 0.1).unwrap();
        let members: Vec<usize> = (0..space.len()).filter(|i| i % 7 == 3).collect();
        let index = KdIndex::new(&space, members.iter().copied());
        for q in [0, 17, 450, 899] {
            let p = space.point(q);
            let brute = members
                .iter()
                .map(|&j| (j, dist(p, space.point(j))))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            assert_eq!(index.nearest_where(p, f64::INFINITY, |_| true), Some(brute));
            let mut near: Vec<usize> = members.iter().copied().filter(|&j| dist(p, space.point(j)) <= 0.25).collect();
            near.sort_unstable();
            assert_eq!(index.within(p, 0.25), near);
        }
    }

    #[test]
    fn single_stratum_is_whole_space() {
        let strata = Stratification::new(vec!["X".into()], vec![1], &[]).unwrap();
        let coords: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let space = DiscretizedStratifiedSpace::new(1, coords, vec![0; 20], strata, vec![vec![true; 20]]).unwrap();
        let p = build_partition(&space, 0.05).unwrap();
        assert_eq!(p.parts[0], (0..20).collect::<Vec<_>>());
        assert!(verify_partition(&space, &p).holds());
    }

    #[test]
    fn three_rays_small_grid() {
        let space = DiscretizedStratifiedSpace::three_ray_plane(40, 0.05).unwrap();
        assert!((space.spacing - 0.05).abs() < 1e-12);
        let p = build_partition(&space, 0.6).unwrap();
        assert!(p.epsilons.windows(2).all(|w| w[1] < w[0]));
        assert!(p.delta < p.epsilons[2]);
        let check = verify_partition(&space, &p);
        assert!(check.holds(), "{check:?}");
        assert_eq!(check.separations.len(), 9);
        // the vertex part is a genuine ball around the origin
        assert!(p.parts[0].len() > 1);
    }

    #[test]
    fn crossing_lines_rejected() {
        let err = DiscretizedStratifiedSpace::crossing_lines(21, 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)), "{err}");
    }

    #[test]
    fn neighborhood_must_avoid_closures() {
        let space = DiscretizedStratifiedSpace::three_ray_plane(20, 0.1).unwrap();
        let mut u = space.neighborhoods.clone();
        let origin = space.labels.iter().position(|&l| l == 0).unwrap();
        u[1][origin] = true;
        let bad = DiscretizedStratifiedSpace::new(2, space.coords.clone(), space.labels.clone(), space.strata.clone(), u);
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip() {
        let space = DiscretizedStratifiedSpace::three_ray_plane(12, 0.1).unwrap();
        let back = parse_space(&space_to_json(&space)).unwrap();
        assert_eq!(back.labels, space.labels);
        assert_eq!(back.neighborhoods, space.neighborhoods);
        assert_eq!(back.strata, space.strata);
        assert!(parse_space("{\"points\": []}").is_err());
    }

    #[test]
    fn rejects_bad_epsilon() {
        let space = DiscretizedStratifiedSpace::three_ray_plane(12, 0.1).unwrap();
        assert!(build_partition(&space, 0.0).is_err());
        assert!(build_partition(&space, f64::NAN).is_err());
    }
}
