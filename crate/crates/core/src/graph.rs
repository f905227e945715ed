//! Trajectory-space graph of a planar scene: vertices are the
//! maximum-multiplicity trajectories, edges the connected families of
//! `(11)` trajectories between them.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::census::{self, CensusOptions};
use crate::error::{Error, Result};
use crate::flow::{Flow, Trajectory};
use crate::linalg;
use crate::scene::Scene;
use crate::strata::{self, Curve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Vertex(usize),
    /// The family runs out of the bounding box.
    Open,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphVertex {
    pub label: String,
    /// The fold point of `∂₂X` on the trajectory.
    pub fold: Vec<f64>,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryGraph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<[End; 2]>,
}

impl TrajectoryGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .flat_map(|e| e.iter())
            .filter(|end| **end == End::Vertex(v))
            .count()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64
    }

    pub fn has_open_ends(&self) -> bool {
        self.edges.iter().any(|e| e.contains(&End::Open))
    }

    /// `(2)` vertices have degree 1 and `(121)` vertices degree 3.
    pub fn degree_law_holds(&self) -> bool {
        self.vertices.iter().enumerate().all(|(i, v)| match v.label.as_str() {
            "(2)" => self.degree(i) == 1,
            "(121)" => self.degree(i) == 3,
            _ => false,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph trajectories {\n  edge [dir=none];\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "  v{i} [label=\"{}\"];", v.label);
        }
        let mut open = 0;
        for e in &self.edges {
            let mut name = |end: &End| match end {
                End::Vertex(i) => format!("v{i}"),
                End::Open => {
                    let _ = writeln!(out, "  open{open} [shape=point];");
                    open += 1;
                    format!("open{}", open - 1)
                }
            };
            let a = name(&e[0]);
            let b = name(&e[1]);
            let _ = writeln!(out, "  {a} -> {b};");
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone)]
pub struct GraphOptions {
    pub census: CensusOptions,
    /// Entry samples spread over all entry arcs.
    pub samples: usize,
    /// Limit trajectories must pass this close (relative to the diameter) to a
    /// vertex fold point.
    pub match_radius: f64,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            census: CensusOptions::default(),
            samples: 2000,
            match_radius: 5e-3,
        }
    }
}

#[derive(Debug, Clone)]
enum ArcEnd {
    Fold,
    Open,
}

/// Maximal boundary arc on which `v` points into `X`.
#[derive(Debug, Clone)]
struct EntryArc {
    face: usize,
    points: Vec<Vec<f64>>,
    ends: [ArcEnd; 2],
}

impl EntryArc {
    fn length(&self) -> f64 {
        self.points.windows(2).map(|w| linalg::dist(&w[0], &w[1])).sum()
    }

    fn point(&self, scene: &Scene, s: f64) -> Option<Vec<f64>> {
        let mut acc = 0.0;
        let last = self.points.len() - 2;
        for (k, w) in self.points.windows(2).enumerate() {
            let seg = linalg::dist(&w[0], &w[1]);
            if acc + seg >= s || k == last {
                let t = if seg > 0.0 { ((s - acc) / seg).clamp(0.0, 1.0) } else { 0.0 };
                let guess: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| a + t * (b - a)).collect();
                return scene.project_to_face(self.face, &guess, 40, 1e-13);
            }
            acc += seg;
        }
        None
    }
}

/// Boundary curves of every face, traced by continuation.
fn boundary_curves(scene: &Scene, opts: &CensusOptions) -> Result<Vec<Curve>> {
    let mut sopts = opts.strata.clone();
    sopts.trace_curves = false;
    let sample = strata::find_strata(scene, 1, opts.seeds, &sopts)?;
    let seeds = sample.points.iter().map(|p| (p.face, p.location.clone())).collect();
    Ok(strata::trace_components(scene, 1, seeds, &sopts))
}

fn entry_arcs(scene: &Scene, curves: &[Curve]) -> Vec<EntryArc> {
    let mut arcs = Vec::new();
    for c in curves {
        let positive = |x: &[f64]| scene.lie_value(c.face, 1, x) > 0.0;
        let mut pts = c.points.clone();
        // On a loop, start right after a sign change; the fold there closes the loop.
        let mut wrap_fold = None;
        if c.closed {
            let n = pts.len();
            match (0..n).find(|&k| positive(&pts[k]) != positive(&pts[(k + 1) % n])) {
                Some(k) => {
                    pts.rotate_left(k + 1);
                    wrap_fold = fold_between(scene, c.face, &pts[n - 1], &pts[0]);
                }
                None => {
                    if positive(&pts[0]) {
                        // Entry everywhere along a loop without folds.
                        pts.push(pts[0].clone());
                        arcs.push(EntryArc {
                            face: c.face,
                            points: pts,
                            ends: [ArcEnd::Open, ArcEnd::Open],
                        });
                    }
                    continue;
                }
            }
        }
        let boundary_end = || if c.closed { ArcEnd::Fold } else { ArcEnd::Open };
        let mut current: Vec<Vec<f64>> = Vec::new();
        if positive(&pts[0]) {
            current.extend(wrap_fold.clone());
        }
        let mut start_end = boundary_end();
        for k in 0..pts.len() {
            let here = positive(&pts[k]);
            if here {
                current.push(pts[k].clone());
            }
            match pts.get(k + 1).map(|p| positive(p)) {
                Some(next) if next != here => {
                    let fold = fold_between(scene, c.face, &pts[k], &pts[k + 1]);
                    if here {
                        current.extend(fold);
                        if current.len() >= 2 {
                            arcs.push(EntryArc {
                                face: c.face,
                                points: std::mem::take(&mut current),
                                ends: [start_end.clone(), ArcEnd::Fold],
                            });
                        }
                        current.clear();
                    } else {
                        current = fold.into_iter().collect();
                        start_end = ArcEnd::Fold;
                    }
                }
                None if here => {
                    current.extend(wrap_fold.clone());
                    if current.len() >= 2 {
                        arcs.push(EntryArc {
                            face: c.face,
                            points: std::mem::take(&mut current),
                            ends: [start_end.clone(), boundary_end()],
                        });
                    }
                }
                _ => {}
            }
        }
    }
    arcs
}

/// Fold point between two consecutive boundary samples of opposite `vF` sign.
fn fold_between(scene: &Scene, face: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    strata::newton_stack(scene, face, 2, &mid, 30)
}

fn polyline_distance(poly: &[Vec<f64>], p: &[f64]) -> f64 {
    if poly.len() == 1 {
        return linalg::dist(&poly[0], p);
    }
    poly.windows(2)
        .map(|w| {
            let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(x, y)| x - y).collect();
            let len2 = linalg::dot(&d, &d);
            let t = if len2 > 0.0 {
                let rel: Vec<f64> = p.iter().zip(&w[0]).map(|(x, y)| x - y).collect();
                (linalg::dot(&rel, &d) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q: Vec<f64> = w[0].iter().zip(&d).map(|(x, dx)| x + t * dx).collect();
            linalg::dist(&q, p)
        })
        .fold(f64::INFINITY, f64::min)
}

fn exit_of(t: &Trajectory) -> (usize, Vec<f64>) {
    (t.exit().face, t.exit().location.clone())
}

/// Builds the graph: census trajectories become vertices; each entry arc is
/// cut at the shadows of `(121)` trajectories and every piece is an edge whose
/// ends are matched to the vertices its limit trajectories run into.
pub fn build_trajectory_graph_2d(scene: &Scene, opts: &GraphOptions) -> Result<TrajectoryGraph> {
    let census = census::count_mm_2d(scene, &opts.census)?;
    let flow = Flow::new(scene, opts.census.flow)?;
    let vertices: Vec<GraphVertex> = census
        .trajectories
        .iter()
        .map(|t| {
            let fold = t
                .events
                .iter()
                .find(|e| e.multiplicity == 2)
                .map(|e| e.location.clone())
                .unwrap_or_else(|| t.entry().location.clone());
            GraphVertex {
                label: t.label(),
                fold,
                trajectory: t.clone(),
            }
        })
        .collect();
    let match_tol = opts.match_radius * scene.diameter();
    let match_vertex = |limit: &Trajectory| -> Result<End> {
        vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (i, polyline_distance(&limit.polyline, &v.fold)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .filter(|(_, d)| *d < match_tol)
            .map(|(i, _)| End::Vertex(i))
            .ok_or_else(|| {
                Error::TopologyUnresolved(format!(
                    "limit trajectory from {:?} meets no vertex",
                    limit.entry().location
                ))
            })
    };

    let curves = boundary_curves(scene, &opts.census)?;
    let arcs = entry_arcs(scene, &curves);
    let total: f64 = arcs.iter().map(EntryArc::length).sum();
    let mut edges = Vec::new();
    for arc in &arcs {
        let len = arc.length();
        let count = ((opts.samples as f64 * len / total).ceil() as usize).max(16);
        let integrate = |s: f64| -> Option<Trajectory> {
            let p = arc.point(scene, s)?;
            flow.integrate(&p).ok().filter(|t| !t.singleton)
        };
        let params: Vec<f64> = (0..count).map(|k| len * (k as f64 + 0.5) / count as f64).collect();
        let samples: Vec<Option<Trajectory>> = params.par_iter().map(|&s| integrate(s)).collect();
        let valid: Vec<(f64, Trajectory)> = params
            .iter()
            .zip(samples)
            .filter_map(|(s, t)| t.map(|t| (*s, t)))
            .collect();
        if valid.is_empty() {
            continue;
        }
        let spacing = len / count as f64;
        let jump = (0.05 * scene.diameter()).max(20.0 * spacing);
        let differs = |a: &Trajectory, b: &Trajectory| {
            let (fa, xa) = exit_of(a);
            let (fb, xb) = exit_of(b);
            fa != fb || linalg::dist(&xa, &xb) > jump
        };

        let offset = 1e-4 * len;
        let left = match arc.ends[0] {
            ArcEnd::Open => End::Open,
            ArcEnd::Fold => {
                let limit = integrate(offset).unwrap_or_else(|| valid[0].1.clone());
                match_vertex(&limit)?
            }
        };
        let mut current_start = left;
        for w in valid.windows(2) {
            let ((s0, t0), (s1, t1)) = (&w[0], &w[1]);
            if !differs(t0, t1) {
                continue;
            }
            let (e0, e1) = (exit_of(t0).1, exit_of(t1).1);
            let (mut lo, mut hi) = (*s0, *s1);
            let (mut tlo, mut thi) = (t0.clone(), t1.clone());
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let Some(tm) = integrate(mid) else { break };
                let x = exit_of(&tm).1;
                if linalg::dist(&x, &e0) <= linalg::dist(&x, &e1) {
                    lo = mid;
                    tlo = tm;
                } else {
                    hi = mid;
                    thi = tm;
                }
            }
            let before = match_vertex(&tlo)?;
            let after = match_vertex(&thi)?;
            edges.push([current_start, before]);
            current_start = after;
        }
        let right = match arc.ends[1] {
            ArcEnd::Open => End::Open,
            ArcEnd::Fold => {
                let limit = integrate(len - offset).unwrap_or_else(|| valid[valid.len() - 1].1.clone());
                match_vertex(&limit)?
            }
        };
        edges.push([current_start, right]);
    }
    for e in &mut edges {
        e.sort();
    }
    edges.sort();
    Ok(TrajectoryGraph { vertices, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarExpr;
    use crate::scene::DEFAULT_VARS;

    fn scene2(faces: &[&str], bounds: [(f64, f64); 2]) -> Scene {
        let p = |s: &str| ScalarExpr::parse(s, &DEFAULT_VARS[..2]).unwrap();
        Scene::new(
            "t",
            faces.iter().map(|f| p(f)).collect(),
            vec![p("0"), p("1")],
            bounds.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn disk_graph() {
        let s = scene2(&["1 - x^2 - y^2"], [(-1.5, 1.5); 2]);
        let g = build_trajectory_graph_2d(&s, &GraphOptions::default()).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (2, 1));
        assert!(g.degree_law_holds());
        assert_eq!(g.euler_characteristic(), 1);
        let dot = g.to_dot();
        assert!(dot.contains("v0 [label=\"(2)\"]"));
        assert!(dot.contains("v0 -> v1;"));
    }

    #[test]
    fn annulus_graph() {
        let s = scene2(&["(x^2 + y^2 - 1)*(4 - x^2 - y^2)"], [(-2.5, 2.5); 2]);
        let g = build_trajectory_graph_2d(&s, &GraphOptions::default()).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (4, 4));
        assert!(g.degree_law_holds());
        assert_eq!(g.euler_characteristic(), 0);
    }

    #[test]
    fn two_holes_graph() {
        let s = scene2(
            &["25 - x^2 - y^2", "(x + 2)^2 + (y - 1)^2 - 1", "(x - 2)^2 + (y + 1)^2 - 1"],
            [(-5.5, 5.5); 2],
        );
        let g = build_trajectory_graph_2d(&s, &GraphOptions::default()).unwrap();
        assert_eq!(g.vertices.len(), 6);
        assert!(g.degree_law_holds());
        assert_eq!(g.euler_characteristic(), -1);
    }

    #[test]
    fn slab_graph() {
        let s = scene2(&["y", "1 - y"], [(-1.0, 1.0), (-0.5, 1.5)]);
        let g = build_trajectory_graph_2d(&s, &GraphOptions::default()).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (0, 1));
        assert!(g.has_open_ends());
        assert!(g.to_dot().contains("shape=point"));
    }
}
