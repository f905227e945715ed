//! Trajectory integration with boundary events, trajectory types, linearized
//! transport along trajectories and the traversal genericity test.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::ode::{self, Tolerances};
use crate::scene::Scene;
use crate::strata::DEFAULT_TOL;

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Jet tolerance for multiplicities.
    pub tol: f64,
    /// Touches are recognised where `|F| < guard_factor · tol` at a local minimum.
    pub guard_factor: f64,
    pub ode: Tolerances,
    /// Defaults to `10³ · diameter / min sampled |v|`.
    pub time_cap: Option<f64>,
    /// Largest step as a fraction of the scene diameter.
    pub max_step_fraction: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: DEFAULT_TOL,
            guard_factor: 10.0,
            ode: Tolerances::default(),
            time_cap: None,
            max_step_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Entry,
    Exit,
    Tangency,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryEvent {
    pub t: f64,
    pub location: Vec<f64>,
    pub face: usize,
    pub multiplicity: usize,
    pub kind: EventKind,
    /// Leading jet coefficient `c_m`.
    #[serde(skip)]
    pub leading: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub events: Vec<BoundaryEvent>,
    #[serde(skip)]
    pub polyline: Vec<Vec<f64>>,
    pub singleton: bool,
}

impl Trajectory {
    /// `ω = (m(a₁), …, m(a_p))`.
    pub fn ty(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.multiplicity).collect()
    }

    pub fn reduced_multiplicity(&self) -> usize {
        reduced_multiplicity(&self.ty())
    }

    pub fn label(&self) -> String {
        type_label(&self.ty())
    }

    pub fn entry(&self) -> &BoundaryEvent {
        &self.events[0]
    }

    pub fn exit(&self) -> &BoundaryEvent {
        self.events.last().expect("trajectory has events")
    }

    /// Event sets agree position by position within `radius`.
    pub fn same_as(&self, other: &Trajectory, radius: f64) -> bool {
        self.events.len() == other.events.len()
            && self
                .events
                .iter()
                .zip(&other.events)
                .all(|(a, b)| a.multiplicity == b.multiplicity && linalg::dist(&a.location, &b.location) < radius)
    }
}

/// `Σ (mᵢ − 1)`.
pub fn reduced_multiplicity(ty: &[usize]) -> usize {
    ty.iter().map(|m| m.saturating_sub(1)).sum()
}

/// `(121)`-style label.
pub fn type_label(ty: &[usize]) -> String {
    let inner: Vec<String> = ty.iter().map(|m| m.to_string()).collect();
    format!("({})", inner.join(""))
}

/// Parity rule: a lone point of even multiplicity, or odd ends around even
/// interior points.
pub fn is_admissible(ty: &[usize]) -> bool {
    match ty {
        [] => false,
        [m] => *m > 0 && m % 2 == 0,
        [first, middle @ .., last] => {
            first % 2 == 1 && last % 2 == 1 && middle.iter().all(|m| *m > 0 && m % 2 == 0)
        }
    }
}

/// Every admissible type with reduced multiplicity at most `n`, ordered by
/// reduced multiplicity, then length, then lexicographically.
pub fn admissible_types(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    // Interior points cost at least 1, so sequences have at most n + 2 entries.
    fn bounded(prefix: &mut Vec<usize>, budget: usize, max_len: usize, out: &mut Vec<Vec<usize>>) {
        if is_admissible(prefix) {
            out.push(prefix.clone());
        }
        if prefix.len() == max_len {
            return;
        }
        for m in 1..=budget + 1 {
            prefix.push(m);
            bounded(prefix, budget - (m - 1), max_len, out);
            prefix.pop();
        }
    }
    bounded(&mut Vec::new(), n, n + 2, &mut out);
    out.sort_by(|a, b| {
        (reduced_multiplicity(a), a.len(), a.clone()).cmp(&(reduced_multiplicity(b), b.len(), b.clone()))
    });
    out
}

/// Multiplicity and leading coefficient at a point treated as lying on `face`.
fn classify(scene: &Scene, face: usize, x: &[f64], tol: f64) -> Result<(usize, f64)> {
    let jet = scene.flow_jet(face, x, scene.jet_cap());
    let threshold = tol * jet.scale();
    match (1..jet.coeffs.len()).find(|&j| jet.coeffs[j].abs() >= threshold) {
        Some(m) if m <= scene.dim() => Ok((m, jet.coeffs[m])),
        _ => Err(Error::DegenerateTangency {
            point: x.to_vec(),
            jet: jet.coeffs,
        }),
    }
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) < 0.0) == (glo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

enum Candidate {
    Crossing(usize),
    Touch(usize),
}

struct Run {
    events: Vec<BoundaryEvent>,
    polyline: Vec<Vec<f64>>,
}

/// Integrator bound to a scene, its reversal and a time cap.
pub struct Flow<'a> {
    scene: &'a Scene,
    reversed: Scene,
    opts: FlowOptions,
    cap: f64,
}

pub fn time_cap(scene: &Scene) -> f64 {
    let speed = scene.min_sampled_speed(4096);
    if speed.is_finite() && speed > 0.0 {
        1e3 * scene.diameter() / speed
    } else {
        f64::INFINITY
    }
}

impl<'a> Flow<'a> {
    pub fn new(scene: &'a Scene, opts: FlowOptions) -> Result<Self> {
        let cap = opts.time_cap.unwrap_or_else(|| time_cap(scene));
        Ok(Flow {
            scene,
            reversed: scene.reversed()?,
            opts,
            cap,
        })
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn options(&self) -> &FlowOptions {
        &self.opts
    }

    fn guard(&self) -> f64 {
        self.opts.guard_factor * self.opts.tol
    }

    /// Trajectory starting at an entry point of `∂X`.
    pub fn integrate(&self, entry: &[f64]) -> Result<Trajectory> {
        let scene = self.scene;
        let (face, value) = scene.nearest_face(entry);
        if value.abs() > self.guard() || scene.inside_value(entry) < -self.guard() {
            return Err(Error::InvalidInput(format!("{entry:?} is not on the boundary")));
        }
        let (m, leading) = classify(scene, face, entry, self.opts.tol)?;
        let mut first = BoundaryEvent {
            t: 0.0,
            location: entry.to_vec(),
            face,
            multiplicity: m,
            kind: EventKind::Entry,
            leading,
        };
        if m % 2 == 0 {
            if leading > 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{entry:?} is an interior tangency, not an entry point"
                )));
            }
            first.kind = EventKind::Tangency;
            return Ok(Trajectory {
                events: vec![first],
                polyline: vec![entry.to_vec()],
                singleton: true,
            });
        }
        if leading < 0.0 {
            return Err(Error::InvalidInput(format!("v points outward at {entry:?}")));
        }
        let run = self.run(scene, entry, Some(face))?;
        let mut events = vec![first];
        events.extend(run.events);
        Ok(Trajectory {
            events,
            polyline: run.polyline,
            singleton: false,
        })
    }

    /// The whole trajectory through an arbitrary point of `X`.
    pub fn through(&self, p: &[f64]) -> Result<Trajectory> {
        let scene = self.scene;
        let (face, value) = scene.nearest_face(p);
        let guard = self.guard();
        if scene.inside_value(p) < -guard {
            return Err(Error::InvalidInput(format!("{p:?} lies outside X")));
        }
        let on_boundary = value.abs() <= guard;
        let mut here = None;
        if on_boundary {
            let (m, leading) = classify(scene, face, p, self.opts.tol)?;
            let entry_like = (m % 2 == 1 && leading > 0.0) || (m % 2 == 0 && leading < 0.0);
            if entry_like {
                return self.integrate(p);
            }
            here = Some(BoundaryEvent {
                t: 0.0,
                location: p.to_vec(),
                face,
                multiplicity: m,
                kind: if m % 2 == 1 { EventKind::Exit } else { EventKind::Tangency },
                leading,
            });
        }
        let start_face = on_boundary.then_some(face);
        let back = self.run(&self.reversed, p, start_face)?;
        let mut events: Vec<BoundaryEvent> = back
            .events
            .into_iter()
            .rev()
            .map(|mut e| {
                e.t = -e.t;
                if e.kind == EventKind::Exit {
                    e.kind = EventKind::Entry;
                }
                if e.multiplicity % 2 == 1 {
                    e.leading = -e.leading;
                }
                e
            })
            .collect();
        let mut polyline: Vec<Vec<f64>> = back.polyline.into_iter().rev().collect();
        let exits_here = here.as_ref().is_some_and(|e| e.kind == EventKind::Exit);
        events.extend(here);
        if !exits_here {
            let fwd = self.run(scene, p, start_face)?;
            events.extend(fwd.events);
            polyline.extend(fwd.polyline.into_iter().skip(1));
        }
        let t0 = events[0].t;
        events.iter_mut().for_each(|e| e.t -= t0);
        Ok(Trajectory {
            events,
            polyline,
            singleton: false,
        })
    }

    /// Integrates many entry points in parallel, preserving order.
    pub fn integrate_many(&self, entries: &[Vec<f64>]) -> Vec<Result<Trajectory>> {
        entries.par_iter().map(|e| self.integrate(e)).collect()
    }

    fn max_step(&self, scene: &Scene, x: &[f64]) -> f64 {
        let speed = linalg::norm(&scene.velocity(x));
        self.opts.max_step_fraction * scene.diameter() / speed.max(1e-300)
    }

    fn stalled(&self, scene: &Scene, t: f64, x: &[f64]) -> Error {
        let (face, _) = scene.nearest_face(x);
        Error::IntegrationStalled {
            time: t,
            jet: scene.flow_jet(face, x, scene.jet_cap()).coeffs,
        }
    }

    /// Integrates from `start` until the first exit, collecting every event
    /// after the start. Events on `start_face` right at the start are ignored.
    fn run(&self, scene: &Scene, start: &[f64], start_face: Option<usize>) -> Result<Run> {
        let f = |y: &[f64]| scene.velocity(y);
        let guard = self.guard();
        let tol = self.opts.tol;
        let suppress = 1e-6 * scene.diameter().max(1.0);
        let mut x = start.to_vec();
        let mut t = 0.0;
        let mut h = 0.1 * self.max_step(scene, &x);
        let mut last: Option<(usize, Vec<f64>)> = start_face.map(|face| (face, start.to_vec()));
        let mut events = Vec::new();
        let mut polyline = vec![x.clone()];
        let faces = scene.face_count();
        if linalg::norm(&scene.velocity(&x)) < 1e-300 {
            return Err(self.stalled(scene, t, &x));
        }
        loop {
            if t > self.cap {
                return Err(Error::NotTraversing { cap: self.cap });
            }
            let hh = h.min(self.max_step(scene, &x));
            let (x1, err) = ode::step(&f, &x, hh, self.opts.ode);
            if err > 1.0 || !x1.iter().all(|c| c.is_finite()) {
                h = ode::next_step(hh, err.min(1e10)).min(0.5 * hh);
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(self.stalled(scene, t, &x));
                }
                continue;
            }
            let at = |s: f64| ode::step(&f, &x, s, self.opts.ode).0;
            let mut best: Option<(f64, Candidate)> = None;
            for face in 0..faces {
                let f0 = scene.face_value(face, &x);
                let f1 = scene.face_value(face, &x1);
                let candidate = if f0 >= 0.0 && f1 < 0.0 {
                    let s = bisect(|s| scene.face_value(face, &at(s)), 0.0, hh);
                    Some((s, Candidate::Crossing(face)))
                } else {
                    let d0 = scene.lie_value(face, 1, &x);
                    let d1 = scene.lie_value(face, 1, &x1);
                    if d0 < 0.0 && d1 >= 0.0 {
                        let s = bisect(|s| scene.lie_value(face, 1, &at(s)), 0.0, hh);
                        let fm = scene.face_value(face, &at(s));
                        (fm.abs() < guard).then_some((s, Candidate::Touch(face)))
                    } else {
                        None
                    }
                };
                let Some((s, cand)) = candidate else { continue };
                let xe = at(s);
                if let Some((lf, lx)) = &last {
                    if *lf == face && linalg::dist(lx, &xe) < suppress {
                        continue;
                    }
                }
                if best.as_ref().is_none_or(|(bs, _)| s < *bs) {
                    best = Some((s, cand));
                }
            }
            let Some((s, cand)) = best else {
                if !scene.in_bounds(&x1, 1e-6 * scene.diameter()) {
                    return Err(Error::InvalidScene(format!(
                        "trajectory left the bounding box near {x1:?}"
                    )));
                }
                t += hh;
                x = x1;
                polyline.push(x.clone());
                h = ode::next_step(hh, err);
                continue;
            };
            let mut xe = at(s);
            let mut te = t + s;
            let (face, mut kind) = match cand {
                Candidate::Crossing(face) => (face, EventKind::Exit),
                Candidate::Touch(face) => (face, EventKind::Tangency),
            };
            let (mut m, mut leading) = classify(scene, face, &xe, tol)?;
            if kind == EventKind::Exit && m % 2 == 0 {
                kind = EventKind::Tangency;
            }
            if kind == EventKind::Exit && m == 1 {
                // Grazing test: a shallow dip below F = 0 that turns back
                // within the guard band is a touch, not an exit.
                let jet = scene.flow_jet(face, &xe, 2);
                let (c1, c2) = (jet.coeffs[1], jet.coeffs[2]);
                if c2 > 0.0 && c1 * c1 / (4.0 * c2) < guard {
                    let tm = -c1 / (2.0 * c2);
                    let at_e = |s: f64| ode::step(&f, &xe, s, self.opts.ode).0;
                    let sm = bisect(|s| scene.lie_value(face, 1, &at_e(s)), 0.0, 2.0 * tm);
                    xe = at_e(sm);
                    te += sm;
                    (m, leading) = classify(scene, face, &xe, tol)?;
                    kind = EventKind::Tangency;
                }
            }
            polyline.push(xe.clone());
            events.push(BoundaryEvent {
                t: te,
                location: xe.clone(),
                face,
                multiplicity: m,
                kind,
                leading,
            });
            if kind == EventKind::Exit {
                return Ok(Run { events, polyline });
            }
            last = Some((face, xe.clone()));
            x = xe;
            t = te;
            h = hh;
        }
    }

    /// Variational flow `Φ(tᵢ)` from the entry to every event.
    pub fn transport(&self, traj: &Trajectory) -> Result<Transport> {
        let scene = self.scene;
        let d = scene.dim();
        let velocities: Vec<Vec<f64>> = traj.events.iter().map(|e| scene.velocity(&e.location)).collect();
        let times: Vec<f64> = traj.events.iter().map(|e| e.t).collect();
        if traj.singleton {
            return Ok(Transport {
                times,
                maps: vec![linalg::identity(d)],
                velocities,
            });
        }
        let rhs = |y: &[f64]| {
            let x = &y[..d];
            let mut out = scene.velocity(x);
            let jac = scene.velocity_jacobian(x);
            for i in 0..d {
                for j in 0..d {
                    out.push((0..d).map(|k| jac[i][k] * y[d + k * d + j]).sum());
                }
            }
            out
        };
        let mut y0 = traj.entry().location.clone();
        y0.extend(linalg::identity(d).into_iter().flatten());
        let max_step = self.max_step(scene, &traj.entry().location);
        let states = ode::integrate_to(&rhs, &y0, &times, max_step, self.opts.ode)
            .ok_or_else(|| Error::Numerical("variational integration failed".into()))?;
        let maps = states
            .iter()
            .map(|y| (0..d).map(|i| y[d + i * d..d + (i + 1) * d].to_vec()).collect())
            .collect();
        Ok(Transport {
            times,
            maps,
            velocities,
        })
    }

    pub fn check_traversally_generic(&self, traj: &Trajectory) -> Result<TransversalityReport> {
        check_with_transport(self.scene, traj, &self.transport(traj)?, self.opts.tol)
    }
}

/// Linearized flow maps from the entry fibre to each event fibre.
#[derive(Debug, Clone)]
pub struct Transport {
    pub times: Vec<f64>,
    /// `maps[i] = Φ(tᵢ)`.
    pub maps: Vec<Vec<Vec<f64>>>,
    pub velocities: Vec<Vec<f64>>,
}

impl Transport {
    /// `Φ(tⱼ) Φ(tᵢ)⁻¹`.
    pub fn between(&self, i: usize, j: usize) -> Result<Vec<Vec<f64>>> {
        let inv = linalg::inverse(&self.maps[i])
            .ok_or_else(|| Error::Numerical("singular variational map".into()))?;
        Ok(linalg::mat_mul(&self.maps[j], &inv))
    }

    /// Induced map between normal slices `v(aᵢ)^⊥ → v(aⱼ)^⊥` in orthonormal
    /// bases, with the component along `v(aⱼ)` projected away.
    pub fn normal_between(&self, i: usize, j: usize, tol: f64) -> Result<Vec<Vec<f64>>> {
        let full = self.between(i, j)?;
        let bi = linalg::orthonormal_complement(&self.velocities[i]);
        let bj = linalg::orthonormal_complement(&self.velocities[j]);
        let m: Vec<Vec<f64>> = bj
            .iter()
            .map(|row| {
                bi.iter()
                    .map(|col| linalg::dot(row, &linalg::mat_vec(&full, col)))
                    .collect()
            })
            .collect();
        let det = linalg::determinant(&m);
        if det.abs() < tol {
            return Err(Error::Numerical(format!("normal transport determinant {det:.3e}")));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    pub label: String,
    pub reduced: usize,
    pub rank: usize,
    pub sigma_min: f64,
    pub passed: bool,
}

fn check_with_transport(scene: &Scene, traj: &Trajectory, tr: &Transport, tol: f64) -> Result<TransversalityReport> {
    let reduced = traj.reduced_multiplicity();
    let n = scene.n();
    if reduced > n {
        return Err(Error::GenericityViolation(format!(
            "trajectory {} has reduced multiplicity {reduced} > {n}",
            traj.label()
        )));
    }
    let last = traj.events.len() - 1;
    let basis = linalg::orthonormal_complement(&tr.velocities[last]);
    let mut rows = Vec::new();
    for (i, e) in traj.events.iter().enumerate() {
        if e.multiplicity < 2 {
            continue;
        }
        // Covectors pull back along Φ_{i→exit}⁻¹, i.e. α ↦ α Φᵢ Φ_exit⁻¹.
        let back = tr.between(last, i)?;
        for k in 0..e.multiplicity - 1 {
            let alpha = scene.lie_gradient(e.face, k, &e.location);
            let moved: Vec<f64> = (0..alpha.len())
                .map(|c| (0..alpha.len()).map(|r| alpha[r] * back[r][c]).sum())
                .collect();
            let restricted: Vec<f64> = basis.iter().map(|b| linalg::dot(&moved, b)).collect();
            let len = linalg::norm(&restricted);
            rows.push(if len > 0.0 {
                restricted.iter().map(|c| c / len).collect()
            } else {
                restricted
            });
        }
    }
    let (rank, sigma_min) = if rows.is_empty() {
        (0, f64::INFINITY)
    } else {
        (linalg::rank(&rows, tol), linalg::smallest_singular_value(&rows))
    };
    Ok(TransversalityReport {
        label: traj.label(),
        reduced,
        rank,
        sigma_min,
        passed: rank == reduced,
    })
}

pub fn integrate_trajectory(scene: &Scene, entry: &[f64], opts: FlowOptions) -> Result<Trajectory> {
    Flow::new(scene, opts)?.integrate(entry)
}

pub fn trajectory_through(scene: &Scene, p: &[f64], opts: FlowOptions) -> Result<Trajectory> {
    Flow::new(scene, opts)?.through(p)
}

pub fn linearized_transport(scene: &Scene, traj: &Trajectory) -> Result<Transport> {
    Flow::new(scene, FlowOptions::default())?.transport(traj)
}

pub fn check_traversally_generic(scene: &Scene, traj: &Trajectory, tol: f64) -> Result<TransversalityReport> {
    let tr = linearized_transport(scene, traj)?;
    check_with_transport(scene, traj, &tr, tol)
}

#[derive(Serialize)]
struct TrajectoryRecord<'a> {
    #[serde(rename = "type")]
    ty: String,
    reduced: usize,
    singleton: bool,
    events: &'a [BoundaryEvent],
}

/// One JSON object per trajectory.
pub fn trajectory_json_line(traj: &Trajectory) -> String {
    serde_json::to_string(&TrajectoryRecord {
        ty: traj.label(),
        reduced: traj.reduced_multiplicity(),
        singleton: traj.singleton,
        events: &traj.events,
    })
    .expect("trajectory serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarExpr;
    use crate::scene::DEFAULT_VARS;

    fn scene2(faces: &[&str], v: [&str; 2], half: f64) -> Scene {
        let p = |s: &str| ScalarExpr::parse(s, &DEFAULT_VARS[..2]).unwrap();
        Scene::new(
            "t",
            faces.iter().map(|f| p(f)).collect(),
            vec![p(v[0]), p(v[1])],
            vec![(-half, half); 2],
        )
        .unwrap()
    }

    fn disk() -> Scene {
        scene2(&["1 - x^2 - y^2"], ["0", "1"], 1.5)
    }

    fn annulus() -> Scene {
        scene2(&["(x^2 + y^2 - 1)*(4 - x^2 - y^2)"], ["0", "1"], 2.5)
    }

    #[test]
    fn vertical_chord() {
        let s = disk();
        let t = integrate_trajectory(&s, &[0.0, -1.0], FlowOptions::default()).unwrap();
        assert_eq!(t.ty(), vec![1, 1]);
        assert_eq!(t.reduced_multiplicity(), 0);
        assert!(linalg::dist(&t.exit().location, &[0.0, 1.0]) < 1e-9);
        assert!((t.exit().t - 2.0).abs() < 1e-9);
    }

    #[test]
    fn disk_singleton() {
        let s = disk();
        let t = integrate_trajectory(&s, &[1.0, 0.0], FlowOptions::default()).unwrap();
        assert!(t.singleton);
        assert_eq!(t.ty(), vec![2]);
        assert_eq!(t.reduced_multiplicity(), 1);
    }

    #[test]
    fn annulus_grazing_chord() {
        let s = annulus();
        let t = integrate_trajectory(&s, &[1.0, -3f64.sqrt()], FlowOptions::default()).unwrap();
        assert_eq!(t.ty(), vec![1, 2, 1]);
        assert!(linalg::dist(&t.events[1].location, &[1.0, 0.0]) < 1e-6);
        assert!(linalg::dist(&t.exit().location, &[1.0, 3f64.sqrt()]) < 1e-8);
    }

    #[test]
    fn through_tangency_point() {
        let s = annulus();
        let t = trajectory_through(&s, &[1.0, 0.0], FlowOptions::default()).unwrap();
        assert_eq!(t.ty(), vec![1, 2, 1]);
        assert!(linalg::dist(&t.entry().location, &[1.0, -3f64.sqrt()]) < 1e-8);
        assert_eq!(t.events[1].location, vec![1.0, 0.0]);
        assert!(t.entry().t == 0.0 && t.events[1].t > 0.0);
    }

    #[test]
    fn nearby_chord_misses_the_hole() {
        let s = annulus();
        let x: f64 = 1.001;
        let t = integrate_trajectory(&s, &[x, -(4.0 - x * x).sqrt()], FlowOptions::default()).unwrap();
        assert_eq!(t.ty(), vec![1, 1]);
        let x: f64 = 0.999;
        let t = integrate_trajectory(&s, &[x, -(4.0 - x * x).sqrt()], FlowOptions::default()).unwrap();
        assert_eq!(t.ty(), vec![1, 1]);
        assert!(t.exit().location[1] < 0.0);
    }

    #[test]
    fn reduced_multiplicity_examples() {
        assert_eq!(reduced_multiplicity(&[1, 1]), 0);
        assert_eq!(reduced_multiplicity(&[1, 2, 1]), 1);
        assert_eq!(reduced_multiplicity(&[1, 2, 2, 1]), 2);
    }

    fn brute_force_types(n: usize) -> Vec<Vec<usize>> {
        // Every sequence over 1..=n+1 of length ≤ n+2, filtered.
        let mut out = Vec::new();
        let base = n + 1;
        for len in 1..=n + 2 {
            for code in 0..base.pow(len as u32) {
                let mut c = code;
                let ty: Vec<usize> = (0..len)
                    .map(|_| {
                        let m = c % base + 1;
                        c /= base;
                        m
                    })
                    .collect();
                let sum: usize = ty.iter().map(|m| m - 1).sum();
                let parity = if len == 1 {
                    ty[0] % 2 == 0
                } else {
                    ty[0] % 2 == 1 && ty[len - 1] % 2 == 1 && ty[1..len - 1].iter().all(|m| m % 2 == 0)
                };
                if sum <= n && parity {
                    out.push(ty);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn admissible_type_lists() {
        assert_eq!(admissible_types(1), vec![vec![1, 1], vec![2], vec![1, 2, 1]]);
        let two = admissible_types(2);
        assert_eq!(two.len(), 6);
        for n in 1..=4 {
            let mut ours = admissible_types(n);
            ours.sort();
            assert_eq!(ours, brute_force_types(n), "n = {n}");
        }
    }

    #[test]
    fn reversibility() {
        let s = annulus();
        let flow = Flow::new(&s, FlowOptions::default()).unwrap();
        let t = flow.through(&[1.0, 0.0]).unwrap();
        let rev = s.reversed().unwrap();
        let back = Flow::new(&rev, FlowOptions::default())
            .unwrap()
            .integrate(&t.exit().location)
            .unwrap();
        assert_eq!(back.ty(), t.ty().into_iter().rev().collect::<Vec<_>>());
        for (a, b) in back.events.iter().zip(t.events.iter().rev()) {
            assert!(linalg::dist(&a.location, &b.location) < 1e-6);
        }
    }

    #[test]
    fn constant_field_transport_is_identity() {
        let s = disk();
        let t = integrate_trajectory(&s, &[0.3, -(1.0f64 - 0.09).sqrt()], FlowOptions::default()).unwrap();
        let tr = linearized_transport(&s, &t).unwrap();
        let m = tr.between(0, 1).unwrap();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let nm = tr.normal_between(0, 1, 1e-7).unwrap();
        assert!((nm[0][0].abs() - 1.0).abs() < 1e-12);
    }

    fn expm_series(a: &[[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
        let mut out = [[1.0, 0.0], [0.0, 1.0]];
        let mut term = out;
        for k in 1..60 {
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (0..2).map(|l| term[i][l] * a[l][j]).sum::<f64>() * t / k as f64;
                }
            }
            term = next;
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += term[i][j];
                }
            }
        }
        out
    }

    #[test]
    fn linear_field_transport_matches_exponential() {
        let s = scene2(&["1 - x^2 - y^2"], ["1", "0.3*x + 0.2*y"], 1.5);
        let flow = Flow::new(&s, FlowOptions::default()).unwrap();
        let t = flow.through(&[0.0, 0.0]).unwrap();
        let tr = flow.transport(&t).unwrap();
        let last = t.events.len() - 1;
        let got = tr.between(0, last).unwrap();
        let want = expm_series(&[[0.0, 0.0], [0.3, 0.2]], t.exit().t);
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[i][j] - want[i][j]).abs() < 1e-8, "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn transport_composes() {
        let s = annulus();
        let flow = Flow::new(&s, FlowOptions::default()).unwrap();
        let t = flow.through(&[1.0, 0.0]).unwrap();
        let tr = flow.transport(&t).unwrap();
        let direct = tr.normal_between(0, 2, 1e-7).unwrap();
        let a = tr.normal_between(0, 1, 1e-7).unwrap();
        let b = tr.normal_between(1, 2, 1e-7).unwrap();
        let composed = linalg::mat_mul(&b, &a);
        assert!((direct[0][0] - composed[0][0]).abs() < 1e-8);
    }

    #[test]
    fn genericity_reports() {
        let s = disk();
        let t = integrate_trajectory(&s, &[0.0, -1.0], FlowOptions::default()).unwrap();
        let r = check_traversally_generic(&s, &t, DEFAULT_TOL).unwrap();
        assert!(r.passed && r.rank == 0);
        let t = integrate_trajectory(&s, &[1.0, 0.0], FlowOptions::default()).unwrap();
        let r = check_traversally_generic(&s, &t, DEFAULT_TOL).unwrap();
        assert!(r.passed && r.rank == 1);
        let s = annulus();
        let t = trajectory_through(&s, &[1.0, 0.0], FlowOptions::default()).unwrap();
        assert!(check_traversally_generic(&s, &t, DEFAULT_TOL).unwrap().passed);
    }

    #[test]
    fn aligned_holes_violate_genericity() {
        let s = scene2(
            &["25 - x^2 - y^2", "x^2 + (y - 2)^2 - 1", "x^2 + (y + 2)^2 - 1"],
            ["0", "1"],
            5.5,
        );
        let t = trajectory_through(&s, &[1.0, 2.0], FlowOptions::default()).unwrap();
        assert_eq!(t.ty(), vec![1, 2, 2, 1]);
        assert!(matches!(
            check_traversally_generic(&s, &t, DEFAULT_TOL),
            Err(Error::GenericityViolation(_))
        ));
    }

    #[test]
    fn limit_cycle_is_not_traversing() {
        let s = scene2(
            &["1 - x^2 - y^2"],
            ["-y - x*(x^2 + y^2 - 0.25)", "x - y*(x^2 + y^2 - 0.25)"],
            1.5,
        );
        let opts = FlowOptions {
            time_cap: Some(50.0),
            ..Default::default()
        };
        let r = integrate_trajectory(&s, &[1.0, 0.0], opts);
        assert!(matches!(r, Err(Error::NotTraversing { .. })), "{r:?}");
    }

    #[test]
    fn json_line() {
        let s = disk();
        let t = integrate_trajectory(&s, &[0.0, -1.0], FlowOptions::default()).unwrap();
        let line = trajectory_json_line(&t);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["type"], "(11)");
        assert_eq!(v["reduced"], 0);
        assert_eq!(v["events"][1]["kind"], "exit");
    }
}
