//! Versal local models and censuses of maximum-multiplicity trajectories.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::flow::{self, Flow, FlowOptions, Trajectory};
use crate::linalg;
use crate::ode;
use crate::scene::Scene;
use crate::strata::{self, Curve, StrataOptions};

/// Versal chart for one trajectory type.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub ty: Vec<usize>,
    pub scene: Scene,
    /// Tangency points `u = i` on the designated trajectory.
    pub designated: Vec<Vec<f64>>,
}

/// `P_m(w, x⃗) = w^m + x_{m-2} w^{m-2} + … + x_0`, with `coeffs[j] = x_j`.
fn versal_polynomial(w: &ScalarExpr, m: usize, coeffs: &[ScalarExpr]) -> ScalarExpr {
    let mut p = w.powf(m as f64);
    for (j, x) in coeffs.iter().enumerate() {
        p = p.add(&x.mul(&w.powf(j as f64)));
    }
    p
}

/// Builds the chart in dimension `n + 1`: `P_{mᵢ}(u−i, x⃗ᵢ) ≥ 0` for `i < p`,
/// `P_{m_p}(u−p, x⃗_p) ≤ 0`, with `v = ∂/∂u`.
pub fn make_local_model(ty: &[usize], n: usize) -> Result<LocalModel> {
    if !flow::is_admissible(ty) {
        return Err(Error::InvalidInput(format!(
            "{} is not an admissible type",
            flow::type_label(ty)
        )));
    }
    let reduced = flow::reduced_multiplicity(ty);
    if reduced > n {
        return Err(Error::InvalidInput(format!(
            "{} needs dimension above {}",
            flow::type_label(ty),
            n + 1
        )));
    }
    let dim = n + 1;
    let p = ty.len();
    let mut vars = vec!["u".to_string()];
    let mut faces = Vec::with_capacity(p);
    let u = ScalarExpr::var(0);
    for (i, &m) in ty.iter().enumerate() {
        let coeffs: Vec<ScalarExpr> = (0..m.saturating_sub(1))
            .map(|j| {
                vars.push(format!("x{}_{j}", i + 1));
                ScalarExpr::var(vars.len() - 1)
            })
            .collect();
        let w = u.sub(&ScalarExpr::constant((i + 1) as f64));
        let poly = versal_polynomial(&w, m, &coeffs);
        faces.push(if i + 1 < p { poly } else { poly.neg() });
    }
    for k in 0..n - reduced {
        vars.push(format!("y{k}"));
    }
    let mut field = vec![ScalarExpr::constant(0.0); dim];
    field[0] = ScalarExpr::constant(1.0);
    let mut bounds = vec![(-1.0, 1.0); dim];
    bounds[0] = (0.0, (p + 1) as f64);
    let scene = Scene::with_vars(flow::type_label(ty), vars, faces, field, bounds)?;
    let designated = (1..=p)
        .map(|i| {
            let mut x = vec![0.0; dim];
            x[0] = i as f64;
            x
        })
        .collect();
    Ok(LocalModel {
        ty: ty.to_vec(),
        scene,
        designated,
    })
}

impl LocalModel {
    /// Integrates the designated trajectory from `u = 1`.
    pub fn designated_trajectory(&self, opts: FlowOptions) -> Result<Trajectory> {
        flow::integrate_trajectory(&self.scene, &self.designated[0], opts)
    }
}

/// Detected type of the designated trajectory of `make_local_model(ty, n)`.
pub fn roundtrip_type(ty: &[usize], n: usize) -> Result<Vec<usize>> {
    let model = make_local_model(ty, n)?;
    Ok(model.designated_trajectory(FlowOptions::default())?.ty())
}

#[derive(Debug, Clone)]
pub struct CensusOptions {
    pub flow: FlowOptions,
    pub strata: StrataOptions,
    pub seeds: usize,
    /// Samples along `∂₂X` curves in the 3D re-touch sweep.
    pub sweep_samples: usize,
    /// Record genericity violations instead of failing.
    pub allow_nongeneric: bool,
    /// Trajectories are identified when their event sets agree within this radius.
    pub dedup_radius: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            flow: FlowOptions::default(),
            strata: StrataOptions::default(),
            seeds: 512,
            sweep_samples: 1000,
            allow_nongeneric: false,
            dedup_radius: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MMCensus {
    pub n: usize,
    pub trajectories: Vec<Trajectory>,
    /// Boundary points on maximum-multiplicity trajectories.
    pub r: usize,
    pub violations: Vec<String>,
    pub incomplete: bool,
}

impl MMCensus {
    pub fn count(&self) -> usize {
        self.trajectories.len()
    }

    /// `r ≤ (n+2) · #mm`.
    pub fn inequality_holds(&self) -> bool {
        self.r <= (self.n + 2) * self.count()
    }

    fn from_trajectories(n: usize, mut list: Vec<Trajectory>, violations: Vec<String>, incomplete: bool) -> Self {
        list.sort_by(|a, b| {
            a.entry()
                .location
                .partial_cmp(&b.entry().location)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let r = list.iter().map(|t| t.events.len()).sum();
        MMCensus {
            n,
            trajectories: list,
            r,
            violations,
            incomplete,
        }
    }

    /// Columns `type,reduced,points,entry,exit`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("type,reduced,points,entry,exit\n");
        let fmt = |x: &[f64]| x.iter().map(|c| format!("{c:.9}")).collect::<Vec<_>>().join(" ");
        for t in &self.trajectories {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t.label(),
                t.reduced_multiplicity(),
                t.events.len(),
                fmt(&t.entry().location),
                fmt(&t.exit().location)
            );
        }
        out
    }
}

fn dedup(list: Vec<Trajectory>, radius: f64) -> Vec<Trajectory> {
    let mut out: Vec<Trajectory> = Vec::new();
    for t in list {
        if !out.iter().any(|o| o.same_as(&t, radius)) {
            out.push(t);
        }
    }
    out
}

/// Sorts trajectories into the census, checking traversal genericity.
fn assemble(flow: &Flow, found: Vec<Trajectory>, opts: &CensusOptions, incomplete: bool) -> Result<MMCensus> {
    let n = flow.scene().n();
    let mut violations = Vec::new();
    let mut mm = Vec::new();
    for t in dedup(found, opts.dedup_radius) {
        let report = match flow.check_traversally_generic(&t) {
            Ok(r) => r,
            Err(Error::GenericityViolation(msg)) if opts.allow_nongeneric => {
                violations.push(msg);
                continue;
            }
            Err(e) => return Err(e),
        };
        if !report.passed {
            let msg = format!(
                "trajectory {} has transported rank {} < {}",
                report.label, report.rank, report.reduced
            );
            if !opts.allow_nongeneric {
                return Err(Error::GenericityViolation(msg));
            }
            violations.push(msg);
        }
        if !flow::is_admissible(&t.ty()) {
            let msg = format!("trajectory {} is not admissible", t.label());
            if !opts.allow_nongeneric {
                return Err(Error::GenericityViolation(msg));
            }
            violations.push(msg);
            continue;
        }
        if t.reduced_multiplicity() == n {
            mm.push(t);
        }
    }
    Ok(MMCensus::from_trajectories(n, mm, violations, incomplete))
}

fn through_all(flow: &Flow, points: &[Vec<f64>]) -> Result<Vec<Trajectory>> {
    points.par_iter().map(|p| flow.through(p)).collect()
}

/// Maximum-multiplicity trajectories of a planar scene: one through every
/// fold point of `∂₂X`.
pub fn count_mm_2d(scene: &Scene, opts: &CensusOptions) -> Result<MMCensus> {
    if scene.dim() != 2 {
        return Err(Error::InvalidInput("count_mm_2d needs a planar scene".into()));
    }
    let flow = Flow::new(scene, opts.flow)?;
    let sample = strata::find_strata(scene, 2, opts.seeds, &opts.strata)?;
    let points: Vec<Vec<f64>> = sample.points.iter().map(|p| p.location.clone()).collect();
    let found = through_all(&flow, &points)?;
    assemble(&flow, found, opts, !sample.nongeneric.is_empty())
}

/// Maximum-multiplicity trajectories of a 3D scene: `(31)`/`(13)` through
/// cusp points, and `(1221)` found by sweeping the fold curves for a second
/// tangency further along the flow.
pub fn count_mm_3d(scene: &Scene, opts: &CensusOptions) -> Result<MMCensus> {
    if scene.dim() != 3 {
        return Err(Error::InvalidInput("count_mm_3d needs a 3D scene".into()));
    }
    let flow = Flow::new(scene, opts.flow)?;
    let cusps = strata::find_strata(scene, 3, opts.seeds, &opts.strata)?;
    let points: Vec<Vec<f64>> = cusps.points.iter().map(|p| p.location.clone()).collect();
    let mut found = through_all(&flow, &points)?;

    let folds = strata::find_strata(scene, 2, opts.seeds, &opts.strata)?;
    let covered = folds.points.iter().all(|p| {
        folds
            .curves
            .iter()
            .any(|c| c.points.iter().any(|q| linalg::dist(q, &p.location) < 2.0 * opts.strata.step))
    });
    let roots = retouch_points(&flow, &folds.curves, opts);
    let mut double = through_all(&flow, &roots)?;
    double.retain(|t| t.reduced_multiplicity() >= 2);
    found.extend(double);
    assemble(&flow, found, opts, !covered || !cusps.nongeneric.is_empty())
}

/// Points of `∂₂X` curves whose forward trajectory is tangent to `∂X` again.
fn retouch_points(flow: &Flow, curves: &[Curve], opts: &CensusOptions) -> Vec<Vec<f64>> {
    let scene = flow.scene();
    let total: f64 = curves.iter().map(curve_length).sum();
    if total == 0.0 {
        return Vec::new();
    }
    let mut roots = Vec::new();
    for curve in curves {
        let len = curve_length(curve);
        let count = ((opts.sweep_samples as f64 * len / total).ceil() as usize).max(8);
        let params: Vec<f64> = (0..=count).map(|i| len * i as f64 / count as f64).collect();
        let g = |s: f64| -> Option<f64> {
            let p = point_on_curve(scene, curve, s)?;
            if !touches_inside(flow, curve.face, &p) {
                return None;
            }
            first_minimum(flow, &p, curve.face)
        };
        let values: Vec<Option<f64>> = params.par_iter().map(|&s| g(s)).collect();
        for i in 0..count {
            let (Some(a), Some(b)) = (values[i], values[i + 1]) else {
                continue;
            };
            if (a < 0.0) == (b < 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (params[i], params[i + 1]);
            let lo_neg = a < 0.0;
            let mut ok = true;
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                match g(mid) {
                    Some(v) if (v < 0.0) == lo_neg => lo = mid,
                    Some(_) => hi = mid,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                if let Some(p) = point_on_curve(scene, curve, 0.5 * (lo + hi)) {
                    roots.push(p);
                }
            }
        }
    }
    roots
}

fn curve_length(c: &Curve) -> f64 {
    let mut len: f64 = c.points.windows(2).map(|w| linalg::dist(&w[0], &w[1])).sum();
    if c.closed && c.points.len() > 1 {
        len += linalg::dist(&c.points[c.points.len() - 1], &c.points[0]);
    }
    len
}

/// Point at arclength `s`, projected back onto the fold system.
fn point_on_curve(scene: &Scene, c: &Curve, s: f64) -> Option<Vec<f64>> {
    let mut pts: Vec<&Vec<f64>> = c.points.iter().collect();
    if c.closed {
        pts.push(&c.points[0]);
    }
    let segments = pts.len().checked_sub(1)?;
    let mut acc = 0.0;
    for (k, w) in pts.windows(2).enumerate() {
        let seg = linalg::dist(w[0], w[1]);
        if acc + seg >= s || k + 1 == segments {
            let t = if seg > 0.0 { ((s - acc) / seg).clamp(0.0, 1.0) } else { 0.0 };
            let guess: Vec<f64> = w[0].iter().zip(w[1].iter()).map(|(a, b)| a + t * (b - a)).collect();
            return strata::newton_stack(scene, c.face, 2, &guess, 20);
        }
        acc += seg;
    }
    None
}

/// The fold point is an interior touch (`c₂ > 0`) and lies in `X`.
fn touches_inside(flow: &Flow, face: usize, p: &[f64]) -> bool {
    let scene = flow.scene();
    let c2 = scene.lie_value(face, 2, p);
    c2 > 0.0
        && (0..scene.face_count())
            .filter(|&j| j != face)
            .all(|j| scene.face_value(j, p) > 0.0)
}

/// Value of the first local minimum of any face function along the ambient
/// forward flow from `start`, ignoring the start itself. `None` when the flow
/// leaves the bounding box first.
fn first_minimum(flow: &Flow, start: &[f64], start_face: usize) -> Option<f64> {
    let scene = flow.scene();
    let opts = flow.options();
    let f = |y: &[f64]| scene.velocity(y);
    let suppress = 1e-6 * scene.diameter().max(1.0);
    let cap = flow::time_cap(scene).min(1e6);
    let mut x = start.to_vec();
    let mut t = 0.0;
    let max_step = |x: &[f64]| {
        opts.max_step_fraction * scene.diameter() / linalg::norm(&scene.velocity(x)).max(1e-300)
    };
    let mut h = 0.1 * max_step(&x);
    while t < cap {
        let hh = h.min(max_step(&x));
        let (x1, err) = ode::step(&f, &x, hh, opts.ode);
        if err > 1.0 {
            h = ode::next_step(hh, err.min(1e10)).min(0.5 * hh);
            if h < 1e-14 {
                return None;
            }
            continue;
        }
        let mut best: Option<(f64, f64)> = None;
        for face in 0..scene.face_count() {
            let d0 = scene.lie_value(face, 1, &x);
            let d1 = scene.lie_value(face, 1, &x1);
            if !(d0 < 0.0 && d1 >= 0.0) {
                continue;
            }
            let at = |s: f64| ode::step(&f, &x, s, opts.ode).0;
            let (mut lo, mut hi) = (0.0, hh);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if scene.lie_value(face, 1, &at(mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let xm = at(0.5 * (lo + hi));
            if face == start_face && linalg::dist(&xm, start) < suppress {
                continue;
            }
            let value = scene.face_value(face, &xm);
            if best.is_none_or(|(s, _)| lo < s) {
                best = Some((lo, value));
            }
        }
        if let Some((_, v)) = best {
            return Some(v);
        }
        if !scene.in_bounds(&x1, 0.0) {
            return None;
        }
        t += hh;
        x = x1;
        h = ode::next_step(hh, err);
    }
    None
}
