//! Iterated tangency loci `∂ₖX = {F = vF = … = v^{k-1}F = 0}`, point
//! multiplicities, and boundary-genericity certificates.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halton::Halton;
use crate::linalg;
use crate::scene::Scene;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEDUP_RADIUS: f64 = 1e-4;
pub const CONTINUATION_STEP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyPoint {
    pub location: Vec<f64>,
    pub face: usize,
    pub multiplicity: usize,
    /// `max |c_j|` for `j < m`.
    pub residual: f64,
    /// `c_m`
    pub leading: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StratumSample {
    pub depth: usize,
    pub points: Vec<TangencyPoint>,
    /// Continuation polylines, one per traced component (3D, depth 2).
    pub curves: Vec<Curve>,
    /// Converged points with a singular stacked Jacobian or a degenerate jet.
    pub nongeneric: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub face: usize,
    pub points: Vec<Vec<f64>>,
    pub closed: bool,
}

/// Multiplicity of `a` with respect to one face; 0 when `a` is off that face.
pub fn face_multiplicity(scene: &Scene, face: usize, a: &[f64], tol: f64) -> Result<TangencyPoint> {
    let jet = scene.flow_jet(face, a, scene.jet_cap());
    let scale = jet.scale();
    let threshold = tol * scale;
    let c = &jet.coeffs;
    if c[0].abs() >= tol {
        return Ok(TangencyPoint {
            location: a.to_vec(),
            face,
            multiplicity: 0,
            residual: c[0].abs(),
            leading: c[0],
        });
    }
    let m = (1..c.len()).find(|&j| c[j].abs() >= threshold);
    match m {
        Some(m) if m <= scene.dim() => Ok(TangencyPoint {
            location: a.to_vec(),
            face,
            multiplicity: m,
            residual: c[..m].iter().fold(0.0_f64, |r, x| r.max(x.abs())),
            leading: c[m],
        }),
        _ => Err(Error::DegenerateTangency {
            point: a.to_vec(),
            jet: jet.coeffs,
        }),
    }
}

/// Multiplicity at `a` with respect to the face closest to `a`.
pub fn point_multiplicity(scene: &Scene, a: &[f64], tol: f64) -> Result<usize> {
    let (face, _) = scene.nearest_face(a);
    Ok(face_multiplicity(scene, face, a, tol)?.multiplicity)
}

fn stacked(scene: &Scene, face: usize, k: usize, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let values = (0..k).map(|j| scene.lie_value(face, j, x)).collect();
    let rows = (0..k).map(|j| scene.lie_gradient(face, j, x)).collect();
    (values, rows)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped minimum-norm Newton on the stacked system of depth `k`.
pub(crate) fn newton_stack(
    scene: &Scene,
    face: usize,
    k: usize,
    start: &[f64],
    iterations: usize,
) -> Option<Vec<f64>> {
    let mut x = start.to_vec();
    let max_step = 0.25 * scene.diameter();
    for _ in 0..iterations {
        let (g, rows) = stacked(scene, face, k, &x);
        let r0 = max_abs(&g);
        if !r0.is_finite() {
            return None;
        }
        if r0 < 1e-14 {
            return Some(x);
        }
        let mut step = linalg::min_norm_solve(&rows, &g)?;
        let len = linalg::norm(&step);
        if len > max_step {
            step.iter_mut().for_each(|s| *s *= max_step / len);
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - lambda * s).collect();
            let (gt, _) = stacked(scene, face, k, &trial);
            if max_abs(&gt) < r0 || lambda < 1e-6 {
                x = trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
        if linalg::norm(&step) * lambda < 1e-15 * (1.0 + linalg::norm(&x)) {
            break;
        }
    }
    let (g, _) = stacked(scene, face, k, &x);
    (max_abs(&g) < 1e-9).then_some(x)
}

/// Options for [`find_strata`].
#[derive(Debug, Clone)]
pub struct StrataOptions {
    pub tol: f64,
    pub dedup_radius: f64,
    pub seed: u64,
    /// Trace `∂₂X` curves in 3D by continuation.
    pub trace_curves: bool,
    pub step: f64,
}

impl Default for StrataOptions {
    fn default() -> Self {
        StrataOptions {
            tol: DEFAULT_TOL,
            dedup_radius: DEDUP_RADIUS,
            seed: 0,
            trace_curves: true,
            step: CONTINUATION_STEP,
        }
    }
}

/// Samples `∂ₖX` by Newton's method from quasi-random seeds.
pub fn find_strata(scene: &Scene, k: usize, seed_count: usize, opts: &StrataOptions) -> Result<StratumSample> {
    if k == 0 || k > scene.dim() {
        return Err(Error::InvalidInput(format!(
            "depth {k} outside 1..={}",
            scene.dim()
        )));
    }
    let mut halton = Halton::new(scene.dim(), opts.seed);
    let seeds: Vec<Vec<f64>> = (0..seed_count)
        .map(|_| scene.box_point(&halton.next_point()))
        .collect();

    let mut candidates: Vec<(usize, Vec<f64>)> = (0..scene.face_count())
        .flat_map(|face| seeds.iter().map(move |s| (face, s.clone())))
        .collect::<Vec<_>>()
        .into_par_iter()
        .filter_map(|(face, seed)| {
            // Land on the face first so the stacked solve starts near ∂X.
            let on_face = scene.project_to_face(face, &seed, 40, 1e-12).unwrap_or(seed);
            let x = newton_stack(scene, face, k, &on_face, 60)?;
            accept(scene, face, &x, opts.tol).then_some((face, x))
        })
        .collect();

    // Smallest residual first so dedup keeps the best representative.
    let residual = |(face, x): &(usize, Vec<f64>)| max_abs(&stacked(scene, *face, k, x).0);
    candidates.sort_by(|a, b| residual(a).total_cmp(&residual(b)));

    let mut sample = StratumSample {
        depth: k,
        ..Default::default()
    };
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for (face, x) in candidates {
        if kept.iter().any(|p| linalg::dist(p, &x) < opts.dedup_radius) {
            continue;
        }
        kept.push(x.clone());
        let (_, rows) = stacked(scene, face, k, &x);
        let singular = linalg::smallest_singular_value(&rows) < opts.tol;
        match face_multiplicity(scene, face, &x, opts.tol) {
            Ok(tp) if !singular => sample.points.push(tp),
            _ => sample.nongeneric.push(x),
        }
    }
    sample
        .points
        .sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap_or(std::cmp::Ordering::Equal));
    sample.nongeneric.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    if opts.trace_curves && k + 1 == scene.dim() && k >= 2 {
        sample.curves = trace_components(
            scene,
            k,
            sample.points.iter().map(|p| (p.face, p.location.clone())).collect(),
            opts,
        );
    }
    Ok(sample)
}

fn accept(scene: &Scene, face: usize, x: &[f64], tol: f64) -> bool {
    scene.in_bounds(x, 1e-9)
        && (0..scene.face_count())
            .filter(|&j| j != face)
            .all(|j| scene.face_value(j, x) > tol)
}

/// Traces every curve component of the depth-`k` system through `seeds`,
/// where `k = dim - 1`. Seeds already covered by a traced curve are skipped.
pub fn trace_components(
    scene: &Scene,
    k: usize,
    seeds: Vec<(usize, Vec<f64>)>,
    opts: &StrataOptions,
) -> Vec<Curve> {
    let mut curves: Vec<Curve> = Vec::new();
    for (face, seed) in seeds {
        let covered = curves.iter().any(|c| {
            c.face == face && c.points.iter().any(|p| linalg::dist(p, &seed) < 2.0 * opts.step)
        });
        if covered {
            continue;
        }
        if let Some(curve) = trace_curve(scene, face, k, &seed, opts) {
            curves.push(curve);
        }
    }
    curves
}

/// Pseudo-arclength continuation of the curve `{v^j F = 0, j < k}` with
/// `k = dim - 1`, starting at `start` and running both ways unless it closes.
pub fn trace_curve(
    scene: &Scene,
    face: usize,
    k: usize,
    start: &[f64],
    opts: &StrataOptions,
) -> Option<Curve> {
    if k + 1 != scene.dim() {
        return None;
    }
    let x0 = newton_stack(scene, face, k, start, 30)?;
    let (_, rows) = stacked(scene, face, k, &x0);
    let t0 = linalg::null_direction(&rows)?;
    let (forward, closed) = march(scene, face, k, &x0, &t0, opts);
    if closed {
        return Some(Curve {
            face,
            points: forward,
            closed: true,
        });
    }
    let back_dir: Vec<f64> = t0.iter().map(|c| -c).collect();
    let (backward, _) = march(scene, face, k, &x0, &back_dir, opts);
    let mut points: Vec<Vec<f64>> = backward.into_iter().skip(1).rev().collect();
    points.extend(forward);
    Some(Curve {
        face,
        points,
        closed: false,
    })
}

fn march(
    scene: &Scene,
    face: usize,
    k: usize,
    x0: &[f64],
    dir0: &[f64],
    opts: &StrataOptions,
) -> (Vec<Vec<f64>>, bool) {
    let mut points = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    let mut dir = dir0.to_vec();
    let mut travelled = 0.0;
    let max_steps = (200.0 * scene.diameter() / opts.step) as usize + 1000;
    for _ in 0..max_steps {
        let mut h = opts.step;
        let next = loop {
            let pred: Vec<f64> = x.iter().zip(&dir).map(|(a, t)| a + h * t).collect();
            if let Some(c) = corrector(scene, face, k, &pred) {
                if linalg::dist(&c, &x) < 2.0 * h {
                    break Some(c);
                }
            }
            h *= 0.5;
            if h < 1e-6 {
                break None;
            }
        };
        let Some(next) = next else {
            return (points, false);
        };
        travelled += linalg::dist(&next, &x);
        if !scene.in_bounds(&next, 0.0) || !inside_other_faces(scene, face, &next, opts.tol) {
            return (points, false);
        }
        if travelled > 3.0 * opts.step && linalg::dist(&next, x0) < 0.75 * opts.step {
            return (points, true);
        }
        let (_, rows) = stacked(scene, face, k, &next);
        let Some(mut t) = linalg::null_direction(&rows) else {
            return (points, false);
        };
        if linalg::dot(&t, &dir) < 0.0 {
            t.iter_mut().for_each(|c| *c = -*c);
        }
        dir = t;
        x = next;
        points.push(x.clone());
    }
    (points, false)
}

fn inside_other_faces(scene: &Scene, face: usize, x: &[f64], tol: f64) -> bool {
    (0..scene.face_count())
        .filter(|&j| j != face)
        .all(|j| scene.face_value(j, x) >= -tol)
}

fn corrector(scene: &Scene, face: usize, k: usize, pred: &[f64]) -> Option<Vec<f64>> {
    let mut x = pred.to_vec();
    for _ in 0..12 {
        let (g, rows) = stacked(scene, face, k, &x);
        if max_abs(&g) < 1e-13 {
            return Some(x);
        }
        let step = linalg::min_norm_solve(&rows, &g)?;
        x.iter_mut().zip(&step).for_each(|(a, s)| *a -= s);
    }
    let (g, _) = stacked(scene, face, k, &x);
    (max_abs(&g) < 1e-10).then_some(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct GenericPointReport {
    pub location: Vec<f64>,
    pub sigma_min: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryGenericReport {
    pub depth: usize,
    pub tol: f64,
    pub points: Vec<GenericPointReport>,
}

impl BoundaryGenericReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.passed)
    }
}

/// Rank test of `∇(F, vF, …, v^{k-1}F)` at a single point.
pub fn check_point_generic(scene: &Scene, face: usize, k: usize, x: &[f64], tol: f64) -> GenericPointReport {
    let (_, rows) = stacked(scene, face, k, x);
    let sigma_min = linalg::smallest_singular_value(&rows);
    GenericPointReport {
        location: x.to_vec(),
        sigma_min,
        passed: sigma_min >= tol,
    }
}

pub fn check_boundary_generic(scene: &Scene, sample: &StratumSample, tol: f64) -> BoundaryGenericReport {
    let mut points: Vec<GenericPointReport> = sample
        .points
        .iter()
        .map(|p| check_point_generic(scene, p.face, sample.depth, &p.location, tol))
        .collect();
    points.extend(sample.nongeneric.iter().map(|x| {
        let (face, _) = scene.nearest_face(x);
        check_point_generic(scene, face, sample.depth, x, tol)
    }));
    BoundaryGenericReport {
        depth: sample.depth,
        tol,
        points,
    }
}

/// CSV with columns `x,y(,z),k,m,residual`.
pub fn strata_csv(samples: &[StratumSample], dim: usize) -> String {
    let mut out = String::new();
    let axes = ["x", "y", "z"];
    out.push_str(&axes[..dim].join(","));
    out.push_str(",k,m,residual\n");
    for s in samples {
        for p in &s.points {
            for c in &p.location {
                let _ = write!(out, "{c:.12},");
            }
            let _ = writeln!(out, "{},{},{:.3e}", s.depth, p.multiplicity, p.residual);
        }
    }
    out
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

    #[test]
    fn disk_multiplicities() {
        let s = disk();
        assert_eq!(point_multiplicity(&s, &[0.0, -1.0], DEFAULT_TOL).unwrap(), 1);
        assert_eq!(point_multiplicity(&s, &[1.0, 0.0], DEFAULT_TOL).unwrap(), 2);
        assert_eq!(point_multiplicity(&s, &[0.0, 0.0], DEFAULT_TOL).unwrap(), 0);
    }

    #[test]
    fn quartic_contact_is_degenerate() {
        let s = scene2(&["1 - x^2 - y^4"], ["0", "1"], 1.5);
        match point_multiplicity(&s, &[1.0, 0.0], DEFAULT_TOL) {
            Err(Error::DegenerateTangency { jet, .. }) => {
                assert_eq!(&jet[..4], &[0.0, 0.0, 0.0, 0.0]);
                assert_eq!(jet[4], -1.0);
            }
            other => panic!("expected degenerate tangency, got {other:?}"),
        }
    }

    #[test]
    fn disk_fold_points() {
        let s = disk();
        let sample = find_strata(&s, 2, 64, &StrataOptions::default()).unwrap();
        let locs: Vec<_> = sample.points.iter().map(|p| p.location.clone()).collect();
        assert_eq!(locs.len(), 2);
        assert!(linalg::dist(&locs[0], &[-1.0, 0.0]) < 1e-10);
        assert!(linalg::dist(&locs[1], &[1.0, 0.0]) < 1e-10);
        assert!(sample.points.iter().all(|p| p.multiplicity == 2));
        let report = check_boundary_generic(&s, &sample, DEFAULT_TOL);
        assert!(report.passed());
    }

    #[test]
    fn annulus_fold_points() {
        let s = scene2(&["(x^2 + y^2 - 1)*(4 - x^2 - y^2)"], ["0", "1"], 2.5);
        let sample = find_strata(&s, 2, 256, &StrataOptions::default()).unwrap();
        let mut xs: Vec<f64> = sample.points.iter().map(|p| p.location[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs.len(), 4, "{xs:?}");
        for (x, want) in xs.iter().zip([-2.0, -1.0, 1.0, 2.0]) {
            assert!((x - want).abs() < 1e-9);
        }
        assert!(sample.points.iter().all(|p| p.location[1].abs() < 1e-9));
    }

    #[test]
    fn local_model_121_fold() {
        let vars = ["u", "x2"];
        let p = |s: &str| ScalarExpr::parse(s, &vars).unwrap();
        let s = Scene::with_vars(
            "121",
            vars.iter().map(|v| v.to_string()).collect(),
            vec![p("u - 1"), p("(u - 2)^2 + x2"), p("3 - u")],
            vec![p("1"), p("0")],
            vec![(0.0, 4.0), (-1.0, 1.0)],
        )
        .unwrap();
        let sample = find_strata(&s, 2, 128, &StrataOptions::default()).unwrap();
        assert_eq!(sample.points.len(), 1);
        assert!(linalg::dist(&sample.points[0].location, &[2.0, 0.0]) < 1e-10);
    }

    #[test]
    fn quartic_contact_fails_generic_check() {
        let s = scene2(&["1 - x^2 - y^4"], ["0", "1"], 1.5);
        let r = check_point_generic(&s, 0, 2, &[1.0, 0.0], DEFAULT_TOL);
        assert!(!r.passed);
        let r = check_point_generic(&s, 0, 1, &[1.0, 0.0], DEFAULT_TOL);
        assert!(r.passed);
    }

    #[test]
    fn doubling_seeds_is_stable() {
        let s = scene2(&["(x^2 + y^2 - 1)*(4 - x^2 - y^2)"], ["0", "1"], 2.5);
        let a = find_strata(&s, 2, 256, &StrataOptions::default()).unwrap();
        let b = find_strata(&s, 2, 512, &StrataOptions::default()).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!(linalg::dist(&p.location, &q.location) < DEDUP_RADIUS);
        }
    }

    #[test]
    fn nesting() {
        let s = scene2(&["(x^2 + y^2 - 1)*(4 - x^2 - y^2)"], ["0", "1"], 2.5);
        let deep = find_strata(&s, 2, 256, &StrataOptions::default()).unwrap();
        for p in &deep.points {
            assert!(s.face_value(0, &p.location).abs() < DEFAULT_TOL);
        }
    }

    #[test]
    fn csv_columns() {
        let s = disk();
        let sample = find_strata(&s, 2, 64, &StrataOptions::default()).unwrap();
        let csv = strata_csv(&[sample], 2);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,k,m,residual"));
        assert_eq!(lines.count(), 2);
    }
}
