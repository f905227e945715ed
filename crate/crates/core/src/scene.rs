//! Scenes: a domain `X = {F_i ≥ 0 for every face i}` inside a bounding box,
//! together with a vector field `v`, and the flow jets of each face.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::halton::Halton;

/// `v^k F`, built by repeated directional differentiation.
pub fn lie_derivative(f: &ScalarExpr, field: &[ScalarExpr], k: usize) -> Result<ScalarExpr> {
    if k == 0 {
        return Err(Error::InvalidInput("lie derivative order must be ≥ 1".into()));
    }
    let mut current = f.clone();
    for _ in 0..k {
        current = current.along(field);
    }
    Ok(current)
}

/// Taylor coefficients of `t ↦ F(φ_t(a))` at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowJet {
    pub point: Vec<f64>,
    pub face: usize,
    /// `coeffs[j] = (v^j F)(a) / j!`
    pub coeffs: Vec<f64>,
}

impl FlowJet {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `max(1, ‖jet‖∞)`.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(1.0_f64, |m, c| m.max(c.abs()))
    }
}

/// On-disk scene description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub dim: usize,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<String>>,
    pub v: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
struct Face {
    /// `lie[k] = v^k F` for `k = 0..=jet_cap`.
    lie: Vec<ScalarExpr>,
    /// `grads[k] = ∇(v^k F)` for `k = 0..jet_cap`.
    grads: Vec<Vec<ScalarExpr>>,
}

/// Immutable scene with precomputed Lie derivatives up to order `dim + 2`.
#[derive(Debug, Clone)]
pub struct Scene {
    name: String,
    dim: usize,
    vars: Vec<String>,
    faces: Vec<Face>,
    field: Vec<ScalarExpr>,
    field_jacobian: Vec<Vec<ScalarExpr>>,
    bounds: Vec<(f64, f64)>,
}

pub const DEFAULT_VARS: [&str; 3] = ["x", "y", "z"];

impl Scene {
    pub fn new(
        name: impl Into<String>,
        faces: Vec<ScalarExpr>,
        field: Vec<ScalarExpr>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let dim = field.len();
        let vars = (0..dim)
            .map(|i| {
                DEFAULT_VARS
                    .get(i)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("x{i}"))
            })
            .collect();
        Self::with_vars(name, vars, faces, field, bounds)
    }

    pub fn with_vars(
        name: impl Into<String>,
        vars: Vec<String>,
        faces: Vec<ScalarExpr>,
        field: Vec<ScalarExpr>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let dim = field.len();
        if dim < 2 {
            return Err(Error::InvalidScene(format!("dimension {dim} < 2")));
        }
        if faces.is_empty() {
            return Err(Error::InvalidScene("no boundary faces".into()));
        }
        if vars.len() != dim {
            return Err(Error::InvalidScene(format!(
                "{} variable names for dimension {dim}",
                vars.len()
            )));
        }
        if bounds.len() != dim || bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidScene("bounds must give lo < hi per axis".into()));
        }
        for e in faces.iter().chain(field.iter()) {
            if let Some(i) = e.max_var() {
                if i >= dim {
                    return Err(Error::InvalidScene(format!("variable index {i} ≥ dim {dim}")));
                }
            }
        }
        let jet_cap = dim + 2;
        let faces = faces
            .into_iter()
            .map(|f| {
                let mut lie = vec![f];
                for k in 1..=jet_cap {
                    let next = lie[k - 1].along(&field);
                    lie.push(next);
                }
                let grads = lie[..jet_cap].iter().map(|e| e.gradient(dim)).collect();
                Face { lie, grads }
            })
            .collect();
        let field_jacobian = field.iter().map(|c| c.gradient(dim)).collect();
        Ok(Scene {
            name: name.into(),
            dim,
            vars,
            faces,
            field,
            field_jacobian,
            bounds,
        })
    }

    pub fn from_file_struct(file: &SceneFile) -> Result<Self> {
        if !(2..=3).contains(&file.dim) {
            return Err(Error::InvalidScene(format!(
                "dim must be 2 or 3, got {}",
                file.dim
            )));
        }
        if file.v.len() != file.dim {
            return Err(Error::InvalidScene(format!(
                "v has {} components for dim {}",
                file.v.len(),
                file.dim
            )));
        }
        let vars: Vec<String> = match &file.vars {
            Some(v) => v.clone(),
            None => DEFAULT_VARS[..file.dim].iter().map(|s| s.to_string()).collect(),
        };
        let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let face_src: Vec<String> = match (&file.f, &file.faces) {
            (Some(f), None) => vec![f.clone()],
            (None, Some(fs)) if !fs.is_empty() => fs.clone(),
            _ => {
                return Err(Error::InvalidScene(
                    "exactly one of \"F\" or a non-empty \"faces\" is required".into(),
                ))
            }
        };
        let faces = face_src
            .iter()
            .map(|s| ScalarExpr::parse(s, &var_refs))
            .collect::<Result<Vec<_>>>()?;
        let field = file
            .v
            .iter()
            .map(|s| ScalarExpr::parse(s, &var_refs))
            .collect::<Result<Vec<_>>>()?;
        let bounds = match &file.bounds {
            Some(b) => b.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
            None => vec![(-3.0, 3.0); file.dim],
        };
        Self::with_vars(
            file.name.clone().unwrap_or_else(|| "scene".into()),
            vars,
            faces,
            field,
            bounds,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        Self::from_file_struct(&file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The same domain with `-v`.
    pub fn reversed(&self) -> Result<Self> {
        Self::with_vars(
            self.name.clone(),
            self.vars.clone(),
            self.faces.iter().map(|f| f.lie[0].clone()).collect(),
            self.field.iter().map(|c| c.neg()).collect(),
            self.bounds.clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `n`, the dimension of the normal fiber of a trajectory.
    pub fn n(&self) -> usize {
        self.dim - 1
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn jet_cap(&self) -> usize {
        self.dim + 2
    }

    pub fn face_expr(&self, face: usize) -> &ScalarExpr {
        &self.faces[face].lie[0]
    }

    pub fn field(&self) -> &[ScalarExpr] {
        &self.field
    }

    /// `(v^k F_face)(x)`.
    pub fn lie_value(&self, face: usize, k: usize, x: &[f64]) -> f64 {
        let lie = &self.faces[face].lie;
        if k < lie.len() {
            lie[k].eval(x)
        } else {
            let mut e = lie[lie.len() - 1].clone();
            for _ in lie.len()..=k {
                e = e.along(&self.field);
            }
            e.eval(x)
        }
    }

    /// `∇(v^k F_face)(x)` for `k < jet_cap`.
    pub fn lie_gradient(&self, face: usize, k: usize, x: &[f64]) -> Vec<f64> {
        self.faces[face].grads[k].iter().map(|g| g.eval(x)).collect()
    }

    pub fn face_value(&self, face: usize, x: &[f64]) -> f64 {
        self.faces[face].lie[0].eval(x)
    }

    /// `min_i F_i(x)`; non-negative exactly on `X`.
    pub fn inside_value(&self, x: &[f64]) -> f64 {
        (0..self.faces.len())
            .map(|i| self.face_value(i, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Face with the smallest `|F_i(x)|`.
    pub fn nearest_face(&self, x: &[f64]) -> (usize, f64) {
        (0..self.faces.len())
            .map(|i| (i, self.face_value(i, x)))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("scene has faces")
    }

    pub fn velocity(&self, x: &[f64]) -> Vec<f64> {
        self.field.iter().map(|c| c.eval(x)).collect()
    }

    pub fn velocity_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.field_jacobian
            .iter()
            .map(|row| row.iter().map(|e| e.eval(x)).collect())
            .collect()
    }

    pub fn in_bounds(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(xi, (lo, hi))| *xi >= lo - slack && *xi <= hi + slack)
    }

    /// Diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn flow_jet(&self, face: usize, a: &[f64], k: usize) -> FlowJet {
        let mut factorial = 1.0;
        let coeffs = (0..=k)
            .map(|j| {
                if j > 0 {
                    factorial *= j as f64;
                }
                self.lie_value(face, j, a) / factorial
            })
            .collect();
        FlowJet {
            point: a.to_vec(),
            face,
            coeffs,
        }
    }

    /// Maps a unit-cube point into the bounding box.
    pub fn box_point(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.bounds)
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    /// Sampled regularity and non-vanishing checks over `samples`
    /// quasi-random points.
    pub fn sampled_checks(&self, samples: usize, tol: f64) -> SceneCheck {
        let mut halton = Halton::new(self.dim, 0);
        let mut check = SceneCheck::default();
        for _ in 0..samples {
            let x = self.box_point(&halton.next_point());
            if self.inside_value(&x) >= 0.0 {
                check.interior_samples += 1;
                let speed = self.velocity(&x).iter().map(|c| c * c).sum::<f64>().sqrt();
                check.min_speed = check.min_speed.min(speed);
                if speed <= tol {
                    check.vanishing_field.push(x.clone());
                }
            }
            for face in 0..self.faces.len() {
                if let Some(p) = self.project_to_face(face, &x, 30, 1e-12) {
                    if !self.in_bounds(&p, 0.0) || self.inside_value(&p) < -1e-9 {
                        continue;
                    }
                    check.boundary_samples += 1;
                    let g = self.lie_gradient(face, 0, &p);
                    let norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if norm <= tol {
                        check.singular_boundary.push(p);
                    }
                }
            }
        }
        if check.interior_samples == 0 {
            check.min_speed = f64::NAN;
        }
        check
    }

    /// Gradient-direction Newton projection onto `F_face = 0`.
    pub fn project_to_face(
        &self,
        face: usize,
        start: &[f64],
        iterations: usize,
        tol: f64,
    ) -> Option<Vec<f64>> {
        let mut x = start.to_vec();
        for _ in 0..iterations {
            let f = self.face_value(face, &x);
            if f.abs() < tol {
                return Some(x);
            }
            let g = self.lie_gradient(face, 0, &x);
            let g2: f64 = g.iter().map(|c| c * c).sum();
            if g2 < 1e-300 || !g2.is_finite() {
                return None;
            }
            let step = f / g2;
            let scale = self.diameter();
            let len = step.abs() * g2.sqrt();
            let damp = if len > 0.25 * scale { 0.25 * scale / len } else { 1.0 };
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= damp * step * gi;
            }
        }
        (self.face_value(face, &x).abs() < tol).then_some(x)
    }

    /// Minimum sampled `|v|` over interior points, used by the time cap.
    pub fn min_sampled_speed(&self, samples: usize) -> f64 {
        let mut halton = Halton::new(self.dim, 7);
        let mut min = f64::INFINITY;
        for _ in 0..samples {
            let x = self.box_point(&halton.next_point());
            if self.inside_value(&x) >= 0.0 {
                let speed = self.velocity(&x).iter().map(|c| c * c).sum::<f64>().sqrt();
                min = min.min(speed);
            }
        }
        min
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneCheck {
    pub interior_samples: usize,
    pub boundary_samples: usize,
    pub min_speed: f64,
    pub vanishing_field: Vec<Vec<f64>>,
    pub singular_boundary: Vec<Vec<f64>>,
}

impl Default for SceneCheck {
    fn default() -> Self {
        SceneCheck {
            interior_samples: 0,
            boundary_samples: 0,
            min_speed: f64::INFINITY,
            vanishing_field: Vec::new(),
            singular_boundary: Vec::new(),
        }
    }
}

impl SceneCheck {
    pub fn passed(&self) -> bool {
        self.vanishing_field.is_empty() && self.singular_boundary.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ScalarExpr {
        ScalarExpr::parse(s, &DEFAULT_VARS[..2]).unwrap()
    }

    fn disk() -> Scene {
        Scene::new(
            "disk",
            vec![parse("1 - x^2 - y^2")],
            vec![parse("0"), parse("1")],
            vec![(-1.5, 1.5); 2],
        )
        .unwrap()
    }

    #[test]
    fn lie_derivatives_of_local_model() {
        let vars = ["u", "x0"];
        let f = ScalarExpr::parse("u^2 + x0", &vars).unwrap();
        let v = vec![ScalarExpr::constant(1.0), ScalarExpr::constant(0.0)];
        let d1 = lie_derivative(&f, &v, 1).unwrap();
        let d2 = lie_derivative(&f, &v, 2).unwrap();
        assert_eq!(d1.eval(&[0.7, 3.0]), 1.4);
        assert_eq!(d2.as_const(), Some(2.0));
        assert!(lie_derivative(&f, &v, 0).is_err());
    }

    #[test]
    fn rotation_preserves_circle() {
        let f = parse("x^2 + y^2 - 1");
        let v = vec![parse("-y"), parse("x")];
        let d1 = lie_derivative(&f, &v, 1).unwrap();
        for p in [[0.3, 0.2], [-1.0, 2.0], [5.0, -0.5]] {
            assert_eq!(d1.eval(&p), 0.0);
        }
    }

    #[test]
    fn disk_lie_derivatives() {
        let f = parse("1 - x^2 - y^2");
        let v = vec![parse("0"), parse("1")];
        assert_eq!(lie_derivative(&f, &v, 1).unwrap().eval(&[0.2, 0.5]), -1.0);
        assert_eq!(lie_derivative(&f, &v, 2).unwrap().as_const(), Some(-2.0));
    }

    #[test]
    fn jets() {
        let s = disk();
        assert_eq!(s.flow_jet(0, &[1.0, 0.0], 2).coeffs, vec![0.0, 0.0, -1.0]);
        let vars = ["u", "x0", "x1"];
        let f = ScalarExpr::parse("u^3 + x1*u + x0", &vars).unwrap();
        let one = ScalarExpr::constant(1.0);
        let zero = ScalarExpr::constant(0.0);
        let s3 = Scene::with_vars(
            "p3",
            vars.iter().map(|s| s.to_string()).collect(),
            vec![f],
            vec![one, zero.clone(), zero],
            vec![(-1.0, 1.0); 3],
        )
        .unwrap();
        assert_eq!(s3.flow_jet(0, &[0.0; 3], 3).coeffs, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn scene_json_validation() {
        let s = Scene::from_json(r#"{"dim":2,"F":"1 - x^2 - y^2","v":["0","1"]}"#).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(Scene::from_json(r#"{"dim":2,"F":"1 - x^2","v":["0"]}"#).is_err());
        assert!(Scene::from_json(r#"{"dim":4,"F":"1","v":["0","1","0","0"]}"#).is_err());
        assert!(Scene::from_json(r#"{"dim":2,"v":["0","1"]}"#).is_err());
        assert!(Scene::from_json(r#"{"dim":2,"F":"1 - w","v":["0","1"]}"#).is_err());
        assert!(Scene::from_json("{not json").is_err());
    }

    #[test]
    fn sampled_checks_on_disk() {
        let check = disk().sampled_checks(2000, 1e-9);
        assert!(check.passed());
        assert!(check.boundary_samples > 0 && check.interior_samples > 0);
        let bad = Scene::new(
            "sink",
            vec![parse("1 - x^2 - y^2")],
            vec![parse("x"), parse("y")],
            vec![(-1.5, 1.5); 2],
        )
        .unwrap();
        // v vanishes at the origin; samples near it fall under the tolerance.
        let check = bad.sampled_checks(2000, 0.1);
        assert!(!check.vanishing_field.is_empty());
    }
}
