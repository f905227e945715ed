//! Stratum labels on simplices and the four stratified-cycle conditions:
//! cellular, ord, int and loop.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strata with the closure order `S ≤ T` iff `S ⊆ T̄`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    pub names: Vec<String>,
    pub dims: Vec<usize>,
    below: Vec<Vec<bool>>,
}

impl Stratification {
    /// Builds the order from cover pairs `(lower, upper)`, closing it
    /// transitively; cycles are rejected.
    pub fn new(names: Vec<String>, dims: Vec<usize>, covers: &[(usize, usize)]) -> Result<Self> {
        let n = names.len();
        if dims.len() != n {
            return Err(Error::InvalidInput("one dimension per stratum".into()));
        }
        let mut below = vec![vec![false; n]; n];
        for (i, row) in below.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in covers {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!("order pair ({a}, {b}) names a missing stratum")));
            }
            below[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if below[i][k] {
                    for j in 0..n {
                        if below[k][j] {
                            below[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if below[i][j] && below[j][i] {
                    return Err(Error::InvalidInput(format!("strata {} and {} precede each other", names[i], names[j])));
                }
            }
        }
        Ok(Stratification { names, dims, below })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        self.below[a][b]
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.below[a][b] || self.below[b][a]
    }

    pub fn is_chain(&self, set: &BTreeSet<usize>) -> bool {
        set.iter().all(|&a| set.iter().all(|&b| self.comparable(a, b)))
    }

    /// The plane cut by three rays from the origin: `O`, rays `R1, R2, R3`
    /// and the open sectors `Q12, Q23, Q31` between them.
    pub fn three_rays() -> Self {
        let names = ["O", "R1", "R2", "R3", "Q12", "Q23", "Q31"].map(String::from).to_vec();
        let covers = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 6), (2, 4), (2, 5), (3, 5), (3, 6)];
        Stratification::new(names, vec![0, 1, 1, 1, 2, 2, 2], &covers).expect("valid order")
    }
}

/// One singular simplex of a cycle, described by the strata met by the
/// image of each open face. Faces are vertex bitmasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexLabels {
    pub name: String,
    pub dim: usize,
    pub faces: BTreeMap<u32, BTreeSet<usize>>,
    /// Image point of each vertex, when known; used by the loop condition.
    pub points: Option<Vec<String>>,
    /// Edges `(a, b)` whose image is a constant path.
    pub constant_edges: BTreeSet<(usize, usize)>,
}

impl SimplexLabels {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        SimplexLabels {
            name: name.into(),
            dim,
            faces: BTreeMap::new(),
            points: None,
            constant_edges: BTreeSet::new(),
        }
    }

    /// Labels the open face spanned by `vertices`.
    pub fn label(mut self, vertices: &[usize], strata: &[usize]) -> Self {
        let mask = vertices.iter().fold(0u32, |m, &v| m | 1 << v);
        self.faces.insert(mask, strata.iter().copied().collect());
        self
    }

    fn all_faces(&self) -> impl Iterator<Item = u32> {
        1..(1u32 << (self.dim + 1))
    }
}

pub fn face_name(mask: u32) -> String {
    (0..32).filter(|v| mask & (1 << v) != 0).map(|v| v.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Cellular,
    Ord,
    Int,
    Loop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub face: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimplexVerdict {
    pub name: String,
    pub violations: Vec<Violation>,
}

impl SimplexVerdict {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, c: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == c)
    }
}

/// A labelled cycle: the stratification and per-simplex face labels.
#[derive(Debug, Clone)]
pub struct StratLabel {
    pub strata: Stratification,
    pub simplices: Vec<SimplexLabels>,
}

pub fn check_simplex(strata: &Stratification, s: &SimplexLabels) -> Result<SimplexVerdict> {
    let mut violations = Vec::new();
    for mask in s.all_faces() {
        match s.faces.get(&mask) {
            None => {
                return Err(Error::InvalidInput(format!("simplex {}: face {} is unlabeled", s.name, face_name(mask))));
            }
            Some(set) if set.is_empty() || set.iter().any(|&x| x >= strata.len()) => {
                return Err(Error::InvalidInput(format!("simplex {}: face {} has a bad label", s.name, face_name(mask))));
            }
            _ => {}
        }
    }
    let label = |mask: u32| &s.faces[&mask];
    let names = |set: &BTreeSet<usize>| set.iter().map(|&i| strata.names[i].as_str()).collect::<Vec<_>>().join(",");

    for mask in s.all_faces() {
        if label(mask).len() > 1 {
            violations.push(Violation {
                condition: Condition::Cellular,
                face: face_name(mask),
                detail: format!("open face meets {}", names(label(mask))),
            });
        }
    }

    let all: BTreeSet<usize> = s.faces.values().flatten().copied().collect();
    if !strata.is_chain(&all) {
        violations.push(Violation {
            condition: Condition::Ord,
            face: face_name((1 << (s.dim + 1)) - 1),
            detail: format!("image meets {}, which is not a chain", names(&all)),
        });
    }

    for mask in s.all_faces().filter(|m| m.count_ones() >= 2) {
        let boundary: BTreeSet<usize> = s
            .all_faces()
            .filter(|&f| f != mask && f & mask == f)
            .flat_map(|f| label(f).iter().copied())
            .collect();
        if boundary.len() == 1 && label(mask) != &boundary {
            violations.push(Violation {
                condition: Condition::Int,
                face: face_name(mask),
                detail: format!("boundary lies in {} but the face meets {}", names(&boundary), names(label(mask))),
            });
        }
    }

    if let Some(points) = &s.points {
        if points.len() != s.dim + 1 {
            return Err(Error::InvalidInput(format!("simplex {}: one point per vertex", s.name)));
        }
        for a in 0..=s.dim {
            for b in a + 1..=s.dim {
                if points[a] == points[b] && !s.constant_edges.contains(&(a, b)) {
                    violations.push(Violation {
                        condition: Condition::Loop,
                        face: face_name(1 << a | 1 << b),
                        detail: format!("both ends map to {} but the edge is not constant", points[a]),
                    });
                }
            }
        }
    }
    Ok(SimplexVerdict { name: s.name.clone(), violations })
}

pub fn check_stratified_cycle(labels: &StratLabel) -> Result<Vec<SimplexVerdict>> {
    labels.simplices.par_iter().map(|s| check_simplex(&labels.strata, s)).collect()
}

/// Barycentric subdivision of a cellular simplex. New simplices follow the
/// maximal flags `F₀ ⊂ … ⊂ F_d`; the open face spanned by a sub-flag lies
/// in the open interior of its largest member and inherits its label.
pub fn subdivide(s: &SimplexLabels) -> Result<Vec<SimplexLabels>> {
    if s.faces.values().any(|l| l.len() != 1) {
        return Err(Error::InvalidInput(format!("simplex {} is not cellular; barycenters have no stratum", s.name)));
    }
    let d = s.dim;
    let mut out = Vec::new();
    for perm in permutations(d + 1) {
        let mut flag = Vec::with_capacity(d + 1);
        let mut mask = 0u32;
        for &v in &perm {
            mask |= 1 << v;
            flag.push(mask);
        }
        let mut t = SimplexLabels::new(format!("{}.{}", s.name, perm.iter().map(|v| v.to_string()).collect::<String>()), d);
        for sub in 1u32..(1 << (d + 1)) {
            let top = (0..=d).rev().find(|&i| sub & (1 << i) != 0).expect("nonempty");
            t.faces.insert(sub, s.faces[&flag[top]].clone());
        }
        out.push(t);
    }
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// The six 2-simplex diagrams over [`Stratification::three_rays`]:
/// (a) a triangle inside one sector; (b) an edge along `R1` with the third
/// vertex in `Q12`; (c) as (b) with one end of the edge at `O`; (d) vertices
/// on `R1` and `R2`; (e) an edge with both ends on `R1` that bulges into
/// `Q12`; (f) an edge running partly along `R1` and partly through `Q12`.
pub fn three_ray_diagrams() -> Vec<SimplexLabels> {
    let st = Stratification::three_rays();
    let id = |n: &str| st.index(n).expect("stratum");
    let (o, r1, r2, q12) = (id("O"), id("R1"), id("R2"), id("Q12"));
    let base = |name: &str| {
        SimplexLabels::new(name, 2)
            .label(&[0, 2], &[q12])
            .label(&[1, 2], &[q12])
            .label(&[0, 1, 2], &[q12])
            .label(&[2], &[q12])
    };
    vec![
        base("a").label(&[0], &[q12]).label(&[1], &[q12]).label(&[0, 1], &[q12]),
        base("b").label(&[0], &[r1]).label(&[1], &[r1]).label(&[0, 1], &[r1]),
        base("c").label(&[0], &[o]).label(&[1], &[r1]).label(&[0, 1], &[r1]),
        base("d").label(&[0], &[r1]).label(&[1], &[r2]).label(&[0, 1], &[q12]),
        base("e").label(&[0], &[r1]).label(&[1], &[r1]).label(&[0, 1], &[q12]),
        base("f").label(&[0], &[r1]).label(&[1], &[q12]).label(&[0, 1], &[r1, q12]),
    ]
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelFile {
    strata: Vec<StratumEntry>,
    #[serde(default)]
    order: Vec<(String, String)>,
    simplices: Vec<SimplexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StratumEntry {
    name: String,
    dim: usize,
}

/// Face keys are vertex digit strings such as `"02"`.
#[derive(Debug, Serialize, Deserialize)]
struct SimplexEntry {
    name: String,
    dim: usize,
    faces: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    points: Option<Vec<String>>,
    #[serde(default)]
    constant_edges: Vec<(usize, usize)>,
}

/// Parses a labelled cycle from JSON.
pub fn parse_strat_labels(text: &str) -> Result<StratLabel> {
    let file: LabelFile = serde_json::from_str(text)?;
    let names: Vec<String> = file.strata.iter().map(|s| s.name.clone()).collect();
    let lookup = |n: &str| {
        names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stratum {n:?}")))
    };
    let covers = file
        .order
        .iter()
        .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
        .collect::<Result<Vec<_>>>()?;
    let strata = Stratification::new(names.clone(), file.strata.iter().map(|s| s.dim).collect(), &covers)?;
    let mut simplices = Vec::new();
    for e in file.simplices {
        if e.dim > 8 {
            return Err(Error::InvalidInput(format!("simplex {}: dimension {} is too large", e.name, e.dim)));
        }
        let mut s = SimplexLabels::new(e.name.clone(), e.dim);
        for (key, labels) in &e.faces {
            let mut mask = 0u32;
            for ch in key.chars() {
                let v = ch
                    .to_digit(10)
                    .filter(|&v| (v as usize) <= e.dim)
                    .ok_or_else(|| Error::InvalidInput(format!("simplex {}: bad face key {key:?}", e.name)))?;
                mask |= 1 << v;
            }
            let set = labels.iter().map(|n| lookup(n)).collect::<Result<BTreeSet<_>>>()?;
            s.faces.insert(mask, set);
        }
        s.points = e.points;
        s.constant_edges = e.constant_edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        simplices.push(s);
    }
    Ok(StratLabel { strata, simplices })
}
