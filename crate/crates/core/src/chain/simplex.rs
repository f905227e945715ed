//! Group-labelled simplices and chains with exact rational coefficients.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::group::{Elem, Group};
use crate::error::{Error, Result};

/// A simplex recorded by its vertex ids and a lift `h₀ = e, h₁, …, h_j` of
/// its vertices; the edge label from position `a` to `b` is `h_a⁻¹ h_b`.
/// `shape` distinguishes singular simplices with the same lift data; it is
/// dropped by straightening.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledSimplex {
    pub vertices: Vec<u32>,
    pub lift: Vec<Elem>,
    pub shape: Option<Shape>,
}

/// A named singular simplex `σ` precomposed with the affine map sending
/// vertex `a` to vertex `map[a]` of `σ`; faces and permutations act on `map`,
/// so `∂∂ = 0` and the symmetric-group action hold for shaped simplices too.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Shape {
    pub name: String,
    pub map: Vec<usize>,
}

impl Shape {
    /// Parses `name` (identity map) or `name@i,j,…`.
    pub fn parse(text: &str, k: usize) -> Result<Self> {
        let (name, map) = match text.split_once('@') {
            None => (text, (0..k).collect()),
            Some((name, rest)) => {
                let map = rest
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::MalformedSimplex(format!("bad shape {text:?}")))?;
                (name, map)
            }
        };
        if map.len() != k {
            return Err(Error::MalformedSimplex(format!("shape {text:?} does not fit {k} vertices")));
        }
        Ok(Shape { name: name.to_string(), map })
    }

    fn select(&self, positions: &[usize]) -> Self {
        Shape {
            name: self.name.clone(),
            map: positions.iter().map(|&p| self.map[p]).collect(),
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.map.iter().enumerate().all(|(a, &m)| a == m) {
            write!(f, "{}", self.name)
        } else {
            let map: Vec<String> = self.map.iter().map(usize::to_string).collect();
            write!(f, "{}@{}", self.name, map.join(","))
        }
    }
}

impl LabeledSimplex {
    /// Builds a simplex from edge labels `g_ab`, `a < b`, listed in the order
    /// `(0,1), (0,2), …, (0,j), (1,2), …`, checking `g_ab g_bc = g_ac`.
    pub fn from_labels(group: &Group, vertices: Vec<u32>, labels: &[Elem], shape: Option<String>) -> Result<Self> {
        let k = vertices.len();
        if k == 0 {
            return Err(Error::MalformedSimplex("simplex without vertices".into()));
        }
        if labels.len() != k * (k - 1) / 2 {
            return Err(Error::MalformedSimplex(format!(
                "{} labels for a {}-simplex, expected {}",
                labels.len(),
                k - 1,
                k * (k - 1) / 2
            )));
        }
        for l in labels {
            group.check(l)?;
        }
        let mut table = vec![vec![group.identity(); k]; k];
        let mut it = labels.iter();
        for a in 0..k {
            for b in a + 1..k {
                table[a][b] = it.next().expect("count checked").clone();
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    if group.mul(&table[a][b], &table[b][c]) != table[a][c] {
                        return Err(Error::MalformedSimplex(format!(
                            "cocycle condition fails on positions ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        let mut lift = vec![group.identity()];
        lift.extend((1..k).map(|b| table[0][b].clone()));
        let shape = shape.map(|t| Shape::parse(&t, k)).transpose()?;
        Ok(LabeledSimplex { vertices, lift, shape })
    }

    /// Builds from lifts, normalising so that `h₀ = e`.
    pub fn from_lift(group: &Group, vertices: Vec<u32>, lift: Vec<Elem>, shape: Option<Shape>) -> Self {
        let base = group.inv(&lift[0]);
        let lift = lift.iter().map(|h| group.mul(&base, h)).collect();
        LabeledSimplex { vertices, lift, shape }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn label(&self, group: &Group, a: usize, b: usize) -> Elem {
        group.mul(&group.inv(&self.lift[a]), &self.lift[b])
    }

    /// Edge labels in `from_labels` order.
    pub fn labels(&self, group: &Group) -> Vec<Elem> {
        let k = self.vertices.len();
        let mut out = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                out.push(self.label(group, a, b));
            }
        }
        out
    }

    /// `q(σ)`: position `a` of the result is position `perm[a]` of `σ`.
    pub fn permuted(&self, group: &Group, perm: &[usize]) -> Self {
        Self::from_lift(
            group,
            perm.iter().map(|&p| self.vertices[p]).collect(),
            perm.iter().map(|&p| self.lift[p].clone()).collect(),
            self.shape.as_ref().map(|s| s.select(perm)),
        )
    }

    /// Face opposite position `i`.
    pub fn face(&self, group: &Group, i: usize) -> Self {
        let keep: Vec<usize> = (0..self.vertices.len()).filter(|&a| a != i).collect();
        Self::from_lift(
            group,
            keep.iter().map(|&a| self.vertices[a]).collect(),
            keep.iter().map(|&a| self.lift[a].clone()).collect(),
            self.shape.as_ref().map(|s| s.select(&keep)),
        )
    }

    /// Moves the lift of every occurrence of vertex `v` by `g` on the right,
    /// turning an edge label `x` out of `v` into `g⁻¹x` and into `v` into `xg`.
    pub fn pushed(&self, group: &Group, v: u32, g: &[i64]) -> Self {
        let lift = self
            .vertices
            .iter()
            .zip(&self.lift)
            .map(|(&w, h)| if w == v { group.mul(h, g) } else { h.clone() })
            .collect();
        Self::from_lift(group, self.vertices.clone(), lift, self.shape.clone())
    }

    pub fn straightened(&self) -> Self {
        LabeledSimplex {
            vertices: self.vertices.clone(),
            lift: self.lift.clone(),
            shape: None,
        }
    }
}

/// All permutations of `0..n` with their signs.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, i32)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inversions = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inversions += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inversions % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Sparse chain `Σ rᵢ σᵢ`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledChain {
    pub group: Group,
    pub terms: BTreeMap<LabeledSimplex, BigRational>,
}

impl LabeledChain {
    pub fn new(group: Group) -> Self {
        LabeledChain {
            group,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(group: Group, terms: impl IntoIterator<Item = (LabeledSimplex, BigRational)>) -> Self {
        let mut c = LabeledChain::new(group);
        for (s, r) in terms {
            c.add(s, r);
        }
        c
    }

    pub fn add(&mut self, s: LabeledSimplex, r: BigRational) {
        if r.is_zero() {
            return;
        }
        let entry = self.terms.entry(s);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(r);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += r;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_chain(&mut self, other: &LabeledChain, scale: &BigRational) {
        for (s, r) in &other.terms {
            self.add(s.clone(), r * scale);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `‖c‖ = Σ |rᵢ|`.
    pub fn norm(&self) -> BigRational {
        self.terms.values().fold(BigRational::zero(), |acc, r| acc + r.abs())
    }

    pub fn map_simplices(&self, f: impl Fn(&LabeledSimplex) -> LabeledSimplex) -> Self {
        LabeledChain::from_terms(self.group.clone(), self.terms.iter().map(|(s, r)| (f(s), r.clone())))
    }

    pub fn boundary(&self) -> Self {
        let mut out = LabeledChain::new(self.group.clone());
        for (s, r) in &self.terms {
            if s.dim() == 0 {
                continue;
            }
            for i in 0..=s.dim() {
                let sign = if i % 2 == 0 { r.clone() } else { -r.clone() };
                out.add(s.face(&self.group, i), sign);
            }
        }
        out
    }

    /// Replaces every simplex by its straight representative; simplices with
    /// equal vertices and lifts merge.
    pub fn straighten(&self) -> Self {
        self.map_simplices(LabeledSimplex::straightened)
    }

    /// `symm(σ) = 1/(j+1)! Σ_q sign(q) q(σ)`.
    pub fn symm(&self) -> Self {
        let mut out = LabeledChain::new(self.group.clone());
        let mut cache: BTreeMap<usize, (Vec<(Vec<usize>, i32)>, BigRational)> = BTreeMap::new();
        for (s, r) in &self.terms {
            let k = s.vertices.len();
            let (perms, weight) = cache
                .entry(k)
                .or_insert_with(|| (permutations(k), BigRational::new(BigInt::one(), factorial(k))));
            let base = r * &*weight;
            for (p, sign) in perms.iter() {
                let coeff = if *sign > 0 { base.clone() } else { -base.clone() };
                out.add(s.permuted(&self.group, p), coeff);
            }
        }
        out
    }

    pub fn push_vertex(&self, v: u32, g: &[i64]) -> Self {
        self.map_simplices(|s| s.pushed(&self.group, v, g))
    }

    pub fn scaled(&self, k: &BigRational) -> Self {
        let mut out = LabeledChain::new(self.group.clone());
        out.add_chain(self, k);
        out
    }

    pub fn is_cycle(&self) -> bool {
        self.boundary().is_zero()
    }
}
