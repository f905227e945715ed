//! Partial colorings, essential simplices, Følner sets and the averaging
//! that kills non-essential simplices.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::group::{Elem, Group};
use super::simplex::{LabeledChain, LabeledSimplex};
use crate::error::{Error, Result};

/// Disjoint vertex classes `V₁, …, V_ℓ`; each class uses the chain's whole
/// group as its label group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialColoring {
    pub classes: Vec<Vec<u32>>,
}

impl PartialColoring {
    pub fn new(classes: Vec<Vec<u32>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for class in &classes {
            for v in class {
                if !seen.insert(*v) {
                    return Err(Error::InvalidInput(format!("vertex {v} has two colors")));
                }
            }
        }
        Ok(PartialColoring { classes })
    }

    pub fn color(&self, v: u32) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&v))
    }

    /// The point a class collapses to: its smallest vertex id.
    pub fn representative(&self, color: usize) -> u32 {
        *self.classes[color].iter().min().expect("classes are non-empty")
    }

    /// Collapses every class to its representative.
    pub fn collapse(&self, v: u32) -> u32 {
        self.color(v).map_or(v, |c| self.representative(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Essentiality {
    Essential,
    /// Two distinct vertices share a color.
    SameColor { color: usize, positions: (usize, usize) },
    /// A repeated vertex joined by an identity-labelled edge.
    IdentityLoop { positions: (usize, usize) },
}

pub fn essentiality(group: &Group, s: &LabeledSimplex, coloring: &PartialColoring) -> Essentiality {
    let k = s.vertices.len();
    for a in 0..k {
        for b in a + 1..k {
            let (v, w) = (s.vertices[a], s.vertices[b]);
            if v != w {
                if let (Some(c), Some(d)) = (coloring.color(v), coloring.color(w)) {
                    if c == d {
                        return Essentiality::SameColor { color: c, positions: (a, b) };
                    }
                }
            }
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            if s.vertices[a] == s.vertices[b] && group.is_identity(&s.label(group, a, b)) {
                return Essentiality::IdentityLoop { positions: (a, b) };
            }
        }
    }
    Essentiality::Essential
}

pub fn classify_essential(c: &LabeledChain, coloring: &PartialColoring) -> Vec<(LabeledSimplex, Essentiality)> {
    c.terms
        .keys()
        .map(|s| (s.clone(), essentiality(&c.group, s, coloring)))
        .collect()
}

/// Finite Følner set: a box `[0, N)ᵈ` in `ℤᵈ`, or the whole finite group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FolnerSet {
    Box { rank: usize, side: i64 },
    Whole { order: usize },
}

impl FolnerSet {
    pub fn size(&self) -> u128 {
        match self {
            FolnerSet::Box { rank, side } => (*side as u128).pow(*rank as u32),
            FolnerSet::Whole { order } => *order as u128,
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        match self {
            FolnerSet::Box { side, .. } => x.iter().all(|c| (0..*side).contains(c)),
            FolnerSet::Whole { order } => (0..*order as i64).contains(&x[0]),
        }
    }

    pub fn elements(&self) -> Vec<Elem> {
        match self {
            FolnerSet::Box { rank, side } => {
                let mut out = vec![vec![]];
                for _ in 0..*rank {
                    out = out
                        .into_iter()
                        .flat_map(|p: Vec<i64>| {
                            (0..*side).map(move |c| {
                                let mut q = p.clone();
                                q.push(c);
                                q
                            })
                        })
                        .collect();
                }
                out
            }
            FolnerSet::Whole { order } => (0..*order as i64).map(|i| vec![i]).collect(),
        }
    }

    /// `|xA Δ A| / |A|` in closed form: `2(1 − Π(1 − |xᵢ|/N)⁺)` for a box,
    /// `0` for a whole finite group.
    pub fn ratio(&self, x: &[i64]) -> BigRational {
        match self {
            FolnerSet::Box { side, .. } => {
                let n = BigInt::from(*side);
                let mut overlap = BigRational::one();
                for c in x {
                    let keep = (*side - c.abs()).max(0);
                    overlap *= BigRational::new(BigInt::from(keep), n.clone());
                }
                (BigRational::one() - overlap) * BigRational::from_integer(2.into())
            }
            FolnerSet::Whole { .. } => BigRational::zero(),
        }
    }
}

/// Følner set for `S` with ratio at most `ε` for every `x ∈ S`. Boxes use
/// `N = ⌈2 max ‖x‖₁ / ε⌉`, since `2(1 − Π(1 − |xᵢ|/N)) ≤ 2‖x‖₁/N`.
pub fn folner_set(group: &Group, s: &[Elem], eps: &BigRational) -> Result<FolnerSet> {
    if !eps.is_positive() {
        return Err(Error::InvalidInput("ε must be positive".into()));
    }
    match group {
        Group::Free { rank } => {
            let m = s.iter().map(|x| x.iter().map(|c| c.abs()).sum::<i64>()).max().unwrap_or(0);
            let side = (BigRational::from_integer((2 * m).into()) / eps).ceil().to_integer();
            let side = side
                .to_i64()
                .ok_or_else(|| Error::InvalidInput("Følner box side overflows".into()))?
                .max(1);
            Ok(FolnerSet::Box { rank: *rank, side })
        }
        Group::Finite { table } => Ok(FolnerSet::Whole { order: table.len() }),
    }
}

/// Labels between distinct same-colored vertices, with inverses, per color.
pub fn same_color_labels(c: &LabeledChain, coloring: &PartialColoring) -> Vec<Vec<Elem>> {
    let mut out = vec![BTreeSet::new(); coloring.classes.len()];
    for s in c.terms.keys() {
        let k = s.vertices.len();
        for a in 0..k {
            for b in a + 1..k {
                let (v, w) = (s.vertices[a], s.vertices[b]);
                if v == w {
                    continue;
                }
                if let (Some(x), Some(y)) = (coloring.color(v), coloring.color(w)) {
                    if x == y {
                        let l = s.label(&c.group, a, b);
                        out[x].insert(c.group.inv(&l));
                        out[x].insert(l);
                    }
                }
            }
        }
    }
    out.into_iter().map(|set| set.into_iter().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMode {
    /// Each simplex is averaged over the pushes of its own vertices only.
    PerSimplex,
    /// Literal average over every push of every colored vertex.
    Product,
}

#[derive(Debug, Clone)]
pub struct AverageReport {
    pub average: LabeledChain,
    pub norm: BigRational,
    pub essential_mass: BigRational,
    pub nonessential_mass: BigRational,
    pub epsilon: BigRational,
    /// `Σ_ess |rᵢ| + ε Σ_noness |rᵢ|`.
    pub bound: BigRational,
    pub folner: Vec<FolnerSet>,
    pub is_cycle: bool,
}

impl AverageReport {
    pub fn bound_holds(&self) -> bool {
        self.norm <= self.bound
    }
}

pub const DEFAULT_SIZE_CAP: u128 = 20_000_000;

/// Averages `symm ∘ straighten ∘ α ∘ push_g` over `g ∈ ×_ℓ A_ℓ^{V_ℓ}`,
/// where `α` collapses each color class to a point.
pub fn amenable_average(
    c: &LabeledChain,
    coloring: &PartialColoring,
    eps: &BigRational,
    mode: AverageMode,
    cap: u128,
) -> Result<AverageReport> {
    if !c.is_cycle() {
        return Err(Error::InvalidInput("chain is not a cycle".into()));
    }
    let group = &c.group;
    let c = c.straighten();
    let folner = same_color_labels(&c, coloring)
        .iter()
        .map(|s| folner_set(group, s, eps))
        .collect::<Result<Vec<_>>>()?;
    let pushed = match mode {
        AverageMode::PerSimplex => per_simplex_average(&c, coloring, &folner, cap)?,
        AverageMode::Product => product_average(&c, coloring, &folner, cap)?,
    };
    let average = pushed.symm();
    let mut essential_mass = BigRational::zero();
    let mut nonessential_mass = BigRational::zero();
    for (s, r) in &c.terms {
        if essentiality(group, s, coloring) == Essentiality::Essential {
            essential_mass += r.abs();
        } else {
            nonessential_mass += r.abs();
        }
    }
    let bound = &essential_mass + eps * &nonessential_mass;
    Ok(AverageReport {
        norm: average.norm(),
        is_cycle: average.is_cycle(),
        average,
        essential_mass,
        nonessential_mass,
        epsilon: eps.clone(),
        bound,
        folner,
    })
}

fn collapsed(group: &Group, s: &LabeledSimplex, coloring: &PartialColoring, lift: Vec<Elem>) -> LabeledSimplex {
    LabeledSimplex::from_lift(
        group,
        s.vertices.iter().map(|&v| coloring.collapse(v)).collect(),
        lift,
        None,
    )
}

fn size_check(size: u128, cap: u128) -> Result<()> {
    if size > cap {
        Err(Error::SizeLimit { size, cap })
    } else {
        Ok(())
    }
}

/// Odometer over `sizes`, calling `f` with every index tuple.
fn for_each_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    if sizes.iter().any(|&s| s == 0) {
        return;
    }
    let mut idx = vec![0; sizes.len()];
    loop {
        f(&idx);
        let mut k = 0;
        loop {
            if k == sizes.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn per_simplex_average(
    c: &LabeledChain,
    coloring: &PartialColoring,
    folner: &[FolnerSet],
    cap: u128,
) -> Result<LabeledChain> {
    let group = &c.group;
    let mut out = LabeledChain::new(group.clone());
    for (s, r) in &c.terms {
        let colored: Vec<u32> = s
            .vertices
            .iter()
            .copied()
            .filter(|v| coloring.color(*v).is_some())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let sets: Vec<&FolnerSet> = colored
            .iter()
            .map(|v| &folner[coloring.color(*v).expect("colored")])
            .collect();
        let slot = |v: u32| colored.iter().position(|u| *u == v);
        let mut acc = LabeledChain::new(group.clone());
        let total: u128 = sets.iter().map(|a| a.size()).product();
        match group {
            Group::Free { rank } => {
                // Canonical lifts only see γ_{v_a} − γ_{v_0}, and coordinates
                // are independent, so tabulate those differences per axis.
                let sides: Vec<usize> = sets
                    .iter()
                    .map(|a| match a {
                        FolnerSet::Box { side, .. } => *side as usize,
                        FolnerSet::Whole { .. } => unreachable!("free groups use boxes"),
                    })
                    .collect();
                size_check(sides.iter().map(|&n| n as u128).product(), cap)?;
                let mut axis_tables: Vec<Vec<(Vec<i64>, u64)>> = Vec::new();
                for _ in 0..*rank {
                    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
                    for_each_index(&sides, |idx| {
                        let coord = |v: u32| slot(v).map_or(0, |k| idx[k] as i64);
                        let base = coord(s.vertices[0]);
                        let key: Vec<i64> = s.vertices[1..].iter().map(|&v| coord(v) - base).collect();
                        *counts.entry(key).or_default() += 1;
                    });
                    axis_tables.push(counts.into_iter().collect());
                }
                let outcomes: u128 = axis_tables.iter().map(|t| t.len() as u128).product();
                size_check(outcomes, cap)?;
                let lens: Vec<usize> = axis_tables.iter().map(Vec::len).collect();
                for_each_index(&lens, |idx| {
                    let mut weight: u64 = 1;
                    let mut lift = s.lift.clone();
                    for (axis, &i) in idx.iter().enumerate() {
                        let (key, count) = &axis_tables[axis][i];
                        weight *= count;
                        for (a, d) in key.iter().enumerate() {
                            lift[a + 1][axis] += d;
                        }
                    }
                    acc.add(
                        collapsed(group, s, coloring, lift),
                        BigRational::from_integer(BigInt::from(weight)),
                    );
                });
            }
            Group::Finite { .. } => {
                size_check(total, cap)?;
                let elems: Vec<Vec<Elem>> = sets.iter().map(|a| a.elements()).collect();
                let lens: Vec<usize> = elems.iter().map(Vec::len).collect();
                for_each_index(&lens, |idx| {
                    let lift = s
                        .vertices
                        .iter()
                        .zip(&s.lift)
                        .map(|(&v, h)| match slot(v) {
                            Some(k) => group.mul(h, &elems[k][idx[k]]),
                            None => h.clone(),
                        })
                        .collect();
                    acc.add(collapsed(group, s, coloring, lift), BigRational::one());
                });
            }
        }
        let scale = r / BigRational::from_integer(BigInt::from(total));
        out.add_chain(&acc, &scale);
    }
    Ok(out)
}

fn product_average(
    c: &LabeledChain,
    coloring: &PartialColoring,
    folner: &[FolnerSet],
    cap: u128,
) -> Result<LabeledChain> {
    let group = &c.group;
    let colored: Vec<u32> = c
        .terms
        .keys()
        .flat_map(|s| s.vertices.iter().copied())
        .filter(|v| coloring.color(*v).is_some())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let elems: Vec<Vec<Elem>> = colored
        .iter()
        .map(|v| folner[coloring.color(*v).expect("colored")].elements())
        .collect();
    let total: u128 = elems.iter().map(|e| e.len() as u128).product();
    size_check(total.saturating_mul(c.len() as u128), cap)?;
    let lens: Vec<usize> = elems.iter().map(Vec::len).collect();
    let mut out = LabeledChain::new(group.clone());
    for_each_index(&lens, |idx| {
        for (s, r) in &c.terms {
            let lift = s
                .vertices
                .iter()
                .zip(&s.lift)
                .map(|(v, h)| match colored.iter().position(|u| u == v) {
                    Some(k) => group.mul(h, &elems[k][idx[k]]),
                    None => h.clone(),
                })
                .collect();
            out.add(collapsed(group, s, coloring, lift), r.clone());
        }
    });
    Ok(out.scaled(&BigRational::new(BigInt::one(), BigInt::from(total))))
}

/// `Σ symm ∘ straighten ∘ α ∘ push` over `(γ₁, γ₂) ∈ (xA ∩ A) × (x⁻¹A ∩ A)`,
/// pushing the vertices at `positions` by `γ₁`, `γ₂`; `x` is the label
/// between them. The involution `(γ₁, γ₂) ↦ (xγ₂, x⁻¹γ₁)` pairs the terms
/// with opposite signs, so the sum vanishes.
pub fn involution_partial_sum(
    group: &Group,
    s: &LabeledSimplex,
    coloring: &PartialColoring,
    positions: (usize, usize),
    a: &FolnerSet,
) -> LabeledChain {
    let (p, q) = positions;
    let x = s.label(group, p, q);
    let xi = group.inv(&x);
    let elems = a.elements();
    let left: Vec<&Elem> = elems.iter().filter(|y| a.contains(&group.mul(&xi, y))).collect();
    let right: Vec<&Elem> = elems.iter().filter(|y| a.contains(&group.mul(&x, y))).collect();
    let mut sum = LabeledChain::new(group.clone());
    for g1 in &left {
        for g2 in &right {
            let t = s.pushed(group, s.vertices[p], g1).pushed(group, s.vertices[q], g2);
            sum.add(collapsed(group, &t, coloring, t.lift.clone()), BigRational::one());
        }
    }
    sum.symm()
}

/// `|xA ∩ A| · |x⁻¹A ∩ A| / |A|²`.
pub fn square_fraction(group: &Group, a: &FolnerSet, x: &[i64]) -> BigRational {
    let xi = group.inv(x);
    let elems = a.elements();
    let left = elems.iter().filter(|y| a.contains(&group.mul(&xi, y))).count();
    let right = elems.iter().filter(|y| a.contains(&group.mul(x, y))).count();
    let n = BigInt::from(elems.len());
    BigRational::new(BigInt::from(left * right), &n * &n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn z_edge(v: u32, w: u32, x: i64) -> LabeledSimplex {
        LabeledSimplex::from_labels(&Group::free(1), vec![v, w], &[vec![x]], None).unwrap()
    }

    /// `|xA Δ A| / |A|` by explicit set computation.
    fn direct_ratio(group: &Group, a: &FolnerSet, x: &[i64]) -> BigRational {
        let set: BTreeSet<Elem> = a.elements().into_iter().collect();
        let moved: BTreeSet<Elem> = set.iter().map(|y| group.mul(x, y)).collect();
        let sym = set.symmetric_difference(&moved).count();
        BigRational::new(BigInt::from(sym), BigInt::from(set.len()))
    }

    #[test]
    fn folner_boxes() {
        let z = Group::free(1);
        let a = folner_set(&z, &[vec![1], vec![-1]], &q(1, 10)).unwrap();
        assert_eq!(a, FolnerSet::Box { rank: 1, side: 20 });
        assert_eq!(a.ratio(&[1]), q(1, 10));
        assert_eq!(direct_ratio(&z, &a, &[1]), q(1, 10));
        let z2 = Group::free(2);
        let a = folner_set(&z2, &[vec![3, 0], vec![-3, 0]], &q(1, 10)).unwrap();
        assert_eq!(a, FolnerSet::Box { rank: 2, side: 60 });
        assert_eq!(a.ratio(&[3, 0]), q(1, 10));
        assert_eq!(direct_ratio(&z2, &a, &[-3, 0]), q(1, 10));
        let s3 = Group::s3();
        let a = folner_set(&s3, &[vec![1]], &q(1, 10)).unwrap();
        assert_eq!(a.size(), 6);
        assert_eq!(direct_ratio(&s3, &a, &[4]), q(0, 1));
    }

    #[test]
    fn essential_tags() {
        let g = Group::free(1);
        let col = PartialColoring::new(vec![vec![0, 1], vec![2]]).unwrap();
        let s = LabeledSimplex::from_labels(&g, vec![0, 1, 2], &[vec![1], vec![1], vec![0]], None).unwrap();
        assert!(matches!(essentiality(&g, &s, &col), Essentiality::SameColor { color: 0, .. }));
        assert_eq!(
            essentiality(&g, &z_edge(5, 5, 0), &col),
            Essentiality::IdentityLoop { positions: (0, 1) }
        );
        let rainbow = LabeledSimplex::from_labels(&g, vec![0, 2, 5], &[vec![1], vec![1], vec![0]], None).unwrap();
        assert_eq!(essentiality(&g, &rainbow, &col), Essentiality::Essential);
        assert!(PartialColoring::new(vec![vec![0], vec![0]]).is_err());
    }

    #[test]
    fn single_nonessential_cycle_averages_small() {
        let g = Group::free(1);
        let c = LabeledChain::from_terms(g, [(z_edge(0, 1, 1), q(1, 1)), (z_edge(1, 0, 0), q(1, 1))]);
        assert!(c.is_cycle());
        let col = PartialColoring::new(vec![vec![0, 1]]).unwrap();
        let r = amenable_average(&c, &col, &q(1, 10), AverageMode::PerSimplex, DEFAULT_SIZE_CAP).unwrap();
        assert!(r.is_cycle);
        assert_eq!(r.essential_mass, q(0, 1));
        assert_eq!(r.norm, q(39, 400));
        assert!(r.norm <= q(1, 10));
        assert!(r.bound_holds());
        let p = amenable_average(&c, &col, &q(1, 10), AverageMode::Product, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(p.average, r.average);
    }

    #[test]
    fn essential_cycle_keeps_its_mass() {
        let g = Group::free(1);
        let c = LabeledChain::from_terms(g, [(z_edge(4, 4, 1), q(3, 1))]);
        let col = PartialColoring::new(vec![vec![0, 1]]).unwrap();
        let r = amenable_average(&c, &col, &q(1, 10), AverageMode::PerSimplex, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(r.bound, q(3, 1));
        assert_eq!(r.norm, q(3, 1));
    }

    #[test]
    fn involution_cancels() {
        let g = Group::free(1);
        let col = PartialColoring::new(vec![vec![0, 1]]).unwrap();
        let a = FolnerSet::Box { rank: 1, side: 20 };
        let s = z_edge(0, 1, 3);
        assert!(involution_partial_sum(&g, &s, &col, (0, 1), &a).is_zero());
        assert!(square_fraction(&g, &a, &[3]) > q(9, 10) - q(1, 10) * q(3, 1));
        let s3 = Group::s3();
        let tri = LabeledSimplex::from_labels(&s3, vec![0, 1, 7], &[vec![3], vec![1], vec![5]], None);
        if let Ok(tri) = tri {
            let w = FolnerSet::Whole { order: 6 };
            assert!(involution_partial_sum(&s3, &tri, &col, (0, 1), &w).is_zero());
        }
    }

    #[test]
    fn finite_group_average_matches_product() {
        let g = Group::s3();
        let t = LabeledSimplex::from_labels(&g, vec![0, 1, 2, 3], &[vec![1], vec![3], vec![2], vec![g.mul(&g.inv(&[1]), &[3])[0]], vec![g.mul(&g.inv(&[1]), &[2])[0]], vec![g.mul(&g.inv(&[3]), &[2])[0]]], None).unwrap();
        let c = LabeledChain::from_terms(g.clone(), [(t, q(1, 1))]).boundary();
        assert!(c.is_cycle());
        let col = PartialColoring::new(vec![vec![0, 1], vec![2]]).unwrap();
        let a = amenable_average(&c, &col, &q(1, 100), AverageMode::PerSimplex, DEFAULT_SIZE_CAP).unwrap();
        let b = amenable_average(&c, &col, &q(1, 100), AverageMode::Product, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(a.average, b.average);
        assert!(a.is_cycle && a.bound_holds());
    }
}
