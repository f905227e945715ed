//! Dense two-phase simplex method for `min cᵀx, Ax = b, x ≥ 0`, generic over
//! exact rationals and `f64`, with a dual certificate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub trait LpScalar: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Sign with the scalar's own tolerance: exact for rationals.
    fn sign(&self) -> i8;
    /// Exact zero test, used to skip arithmetic (not to make decisions).
    fn is_exact_zero(&self) -> bool;
    fn lt(&self, o: &Self) -> bool;
    fn to_f64(&self) -> f64;
    /// Right-hand-side perturbation weight for column `j`; zero disables it.
    fn perturbation(j: usize) -> Self;
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> i8 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn perturbation(_: usize) -> Self {
        Zero::zero()
    }
}

pub const F64_EPS: f64 = 1e-9;

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> i8 {
        if *self > F64_EPS {
            1
        } else if *self < -F64_EPS {
            -1
        } else {
            0
        }
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn perturbation(j: usize) -> Self {
        // Fixed pseudo-random weights in [0.5, 1)·1e-6 (Weyl sequence).
        let frac = (j as f64 * 0.618_033_988_749_895).fract();
        1e-6 * (0.5 + 0.5 * frac)
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub value: T,
    pub x: Vec<T>,
    /// Dual multipliers `y` with `Aᵀy ≤ c` and `bᵀy = value`.
    pub dual: Vec<T>,
    pub pivots: usize,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// First artificial column.
    art: usize,
    pivots: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.div(&p);
        }
        self.rhs[r] = self.rhs[r].div(&p);
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col].clone();
            if f.is_exact_zero() {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_exact_zero() {
                    *v = v.sub(&f.mul(pv));
                }
            }
            self.rows[i][col] = T::zero();
            self.rhs[i] = self.rhs[i].sub(&f.mul(&prhs));
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let mut d: Vec<T> = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_exact_zero() {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row) {
                if !a.is_exact_zero() {
                    *dj = dj.sub(&cb.mul(a));
                }
            }
        }
        d
    }

    /// Eliminates the entering column from the reduced costs after a pivot
    /// on `(r, col)`.
    fn update_costs(&self, d: &mut [T], r: usize, col: usize) {
        let f = d[col].clone();
        if f.is_exact_zero() {
            return;
        }
        for (dj, a) in d.iter_mut().zip(&self.rows[r]) {
            if !a.is_exact_zero() {
                *dj = dj.sub(&f.mul(a));
            }
        }
        d[col] = T::zero();
    }

    /// `[rhs | B⁻¹]` row `i` scaled by the pivot entry, compared
    /// lexicographically against row `k`.
    fn lex_less(&self, i: usize, k: usize, col: usize) -> bool {
        let (ai, ak) = (&self.rows[i][col], &self.rows[k][col]);
        let d = self.rhs[i].div(ai).sub(&self.rhs[k].div(ak));
        if d.sign() != 0 {
            return d.sign() < 0;
        }
        for j in self.art..self.rows[i].len() {
            let (x, y) = (&self.rows[i][j], &self.rows[k][j]);
            if x.is_exact_zero() && y.is_exact_zero() {
                continue;
            }
            let d = x.div(ai).sub(&y.div(ak));
            if d.sign() != 0 {
                return d.sign() < 0;
            }
        }
        self.basis[i] < self.basis[k]
    }

    /// Runs simplex iterations for `cost` over columns `< allowed`, with
    /// Dantzig pricing and the lexicographic ratio test.
    fn optimize(&mut self, cost: &[T], allowed: usize, max_pivots: usize) -> Result<()> {
        let mut d = self.reduced_costs(cost);
        loop {
            if self.pivots > max_pivots {
                return Err(Error::Numerical(format!("simplex exceeded {max_pivots} pivots")));
            }
            let mut enter: Option<usize> = None;
            for (j, dj) in d.iter().enumerate().take(allowed) {
                if dj.sign() < 0 && enter.is_none_or(|k| dj.lt(&d[k])) {
                    enter = Some(j);
                }
            }
            let Some(col) = enter else { return Ok(()) };
            let mut leave: Option<usize> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][col].sign() > 0 && leave.is_none_or(|k| self.lex_less(i, k, col)) {
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return Err(Error::Numerical("linear program is unbounded".into()));
            };
            self.pivot(r, col);
            self.update_costs(&mut d, r, col);
        }
    }

    /// Dual simplex steps restoring `rhs ≥ 0` while keeping reduced costs
    /// nonnegative.
    fn dual_cleanup(&mut self, cost: &[T], allowed: usize, max_pivots: usize) -> Result<()> {
        let mut d = self.reduced_costs(cost);
        loop {
            if self.pivots > max_pivots {
                return Err(Error::Numerical(format!("simplex exceeded {max_pivots} pivots")));
            }
            let leave = (0..self.rows.len())
                .filter(|&r| self.rhs[r].sign() < 0)
                .min_by(|&p, &q| self.rhs[p].to_f64().total_cmp(&self.rhs[q].to_f64()));
            let Some(r) = leave else { return Ok(()) };
            let mut enter: Option<(usize, T)> = None;
            for (j, dj) in d.iter().enumerate().take(allowed) {
                let arj = &self.rows[r][j];
                if arj.sign() < 0 {
                    let ratio = dj.div(&T::zero().sub(arj));
                    if enter.as_ref().is_none_or(|(_, best)| ratio.lt(best)) {
                        enter = Some((j, ratio));
                    }
                }
            }
            let Some((col, _)) = enter else {
                return Err(Error::Numerical("linear program is infeasible".into()));
            };
            self.pivot(r, col);
            self.update_costs(&mut d, r, col);
        }
    }
}

/// Solves `min cᵀx` subject to `Ax = b`, `x ≥ 0`.
pub fn minimize<T: LpScalar>(c: &[T], a: &[Vec<T>], b: &[T]) -> Result<LpSolution<T>> {
    minimize_from(c, a, b, None)
}

/// As [`minimize`], crash-starting from the support of a known feasible
/// point: its columns are pivoted into the basis before phase 1, which skips
/// the search for a first feasible basis when they are independent. A hint
/// that does not give a feasible basis is ignored.
///
/// For scalars with a nonzero [`LpScalar::perturbation`] the right-hand side
/// is replaced by `b + Aρ` with a small fixed `ρ > 0`, which keeps the
/// problem feasible and makes it nondegenerate, so degenerate stalling on
/// the homogeneous rows cannot happen. The true `b` is restored at the end
/// through the `B⁻¹` columns and a few dual simplex steps.
pub fn minimize_from<T: LpScalar>(c: &[T], a: &[Vec<T>], b: &[T], start: Option<&[T]>) -> Result<LpSolution<T>> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("LP dimensions disagree".into()));
    }
    let rho: Vec<T> = (0..n).map(T::perturbation).collect();
    let perturbed = rho.iter().any(|r| !r.is_exact_zero());
    // Columns: n structural, then m artificials.
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut flips = Vec::with_capacity(m);
    for i in 0..m {
        let shifted = if perturbed {
            a[i].iter().zip(&rho).fold(b[i].clone(), |s, (aij, r)| s.add(&aij.mul(r)))
        } else {
            b[i].clone()
        };
        let flip = shifted.sign() < 0 || (shifted.sign() == 0 && b[i].sign() < 0);
        let mut row: Vec<T> = a[i]
            .iter()
            .map(|v| if flip { T::zero().sub(v) } else { v.clone() })
            .collect();
        row.extend((0..m).map(|k| T::from_i64((k == i) as i64)));
        rows.push(row);
        rhs.push(if flip { T::zero().sub(&shifted) } else { shifted });
        flips.push(flip);
    }
    let mut t = Tableau { rows, rhs, basis: (n..cols).collect(), art: n, pivots: 0 };
    if let Some(x) = start {
        let mut crashed = Tableau { rows: t.rows.clone(), rhs: t.rhs.clone(), basis: t.basis.clone(), art: n, pivots: 0 };
        for (j, xj) in x.iter().enumerate().take(n) {
            if xj.sign() <= 0 {
                continue;
            }
            let r = (0..m)
                .filter(|&r| crashed.basis[r] >= n && crashed.rows[r][j].sign() != 0)
                .max_by(|&p, &q| crashed.rows[p][j].to_f64().abs().total_cmp(&crashed.rows[q][j].to_f64().abs()));
            if let Some(r) = r {
                crashed.pivot(r, j);
            }
        }
        if crashed.rhs.iter().all(|v| v.sign() >= 0 && !v.to_f64().is_sign_negative() || v.is_exact_zero()) {
            t = crashed;
        }
    }
    let max_pivots = 50 * (cols + m) + 1000;

    let phase1: Vec<T> = (0..cols).map(|j| T::from_i64((j >= n) as i64)).collect();
    let infeasibility = |t: &Tableau<T>| {
        t.basis.iter().zip(&t.rhs).filter(|(&j, _)| j >= n).fold(T::zero(), |s, (_, v)| s.add(v))
    };
    if infeasibility(&t).sign() > 0 {
        t.optimize(&phase1, cols, max_pivots)?;
    }
    if infeasibility(&t).sign() > 0 {
        return Err(Error::Numerical("linear program is infeasible".into()));
    }
    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are redundant and are dropped.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            let best = (0..n)
                .filter(|&j| t.rows[i][j].sign() != 0)
                .max_by(|&j, &k| t.rows[i][j].to_f64().abs().total_cmp(&t.rows[i][k].to_f64().abs()));
            match best {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase2: Vec<T> = c.to_vec();
    phase2.extend((0..m).map(|_| T::zero()));
    t.optimize(&phase2, n, max_pivots)?;

    if perturbed {
        // Each tableau row is `Σ_k M_rk · (original row k)`, with `M` read
        // off the artificial columns.
        let orig: Vec<T> = b
            .iter()
            .zip(&flips)
            .map(|(bi, &f)| if f { T::zero().sub(bi) } else { bi.clone() })
            .collect();
        for r in 0..t.rows.len() {
            t.rhs[r] = (0..m).fold(T::zero(), |s, k| s.add(&t.rows[r][n + k].mul(&orig[k])));
        }
        t.dual_cleanup(&phase2, n, max_pivots)?;
    }

    let mut x = vec![T::zero(); n];
    for (r, &j) in t.basis.iter().enumerate() {
        if j < n {
            x[j] = if t.rhs[r].sign() == 0 { T::zero() } else { t.rhs[r].clone() };
        }
    }
    let value = c.iter().zip(&x).fold(T::zero(), |s, (ci, xi)| s.add(&ci.mul(xi)));
    // Reduced cost of artificial column k is `−y_k` (artificials cost 0).
    let d = t.reduced_costs(&phase2);
    let dual = (0..m)
        .map(|k| {
            let y = T::zero().sub(&d[n + k]);
            if flips[k] {
                T::zero().sub(&y)
            } else {
                y
            }
        })
        .collect();
    Ok(LpSolution { value, x, dual, pivots: t.pivots })
}

/// Checks primal feasibility, dual feasibility and a zero duality gap, with
/// tolerance `tol` (use 0 for exact arithmetic).
pub fn verify_certificate<T: LpScalar>(c: &[T], a: &[Vec<T>], b: &[T], sol: &LpSolution<T>, tol: f64) -> bool {
    let within = |v: &T| v.to_f64().abs() <= tol || v.sign() == 0;
    let primal = sol.x.iter().all(|v| v.sign() >= 0)
        && a.iter().zip(b).all(|(row, bi)| {
            let lhs = row.iter().zip(&sol.x).fold(T::zero(), |s, (r, x)| s.add(&r.mul(x)));
            within(&lhs.sub(bi))
        });
    let dual = (0..c.len()).all(|j| {
        let aty = a.iter().zip(&sol.dual).fold(T::zero(), |s, (row, y)| s.add(&row[j].mul(y)));
        let slack = c[j].sub(&aty);
        slack.sign() >= 0 || within(&slack)
    });
    let by = b.iter().zip(&sol.dual).fold(T::zero(), |s, (bi, y)| s.add(&bi.mul(y)));
    primal && dual && within(&by.sub(&sol.value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn small_exact_lp() {
        // min x + y  s.t. x + 2y = 4, 3x + y = 6  →  x = 8/5, y = 6/5.
        let c = vec![q(1), q(1)];
        let a = vec![vec![q(1), q(2)], vec![q(3), q(1)]];
        let b = vec![q(4), q(6)];
        let s = minimize(&c, &a, &b).unwrap();
        assert_eq!(s.value, BigRational::new(14.into(), 5.into()));
        assert!(verify_certificate(&c, &a, &b, &s, 0.0));
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        let c = vec![2.0, 3.0, 1.0];
        let a = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![-1.0, 0.0, 1.0]];
        let b = vec![1.0, 2.0, -0.5];
        let s = minimize(&c, &a, &b).unwrap();
        assert!((s.value - 1.75).abs() < 1e-9);
        assert!(verify_certificate(&c, &a, &b, &s, 1e-9));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![q(1), q(1)]];
        assert!(minimize(&[q(1), q(1)], &a, &[q(-1)]).is_err());
        let a = vec![vec![q(1), q(-1)]];
        assert!(minimize(&[q(0), q(-1)], &a, &[q(0)]).is_err());
    }

    #[test]
    fn l1_of_a_free_variable() {
        // min |t| s.t. t = -3, written with t = p - n.
        let s = minimize(&[q(1), q(1)], &[vec![q(1), q(-1)]], &[q(-3)]).unwrap();
        assert_eq!(s.value, q(3));
        assert!(verify_certificate(&[q(1), q(1)], &[vec![q(1), q(-1)]], &[q(-3)], &s, 0.0));
    }
}
