//! Group backends for edge labels: free abelian `ℤᵈ` and finite groups given
//! by a multiplication table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Group element. `ℤᵈ` elements are integer vectors; finite-group elements
/// are one-entry vectors holding the table index.
pub type Elem = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Group {
    Free { rank: usize },
    Finite { table: Vec<Vec<usize>> },
}

impl Group {
    pub fn free(rank: usize) -> Self {
        Group::Free { rank }
    }

    /// Validates the table: closure, associativity, identity and inverses.
    pub fn finite(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 || table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::InvalidInput("multiplication table is not a square table over its elements".into()));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidInput(format!("table is not associative at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let g = Group::Finite { table };
        let e = g.finite_identity().ok_or_else(|| Error::InvalidInput("table has no identity".into()))?;
        if let Group::Finite { table } = &g {
            if (0..n).any(|a| !(0..n).any(|b| table[a][b] == e)) {
                return Err(Error::InvalidInput("some element has no inverse".into()));
            }
        }
        Ok(g)
    }

    /// Symmetric group on three letters, elements ordered as the permutations
    /// of `[0, 1, 2]` in lexicographic order, composed as `(ab)(i) = a(b(i))`.
    pub fn s3() -> Self {
        let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("permutation listed");
        let table = perms
            .iter()
            .map(|a| perms.iter().map(|b| index([a[b[0]], a[b[1]], a[b[2]]])).collect())
            .collect();
        Group::Finite { table }
    }

    fn finite_identity(&self) -> Option<usize> {
        match self {
            Group::Finite { table } => (0..table.len()).find(|&e| (0..table.len()).all(|x| table[e][x] == x && table[x][e] == x)),
            Group::Free { .. } => None,
        }
    }

    pub fn identity(&self) -> Elem {
        match self {
            Group::Free { rank } => vec![0; *rank],
            Group::Finite { .. } => vec![self.finite_identity().expect("validated table") as i64],
        }
    }

    pub fn is_identity(&self, a: &[i64]) -> bool {
        a == self.identity().as_slice()
    }

    pub fn mul(&self, a: &[i64], b: &[i64]) -> Elem {
        match self {
            Group::Free { .. } => a.iter().zip(b).map(|(x, y)| x + y).collect(),
            Group::Finite { table } => vec![table[a[0] as usize][b[0] as usize] as i64],
        }
    }

    pub fn inv(&self, a: &[i64]) -> Elem {
        match self {
            Group::Free { .. } => a.iter().map(|x| -x).collect(),
            Group::Finite { table } => {
                let e = self.finite_identity().expect("validated table");
                let i = a[0] as usize;
                vec![(0..table.len()).find(|&b| table[i][b] == e).expect("validated table") as i64]
            }
        }
    }

    pub fn contains(&self, a: &[i64]) -> bool {
        match self {
            Group::Free { rank } => a.len() == *rank,
            Group::Finite { table } => a.len() == 1 && a[0] >= 0 && (a[0] as usize) < table.len(),
        }
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            Group::Free { .. } => None,
            Group::Finite { table } => Some(table.len()),
        }
    }

    /// All elements of a finite group.
    pub fn elements(&self) -> Option<Vec<Elem>> {
        self.order().map(|n| (0..n as i64).map(|i| vec![i]).collect())
    }

    pub fn check(&self, a: &[i64]) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::MalformedSimplex(format!("{a:?} is not a group element")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn s3_is_a_nonabelian_group() {
        let g = Group::s3();
        let Group::Finite { table } = &g else { unreachable!() };
        assert!(Group::finite(table.clone()).is_ok());
        assert_eq!(g.identity(), vec![0]);
        assert_ne!(g.mul(&[1], &[2]), g.mul(&[2], &[1]));
        for a in 0..6 {
            assert_eq!(g.mul(&[a], &g.inv(&[a])), g.identity());
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Group::finite(vec![vec![0, 1], vec![0, 1]]).is_err());
        assert!(Group::finite(vec![vec![0, 2], vec![1, 0]]).is_err());
    }

    proptest! {
        #[test]
        fn s3_axioms(a in 0i64..6, b in 0i64..6, c in 0i64..6) {
            let g = Group::s3();
            prop_assert_eq!(g.mul(&g.mul(&[a], &[b]), &[c]), g.mul(&[a], &g.mul(&[b], &[c])));
            prop_assert_eq!(g.mul(&[a], &g.identity()), vec![a]);
        }

        #[test]
        fn free_axioms(a in prop::collection::vec(-50i64..50, 2), b in prop::collection::vec(-50i64..50, 2)) {
            let g = Group::free(2);
            prop_assert_eq!(g.mul(&a, &b), g.mul(&b, &a));
            prop_assert!(g.is_identity(&g.mul(&a, &g.inv(&a))));
        }
    }
}
