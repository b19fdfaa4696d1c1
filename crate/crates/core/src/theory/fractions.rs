//! `B`-reduced residues `𝓡_B(r) = { a/r : 1 ≤ a ≤ r, (a, r) B-free }`.

use crate::bset::{mu_b, SievingSet};
use crate::{Error, Result};

/// Numerators `a ∈ [1, r]` such that `(a, r)` is `B`-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedFractionSet {
    pub r: u64,
    pub numerators: Vec<u64>,
}

impl ReducedFractionSet {
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn contains(&self, a: u64) -> bool {
        self.numerators.binary_search(&a).is_ok()
    }
}

/// `𝓡_B(r)` for `1 < r ∈ [B]`, by marking multiples of each `b | r`.
pub fn reduced_fractions(set: &SievingSet, r: u64) -> Result<ReducedFractionSet> {
    if r <= 1 {
        return Err(Error::Precondition(format!("modulus {r} must exceed 1")));
    }
    if mu_b(set, r) == 0 {
        return Err(Error::Precondition(format!("{r} is not a product of distinct elements of B")));
    }
    let len = usize::try_from(r).map_err(|_| Error::Overflow(format!("modulus {r}")))?;
    let mut keep = vec![true; len + 1];
    for b in set.divisors_in_b(r) {
        let mut m = b as usize;
        while m <= len {
            keep[m] = false;
            m += b as usize;
        }
    }
    let numerators = (1..=r).filter(|&a| keep[a as usize]).collect();
    Ok(ReducedFractionSet { r, numerators })
}

/// `|𝓡_B(r)| = r ∏_{b | r} (1 − 1/b)` for `r ∈ [B]`.
pub fn reduced_count(set: &SievingSet, r: u64) -> u64 {
    set.divisors_in_b(r).iter().fold(r, |n, &b| n / b * (b - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;

    #[test]
    fn small_moduli() {
        let sq = SievingSet::squarefree();
        assert_eq!(reduced_fractions(&sq, 4).unwrap().numerators, vec![1, 2, 3]);
        let r36 = reduced_fractions(&sq, 36).unwrap();
        assert_eq!(r36.len(), 24);
        assert_eq!(reduced_count(&sq, 36), 24);
        for a in 1..=36 {
            assert_eq!(r36.contains(a), sq.is_bfree(gcd(a, 36)), "a = {a}");
        }
    }

    #[test]
    fn rejects_outside_distinct_products() {
        let sq = SievingSet::squarefree();
        assert!(reduced_fractions(&sq, 1).is_err());
        assert!(reduced_fractions(&sq, 16).is_err());
        assert!(reduced_fractions(&sq, 12).is_err());
    }

    #[test]
    fn counts_match_formula() {
        let set = SievingSet::custom(vec![4, 9, 25, 7]).unwrap();
        for r in [4, 9, 36, 7, 28, 252, 900, 6300] {
            let s = reduced_fractions(&set, r).unwrap();
            assert_eq!(s.len() as u64, reduced_count(&set, r));
            let brute = (1..=r).filter(|&a| set.is_bfree(gcd(a, r))).count();
            assert_eq!(s.len(), brute);
        }
    }
}
