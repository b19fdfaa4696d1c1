//! Sieving sets `B`, B-free indicators and the semigroups generated by `B`.
//!
//! A sieving set is a collection of pairwise coprime integers `b > 1` with
//! `Σ 1/b < ∞`. Two kinds are supported: the rule `{p^m : p prime}` for a
//! fixed `m ≥ 2` (whose B-frees are the m-th-power-free integers) and a
//! finite custom list.

mod segment;
mod semigroup;

pub use segment::{bfree_segment, count_bfree, BFreeSegment, SegmentSieve, BITMAP_MAGIC};
pub use semigroup::{
    count_semigroup, enumerate_semigroup, estimate_index, for_each_product, IndexEstimate,
};

use std::fmt;
use std::path::Path;

use crate::arith::{gcd, iroot, primes_slice};
use crate::{Error, Result};

/// Largest accepted custom list; coprimality validation is quadratic.
pub const MAX_CUSTOM_ELEMENTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetKind {
    /// `{p^m : p prime}`.
    PowerFree(u32),
    /// A finite, validated list.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SievingSet {
    kind: SetKind,
    custom: Vec<u64>,
}

impl SievingSet {
    pub fn power_free(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSet(format!(
                "power-free exponent must be at least 2, got {m}"
            )));
        }
        Ok(Self {
            kind: SetKind::PowerFree(m),
            custom: Vec::new(),
        })
    }

    pub fn squarefree() -> Self {
        Self::power_free(2).expect("m = 2 is valid")
    }

    pub fn cubefree() -> Self {
        Self::power_free(3).expect("m = 3 is valid")
    }

    /// Validates a finite list: nonempty, every element `> 1`, pairwise coprime.
    pub fn custom(elements: impl Into<Vec<u64>>) -> Result<Self> {
        let mut elements = elements.into();
        if elements.is_empty() {
            return Err(Error::InvalidSet("custom set is empty".into()));
        }
        if elements.len() > MAX_CUSTOM_ELEMENTS {
            return Err(Error::InvalidSet(format!(
                "custom set has {} elements, the cap is {MAX_CUSTOM_ELEMENTS}",
                elements.len()
            )));
        }
        if let Some(&bad) = elements.iter().find(|&&b| b <= 1) {
            return Err(Error::InvalidSet(format!("element {bad} is not > 1")));
        }
        elements.sort_unstable();
        for i in 0..elements.len() {
            for j in (i + 1)..elements.len() {
                let g = gcd(elements[i], elements[j]);
                if g != 1 {
                    return Err(Error::NotCoprime {
                        a: elements[i],
                        b: elements[j],
                        gcd: g,
                    });
                }
            }
        }
        Ok(Self {
            kind: SetKind::Custom,
            custom: elements,
        })
    }

    /// Parses one integer per line; `#` starts a comment.
    pub fn parse_custom(text: &str) -> Result<Self> {
        let mut elements = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v = line.parse::<u64>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("{line:?}: {e}"),
            })?;
            elements.push(v);
        }
        Self::custom(elements)
    }

    pub fn load_custom(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_custom(&text)
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    /// The exponent `m` for `{p^m}` sets.
    pub fn power(&self) -> Option<u32> {
        match self.kind {
            SetKind::PowerFree(m) => Some(m),
            SetKind::Custom => None,
        }
    }

    /// The stored list of a custom set; empty for rule-based sets.
    pub fn custom_elements(&self) -> &[u64] {
        &self.custom
    }

    /// All `b ∈ B` with `b ≤ bound`, ascending.
    pub fn elements_upto(&self, bound: u64) -> Vec<u64> {
        match self.kind {
            SetKind::PowerFree(m) => {
                let (primes, end) = primes_slice(iroot(bound, m));
                primes[..end].iter().map(|&p| p.pow(m)).collect()
            }
            SetKind::Custom => self.custom.iter().copied().take_while(|&b| b <= bound).collect(),
        }
    }

    /// The exponent `α` for which `⟨B⟩` is known to have index `α`, if the
    /// set is rule-based. Custom sets have finitely many generators and
    /// index 0.
    pub fn natural_index(&self) -> Option<f64> {
        self.power().map(|m| 1.0 / m as f64)
    }

    /// Trial-division check of `n` against every `b ≤ n`.
    pub fn is_bfree(&self, n: u64) -> bool {
        match self.kind {
            SetKind::PowerFree(m) => {
                let mut rest = n;
                let (primes, end) = primes_slice(iroot(n, m));
                for &p in &primes[..end] {
                    let b = p.pow(m);
                    if b > rest {
                        break;
                    }
                    if rest.is_multiple_of(p) {
                        let mut e = 0;
                        while rest.is_multiple_of(p) {
                            rest /= p;
                            e += 1;
                        }
                        if e >= m {
                            return false;
                        }
                    }
                }
                true
            }
            SetKind::Custom => self.custom.iter().take_while(|&&b| b <= n).all(|&b| !n.is_multiple_of(b)),
        }
    }

    /// Writes `n = b₁^e₁ ⋯ b_k^e_k` over `B`, or `None` if `n ∉ ⟨B⟩`.
    pub fn factor(&self, n: u64) -> Option<Vec<(u64, u32)>> {
        if n == 0 {
            return None;
        }
        let mut rest = n;
        let mut out = Vec::new();
        match self.kind {
            SetKind::PowerFree(m) => {
                let (primes, end) = primes_slice(iroot(n, m));
                for &p in &primes[..end] {
                    if rest == 1 {
                        break;
                    }
                    if p.pow(m) > rest {
                        return None;
                    }
                    if rest.is_multiple_of(p) {
                        let mut e = 0u32;
                        while rest.is_multiple_of(p) {
                            rest /= p;
                            e += 1;
                        }
                        if !e.is_multiple_of(m) {
                            return None;
                        }
                        out.push((p.pow(m), e / m));
                    }
                }
            }
            SetKind::Custom => {
                for &b in &self.custom {
                    if rest == 1 || b > rest {
                        break;
                    }
                    let mut e = 0u32;
                    while rest.is_multiple_of(b) {
                        rest /= b;
                        e += 1;
                    }
                    if e > 0 {
                        out.push((b, e));
                    }
                }
            }
        }
        (rest == 1).then_some(out)
    }

    /// The elements of `B` dividing `r` (for `r ∈ [B]` these are its factors).
    pub fn divisors_in_b(&self, r: u64) -> Vec<u64> {
        match self.kind {
            SetKind::PowerFree(m) => {
                let mut rest = r;
                let mut out = Vec::new();
                let (primes, end) = primes_slice(iroot(r, m));
                for &p in &primes[..end] {
                    let b = p.pow(m);
                    if b > r {
                        break;
                    }
                    if rest.is_multiple_of(p) {
                        let mut e = 0;
                        while rest.is_multiple_of(p) {
                            rest /= p;
                            e += 1;
                        }
                        if e >= m {
                            out.push(b);
                        }
                    }
                }
                out
            }
            SetKind::Custom => self.custom.iter().copied().filter(|&b| r.is_multiple_of(b)).collect(),
        }
    }

    /// Short descriptor used in reports.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SievingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SetKind::PowerFree(2) => write!(f, "squarefree"),
            SetKind::PowerFree(3) => write!(f, "cubefree"),
            SetKind::PowerFree(m) => write!(f, "m={m}"),
            SetKind::Custom => {
                write!(f, "custom[")?;
                for (i, b) in self.custom.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// `μ_B(n)`: `(−1)^k` when `n` is a product of `k` distinct elements of
/// `B`, zero otherwise, and `μ_B(1) = 1`.
pub fn mu_b(set: &SievingSet, n: u64) -> i8 {
    match set.factor(n) {
        Some(f) if f.iter().all(|&(_, e)| e == 1) => {
            if f.len() % 2 == 0 {
                1
            } else {
                -1
            }
        }
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_squarefree(n: u64) -> bool {
        (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d * d))
    }

    #[test]
    fn squares_of_primes_upto_30() {
        assert_eq!(SievingSet::squarefree().elements_upto(30), vec![4, 9, 25]);
        assert_eq!(SievingSet::cubefree().elements_upto(30), vec![8, 27]);
    }

    #[test]
    fn custom_validation() {
        match SievingSet::custom(vec![6, 10]) {
            Err(Error::NotCoprime { a: 6, b: 10, gcd: 2 }) => {}
            other => panic!("expected coprimality error, got {other:?}"),
        }
        assert!(SievingSet::custom(vec![4]).is_ok());
        assert!(matches!(SievingSet::custom(vec![1, 4]), Err(Error::InvalidSet(_))));
        assert!(matches!(SievingSet::custom(Vec::new()), Err(Error::InvalidSet(_))));
        assert!(matches!(SievingSet::custom(vec![9, 9]), Err(Error::NotCoprime { .. })));
        assert!(SievingSet::power_free(1).is_err());
    }

    #[test]
    fn custom_file_format() {
        let set = SievingSet::parse_custom("# generators\n9\n4  # two squared\n\n25\n").unwrap();
        assert_eq!(set.custom_elements(), &[4, 9, 25]);
        assert!(matches!(
            SievingSet::parse_custom("4\nfour\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn mu_b_examples() {
        let sq = SievingSet::squarefree();
        assert_eq!(mu_b(&sq, 36), 1);
        assert_eq!(mu_b(&sq, 4), -1);
        assert_eq!(mu_b(&sq, 8), 0);
        assert_eq!(mu_b(&sq, 16), 0);
        assert_eq!(mu_b(&sq, 1), 1);
        assert_eq!(mu_b(&sq, 900), -1);
        let c = SievingSet::custom(vec![4, 9, 5]).unwrap();
        assert_eq!(mu_b(&c, 180), -1);
        assert_eq!(mu_b(&c, 20), 1);
        assert_eq!(mu_b(&c, 25), 0);
    }

    #[test]
    fn is_bfree_matches_trial_division() {
        let sq = SievingSet::squarefree();
        for n in 1..5000 {
            assert_eq!(sq.is_bfree(n), trial_squarefree(n), "n = {n}");
        }
        assert!(!SievingSet::cubefree().is_bfree(8));
        assert!(SievingSet::cubefree().is_bfree(4));
    }

    #[test]
    fn divisors_in_b_lists_factors() {
        let sq = SievingSet::squarefree();
        assert_eq!(sq.divisors_in_b(36), vec![4, 9]);
        assert_eq!(sq.divisors_in_b(72), vec![4, 9]);
        assert_eq!(sq.factor(72), None);
        assert_eq!(sq.factor(144), Some(vec![(4, 2), (9, 1)]));
    }
}
