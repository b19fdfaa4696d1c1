//! Chunked sliding-window scan over `n ∈ [1, X]`.

use rayon::prelude::*;

use crate::bset::{SegmentSieve, SievingSet};
use crate::{Error, Result};

/// Smallest chunk of starting points handled by one task.
pub const CHUNK: u64 = 1 << 20;
/// Chunks evaluated in parallel before their partial results are merged.
const BATCH: usize = 32;
/// Largest window end accepted by the scan.
pub const MAX_WINDOW: u64 = 100_000_000;

/// A half-open window `(n + lo, n + hi]` relative to the starting point `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub lo: u64,
    pub hi: u64,
}

impl Window {
    pub fn new(lo: u64, hi: u64) -> Self {
        Self { lo, hi }
    }

    /// `(n, n + h]`.
    pub fn upto(h: u64) -> Self {
        Self { lo: 0, hi: h }
    }
}

/// Streams the B-free counts of every window for each `n ∈ [1, x]`.
///
/// Starting points are cut into chunks whose size depends only on the
/// inputs. Each chunk folds into its own accumulator from `init`, and the
/// accumulators are merged strictly in chunk order, so the result does not
/// depend on the number of worker threads even for floating-point state.
pub fn scan_windows<A, I, S, M>(
    set: &SievingSet,
    x: u64,
    windows: &[Window],
    init: I,
    step: S,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64, &[u64]) + Sync,
    M: Fn(&mut A, A),
{
    if x == 0 {
        return Err(Error::Precondition("X must be at least 1".into()));
    }
    if windows.is_empty() {
        return Err(Error::Precondition("no windows to scan".into()));
    }
    if let Some(w) = windows.iter().find(|w| w.lo > w.hi) {
        return Err(Error::Precondition(format!("window ({}, {}] is reversed", w.lo, w.hi)));
    }
    let reach = windows.iter().map(|w| w.hi).max().unwrap_or(0);
    if reach > MAX_WINDOW {
        return Err(Error::CostGuard(format!(
            "window end {reach} exceeds the limit {MAX_WINDOW}"
        )));
    }
    let end = x
        .checked_add(reach)
        .ok_or_else(|| Error::Overflow(format!("X + H = {x} + {reach}")))?;
    let chunk = CHUNK.max(reach.next_power_of_two());
    let sieve = SegmentSieve::new(set, end.max(1));
    let n_chunks = x.div_ceil(chunk);

    let run_chunk = |c: u64| -> A {
        let first = c * chunk + 1;
        let last = (first + chunk - 1).min(x);
        // buf[i] is the indicator of first + 1 + i, covering (first, last + reach].
        let mut buf = vec![0u8; (last - first + reach) as usize];
        if !buf.is_empty() {
            sieve.fill(first + 1, &mut buf);
        }
        let mut counts: Vec<u64> = windows
            .iter()
            .map(|w| buf[w.lo as usize..w.hi as usize].iter().map(|&b| b as u64).sum())
            .collect();
        let mut acc = init();
        for n in first..=last {
            step(&mut acc, n, &counts);
            if n == last {
                break;
            }
            let off = (n - first) as usize;
            for (cnt, w) in counts.iter_mut().zip(windows) {
                *cnt = *cnt + buf[off + w.hi as usize] as u64 - buf[off + w.lo as usize] as u64;
            }
        }
        acc
    };

    let mut total = init();
    let mut c = 0;
    while c < n_chunks {
        let upto = (c + BATCH as u64).min(n_chunks);
        let parts: Vec<A> = (c..upto).into_par_iter().map(run_chunk).collect();
        for part in parts {
            merge(&mut total, part);
        }
        c = upto;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(set: &SievingSet, n: u64, w: Window) -> u64 {
        (n + w.lo + 1..=n + w.hi).filter(|&u| set.is_bfree(u)).count() as u64
    }

    #[test]
    fn sliding_counts_match_direct_counting() {
        let set = SievingSet::squarefree();
        let windows = [Window::upto(7), Window::new(3, 10), Window::new(5, 5)];
        let x = 3 * CHUNK + 17;
        let seen = scan_windows(
            &set,
            x,
            &windows,
            Vec::new,
            |acc: &mut Vec<(u64, Vec<u64>)>, n, c| {
                if n % 99_991 == 0 || n <= 3 || n + 2 >= x || (n % CHUNK) < 2 {
                    acc.push((n, c.to_vec()));
                }
            },
            |a, b| a.extend(b),
        )
        .unwrap();
        assert!(seen.len() > 40);
        for (n, c) in seen {
            for (w, &got) in windows.iter().zip(&c) {
                assert_eq!(got, naive(&set, n, *w), "n = {n}, window {w:?}");
            }
        }
    }

    #[test]
    fn visits_every_start_once_in_order() {
        let set = SievingSet::cubefree();
        let x = 2 * CHUNK + 5;
        let (count, last, ordered) = scan_windows(
            &set,
            x,
            &[Window::upto(3)],
            || (0u64, 0u64, true),
            |acc, n, _| {
                acc.2 &= acc.0 == 0 || n == acc.1 + 1;
                acc.0 += 1;
                acc.1 = n;
            },
            |a, b| {
                a.2 &= a.2 && b.2 && (a.0 == 0 || b.1 - b.0 == a.1);
                a.0 += b.0;
                a.1 = b.1;
            },
        )
        .unwrap();
        assert_eq!((count, last), (x, x));
        assert!(ordered);
    }

    #[test]
    fn rejects_bad_inputs() {
        let set = SievingSet::squarefree();
        let noop = |_: &mut (), _: u64, _: &[u64]| {};
        assert!(scan_windows(&set, 0, &[Window::upto(1)], || (), noop, |_, _| {}).is_err());
        assert!(scan_windows(&set, 10, &[], || (), noop, |_, _| {}).is_err());
        assert!(matches!(
            scan_windows(&set, 10, &[Window::upto(MAX_WINDOW + 1)], || (), noop, |_, _| {}),
            Err(Error::CostGuard(_))
        ));
    }
}
