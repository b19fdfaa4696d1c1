//! Truncated higher limiting moments `C_k(H; φ)`.

use num_complex::Complex64;

use super::congruence::{constrained_sum_refs, join_cost, lcm_all, Coordinate};
use super::fractions::reduced_fractions;
use super::kernels::PhiKernel;
use crate::arith::{gcd, KahanSum};
use crate::bset::{for_each_product, SievingSet};
use crate::constants::density;
use crate::stats::StepFunction;
use crate::{Approximation, Error, Result, Rigor};

/// Budget of partial tuples over all moduli tuples of one call.
pub const MAX_TOTAL_WORK: u128 = 2_000_000_000;

/// `g(r) = μ_B(r)/r · ∏_{b ∤ r}(1 − 1/b)`, from the full density.
fn g_weight(set: &SievingSet, r: u64, sign: f64, density: f64) -> f64 {
    let divided: f64 = set.divisors_in_b(r).iter().map(|&b| 1.0 - 1.0 / b as f64).product();
    sign / r as f64 * density / divided
}

struct Modulus {
    r: u64,
    g: f64,
    coord: Coordinate,
}

fn multiplicity(idx: &[usize]) -> f64 {
    let k = idx.len();
    let mut m: f64 = (1..=k).map(|i| i as f64).product();
    let mut run = 1;
    for i in 1..=k {
        if i < k && idx[i] == idx[i - 1] {
            run += 1;
        } else {
            m /= (1..=run).map(|i| i as f64).product::<f64>();
            run = 1;
        }
    }
    m
}

/// Nondecreasing index tuples with lcm of moduli at most `limit`.
fn for_each_tuple(mods: &[Modulus], k: usize, limit: u64, f: &mut impl FnMut(&[usize], u64)) {
    fn go(
        mods: &[Modulus],
        k: usize,
        limit: u64,
        from: usize,
        l: u64,
        idx: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize], u64),
    ) {
        if idx.len() == k {
            f(idx, l);
            return;
        }
        for (i, m) in mods.iter().enumerate().skip(from) {
            let Some(nl) = (l / gcd(l, m.r)).checked_mul(m.r).filter(|&x| x <= limit) else {
                continue;
            };
            idx.push(i);
            go(mods, k, limit, i, nl, idx, f);
            idx.pop();
        }
    }
    go(mods, k, limit, 0, 1, &mut Vec::with_capacity(k), f);
}

/// `C_k(H; φ)` restricted to moduli tuples `1 < r_i ∈ [B]` with
/// `[r_1, …, r_k] ≤ L`.
///
/// Each tuple's inner sum over `σ_i ∈ 𝓡_B(r_i)` with `Σ σ_i ∈ ℤ` is a hash
/// join on residues modulo the lcm. Tuples are enumerated up to order and
/// weighted by their number of permutations. The error is the change from
/// truncating at `L/2` instead, so it is only indicative.
pub fn ck_truncated(
    set: &SievingSet,
    h: u64,
    phi: &StepFunction,
    k: u32,
    lcm_cap: u64,
) -> Result<Approximation> {
    if !(2..=4).contains(&k) {
        return Err(Error::Precondition(format!("k = {k} outside 2..=4")));
    }
    if h == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    let kernel = PhiKernel::new(phi, h)?;
    let dens = density(set, 1_000_000)?.value;

    let mut found: Vec<(u64, f64)> = Vec::new();
    for_each_product(set, lcm_cap, true, 1.0f64, &|s, _, _| -s, &mut |r, s| {
        if r > 1 {
            found.push((r, s));
        }
    });
    found.sort_by_key(|e| e.0);
    let mods = found
        .iter()
        .map(|&(r, sign)| {
            let red = reduced_fractions(set, r)?;
            let entries = red
                .numerators
                .iter()
                .map(|&a| (a % r, kernel.eval(a as f64 / r as f64)))
                .collect();
            Ok(Modulus { r, g: g_weight(set, r, sign, dens), coord: Coordinate { modulus: r, entries } })
        })
        .collect::<Result<Vec<_>>>()?;

    let k = k as usize;
    let mut work = 0u128;
    let mut tuples = 0u64;
    for_each_tuple(&mods, k, lcm_cap, &mut |idx, _| {
        let refs: Vec<&Coordinate> = idx.iter().map(|&i| &mods[i].coord).collect();
        let (l, r) = join_cost(&refs);
        work += l + r;
        tuples += 1;
    });
    if work > MAX_TOTAL_WORK {
        return Err(Error::CostGuard(format!(
            "{tuples} moduli tuples need {work} partial tuples (limit {MAX_TOTAL_WORK})"
        )));
    }

    let half = lcm_cap / 2;
    let mut full = (KahanSum::new(), KahanSum::new());
    let mut inner = KahanSum::new();
    let mut failure = None;
    for_each_tuple(&mods, k, lcm_cap, &mut |idx, l| {
        if failure.is_some() {
            return;
        }
        let refs: Vec<&Coordinate> = idx.iter().map(|&i| &mods[i].coord).collect();
        match constrained_sum_refs(&refs) {
            Ok(s) => {
                let w = multiplicity(idx) * idx.iter().map(|&i| mods[i].g).product::<f64>();
                let t: Complex64 = s * w;
                full.0.add(t.re);
                full.1.add(t.im);
                if l <= half {
                    inner.add(t.re);
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let value = full.0.value();
    let mut notes = vec![format!("imaginary part {:.3e}", full.1.value())];
    if lcm_all(&found.iter().map(|e| e.0).collect::<Vec<_>>()).is_some_and(|all| all <= half) {
        notes.push("every modulus tuple of [B] is included".into());
    }
    Ok(Approximation {
        value,
        abs_error: (value - inner.value()).abs(),
        rigor: Rigor::Heuristic,
        truncation: format!("lcm <= {lcm_cap} ({tuples} tuples up to order)"),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bset::mu_b;
    use crate::theory::{c2_exact, c2_weighted};

    /// Sum over `d_i ∈ [B]` and `0 < ℓ_i < d_i` with `Σ ℓ_i/d_i ∈ ℤ` of
    /// `∏ μ_B(d_i)/d_i · Φ_H(ℓ_i/d_i)`, by exhaustive loops.
    fn brute_ck(set: &SievingSet, elems: &[u64], h: u64, phi: &StepFunction, k: usize) -> f64 {
        let kernel = PhiKernel::new(phi, h).unwrap();
        let l = elems.iter().fold(1u64, |l, &d| l / gcd(l, d) * d);
        // (numerator over l, weight μ(d)/d · Φ(ℓ/d)) for every (d, ℓ).
        let mut terms: Vec<(u64, Complex64)> = Vec::new();
        for &d in elems {
            let w = mu_b(set, d) as f64 / d as f64;
            for ell in 1..d {
                terms.push((ell * (l / d), kernel.eval(ell as f64 / d as f64) * w));
            }
        }
        let mut total = Complex64::new(0.0, 0.0);
        let mut idx = vec![0usize; k];
        'outer: loop {
            let num: u64 = idx.iter().map(|&i| terms[i].0).sum();
            if num.is_multiple_of(l) {
                total += idx.iter().map(|&i| terms[i].1).product::<Complex64>();
            }
            for j in 0..k {
                idx[j] += 1;
                if idx[j] < terms.len() {
                    continue 'outer;
                }
                idx[j] = 0;
            }
            break;
        }
        total.re
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(&[0, 1, 2, 3]), 24.0);
        assert_eq!(multiplicity(&[0, 0, 1, 1]), 6.0);
        assert_eq!(multiplicity(&[2, 2, 2]), 1.0);
        assert_eq!(multiplicity(&[1, 3, 3]), 3.0);
    }

    #[test]
    fn finite_set_matches_exhaustive_oracle() {
        let set = SievingSet::custom(vec![4, 9]).unwrap();
        let phis = [StepFunction::indicator(), StepFunction::parse("0 1/2 1\n1/2 1 -1/2").unwrap()];
        for k in [2usize, 3, 4] {
            for h in [3u64, 8] {
                for phi in &phis {
                    let got = ck_truncated(&set, h, phi, k as u32, 1296).unwrap();
                    let want = brute_ck(&set, &[4, 9, 36], h, phi, k);
                    assert!(
                        (got.value - want).abs() <= 1e-9 * want.abs().max(1e-3),
                        "k = {k}, H = {h}: {} vs {want}",
                        got.value
                    );
                }
            }
        }
    }

    #[test]
    fn second_moment_matches_variance() {
        let set = SievingSet::custom(vec![4, 9, 25]).unwrap();
        for h in [5u64, 12] {
            let ck = ck_truncated(&set, h, &StepFunction::indicator(), 2, 900).unwrap();
            let c2 = c2_exact(&set, h, 1e-12).unwrap();
            let cw = c2_weighted(&set, h, &StepFunction::indicator(), 900).unwrap();
            assert!((ck.value - c2.value).abs() < 1e-10, "{} vs {}", ck.value, c2.value);
            assert!((cw.value - c2.value).abs() < 1e-10);
        }
    }

    #[test]
    fn third_moment_is_small() {
        let set = SievingSet::squarefree();
        let phi = StepFunction::indicator();
        let c3 = ck_truncated(&set, 16, &phi, 3, 2_000).unwrap();
        let c2 = c2_exact(&set, 16, 1e-6).unwrap();
        assert!(c3.value.abs() / c2.value.powf(1.5) < 0.5, "{c3:?}");
    }

    #[test]
    fn rejects_unsupported_order() {
        let set = SievingSet::squarefree();
        assert!(ck_truncated(&set, 4, &StepFunction::indicator(), 5, 100).is_err());
        assert!(ck_truncated(&set, 4, &StepFunction::indicator(), 1, 100).is_err());
    }
}
