//! Sums over fraction tuples `a_i / r_i` whose total is an integer.

use std::collections::HashMap;

use num_complex::Complex64;

use super::fractions::reduced_fractions;
use super::kernels::{f_kernel, PhiKernel};
use crate::arith::gcd;
use crate::bset::{mu_b, SievingSet};
use crate::{Error, Result};

/// Most partial tuples either half of a meet-in-the-middle join may hold.
pub const MAX_HALF_TUPLES: u128 = 20_000_000;

/// A coordinate: modulus `r_i` and the values `G_i(a/r_i)` on chosen
/// numerators `a`.
#[derive(Debug, Clone)]
pub struct Coordinate {
    pub modulus: u64,
    pub entries: Vec<(u64, Complex64)>,
}

fn half_cost(coords: &[&Coordinate]) -> u128 {
    coords.iter().map(|c| c.entries.len() as u128).product()
}

/// Visits every combination of one entry per coordinate, passing the
/// residue `Σ a_i (r / r_i) mod r` and the product of values.
fn for_each_combo(coords: &[&Coordinate], r: u64, f: &mut impl FnMut(u64, Complex64)) {
    fn go(
        coords: &[&Coordinate],
        r: u64,
        acc: u64,
        prod: Complex64,
        f: &mut impl FnMut(u64, Complex64),
    ) {
        let Some((first, rest)) = coords.split_first() else {
            f(acc, prod);
            return;
        };
        let scale = r / first.modulus;
        for &(a, v) in &first.entries {
            let res = ((a as u128 * scale as u128 + acc as u128) % r as u128) as u64;
            go(rest, r, res, prod * v, f);
        }
    }
    go(coords, r, 0, Complex64::new(1.0, 0.0), f);
}

/// `Σ_{Σ a_i/r_i ∈ ℤ} ∏ G_i(a_i/r_i)` by a hash join between two groups of
/// coordinates, chosen to minimise the number of partial tuples.
pub fn constrained_sum(coords: &[Coordinate]) -> Result<Complex64> {
    let refs: Vec<&Coordinate> = coords.iter().collect();
    constrained_sum_refs(&refs)
}

/// Splits the coordinates into the two join sides with the least total
/// number of partial tuples.
fn best_split<'a>(coords: &[&'a Coordinate]) -> (Vec<&'a Coordinate>, Vec<&'a Coordinate>) {
    let k = coords.len();
    let mut best = (u128::MAX, 1usize);
    for mask in 1..(1usize << k) {
        let (l, r): (Vec<_>, Vec<_>) = (0..k).partition(|i| mask >> i & 1 == 1);
        let lc: u128 = l.iter().map(|&i| coords[i].entries.len() as u128).product();
        let rc: u128 = r.iter().map(|&i| coords[i].entries.len() as u128).product();
        if lc + rc < best.0 {
            best = (lc + rc, mask);
        }
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, &c) in coords.iter().enumerate() {
        if best.1 >> i & 1 == 1 {
            left.push(c);
        } else {
            right.push(c);
        }
    }
    (left, right)
}

/// Cost of [`constrained_sum`] in partial tuples: `(left, right)`.
pub(crate) fn join_cost(coords: &[&Coordinate]) -> (u128, u128) {
    let (left, right) = best_split(coords);
    (half_cost(&left), half_cost(&right))
}

pub(crate) fn constrained_sum_refs(coords: &[&Coordinate]) -> Result<Complex64> {
    if coords.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let moduli: Vec<u64> = coords.iter().map(|c| c.modulus).collect();
    let r = lcm_all(&moduli).ok_or_else(|| Error::Overflow("lcm of moduli".into()))?;
    let (left, right) = best_split(coords);
    let (lc, rc) = (half_cost(&left), half_cost(&right));
    if lc > MAX_HALF_TUPLES || rc > MAX_HALF_TUPLES {
        return Err(Error::CostGuard(format!(
            "congruence enumeration needs {lc} x {rc} partial tuples"
        )));
    }
    let mut table: HashMap<u64, Complex64> = HashMap::new();
    for_each_combo(&left, r, &mut |res, v| *table.entry(res).or_default() += v);
    let mut total = Complex64::new(0.0, 0.0);
    for_each_combo(&right, r, &mut |res, v| {
        if let Some(&l) = table.get(&((r - res) % r)) {
            total += l * v;
        }
    });
    Ok(total)
}

fn check_distinct_product(set: &SievingSet, r: u64) -> Result<()> {
    if r <= 1 || mu_b(set, r) == 0 {
        return Err(Error::Precondition(format!("modulus {r} is not in [B] or equals 1")));
    }
    Ok(())
}

/// `S_H(r) = Σ_{ρ_i ∈ 𝓡_B(r_i), Σ ρ_i ∈ ℤ} ∏ F_H(ρ_i)`.
pub fn s_h(set: &SievingSet, h: u64, moduli: &[u64]) -> Result<f64> {
    let coords = moduli
        .iter()
        .map(|&r| {
            check_distinct_product(set, r)?;
            let red = reduced_fractions(set, r)?;
            Ok(Coordinate {
                modulus: r,
                entries: red
                    .numerators
                    .iter()
                    .map(|&a| (a % r, Complex64::new(f_kernel(h, a as f64 / r as f64), 0.0)))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(constrained_sum(&coords)?.re)
}

/// Both sides of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub lhs: f64,
    pub rhs: f64,
}

impl Margin {
    /// `lhs ≤ rhs` up to an additive slack.
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

/// The Montgomery–Vaughan bound for constrained sums over full residue
/// systems: `|Σ_{Σρ_i ≡ 0} ∏ G_i(ρ_i)| ≤ (1/r) ∏ (r_i Σ |G_i|²)^{1/2}`.
///
/// `tables[i][a − 1]` is `G_i(a/r_i)` for `a = 1..=r_i`. The hypothesis that
/// every element of `B` dividing `r = [r_1, …, r_k]` divides at least two
/// of the `r_i` is checked first.
pub fn fundamental_lemma_margin(
    set: &SievingSet,
    moduli: &[u64],
    tables: &[Vec<Complex64>],
) -> Result<Margin> {
    if moduli.len() != tables.len() {
        return Err(Error::Precondition("one table per modulus required".into()));
    }
    for (&r, t) in moduli.iter().zip(tables) {
        if r == 0 || mu_b(set, r) == 0 {
            return Err(Error::Precondition(format!("modulus {r} is not in [B]")));
        }
        if t.len() as u64 != r {
            return Err(Error::Precondition(format!("table for modulus {r} has {} entries", t.len())));
        }
    }
    let r = lcm_all(moduli).ok_or_else(|| Error::Overflow("lcm of moduli".into()))?;
    for b in set.divisors_in_b(r) {
        let hits = moduli.iter().filter(|&&m| m % b == 0).count();
        if hits < 2 {
            return Err(Error::Hypothesis(format!(
                "{b} divides the lcm {r} but only {hits} of the moduli {moduli:?}"
            )));
        }
    }
    let coords: Vec<Coordinate> = moduli
        .iter()
        .zip(tables)
        .map(|(&m, t)| Coordinate {
            modulus: m,
            entries: (1..=m).map(|a| (a % m, t[a as usize - 1])).collect(),
        })
        .collect();
    let lhs = constrained_sum(&coords)?.norm();
    let rhs = moduli
        .iter()
        .zip(tables)
        .map(|(&m, t)| (m as f64 * t.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt())
        .product::<f64>()
        / r as f64;
    Ok(Margin { lhs, rhs })
}

/// The Montgomery–Soundararajan bound
/// `|Σ_{0<a_i<q_i, Σ a_i/q_i ∈ ℤ} ∏ G(a_i/q_i)| ≤ (1/[q]) ∏ q_i G₀(q_i)^{1/2}`.
///
/// The hypothesis `Σ_{a<q} |G(a/q)|² ≤ q G₀(q)` and the monotonicity of
/// `G₀` are checked on every `1 < q ∈ [B]` dividing `[q_1, …, q_k]`; the
/// full statement quantifies over all of `[B]`, which no finite check
/// covers.
pub fn ms_lemma_margin<G, G0>(set: &SievingSet, moduli: &[u64], g: G, g0: G0) -> Result<Margin>
where
    G: Fn(f64) -> Complex64,
    G0: Fn(u64) -> f64,
{
    for &q in moduli {
        check_distinct_product(set, q)?;
    }
    let l = lcm_all(moduli).ok_or_else(|| Error::Overflow("lcm of moduli".into()))?;
    let mut divisors: Vec<u64> = Vec::new();
    crate::bset::for_each_product(set, l, true, (), &|_, _, _| (), &mut |d, _| {
        if d > 1 && l % d == 0 {
            divisors.push(d);
        }
    });
    divisors.sort_unstable();
    let mut prev = f64::NEG_INFINITY;
    for &q in &divisors {
        let bound = g0(q);
        if bound < prev {
            return Err(Error::Hypothesis(format!("G0 decreases at q = {q}")));
        }
        prev = bound;
        let energy: f64 = (1..q).map(|a| g(a as f64 / q as f64).norm_sqr()).sum();
        if energy > q as f64 * bound * (1.0 + 1e-12) {
            return Err(Error::Hypothesis(format!(
                "sum of |G(a/{q})|^2 = {energy:.6e} exceeds q G0(q) = {:.6e}",
                q as f64 * bound
            )));
        }
    }
    let coords: Vec<Coordinate> = moduli
        .iter()
        .map(|&q| Coordinate {
            modulus: q,
            entries: (1..q).map(|a| (a, g(a as f64 / q as f64))).collect(),
        })
        .collect();
    let lhs = constrained_sum(&coords)?.norm();
    let rhs = moduli
        .iter()
        .map(|&q| q as f64 * g0(q).sqrt())
        .product::<f64>()
        / l as f64;
    Ok(Margin { lhs, rhs })
}

fn gcd_bfree(set: &SievingSet, a: u64, n: u64) -> bool {
    set.is_bfree(gcd(a, n))
}

/// `J_H(b, n) = Σ_{a ≤ n, (a,n) and (b−a,n) B-free} Φ_H(a/n) Φ_H((b−a)/n)`.
pub fn j_kernel(set: &SievingSet, kernel: &PhiKernel, b: u64, n: u64) -> Result<Complex64> {
    if mu_b(set, n) == 0 {
        return Err(Error::Precondition(format!("{n} is not in [B]")));
    }
    if b == 0 || b > n {
        return Err(Error::Precondition(format!("need 1 <= b <= n, got b = {b}, n = {n}")));
    }
    let nf = n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for a in 1..=n {
        let c = (b + n - a) % n;
        if gcd_bfree(set, a, n) && gcd_bfree(set, c, n) {
            total += kernel.eval(a as f64 / nf) * kernel.eval(c as f64 / nf);
        }
    }
    Ok(total)
}

/// `lcm` over a slice, `None` on overflow.
pub fn lcm_all(xs: &[u64]) -> Option<u64> {
    xs.iter().try_fold(1u64, |l, &x| {
        let g = gcd(l, x);
        (l / g).checked_mul(x)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::StepFunction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Nested loops over every numerator tuple with an exact integer test.
    fn brute_s_h(set: &SievingSet, h: u64, moduli: &[u64]) -> f64 {
        let r: u64 = moduli.iter().fold(1, |l, &m| l / gcd(l, m) * m);
        let lists: Vec<Vec<u64>> = moduli
            .iter()
            .map(|&m| (1..=m).filter(|&a| set.is_bfree(gcd(a, m))).collect())
            .collect();
        let mut idx = vec![0usize; moduli.len()];
        let mut total = 0.0;
        'outer: loop {
            let num: u64 = idx.iter().zip(moduli).zip(&lists).map(|((&i, &m), l)| l[i] * (r / m)).sum();
            if num.is_multiple_of(r) {
                total += idx
                    .iter()
                    .zip(moduli)
                    .zip(&lists)
                    .map(|((&i, &m), l)| f_kernel(h, l[i] as f64 / m as f64))
                    .product::<f64>();
            }
            for j in 0..idx.len() {
                idx[j] += 1;
                if idx[j] < lists[j].len() {
                    continue 'outer;
                }
                idx[j] = 0;
            }
            break;
        }
        total
    }

    #[test]
    fn s_h_matches_exhaustive_loops() {
        let set = SievingSet::squarefree();
        let pool = [4u64, 9, 25, 36, 49, 100, 225];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let k = rng.gen_range(2..=3);
            let moduli: Vec<u64> = (0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            let h = rng.gen_range(1..50);
            let got = s_h(&set, h, &moduli).unwrap();
            let want = brute_s_h(&set, h, &moduli);
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{moduli:?}, H = {h}");
            let mut rev = moduli.clone();
            rev.reverse();
            assert!((s_h(&set, h, &rev).unwrap() - got).abs() <= 1e-9 * got.abs().max(1.0));
        }
    }

    #[test]
    fn equal_moduli_pair_diagonally() {
        let set = SievingSet::squarefree();
        let red = reduced_fractions(&set, 36).unwrap();
        let want: f64 = red.numerators.iter().map(|&a| f_kernel(10, a as f64 / 36.0).powi(2)).sum();
        assert!((s_h(&set, 10, &[36, 36]).unwrap() - want).abs() < 1e-9);
        let mixed = s_h(&set, 10, &[4, 9]).unwrap();
        assert!((mixed - brute_s_h(&set, 10, &[4, 9])).abs() < 1e-12);
    }

    fn random_table(rng: &mut ChaCha8Rng, m: u64) -> Vec<Complex64> {
        (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn fundamental_lemma_holds() {
        let set = SievingSet::squarefree();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let shapes: [&[u64]; 4] = [&[4, 4], &[36, 4, 9], &[4, 36, 9, 36], &[25, 25, 25]];
        for trial in 0..1000 {
            let moduli = shapes[trial % shapes.len()];
            let tables: Vec<_> = moduli.iter().map(|&m| random_table(&mut rng, m)).collect();
            let m = fundamental_lemma_margin(&set, moduli, &tables).unwrap();
            assert!(m.holds(1e-9), "{moduli:?}: {m:?}");
        }
        let zeros = vec![vec![Complex64::new(0.0, 0.0); 4]; 2];
        let m = fundamental_lemma_margin(&set, &[4, 4], &zeros).unwrap();
        assert_eq!((m.lhs, m.rhs), (0.0, 0.0));
        let t = vec![random_table(&mut rng, 4), random_table(&mut rng, 9)];
        assert!(matches!(fundamental_lemma_margin(&set, &[4, 9], &t), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn ms_lemma_holds() {
        let set = SievingSet::squarefree();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pool = [4u64, 9, 25, 36, 49, 100, 121, 196];
        for _ in 0..1000 {
            let q = [pool[rng.gen_range(0..pool.len())], pool[rng.gen_range(0..pool.len())]];
            let h = rng.gen_range(4..40u64);
            let m = ms_lemma_margin(
                &set,
                &q,
                |t| Complex64::new(f_kernel(h, t), 0.0),
                |q| (q * h) as f64,
            )
            .unwrap();
            assert!(m.holds(1e-9), "{q:?}, H = {h}: {m:?}");
        }
        for q in [[4u64, 9, 36], [36, 36, 36], [4, 4, 36]] {
            let m = ms_lemma_margin(&set, &q, |t| Complex64::new(f_kernel(8, t), 0.0), |q| (q * 8) as f64).unwrap();
            assert!(m.holds(1e-9));
        }
        let zero = ms_lemma_margin(&set, &[4, 9], |_| Complex64::new(0.0, 0.0), |_| 1.0).unwrap();
        assert_eq!(zero.lhs, 0.0);
        let bad = ms_lemma_margin(&set, &[4], |_| Complex64::new(5.0, 0.0), |_| 1.0);
        assert!(matches!(bad, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn j_kernel_small_case() {
        let set = SievingSet::squarefree();
        let k = PhiKernel::new(&StepFunction::indicator(), 8).unwrap();
        // n = 4, b = 4: a ∈ {1, 2, 3} with 4 − a ∈ {3, 2, 1}.
        let want: Complex64 = (1..=3u64).map(|a| k.eval(a as f64 / 4.0) * k.eval((4 - a) as f64 / 4.0)).sum();
        assert!((j_kernel(&set, &k, 4, 4).unwrap() - want).norm() < 1e-12);
        let zero = PhiKernel::new(&StepFunction::parse("0 1 0").unwrap(), 8).unwrap();
        assert_eq!(j_kernel(&set, &zero, 3, 4).unwrap(), Complex64::new(0.0, 0.0));
        assert!(j_kernel(&set, &k, 5, 4).is_err());
        assert!(j_kernel(&set, &k, 1, 8).is_err());
    }

    #[test]
    fn j_energy_grows_like_n_cubed_h() {
        let set = SievingSet::squarefree();
        let h = 12;
        let k = PhiKernel::new(&StepFunction::indicator(), h).unwrap();
        let ratios: Vec<f64> = [4u64, 9, 36, 100, 225, 441, 900]
            .iter()
            .map(|&n| {
                let e: f64 = (1..n).map(|b| j_kernel(&set, &k, b, n).unwrap().norm_sqr()).sum();
                e / ((n as f64).powi(3) * h as f64)
            })
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 10.0, "{ratios:?}");
        assert!(ratios.last().unwrap() <= &(2.0 * ratios[2]), "{ratios:?}");
    }
}
