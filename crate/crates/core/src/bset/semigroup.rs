use super::SievingSet;
use crate::{Error, Result};

/// Depth-first walk over `⟨B⟩ ∩ [1, limit]` (or `[B]` when `distinct`),
/// threading a state through multiplications.
///
/// `step(state, b, e)` is called when the generator `b` is included with
/// exponent `e`; `visit(n, state)` sees every element exactly once,
/// starting with `1` and the seed state. Coprimality of the generators
/// makes every product unique.
pub fn for_each_product<T, S, V>(
    set: &SievingSet,
    limit: u64,
    distinct: bool,
    seed: T,
    step: &S,
    visit: &mut V,
) where
    T: Copy,
    S: Fn(T, u64, u32) -> T,
    V: FnMut(u64, T),
{
    let gens = set.elements_upto(limit);
    visit(1, seed);
    walk(&gens, 0, 1, limit, distinct, seed, step, visit);
}

#[allow(clippy::too_many_arguments)]
fn walk<T, S, V>(
    gens: &[u64],
    from: usize,
    current: u64,
    limit: u64,
    distinct: bool,
    state: T,
    step: &S,
    visit: &mut V,
) where
    T: Copy,
    S: Fn(T, u64, u32) -> T,
    V: FnMut(u64, T),
{
    for (i, &b) in gens.iter().enumerate().skip(from) {
        let Some(mut value) = current.checked_mul(b).filter(|&v| v <= limit) else {
            // Generators ascend, so no later one fits either.
            break;
        };
        let mut e = 1;
        loop {
            let next_state = step(state, b, e);
            visit(value, next_state);
            walk(gens, i + 1, value, limit, distinct, next_state, step, visit);
            if distinct {
                break;
            }
            match value.checked_mul(b).filter(|&v| v <= limit) {
                Some(v) => {
                    value = v;
                    e += 1;
                }
                None => break,
            }
        }
    }
}

/// `⟨B⟩ ∩ [1, limit]`, or `[B] ∩ [1, limit]` when `squarefree_only`,
/// sorted ascending; always contains `1`.
pub fn enumerate_semigroup(set: &SievingSet, limit: u64, squarefree_only: bool) -> Vec<u64> {
    let mut out = Vec::new();
    for_each_product(set, limit, squarefree_only, (), &|_, _, _| (), &mut |n, _| out.push(n));
    out.sort_unstable();
    out
}

/// `N_⟨B⟩(limit)` (or `N_[B]`) without storing the elements.
pub fn count_semigroup(set: &SievingSet, limit: u64, squarefree_only: bool) -> u64 {
    let mut count = 0u64;
    for_each_product(set, limit, squarefree_only, (), &|_, _, _| (), &mut |_, _| count += 1);
    count
}

/// Empirical index of `⟨B⟩`: `log N(x) / log x` at `x = limit`, `limit/4`
/// and `limit/16`. Always a heuristic; the drift between the three values
/// shows how far from the limit the estimate is.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexEstimate {
    pub alpha: f64,
    pub limit: u64,
    pub count: u64,
    /// `(x, N(x), log N(x) / log x)` at `limit/4` and `limit/16`.
    pub drift: Vec<(u64, u64, f64)>,
}

pub fn estimate_index(set: &SievingSet, limit: u64) -> Result<IndexEstimate> {
    let count = count_semigroup(set, limit, false);
    if count < 10 {
        return Err(Error::Degenerate(format!(
            "only {count} semigroup elements up to {limit}, need at least 10"
        )));
    }
    let ratio = |x: u64, n: u64| (n as f64).ln() / (x as f64).ln();
    let drift = [limit / 4, limit / 16]
        .into_iter()
        .filter(|&x| x >= 2)
        .map(|x| {
            let n = count_semigroup(set, x, false);
            (x, n, ratio(x, n))
        })
        .collect();
    Ok(IndexEstimate {
        alpha: ratio(limit, count),
        limit,
        count,
        drift,
    })
}
