//! Deterministic reductions and candidate grids shared by the integrators and searches.

const SEQUENTIAL_BLOCK: usize = 64;
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// Pairwise sum of a slice. The tree shape depends only on the length, so results are
/// reproducible bit for bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= SEQUENTIAL_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `term(i)` for `i` in `lo..hi`, split across threads above a fixed size.
/// The split points are fixed, so the parallel and sequential results agree exactly.
pub fn pairwise_sum_by<F>(lo: usize, hi: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let len = hi - lo;
    if len <= SEQUENTIAL_BLOCK {
        return (lo..hi).map(term).sum();
    }
    let mid = lo + len / 2;
    if len >= PARALLEL_THRESHOLD {
        let (a, b) = rayon::join(|| pairwise_sum_by(lo, mid, term), || pairwise_sum_by(mid, hi, term));
        a + b
    } else {
        pairwise_sum_by(lo, mid, term) + pairwise_sum_by(mid, hi, term)
    }
}

/// Log-spaced candidates `2^(j + s/per_octave)` for `j` in `lo_exp..hi_exp`, `s` in
/// `0..per_octave`, closed by `2^hi_exp`. Dyadic points are produced exactly.
pub fn dyadic_log_grid(lo_exp: i32, hi_exp: i32, per_octave: u32) -> Vec<f64> {
    let per_octave = per_octave.max(1);
    let mut out = Vec::with_capacity(((hi_exp - lo_exp).max(0) as usize) * per_octave as usize + 1);
    for j in lo_exp..hi_exp {
        out.push(2f64.powi(j));
        for s in 1..per_octave {
            out.push((j as f64 + s as f64 / per_octave as f64).exp2());
        }
    }
    out.push(2f64.powi(hi_exp));
    out
}

/// Sum of `terms`, sorted ascending by magnitude before the pairwise pass.
pub fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    pairwise_sum(&terms)
}
