//! Deterministic summation and small vector helpers.
//!
//! All reductions over quadrature points use a fixed-shape pairwise tree so
//! that results do not depend on thread count or reduction order.

/// Below this length a slice is summed sequentially.
const PAIRWISE_LEAF: usize = 64;

/// Sums a slice with a fixed-shape pairwise reduction.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Pairwise sum of `f(i)` over `lo..hi`; the tree depends only on the range.
pub fn pairwise_map_sum(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
    if hi - lo <= PAIRWISE_LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_map_sum(lo, mid, f) + pairwise_map_sum(mid, hi, f)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Mean-zero representative of a vector (the canonical gauge).
pub fn recentered(v: &[f64]) -> Vec<f64> {
    let mean = pairwise_sum(v) / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
