//! Probability-simplex utilities: membership tests, Euclidean projection and
//! a regular grid used by test oracles and sup-norm estimates.

use crate::numeric::pairwise_sum;

/// Componentwise tolerance on nonnegativity of simplex members.
pub const NONNEG_TOL: f64 = 1e-12;
/// Tolerance on the mass sum of simplex members.
pub const SUM_TOL: f64 = 1e-9;

/// Whether `v` lies in the standard simplex within the crate tolerances.
pub fn in_simplex(v: &[f64]) -> bool {
    v.iter().all(|&x| x >= -NONNEG_TOL) && (pairwise_sum(v) - 1.0).abs() <= SUM_TOL
}

/// Euclidean projection onto the standard simplex (sort-based, exact).
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            threshold = t;
        }
    }
    v.iter().map(|&x| (x - threshold).max(0.0)).collect()
}

/// Iterates over the regular simplex grid with `segments` subdivisions:
/// all vectors `(k_1, ..., k_n) / segments` with `sum k_j = segments`.
///
/// Points come out in lexicographically decreasing order starting from
/// `(1, 0, ..., 0)` and ending at `(0, ..., 0, 1)`.
pub struct SimplexGrid {
    segments: usize,
    counts: Vec<usize>,
    done: bool,
}

impl SimplexGrid {
    pub fn new(n: usize, segments: usize) -> Self {
        assert!(n >= 1 && segments >= 1);
        let mut counts = vec![0; n];
        counts[0] = segments;
        SimplexGrid {
            segments,
            counts,
            done: false,
        }
    }

    fn advance(&mut self) {
        let n = self.counts.len();
        if n == 1 || self.counts[n - 1] == self.segments {
            self.done = true;
            return;
        }
        let i = (0..n - 1).rev().find(|&j| self.counts[j] > 0).unwrap();
        self.counts[i] -= 1;
        let tail = self.counts[n - 1];
        if i + 1 != n - 1 {
            self.counts[n - 1] = 0;
        }
        self.counts[i + 1] = tail + 1;
    }
}

impl Iterator for SimplexGrid {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let point: Vec<f64> = self
            .counts
            .iter()
            .map(|&k| k as f64 / self.segments as f64)
            .collect();
        self.advance();
        Some(point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_n2_mesh_half_scans_three_points() {
        let pts: Vec<Vec<f64>> = SimplexGrid::new(2, 2).collect();
        assert_eq!(pts, vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
    }

    #[test]
    fn grid_counts_match_compositions() {
        // number of compositions of K into n parts is C(K+n-1, n-1)
        let pts: Vec<Vec<f64>> = SimplexGrid::new(3, 4).collect();
        assert_eq!(pts.len(), 15);
        for p in &pts {
            assert!(in_simplex(p));
        }
        let mut dedup = pts.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), pts.len());
    }

    #[test]
    fn grid_single_site_is_the_vertex() {
        let pts: Vec<Vec<f64>> = SimplexGrid::new(1, 7).collect();
        assert_eq!(pts, vec![vec![1.0]]);
    }

    #[test]
    fn projection_fixes_simplex_points() {
        let v = vec![0.2, 0.5, 0.3];
        let p = project_onto_simplex(&v);
        for (a, b) in v.iter().zip(&p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_of_origin_is_uniform() {
        let p = project_onto_simplex(&[0.0, 0.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn projection_clips_negative_directions() {
        let p = project_onto_simplex(&[2.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }
}
