//! Convex storage fees on the probability simplex: evaluation, exact
//! Legendre-Fenchel conjugates, conjugate maximizers and the Fenchel-Young
//! residual used by the optimality certificate.
//!
//! Every fee kind is proper, closed and convex with effective domain inside
//! the simplex, so conjugates are finite everywhere and satisfy the shift
//! rule `F*(psi + r 1) = F*(psi) + r`.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::{dot, linf_distance, pairwise_sum};
use crate::simplex::{in_simplex, project_onto_simplex, NONNEG_TOL, SUM_TOL};

/// Capacity constraints may be exceeded by at most this much.
pub const CAP_TOL: f64 = 1e-9;
/// Match tolerance for the fixed-marginal indicator fee.
pub const FIXED_MARGINAL_TOL: f64 = 1e-9;

/// A point of the standard simplex: masses assigned to the target sites.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    entries: Vec<f64>,
}

impl WeightVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("weights: empty vector"));
        }
        if entries.iter().any(|&x| !x.is_finite() || x < -NONNEG_TOL) {
            return Err(Error::invalid("weights: negative entry"));
        }
        let sum = pairwise_sum(&entries);
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(format!(
                "weights: entries sum to {sum}, expected 1"
            )));
        }
        Ok(WeightVector { entries })
    }

    /// The `j`-th vertex of the simplex.
    pub fn vertex(n: usize, j: usize) -> Self {
        let mut entries = vec![0.0; n];
        entries[j] = 1.0;
        WeightVector { entries }
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector {
            entries: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }
}

/// A convex piecewise-linear function on `[0, 1]` given by its knots.
///
/// Used for the per-unit rate `h` of separable fees `sum_j t h_j(t)`; the
/// rates must be nondecreasing and convex so the fee itself is convex.
#[derive(Debug, Clone, Deserialize)]
#[serde(transparent)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let pl = PiecewiseLinear { knots };
        pl.validate()?;
        Ok(pl)
    }

    /// Constant rate `v` on all of `[0, 1]`.
    pub fn constant(v: f64) -> Self {
        PiecewiseLinear {
            knots: vec![(0.0, v), (1.0, v)],
        }
    }

    fn validate(&self) -> Result<()> {
        let k = &self.knots;
        if k.len() < 2 {
            return Err(Error::invalid("breakpoints: need at least two knots"));
        }
        if k[0].0 != 0.0 || k[k.len() - 1].0 != 1.0 {
            return Err(Error::invalid("breakpoints: knots must span [0, 1]"));
        }
        if k.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::invalid("breakpoints: non-finite knot"));
        }
        if k.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("breakpoints: knots must strictly increase"));
        }
        let slopes = self.slopes();
        if slopes.iter().any(|&s| s < 0.0) {
            return Err(Error::invalid(
                "breakpoints: rates must be nondecreasing (nonnegative slopes)",
            ));
        }
        if slopes.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            return Err(Error::invalid(
                "breakpoints: rates must be convex (nondecreasing slopes)",
            ));
        }
        Ok(())
    }

    fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Index of the segment containing `t` (clamped to `[0, 1]`).
    fn segment(&self, t: f64) -> usize {
        let mut i = 0;
        while i + 2 < self.knots.len() && t > self.knots[i + 1].0 {
            i += 1;
        }
        i
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let i = self.segment(t);
        let (t0, v0) = self.knots[i];
        let (t1, v1) = self.knots[i + 1];
        v0 + (t - t0) * (v1 - v0) / (t1 - t0)
    }
}

/// The convex storage fee kinds, all with effective domain in the simplex.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum StorageFee {
    /// Indicator of the simplex: no fee at all.
    Zero,
    /// `<a, lambda>` on the simplex.
    Linear { a: Vec<f64> },
    /// `sigma/2 * |lambda|^2` on the simplex.
    Quadratic { sigma: f64 },
    /// `sum_j lambda_j h_j(lambda_j)` with piecewise-linear rates `h_j`.
    Separable { breakpoints: Vec<PiecewiseLinear> },
    /// Indicator of `{lambda in simplex : lambda <= u}`.
    #[serde(rename = "box")]
    Capacity { u: Vec<f64> },
    /// Indicator of a single point; conjugate is `<target, psi>`. Used for
    /// fixed-marginal transport solves rather than problem configuration.
    #[serde(rename = "fixed-marginal")]
    FixedMarginal { target: Vec<f64> },
}

impl StorageFee {
    pub fn zero() -> Self {
        StorageFee::Zero
    }

    pub fn linear(a: Vec<f64>) -> Result<Self> {
        let fee = StorageFee::Linear { a };
        fee.validate(fee.dimension().unwrap())?;
        Ok(fee)
    }

    pub fn quadratic(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::invalid("sigma: must be positive"));
        }
        Ok(StorageFee::Quadratic { sigma })
    }

    pub fn separable(breakpoints: Vec<PiecewiseLinear>) -> Result<Self> {
        let fee = StorageFee::Separable { breakpoints };
        fee.validate(fee.dimension().unwrap())?;
        Ok(fee)
    }

    pub fn capacity(u: Vec<f64>) -> Result<Self> {
        let fee = StorageFee::Capacity { u };
        fee.validate(fee.dimension().unwrap())?;
        Ok(fee)
    }

    pub fn fixed_marginal(target: &WeightVector) -> Self {
        StorageFee::FixedMarginal {
            target: target.as_slice().to_vec(),
        }
    }

    /// Number of sites the fee parameters pin down, if any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            StorageFee::Zero | StorageFee::Quadratic { .. } => None,
            StorageFee::Linear { a } => Some(a.len()),
            StorageFee::Separable { breakpoints } => Some(breakpoints.len()),
            StorageFee::Capacity { u } => Some(u.len()),
            StorageFee::FixedMarginal { target } => Some(target.len()),
        }
    }

    /// All supported kinds are convex by construction.
    pub fn is_convex(&self) -> bool {
        true
    }

    /// Validates parameters against the site count `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(d) = self.dimension() {
            if d != n {
                return Err(Error::invalid(format!(
                    "fee: parameter length {d} does not match {n} sites"
                )));
            }
        }
        match self {
            StorageFee::Zero => Ok(()),
            StorageFee::Linear { a } => {
                if a.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("a: non-finite entry"));
                }
                Ok(())
            }
            StorageFee::Quadratic { sigma } => {
                if !sigma.is_finite() || *sigma <= 0.0 {
                    return Err(Error::invalid("sigma: must be positive"));
                }
                Ok(())
            }
            StorageFee::Separable { breakpoints } => {
                for pl in breakpoints {
                    pl.validate()?;
                }
                Ok(())
            }
            StorageFee::Capacity { u } => {
                if u.iter().any(|&x| !x.is_finite() || x < 0.0) {
                    return Err(Error::invalid("u: capacities must be nonnegative"));
                }
                let reachable: f64 = u.iter().map(|&x| x.min(1.0)).sum();
                if reachable < 1.0 - 1e-12 {
                    return Err(Error::invalid(
                        "u: capacities sum to less than 1; the fee domain is empty",
                    ));
                }
                Ok(())
            }
            StorageFee::FixedMarginal { target } => {
                if !in_simplex(target) {
                    return Err(Error::invalid("target: not in the simplex"));
                }
                Ok(())
            }
        }
    }

    /// `F(lambda)`, `+inf` outside the effective domain.
    pub fn eval(&self, lambda: &[f64]) -> f64 {
        if !in_simplex(lambda) {
            return f64::INFINITY;
        }
        match self {
            StorageFee::Zero => 0.0,
            StorageFee::Linear { a } => dot(a, lambda),
            StorageFee::Quadratic { sigma } => 0.5 * sigma * dot(lambda, lambda),
            StorageFee::Separable { breakpoints } => lambda
                .iter()
                .zip(breakpoints)
                .map(|(&t, h)| t * h.eval(t))
                .sum(),
            StorageFee::Capacity { u } => {
                if lambda.iter().zip(u).all(|(&l, &cap)| l <= cap + CAP_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            StorageFee::FixedMarginal { target } => {
                if linf_distance(lambda, target) <= FIXED_MARGINAL_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `F*(psi) = sup_lambda <psi, lambda> - F(lambda)`; always finite.
    pub fn conjugate(&self, psi: &[f64]) -> Result<f64> {
        Ok(self.conjugate_pair(psi)?.0)
    }

    /// A maximizer of `<psi, lambda> - F(lambda)` over the simplex. Ties are
    /// broken toward the lowest-index vertex for the piecewise-linear kinds.
    pub fn conjugate_argmax(&self, psi: &[f64]) -> Result<WeightVector> {
        let (_, lambda) = self.conjugate_pair(psi)?;
        WeightVector::new(lambda)
    }

    /// Conjugate value and a maximizer in one pass.
    pub fn conjugate_pair(&self, psi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = psi.len();
        if n == 0 || psi.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("psi: non-finite potential"));
        }
        if let Some(d) = self.dimension() {
            if d != n {
                return Err(Error::invalid(format!(
                    "psi: length {n} does not match fee dimension {d}"
                )));
            }
        }
        match self {
            StorageFee::Zero => {
                let j = argmax(psi);
                Ok((psi[j], vertex_vec(n, j)))
            }
            StorageFee::Linear { a } => {
                let scores: Vec<f64> = psi.iter().zip(a).map(|(p, c)| p - c).collect();
                let j = argmax(&scores);
                Ok((scores[j], vertex_vec(n, j)))
            }
            StorageFee::Quadratic { sigma } => {
                let scaled: Vec<f64> = psi.iter().map(|p| p / sigma).collect();
                let lambda = project_onto_simplex(&scaled);
                let value = dot(psi, &lambda) - 0.5 * sigma * dot(&lambda, &lambda);
                Ok((value, lambda))
            }
            StorageFee::Separable { breakpoints } => separable_conjugate(psi, breakpoints),
            StorageFee::Capacity { u } => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| psi[b].partial_cmp(&psi[a]).unwrap().then(a.cmp(&b)));
                let mut lambda = vec![0.0; n];
                let mut remaining = 1.0;
                for j in order {
                    if remaining <= 0.0 {
                        break;
                    }
                    let take = u[j].min(remaining);
                    lambda[j] = take;
                    remaining -= take;
                }
                if remaining > 1e-12 {
                    return Err(Error::ConjugateSolveFailed(
                        "capacity fill left unassigned mass".into(),
                    ));
                }
                Ok((dot(psi, &lambda), lambda))
            }
            StorageFee::FixedMarginal { target } => Ok((dot(psi, target), target.clone())),
        }
    }

    /// A canonical element of the subdifferential at a domain point, for the
    /// kinds whose subdifferential has a natural finite selection. Indicator
    /// kinds return `None` (their subdifferential is a normal cone).
    pub fn subgradient_selection(&self, lambda: &[f64]) -> Option<Vec<f64>> {
        match self {
            StorageFee::Zero => Some(vec![0.0; lambda.len()]),
            StorageFee::Linear { a } => Some(a.clone()),
            StorageFee::Quadratic { sigma } => Some(lambda.iter().map(|l| sigma * l).collect()),
            StorageFee::Separable { breakpoints } => Some(
                lambda
                    .iter()
                    .zip(breakpoints)
                    .map(|(&t, h)| fee_term_derivative(h, t))
                    .collect(),
            ),
            StorageFee::Capacity { .. } | StorageFee::FixedMarginal { .. } => None,
        }
    }

    /// An `L` with `|F(x) - F(y)| <= L * |x - y|_1` on the effective domain
    /// (zero for indicator kinds).
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            StorageFee::Zero | StorageFee::Capacity { .. } | StorageFee::FixedMarginal { .. } => {
                0.0
            }
            StorageFee::Linear { a } => a.iter().fold(0.0, |m, x| x.abs().max(m)),
            StorageFee::Quadratic { sigma } => *sigma,
            StorageFee::Separable { breakpoints } => breakpoints
                .iter()
                .map(|h| {
                    let d0 = fee_term_one_sided(h, 0.0, true).abs();
                    let d1 = fee_term_one_sided(h, 1.0, false).abs();
                    d0.max(d1)
                })
                .fold(0.0, f64::max),
        }
    }
}

/// `F(lambda) + F*(psi) - <lambda, psi>`; nonnegative, zero exactly when
/// `psi` is a subgradient of the fee at `lambda`. Returns `+inf` when
/// `lambda` is outside the fee domain.
pub fn fenchel_young_residual(fee: &StorageFee, lambda: &[f64], psi: &[f64]) -> Result<f64> {
    let value = fee.eval(lambda);
    if value.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(value + fee.conjugate(psi)? - dot(lambda, psi))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

fn vertex_vec(n: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[j] = 1.0;
    v
}

/// Derivative of `t -> t h(t)` where defined; at kinks the midpoint of the
/// one-sided derivatives, at the endpoints the inward one-sided derivative.
fn fee_term_derivative(h: &PiecewiseLinear, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    if t == 0.0 {
        return fee_term_one_sided(h, t, true);
    }
    if t == 1.0 {
        return fee_term_one_sided(h, t, false);
    }
    0.5 * (fee_term_one_sided(h, t, true) + fee_term_one_sided(h, t, false))
}

/// One-sided derivative of `t -> t h(t)`: `h(t) + t h'(t +/- )`.
fn fee_term_one_sided(h: &PiecewiseLinear, t: f64, right: bool) -> f64 {
    let slopes = h.slopes();
    let mut seg = h.segment(t);
    if right {
        // move to the segment on the right of an interior knot
        while seg + 1 < slopes.len() && t >= h.knots[seg + 1].0 {
            seg += 1;
        }
    } else {
        while seg > 0 && t <= h.knots[seg].0 {
            seg -= 1;
        }
    }
    h.eval(t) + t * slopes[seg]
}

/// KKT solve for the separable conjugate: bisects the simplex multiplier `r`
/// in `sum_j argmax_t [(psi_j - r) t - g_j(t)] = 1` where `g_j(t) = t h_j(t)`.
fn separable_conjugate(psi: &[f64], rates: &[PiecewiseLinear]) -> Result<(f64, Vec<f64>)> {
    let n = psi.len();
    let gprime_hi: Vec<f64> = rates
        .iter()
        .map(|h| fee_term_one_sided(h, 1.0, false))
        .collect();
    let gprime_lo: Vec<f64> = rates
        .iter()
        .map(|h| fee_term_one_sided(h, 0.0, true))
        .collect();

    let max_hi = gprime_hi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_lo = gprime_lo.iter().cloned().fold(f64::INFINITY, f64::min);
    let psi_min = psi.iter().cloned().fold(f64::INFINITY, f64::min);
    let psi_max = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut r_lo = psi_min - max_hi - 1.0; // every coordinate saturates at 1
    let mut r_hi = psi_max - min_lo + 1.0; // every coordinate drops to 0

    let total = |r: f64, out: Option<&mut Vec<f64>>| -> f64 {
        let mut sum = 0.0;
        let mut buf = out;
        for j in 0..n {
            let t = separable_best_t(&rates[j], psi[j] - r);
            if let Some(v) = buf.as_deref_mut() {
                v[j] = t;
            }
            sum += t;
        }
        sum
    };

    if total(r_lo, None) < 1.0 || total(r_hi, None) > 1.0 {
        return Err(Error::ConjugateSolveFailed(
            "separable multiplier bracket invalid".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (r_lo + r_hi);
        if mid <= r_lo || mid >= r_hi {
            break;
        }
        if total(mid, None) >= 1.0 {
            r_lo = mid;
        } else {
            r_hi = mid;
        }
    }

    let mut t_lo = vec![0.0; n];
    let mut t_hi = vec![0.0; n];
    let sum_lo = total(r_lo, Some(&mut t_lo));
    let sum_hi = total(r_hi, Some(&mut t_hi));
    // on flat pieces the per-coordinate maximizer is an interval; interpolate
    // between the bracket endpoints to land the mass sum exactly on one
    let theta = if sum_lo > sum_hi {
        ((1.0 - sum_hi) / (sum_lo - sum_hi)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let lambda: Vec<f64> = t_hi
        .iter()
        .zip(&t_lo)
        .map(|(&a, &b)| a + theta * (b - a))
        .collect();
    let value = lambda
        .iter()
        .zip(psi)
        .zip(rates)
        .map(|((&t, &p), h)| p * t - t * h.eval(t))
        .sum();
    Ok((value, lambda))
}

/// Maximizes `s t - g(t)` over `[0, 1]` for `g(t) = t h(t)`; takes the
/// largest maximizer so the sum in the KKT bisection is right-continuous.
fn separable_best_t(h: &PiecewiseLinear, s: f64) -> f64 {
    if s <= fee_term_one_sided(h, 0.0, true) {
        return 0.0;
    }
    if s >= fee_term_one_sided(h, 1.0, false) {
        return 1.0;
    }
    let slopes = h.slopes();
    for seg in 0..slopes.len() {
        let (t0, v0) = h.knots[seg];
        let (t1, _) = h.knots[seg + 1];
        // g on this segment: alpha t^2 + beta t with h(t) = alpha t + beta
        let alpha = slopes[seg];
        let beta = v0 - alpha * t0;
        let d0 = 2.0 * alpha * t0 + beta;
        let d1 = 2.0 * alpha * t1 + beta;
        if s < d0 {
            return t0; // optimum pinned at the kink to the left
        }
        if s <= d1 {
            if alpha > 0.0 {
                return ((s - beta) / (2.0 * alpha)).clamp(t0, t1);
            }
            return t1; // flat derivative: whole segment maximizes
        }
    }
    1.0
}
