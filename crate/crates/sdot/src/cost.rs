//! Transport cost functions, their spatial gradients, the pointwise twist
//! check, and the dense point-by-site cost matrix.

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::measure::QuadratureMeasure;
use crate::sites::SiteSet;

/// Gradient-difference norms at or below this value count as twist violations.
pub const TOL_TWIST: f64 = 1e-9;

/// Dense `M x N` table of `cost(point_i, site_j)` values, row-major.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>")]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::invalid("cost table: ragged or empty rows"));
        }
        Ok(CostMatrix {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Largest minus smallest entry; bounds the cost of rerouting unit mass.
    pub fn spread(&self) -> f64 {
        let max = self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.data.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

impl TryFrom<Vec<Vec<f64>>> for CostMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        CostMatrix::from_rows(rows)
    }
}

/// Transport cost kinds.
#[derive(Debug, Clone)]
pub enum CostFunction {
    /// `|x - y|^p` with exponent `p >= 1` (Euclidean norm).
    Power { exponent: f64 },
    /// `-<x, y>`; twisted whenever sites are distinct.
    InnerProduct,
    /// A user-supplied point-by-site table; no pointwise evaluation off the
    /// quadrature points and no gradients.
    Table(CostMatrix),
}

impl CostFunction {
    pub fn power(exponent: f64) -> Result<Self> {
        if !exponent.is_finite() || exponent < 1.0 {
            return Err(Error::invalid("cost: exponent must be >= 1"));
        }
        Ok(CostFunction::Power { exponent })
    }

    pub fn has_gradient(&self) -> bool {
        !matches!(self, CostFunction::Table(_))
    }

    /// Evaluates the cost at a point/site pair (not available for tables).
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            CostFunction::Power { exponent } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok(r2.sqrt().powf(*exponent))
            }
            CostFunction::InnerProduct => Ok(-x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()),
            CostFunction::Table(_) => Err(Error::invalid(
                "cost: user table has no pointwise evaluation",
            )),
        }
    }

    /// Gradient in the point argument. For the power kind the gradient at a
    /// coincident point/site pair is reported as zero (the continuous limit
    /// for p > 1; for p = 1 the cost is not differentiable there).
    pub fn gradient_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        match self {
            CostFunction::Power { exponent } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                let r = r2.sqrt();
                if r == 0.0 {
                    return Ok(vec![0.0; x.len()]);
                }
                let factor = exponent * r.powf(exponent - 2.0);
                Ok(x.iter().zip(y).map(|(a, b)| factor * (a - b)).collect())
            }
            CostFunction::InnerProduct => Ok(y.iter().map(|b| -b).collect()),
            CostFunction::Table(_) => Err(Error::GradientUnavailable),
        }
    }
}

/// One twist violation: at sample `sample`, sites `site_a` and `site_b` have
/// indistinguishable cost gradients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistWitness {
    pub sample: usize,
    pub site_a: usize,
    pub site_b: usize,
}

#[derive(Debug, Clone)]
pub struct TwistReport {
    pub holds: bool,
    pub witnesses: Vec<TwistWitness>,
}

/// Checks the twist condition at the given sample points: for every sample
/// and every pair of distinct sites the cost gradients must differ by more
/// than [`TOL_TWIST`] in Euclidean norm.
pub fn check_twist(
    cost: &CostFunction,
    sites: &SiteSet,
    samples: &[Vec<f64>],
) -> Result<TwistReport> {
    if !cost.has_gradient() {
        return Err(Error::GradientUnavailable);
    }
    if samples.is_empty() {
        return Err(Error::invalid("twist check: samples must be nonempty"));
    }
    let n = sites.len();
    let mut witnesses = Vec::new();
    for (s, x) in samples.iter().enumerate() {
        if x.len() != sites.dim() {
            return Err(Error::invalid("twist check: sample dimension mismatch"));
        }
        let grads: Vec<Vec<f64>> = (0..n)
            .map(|j| cost.gradient_x(x, sites.site(j)))
            .collect::<Result<_>>()?;
        for j in 0..n {
            for k in j + 1..n {
                let gap: f64 = grads[j]
                    .iter()
                    .zip(&grads[k])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if gap <= TOL_TWIST {
                    witnesses.push(TwistWitness {
                        sample: s,
                        site_a: j,
                        site_b: k,
                    });
                }
            }
        }
    }
    Ok(TwistReport {
        holds: witnesses.is_empty(),
        witnesses,
    })
}

/// Precomputes `cost(point_i, site_j)` for all pairs. Table costs are
/// validated against the measure/site dimensions and copied through.
pub fn cost_matrix(
    measure: &QuadratureMeasure,
    sites: &SiteSet,
    cost: &CostFunction,
) -> Result<CostMatrix> {
    let m = measure.len();
    let n = sites.len();
    if let CostFunction::Table(table) = cost {
        if table.nrows() != m || table.ncols() != n {
            return Err(Error::invalid(format!(
                "cost table: {}x{} table does not match {} points x {} sites",
                table.nrows(),
                table.ncols(),
                m,
                n
            )));
        }
        for i in 0..m {
            for (j, &v) in table.row(i).iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteCost { row: i, col: j });
                }
            }
        }
        return Ok(table.clone());
    }

    let mut data = vec![0.0; m * n];
    data.par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(i, row)| {
            let x = measure.point(i);
            for (j, slot) in row.iter_mut().enumerate() {
                let v = cost.evaluate(x, sites.site(j))?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteCost { row: i, col: j });
                }
                *slot = v;
            }
            Ok(())
        })?;
    Ok(CostMatrix {
        rows: m,
        cols: n,
        data,
    })
}
