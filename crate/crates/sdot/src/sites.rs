//! The fixed target support: an ordered set of pairwise-distinct sites.

use crate::error::{Error, Result};

/// `N` pairwise-distinct points in `R^n`, the support of the target measure.
#[derive(Debug, Clone)]
pub struct SiteSet {
    dim: usize,
    coords: Vec<f64>,
}

impl SiteSet {
    pub fn new(sites: Vec<Vec<f64>>) -> Result<Self> {
        let n = sites.len();
        if n == 0 {
            return Err(Error::invalid("sites: need at least one site"));
        }
        let dim = sites[0].len();
        if dim == 0 {
            return Err(Error::invalid("sites: zero-dimensional site"));
        }
        for (j, s) in sites.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::invalid(format!(
                    "sites: site {j} has dimension {}, expected {dim}",
                    s.len()
                )));
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("sites: site {j} is not finite")));
            }
        }
        for j in 0..n {
            for k in j + 1..n {
                if sites[j] == sites[k] {
                    return Err(Error::invalid(format!("sites: sites {j} and {k} coincide")));
                }
            }
        }
        Ok(SiteSet {
            dim,
            coords: sites.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn site(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    /// Sites as a list of coordinate vectors.
    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.site(j).to_vec()).collect()
    }

    /// True when the dimension is one and coordinates strictly increase.
    pub fn is_sorted_1d(&self) -> bool {
        self.dim == 1 && self.coords.windows(2).all(|w| w[0] < w[1])
    }
}
