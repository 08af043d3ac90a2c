//! The full problem data: source measure, sites, cost and fee, with the
//! point-by-site cost matrix precomputed at construction.

use crate::cost::{cost_matrix, CostFunction, CostMatrix};
use crate::error::{Error, Result};
use crate::fee::StorageFee;
use crate::measure::QuadratureMeasure;
use crate::sites::SiteSet;

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    measure: QuadratureMeasure,
    sites: SiteSet,
    cost: CostFunction,
    fee: StorageFee,
    matrix: CostMatrix,
}

impl ProblemInstance {
    pub fn new(
        measure: QuadratureMeasure,
        sites: SiteSet,
        cost: CostFunction,
        fee: StorageFee,
    ) -> Result<Self> {
        if measure.dim() != sites.dim() {
            return Err(Error::invalid(format!(
                "sites: dimension {} does not match measure dimension {}",
                sites.dim(),
                measure.dim()
            )));
        }
        fee.validate(sites.len())?;
        let matrix = cost_matrix(&measure, &sites, &cost)?;
        Ok(ProblemInstance {
            measure,
            sites,
            cost,
            fee,
            matrix,
        })
    }

    /// Same data with a different fee; reuses the cost structure.
    pub fn with_fee(&self, fee: StorageFee) -> Result<Self> {
        fee.validate(self.sites.len())?;
        Ok(ProblemInstance {
            measure: self.measure.clone(),
            sites: self.sites.clone(),
            cost: self.cost.clone(),
            fee,
            matrix: self.matrix.clone(),
        })
    }

    pub fn measure(&self) -> &QuadratureMeasure {
        &self.measure
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn fee(&self) -> &StorageFee {
        &self.fee
    }

    pub fn matrix(&self) -> &CostMatrix {
        &self.matrix
    }

    /// Number of quadrature points.
    pub fn num_points(&self) -> usize {
        self.measure.len()
    }

    /// Number of target sites.
    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_grid_measure, BoundingBox};

    #[test]
    fn dimension_mismatch_names_sites() {
        let b = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        let measure = build_grid_measure(&b, &[4], |_| 1.0).unwrap();
        let sites = SiteSet::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let err = ProblemInstance::new(
            measure,
            sites,
            CostFunction::power(2.0).unwrap(),
            StorageFee::zero(),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("sites:"));
    }

    #[test]
    fn fee_dimension_checked_against_sites() {
        let b = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        let measure = build_grid_measure(&b, &[4], |_| 1.0).unwrap();
        let sites = SiteSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let fee = StorageFee::linear(vec![0.0, 0.1, 0.2]).unwrap();
        assert!(
            ProblemInstance::new(measure, sites, CostFunction::power(2.0).unwrap(), fee).is_err()
        );
    }
}
