//! Independent verification: exhaustive assignment enumeration, an exact 1D
//! transport oracle by monotone rearrangement, and the fee-perturbation
//! stability harness.
//!
//! Both oracles avoid the solver's dual machinery entirely so they can
//! cross-check it (and each other).

use crate::error::{Error, Result};
use crate::fee::{StorageFee, WeightVector};
use crate::instance::ProblemInstance;
use crate::numeric::linf_distance;
use crate::simplex::SimplexGrid;
use crate::solver::{solve_storage, SolverConfig};

/// Simplex-grid subdivisions used for sup-norm estimates of fee differences.
pub const SUP_GRID_SEGMENTS: usize = 200;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Sub-atoms per source atom for the enumeration oracle.
    pub splits: usize,
    /// Simplex mesh width for the weight-scan oracle.
    pub lambda_mesh: f64,
    /// Work budget: enumerated assignments, or memoized states times sites.
    pub budget: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            splits: 1,
            lambda_mesh: 1e-3,
            budget: 10_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnumerateReport {
    pub value: f64,
    pub lambda: WeightVector,
    /// Owner site per sub-atom, atoms split in order.
    pub map: Vec<usize>,
    pub sub_atoms: usize,
}

/// Exact minimum of transport cost plus fee over every assignment of the
/// (split) source atoms to sites, using the instance's own fee.
pub fn oracle_enumerate(
    instance: &ProblemInstance,
    config: &OracleConfig,
) -> Result<EnumerateReport> {
    let fee = instance.fee().clone();
    oracle_enumerate_with_fee(instance, config, &|l| fee.eval(l))
}

/// Enumeration with an arbitrary (possibly nonconvex, lower-semicontinuous)
/// fee evaluated on the induced weights.
pub fn oracle_enumerate_with_fee(
    instance: &ProblemInstance,
    config: &OracleConfig,
    fee: &dyn Fn(&[f64]) -> f64,
) -> Result<EnumerateReport> {
    if config.splits < 1 {
        return Err(Error::invalid("splits: must be at least 1"));
    }
    let m = instance.num_points();
    let n = instance.num_sites();
    let s = config.splits;
    let total = m * s;

    let sub_mass: Vec<f64> = (0..total)
        .map(|t| instance.measure().mass(t / s) / s as f64)
        .collect();
    let equal_masses = sub_mass.windows(2).all(|w| w[0] == w[1]);

    if equal_masses {
        let states = compositions_through(total, n);
        let work = states.saturating_mul(n as u128);
        if work > config.budget {
            return Err(Error::BudgetExceeded {
                required: work,
                budget: config.budget,
            });
        }
        enumerate_counting(instance, s, &sub_mass, fee)
    } else {
        let work = (n as u128).checked_pow(total as u32).unwrap_or(u128::MAX);
        if work > config.budget {
            return Err(Error::BudgetExceeded {
                required: work,
                budget: config.budget,
            });
        }
        enumerate_brute(instance, s, &sub_mass, fee)
    }
}

/// Number of compositions of every t <= total into n parts: the state count
/// of the memoized enumeration.
fn compositions_through(total: usize, n: usize) -> u128 {
    // sum_t C(t+n-1, n-1) = C(total+n, n)
    let mut num: u128 = 1;
    for k in 1..=n {
        num = match num.checked_mul((total + k) as u128) {
            Some(v) => v / k as u128,
            None => return u128::MAX,
        };
    }
    num
}

/// Plain odometer enumeration in lexicographic assignment order.
fn enumerate_brute(
    instance: &ProblemInstance,
    splits: usize,
    sub_mass: &[f64],
    fee: &dyn Fn(&[f64]) -> f64,
) -> Result<EnumerateReport> {
    let n = instance.num_sites();
    let total = sub_mass.len();
    let matrix = instance.matrix();
    let mut assign = vec![0usize; total];
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    loop {
        let mut masses = vec![0.0; n];
        let mut cost = 0.0;
        for (t, &j) in assign.iter().enumerate() {
            masses[j] += sub_mass[t];
            cost += sub_mass[t] * matrix.get(t / splits, j);
        }
        let value = cost + fee(&masses);
        if value.is_finite() && best.as_ref().map_or(true, |(v, _, _)| value < *v) {
            best = Some((value, assign.clone(), masses));
        }
        // lexicographic successor: last digit fastest
        let mut pos = total;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            assign[pos] += 1;
            if assign[pos] < n {
                break;
            }
            assign[pos] = 0;
        }
        if assign.iter().all(|&j| j == 0) {
            break;
        }
    }
    let (value, map, masses) =
        best.ok_or_else(|| Error::invalid("enumeration: no feasible assignment"))?;
    Ok(EnumerateReport {
        value,
        lambda: WeightVector::new(masses)?,
        map,
        sub_atoms: total,
    })
}

#[derive(Clone, Copy)]
struct Node {
    cost: f64,
    parent: u32,
    site: u8,
}

/// Memoized enumeration for equal sub-atom masses: partial assignments with
/// the same per-site counts share their continuations, so only the cheapest
/// (ties: lexicographically smallest) prefix per count vector survives.
fn enumerate_counting(
    instance: &ProblemInstance,
    splits: usize,
    sub_mass: &[f64],
    fee: &dyn Fn(&[f64]) -> f64,
) -> Result<EnumerateReport> {
    use std::collections::BTreeMap;

    let n = instance.num_sites();
    let total = sub_mass.len();
    let unit = sub_mass[0];
    let matrix = instance.matrix();

    let mut nodes: Vec<Node> = vec![Node {
        cost: 0.0,
        parent: u32::MAX,
        site: 0,
    }];
    let mut layer: BTreeMap<Vec<u16>, u32> = BTreeMap::new();
    layer.insert(vec![0u16; n], 0);

    for t in 0..total {
        let mut next: BTreeMap<Vec<u16>, u32> = BTreeMap::new();
        for (counts, &id) in &layer {
            let base = nodes[id as usize].cost;
            for j in 0..n {
                let cost = base + unit * matrix.get(t / splits, j);
                let mut key = counts.clone();
                key[j] += 1;
                let candidate = Node {
                    cost,
                    parent: id,
                    site: j as u8,
                };
                match next.get(&key) {
                    None => {
                        nodes.push(candidate);
                        next.insert(key, (nodes.len() - 1) as u32);
                    }
                    Some(&other) => {
                        let incumbent = nodes[other as usize];
                        let replace = cost < incumbent.cost
                            || (cost == incumbent.cost
                                && prefix(&nodes, candidate, t + 1)
                                    < prefix(&nodes, incumbent, t + 1));
                        if replace {
                            nodes.push(candidate);
                            next.insert(key, (nodes.len() - 1) as u32);
                        }
                    }
                }
            }
        }
        layer = next;
    }

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for (counts, &id) in &layer {
        let masses: Vec<f64> = counts.iter().map(|&k| k as f64 * unit).collect();
        let value = nodes[id as usize].cost + fee(&masses);
        if !value.is_finite() {
            continue;
        }
        let replace = match &best {
            None => true,
            Some((v, map, _)) => {
                value < *v
                    || (value == *v && prefix(&nodes, nodes[id as usize], total) < map.clone())
            }
        };
        if replace {
            best = Some((value, prefix(&nodes, nodes[id as usize], total), masses));
        }
    }
    let (value, map, masses) =
        best.ok_or_else(|| Error::invalid("enumeration: no feasible assignment"))?;
    Ok(EnumerateReport {
        value,
        lambda: WeightVector::new(masses)?,
        map,
        sub_atoms: total,
    })
}

fn prefix(nodes: &[Node], last: Node, len: usize) -> Vec<usize> {
    let mut out = vec![0usize; len];
    let mut node = last;
    for slot in (0..len).rev() {
        out[slot] = node.site as usize;
        if node.parent == u32::MAX {
            break;
        }
        node = nodes[node.parent as usize];
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub value: f64,
    pub lambda: WeightVector,
    pub scanned: usize,
}

/// Exact transport cost from the 1D measure to the sites with weights
/// `lambda`, by monotone rearrangement: sorted points are cut at the weight
/// quantiles, splitting boundary atoms fractionally.
pub fn fixed_marginal_cost_1d(instance: &ProblemInstance, lambda: &[f64]) -> Result<f64> {
    let support = ScanSupport::build(instance)?;
    Ok(support.transport_cost(lambda))
}

/// Scans the simplex grid of mesh `lambda_mesh`, minimizing exact transport
/// cost plus fee; exact up to the grid resolution for costs that are convex
/// nondecreasing in distance.
pub fn oracle_lambda_scan_1d(
    instance: &ProblemInstance,
    config: &OracleConfig,
) -> Result<ScanReport> {
    let support = ScanSupport::build(instance)?;
    let n = instance.num_sites();
    if !(config.lambda_mesh > 0.0 && config.lambda_mesh <= 1.0) {
        return Err(Error::invalid("delta: mesh must lie in (0, 1]"));
    }
    let segments = (1.0 / config.lambda_mesh).round().max(1.0) as usize;
    let fee = instance.fee();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut scanned = 0;
    for lambda in SimplexGrid::new(n, segments) {
        scanned += 1;
        let fee_value = fee.eval(&lambda);
        if !fee_value.is_finite() {
            continue;
        }
        let value = support.transport_cost(&lambda) + fee_value;
        if best.as_ref().map_or(true, |(v, _)| value < *v) {
            best = Some((value, lambda));
        }
    }
    let (value, lambda) =
        best.ok_or_else(|| Error::invalid("lambda scan: no feasible grid point"))?;
    Ok(ScanReport {
        value,
        lambda: WeightVector::new(lambda)?,
        scanned,
    })
}

/// Sorted-point prefix sums backing the 1D oracle.
struct ScanSupport {
    /// Cumulative mass after each sorted point.
    cum_mass: Vec<f64>,
    /// Per site: cumulative mass-weighted cost over the sorted points.
    cum_cost: Vec<Vec<f64>>,
    /// Cost of the sorted point at each rank, per site.
    point_cost: Vec<Vec<f64>>,
}

impl ScanSupport {
    fn build(instance: &ProblemInstance) -> Result<Self> {
        if instance.measure().dim() != 1 {
            return Err(Error::invalid("lambda scan requires dimension 1"));
        }
        if !instance.sites().is_sorted_1d() {
            return Err(Error::invalid(
                "lambda scan requires sites sorted increasingly",
            ));
        }
        match instance.cost() {
            crate::cost::CostFunction::Power { .. } => {}
            _ => {
                return Err(Error::invalid(
                    "lambda scan requires a power-of-distance cost",
                ))
            }
        }
        let m = instance.num_points();
        let n = instance.num_sites();
        let measure = instance.measure();
        let matrix = instance.matrix();

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            measure.point(a)[0]
                .partial_cmp(&measure.point(b)[0])
                .unwrap()
        });

        let mut cum_mass = vec![0.0; m + 1];
        let mut cum_cost = vec![vec![0.0; m + 1]; n];
        let mut point_cost = vec![vec![0.0; m]; n];
        for (rank, &i) in order.iter().enumerate() {
            cum_mass[rank + 1] = cum_mass[rank] + measure.mass(i);
            for j in 0..n {
                let c = matrix.get(i, j);
                point_cost[j][rank] = c;
                cum_cost[j][rank + 1] = cum_cost[j][rank] + measure.mass(i) * c;
            }
        }
        Ok(ScanSupport {
            cum_mass,
            cum_cost,
            point_cost,
        })
    }

    /// Mass-weighted cost to site `j` of the first `w` units of sorted mass;
    /// the atom straddling `w` contributes fractionally.
    fn quantile_cost(&self, j: usize, w: f64) -> f64 {
        let w = w.clamp(0.0, *self.cum_mass.last().unwrap());
        // rank = number of whole atoms below w
        let rank = match self
            .cum_mass
            .binary_search_by(|c| c.partial_cmp(&w).unwrap())
        {
            Ok(r) => r,
            Err(r) => r - 1,
        };
        let mut cost = self.cum_cost[j][rank];
        if rank < self.point_cost[j].len() {
            cost += (w - self.cum_mass[rank]) * self.point_cost[j][rank];
        }
        cost
    }

    fn transport_cost(&self, lambda: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut cut = 0.0;
        for (j, &l) in lambda.iter().enumerate() {
            let next = cut + l.max(0.0);
            total += self.quantile_cost(j, next) - self.quantile_cost(j, cut);
            cut = next;
        }
        total
    }
}

/// Estimated sup-norm of `F1 - F2` over the union of their domains, on the
/// simplex grid with [`SUP_GRID_SEGMENTS`] subdivisions. A lower estimate of
/// the true sup; infinite when exactly one fee is finite somewhere.
pub fn sup_fee_difference(fee1: &StorageFee, fee2: &StorageFee, n: usize) -> f64 {
    let mut sup: f64 = 0.0;
    for lambda in SimplexGrid::new(n, SUP_GRID_SEGMENTS) {
        let a = fee1.eval(&lambda);
        let b = fee2.eval(&lambda);
        match (a.is_finite(), b.is_finite()) {
            (true, true) => sup = sup.max((a - b).abs()),
            (true, false) | (false, true) => return f64::INFINITY,
            (false, false) => {}
        }
    }
    sup
}

/// Slack added to grid sup estimates: Lipschitz moduli times the covering
/// radius of the grid.
pub fn sup_grid_slack(fee1: &StorageFee, fee2: &StorageFee, n: usize) -> f64 {
    (fee1.lipschitz_bound() + fee2.lipschitz_bound()) * n as f64 / SUP_GRID_SEGMENTS as f64
}

#[derive(Debug, Clone)]
pub struct StabilityBoundReport {
    pub m1: f64,
    pub m2: f64,
    pub gap1: f64,
    pub gap2: f64,
    pub sup_diff: f64,
    pub grid_slack: f64,
    /// `None` when either solve failed to converge.
    pub holds: Option<bool>,
}

/// Checks that swapping the fee moves the minimum value by at most the sup
/// difference of the fees (plus gap and grid slack).
pub fn stability_bound_check(
    instance: &ProblemInstance,
    fee1: &StorageFee,
    fee2: &StorageFee,
    config: &SolverConfig,
) -> Result<StabilityBoundReport> {
    let n = instance.num_sites();
    let r1 = solve_storage(&instance.with_fee(fee1.clone())?, config)?;
    let r2 = solve_storage(&instance.with_fee(fee2.clone())?, config)?;
    let sup_diff = sup_fee_difference(fee1, fee2, n);
    let grid_slack = sup_grid_slack(fee1, fee2, n);
    let holds = if r1.converged && r2.converged {
        Some(
            (r1.primal_value - r2.primal_value).abs()
                <= sup_diff + 2.0 * config.tol_gap + grid_slack,
        )
    } else {
        None
    };
    Ok(StabilityBoundReport {
        m1: r1.primal_value,
        m2: r2.primal_value,
        gap1: r1.gap,
        gap2: r2.gap,
        sup_diff,
        grid_slack,
        holds,
    })
}

#[derive(Debug, Clone)]
pub struct StabilityStep {
    pub sup_diff: f64,
    pub value_diff: f64,
    pub lambda_distance: f64,
    pub converged: bool,
    pub bound_holds: bool,
}

#[derive(Debug, Clone)]
pub struct StabilityConvergenceReport {
    pub steps: Vec<StabilityStep>,
    /// Every solve converged.
    pub conclusive: bool,
    /// Distances nonincreasing (within certificate tolerance) and all
    /// bounds hold.
    pub passes: bool,
}

/// Solves the instance under each perturbed fee and reports distances of the
/// minimizing weights to the limit-fee solution.
pub fn stability_convergence_check(
    instance: &ProblemInstance,
    fee_sequence: &[StorageFee],
    limit_fee: &StorageFee,
    config: &SolverConfig,
) -> Result<StabilityConvergenceReport> {
    let n = instance.num_sites();
    let limit = solve_storage(&instance.with_fee(limit_fee.clone())?, config)?;
    let mut steps = Vec::with_capacity(fee_sequence.len());
    let mut conclusive = limit.converged;
    for fee in fee_sequence {
        let run = solve_storage(&instance.with_fee(fee.clone())?, config)?;
        let sup_diff = sup_fee_difference(fee, limit_fee, n);
        let grid_slack = sup_grid_slack(fee, limit_fee, n);
        let value_diff = (run.primal_value - limit.primal_value).abs();
        let bound_holds = value_diff <= sup_diff + 2.0 * config.tol_gap + grid_slack;
        conclusive &= run.converged;
        steps.push(StabilityStep {
            sup_diff,
            value_diff,
            lambda_distance: linf_distance(run.lambda.as_slice(), limit.lambda.as_slice()),
            converged: run.converged,
            bound_holds,
        });
    }
    let monotone = steps
        .windows(2)
        .all(|w| w[1].lambda_distance <= w[0].lambda_distance + 10.0 * config.tol_certificate);
    let passes = conclusive && monotone && steps.iter().all(|s| s.bound_holds);
    Ok(StabilityConvergenceReport {
        steps,
        conclusive,
        passes,
    })
}

/// Declared agreement band between the solver's primal value and the weight
/// scan: the solver's own certified gap, the scan's grid error, and rounding.
pub fn scan_agreement_band(instance: &ProblemInstance, solver_gap: f64, mesh: f64) -> f64 {
    let lip = instance.matrix().spread() + 2.0 * instance.fee().lipschitz_bound();
    solver_gap + lip * mesh * instance.num_sites() as f64 + 1e-9
}

/// Declared agreement band between the solver's primal value and the
/// enumeration: splitting can miss the optimal fractional cut by at most one
/// sub-atom per interior boundary.
pub fn enumerate_agreement_band(instance: &ProblemInstance, solver_gap: f64, splits: usize) -> f64 {
    let lip = instance.matrix().spread() + 2.0 * instance.fee().lipschitz_bound();
    let max_sub_mass = instance
        .measure()
        .masses()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        / splits as f64;
    solver_gap + lip * (instance.num_sites() as f64 - 1.0) * max_sub_mass + 1e-9
}
