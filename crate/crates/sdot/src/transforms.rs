//! The transform calculus on the discretized measure: potential transforms,
//! Laguerre cell assignment and the cell-mass map.
//!
//! All per-point reductions use a fixed split tree (see [`crate::numeric`]),
//! optionally executed in parallel; results are identical for any thread
//! count.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fee::WeightVector;
use crate::instance::ProblemInstance;
use crate::numeric::{pairwise_map_sum, recentered};

/// Relative tolerance flagging near-ties between the two best sites.
pub const TOL_TIE: f64 = 1e-12;

/// Ranges at least this long are split across threads.
const PARALLEL_MIN: usize = 4096;

/// One dual variable per site.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential {
    values: Vec<f64>,
}

impl DualPotential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("psi: entries must be finite"));
        }
        Ok(DualPotential { values })
    }

    pub fn zeros(n: usize) -> Self {
        DualPotential {
            values: vec![0.0; n],
        }
    }

    /// Mean-zero representative; cell assignments are invariant under the
    /// shift, so canonicalizing never changes downstream results.
    pub fn recentered(&self) -> Self {
        DualPotential {
            values: recentered(&self.values),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Which site each quadrature point feeds, with near-ties flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAssignment {
    pub owner: Vec<usize>,
    pub tied: Vec<bool>,
}

impl CellAssignment {
    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }
}

/// `max_j(-cost_j - psi_j)` over one cost row, with the smallest attaining
/// index. Returns the transformed value and the argmax site.
pub fn cstar_transform(psi: &[f64], row: &[f64]) -> (f64, usize) {
    debug_assert_eq!(psi.len(), row.len());
    let mut best = -row[0] - psi[0];
    let mut arg = 0;
    for j in 1..row.len() {
        let v = -row[j] - psi[j];
        if v > best {
            best = v;
            arg = j;
        }
    }
    (best, arg)
}

/// Componentwise `max_i(-cost_ij - phi_i)` over the quadrature points.
pub fn c_transform(instance: &ProblemInstance, phi: &[f64]) -> Vec<f64> {
    let matrix = instance.matrix();
    let n = instance.num_sites();
    let mut out = vec![f64::NEG_INFINITY; n];
    for (i, &p) in phi.iter().enumerate() {
        let row = matrix.row(i);
        for j in 0..n {
            let v = -row[j] - p;
            if v > out[j] {
                out[j] = v;
            }
        }
    }
    out
}

/// Everything one dual sweep produces: transformed potential values at the
/// points, the cell assignment, per-site masses, and weighted sums.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub phi: Vec<f64>,
    pub assignment: CellAssignment,
    /// Mass of each Laguerre cell under the lowest-index tie rule.
    pub cell_masses: Vec<f64>,
    /// `sum_i m_i phi_i`.
    pub weighted_phi: f64,
    /// `sum_i m_i cost(x_i, site_owner(i))`: the transport cost of the
    /// assignment plan, which is optimal for its own marginal.
    pub assignment_cost: f64,
    /// Total mass of tie-flagged points.
    pub tied_mass: f64,
}

/// Evaluates the transform, assignment and masses at `psi` in one pass.
pub fn sweep(instance: &ProblemInstance, psi: &DualPotential) -> SweepOutcome {
    assert_eq!(psi.len(), instance.num_sites());
    let m = instance.num_points();
    let n = instance.num_sites();
    let mut phi = vec![0.0; m];
    let mut owner = vec![0usize; m];
    let mut tied = vec![false; m];

    assign_range(
        instance,
        psi.as_slice(),
        0,
        m,
        &mut phi,
        &mut owner,
        &mut tied,
    );

    let masses = instance.measure().masses();
    let matrix = instance.matrix();
    let cell_masses = accumulate_cell_masses(masses, &owner, n);
    let weighted_phi = pairwise_map_sum(0, m, &|i| masses[i] * phi[i]);
    let assignment_cost = pairwise_map_sum(0, m, &|i| masses[i] * matrix.get(i, owner[i]));
    let tied_mass = pairwise_map_sum(0, m, &|i| if tied[i] { masses[i] } else { 0.0 });

    SweepOutcome {
        phi,
        assignment: CellAssignment { owner, tied },
        cell_masses,
        weighted_phi,
        assignment_cost,
        tied_mass,
    }
}

fn assign_range(
    instance: &ProblemInstance,
    psi: &[f64],
    lo: usize,
    hi: usize,
    phi: &mut [f64],
    owner: &mut [usize],
    tied: &mut [bool],
) {
    if hi - lo >= PARALLEL_MIN {
        let mid = lo + (hi - lo) / 2;
        let (phi_l, phi_r) = phi.split_at_mut(mid - lo);
        let (own_l, own_r) = owner.split_at_mut(mid - lo);
        let (tie_l, tie_r) = tied.split_at_mut(mid - lo);
        rayon::join(
            || assign_range(instance, psi, lo, mid, phi_l, own_l, tie_l),
            || assign_range(instance, psi, mid, hi, phi_r, own_r, tie_r),
        );
        return;
    }
    let matrix = instance.matrix();
    for i in lo..hi {
        let row = matrix.row(i);
        let mut best = -row[0] - psi[0];
        let mut second = f64::NEG_INFINITY;
        let mut arg = 0;
        for j in 1..row.len() {
            let v = -row[j] - psi[j];
            if v > best {
                second = best;
                best = v;
                arg = j;
            } else if v > second {
                second = v;
            }
        }
        let k = i - lo;
        phi[k] = best;
        owner[k] = arg;
        tied[k] = row.len() > 1 && best - second <= TOL_TIE * (1.0 + best.abs());
    }
}

/// Per-site mass totals with a fixed-shape reduction, so the result is
/// bitwise reproducible and identical to what [`sweep`] reports.
fn accumulate_cell_masses(masses: &[f64], owner: &[usize], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            pairwise_map_sum(0, masses.len(), &|i| {
                if owner[i] == j {
                    masses[i]
                } else {
                    0.0
                }
            })
        })
        .collect()
}

/// The Laguerre cell assignment at `psi`.
pub fn assign_cells(instance: &ProblemInstance, psi: &DualPotential) -> CellAssignment {
    sweep(instance, psi).assignment
}

/// Mass of each cell; sums to one because the cells partition the points.
pub fn cell_masses(
    instance: &ProblemInstance,
    assignment: &CellAssignment,
) -> Result<WeightVector> {
    if assignment.len() != instance.num_points() {
        return Err(Error::invalid("assignment: size mismatch with instance"));
    }
    WeightVector::new(accumulate_cell_masses(
        instance.measure().masses(),
        &assignment.owner,
        instance.num_sites(),
    ))
}

/// The dual objective `-sum_i m_i psi^{c*}(x_i) - F*(psi)`.
pub fn dual_value(instance: &ProblemInstance, psi: &DualPotential) -> Result<f64> {
    let outcome = sweep(instance, psi);
    Ok(-outcome.weighted_phi - instance.fee().conjugate(psi.as_slice())?)
}

/// Values of `(psi^{c*c})^{c*}` at the quadrature points, evaluated with
/// exact intermediate arithmetic.
///
/// The transform identity `(psi^{c*c})^{c*} = psi^{c*}` is exact in real
/// arithmetic but intermediate rounding perturbs it at the last bit, so the
/// composite is computed over exact expansions and rounded only at the end.
/// The result equals `sweep(..).phi` bitwise.
pub fn double_conjugate_values(instance: &ProblemInstance, psi: &DualPotential) -> Vec<f64> {
    use crate::expansion::{two_sum, Expansion};

    assert_eq!(psi.len(), instance.num_sites());
    let matrix = instance.matrix();
    let m = instance.num_points();
    let n = instance.num_sites();
    let psi = psi.as_slice();

    // psi^{c*} at every point, as exact two-term sums
    let phi: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let row = matrix.row(i);
            let mut best = two_sum(-row[0], -psi[0]);
            for j in 1..n {
                let cand = two_sum(-row[j], -psi[j]);
                if cand > best {
                    best = cand;
                }
            }
            best
        })
        .collect();

    // psi^{c*c} per site: exact max of three-term sums
    let psi_cc: Vec<Expansion> = (0..n)
        .map(|j| {
            let mut best: Option<Expansion> = None;
            for (i, &(hi, lo)) in phi.iter().enumerate() {
                let cand = Expansion::from_addends(&[-matrix.get(i, j), -hi, -lo]);
                best = match best {
                    None => Some(cand),
                    Some(b) => {
                        if cand.cmp_exact(&b) == std::cmp::Ordering::Greater {
                            Some(cand)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            best.expect("at least one point")
        })
        .collect();

    // (psi^{c*c})^{c*}: exact max over sites, rounded once at the end
    (0..m)
        .map(|i| {
            let row = matrix.row(i);
            let mut best: Option<Expansion> = None;
            for (j, cc) in psi_cc.iter().enumerate() {
                // the term value is -row[j] - psi_cc[j]
                let mut term = Expansion::from_addends(&[-row[j]]);
                for &part in cc.parts() {
                    term.add(-part);
                }
                best = match best {
                    None => Some(term),
                    Some(b) => {
                        if term.cmp_exact(&b) == std::cmp::Ordering::Greater {
                            Some(term)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            best.expect("at least one site").to_f64()
        })
        .collect()
}

/// Writes the cell export CSV: point coordinates, mass, owner, tied flag.
pub fn write_cells_csv(
    instance: &ProblemInstance,
    assignment: &CellAssignment,
    mut out: impl Write,
) -> Result<()> {
    let dim = instance.measure().dim();
    for d in 0..dim {
        write!(out, "x{},", d + 1)?;
    }
    writeln!(out, "mass,owner,tied")?;
    for i in 0..instance.num_points() {
        for x in instance.measure().point(i) {
            write!(out, "{},", fmt_float(*x))?;
        }
        writeln!(
            out,
            "{},{},{}",
            fmt_float(instance.measure().mass(i)),
            assignment.owner[i],
            u8::from(assignment.tied[i]),
        )?;
    }
    Ok(())
}

use crate::numeric::fmt_f64 as fmt_float;
