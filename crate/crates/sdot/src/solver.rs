//! Dual ascent for the storage-fee transport problem.
//!
//! The dual objective `D(psi) = -sum_i m_i psi^{c*}(x_i) - F*(psi)` is
//! concave; a supergradient is `cell_masses(psi) - conjugate_argmax(psi)`.
//! The loop ascends with a configurable step rule, keeps the best iterate,
//! and certifies the result through the duality gap plus the three
//! optimality residuals (Fenchel-Young, cell-mass match, conjugacy).
//!
//! Primal values come from feasible candidates. The assignment plan is
//! optimal for its own marginal (complementary slackness is exact for the
//! max-selection), so whenever the cell masses lie in the fee domain
//! `assignment_cost + F(cell_masses)` is an exact primal value. When they do
//! not (capacity fees mid-run), the conjugate maximizer is costed through a
//! mass-rerouting bound, and refined by a fixed-marginal solve at reporting
//! time.

use crate::error::{Error, Result};
use crate::fee::{fenchel_young_residual, StorageFee, WeightVector};
use crate::instance::ProblemInstance;
use crate::numeric::{dot, l1_distance, linf_distance, pairwise_map_sum, recentered};
use crate::transforms::{c_transform, sweep, CellAssignment, DualPotential, SweepOutcome};

/// Step-size rules for the supergradient ascent.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    /// Constant step length.
    Fixed { eta: f64 },
    /// `eta0 / sqrt(k)`.
    Diminishing { eta0: f64 },
    /// Polyak steps targeting the best primal value seen so far.
    Polyak,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Absolute duality-gap stopping threshold.
    pub tol_gap: f64,
    /// Residual threshold for the optimality certificate.
    pub tol_certificate: f64,
    pub step_rule: StepRule,
    /// Starting potential; zero when absent.
    pub init: Option<Vec<f64>>,
    /// Try the fee-subdifferential restart candidate each iteration and keep
    /// it when it improves the dual value. Pure ascent; exact on fees whose
    /// subdifferential has a natural selection.
    pub subdifferential_step: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 10_000,
            tol_gap: 1e-7,
            tol_certificate: 1e-6,
            step_rule: StepRule::Diminishing { eta0: 1.0 },
            init: None,
            subdifferential_step: true,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters: must be at least 1"));
        }
        if !(self.tol_gap > 0.0) {
            return Err(Error::invalid("tol_gap: must be positive"));
        }
        if !(self.tol_certificate > 0.0) {
            return Err(Error::invalid("tol_certificate: must be positive"));
        }
        match self.step_rule {
            StepRule::Fixed { eta } if !(eta > 0.0) => {
                Err(Error::invalid("step_rule: eta must be positive"))
            }
            StepRule::Diminishing { eta0 } if !(eta0 > 0.0) => {
                Err(Error::invalid("step_rule: eta0 must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Optimality certificate residuals.
#[derive(Debug, Clone)]
pub struct Certificate {
    /// Fenchel-Young residual of the reported pair: condition "psi is a
    /// subgradient of the fee at lambda".
    pub fy_residual: f64,
    /// `max_j |lambda_j - cell_mass_j|`: lambda matches the cell masses.
    pub mass_mismatch: f64,
    /// `max_j |psi_j - psi^{c*c}_j|` over sites carrying mass.
    pub conjugacy_residual: f64,
    /// Mass of points whose best two sites are within the tie tolerance.
    pub tied_mass: f64,
    /// Sites excluded from the conjugacy check for lack of mass.
    pub excluded_sites: Vec<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Mean-zero dual potential of the reported iterate.
    pub psi: DualPotential,
    /// Reported primal weights; always inside the fee domain.
    pub lambda: WeightVector,
    pub assignment: CellAssignment,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `primal_value - dual_value`, nonnegative up to roundoff.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub certificate: Certificate,
}

/// One evaluated iterate.
struct Iterate {
    psi: Vec<f64>,
    outcome: SweepOutcome,
    dual: f64,
    /// Conjugate maximizer at this potential.
    lambda_hat: Vec<f64>,
    /// Best feasible primal candidate at this potential.
    lambda: Vec<f64>,
    primal: f64,
    /// Whether `primal` is exact (cell-mass candidate) or an upper bound.
    primal_exact: bool,
    gap: f64,
}

fn evaluate(
    instance: &ProblemInstance,
    fee: &StorageFee,
    psi: &[f64],
    spread: f64,
) -> Result<Iterate> {
    let potential = DualPotential::new(psi.to_vec())?;
    let outcome = sweep(instance, &potential);
    let conjugate = fee.conjugate_pair(psi)?;
    let dual = -outcome.weighted_phi - conjugate.0;
    let lambda_hat = conjugate.1;

    let cell_fee = fee.eval(&outcome.cell_masses);
    let (lambda, primal, primal_exact) = if cell_fee.is_finite() {
        (
            outcome.cell_masses.clone(),
            outcome.assignment_cost + cell_fee,
            true,
        )
    } else {
        // reroute the assignment plan onto the feasible conjugate maximizer:
        // each moved unit costs at most the cost spread
        let moved = 0.5 * l1_distance(&lambda_hat, &outcome.cell_masses);
        let bound = outcome.assignment_cost + spread * moved + fee.eval(&lambda_hat);
        (lambda_hat.clone(), bound, false)
    };
    Ok(Iterate {
        psi: psi.to_vec(),
        outcome,
        dual,
        lambda_hat,
        lambda,
        primal,
        primal_exact,
        gap: primal - dual,
    })
}

/// Maximizes the dual objective for the instance's own fee and certifies the
/// result.
pub fn solve_storage(instance: &ProblemInstance, config: &SolverConfig) -> Result<SolveReport> {
    if !instance.fee().is_convex() {
        return Err(Error::NonconvexFee);
    }
    let fee = instance.fee().clone();
    let mut report = solve_with_fee(instance, &fee, config)?;
    report.certificate = certify_pair(
        instance,
        &fee,
        &report.psi,
        &report.lambda,
        report.gap,
        config,
    )?;
    Ok(report)
}

/// Classical fixed-marginal semi-discrete solve: the storage solve with the
/// indicator fee of a single weight vector.
#[derive(Debug, Clone)]
pub struct FixedMarginalSolve {
    pub psi: DualPotential,
    pub transport_cost: f64,
    pub assignment: CellAssignment,
    /// `max_j |cell_mass_j - lambda_j|` at the final potential.
    pub mass_residual: f64,
    pub dual_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn solve_fixed_marginal(
    instance: &ProblemInstance,
    lambda: &WeightVector,
    config: &SolverConfig,
) -> Result<FixedMarginalSolve> {
    if lambda.len() != instance.num_sites() {
        return Err(Error::invalid("lambda: length does not match sites"));
    }
    let fee = StorageFee::fixed_marginal(lambda);
    let report = solve_with_fee(instance, &fee, config)?;
    let outcome = sweep(instance, &report.psi);
    Ok(FixedMarginalSolve {
        mass_residual: linf_distance(&outcome.cell_masses, lambda.as_slice()),
        transport_cost: outcome.assignment_cost,
        assignment: outcome.assignment,
        dual_value: report.dual_value,
        iterations: report.iterations,
        converged: report.converged,
        psi: report.psi,
    })
}

/// The ascent loop, generic in the fee (the instance fee or a fixed-marginal
/// indicator).
fn solve_with_fee(
    instance: &ProblemInstance,
    fee: &StorageFee,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    fee.validate(instance.num_sites())?;
    let n = instance.num_sites();
    let spread = instance.matrix().spread();

    let mut psi = match &config.init {
        Some(v) => {
            if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("init: bad starting potential"));
            }
            recentered(v)
        }
        None => vec![0.0; n],
    };

    let mut current = evaluate(instance, fee, &psi, spread)?;
    let mut best_primal = current.primal;
    let mut best_dual = current.dual;
    // the reported iterate: smallest gap, ties to the larger dual value
    let mut best: Option<Iterate> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut last_restart: Option<Vec<f64>> = None;

    // damped mode treats the supergradient as a fixed-point residual and
    // backtracks on it; fixed-marginal solves run damped from the start,
    // other fees fall back to it when the configured rule stalls (the
    // optimal potentials sit in windows narrower than the step sizes)
    let mut damped = matches!(fee, StorageFee::FixedMarginal { .. });
    let mut eta_fp = 1.0;
    let mut since_improvement = 0usize;
    const STALL_PATIENCE: usize = 200;
    // potentials at the optimum live within the cost scale of each other
    let step_norm_cap = 1.0 + spread + fee.lipschitz_bound();

    loop {
        iterations += 1;
        best_primal = best_primal.min(current.primal);
        best_dual = best_dual.max(current.dual);
        let better = match &best {
            None => true,
            Some(b) => current.gap < b.gap || (current.gap == b.gap && current.dual > b.dual),
        };
        if better {
            since_improvement = 0;
            best = Some(Iterate {
                psi: current.psi.clone(),
                outcome: current.outcome.clone(),
                dual: current.dual,
                lambda_hat: current.lambda_hat.clone(),
                lambda: current.lambda.clone(),
                primal: current.primal,
                primal_exact: current.primal_exact,
                gap: current.gap,
            });
        } else {
            since_improvement += 1;
        }
        if current.gap <= config.tol_gap {
            converged = true;
            break;
        }
        if iterations >= config.max_iters {
            break;
        }
        if !damped && since_improvement >= STALL_PATIENCE {
            damped = true;
            eta_fp = 1.0;
            if let Some(b) = &best {
                psi = b.psi.clone();
                current = evaluate(instance, fee, &psi, spread)?;
            }
        }

        let gradient: Vec<f64> = current
            .outcome
            .cell_masses
            .iter()
            .zip(&current.lambda_hat)
            .map(|(c, h)| c - h)
            .collect();
        let norm2 = dot(&gradient, &gradient);
        if norm2 == 0.0 {
            // stationary supergradient selection with a gap still open can
            // only happen through the rerouting bound; nothing to ascend
            break;
        }
        let mut eta = if damped {
            eta_fp
        } else {
            match config.step_rule {
                StepRule::Fixed { eta } => eta,
                StepRule::Diminishing { eta0 } => eta0 / (iterations as f64).sqrt(),
                StepRule::Polyak => (best_primal - current.dual) / norm2,
            }
        };
        eta = eta.min(step_norm_cap / norm2.sqrt());
        for (p, g) in psi.iter_mut().zip(&gradient) {
            *p += eta * g;
        }
        psi = recentered(&psi);
        let mut next = evaluate(instance, fee, &psi, spread)?;

        if damped {
            let res_now = l1_distance(&current.outcome.cell_masses, &current.lambda_hat);
            let res_next = l1_distance(&next.outcome.cell_masses, &next.lambda_hat);
            if res_next > res_now && eta_fp > 1e-9 {
                // reject the trial step and retry shorter from the same point
                eta_fp *= 0.5;
                psi = current.psi.clone();
                continue;
            }
            eta_fp = (eta_fp * 1.2).min(2.0);
        }

        if config.subdifferential_step && !damped {
            if let Some(selection) = fee.subgradient_selection(&current.outcome.cell_masses) {
                let candidate = recentered(&selection);
                if last_restart.as_deref() != Some(&candidate) {
                    let restart = evaluate(instance, fee, &candidate, spread)?;
                    last_restart = Some(candidate.clone());
                    if restart.dual > next.dual {
                        psi = candidate;
                        next = restart;
                    }
                }
            }
        }
        current = next;
    }

    let mut reported = if converged {
        current
    } else {
        best.expect("at least one iterate evaluated")
    };

    // when the loop stalls, alternate: solve the transport problem of the
    // conjugate maximizer and hand its potential back to the original dual.
    // At the optimum the two problems share maximizers, so each round both
    // tightens the primal and lifts the dual; for indicator fees it also
    // revises the active-set guess inside the conjugate maximizer
    if !converged && !matches!(fee, StorageFee::FixedMarginal { .. }) {
        let inner = SolverConfig {
            init: None,
            ..config.clone()
        };
        for _ in 0..4 {
            if reported.gap <= config.tol_gap {
                break;
            }
            let lambda = WeightVector::new(reported.lambda_hat.clone())?;
            let fm = solve_fixed_marginal(instance, &lambda, &inner)?;
            let handoff = evaluate(instance, fee, &recentered(fm.psi.as_slice()), spread)?;
            if handoff.gap < reported.gap {
                reported = handoff;
            } else {
                break;
            }
        }
        converged = reported.gap <= config.tol_gap;
    }

    debug_assert!(reported.gap >= -1e-10, "weak duality violated");
    Ok(SolveReport {
        psi: DualPotential::new(reported.psi)?.recentered(),
        lambda: WeightVector::new(reported.lambda)?,
        assignment: reported.outcome.assignment,
        primal_value: reported.primal,
        dual_value: reported.dual,
        gap: reported.gap,
        iterations,
        converged,
        certificate: Certificate {
            fy_residual: f64::NAN,
            mass_mismatch: f64::NAN,
            conjugacy_residual: f64::NAN,
            tied_mass: reported.outcome.tied_mass,
            excluded_sites: Vec::new(),
            passed: false,
        },
    })
}

/// The primal objective of an explicit assignment: transport cost of sending
/// each point wholly to its owner, plus the fee at the given weights.
pub fn primal_value(
    instance: &ProblemInstance,
    assignment: &CellAssignment,
    lambda: &WeightVector,
) -> Result<f64> {
    if assignment.len() != instance.num_points() {
        return Err(Error::invalid("assignment: size mismatch with instance"));
    }
    let masses = instance.measure().masses();
    let matrix = instance.matrix();
    let transport = pairwise_map_sum(0, assignment.len(), &|i| {
        masses[i] * matrix.get(i, assignment.owner[i])
    });
    Ok(transport + instance.fee().eval(lambda.as_slice()))
}

/// Recomputes the optimality certificate for a report on its instance.
pub fn certify(
    instance: &ProblemInstance,
    report: &SolveReport,
    config: &SolverConfig,
) -> Result<Certificate> {
    certify_pair(
        instance,
        instance.fee(),
        &report.psi,
        &report.lambda,
        report.gap,
        config,
    )
}

/// Certifies a stored potential/weight pair without a gap check (used when
/// replaying solution files, where only the residuals are recomputable).
pub fn certify_potentials(
    instance: &ProblemInstance,
    psi: &DualPotential,
    lambda: &WeightVector,
    tol_certificate: f64,
) -> Result<Certificate> {
    let config = SolverConfig {
        tol_certificate,
        ..SolverConfig::default()
    };
    certify_pair(instance, instance.fee(), psi, lambda, 0.0, &config)
}

fn certify_pair(
    instance: &ProblemInstance,
    fee: &StorageFee,
    psi: &DualPotential,
    lambda: &WeightVector,
    gap: f64,
    config: &SolverConfig,
) -> Result<Certificate> {
    if psi.len() != instance.num_sites() || lambda.len() != instance.num_sites() {
        return Err(Error::invalid("certificate: dimension mismatch"));
    }
    let outcome = sweep(instance, psi);
    let fy_residual = fenchel_young_residual(fee, lambda.as_slice(), psi.as_slice())?;
    let mass_mismatch = linf_distance(lambda.as_slice(), &outcome.cell_masses);
    let psi_cc = c_transform(instance, &outcome.phi);
    let mut conjugacy_residual: f64 = 0.0;
    let mut excluded_sites = Vec::new();
    for j in 0..instance.num_sites() {
        if lambda.as_slice()[j] > config.tol_certificate {
            conjugacy_residual = conjugacy_residual.max((psi.as_slice()[j] - psi_cc[j]).abs());
        } else {
            excluded_sites.push(j);
        }
    }
    let tol = config.tol_certificate;
    let passed = fy_residual <= tol
        && mass_mismatch <= tol
        && conjugacy_residual <= tol
        && gap <= config.tol_gap;
    Ok(Certificate {
        fy_residual,
        mass_mismatch,
        conjugacy_residual,
        tied_mass: outcome.tied_mass,
        excluded_sites,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostFunction;
    use crate::measure::{build_grid_measure, BoundingBox};
    use crate::sites::SiteSet;

    fn line_instance(resolution: usize, fee: StorageFee) -> ProblemInstance {
        let b = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        let measure = build_grid_measure(&b, &[resolution], |_| 1.0).unwrap();
        let sites = SiteSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        ProblemInstance::new(measure, sites, CostFunction::power(2.0).unwrap(), fee).unwrap()
    }

    fn polyak() -> SolverConfig {
        SolverConfig {
            step_rule: StepRule::Polyak,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn zero_fee_splits_evenly() {
        let instance = line_instance(2000, StorageFee::zero());
        let report = solve_storage(&instance, &polyak()).unwrap();
        assert!(report.converged);
        assert!(report.gap <= 1e-7);
        assert!((report.lambda.as_slice()[0] - 0.5).abs() <= 0.002);
        assert!((report.primal_value - 1.0 / 12.0).abs() <= 1e-3);
        assert!(report.certificate.passed);
    }

    #[test]
    fn linear_fee_shifts_the_boundary() {
        let fee = StorageFee::linear(vec![0.0, 0.3]).unwrap();
        let instance = line_instance(2000, fee);
        let report = solve_storage(&instance, &polyak()).unwrap();
        assert!(report.converged, "gap={}", report.gap);
        assert!((report.lambda.as_slice()[0] - 0.65).abs() <= 0.002);
        assert!((report.primal_value - 0.210833).abs() <= 1e-3);
        // optimality pins psi to the fee gradient up to a constant
        let psi = report.psi.as_slice();
        assert!((psi[1] - psi[0] - 0.3).abs() <= 1e-4);
        assert!(report.certificate.passed);
    }

    #[test]
    fn quadratic_fee_keeps_the_symmetric_split() {
        let fee = StorageFee::quadratic(1.0).unwrap();
        let instance = line_instance(2000, fee);
        let report = solve_storage(&instance, &polyak()).unwrap();
        assert!(report.converged);
        assert!((report.lambda.as_slice()[0] - 0.5).abs() <= 0.002);
        assert!((report.primal_value - (1.0 / 12.0 + 0.25)).abs() <= 1e-3);
        assert!(report.certificate.passed);
    }

    #[test]
    fn default_step_rule_still_converges_on_the_linear_instance() {
        let fee = StorageFee::linear(vec![0.0, 0.3]).unwrap();
        let instance = line_instance(2000, fee);
        let report = solve_storage(&instance, &SolverConfig::default()).unwrap();
        assert!(report.converged, "gap={}", report.gap);
        assert!((report.lambda.as_slice()[0] - 0.65).abs() <= 0.002);
    }

    #[test]
    fn capacity_fee_binds_at_the_cap() {
        let fee = StorageFee::capacity(vec![0.3, 1.0]).unwrap();
        let instance = line_instance(2000, fee);
        let report = solve_storage(&instance, &polyak()).unwrap();
        assert!(report.converged, "gap={}", report.gap);
        assert!((report.lambda.as_slice()[0] - 0.3).abs() <= 0.002);
        assert!(report.certificate.passed);
    }

    #[test]
    fn planar_instance_with_four_sites() {
        let b = BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let measure = build_grid_measure(&b, &[60, 60], |_| 1.0).unwrap();
        let sites = SiteSet::new(vec![
            vec![0.25, 0.25],
            vec![0.75, 0.25],
            vec![0.25, 0.75],
            vec![0.75, 0.75],
        ])
        .unwrap();
        let instance = ProblemInstance::new(
            measure,
            sites,
            CostFunction::power(2.0).unwrap(),
            StorageFee::zero(),
        )
        .unwrap();
        let report = solve_storage(&instance, &polyak()).unwrap();
        assert!(report.converged);
        assert!(report.certificate.passed);
        for &l in report.lambda.as_slice() {
            assert!((l - 0.25).abs() <= 1e-3, "lambda={:?}", report.lambda);
        }
        // each quadrant ships mass 1/4 to its center: twice the coordinate
        // variance (1/2)^2/12 per unit mass, so the total cost is 1/24
        assert!((report.primal_value - 1.0 / 24.0).abs() <= 1e-3);
    }

    #[test]
    fn max_iters_one_reports_not_converged() {
        let fee = StorageFee::linear(vec![0.0, 0.3]).unwrap();
        let instance = line_instance(500, fee);
        let config = SolverConfig {
            max_iters: 1,
            ..polyak()
        };
        let report = solve_storage(&instance, &config).unwrap();
        assert!(!report.converged);
        assert!(report.gap > 1e-7);
    }

    #[test]
    fn single_site_is_trivially_certified() {
        let b = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        let measure = build_grid_measure(&b, &[100], |_| 1.0).unwrap();
        let sites = SiteSet::new(vec![vec![0.4]]).unwrap();
        let instance = ProblemInstance::new(
            measure,
            sites,
            CostFunction::power(2.0).unwrap(),
            StorageFee::zero(),
        )
        .unwrap();
        let report = solve_storage(&instance, &polyak()).unwrap();
        assert!(report.converged);
        assert!((report.lambda.as_slice()[0] - 1.0).abs() <= 1e-9);
        assert!(report.certificate.passed);
    }

    #[test]
    fn certificate_flags_a_suboptimal_pair() {
        // at psi = 0 on the linear instance the Fenchel-Young residual is
        // F*(0) + <a, cells> - 0 = 0.15
        let fee = StorageFee::linear(vec![0.0, 0.3]).unwrap();
        let instance = line_instance(2000, fee);
        let psi = DualPotential::zeros(2);
        let lambda = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let cert = certify_potentials(&instance, &psi, &lambda, 1e-6).unwrap();
        assert!(!cert.passed);
        assert!((cert.fy_residual - 0.15).abs() < 1e-12);
    }

    #[test]
    fn fixed_marginal_even_split() {
        let instance = line_instance(2000, StorageFee::zero());
        let lambda = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let fm = solve_fixed_marginal(&instance, &lambda, &polyak()).unwrap();
        assert!(fm.converged);
        assert!((fm.transport_cost - 1.0 / 12.0).abs() <= 1e-3);
        assert!(fm.mass_residual <= 1e-9);
    }

    #[test]
    fn fixed_marginal_forced_to_one_site() {
        let instance = line_instance(2000, StorageFee::zero());
        let lambda = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let fm = solve_fixed_marginal(&instance, &lambda, &polyak()).unwrap();
        assert!(fm.converged);
        assert!((fm.transport_cost - 1.0 / 3.0).abs() <= 1e-3);
    }

    #[test]
    fn fixed_marginal_asymmetric_split() {
        let instance = line_instance(2000, StorageFee::zero());
        let lambda = WeightVector::new(vec![0.65, 0.35]).unwrap();
        let fm = solve_fixed_marginal(&instance, &lambda, &polyak()).unwrap();
        assert!(fm.converged);
        let expected = (0.65f64.powi(3) + 0.35f64.powi(3)) / 3.0;
        assert!((fm.transport_cost - expected).abs() <= 1e-3);
    }

    #[test]
    fn weak_duality_along_the_run() {
        let fee = StorageFee::quadratic(0.7).unwrap();
        let instance = line_instance(700, fee.clone());
        let spread = instance.matrix().spread();
        let mut psi = vec![0.3, -0.3];
        for k in 1..40 {
            psi = recentered(&psi);
            let it = evaluate(&instance, &fee, &psi, spread).unwrap();
            assert!(it.gap >= -1e-10, "iterate {k} violates weak duality");
            psi[0] += 0.01 * (k as f64).sin();
            psi[1] -= 0.01 * (k as f64).cos();
        }
    }

    #[test]
    fn gauge_shifted_starts_agree() {
        let fee = StorageFee::linear(vec![0.0, 0.3]).unwrap();
        let instance = line_instance(800, fee);
        let a = solve_storage(
            &instance,
            &SolverConfig {
                init: Some(vec![0.2, -0.1]),
                ..polyak()
            },
        )
        .unwrap();
        let b = solve_storage(
            &instance,
            &SolverConfig {
                init: Some(vec![0.2 + 5.0, -0.1 + 5.0]),
                ..polyak()
            },
        )
        .unwrap();
        assert_eq!(a.assignment.owner, b.assignment.owner);
        assert_eq!(a.lambda.as_slice(), b.lambda.as_slice());
    }

    #[test]
    fn primal_value_of_a_hand_assignment() {
        let b = BoundingBox::new(vec![-0.5], vec![0.5]).unwrap();
        let measure = crate::measure::QuadratureMeasure::new(1, vec![0.0], vec![1.0], b).unwrap();
        let sites = SiteSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let instance = ProblemInstance::new(
            measure,
            sites,
            CostFunction::power(2.0).unwrap(),
            StorageFee::zero(),
        )
        .unwrap();
        let assignment = CellAssignment {
            owner: vec![0],
            tied: vec![false],
        };
        let lambda = WeightVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(primal_value(&instance, &assignment, &lambda).unwrap(), 0.0);
    }
}
