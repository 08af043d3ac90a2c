//! Subcommand implementations.

use std::path::{Path, PathBuf};

use sdot::{
    certify_potentials, enumerate_agreement_band, enumerate_to_json, oracle_enumerate,
    oracle_lambda_scan_1d, scan_agreement_band, scan_to_json, solution_from_json, solution_to_json,
    solve_storage, stability_convergence_check, stability_to_csv, transforms::write_cells_csv,
    DualPotential, OracleConfig, StorageFee, WeightVector,
};

use crate::config::{build_problem, load_config, LoadedProblem};
use crate::{Cli, Command, OracleMode, PerturbKind};

pub fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Command::Solve { config } => cmd_solve(cli, config),
        Command::Check { config, solution } => cmd_check(cli, config, solution),
        Command::Oracle {
            config,
            mode,
            splits,
            delta,
            budget,
            solution,
        } => cmd_oracle(
            cli,
            config,
            *mode,
            *splits,
            *delta,
            *budget,
            solution.as_deref(),
        ),
        Command::Stability {
            config,
            perturb,
            steps,
        } => cmd_stability(cli, config, *perturb, *steps),
    }
}

fn load(cli: &Cli, config_path: &Path) -> Result<LoadedProblem, String> {
    let config = load_config(config_path)?;
    let mut problem = build_problem(&config, config_path)?;
    if let Some(tol) = cli.tol_gap {
        problem.solver.tol_gap = tol;
    }
    if let Some(iters) = cli.max_iters {
        problem.solver.max_iters = iters;
    }
    if !cli.quiet {
        for w in &problem.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(problem)
}

fn out_path(cli: &Cli, configured: Option<&PathBuf>, default: &str) -> PathBuf {
    let name = configured
        .cloned()
        .unwrap_or_else(|| PathBuf::from(default));
    if name.is_absolute() {
        name
    } else {
        cli.out.join(name)
    }
}

fn format_lambda(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_solve(cli: &Cli, config_path: &Path) -> Result<u8, String> {
    let problem = load(cli, config_path)?;
    let report = solve_storage(&problem.instance, &problem.solver).map_err(|e| e.to_string())?;

    let solution_path = out_path(cli, problem.output.solution.as_ref(), "solution.json");
    std::fs::write(&solution_path, solution_to_json(&report))
        .map_err(|e| format!("writing {}: {e}", solution_path.display()))?;
    if let Some(cells) = &problem.output.cells {
        let cells_path = out_path(cli, Some(cells), "cells.csv");
        let mut buf = Vec::new();
        write_cells_csv(&problem.instance, &report.assignment, &mut buf)
            .map_err(|e| e.to_string())?;
        std::fs::write(&cells_path, buf)
            .map_err(|e| format!("writing {}: {e}", cells_path.display()))?;
    }

    if !cli.quiet {
        println!(
            "lambda={} gap={:.3e} iterations={} converged={}",
            format_lambda(report.lambda.as_slice()),
            report.gap,
            report.iterations,
            report.converged,
        );
    }
    if !report.converged {
        return Ok(2);
    }
    if !report.certificate.passed {
        return Ok(3);
    }
    Ok(0)
}

fn cmd_check(cli: &Cli, config_path: &Path, solution_path: &Path) -> Result<u8, String> {
    let problem = load(cli, config_path)?;
    let text = std::fs::read_to_string(solution_path)
        .map_err(|e| format!("solution {}: {e}", solution_path.display()))?;
    let solution = solution_from_json(&text).map_err(|e| e.to_string())?;
    let n = problem.instance.num_sites();
    if solution.psi.len() != n || solution.lambda.len() != n {
        return Err(format!(
            "solution: {} potentials / {} weights do not match {} sites",
            solution.psi.len(),
            solution.lambda.len(),
            n
        ));
    }
    let psi = DualPotential::new(solution.psi).map_err(|e| e.to_string())?;
    let lambda = WeightVector::new(solution.lambda).map_err(|e| e.to_string())?;
    let certificate = certify_potentials(
        &problem.instance,
        &psi,
        &lambda,
        problem.solver.tol_certificate,
    )
    .map_err(|e| e.to_string())?;

    if !cli.quiet {
        println!(
            "fy_residual={:.3e} mass_mismatch={:.3e} conjugacy_residual={:.3e} tied_mass={:.3e}",
            certificate.fy_residual,
            certificate.mass_mismatch,
            certificate.conjugacy_residual,
            certificate.tied_mass,
        );
    }
    let tol = problem.solver.tol_certificate;
    let ok = certificate.fy_residual <= tol
        && certificate.mass_mismatch <= tol
        && certificate.conjugacy_residual <= tol;
    Ok(if ok { 0 } else { 3 })
}

fn cmd_oracle(
    cli: &Cli,
    config_path: &Path,
    mode: OracleMode,
    splits: usize,
    delta: f64,
    budget: u128,
    solution: Option<&Path>,
) -> Result<u8, String> {
    let problem = load(cli, config_path)?;
    let oracle_config = OracleConfig {
        splits,
        lambda_mesh: delta,
        budget,
    };
    let (json, value, band_for) = match mode {
        OracleMode::Enumerate => {
            let report =
                oracle_enumerate(&problem.instance, &oracle_config).map_err(|e| e.to_string())?;
            let value = report.value;
            (
                enumerate_to_json(&report),
                value,
                Band::Enumerate { splits },
            )
        }
        OracleMode::LambdaScan1d => {
            let report = oracle_lambda_scan_1d(&problem.instance, &oracle_config)
                .map_err(|e| e.to_string())?;
            let value = report.value;
            (scan_to_json(&report), value, Band::Scan { mesh: delta })
        }
    };
    let oracle_path = out_path(cli, None, "oracle.json");
    std::fs::write(&oracle_path, json)
        .map_err(|e| format!("writing {}: {e}", oracle_path.display()))?;

    let Some(solution_path) = solution else {
        if !cli.quiet {
            println!("oracle value={value:.9}");
        }
        return Ok(0);
    };
    let text = std::fs::read_to_string(solution_path)
        .map_err(|e| format!("solution {}: {e}", solution_path.display()))?;
    let stored = solution_from_json(&text).map_err(|e| e.to_string())?;
    let band = match band_for {
        Band::Enumerate { splits } => {
            enumerate_agreement_band(&problem.instance, stored.gap, splits)
        }
        Band::Scan { mesh } => scan_agreement_band(&problem.instance, stored.gap, mesh),
    };
    let discrepancy = (stored.primal_value - value).abs();
    if !cli.quiet {
        println!("oracle value={value:.9} solver value={:.9} discrepancy={discrepancy:.3e} band={band:.3e}",
            stored.primal_value);
    }
    Ok(if discrepancy <= band { 0 } else { 3 })
}

enum Band {
    Enumerate { splits: usize },
    Scan { mesh: f64 },
}

fn cmd_stability(
    cli: &Cli,
    config_path: &Path,
    perturb: PerturbKind,
    steps: usize,
) -> Result<u8, String> {
    if steps < 1 {
        return Err("steps must be >= 1".to_string());
    }
    let problem = load(cli, config_path)?;
    let base = problem.instance.fee().clone();
    let n = problem.instance.num_sites();
    let fees: Vec<StorageFee> = (1..=steps as i32)
        .map(|k| perturbed_fee(&base, perturb, 2.0_f64.powi(-k), n))
        .collect::<Result<_, String>>()?;

    let report = stability_convergence_check(&problem.instance, &fees, &base, &problem.solver)
        .map_err(|e| e.to_string())?;
    let csv_path = out_path(cli, None, "stability.csv");
    std::fs::write(&csv_path, stability_to_csv(&report))
        .map_err(|e| format!("writing {}: {e}", csv_path.display()))?;

    if !cli.quiet {
        for (k, step) in report.steps.iter().enumerate() {
            println!(
                "k={} sup_diff={:.3e} value_diff={:.3e} lambda_distance={:.3e} bound_holds={}",
                k + 1,
                step.sup_diff,
                step.value_diff,
                step.lambda_distance,
                step.bound_holds,
            );
        }
    }
    if !report.conclusive {
        return Ok(2);
    }
    Ok(if report.passes { 0 } else { 3 })
}

/// Shifts the base fee by `size` according to the perturbation kind.
fn perturbed_fee(
    base: &StorageFee,
    kind: PerturbKind,
    size: f64,
    n: usize,
) -> Result<StorageFee, String> {
    match (kind, base) {
        (PerturbKind::Constant, StorageFee::Zero) => {
            StorageFee::linear(vec![size; n]).map_err(|e| e.to_string())
        }
        (PerturbKind::Constant, StorageFee::Linear { a }) => {
            StorageFee::linear(a.iter().map(|x| x + size).collect()).map_err(|e| e.to_string())
        }
        (PerturbKind::LinearShift, StorageFee::Zero) => {
            let mut a = vec![0.0; n];
            a[n - 1] = size;
            StorageFee::linear(a).map_err(|e| e.to_string())
        }
        (PerturbKind::LinearShift, StorageFee::Linear { a }) => {
            let mut a = a.clone();
            a[n - 1] += size;
            StorageFee::linear(a).map_err(|e| e.to_string())
        }
        (PerturbKind::QuadraticSigma, StorageFee::Quadratic { sigma }) => {
            StorageFee::quadratic(sigma + size).map_err(|e| e.to_string())
        }
        _ => Err(format!(
            "perturbation {kind:?} does not apply to the configured fee kind"
        )),
    }
}
