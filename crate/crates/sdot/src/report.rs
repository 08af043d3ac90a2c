//! Result serialization: solution JSON (written with 17 significant digits
//! so values round-trip bit-exactly), oracle reports, and stability CSV.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::Result;
use crate::numeric::fmt_f64;
use crate::oracle::{EnumerateReport, ScanReport, StabilityConvergenceReport};
use crate::solver::SolveReport;

fn float_array(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
    format!("[{}]", inner.join(", "))
}

/// Renders a solve report as the solution JSON document.
pub fn solution_to_json(report: &SolveReport) -> String {
    let mut out = String::new();
    let cert = &report.certificate;
    let _ = write!(
        out,
        "{{\n  \"psi\": {},\n  \"lambda\": {},\n  \"primal_value\": {},\n  \"dual_value\": {},\n  \"gap\": {},\n  \"iterations\": {},\n  \"converged\": {},\n  \"certificate\": {{\n    \"fy_residual\": {},\n    \"mass_mismatch\": {},\n    \"conjugacy_residual\": {},\n    \"tied_mass\": {}\n  }}\n}}\n",
        float_array(report.psi.as_slice()),
        float_array(report.lambda.as_slice()),
        fmt_f64(report.primal_value),
        fmt_f64(report.dual_value),
        fmt_f64(report.gap),
        report.iterations,
        report.converged,
        fmt_f64(cert.fy_residual),
        fmt_f64(cert.mass_mismatch),
        fmt_f64(cert.conjugacy_residual),
        fmt_f64(cert.tied_mass),
    );
    out
}

/// A parsed solution file.
#[derive(Debug, Clone, Deserialize)]
pub struct SolutionFile {
    pub psi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub certificate: CertificateFile,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CertificateFile {
    pub fy_residual: f64,
    pub mass_mismatch: f64,
    pub conjugacy_residual: f64,
    pub tied_mass: f64,
}

pub fn solution_from_json(text: &str) -> Result<SolutionFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn enumerate_to_json(report: &EnumerateReport) -> String {
    let map: Vec<String> = report.map.iter().map(usize::to_string).collect();
    format!(
        "{{\n  \"mode\": \"enumerate\",\n  \"value\": {},\n  \"lambda\": {},\n  \"sub_atoms\": {},\n  \"map\": [{}]\n}}\n",
        fmt_f64(report.value),
        float_array(report.lambda.as_slice()),
        report.sub_atoms,
        map.join(", "),
    )
}

pub fn scan_to_json(report: &ScanReport) -> String {
    format!(
        "{{\n  \"mode\": \"lambda-scan-1d\",\n  \"value\": {},\n  \"lambda\": {},\n  \"scanned\": {}\n}}\n",
        fmt_f64(report.value),
        float_array(report.lambda.as_slice()),
        report.scanned,
    )
}

/// Stability runs as CSV: step index, fee sup-distance, value shift, weight
/// distance to the limit solution.
pub fn stability_to_csv(report: &StabilityConvergenceReport) -> String {
    let mut out = String::from("k,sup_diff,value_diff,lambda_distance\n");
    for (k, step) in report.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            k + 1,
            fmt_f64(step.sup_diff),
            fmt_f64(step.value_diff),
            fmt_f64(step.lambda_distance),
        );
    }
    out
}
