//! Problem configuration: JSON schema and instance construction.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use sdot::{
    build_grid_measure, read_measure_csv, BoundingBox, CostFunction, CostMatrix, ProblemInstance,
    SiteSet, SolverConfig, StepRule, StorageFee,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainSpec,
    pub sites: Vec<Vec<f64>>,
    pub cost: CostSpec,
    pub fee: StorageFee,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    Grid {
        #[serde(rename = "box")]
        bounds: Vec<[f64; 2]>,
        resolution: Vec<usize>,
        #[serde(default = "default_density")]
        density: String,
    },
    Csv {
        csv: PathBuf,
    },
}

fn default_density() -> String {
    "uniform".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostSpec {
    Power { exponent: f64 },
    InnerProduct,
    Table { values: CostMatrix },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub tol_gap: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol_certificate: Option<f64>,
    pub step_rule: Option<StepSpec>,
    pub init: Option<Vec<f64>>,
    pub subdifferential_step: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSpec {
    Fixed { eta: f64 },
    Diminishing { eta0: f64 },
    Polyak,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub solution: Option<PathBuf>,
    pub cells: Option<PathBuf>,
}

pub struct LoadedProblem {
    pub instance: ProblemInstance,
    pub solver: SolverConfig,
    pub output: OutputSpec,
    pub warnings: Vec<String>,
}

pub fn load_config(path: &Path) -> Result<ProblemConfig, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

/// Builds the problem instance and solver configuration, resolving relative
/// CSV paths against the config file location.
pub fn build_problem(config: &ProblemConfig, config_path: &Path) -> Result<LoadedProblem, String> {
    let mut warnings = Vec::new();
    let measure = match &config.domain {
        DomainSpec::Grid {
            bounds,
            resolution,
            density,
        } => {
            let lo = bounds.iter().map(|b| b[0]).collect();
            let hi = bounds.iter().map(|b| b[1]).collect();
            let bbox = BoundingBox::new(lo, hi).map_err(|e| format!("domain.box: {e}"))?;
            if density != "uniform" {
                return Err(format!(
                    "domain.density: unknown density '{density}' (supported: uniform)"
                ));
            }
            build_grid_measure(&bbox, resolution, |_| 1.0).map_err(|e| format!("domain: {e}"))?
        }
        DomainSpec::Csv { csv } => {
            let resolved = if csv.is_absolute() {
                csv.clone()
            } else {
                config_path.parent().unwrap_or(Path::new(".")).join(csv)
            };
            let file = std::fs::File::open(&resolved)
                .map_err(|e| format!("domain.csv {}: {e}", resolved.display()))?;
            let import = read_measure_csv(file).map_err(|e| format!("domain.csv: {e}"))?;
            if let Some(w) = import.renormalization_warning() {
                warnings.push(w);
            }
            import.measure
        }
    };

    let sites = SiteSet::new(config.sites.clone()).map_err(|e| e.to_string())?;
    let cost = match &config.cost {
        CostSpec::Power { exponent } => {
            CostFunction::power(*exponent).map_err(|e| e.to_string())?
        }
        CostSpec::InnerProduct => CostFunction::InnerProduct,
        CostSpec::Table { values } => CostFunction::Table(values.clone()),
    };
    let instance = ProblemInstance::new(measure, sites, cost, config.fee.clone())
        .map_err(|e| e.to_string())?;

    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        max_iters: config.solver.max_iters.unwrap_or(defaults.max_iters),
        tol_gap: config.solver.tol_gap.unwrap_or(defaults.tol_gap),
        tol_certificate: config
            .solver
            .tol_certificate
            .unwrap_or(defaults.tol_certificate),
        step_rule: match &config.solver.step_rule {
            Some(StepSpec::Fixed { eta }) => StepRule::Fixed { eta: *eta },
            Some(StepSpec::Diminishing { eta0 }) => StepRule::Diminishing { eta0: *eta0 },
            Some(StepSpec::Polyak) => StepRule::Polyak,
            None => defaults.step_rule,
        },
        init: config.solver.init.clone(),
        subdifferential_step: config
            .solver
            .subdifferential_step
            .unwrap_or(defaults.subdifferential_step),
    };
    Ok(LoadedProblem {
        instance,
        solver,
        output: OutputSpec {
            solution: config.output.solution.clone(),
            cells: config.output.cells.clone(),
        },
        warnings,
    })
}
