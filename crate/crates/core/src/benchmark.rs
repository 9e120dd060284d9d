//! Simulation harness: render the D65 / BabelColor / Nikon 5100 scene,
//! estimate illumination and each camera channel with every method, and
//! tabulate RMSE against ground truth.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataio;
use crate::error::{Error, Result};
use crate::estimators::{
    bayes_estimate, least_squares_estimate, Estimate, EstimationProblem, DEFAULT_NOISE_PRECISION,
};
use crate::forward::{render_observations, NoiseModel};
use crate::jiang::jiang_estimate;
use crate::metrics::{normalized_rmse, rmse};
use crate::priors::{
    daylight_prior, sensitivity_prior, PrecisionSpec, PriorLibrary, DEFAULT_COMPONENTS,
};
use crate::spectral::{Observations, Role, Spectrum, SpectrumSet, WavelengthGrid};

/// Peak-normalizes illumination and sensitivity spectra; reflectances are
/// physical fractions and stay as they are.
pub fn prepare_inputs(set: &SpectrumSet) -> Result<SpectrumSet> {
    match set.role() {
        Role::Reflectance => Ok(set.clone()),
        _ => set.map_members(Spectrum::peak_normalized),
    }
}

/// Ground-truth spectrum families of a simulated capture.
#[derive(Debug, Clone)]
pub struct Scene {
    sets: [SpectrumSet; 3],
}

impl Scene {
    /// Sets may come in any order; inputs are passed through [`prepare_inputs`].
    pub fn new(a: SpectrumSet, b: SpectrumSet, c: SpectrumSet) -> Result<Self> {
        let mut sets = [
            prepare_inputs(&a)?,
            prepare_inputs(&b)?,
            prepare_inputs(&c)?,
        ];
        sets.sort_by_key(|s| s.role().axis());
        let roles: Vec<Role> = sets.iter().map(|s| s.role()).collect();
        if roles != Role::ALL {
            return Err(Error::RoleConflict(format!(
                "a scene needs one family per role, got {roles:?}"
            )));
        }
        Ok(Self { sets })
    }

    pub fn from_manifests(paths: [&Path; 3], grid: &WavelengthGrid) -> Result<Self> {
        let [a, b, c] = paths;
        Self::new(
            dataio::load_dataset(a, grid)?,
            dataio::load_dataset(b, grid)?,
            dataio::load_dataset(c, grid)?,
        )
    }

    /// D65 × BabelColor × Nikon 5100 from a data root.
    pub fn standard(data_root: &Path, grid: &WavelengthGrid) -> Result<Self> {
        Self::from_manifests(
            [
                &data_root.join("d65/manifest.json"),
                &data_root.join("babelcolor/manifest.json"),
                &data_root.join("nikon5100/manifest.json"),
            ],
            grid,
        )
    }

    pub fn grid(&self) -> &WavelengthGrid {
        self.sets[0].grid()
    }

    pub fn set(&self, role: Role) -> &SpectrumSet {
        &self.sets[role.axis()]
    }

    pub fn render(&self, noise: &NoiseModel) -> Result<Observations> {
        let [e, r, c] = &self.sets;
        render_observations(e, r, c, noise)
    }

    pub fn problem(
        &self,
        target: Role,
        index: usize,
        observations: Observations,
        noise_precision: f64,
    ) -> Result<EstimationProblem> {
        let [a, b] = target.others();
        EstimationProblem::new(
            target,
            index,
            self.set(a).clone(),
            self.set(b).clone(),
            observations,
            noise_precision,
        )
    }

    pub fn truth(&self, target: Role, index: usize) -> Result<&Spectrum> {
        self.set(target).get(index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    LeastSquares,
    Jiang,
    Proposed,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 3] = [
        BenchMethod::LeastSquares,
        BenchMethod::Jiang,
        BenchMethod::Proposed,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BenchMethod::LeastSquares => "Least squares",
            BenchMethod::Jiang => "Jiang",
            BenchMethod::Proposed => "Proposed",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            BenchMethod::LeastSquares => "lsq",
            BenchMethod::Jiang => "jiang",
            BenchMethod::Proposed => "bayes",
        }
    }
}

/// Table rows: illumination, then each sensitivity channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchTarget {
    pub role: Role,
    pub index: usize,
}

impl BenchTarget {
    pub fn label(&self) -> String {
        match self.role {
            Role::Illumination => "Illumination".to_string(),
            Role::Sensitivity => format!(
                "Sensitivity {}",
                ["R", "G", "B"].get(self.index).unwrap_or(&"?")
            ),
            Role::Reflectance => format!("Reflectance {}", self.index),
        }
    }

    pub fn key(&self) -> String {
        match self.role {
            Role::Illumination => "illumination".to_string(),
            Role::Sensitivity => format!(
                "sensitivity_{}",
                ["r", "g", "b"].get(self.index).unwrap_or(&"?")
            ),
            Role::Reflectance => format!("reflectance_{}", self.index),
        }
    }
}

pub const TABLE_TARGETS: [BenchTarget; 4] = [
    BenchTarget {
        role: Role::Illumination,
        index: 0,
    },
    BenchTarget {
        role: Role::Sensitivity,
        index: 0,
    },
    BenchTarget {
        role: Role::Sensitivity,
        index: 1,
    },
    BenchTarget {
        role: Role::Sensitivity,
        index: 2,
    },
];

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub seeds: usize,
    pub base_seed: u64,
    pub sigmas: Vec<f64>,
    pub precision: PrecisionSpec,
    /// Overrides `1/σ²` (or the default for noiseless runs).
    pub beta: Option<f64>,
    pub components: usize,
    pub normalize_rmse: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            base_seed: 0,
            sigmas: vec![0.0, 0.01],
            precision: PrecisionSpec::default(),
            beta: None,
            components: DEFAULT_COMPONENTS,
            normalize_rmse: true,
        }
    }
}

impl BenchmarkConfig {
    pub fn beta_for(&self, sigma: f64) -> f64 {
        self.beta.unwrap_or(if sigma > 0.0 {
            1.0 / (sigma * sigma)
        } else {
            DEFAULT_NOISE_PRECISION
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub mean: f64,
    pub std: f64,
    pub samples: usize,
}

impl CellStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
            samples: samples.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkRow {
    pub target: BenchTarget,
    /// Indexed like [`BenchMethod::ALL`]; `None` where the method does not apply.
    pub cells: [Option<CellStats>; 3],
    pub samples: [Vec<f64>; 3],
}

#[derive(Debug, Clone)]
pub struct BenchmarkTable {
    pub sigma: f64,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    pub fn cell(&self, target: BenchTarget, method: BenchMethod) -> Option<CellStats> {
        let m = BenchMethod::ALL.iter().position(|&x| x == method)?;
        self.rows
            .iter()
            .find(|r| r.target == target)
            .and_then(|r| r.cells[m])
    }
}

/// Runs one estimator on one target and scores it.
pub fn score(
    scene: &Scene,
    library: &PriorLibrary,
    observations: &Observations,
    target: BenchTarget,
    method: BenchMethod,
    config: &BenchmarkConfig,
    beta: f64,
) -> Result<Option<f64>> {
    let problem = scene.problem(target.role, target.index, observations.clone(), beta)?;
    let estimate: Estimate = match method {
        BenchMethod::LeastSquares => least_squares_estimate(&problem)?,
        BenchMethod::Proposed => {
            let prior = match target.role {
                Role::Illumination => daylight_prior(library, config.precision)?,
                Role::Sensitivity => sensitivity_prior(library, target.index, config.precision)?,
                Role::Reflectance => crate::priors::flat_prior(scene.grid(), config.precision)?,
            };
            bayes_estimate(&problem, &prior)?
        }
        BenchMethod::Jiang => {
            if target.role != Role::Sensitivity {
                return Ok(None);
            }
            let basis = library
                .sensitivity_basis(target.index)?
                .truncated(config.components)?;
            let mean = Spectrum::new(*scene.grid(), basis.mean().to_vec(), Role::Sensitivity)?;
            jiang_estimate(&problem, &mean, basis.components())?
        }
    };
    let truth = scene.truth(target.role, target.index)?.values();
    let value = if config.normalize_rmse {
        normalized_rmse(estimate.raw(), truth)?
    } else {
        rmse(estimate.raw(), truth)?
    };
    Ok(Some(value))
}

/// Fills one table per noise level. Noiseless tables use a single render;
/// noisy tables average over `config.seeds` renders.
pub fn run_benchmark(
    scene: &Scene,
    library: &PriorLibrary,
    config: &BenchmarkConfig,
) -> Result<Vec<BenchmarkTable>> {
    if config.seeds == 0 {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    if library.sensitivity_means().len() != scene.set(Role::Sensitivity).len() {
        return Err(Error::InvalidArgument(format!(
            "prior library has {} sensitivity channels, scene has {}",
            library.sensitivity_means().len(),
            scene.set(Role::Sensitivity).len()
        )));
    }
    config
        .sigmas
        .iter()
        .map(|&sigma| {
            let seeds: Vec<u64> = if sigma > 0.0 {
                (0..config.seeds as u64)
                    .map(|s| config.base_seed + s)
                    .collect()
            } else {
                vec![config.base_seed]
            };
            let beta = config.beta_for(sigma);
            let mut samples: Vec<[Vec<f64>; 3]> = vec![Default::default(); TABLE_TARGETS.len()];
            let mut applicable = vec![[true; 3]; TABLE_TARGETS.len()];
            for &seed in &seeds {
                let obs = scene.render(&NoiseModel::from_sigma(sigma, seed)?)?;
                for (t, &target) in TABLE_TARGETS.iter().enumerate() {
                    for (m, &method) in BenchMethod::ALL.iter().enumerate() {
                        match score(scene, library, &obs, target, method, config, beta)? {
                            Some(v) => samples[t][m].push(v),
                            None => applicable[t][m] = false,
                        }
                    }
                }
            }
            let rows = TABLE_TARGETS
                .iter()
                .zip(samples)
                .zip(applicable)
                .map(|((&target, samples), applicable)| {
                    let cells = std::array::from_fn(|m| {
                        (applicable[m] && !samples[m].is_empty())
                            .then(|| CellStats::from_samples(&samples[m]))
                    });
                    BenchmarkRow {
                        target,
                        cells,
                        samples,
                    }
                })
                .collect();
            Ok(BenchmarkTable { sigma, rows })
        })
        .collect()
}

const MISSING: &str = "---";

pub fn format_tables_text(tables: &[BenchmarkTable]) -> String {
    let mut out = String::new();
    for table in tables {
        if table.sigma > 0.0 {
            let seeds = table
                .rows
                .first()
                .and_then(|r| r.cells.iter().flatten().next())
                .map_or(0, |c| c.samples);
            let _ = writeln!(
                out,
                "RMSE scores (w/ additive Gaussian noise having std. of {}; mean ± std over {seeds} seeds)",
                table.sigma
            );
        } else {
            let _ = writeln!(out, "RMSE scores (w/o noise)");
        }
        let _ = writeln!(
            out,
            "{:<16}| {:>17} {:>17} {:>17}",
            "", "Least squares", "Jiang", "Proposed"
        );
        let _ = writeln!(out, "{}", "-".repeat(16 + 2 + 3 * 18 - 1));
        for row in &table.rows {
            let _ = write!(out, "{:<16}|", row.target.label());
            for cell in &row.cells {
                let text = match cell {
                    None => MISSING.to_string(),
                    Some(c) if table.sigma > 0.0 => format!("{:.3} ± {:.3}", c.mean, c.std),
                    Some(c) => format!("{:.3}", c.mean),
                };
                let _ = write!(out, " {text:>17}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn format_tables_csv(tables: &[BenchmarkTable]) -> String {
    let mut out = String::from("noise_sigma,target,method,rmse_mean,rmse_std,seeds\n");
    for table in tables {
        for row in &table.rows {
            for (m, cell) in BenchMethod::ALL.iter().zip(&row.cells) {
                match cell {
                    Some(c) => {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},{}",
                            table.sigma,
                            row.target.key(),
                            m.key(),
                            c.mean,
                            c.std,
                            c.samples
                        );
                    }
                    None => {
                        let _ = writeln!(
                            out,
                            "{},{},{},{MISSING},{MISSING},0",
                            table.sigma,
                            row.target.key(),
                            m.key()
                        );
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_stats_sample_std() {
        let c = CellStats::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(c.mean, 2.0);
        assert!((c.std - 1.0).abs() < 1e-15);
        assert_eq!(CellStats::from_samples(&[4.0]).std, 0.0);
    }

    #[test]
    fn beta_defaults() {
        let c = BenchmarkConfig::default();
        assert!((c.beta_for(0.01) - 1e4).abs() < 1e-6);
        assert_eq!(c.beta_for(0.0), DEFAULT_NOISE_PRECISION);
        let c = BenchmarkConfig {
            beta: Some(5.0),
            ..c
        };
        assert_eq!(c.beta_for(0.01), 5.0);
    }

    #[test]
    fn target_labels() {
        assert_eq!(TABLE_TARGETS[0].label(), "Illumination");
        assert_eq!(TABLE_TARGETS[2].label(), "Sensitivity G");
        assert_eq!(TABLE_TARGETS[3].key(), "sensitivity_b");
    }
}
