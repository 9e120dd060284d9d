//! Command-line front end: `simulate`, `estimate`, `benchmark`, `plot`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::benchmark::{self, prepare_inputs, BenchmarkConfig, Scene};
use crate::dataio::{self, data_root};
use crate::error::{Error, Result};
use crate::estimators::{
    bayes_estimate, least_squares_estimate, EstimationProblem, DEFAULT_NOISE_PRECISION,
};
use crate::forward::NoiseModel;
use crate::jiang::jiang_estimate;
use crate::metrics::{normalized_rmse, rmse};
use crate::plot::{self, Series};
use crate::priors::{
    daylight_prior, flat_prior, sensitivity_prior, PrecisionSpec, PriorLibrary, DEFAULT_ALPHA,
    DEFAULT_COMPONENTS, DEFAULT_GAMMA,
};
use crate::spectral::{Role, Spectrum, SpectrumSet, WavelengthGrid};

#[derive(Debug, Parser)]
#[command(
    name = "specbayes",
    version,
    about = "Bayesian spectral estimation from RGB pixels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render an observation tensor from three spectrum datasets.
    Simulate(SimulateArgs),
    /// Estimate one unknown spectrum from observations and two known families.
    Estimate(EstimateArgs),
    /// Reproduce the RMSE comparison table on the bundled datasets.
    Benchmark(BenchmarkArgs),
    /// Draw spectrum CSV files as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// First wavelength of the working grid (nm).
    #[arg(long, default_value_t = 400.0)]
    pub grid_start: f64,
    /// Grid spacing (nm).
    #[arg(long, default_value_t = 10.0)]
    pub grid_step: f64,
    /// Number of grid samples.
    #[arg(long, default_value_t = 31)]
    pub grid_count: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<WavelengthGrid> {
        WavelengthGrid::new(self.grid_start, self.grid_step, self.grid_count)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Illumination dataset manifest [default: <data>/d65/manifest.json].
    #[arg(long)]
    pub illumination: Option<PathBuf>,
    /// Reflectance dataset manifest [default: <data>/babelcolor/manifest.json].
    #[arg(long)]
    pub reflectance: Option<PathBuf>,
    /// Sensitivity dataset manifest [default: <data>/nikon5100/manifest.json].
    #[arg(long)]
    pub sensitivity: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Standard deviation of additive Gaussian noise; 0 renders noiselessly.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Observations CSV; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lsq,
    Bayes,
    Jiang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorMeanArg {
    Flat,
    Daylight,
    SensitivityDb,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Observations CSV written by `simulate` (sidecar alongside).
    #[arg(long)]
    pub observations: PathBuf,
    /// Role of the unknown spectrum.
    #[arg(long, value_parser = parse_role)]
    pub target: Role,
    /// Member index of the unknown along its axis.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Manifests of the two known families [default: bundled datasets].
    #[arg(long, num_args = 1)]
    pub known: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Bayes)]
    pub method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Noise precision; defaults to 1/σ² from the sidecar, else 1e4.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Prior mean [default: daylight for illumination, sensitivity-db for
    /// sensitivity, flat for reflectance].
    #[arg(long, value_enum)]
    pub prior_mean: Option<PriorMeanArg>,
    /// PCA components for the basis-constrained baseline.
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    pub components: usize,
    /// Ground truth: a dataset manifest (member `--index`) or a spectrum CSV.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Estimate CSV (max-normalized; values are not clipped).
    #[arg(long)]
    pub out: PathBuf,
    /// Posterior precision CSV [default: <out>_precision.csv].
    #[arg(long)]
    pub precision_out: Option<PathBuf>,
    /// Report RMSE on the raw estimate instead of normalizing both sides.
    #[arg(long)]
    pub no_normalize_rmse: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Noisy renders averaged per cell.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Noise levels, one table each.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.01], value_parser = non_negative)]
    pub noise_sigma: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    pub components: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Machine-readable results.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub no_normalize_rmse: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Spectrum CSV files, one polyline each.
    #[arg(long, required = true, num_args = 1)]
    pub input: Vec<PathBuf>,
    /// Legend labels, in input order [default: file stems].
    #[arg(long, num_args = 1)]
    pub label: Vec<String>,
    #[arg(long, default_value = "Spectra")]
    pub title: String,
    /// SVG output.
    #[arg(long)]
    pub out: PathBuf,
    /// Merged CSV of all inputs.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn non_negative(text: &str) -> std::result::Result<f64, String> {
    let v: f64 = text
        .parse()
        .map_err(|_| format!("'{text}' is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be finite and non-negative, got {text}"))
    }
}

fn parse_role(text: &str) -> std::result::Result<Role, String> {
    text.parse::<Role>().map_err(|e| e.to_string())
}

fn default_manifest(root: &Path, role: Role) -> PathBuf {
    let dir = match role {
        Role::Illumination => "d65",
        Role::Reflectance => "babelcolor",
        Role::Sensitivity => "nikon5100",
    };
    root.join(dir).join("manifest.json")
}

/// Writes every file or none: anything already written is removed when a
/// later write fails.
pub fn write_all(outputs: &[(PathBuf, String)]) -> Result<()> {
    for (n, (path, text)) in outputs.iter().enumerate() {
        if let Err(e) = fs::write(path, text) {
            for (done, _) in &outputs[..n] {
                let _ = fs::remove_file(done);
            }
            return Err(Error::from(e).in_file(path));
        }
    }
    Ok(())
}

fn load_prepared(path: &Path, grid: &WavelengthGrid) -> Result<SpectrumSet> {
    prepare_inputs(&dataio::load_dataset(path, grid)?)
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let grid = args.grid.grid()?;
    let root = data_root();
    let path = |given: &Option<PathBuf>, role| {
        given
            .clone()
            .unwrap_or_else(|| default_manifest(&root, role))
    };
    let scene = Scene::from_manifests(
        [
            &path(&args.illumination, Role::Illumination),
            &path(&args.reflectance, Role::Reflectance),
            &path(&args.sensitivity, Role::Sensitivity),
        ],
        &grid,
    )?;
    let noise = NoiseModel::from_sigma(args.noise_sigma, args.seed)?;
    let obs = scene.render(&noise)?;
    dataio::write_observations(&args.out, &obs, &grid, &noise)?;
    let [i, j, k] = obs.extents();
    writeln!(
        out,
        "wrote {i}x{j}x{k} observations to {} (noise sigma {}, seed {})",
        args.out.display(),
        noise.sigma(),
        noise.seed()
    )?;
    Ok(())
}

fn format_matrix_csv(m: &nalgebra::DMatrix<f64>) -> String {
    let mut text = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

fn default_precision_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "estimate".into());
    out.with_file_name(format!("{stem}_precision.csv"))
}

fn load_ground_truth(
    path: &Path,
    role: Role,
    index: usize,
    grid: &WavelengthGrid,
) -> Result<Spectrum> {
    let is_manifest = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_manifest {
        let set = load_prepared(path, grid)?;
        if set.role() != role {
            return Err(Error::RoleConflict(format!(
                "ground truth dataset is {}, target is {role}",
                set.role()
            )));
        }
        Ok(set.get(index)?.clone())
    } else {
        let spectrum = dataio::parse_spectrum_csv(path, role)?;
        let spectrum = dataio::resample_to_grid(&spectrum, grid)?;
        match role {
            Role::Reflectance => Ok(spectrum),
            _ => spectrum.peak_normalized(),
        }
    }
}

pub fn estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let (observations, sidecar) = dataio::read_observations(&args.observations)?;
    let grid = sidecar.grid;
    let root = data_root();
    let known_paths: Vec<PathBuf> = match args.known.len() {
        0 => args
            .target
            .others()
            .iter()
            .map(|&r| default_manifest(&root, r))
            .collect(),
        2 => args.known.clone(),
        n => {
            return Err(Error::InvalidArgument(format!(
                "--known must be given twice or not at all, got {n}"
            )))
        }
    };
    let a = load_prepared(&known_paths[0], &grid)?;
    let b = load_prepared(&known_paths[1], &grid)?;
    let beta = args
        .beta
        .or(sidecar.noise.precision())
        .unwrap_or(DEFAULT_NOISE_PRECISION);
    let problem = EstimationProblem::new(args.target, args.index, a, b, observations, beta)?;
    let spec = PrecisionSpec::new(args.alpha, args.gamma)?;

    let estimate = match args.method {
        MethodArg::Lsq => least_squares_estimate(&problem)?,
        MethodArg::Bayes => {
            let choice = args.prior_mean.unwrap_or(match args.target {
                Role::Illumination => PriorMeanArg::Daylight,
                Role::Sensitivity => PriorMeanArg::SensitivityDb,
                Role::Reflectance => PriorMeanArg::Flat,
            });
            let prior = match choice {
                PriorMeanArg::Flat => flat_prior(&grid, spec)?,
                PriorMeanArg::Daylight => {
                    daylight_prior(&PriorLibrary::load(&root, &grid, None)?, spec)?
                }
                PriorMeanArg::SensitivityDb => {
                    if args.target != Role::Sensitivity {
                        return Err(Error::InvalidArgument(format!(
                            "the sensitivity-db prior mean needs a sensitivity target, not {}",
                            args.target
                        )));
                    }
                    sensitivity_prior(&PriorLibrary::load(&root, &grid, None)?, args.index, spec)?
                }
            };
            bayes_estimate(&problem, &prior)?
        }
        MethodArg::Jiang => {
            if args.target != Role::Sensitivity {
                return Err(Error::MethodScope(format!(
                    "the basis-constrained baseline only estimates camera sensitivity, not {}",
                    args.target
                )));
            }
            let library = PriorLibrary::load(&root, &grid, Some(args.components))?;
            let basis = library.sensitivity_basis(args.index)?;
            let mean = Spectrum::new(grid, basis.mean().to_vec(), Role::Sensitivity)?;
            jiang_estimate(&problem, &mean, basis.components())?
        }
    };

    let score = args
        .ground_truth
        .as_ref()
        .map(|path| {
            let truth = load_ground_truth(path, args.target, args.index, &grid)?;
            if args.no_normalize_rmse {
                rmse(estimate.raw(), truth.values())
            } else {
                normalized_rmse(estimate.raw(), truth.values())
            }
        })
        .transpose()?;

    let mut outputs = vec![(
        args.out.clone(),
        dataio::format_spectrum_csv(&grid, estimate.normalized().values()),
    )];
    if let Some(posterior) = estimate.posterior() {
        let path = args
            .precision_out
            .clone()
            .unwrap_or_else(|| default_precision_path(&args.out));
        outputs.push((path, format_matrix_csv(posterior.precision())));
    }
    write_all(&outputs)?;

    writeln!(
        out,
        "method: {}\ntarget: {} {}",
        estimate.method().as_str(),
        args.target,
        args.index
    )?;
    for (path, _) in &outputs {
        writeln!(out, "wrote {}", path.display())?;
    }
    if let Some(score) = score {
        writeln!(out, "rmse: {score}")?;
    }
    Ok(())
}

pub fn run_benchmark(args: &BenchmarkArgs, out: &mut dyn Write) -> Result<()> {
    let grid = args.grid.grid()?;
    let root = data_root();
    let scene = Scene::standard(&root, &grid)?;
    let library = PriorLibrary::load(&root, &grid, Some(args.components))?;
    let config = BenchmarkConfig {
        seeds: args.seeds,
        base_seed: args.base_seed,
        sigmas: args.noise_sigma.clone(),
        precision: PrecisionSpec::new(args.alpha, args.gamma)?,
        beta: args.beta,
        components: args.components,
        normalize_rmse: !args.no_normalize_rmse,
    };
    let tables = benchmark::run_benchmark(&scene, &library, &config)?;
    if let Some(path) = &args.out_csv {
        write_all(&[(path.clone(), benchmark::format_tables_csv(&tables))])?;
    }
    write!(out, "{}", benchmark::format_tables_text(&tables))?;
    Ok(())
}

pub fn run_plot(args: &PlotArgs, out: &mut dyn Write) -> Result<()> {
    if !args.label.is_empty() && args.label.len() != args.input.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} inputs",
            args.label.len(),
            args.input.len()
        )));
    }
    let series = args
        .input
        .iter()
        .enumerate()
        .map(|(n, path)| {
            let (grid, values) = dataio::read_curve_csv(path)?;
            let label = args.label.get(n).cloned().unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("series {n}"))
            });
            Series::new(label, grid.wavelengths().collect(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = vec![(args.out.clone(), plot::render_svg(&series, &args.title)?)];
    if let Some(csv) = &args.csv {
        outputs.push((csv.clone(), plot::merged_csv(&series)?));
    }
    write_all(&outputs)?;
    for (path, _) in &outputs {
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => simulate(args, out),
        Command::Estimate(args) => estimate(args, out),
        Command::Benchmark(args) => run_benchmark(args, out),
        Command::Plot(args) => run_plot(args, out),
    }
}

/// Parses `std::env::args`, runs the command and maps errors to exit code 1.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
