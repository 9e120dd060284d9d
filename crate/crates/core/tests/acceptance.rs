//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use specbayes::benchmark::{
    run_benchmark, BenchMethod, BenchTarget, BenchmarkConfig, BenchmarkTable, Scene,
};
use specbayes::dataio::{self, bundled_data_root, DatasetManifest};
use specbayes::estimators::{
    bayes_posterior, bayes_posterior_from_design, least_squares_estimate, least_squares_solution,
    sequential_update, DEFAULT_NOISE_PRECISION,
};
use specbayes::metrics::normalized_rmse;
use specbayes::oracle::{minimize_neg_log_posterior, problem_least_squares};
use specbayes::priors::{daylight_prior, flat_prior, PrecisionSpec, PriorLibrary};
use specbayes::{bayes_estimate, EstimationProblem, NoiseModel, Role, WavelengthGrid};

use common::{min_eigenvalue, random_instance, rng, select_observations};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, outcome: Outcome) -> Outcome {
    let timing = format!(
        "{:.3} s (limit {} s)",
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    match outcome {
        Ok(d) if elapsed < limit => Ok(format!("{d}; {timing}")),
        Ok(d) => Err(format!("{d}; too slow: {timing}")),
        Err(d) => Err(format!("{d}; {timing}")),
    }
}

fn grid() -> WavelengthGrid {
    WavelengthGrid::VISIBLE_10NM
}

fn scene() -> Scene {
    Scene::standard(&bundled_data_root(), &grid()).expect("bundled scene")
}

fn library() -> PriorLibrary {
    PriorLibrary::load(&bundled_data_root(), &grid(), Some(2)).expect("prior library")
}

const ILLUMINATION: BenchTarget = BenchTarget {
    role: Role::Illumination,
    index: 0,
};

fn channel(k: usize) -> BenchTarget {
    BenchTarget {
        role: Role::Sensitivity,
        index: k,
    }
}

fn noisy_tables(seeds: usize) -> Vec<BenchmarkTable> {
    let config = BenchmarkConfig {
        seeds,
        sigmas: vec![0.0, 0.01],
        ..BenchmarkConfig::default()
    };
    run_benchmark(&scene(), &library(), &config).expect("benchmark")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let scene = scene();
    let obs = scene
        .render(&NoiseModel::none())
        .map_err(|e| e.to_string())?;
    let problem = scene
        .problem(Role::Illumination, 0, obs, DEFAULT_NOISE_PRECISION)
        .map_err(|e| e.to_string())?;
    let estimate = least_squares_estimate(&problem).map_err(|e| e.to_string())?;
    let truth = scene
        .truth(Role::Illumination, 0)
        .map_err(|e| e.to_string())?;
    let rmse = normalized_rmse(estimate.raw(), truth.values()).map_err(|e| e.to_string())?;
    within(
        start.elapsed(),
        Duration::from_secs(1),
        check(
            rmse <= 1e-6,
            format!("noiseless LSQ illumination RMSE {rmse:.3e} (<= 1e-6)"),
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let tables = noisy_tables(20);
    let noisy = &tables[1];
    let bayes = noisy
        .cell(ILLUMINATION, BenchMethod::Proposed)
        .ok_or("missing bayes cell")?;
    let lsq = noisy
        .cell(ILLUMINATION, BenchMethod::LeastSquares)
        .ok_or("missing lsq cell")?;
    let ratio = lsq.mean / bayes.mean;
    within(
        start.elapsed(),
        Duration::from_secs(30),
        check(
            bayes.samples >= 20 && bayes.mean <= 0.05 && ratio >= 5.0,
            format!(
                "sigma 0.01 over {} seeds: Bayes {:.4}, LSQ {:.4}, ratio {ratio:.1} (Bayes <= 0.05, ratio >= 5)",
                bayes.samples, bayes.mean, lsq.mean
            ),
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let tables = noisy_tables(20);
    let noisy = &tables[1];
    let mut values = Vec::new();
    for k in 0..3 {
        let c = noisy
            .cell(channel(k), BenchMethod::Proposed)
            .ok_or("missing bayes cell")?;
        values.push(c.mean);
    }
    within(
        start.elapsed(),
        Duration::from_secs(30),
        check(
            values.iter().all(|&v| v <= 0.08),
            format!(
                "Bayes sensitivity RMSE R {:.4} G {:.4} B {:.4} (each <= 0.08)",
                values[0], values[1], values[2]
            ),
        ),
    )
}

fn criterion_4() -> Outcome {
    // The prior database must not contain the evaluated camera.
    let root = bundled_data_root();
    let nikon = dataio::load_dataset(&root.join("nikon5100/manifest.json"), &grid())
        .map_err(|e| e.to_string())?;
    let cameras = dataio::load_camera_database(&root.join("camera_db/index.json"), &grid())
        .map_err(|e| e.to_string())?;
    for camera in &cameras {
        if camera
            .members()
            .iter()
            .zip(nikon.members())
            .all(|(a, b)| a.values() == b.values())
        {
            return Err("camera database contains the evaluated camera".into());
        }
    }
    let index: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(root.join("camera_db/index.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    if index["cameras"]
        .to_string()
        .to_lowercase()
        .contains("nikon")
    {
        return Err("camera database lists the evaluated camera".into());
    }

    let tables = noisy_tables(20);
    let mut diffs = Vec::new();
    for k in 0..3 {
        let clean = tables[0]
            .cell(channel(k), BenchMethod::Jiang)
            .ok_or("missing jiang cell")?;
        let noisy = tables[1]
            .cell(channel(k), BenchMethod::Jiang)
            .ok_or("missing jiang cell")?;
        diffs.push((noisy.mean - clean.mean).abs());
    }
    let ill = tables[1].cell(ILLUMINATION, BenchMethod::Jiang);
    check(
        diffs.iter().all(|&d| d <= 0.01) && ill.is_none(),
        format!(
            "Jiang |noisy - noiseless| R {:.4} G {:.4} B {:.4} (each <= 0.01) over {} held-out cameras",
            diffs[0],
            diffs[1],
            diffs[2],
            cameras.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst_bayes = 0.0f64;
    let mut worst_lsq = 0.0f64;
    let mut count = 0;
    let mut r = rng(5);
    for role in Role::ALL {
        for t in 0..100 {
            let n = [4, 8, 16, 31][t % 4];
            let inst = random_instance(&mut r, role, n);
            let posterior =
                bayes_posterior(&inst.problem, &inst.prior).map_err(|e| e.to_string())?;
            let oracle = minimize_neg_log_posterior(&inst.problem, &inst.prior)
                .map_err(|e| e.to_string())?;
            for (a, b) in posterior.mean().iter().zip(&oracle) {
                worst_bayes = worst_bayes.max((a - b).abs());
            }
            let lsq = least_squares_solution(&inst.problem).map_err(|e| e.to_string())?;
            let dense = problem_least_squares(&inst.problem).map_err(|e| e.to_string())?;
            for (a, b) in lsq.iter().zip(&dense) {
                worst_lsq = worst_lsq.max((a - b).abs());
            }
            count += 1;
        }
    }
    check(
        worst_bayes <= 1e-6 && worst_lsq <= 1e-8,
        format!(
            "{count} instances: max |Bayes - descent| {worst_bayes:.2e} (<= 1e-6), max |LSQ - Jacobi SVD| {worst_lsq:.2e} (<= 1e-8)"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut worst_seq = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    let mut empty_exact = true;
    let mut count = 0;
    for role in Role::ALL {
        for t in 0..50 {
            let n = [4, 8, 16, 31][t % 4];
            let inst = random_instance(&mut r, role, n);
            let batch = bayes_posterior(&inst.problem, &inst.prior).map_err(|e| e.to_string())?;

            // Split the first known family into random disjoint groups.
            let [a, b] = role.others();
            let set_a = &inst.sets[a.axis()];
            let mut order: Vec<usize> = (0..set_a.len()).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, r.random_range(0..=i));
            }
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for idx in order {
                if groups.is_empty() || r.random_bool(0.5) {
                    groups.push(vec![idx]);
                } else {
                    groups.last_mut().unwrap().push(idx);
                }
            }
            let problems = groups
                .iter()
                .map(|keep| {
                    EstimationProblem::new(
                        role,
                        inst.problem.target_index(),
                        set_a.select(keep).unwrap(),
                        inst.sets[b.axis()].clone(),
                        select_observations(&inst.observations, a, keep),
                        inst.problem.noise_precision(),
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let seq = sequential_update(&inst.prior, &problems).map_err(|e| e.to_string())?;
            let scale = batch.precision().amax().max(1.0);
            for (x, y) in batch.mean().iter().zip(seq.mean().iter()) {
                worst_seq = worst_seq.max((x - y).abs());
            }
            for (x, y) in batch.precision().iter().zip(seq.precision().iter()) {
                worst_seq = worst_seq.max((x - y).abs() / scale);
            }

            let gain = batch.precision() - inst.prior.precision();
            worst_eig = worst_eig.min(min_eigenvalue(&gain) / scale);

            let empty = bayes_posterior_from_design(
                &inst.prior,
                &nalgebra::DMatrix::zeros(0, n),
                &[],
                inst.problem.noise_precision(),
            )
            .map_err(|e| e.to_string())?;
            let fold = sequential_update(&inst.prior, &[]).map_err(|e| e.to_string())?;
            empty_exact &= empty == inst.prior && fold == inst.prior;
            count += 1;
        }
    }
    check(
        worst_seq <= 1e-8 && worst_eig >= -1e-12 && empty_exact,
        format!(
            "{count} instances: max |batch - sequential| {worst_seq:.2e} (<= 1e-8), min eig(gain)/scale {worst_eig:.2e} (>= -1e-12), empty data returns prior exactly: {empty_exact}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let scene = scene();
    let obs = scene
        .render(&NoiseModel::none())
        .map_err(|e| e.to_string())?;
    let problem = scene
        .problem(Role::Illumination, 0, obs, DEFAULT_NOISE_PRECISION)
        .map_err(|e| e.to_string())?;
    let design = problem.design().map_err(|e| e.to_string())?;
    let rank = design
        .matrix()
        .clone()
        .svd(false, false)
        .rank(1e-12 * design.matrix().norm());
    let prior = flat_prior(
        &grid(),
        PrecisionSpec::new(1e-8, 0.0).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let bayes = bayes_estimate(&problem, &prior).map_err(|e| e.to_string())?;
    let lsq = least_squares_solution(&problem).map_err(|e| e.to_string())?;
    let diff = (nalgebra::DVector::from_column_slice(bayes.raw()) - &lsq).norm();
    let relative = diff / lsq.norm();
    check(
        rank == grid().count() && relative <= 1e-4,
        format!("alpha 1e-8, rank {rank}/31: |Bayes - LSQ| / |LSQ| = {relative:.2e} (<= 1e-4)"),
    )
}

fn criterion_8() -> Outcome {
    let sigma = 0.01;
    let g = common::grid(4);
    let mut r = rng(8);
    let e = common::random_set(&mut r, &g, Role::Illumination, 100);
    let refl = common::random_set(&mut r, &g, Role::Reflectance, 100);
    let c = common::random_set(&mut r, &g, Role::Sensitivity, 10);
    let clean = specbayes::render_observations(&e, &refl, &c, &NoiseModel::none())
        .map_err(|e| e.to_string())?;
    let noisy =
        specbayes::render_observations(&e, &refl, &c, &NoiseModel::gaussian(sigma, 2024).unwrap())
            .map_err(|e| e.to_string())?;
    let diffs: Vec<f64> = noisy
        .values()
        .iter()
        .zip(clean.values())
        .map(|(a, b)| a - b)
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let std = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mean_bound = 3.0 * sigma / n.sqrt();
    let std_err = (std - sigma).abs() / sigma;
    check(
        diffs.len() >= 100_000 && mean.abs() <= mean_bound && std_err <= 0.02,
        format!(
            "{} draws: mean {mean:.2e} (|.| <= {mean_bound:.2e}), std {std:.5} ({:.2}% off, <= 2%)",
            diffs.len(),
            std_err * 100.0
        ),
    )
}

fn csv_files(dir: &Path, out: &mut Vec<PathBuf>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .flatten()
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            csv_files(&path, out);
        } else if path.extension().is_some_and(|e| e == "csv") {
            out.push(path);
        }
    }
}

fn criterion_9() -> Outcome {
    let mut files = Vec::new();
    csv_files(&bundled_data_root(), &mut files);
    for path in &files {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let (g1, v1) =
            dataio::parse_curve(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let (g2, v2) = dataio::parse_curve(&dataio::format_spectrum_csv(&g1, &v1))
            .map_err(|e| e.to_string())?;
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if g1 != g2 || bits(&v1) != bits(&v2) {
            return Err(format!("{} does not round-trip", path.display()));
        }
    }
    // every manifest in the data root must load
    let mut manifests = 0;
    for dir in std::fs::read_dir(bundled_data_root())
        .map_err(|e| e.to_string())?
        .flatten()
    {
        let manifest = dir.path().join("manifest.json");
        if manifest.exists() {
            DatasetManifest::read(&manifest).map_err(|e| e.to_string())?;
            manifests += 1;
        }
    }

    // file pipeline through the CLI against the in-memory pipeline
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let obs_path = tmp.path().join("obs.csv");
    let est_path = tmp.path().join("est.csv");
    let bin = env!("CARGO_BIN_EXE_specbayes");
    let root = bundled_data_root();
    let simulated = Command::new(bin)
        .args(["simulate", "--noise-sigma", "0.01", "--seed", "7", "--out"])
        .arg(&obs_path)
        .env(dataio::DATA_DIR_ENV, &root)
        .output()
        .map_err(|e| e.to_string())?;
    if !simulated.status.success() {
        return Err("simulate failed".into());
    }
    let output = Command::new(bin)
        .args([
            "estimate",
            "--target",
            "illumination",
            "--method",
            "bayes",
            "--prior-mean",
            "daylight",
        ])
        .arg("--observations")
        .arg(&obs_path)
        .arg("--ground-truth")
        .arg(root.join("d65/manifest.json"))
        .arg("--out")
        .arg(&est_path)
        .env(dataio::DATA_DIR_ENV, &root)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    let file_rmse: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("rmse: "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| format!("no RMSE in estimate output: {stdout}"))?;

    let scene = scene();
    let noise = NoiseModel::gaussian(0.01, 7).unwrap();
    let obs = scene.render(&noise).map_err(|e| e.to_string())?;
    let problem = scene
        .problem(Role::Illumination, 0, obs, noise.precision().unwrap())
        .map_err(|e| e.to_string())?;
    let prior = daylight_prior(
        &PriorLibrary::load(&root, &grid(), None).map_err(|e| e.to_string())?,
        PrecisionSpec::default(),
    )
    .map_err(|e| e.to_string())?;
    let estimate = bayes_estimate(&problem, &prior).map_err(|e| e.to_string())?;
    let memory_rmse = normalized_rmse(
        estimate.raw(),
        scene
            .truth(Role::Illumination, 0)
            .map_err(|e| e.to_string())?
            .values(),
    )
    .map_err(|e| e.to_string())?;
    let gap = (file_rmse - memory_rmse).abs();
    check(
        gap <= 1e-12 && !files.is_empty(),
        format!(
            "{} CSV files round-trip bit-identically, {manifests} manifests load; file vs in-memory RMSE {file_rmse:.6} vs {memory_rmse:.6} (gap {gap:.1e}, <= 1e-12)",
            files.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("noiseless least-squares illumination recovery", criterion_1),
        ("noise robustness gap", criterion_2),
        ("Bayesian sensitivity estimation under noise", criterion_3),
        (
            "basis-constrained baseline noise insensitivity",
            criterion_4,
        ),
        ("oracle equivalence", criterion_5),
        ("conjugacy properties", criterion_6),
        ("flat-prior limit", criterion_7),
        ("forward-model noise statistics", criterion_8),
        ("round-trip I/O", criterion_9),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
