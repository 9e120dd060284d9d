//! Spectral dataset ingestion and the on-disk interchange formats.
//!
//! * Spectrum CSV: header `wavelength_nm,value`, one sample per line,
//!   strictly increasing and uniformly spaced wavelengths.
//! * Dataset manifest (JSON): `name`, `role`, `source`, `license`, `files`,
//!   optional `channel_labels`; file paths are relative to the manifest.
//! * Observations: CSV with header `i,j,k,value` plus a JSON sidecar next to
//!   it (same stem, `.json`) recording extents, grid and noise settings.
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! write → parse reproduces them bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::NoiseModel;
use crate::spectral::{Observations, Role, Spectrum, SpectrumSet, WavelengthGrid};

pub const SPECTRUM_HEADER: &str = "wavelength_nm,value";
pub const OBSERVATIONS_HEADER: &str = "i,j,k,value";
/// Environment variable overriding the bundled dataset directory.
pub const DATA_DIR_ENV: &str = "SPECTRA_DATA_DIR";

const SPACING_TOLERANCE: f64 = 1e-6;

/// `$SPECTRA_DATA_DIR`, or the datasets bundled with this crate.
pub fn data_root() -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => bundled_data_root(),
    }
}

pub fn bundled_data_root() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub role: Role,
    pub source: String,
    pub license: String,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_labels: Option<Vec<String>>,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let manifest: Self =
            serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))?;
        if manifest.files.is_empty() {
            return Err(Error::Manifest(format!(
                "{}: file list is empty",
                path.display()
            )));
        }
        if let Some(labels) = &manifest.channel_labels {
            if labels.len() != manifest.files.len() {
                return Err(Error::Manifest(format!(
                    "{}: {} channel labels for {} files",
                    path.display(),
                    labels.len(),
                    manifest.files.len()
                )));
            }
        }
        Ok(manifest)
    }
}

/// Parses spectrum CSV text into its native grid and values without
/// applying role bounds.
pub fn parse_curve(text: &str) -> Result<(WavelengthGrid, Vec<f64>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r').trim() == SPECTRUM_HEADER => {}
        Some((_, header)) => {
            return Err(Error::MalformedRow {
                line: 1,
                message: format!("expected header '{SPECTRUM_HEADER}', found '{header}'"),
            })
        }
        None => {
            return Err(Error::MalformedRow {
                line: 1,
                message: "file is empty".into(),
            })
        }
    }

    let mut wavelengths = Vec::new();
    let mut values = Vec::new();
    let mut line_numbers = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(w), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::MalformedRow {
                line: line_no,
                message: format!("expected two fields, found '{line}'"),
            });
        };
        let parse = |field: &str, what: &str| -> Result<f64> {
            field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    line: line_no,
                    message: format!("invalid {what} '{field}'"),
                })
        };
        wavelengths.push(parse(w, "wavelength")?);
        values.push(parse(v, "value")?);
        line_numbers.push(line_no);
    }

    if wavelengths.len() < 2 {
        return Err(Error::MalformedRow {
            line: line_numbers.last().copied().unwrap_or(1),
            message: "need at least two samples".into(),
        });
    }
    for n in 1..wavelengths.len() {
        if wavelengths[n] <= wavelengths[n - 1] {
            return Err(Error::NonIncreasing {
                line: line_numbers[n],
            });
        }
    }
    let count = wavelengths.len();
    let start = wavelengths[0];
    let step = (wavelengths[count - 1] - start) / (count - 1) as f64;
    for (n, &w) in wavelengths.iter().enumerate() {
        if (w - (start + n as f64 * step)).abs() > SPACING_TOLERANCE * step {
            return Err(Error::NonUniformGrid {
                line: line_numbers[n],
            });
        }
    }
    Ok((WavelengthGrid::new(start, step, count)?, values))
}

pub fn parse_spectrum_str(text: &str, role: Role) -> Result<Spectrum> {
    let (grid, values) = parse_curve(text)?;
    Spectrum::new(grid, values, role)
}

/// Reads a spectrum on its native grid. Role bounds are enforced.
pub fn parse_spectrum_csv(path: &Path, role: Role) -> Result<Spectrum> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_spectrum_str(&text, role).map_err(|e| e.in_file(path))
}

/// Reads any spectrum CSV, including estimates that may be negative.
pub fn read_curve_csv(path: &Path) -> Result<(WavelengthGrid, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_curve(&text).map_err(|e| e.in_file(path))
}

pub fn format_spectrum_csv(grid: &WavelengthGrid, values: &[f64]) -> String {
    let mut out = String::with_capacity(24 * values.len() + SPECTRUM_HEADER.len() + 1);
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for (w, v) in grid.wavelengths().zip(values) {
        let _ = writeln!(out, "{w},{v}");
    }
    out
}

pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> Result<()> {
    fs::write(
        path,
        format_spectrum_csv(spectrum.grid(), spectrum.values()),
    )
    .map_err(|e| Error::from(e).in_file(path))
}

/// Linear interpolation onto `grid`. Equal grids return an exact copy.
pub fn resample_to_grid(s: &Spectrum, grid: &WavelengthGrid) -> Result<Spectrum> {
    if s.grid() == grid {
        return Ok(s.clone());
    }
    let src = s.grid();
    let slack = 1e-9 * src.step_nm();
    let (min, max) = (src.start_nm(), src.end_nm());
    let values = grid
        .wavelengths()
        .map(|w| {
            if w < min - slack || w > max + slack {
                return Err(Error::ExtrapolationRequired {
                    wavelength: w,
                    min,
                    max,
                });
            }
            let pos = ((w - min) / src.step_nm()).clamp(0.0, (src.count() - 1) as f64);
            let lo = (pos.floor() as usize).min(src.count() - 2);
            let frac = pos - lo as f64;
            let (a, b) = (s.values()[lo], s.values()[lo + 1]);
            Ok((a + frac * (b - a)).clamp(a.min(b), a.max(b)))
        })
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(*grid, values, s.role())
}

/// Loads every file of a manifest, resampled to `grid`, in manifest order.
/// Failures are collected across all files before returning.
pub fn load_dataset(manifest_path: &Path, grid: &WavelengthGrid) -> Result<SpectrumSet> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut members = Vec::with_capacity(manifest.files.len());
    let mut failures = Vec::new();
    for file in &manifest.files {
        let path = base.join(file);
        match parse_spectrum_csv(&path, manifest.role).and_then(|s| resample_to_grid(&s, grid)) {
            Ok(s) => members.push(s),
            Err(Error::File { source, .. }) => failures.push((path, *source)),
            Err(e) => failures.push((path, e)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Dataset {
            name: manifest.name,
            failures,
        });
    }
    let labels = manifest.channel_labels.clone().unwrap_or_else(|| {
        manifest
            .files
            .iter()
            .map(|f| {
                Path::new(f)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| f.clone())
            })
            .collect()
    });
    SpectrumSet::with_labels(*grid, manifest.role, members, labels)
}

#[derive(Debug, Clone, Deserialize)]
struct CameraIndex {
    #[allow(dead_code)]
    name: String,
    cameras: Vec<String>,
}

/// Loads a camera database index: `{"name": ..., "cameras": [manifest, ...]}`.
pub fn load_camera_database(index_path: &Path, grid: &WavelengthGrid) -> Result<Vec<SpectrumSet>> {
    let text = fs::read_to_string(index_path).map_err(|e| Error::from(e).in_file(index_path))?;
    let index: CameraIndex =
        serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(index_path))?;
    if index.cameras.is_empty() {
        return Err(Error::Manifest(format!(
            "{}: camera list is empty",
            index_path.display()
        )));
    }
    let base = index_path.parent().unwrap_or_else(|| Path::new("."));
    index
        .cameras
        .iter()
        .map(|m| load_dataset(&base.join(m), grid))
        .collect()
}

/// JSON sidecar describing an observations CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationsSidecar {
    pub extents: [usize; 3],
    pub grid: WavelengthGrid,
    pub noise: NoiseModel,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn format_observations_csv(obs: &Observations) -> String {
    let mut out = String::with_capacity(32 * obs.values().len());
    out.push_str(OBSERVATIONS_HEADER);
    out.push('\n');
    for ([i, j, k], v) in obs.indexed() {
        let _ = writeln!(out, "{i},{j},{k},{v}");
    }
    out
}

pub fn format_sidecar(sidecar: &ObservationsSidecar) -> Result<String> {
    let mut text = serde_json::to_string_pretty(sidecar)?;
    text.push('\n');
    Ok(text)
}

pub fn parse_observations(text: &str, extents: [usize; 3]) -> Result<Observations> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r').trim() == OBSERVATIONS_HEADER => {}
        _ => {
            return Err(Error::MalformedRow {
                line: 1,
                message: format!("expected header '{OBSERVATIONS_HEADER}'"),
            })
        }
    }
    let total: usize = extents.iter().product();
    let mut values = vec![f64::NAN; total];
    let mut seen = vec![false; total];
    let [_, jn, kn] = extents;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let malformed = |message: String| Error::MalformedRow {
            line: line_no,
            message,
        };
        if fields.len() != 4 {
            return Err(malformed(format!("expected four fields, found '{line}'")));
        }
        let index = |f: &str| {
            f.parse::<usize>()
                .map_err(|_| malformed(format!("invalid index '{f}'")))
        };
        let (i, j, k) = (index(fields[0])?, index(fields[1])?, index(fields[2])?);
        if i >= extents[0] || j >= jn || k >= kn {
            return Err(malformed(format!(
                "index ({i},{j},{k}) outside extents {extents:?}"
            )));
        }
        let v: f64 = fields[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| malformed(format!("invalid value '{}'", fields[3])))?;
        let flat = (i * jn + j) * kn + k;
        if seen[flat] {
            return Err(malformed(format!("duplicate entry ({i},{j},{k})")));
        }
        seen[flat] = true;
        values[flat] = v;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Manifest(format!(
            "observations missing entry {missing} of {total}"
        )));
    }
    Observations::new(extents, values)
}

pub fn write_observations(
    csv_path: &Path,
    obs: &Observations,
    grid: &WavelengthGrid,
    noise: &NoiseModel,
) -> Result<()> {
    let sidecar = ObservationsSidecar {
        extents: obs.extents(),
        grid: *grid,
        noise: *noise,
    };
    let side = sidecar_path(csv_path);
    let sidecar_text = format_sidecar(&sidecar)?;
    fs::write(csv_path, format_observations_csv(obs))
        .map_err(|e| Error::from(e).in_file(csv_path))?;
    if let Err(e) = fs::write(&side, sidecar_text) {
        let _ = fs::remove_file(csv_path);
        return Err(Error::from(e).in_file(side));
    }
    Ok(())
}

pub fn read_observations(csv_path: &Path) -> Result<(Observations, ObservationsSidecar)> {
    let side = sidecar_path(csv_path);
    let sidecar_text = fs::read_to_string(&side).map_err(|e| Error::from(e).in_file(&side))?;
    let sidecar: ObservationsSidecar =
        serde_json::from_str(&sidecar_text).map_err(|e| Error::from(e).in_file(&side))?;
    let text = fs::read_to_string(csv_path).map_err(|e| Error::from(e).in_file(csv_path))?;
    let obs = parse_observations(&text, sidecar.extents).map_err(|e| e.in_file(csv_path))?;
    Ok((obs, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_row_file() {
        let s = parse_spectrum_str(
            "wavelength_nm,value\n400,1.0\n410,0.5\n",
            Role::Illumination,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.grid().step_nm(), 10.0);
        assert_eq!(s.values(), &[1.0, 0.5]);
    }

    #[test]
    fn non_uniform_spacing() {
        let err = parse_curve("wavelength_nm,value\n400,1\n410,1\n425,1\n").unwrap_err();
        assert!(matches!(err, Error::NonUniformGrid { .. }), "{err}");
    }

    #[test]
    fn non_increasing_wavelengths() {
        let err = parse_curve("wavelength_nm,value\n400,1\n410,1\n410,1\n").unwrap_err();
        assert!(matches!(err, Error::NonIncreasing { line: 4 }), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_curve("wavelength_nm,value\n400,1\n410,abc\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err}");
        let err = parse_curve("wavelength_nm,value\n400,1,2\n410,1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }), "{err}");
        assert!(parse_curve("nm,value\n400,1\n410,1\n").is_err());
        assert!(parse_curve("").is_err());
    }

    #[test]
    fn role_bounds_enforced_on_parse() {
        let text = "wavelength_nm,value\n400,0.5\n410,1.5\n";
        assert!(matches!(
            parse_spectrum_str(text, Role::Reflectance),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(parse_spectrum_str(text, Role::Illumination).is_ok());
    }

    #[test]
    fn resample_equal_grid_is_identity() {
        let g = WavelengthGrid::new(400.0, 10.0, 3).unwrap();
        let s = Spectrum::new(g, vec![0.1, 0.123456789, 0.3], Role::Reflectance).unwrap();
        assert_eq!(resample_to_grid(&s, &g).unwrap(), s);
    }

    #[test]
    fn resample_midpoint() {
        let src = WavelengthGrid::new(400.0, 20.0, 2).unwrap();
        let s = Spectrum::new(src, vec![0.0, 1.0], Role::Reflectance).unwrap();
        // a one-point grid is not representable; sample 410 and 420
        let target = WavelengthGrid::new(410.0, 10.0, 2).unwrap();
        let r = resample_to_grid(&s, &target).unwrap();
        assert_eq!(r.values(), &[0.5, 1.0]);
    }

    #[test]
    fn resample_refuses_extrapolation() {
        let src = WavelengthGrid::new(400.0, 10.0, 3).unwrap();
        let s = Spectrum::new(src, vec![0.0, 1.0, 2.0], Role::Illumination).unwrap();
        let target = WavelengthGrid::new(390.0, 10.0, 3).unwrap();
        assert!(matches!(
            resample_to_grid(&s, &target),
            Err(Error::ExtrapolationRequired { .. })
        ));
    }

    #[test]
    fn ramp_survives_down_and_up_sampling() {
        let fine = WavelengthGrid::new(400.0, 5.0, 61).unwrap();
        let coarse = WavelengthGrid::new(400.0, 20.0, 16).unwrap();
        let ramp: Vec<f64> = fine
            .wavelengths()
            .map(|w| 0.5 + 0.01 * (w - 400.0))
            .collect();
        let s = Spectrum::new(fine, ramp.clone(), Role::Illumination).unwrap();
        let back = resample_to_grid(&resample_to_grid(&s, &coarse).unwrap(), &fine).unwrap();
        for (a, b) in back.values().iter().zip(&ramp) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn observations_round_trip_text() {
        let obs = Observations::new([1, 2, 2], vec![0.1, 1.0 / 3.0, -2e-20, 7.0]).unwrap();
        let text = format_observations_csv(&obs);
        assert!(text.starts_with("i,j,k,value\n0,0,0,0.1\n"));
        assert_eq!(parse_observations(&text, [1, 2, 2]).unwrap(), obs);
        assert!(parse_observations(&text, [1, 2, 3]).is_err());
    }

    #[test]
    fn noise_sidecar_round_trip() {
        let side = ObservationsSidecar {
            extents: [1, 24, 3],
            grid: WavelengthGrid::default(),
            noise: NoiseModel::gaussian(0.01, 7).unwrap(),
        };
        let text = format_sidecar(&side).unwrap();
        assert!(text.contains("additive_gaussian"));
        let back: ObservationsSidecar = serde_json::from_str(&text).unwrap();
        assert_eq!(back, side);
    }

    proptest::proptest! {
        #[test]
        fn spectrum_text_round_trip(
            values in proptest::collection::vec(0.0f64..1e3, 2..40),
            start in 300.0f64..500.0,
            step in 0.5f64..20.0,
        ) {
            let g = WavelengthGrid::new(start, step, values.len()).unwrap();
            let text = format_spectrum_csv(&g, &values);
            let (g2, v2) = parse_curve(&text).unwrap();
            proptest::prop_assert_eq!(v2, values);
            proptest::prop_assert_eq!(g2.count(), g.count());
            proptest::prop_assert!((g2.start_nm() - g.start_nm()).abs() <= 1e-9 * g.start_nm());
            proptest::prop_assert!((g2.step_nm() - g.step_nm()).abs() <= 1e-9 * g.step_nm());
        }

        #[test]
        fn resampling_is_exact_on_affine_functions(
            offset in 0.0f64..2.0,
            slope in -0.002f64..0.002,
            step in 1.0f64..30.0,
        ) {
            let src = WavelengthGrid::new(380.0, 5.0, 81).unwrap();
            let f = |w: f64| offset + slope * (w - 380.0) + 1.0;
            let s = Spectrum::new(src, src.wavelengths().map(f).collect(), Role::Illumination).unwrap();
            let count = (300.0 / step) as usize + 1;
            let target = WavelengthGrid::new(400.0, step, count.max(2)).unwrap();
            let r = resample_to_grid(&s, &target).unwrap();
            for (w, v) in target.wavelengths().zip(r.values()) {
                proptest::prop_assert!((v - f(w)).abs() < 1e-12);
            }
        }
    }
}
