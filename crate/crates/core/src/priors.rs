//! Prior beliefs built from reference data: the mean daylight spectrum, the
//! per-channel mean of a camera-sensitivity database, and principal
//! components of that database for the basis-constrained baseline.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::dataio;
use crate::error::{Error, Result};
use crate::spectral::{GaussianBelief, Role, Spectrum, SpectrumSet, WavelengthGrid};

/// Prior standard deviation of 0.1 on unit-peak spectra.
pub const DEFAULT_ALPHA: f64 = 100.0;
pub const DEFAULT_GAMMA: f64 = 0.0;
/// Principal components kept for the basis-constrained baseline.
pub const DEFAULT_COMPONENTS: usize = 2;

const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// `Λ = α I + γ D₂ᵀ D₂` where `D₂` is the second-difference operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionSpec {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for PrecisionSpec {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
        }
    }
}

impl PrecisionSpec {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        let spec = Self { alpha, gamma };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        self.validate()?;
        let mut precision = DMatrix::identity(n, n) * self.alpha;
        if self.gamma > 0.0 && n >= 3 {
            let d2 = second_difference(n);
            precision += d2.tr_mul(&d2) * self.gamma;
        }
        Ok(precision)
    }
}

/// `(n-2) × n` matrix with rows `[1, -2, 1]`.
pub fn second_difference(n: usize) -> DMatrix<f64> {
    let rows = n.saturating_sub(2);
    let mut d = DMatrix::zeros(rows, n);
    for r in 0..rows {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    d
}

/// Zero-mean prior with the given precision structure.
pub fn flat_prior(grid: &WavelengthGrid, spec: PrecisionSpec) -> Result<GaussianBelief> {
    let n = grid.count();
    GaussianBelief::new(DVector::zeros(n), spec.matrix(n)?)
}

pub fn prior_with_mean(mean: &Spectrum, spec: PrecisionSpec) -> Result<GaussianBelief> {
    GaussianBelief::new(
        DVector::from_column_slice(mean.values()),
        spec.matrix(mean.len())?,
    )
}

/// Mean-centred principal directions of a spectrum collection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    mean: Vec<f64>,
    components: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl PcaBasis {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `N × B`, orthonormal columns ordered by decreasing variance.
    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn num_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn scores(&self, values: &[f64]) -> DVector<f64> {
        let centred = DVector::from_iterator(
            self.mean.len(),
            values.iter().zip(&self.mean).map(|(v, m)| v - m),
        );
        self.components.tr_mul(&centred)
    }

    /// Projection of `values` onto the affine span `mean + components · w`.
    pub fn reconstruct(&self, values: &[f64]) -> Vec<f64> {
        let fitted = &self.components * self.scores(values);
        fitted.iter().zip(&self.mean).map(|(f, m)| f + m).collect()
    }

    /// Keeps the first `b` components.
    pub fn truncated(&self, b: usize) -> Result<Self> {
        if b == 0 || b > self.num_components() {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {b} of {} components",
                self.num_components()
            )));
        }
        Ok(Self {
            mean: self.mean.clone(),
            components: self.components.columns(0, b).into_owned(),
            singular_values: self.singular_values[..b].to_vec(),
        })
    }
}

pub fn fit_pca_basis(spectra: &[Spectrum], num_components: usize) -> Result<PcaBasis> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::InvalidArgument("no spectra to fit".into()))?;
    let n = first.len();
    if num_components == 0 || num_components >= n {
        return Err(Error::InvalidArgument(format!(
            "component count {num_components} must be in 1..{n}"
        )));
    }
    if spectra.len() < num_components + 1 {
        return Err(Error::InvalidArgument(format!(
            "{num_components} components need at least {} spectra, got {}",
            num_components + 1,
            spectra.len()
        )));
    }
    for s in spectra {
        if s.grid() != first.grid() {
            return Err(Error::GridMismatch {
                left: *first.grid(),
                right: *s.grid(),
            });
        }
    }

    let count = spectra.len() as f64;
    let mut mean = vec![0.0; n];
    for s in spectra {
        for (m, v) in mean.iter_mut().zip(s.values()) {
            *m += v / count;
        }
    }
    let centred = DMatrix::from_fn(spectra.len(), n, |r, c| spectra[r].values()[c] - mean[c]);
    let scale = spectra
        .iter()
        .flat_map(|s| s.values())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    let svd = centred.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::DegenerateBasis("SVD did not produce directions".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut components = DMatrix::zeros(n, num_components);
    let mut singular_values = Vec::with_capacity(num_components);
    for (col, &idx) in order.iter().take(num_components).enumerate() {
        let sigma = svd.singular_values[idx];
        if sigma <= 1e-12 * scale * count.sqrt() {
            return Err(Error::DegenerateBasis(format!(
                "component {} has zero variance",
                col + 1
            )));
        }
        let mut direction = v_t.row(idx).transpose();
        // sign convention: largest-magnitude entry positive
        if direction[direction.iamax()] < 0.0 {
            direction.neg_mut();
        }
        components.set_column(col, &direction);
        singular_values.push(sigma);
    }
    Ok(PcaBasis {
        mean,
        components,
        singular_values,
    })
}

fn check_orthonormal(components: &DMatrix<f64>) -> Result<()> {
    let gram = components.tr_mul(components);
    let b = gram.nrows();
    let deviation = (gram - DMatrix::<f64>::identity(b, b)).amax();
    if deviation > ORTHONORMAL_TOLERANCE {
        return Err(Error::DegenerateBasis(format!(
            "columns are not orthonormal (max deviation {deviation:.3e})"
        )));
    }
    Ok(())
}

/// Reference spectra used to build priors, all on one working grid.
#[derive(Debug, Clone)]
pub struct PriorLibrary {
    grid: WavelengthGrid,
    daylight_mean: Spectrum,
    sensitivity_means: Vec<Spectrum>,
    sensitivity_bases: Option<Vec<PcaBasis>>,
}

impl PriorLibrary {
    pub fn new(
        daylight_mean: Spectrum,
        sensitivity_means: Vec<Spectrum>,
        sensitivity_bases: Option<Vec<PcaBasis>>,
    ) -> Result<Self> {
        let grid = *daylight_mean.grid();
        for s in &sensitivity_means {
            if *s.grid() != grid {
                return Err(Error::GridMismatch {
                    left: grid,
                    right: *s.grid(),
                });
            }
        }
        if let Some(bases) = &sensitivity_bases {
            if bases.len() != sensitivity_means.len() {
                return Err(Error::LengthMismatch {
                    expected: sensitivity_means.len(),
                    actual: bases.len(),
                });
            }
            for basis in bases {
                if basis.components().nrows() != grid.count() {
                    return Err(Error::LengthMismatch {
                        expected: grid.count(),
                        actual: basis.components().nrows(),
                    });
                }
                check_orthonormal(basis.components())?;
            }
        }
        Ok(Self {
            grid,
            daylight_mean,
            sensitivity_means,
            sensitivity_bases,
        })
    }

    /// Builds the library from a daylight mean and a camera database.
    /// Every spectrum is peak-normalized first; channel `k` of the result
    /// averages channel `k` of every camera. With `components`, a PCA basis
    /// is fit per channel as well.
    pub fn from_camera_database(
        daylight_mean: &Spectrum,
        cameras: &[SpectrumSet],
        components: Option<usize>,
    ) -> Result<Self> {
        let first = cameras
            .first()
            .ok_or_else(|| Error::InvalidArgument("camera database is empty".into()))?;
        let channels = first.len();
        let mut per_channel: Vec<Vec<Spectrum>> = vec![Vec::new(); channels];
        for camera in cameras {
            if camera.len() != channels {
                return Err(Error::InvalidArgument(format!(
                    "camera has {} channels, expected {channels}",
                    camera.len()
                )));
            }
            if camera.role() != Role::Sensitivity {
                return Err(Error::RoleConflict(format!(
                    "camera database member has role {}",
                    camera.role()
                )));
            }
            for (k, s) in camera.members().iter().enumerate() {
                per_channel[k].push(s.peak_normalized()?);
            }
        }
        let grid = *first.grid();
        let means = per_channel
            .iter()
            .map(|spectra| {
                let count = spectra.len() as f64;
                let mut mean = vec![0.0; grid.count()];
                for s in spectra {
                    for (m, v) in mean.iter_mut().zip(s.values()) {
                        *m += v / count;
                    }
                }
                Spectrum::new(grid, mean, Role::Sensitivity)
            })
            .collect::<Result<Vec<_>>>()?;
        let bases = components
            .map(|b| {
                per_channel
                    .iter()
                    .map(|spectra| fit_pca_basis(spectra, b))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        Self::new(daylight_mean.peak_normalized()?, means, bases)
    }

    /// Loads `daylight_mean/manifest.json` and `camera_db/index.json` from a
    /// data root.
    pub fn load(
        data_root: &Path,
        grid: &WavelengthGrid,
        components: Option<usize>,
    ) -> Result<Self> {
        let daylight = dataio::load_dataset(&data_root.join("daylight_mean/manifest.json"), grid)?;
        let cameras = dataio::load_camera_database(&data_root.join("camera_db/index.json"), grid)?;
        Self::from_camera_database(daylight.get(0)?, &cameras, components)
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn daylight_mean(&self) -> &Spectrum {
        &self.daylight_mean
    }

    pub fn sensitivity_means(&self) -> &[Spectrum] {
        &self.sensitivity_means
    }

    pub fn sensitivity_basis(&self, channel: usize) -> Result<&PcaBasis> {
        let bases = self.sensitivity_bases.as_ref().ok_or_else(|| {
            Error::InvalidArgument("library was built without a sensitivity basis".into())
        })?;
        bases.get(channel).ok_or(Error::IndexOutOfRange {
            index: channel,
            extent: bases.len(),
        })
    }
}

pub fn daylight_prior(lib: &PriorLibrary, spec: PrecisionSpec) -> Result<GaussianBelief> {
    prior_with_mean(lib.daylight_mean(), spec)
}

pub fn sensitivity_prior(
    lib: &PriorLibrary,
    channel: usize,
    spec: PrecisionSpec,
) -> Result<GaussianBelief> {
    let mean = lib
        .sensitivity_means()
        .get(channel)
        .ok_or(Error::IndexOutOfRange {
            index: channel,
            extent: lib.sensitivity_means().len(),
        })?;
    prior_with_mean(mean, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> WavelengthGrid {
        WavelengthGrid::new(400.0, 10.0, n).unwrap()
    }

    fn library(n: usize) -> PriorLibrary {
        let g = grid(n);
        let day = Spectrum::new(
            g,
            (0..n).map(|v| 1.0 + v as f64).collect(),
            Role::Illumination,
        )
        .unwrap();
        let sens = (0..3)
            .map(|k| Spectrum::new(g, vec![0.1 * (k + 1) as f64; n], Role::Sensitivity).unwrap())
            .collect();
        PriorLibrary::new(day, sens, None).unwrap()
    }

    #[test]
    fn isotropic_precision_is_scaled_identity() {
        let lib = library(5);
        let p = daylight_prior(&lib, PrecisionSpec::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(p.precision(), &DMatrix::identity(5, 5));
        assert_eq!(p.mean().as_slice(), lib.daylight_mean().values());
    }

    #[test]
    fn smoothness_term_has_zero_interior_row_sums() {
        let spec = PrecisionSpec::new(1.0, 3.0).unwrap();
        let m = spec.matrix(8).unwrap() - DMatrix::<f64>::identity(8, 8);
        for r in 2..6 {
            assert!(m.row(r).sum().abs() < 1e-12, "row {r}");
        }
        assert!(m.row(0).sum().abs() < 1e-12);
        assert!(GaussianBelief::new(DVector::zeros(8), spec.matrix(8).unwrap()).is_ok());
    }

    #[test]
    fn alpha_must_be_positive() {
        assert!(PrecisionSpec::new(0.0, 0.0).is_err());
        assert!(PrecisionSpec::new(1.0, -1.0).is_err());
        let lib = library(4);
        let bad = PrecisionSpec {
            alpha: -1.0,
            gamma: 0.0,
        };
        assert!(daylight_prior(&lib, bad).is_err());
    }

    #[test]
    fn sensitivity_prior_channel_and_alpha_scaling() {
        let lib = library(4);
        assert!(matches!(
            sensitivity_prior(&lib, 3, PrecisionSpec::default()),
            Err(Error::IndexOutOfRange { .. })
        ));
        let one = sensitivity_prior(&lib, 1, PrecisionSpec::new(2.0, 0.0).unwrap()).unwrap();
        let two = sensitivity_prior(&lib, 1, PrecisionSpec::new(4.0, 0.0).unwrap()).unwrap();
        assert_eq!(two.precision(), &(one.precision() * 2.0));
        assert_eq!(one.mean()[0], 0.2);
    }

    #[test]
    fn pca_rejects_degenerate_inputs() {
        let g = grid(4);
        let same = vec![Spectrum::new(g, vec![0.5; 4], Role::Sensitivity).unwrap(); 5];
        assert!(matches!(
            fit_pca_basis(&same, 1),
            Err(Error::DegenerateBasis(_))
        ));
        assert!(fit_pca_basis(&same[..1], 1).is_err());
        assert!(fit_pca_basis(&same, 4).is_err());
        assert!(fit_pca_basis(&same, 0).is_err());
    }

    #[test]
    fn pca_two_points_gives_difference_direction() {
        let g = grid(3);
        let a = Spectrum::new(g, vec![1.0, 0.0, 0.0], Role::Sensitivity).unwrap();
        let b = Spectrum::new(g, vec![0.0, 1.0, 0.0], Role::Sensitivity).unwrap();
        let basis = fit_pca_basis(&[a, b], 1).unwrap();
        let d = basis.components().column(0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d[0].abs() - h).abs() < 1e-12);
        assert!((d[1].abs() - h).abs() < 1e-12);
        assert!(d[2].abs() < 1e-12);
        assert!(d[0] * d[1] < 0.0);
        assert_eq!(basis.mean(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn pca_is_orthonormal_and_reconstruction_improves_with_components() {
        let g = grid(12);
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let spectra: Vec<_> = (0..28)
            .map(|_| {
                let values = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
                Spectrum::new(g, values, Role::Sensitivity).unwrap()
            })
            .collect();
        let full = fit_pca_basis(&spectra, 11).unwrap();
        check_orthonormal(full.components()).unwrap();
        let sv = full.singular_values();
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));

        let mut previous = f64::INFINITY;
        for b in 1..=11 {
            let basis = full.truncated(b).unwrap();
            let err: f64 = spectra
                .iter()
                .map(|s| {
                    basis
                        .reconstruct(s.values())
                        .iter()
                        .zip(s.values())
                        .map(|(r, v)| (r - v).powi(2))
                        .sum::<f64>()
                })
                .sum();
            assert!(err <= previous + 1e-12, "B={b}: {err} > {previous}");
            previous = err;
        }
    }

    #[test]
    fn library_rejects_non_orthonormal_basis() {
        let g = grid(3);
        let day = Spectrum::new(g, vec![1.0; 3], Role::Illumination).unwrap();
        let sens = vec![Spectrum::new(g, vec![1.0; 3], Role::Sensitivity).unwrap()];
        let basis = PcaBasis {
            mean: vec![0.0; 3],
            components: DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]),
            singular_values: vec![1.0],
        };
        assert!(PriorLibrary::new(day, sens, Some(vec![basis])).is_err());
    }
}
