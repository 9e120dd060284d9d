//! Domain types shared by every other module: wavelength grids, sampled
//! spectra, families of spectra, pixel observations and Gaussian beliefs.
//!
//! Everything here is an immutable value once constructed. Constructors
//! validate their invariants and never truncate or pad mismatched input.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on precision matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// A uniformly sampled wavelength axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    start_nm: f64,
    step_nm: f64,
    count: usize,
}

impl WavelengthGrid {
    /// 400 nm to 700 nm in 10 nm steps.
    pub const VISIBLE_10NM: WavelengthGrid = WavelengthGrid {
        start_nm: 400.0,
        step_nm: 10.0,
        count: 31,
    };

    pub fn new(start_nm: f64, step_nm: f64, count: usize) -> Result<Self> {
        if !start_nm.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "start {start_nm} is not finite"
            )));
        }
        if !(step_nm.is_finite() && step_nm > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "step {step_nm} must be positive"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!(
                "count {count} must be at least 2"
            )));
        }
        Ok(Self {
            start_nm,
            step_nm,
            count,
        })
    }

    pub fn start_nm(&self) -> f64 {
        self.start_nm
    }

    pub fn step_nm(&self) -> f64 {
        self.step_nm
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn end_nm(&self) -> f64 {
        self.wavelength(self.count - 1)
    }

    pub fn wavelength(&self, n: usize) -> f64 {
        self.start_nm + n as f64 * self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|n| self.wavelength(n))
    }

    fn ensure_same(&self, other: &WavelengthGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: *self,
                right: *other,
            })
        }
    }
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self::VISIBLE_10NM
    }
}

impl fmt::Display for WavelengthGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}..={} nm step {} (N={})",
            self.start_nm,
            self.end_nm(),
            self.step_nm,
            self.count
        )
    }
}

/// Which factor of the imaging pipeline a spectrum describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Illumination,
    Reflectance,
    Sensitivity,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Illumination, Role::Reflectance, Role::Sensitivity];

    /// Axis of the observation tensor indexed by this role (i, j, k).
    pub fn axis(self) -> usize {
        match self {
            Role::Illumination => 0,
            Role::Reflectance => 1,
            Role::Sensitivity => 2,
        }
    }

    /// The two roles other than `self`, in axis order.
    pub fn others(self) -> [Role; 2] {
        match self {
            Role::Illumination => [Role::Reflectance, Role::Sensitivity],
            Role::Reflectance => [Role::Illumination, Role::Sensitivity],
            Role::Sensitivity => [Role::Illumination, Role::Reflectance],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Illumination => "illumination",
            Role::Reflectance => "reflectance",
            Role::Sensitivity => "sensitivity",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "illumination" => Ok(Role::Illumination),
            "reflectance" => Ok(Role::Reflectance),
            "sensitivity" => Ok(Role::Sensitivity),
            other => Err(Error::InvalidArgument(format!("unknown role '{other}'"))),
        }
    }
}

/// One sampled spectral distribution.
///
/// Values are dimensionless. Spectra built with [`Spectrum::new`] are
/// non-negative, and reflectances additionally lie in `[0, 1]`. Estimated
/// spectra may legitimately dip below zero and are built with
/// [`Spectrum::unbounded`] instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
    role: Role,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>, role: Role) -> Result<Self> {
        let spectrum = Self::unbounded(grid, values, role)?;
        check_bounds(role, &spectrum.values)?;
        Ok(spectrum)
    }

    /// Only length and finiteness are checked.
    pub fn unbounded(grid: WavelengthGrid, values: Vec<f64>, role: Role) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::LengthMismatch {
                expected: grid.count(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values, role })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multiplies every sample by `factor`. Reflectance bounds are re-checked.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self::new(self.grid, values, self.role)
    }

    /// Divides by the peak value so the maximum becomes 1.
    pub fn peak_normalized(&self) -> Result<Self> {
        let peak = self.max_value();
        if peak <= 0.0 {
            return Err(Error::DegenerateMean);
        }
        Self::new(
            self.grid,
            self.values.iter().map(|v| v / peak).collect(),
            self.role,
        )
    }
}

fn check_bounds(role: Role, values: &[f64]) -> Result<()> {
    let upper = match role {
        Role::Reflectance => 1.0,
        _ => f64::INFINITY,
    };
    match values.iter().position(|&v| v < 0.0 || v > upper) {
        Some(index) => Err(Error::OutOfBounds {
            role,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// An ordered family of spectra sharing one role and one grid
/// (the illuminants, the checker patches or the camera channels).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSet {
    grid: WavelengthGrid,
    role: Role,
    members: Vec<Spectrum>,
    labels: Vec<String>,
}

impl SpectrumSet {
    pub fn new(grid: WavelengthGrid, role: Role, members: Vec<Spectrum>) -> Result<Self> {
        let labels = (0..members.len()).map(|n| n.to_string()).collect();
        Self::with_labels(grid, role, members, labels)
    }

    pub fn with_labels(
        grid: WavelengthGrid,
        role: Role,
        members: Vec<Spectrum>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{role} set must have at least one member"
            )));
        }
        if labels.len() != members.len() {
            return Err(Error::LengthMismatch {
                expected: members.len(),
                actual: labels.len(),
            });
        }
        for member in &members {
            grid.ensure_same(member.grid())?;
            if member.role() != role {
                return Err(Error::RoleConflict(format!(
                    "{} spectrum in a {role} set",
                    member.role()
                )));
            }
        }
        Ok(Self {
            grid,
            role,
            members,
            labels,
        })
    }

    /// Convenience constructor from raw rows.
    pub fn from_rows(grid: WavelengthGrid, role: Role, rows: Vec<Vec<f64>>) -> Result<Self> {
        let members = rows
            .into_iter()
            .map(|values| Spectrum::new(grid, values, role))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, role, members)
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn members(&self) -> &[Spectrum] {
        &self.members
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&Spectrum> {
        self.members.get(index).ok_or(Error::IndexOutOfRange {
            index,
            extent: self.members.len(),
        })
    }

    /// Subset of members, keeping labels.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut members = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &index in indices {
            members.push(self.get(index)?.clone());
            labels.push(self.labels[index].clone());
        }
        Self::with_labels(self.grid, self.role, members, labels)
    }

    /// Applies `f` to every member.
    pub fn map_members(&self, f: impl Fn(&Spectrum) -> Result<Spectrum>) -> Result<Self> {
        let members = self.members.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::with_labels(self.grid, self.role, members, self.labels.clone())
    }
}

/// Dense pixel-value tensor `x[i, j, k]` over (illumination, reflectance,
/// sensitivity) indices, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    extents: [usize; 3],
    values: Vec<f64>,
}

impl Observations {
    pub fn new(extents: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if extents.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "observation extents {extents:?} must be positive"
            )));
        }
        let expected = extents.iter().product();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { extents, values })
    }

    pub fn extents(&self) -> [usize; 3] {
        self.extents
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn flat_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [_, jn, kn] = self.extents;
        (i * jn + j) * kn + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.flat_index(i, j, k)]
    }

    /// Iterates `((i, j, k), value)` in row-major order.
    pub fn indexed(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        let [_, jn, kn] = self.extents;
        self.values.iter().enumerate().map(move |(flat, &v)| {
            let k = flat % kn;
            let j = (flat / kn) % jn;
            let i = flat / (jn * kn);
            ([i, j, k], v)
        })
    }

    /// Values with the axis of `role` fixed at `index`, remaining axes in
    /// row-major order. This is the flattened observation vector matching
    /// the rows of the design matrix for that target.
    pub fn slice(&self, role: Role, index: usize) -> Result<Vec<f64>> {
        let axis = role.axis();
        let extent = self.extents[axis];
        if index >= extent {
            return Err(Error::IndexOutOfRange { index, extent });
        }
        Ok(self
            .indexed()
            .filter(|(idx, _)| idx[axis] == index)
            .map(|(_, v)| v)
            .collect())
    }
}

/// Gaussian over a spectrum, parameterized by mean and precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
}

impl GaussianBelief {
    /// Fails when the precision is asymmetric or its Cholesky factorization fails.
    pub fn new(mean: DVector<f64>, precision: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if precision.nrows() != n || precision.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: precision.len(),
            });
        }
        if let Some(index) = mean.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(index) = precision.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let asymmetry = relative_asymmetry(&precision);
        if asymmetry > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asymmetry));
        }
        if precision.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { mean, precision })
    }

    pub fn from_slices(mean: &[f64], precision_row_major: &[f64]) -> Result<Self> {
        let n = mean.len();
        if precision_row_major.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: precision_row_major.len(),
            });
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(n, n, precision_row_major),
        )
    }

    /// Caller guarantees the precision already factorized.
    pub(crate) fn from_factorized(mean: DVector<f64>, precision: DMatrix<f64>) -> Self {
        Self { mean, precision }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in (r + 1)..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst / scale
}

/// Rows are the elementwise products of the two known spectra families,
/// mapping the unknown spectrum to predicted pixel values.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: DMatrix<f64>,
    row_index: Vec<(usize, usize)>,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// `(index_a, index_b)` for each row.
    pub fn row_index(&self) -> &[(usize, usize)] {
        &self.row_index
    }

    pub fn nrows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.rows.ncols()
    }

    pub fn from_matrix(rows: DMatrix<f64>) -> Self {
        let row_index = (0..rows.nrows()).map(|r| (r, 0)).collect();
        Self { rows, row_index }
    }
}

pub fn elementwise_product(a: &Spectrum, b: &Spectrum) -> Result<Vec<f64>> {
    a.grid().ensure_same(b.grid())?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .collect())
}

/// Rows are ordered lexicographically by `(index_a, index_b)`.
pub fn build_design_matrix(set_a: &SpectrumSet, set_b: &SpectrumSet) -> Result<DesignMatrix> {
    set_a.grid().ensure_same(set_b.grid())?;
    if set_a.role() == set_b.role() {
        return Err(Error::RoleConflict(format!(
            "both known families have role {}",
            set_a.role()
        )));
    }
    let n = set_a.grid().count();
    let nrows = set_a.len() * set_b.len();
    let mut rows = DMatrix::zeros(nrows, n);
    let mut row_index = Vec::with_capacity(nrows);
    for (ia, a) in set_a.members().iter().enumerate() {
        for (ib, b) in set_b.members().iter().enumerate() {
            let r = row_index.len();
            for (c, v) in elementwise_product(a, b)?.into_iter().enumerate() {
                rows[(r, c)] = v;
            }
            row_index.push((ia, ib));
        }
    }
    Ok(DesignMatrix { rows, row_index })
}
