//! Periodic-box fields, spectral transforms and the differential operators
//! that close the vorticity system.
//!
//! The box is `[0, L)^3` sampled on `n^3` points, flat index
//! `i + n*(j + n*k)` with `i` along x. Forward transforms are unnormalized;
//! the inverse carries the `1/n^3` factor, so a constant field `c` has a
//! single `k = 0` coefficient equal to `c * n^3`.

mod fft;
pub(crate) mod ops;
pub mod snapshot;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ops::{
    biot_savart, cross, curl, dealias_project, divergence, gradient, laplacian,
    spectral_divergence_norm, BiotSavart,
};
pub use spectral::{SpectralField, SpectralVector};

/// Grid resolution, box size and kinematic viscosity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    box_length: f64,
    viscosity: f64,
}

impl GridSpec {
    pub fn new(n: usize, box_length: f64, viscosity: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 8, got {n}"
            )));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        if !(viscosity > 0.0 && viscosity.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "viscosity must be positive, got {viscosity}"
            )));
        }
        Ok(Self {
            n,
            box_length,
            viscosity,
        })
    }

    /// `2π`-periodic box.
    pub fn periodic(n: usize, viscosity: f64) -> Result<Self> {
        Self::new(n, std::f64::consts::TAU, viscosity)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    pub fn with_viscosity(&self, viscosity: f64) -> Result<Self> {
        Self::new(self.n, self.box_length, viscosity)
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Number of grid points, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unflatten(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Signed integer mode for storage slot `i`, in `[-n/2, n/2)`.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Physical wavenumber `2π m / L` of slot `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.mode(i) as f64 * std::f64::consts::TAU / self.box_length
    }

    /// Wavenumber used for first derivatives: the Nyquist slot is zeroed so
    /// derivatives of real fields stay real.
    #[inline]
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if self.mode(i) == -(self.n as i64) / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// Minimum-image displacement `b - a` on the periodic box, per axis.
    pub fn periodic_delta(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let l = self.box_length;
        let mut d = [0.0; 3];
        for c in 0..3 {
            let mut v = b[c] - a[c];
            v -= l * (v / l).round();
            d[c] = v;
        }
        d
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

/// Real scalar samples on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "scalar field",
                index,
            });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Grid quadrature `Σ f Δx³`.
    pub fn integral(&self) -> f64 {
        crate::numeric::sum(&self.values) * self.grid.cell_volume()
    }

    pub fn l1_norm(&self) -> f64 {
        crate::numeric::sum_by(&self.values, |v| v.abs()) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (crate::numeric::sum_by(&self.values, |v| v * v) * self.grid.cell_volume()).sqrt()
    }

    pub fn mean(&self) -> f64 {
        crate::numeric::sum(&self.values) / self.values.len() as f64
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField::forward(self)
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite {
                what: "scalar field",
                index,
            }),
            None => Ok(()),
        }
    }
}

/// Three real components sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: [Vec<f64>; 3],
}

impl VectorField {
    pub fn new(grid: GridSpec, components: [Vec<f64>; 3]) -> Result<Self> {
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::InvalidGrid(format!(
                    "expected {} values per component, got {}",
                    grid.len(),
                    c.len()
                )));
            }
            if let Some(index) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "vector field",
                    index,
                });
            }
        }
        Ok(Self { grid, components })
    }

    pub fn from_scalars(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        x.grid.check_same(&y.grid)?;
        x.grid.check_same(&z.grid)?;
        Ok(Self {
            grid: x.grid,
            components: [x.values, y.values, z.values],
        })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, components: [Vec<f64>; 3]) -> Self {
        Self { grid, components }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid,
            components: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            for c in 0..3 {
                out.components[c][idx] = v[c];
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.components[c]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.components
    }

    pub fn scalar(&self, c: usize) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid, self.components[c].clone())
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.components[0][idx],
            self.components[1][idx],
            self.components[2][idx],
        ]
    }

    /// Pointwise Euclidean norm `|v(x)|`.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|idx| {
                let [a, b, c] = self.at(idx);
                (a * a + b * b + c * c).sqrt()
            })
            .collect();
        ScalarField::from_vec_unchecked(self.grid, values)
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).fold(0.0f64, |m, idx| {
            let [a, b, c] = self.at(idx);
            m.max((a * a + b * b + c * c).sqrt())
        })
    }

    /// `‖v‖₂` with the grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .components
            .iter()
            .map(|c| crate::numeric::sum_by(c, |v| v * v))
            .sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// `∫ |v|` with the grid quadrature.
    pub fn l1_norm(&self) -> f64 {
        self.magnitude().l1_norm()
    }

    pub fn scale(&self, a: f64) -> VectorField {
        let components = self
            .components
            .clone()
            .map(|c| c.into_iter().map(|v| v * a).collect());
        Self {
            grid: self.grid,
            components,
        }
    }

    pub fn dot(&self, other: &VectorField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let values = (0..self.grid.len())
            .map(|idx| {
                let a = self.at(idx);
                let b = other.at(idx);
                a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
            })
            .collect();
        Ok(ScalarField::from_vec_unchecked(self.grid, values))
    }

    pub fn to_spectral(&self) -> SpectralVector {
        SpectralVector::forward(self)
    }

    pub fn check_finite(&self) -> Result<()> {
        for c in &self.components {
            if let Some(index) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "vector field",
                    index,
                });
            }
        }
        Ok(())
    }

    /// Largest pointwise difference `max |a - b|` over all components.
    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        let mut m = 0.0f64;
        for c in 0..3 {
            for (a, b) in self.components[c].iter().zip(&other.components[c]) {
                m = m.max((a - b).abs());
            }
        }
        m
    }

    /// `‖a - b‖₂`.
    pub fn l2_distance(&self, other: &VectorField) -> f64 {
        let mut s = 0.0;
        for c in 0..3 {
            s += self.components[c]
                .iter()
                .zip(&other.components[c])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        (s * self.grid.cell_volume()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_n() {
        assert!(GridSpec::periodic(12, 0.1).is_err());
        assert!(GridSpec::periodic(4, 0.1).is_err());
        assert!(GridSpec::periodic(16, 0.0).is_err());
        assert!(GridSpec::new(16, -1.0, 0.1).is_err());
        assert!(GridSpec::periodic(16, 0.1).is_ok());
    }

    #[test]
    fn modes_cover_symmetric_range() {
        let g = GridSpec::periodic(8, 0.1).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.derivative_wavenumber(4), 0.0);
        assert_eq!(g.wavenumber(4), -4.0);
    }

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::periodic(16, 0.1).unwrap();
        for idx in [0, 1, 17, 300, g.len() - 1] {
            let (i, j, k) = g.unflatten(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let g = GridSpec::periodic(8, 0.1).unwrap();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        match ScalarField::new(g, v) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn periodic_delta_wraps() {
        let g = GridSpec::new(8, 1.0, 0.1).unwrap();
        let d = g.periodic_delta([0.05, 0.5, 0.0], [0.95, 0.5, 0.4]);
        assert!((d[0] + 0.1).abs() < 1e-15);
        assert_eq!(d[1], 0.0);
        assert!((d[2] - 0.4).abs() < 1e-15);
    }
}
