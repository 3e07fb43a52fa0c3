use num_complex::Complex64;
use rustfft::FftDirection;

use super::fft::fft3;
use super::{GridSpec, ScalarField, VectorField};
use crate::error::{Error, Result};

/// Fourier coefficients of a scalar field, stored in FFT slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub(crate) fn forward(field: &ScalarField) -> Self {
        let mut coeffs: Vec<Complex64> = field
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft3(&mut coeffs, field.grid().n(), FftDirection::Forward);
        Self {
            grid: *field.grid(),
            coeffs,
        }
    }

    /// Checked forward transform; rejects non-finite input.
    pub fn try_forward(field: &ScalarField) -> Result<Self> {
        field.check_finite()?;
        Ok(Self::forward(field))
    }

    /// Inverse transform (includes the `1/n^3` factor); keeps the real part.
    pub fn to_physical(&self) -> ScalarField {
        let mut data = self.coeffs.clone();
        fft3(&mut data, self.grid.n(), FftDirection::Inverse);
        let scale = 1.0 / self.grid.len() as f64;
        ScalarField::from_vec_unchecked(self.grid, data.iter().map(|c| c.re * scale).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at integer mode `(mx, my, mz)`, each in `[-n/2, n/2)`.
    pub fn at_mode(&self, m: [i64; 3]) -> Complex64 {
        self.coeffs[self.slot(m)]
    }

    pub fn set_mode(&mut self, m: [i64; 3], value: Complex64) {
        let s = self.slot(m);
        self.coeffs[s] = value;
    }

    fn slot(&self, m: [i64; 3]) -> usize {
        let n = self.grid.n() as i64;
        let w = |v: i64| v.rem_euclid(n) as usize;
        self.grid.index(w(m[0]), w(m[1]), w(m[2]))
    }

    /// `(1/n^3) Σ |f̂|²`, which equals `Σ |f|²` over grid points.
    pub fn parseval_sum(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        s / self.grid.len() as f64
    }

    /// Largest `|f̂(k) - conj f̂(-k)|`, zero for transforms of real fields.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let neg = |i: usize| (n - i) % n;
        let mut worst = 0.0f64;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let a = self.coeffs[self.grid.index(i, j, k)];
                    let b = self.coeffs[self.grid.index(neg(i), neg(j), neg(k))];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }
}

/// Fourier coefficients of a vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    grid: GridSpec,
    components: [Vec<Complex64>; 3],
}

impl SpectralVector {
    pub fn new(grid: GridSpec, components: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::InvalidGrid(format!(
                    "expected {} coefficients, got {}",
                    grid.len(),
                    c.len()
                )));
            }
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let z = vec![Complex64::default(); grid.len()];
        Self {
            grid,
            components: [z.clone(), z.clone(), z],
        }
    }

    pub(crate) fn forward(field: &VectorField) -> Self {
        let grid = *field.grid();
        let components = [0, 1, 2].map(|c| {
            let mut data: Vec<Complex64> = field
                .component(c)
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            fft3(&mut data, grid.n(), FftDirection::Forward);
            data
        });
        Self { grid, components }
    }

    pub fn try_forward(field: &VectorField) -> Result<Self> {
        field.check_finite()?;
        Ok(Self::forward(field))
    }

    pub fn to_physical(&self) -> VectorField {
        let n = self.grid.n();
        let scale = 1.0 / self.grid.len() as f64;
        let comps = [0, 1, 2].map(|c| {
            let mut data = self.components[c].clone();
            fft3(&mut data, n, FftDirection::Inverse);
            data.iter().map(|z| z.re * scale).collect::<Vec<f64>>()
        });
        VectorField::from_vec_unchecked(self.grid, comps)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.components[c]
    }

    pub fn scalar(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: self.components[c].clone(),
        }
    }

    #[inline]
    pub fn at(&self, slot: usize) -> [Complex64; 3] {
        [
            self.components[0][slot],
            self.components[1][slot],
            self.components[2][slot],
        ]
    }

    #[inline]
    pub fn set(&mut self, slot: usize, v: [Complex64; 3]) {
        for (c, val) in v.into_iter().enumerate() {
            self.components[c][slot] = val;
        }
    }

    pub fn parseval_sum(&self) -> f64 {
        let s: f64 = self
            .components
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum();
        s / self.grid.len() as f64
    }

    /// Applies `f(slot, value)` to each coefficient triple.
    pub fn map_slots(&self, f: impl Fn(usize, [Complex64; 3]) -> [Complex64; 3]) -> Self {
        let mut out = Self::zeros(self.grid);
        for slot in 0..self.grid.len() {
            out.set(slot, f(slot, self.at(slot)));
        }
        out
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralVector) {
        for c in 0..3 {
            for (y, xv) in self.components[c].iter_mut().zip(&x.components[c]) {
                *y += xv * a;
            }
        }
    }
}
