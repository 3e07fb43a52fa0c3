//! Spectral differential operators.

use num_complex::Complex64;

use super::{GridSpec, ScalarField, SpectralField, SpectralVector, VectorField};
use crate::error::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative spectral divergence above which [`biot_savart`] flags its input.
pub const DIVERGENCE_WARNING: f64 = 1e-8;

#[inline]
pub(crate) fn derivative_k(grid: &GridSpec, slot: usize) -> [f64; 3] {
    let (i, j, k) = grid.unflatten(slot);
    [
        grid.derivative_wavenumber(i),
        grid.derivative_wavenumber(j),
        grid.derivative_wavenumber(k),
    ]
}

#[inline]
pub(crate) fn full_k2(grid: &GridSpec, slot: usize) -> f64 {
    let (i, j, k) = grid.unflatten(slot);
    let (a, b, c) = (
        grid.wavenumber(i),
        grid.wavenumber(j),
        grid.wavenumber(k),
    );
    a * a + b * b + c * c
}

#[inline]
fn cross_c(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn ik(k: [f64; 3]) -> [Complex64; 3] {
    k.map(|v| I * v)
}

/// `i k × v̂`.
pub(crate) fn curl_hat(v: &SpectralVector) -> SpectralVector {
    let grid = *v.grid();
    v.map_slots(|slot, c| cross_c(ik(derivative_k(&grid, slot)), c))
}

/// `û = i k × ω̂ / |k|²` with `û(0) = 0`.
pub(crate) fn biot_savart_hat(w: &SpectralVector) -> SpectralVector {
    let grid = *w.grid();
    w.map_slots(|slot, c| {
        let k = derivative_k(&grid, slot);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return [Complex64::default(); 3];
        }
        cross_c(ik(k), c).map(|z| z / k2)
    })
}

/// `i k · v̂`.
pub(crate) fn divergence_hat(v: &SpectralVector) -> SpectralField {
    let grid = *v.grid();
    let mut out = SpectralField::zeros(grid);
    let coeffs = out.coeffs_mut();
    for (slot, out) in coeffs.iter_mut().enumerate() {
        let k = derivative_k(&grid, slot);
        let c = v.at(slot);
        *out = I * (c[0] * k[0] + c[1] * k[1] + c[2] * k[2]);
    }
    out
}

pub(crate) fn gradient_hat(f: &SpectralField) -> SpectralVector {
    let grid = *f.grid();
    let mut out = SpectralVector::zeros(grid);
    for slot in 0..grid.len() {
        let k = derivative_k(&grid, slot);
        let c = f.coeffs()[slot];
        out.set(slot, k.map(|kc| I * kc * c));
    }
    out
}

/// 2/3-rule mask: true when every `|m_i| <= n/3`.
#[inline]
pub(crate) fn inside_dealias(grid: &GridSpec, slot: usize) -> bool {
    let (i, j, k) = grid.unflatten(slot);
    let cut = grid.n() as i64 / 3;
    [i, j, k].into_iter().all(|s| grid.mode(s).abs() <= cut)
}

pub(crate) fn dealias_in_place(v: &mut SpectralVector) {
    let grid = *v.grid();
    for slot in 0..grid.len() {
        if !inside_dealias(&grid, slot) {
            v.set(slot, [Complex64::default(); 3]);
        }
    }
}

/// Curl via spectral differentiation. Its spectral divergence is zero by
/// construction.
pub fn curl(v: &VectorField) -> Result<VectorField> {
    let hat = SpectralVector::try_forward(v)?;
    Ok(curl_hat(&hat).to_physical())
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    let hat = SpectralField::try_forward(f)?;
    Ok(gradient_hat(&hat).to_physical())
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let hat = SpectralVector::try_forward(v)?;
    Ok(divergence_hat(&hat).to_physical())
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    let mut hat = SpectralField::try_forward(f)?;
    let grid = *f.grid();
    for (slot, c) in hat.coeffs_mut().iter_mut().enumerate() {
        let k = derivative_k(&grid, slot);
        *c *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    }
    Ok(hat.to_physical())
}

/// Pointwise `a × b`.
pub fn cross(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    a.grid().check_same(b.grid())?;
    let grid = *a.grid();
    let mut out = VectorField::zeros(grid);
    for idx in 0..grid.len() {
        let x = a.at(idx);
        let y = b.at(idx);
        let z = [
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ];
        for c in 0..3 {
            out.component_mut(c)[idx] = z[c];
        }
    }
    Ok(out)
}

/// `‖i k · v̂‖ / ‖v̂‖` over the coefficient array (scale-free divergence).
pub fn spectral_divergence_norm(v: &SpectralVector) -> f64 {
    let grid = *v.grid();
    let mut num = 0.0;
    let mut den = 0.0;
    for slot in 0..grid.len() {
        let k = derivative_k(&grid, slot);
        let c = v.at(slot);
        num += (c[0] * k[0] + c[1] * k[1] + c[2] * k[2]).norm_sqr();
        den += c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Velocity recovered from vorticity together with the input diagnostics.
#[derive(Clone, Debug)]
pub struct BiotSavart {
    pub velocity: VectorField,
    /// `‖div ω‖₂ / ‖ω‖₂` measured spectrally on the input.
    pub divergence_ratio: f64,
    /// Set when the input was not numerically solenoidal.
    pub divergence_warning: bool,
}

/// Velocity from vorticity on the torus. The mean of `ω` is discarded and the
/// returned velocity has zero mean.
pub fn biot_savart(omega: &VectorField) -> Result<BiotSavart> {
    let hat = SpectralVector::try_forward(omega)?;
    let divergence_ratio = spectral_divergence_norm(&hat);
    let velocity = biot_savart_hat(&hat).to_physical();
    Ok(BiotSavart {
        velocity,
        divergence_ratio,
        divergence_warning: divergence_ratio > DIVERGENCE_WARNING,
    })
}

/// Zeroes every coefficient with some `|m_i| > n/3`, then projects onto
/// divergence-free fields (`k · f̂(k) = 0`). The `k = 0` mode is kept.
pub fn dealias_project(f: &SpectralVector) -> SpectralVector {
    let grid = *f.grid();
    f.map_slots(|slot, c| {
        if !inside_dealias(&grid, slot) {
            return [Complex64::default(); 3];
        }
        let k = derivative_k(&grid, slot);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return c;
        }
        let kdot = (c[0] * k[0] + c[1] * k[1] + c[2] * k[2]) / k2;
        [c[0] - kdot * k[0], c[1] - kdot * k[1], c[2] - kdot * k[2]]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::periodic(n, 0.1).unwrap()
    }

    fn tg_velocity(g: GridSpec) -> VectorField {
        VectorField::from_fn(g, |p| {
            [
                p[0].sin() * p[1].cos(),
                -p[0].cos() * p[1].sin(),
                0.0,
            ]
        })
    }

    #[test]
    fn curl_of_taylor_green_matches_hand_derivative() {
        let g = grid(16);
        let w = curl(&tg_velocity(g)).unwrap();
        // ∂x u_y = sin x sin y, ∂y u_x = −sin x sin y
        let expect = VectorField::from_fn(g, |p| [0.0, 0.0, 2.0 * p[0].sin() * p[1].sin()]);
        assert!(w.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = grid(16);
        let phi = ScalarField::from_fn(g, |p| (p[0] + 2.0 * p[1]).sin() * (3.0 * p[2]).cos());
        let w = curl(&gradient(&phi).unwrap()).unwrap();
        assert!(w.max_norm() < 1e-12);
    }

    #[test]
    fn curl_of_constant_is_zero() {
        let g = grid(8);
        let v = VectorField::from_fn(g, |_| [1.0, -2.0, 3.5]);
        assert!(curl(&v).unwrap().max_norm() < 1e-13);
    }

    #[test]
    fn biot_savart_recovers_taylor_green() {
        let g = grid(16);
        let w = VectorField::from_fn(g, |p| [0.0, 0.0, -2.0 * p[0].sin() * p[1].sin()]);
        let bs = biot_savart(&w).unwrap();
        assert!(!bs.divergence_warning);
        // ω_z = −2 sin x sin y is the curl of −u
        let expect = tg_velocity(g).scale(-1.0);
        assert!(bs.velocity.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn biot_savart_of_zero_is_zero() {
        let g = grid(8);
        let bs = biot_savart(&VectorField::zeros(g)).unwrap();
        assert_eq!(bs.velocity.max_norm(), 0.0);
        assert_eq!(bs.divergence_ratio, 0.0);
    }

    #[test]
    fn biot_savart_single_mode_hand_formula() {
        let g = grid(8);
        let mut hat = SpectralVector::zeros(g);
        let slot = g.index(1, 0, 0);
        let neg = g.index(7, 0, 0);
        let w = [Complex64::default(), Complex64::new(0.3, -0.2), Complex64::new(0.0, 0.7)];
        hat.set(slot, w);
        hat.set(neg, w.map(|z| z.conj()));
        let u = biot_savart_hat(&hat);
        // i k × ω̂ with k = (1,0,0): (0, −i ω̂_z, i ω̂_y)
        let expect = [Complex64::default(), -I * w[2], I * w[1]];
        for c in 0..3 {
            assert!((u.at(slot)[c] - expect[c]).norm() < 1e-15);
        }
    }

    #[test]
    fn flags_divergent_input() {
        let g = grid(16);
        let v = VectorField::from_fn(g, |p| [p[0].sin(), 0.0, 0.0]);
        assert!(biot_savart(&v).unwrap().divergence_warning);
    }

    #[test]
    fn dealias_project_examples() {
        let g = grid(16);
        let one = Complex64::new(1.0, 0.0);
        // inside the dealiasing cube, already solenoidal: unchanged
        let mut v = SpectralVector::zeros(g);
        let s = g.index(1, 1, 1);
        v.set(s, [one, -one, Complex64::default()]);
        let p = dealias_project(&v);
        assert_eq!(p.at(s), v.at(s));
        // outside the 2/3 cube: zeroed
        let mut v = SpectralVector::zeros(g);
        let s = g.index(16 / 2 - 1, 0, 0);
        v.set(s, [Complex64::default(), one, one]);
        assert!(dealias_project(&v).at(s).iter().all(|z| z.norm() == 0.0));
        // pure gradient: projected away
        let mut v = SpectralVector::zeros(g);
        let s = g.index(2, 1, 0);
        v.set(s, [one * 2.0, one, Complex64::default()]);
        assert!(dealias_project(&v).at(s).iter().all(|z| z.norm() < 1e-15));
    }
}
