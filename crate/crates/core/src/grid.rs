//! Uniform periodic grid, sampled complex fields, spectral differentiation
//! and rectangle-rule quadrature.
//!
//! Nodes are `x_j = -L + j dx` for `j = 0..N`, `dx = 2L/N`. The point `x = L`
//! is the periodic image of node 0. Wavenumbers are stored in FFT order,
//! i.e. `k_m = pi m / L` for `m = 0..N/2` followed by the negative modes
//! `m = -N/2..0`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic 1-D grid on `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    n_points: usize,
    dx: f64,
}

impl Grid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 4, got {n_points}"
            )));
        }
        Ok(Self {
            half_width,
            n_points,
            dx: 2.0 * half_width / n_points as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Integer mode number of FFT slot `j`, in `[-N/2, N/2)`.
    #[inline]
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n_points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Wavenumbers `pi m / L` in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points)
            .map(|j| PI * self.mode(j) as f64 / self.half_width)
            .collect()
    }

    /// Index of the node at `-x_j` (periodic reflection through the origin).
    #[inline]
    pub fn reflect_index(&self, j: usize) -> usize {
        (self.n_points - j) % self.n_points
    }

    /// Largest `|k|` on the grid (the Nyquist wavenumber).
    pub fn k_max(&self) -> f64 {
        PI * (self.n_points / 2) as f64 / self.half_width
    }
}

/// Complex samples of one field component on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let field = Self { grid, values };
        field.check_finite()?;
        Ok(field)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.node(j))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub(crate) fn values_mut_vec(&mut self) -> &mut Vec<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Pointwise map that also sees the node coordinate.
    pub fn map_with_x(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(j, &z)| f(self.grid.node(j), z))
                .collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// `|f|^2` as a (real-valued) field.
    pub fn norm_sqr_field(&self) -> Self {
        self.map(|z| Complex64::new(z.norm_sqr(), 0.0))
    }

    /// `sqrt(dx * sum |f|^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real parts as a plain vector.
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Samples `-x` reflected: `g(x_j) = f(-x_j)`.
    pub fn reflected(&self) -> Self {
        let values = (0..self.grid.len())
            .map(|j| self.values[self.grid.reflect_index(j)])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Evaluate the field at an arbitrary point by 8-point Lagrange
    /// interpolation. Samples beyond either end of the grid count as zero,
    /// which matches both decayed profiles and the Dirichlet boundary used
    /// by the finite-difference solves.
    pub fn sample_at(&self, x: f64) -> Complex64 {
        let n = self.grid.len() as i64;
        let pos = (x + self.grid.half_width) / self.grid.dx;
        if !pos.is_finite() || pos < -4.0 || pos > (n + 4) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let base = pos.floor();
        let s = pos - base;
        let base = base as i64;
        let fetch = |i: i64| {
            if (0..n).contains(&i) {
                self.values[i as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        if s == 0.0 {
            return fetch(base);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in -3i64..=4 {
            let mut w = 1.0;
            for m in -3i64..=4 {
                if m != i {
                    w *= (s - m as f64) / (i - m) as f64;
                }
            }
            acc += fetch(base + i) * w;
        }
        acc
    }
}

/// Rectangle-rule integral `dx * sum f(x_j)`.
pub fn integrate(f: &ComplexField) -> Result<Complex64> {
    f.check_finite()?;
    Ok(f.values.iter().sum::<Complex64>() * f.grid.dx)
}

/// Real inner product `Re \int f conj(g)`.
pub fn inner(f: &ComplexField, g: &ComplexField) -> Result<f64> {
    f.same_grid(g)?;
    f.check_finite()?;
    g.check_finite()?;
    Ok(f.grid.dx
        * f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum::<f64>())
}

/// Spectral derivative of order 1, 2 or 3.
pub fn derivative(f: &ComplexField, order: u32) -> Result<ComplexField> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    f.check_finite()?;
    let spectral = Spectral::new(f.grid);
    Ok(spectral.derivative(f, order))
}

/// Cached FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.len()),
            inverse: planner.plan_fft_inverse(grid.len()),
            k: grid.wavenumbers(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform in place, including the `1/N` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / buf.len() as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Multiply by a Fourier symbol `m(k)` (FFT order).
    pub fn apply_symbol(&self, f: &ComplexField, symbol: impl Fn(usize, f64) -> Complex64) -> ComplexField {
        let mut buf = f.values.clone();
        self.forward(&mut buf);
        for (j, z) in buf.iter_mut().enumerate() {
            *z *= symbol(j, self.k[j]);
        }
        self.inverse(&mut buf);
        ComplexField {
            grid: self.grid,
            values: buf,
        }
    }

    /// Multiplier `(ik)^order`; the Nyquist mode is dropped for odd orders
    /// so that real fields stay real.
    pub fn derivative(&self, f: &ComplexField, order: u32) -> ComplexField {
        let nyquist = self.grid.len() / 2;
        self.apply_symbol(f, |j, k| {
            if order % 2 == 1 && j == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k).powu(order)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: f64) -> f64 {
        2f64.sqrt() / x.cosh()
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::new(25.0, 1024).unwrap();
        assert_eq!(g.node(0), -25.0);
        assert!((g.dx() * g.len() as f64 - 50.0).abs() < 1e-12);
        assert_eq!(g.mode(512), -512);
        assert_eq!(g.reflect_index(0), 0);
        assert_eq!(g.reflect_index(1), 1023);
        assert!((g.node(g.reflect_index(10)) + g.node(10)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(25.0, 1000).is_err());
        assert!(Grid::new(-1.0, 1024).is_err());
        assert!(Grid::new(f64::NAN, 1024).is_err());
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = Grid::new(5.0, 16).unwrap();
        let mut vals = vec![Complex64::new(1.0, 0.0); 16];
        vals[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            ComplexField::new(g, vals.clone()),
            Err(Error::NonFinite { index: 3 })
        ));
        let mut f = ComplexField::zeros(g);
        f.values_mut()[7] = Complex64::new(0.0, f64::INFINITY);
        assert!(integrate(&f).is_err());
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let g = Grid::new(25.0, 256).unwrap();
        assert_eq!(integrate(&ComplexField::zeros(g)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ground_state_mass_and_pairings() {
        let g = Grid::new(25.0, 4096).unwrap();
        let qf = ComplexField::from_real_fn(g, q);
        let q2 = qf.norm_sqr_field();
        assert!((integrate(&q2).unwrap().re - 4.0).abs() < 1e-10);
        assert!((inner(&qf, &qf).unwrap() - 4.0).abs() < 1e-10);
        let iq = qf.scale(Complex64::new(0.0, 1.0));
        assert!(inner(&qf, &iq).unwrap().abs() < 1e-14);
        let dq = derivative(&qf, 1).unwrap();
        let xq = qf.map_with_x(|x, z| z * x);
        assert!((inner(&dq, &xq).unwrap() + 2.0).abs() < 1e-10);
    }

    #[test]
    fn derivative_checks() {
        let g = Grid::new(25.0, 4096).unwrap();
        let qf = ComplexField::from_real_fn(g, q);
        let d1 = derivative(&qf, 1).unwrap();
        assert!(d1.values()[2048].norm() < 1e-10);
        let d2 = derivative(&qf, 2).unwrap();
        let profile_eq = d2.zip_with(&qf, |a, b| a - b + b * b * b).unwrap();
        assert!(profile_eq.sup_norm() <= 1e-8);
        // wide box so the periodic wrap of odd derivatives is below rounding
        let coarse = Grid::new(40.0, 1024).unwrap();
        let d3 = derivative(&ComplexField::from_real_fn(coarse, q), 3).unwrap();
        let exact = ComplexField::from_real_fn(coarse, |x| {
            // Q''' = Q' (1 - 3 Q^2)
            let qp = -q(x) * x.tanh();
            qp * (1.0 - 3.0 * q(x) * q(x))
        });
        let err = d3.sub(&exact).unwrap().sup_norm();
        assert!(err < 1e-8, "{err}");
        let constant = ComplexField::from_real_fn(g, |_| 3.5);
        assert!(derivative(&constant, 1).unwrap().sup_norm() < 1e-12);
        assert!(derivative(&qf, 4).is_err());
        assert!(derivative(&qf, 0).is_err());
    }

    #[test]
    fn exponential_weight_quadrature() {
        // \int e^{2cx} Q^2 = 4 pi c / sin(pi c); c = 1/2 gives 2 pi.
        let g = Grid::new(60.0, 8192).unwrap();
        let c = 0.5;
        let f = ComplexField::from_real_fn(g, |x| (2.0 * c * x).exp() * q(x) * q(x));
        assert!((integrate(&f).unwrap().re - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = ComplexField::zeros(Grid::new(10.0, 64).unwrap());
        let b = ComplexField::zeros(Grid::new(10.0, 128).unwrap());
        assert!(matches!(inner(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn lagrange_sampling_is_accurate() {
        let g = Grid::new(30.0, 4096).unwrap();
        let qf = ComplexField::from_real_fn(g, q);
        for &x in &[0.0, 0.123_456, -3.777, 7.000_01, 29.99] {
            assert!((qf.sample_at(x).re - q(x)).abs() < 1e-11, "x = {x}");
        }
        assert_eq!(qf.sample_at(100.0), Complex64::new(0.0, 0.0));
    }
}
