//! Multi-channel complex fields on the torus grid, stored both as
//! real-space samples and as Fourier coefficients.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::grid::{fft2, TorusGrid};

/// A map T² → ℂ^c kept simultaneously as grid samples (`values`) and
/// Fourier-series coefficients (`coeffs`, FFT storage order). The two
/// representations are maintained consistent by every constructor and
/// operation; fields are immutable after construction.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: TorusGrid,
    values: Array3<Complex64>,
    coeffs: Array3<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, channels: usize) -> Self {
        let shape = (channels, grid.n1, grid.n2);
        Self {
            grid,
            values: Array3::default(shape),
            coeffs: Array3::default(shape),
        }
    }

    pub fn from_values(grid: TorusGrid, values: Array3<Complex64>) -> Result<Self> {
        Self::check_shape(grid, &values)?;
        let mut coeffs = values.clone();
        for mut ch in coeffs.outer_iter_mut() {
            let slice = ch.as_slice_mut().expect("contiguous");
            fft2(slice, grid.n1, grid.n2, true);
        }
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    pub fn from_coeffs(grid: TorusGrid, coeffs: Array3<Complex64>) -> Result<Self> {
        Self::check_shape(grid, &coeffs)?;
        let mut values = coeffs.clone();
        for mut ch in values.outer_iter_mut() {
            let slice = ch.as_slice_mut().expect("contiguous");
            fft2(slice, grid.n1, grid.n2, false);
        }
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    fn check_shape(grid: TorusGrid, arr: &Array3<Complex64>) -> Result<()> {
        let (_c, n1, n2) = arr.dim();
        if n1 != grid.n1 || n2 != grid.n2 {
            return Err(CoreError::ShapeMismatch(format!(
                "array is {n1}x{n2}, grid is {}x{}",
                grid.n1, grid.n2
            )));
        }
        Ok(())
    }

    /// Sample a closure `(channel, t1, t2) -> value` on the grid.
    pub fn from_fn<F>(grid: TorusGrid, channels: usize, f: F) -> Self
    where
        F: Fn(usize, f64, f64) -> Complex64,
    {
        let mut values = Array3::default((channels, grid.n1, grid.n2));
        for c in 0..channels {
            for i1 in 0..grid.n1 {
                for i2 in 0..grid.n2 {
                    let (t1, t2) = grid.point(i1, i2);
                    values[(c, i1, i2)] = f(c, t1, t2);
                }
            }
        }
        Self::from_values(grid, values).expect("shape by construction")
    }

    pub fn constant(grid: TorusGrid, values: &[Complex64]) -> Self {
        Self::from_fn(grid, values.len(), |c, _, _| values[c])
    }

    /// Random band-limited field: independent complex Gaussian coefficients
    /// on modes `|m_j| <= kmax`, scaled to roughly unit amplitude, then
    /// rescaled by `amplitude`.
    pub fn random_band_limited<R: Rng>(
        grid: TorusGrid,
        channels: usize,
        kmax: usize,
        amplitude: f64,
        rng: &mut R,
    ) -> Self {
        let mut coeffs = Array3::default((channels, grid.n1, grid.n2));
        let norm = amplitude / (2 * kmax + 1) as f64;
        for c in 0..channels {
            for k1 in 0..grid.n1 {
                for k2 in 0..grid.n2 {
                    let m1 = grid.mode1(k1).unsigned_abs() as usize;
                    let m2 = grid.mode2(k2).unsigned_abs() as usize;
                    if m1 <= kmax && m2 <= kmax && k1 != grid.n1 / 2 && k2 != grid.n2 / 2 {
                        let re: f64 = rng.gen_range(-1.0..1.0);
                        let im: f64 = rng.gen_range(-1.0..1.0);
                        coeffs[(c, k1, k2)] = Complex64::new(re, im) * norm;
                    }
                }
            }
        }
        Self::from_coeffs(grid, coeffs).expect("shape by construction")
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.values.dim().0
    }

    #[inline]
    pub fn values(&self) -> &Array3<Complex64> {
        &self.values
    }

    #[inline]
    pub fn coeffs(&self) -> &Array3<Complex64> {
        &self.coeffs
    }

    pub fn value_channel(&self, c: usize) -> Array2<Complex64> {
        self.values.index_axis(ndarray::Axis(0), c).to_owned()
    }

    /// Build a new field by transforming the coefficients channel-wise.
    /// `f(channel, k1, k2, coeff) -> coeff`.
    pub fn map_coeffs<F>(&self, f: F) -> Self
    where
        F: Fn(usize, usize, usize, Complex64) -> Complex64,
    {
        let mut coeffs = self.coeffs.clone();
        for ((c, k1, k2), v) in coeffs.indexed_iter_mut() {
            *v = f(c, k1, k2, *v);
        }
        Self::from_coeffs(self.grid, coeffs).expect("same shape")
    }

    pub fn map_values<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64,
    {
        Self::from_values(self.grid, self.values.mapv(f)).expect("same shape")
    }

    /// Complex conjugate field. Coefficients follow the exact index
    /// relation conj(f)^(m) = conj(f^(-m)).
    pub fn conj(&self) -> Self {
        let (c, n1, n2) = self.values.dim();
        let values = self.values.mapv(|v| v.conj());
        let mut coeffs = Array3::default((c, n1, n2));
        for ch in 0..c {
            for k1 in 0..n1 {
                for k2 in 0..n2 {
                    let j1 = TorusGrid::neg_index(k1, n1);
                    let j2 = TorusGrid::neg_index(k2, n2);
                    coeffs[(ch, k1, k2)] = self.coeffs[(ch, j1, j2)].conj();
                }
            }
        }
        Self {
            grid: self.grid,
            values,
            coeffs,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            values: &self.values + &other.values,
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            values: &self.values - &other.values,
            coeffs: &self.coeffs - &other.coeffs,
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.mapv(|v| v * a),
            coeffs: self.coeffs.mapv(|v| v * a),
        }
    }

    /// Grid-quadrature L² norm: sqrt(∫ |f|² dV).
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.cell_area()).sqrt()
    }

    /// Coefficient-side L² norm: sqrt((2π)² Σ |f^(m)|²). Equals `l2_norm`
    /// by Parseval with this module's normalization.
    pub fn coeff_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.volume()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.im.abs())
            .fold(0.0, f64::max)
    }

    /// ∫ f dV (complex quadrature).
    pub fn integral(&self) -> Complex64 {
        let sum: Complex64 = self.values.iter().sum();
        sum * self.grid.cell_area()
    }

    /// Zero all coefficients with |m1| > n1/3 or |m2| > n2/3 (2/3-rule
    /// dealiasing for quadratic and cubic products).
    pub fn dealias_two_thirds(&self) -> Self {
        let cut1 = self.grid.n1 / 3;
        let cut2 = self.grid.n2 / 3;
        self.map_coeffs(|_, k1, k2, v| {
            let m1 = TorusGrid::mode(k1, self.grid.n1).unsigned_abs() as usize;
            let m2 = TorusGrid::mode(k2, self.grid.n2).unsigned_abs() as usize;
            if m1 > cut1 || m2 > cut2 {
                Complex64::default()
            } else {
                v
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
