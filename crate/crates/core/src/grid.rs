//! Discretization of the two-torus with period 2π in both directions.
//!
//! Grid nodes are `t_j = 2π k / n_j`, `k = 0..n_j-1`. Fourier coefficients
//! are indexed by integer modes `(m1, m2)` with `|m_j| <= n_j/2`; the
//! forward transform divides by `n1*n2` so the coefficients are honest
//! Fourier-series coefficients and derivative symbols are exactly
//! `i*m_j`.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Lattice on T² together with the target half-dimension `d`
/// (the position field has `d` complex components).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    pub n1: usize,
    pub n2: usize,
    pub d: usize,
}

impl TorusGrid {
    pub fn new(n1: usize, n2: usize, d: usize) -> Result<Self> {
        for (name, n) in [("n1", n1), ("n2", n2)] {
            if n < 8 || n % 2 != 0 {
                return Err(CoreError::InvalidGrid(format!(
                    "{name} must be even and >= 8, got {n}"
                )));
            }
        }
        if d == 0 {
            return Err(CoreError::InvalidGrid("d must be >= 1".into()));
        }
        Ok(Self { n1, n2, d })
    }

    #[inline]
    pub fn num_points(&self) -> usize {
        self.n1 * self.n2
    }

    /// Total volume of T² with the fixed 2π periods.
    #[inline]
    pub fn volume(&self) -> f64 {
        TAU * TAU
    }

    /// Quadrature weight of one node (trapezoid rule on the periodic grid,
    /// exact for trigonometric polynomials below the Nyquist band).
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.volume() / self.num_points() as f64
    }

    #[inline]
    pub fn point(&self, i1: usize, i2: usize) -> (f64, f64) {
        (
            TAU * i1 as f64 / self.n1 as f64,
            TAU * i2 as f64 / self.n2 as f64,
        )
    }

    /// Signed mode for storage index `k` along an axis of length `n`:
    /// `k` for `k <= n/2`, else `k - n`.
    #[inline]
    pub fn mode(k: usize, n: usize) -> i64 {
        if k <= n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    #[inline]
    pub fn mode1(&self, k: usize) -> i64 {
        Self::mode(k, self.n1)
    }

    #[inline]
    pub fn mode2(&self, k: usize) -> i64 {
        Self::mode(k, self.n2)
    }

    /// Storage index of mode `-m` given the index of `m`.
    #[inline]
    pub fn neg_index(k: usize, n: usize) -> usize {
        (n - k) % n
    }

    /// Derivative multiplier modes with the Nyquist slot zeroed. Zeroing
    /// `m = n/2` keeps first-order operators skew-adjoint on the grid.
    pub fn deriv_modes(n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                if k == n / 2 {
                    0.0
                } else {
                    Self::mode(k, n) as f64
                }
            })
            .collect()
    }
}

/// Shared FFT plans. rustfft plans are thread-safe once built; the mutex
/// only guards plan construction.
fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    planner().lock().unwrap().plan_fft_forward(len)
}

pub(crate) fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    planner().lock().unwrap().plan_fft_inverse(len)
}

/// In-place 2D FFT over an `n1 x n2` row-major slice.
/// `forward` divides by `n1*n2` afterwards; `inverse` does not rescale,
/// so `inverse(forward(x)) = x`.
pub(crate) fn fft2(data: &mut [Complex64], n1: usize, n2: usize, forward: bool) {
    debug_assert_eq!(data.len(), n1 * n2);
    let plan_rows = if forward {
        plan_forward(n2)
    } else {
        plan_inverse(n2)
    };
    let plan_cols = if forward {
        plan_forward(n1)
    } else {
        plan_inverse(n1)
    };

    for row in data.chunks_exact_mut(n2) {
        plan_rows.process(row);
    }

    let mut col = vec![Complex64::default(); n1];
    for j in 0..n2 {
        for i in 0..n1 {
            col[i] = data[i * n2 + j];
        }
        plan_cols.process(&mut col);
        for i in 0..n1 {
            data[i * n2 + j] = col[i];
        }
    }

    if forward {
        let scale = 1.0 / (n1 * n2) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(8, 8, 1).is_ok());
        assert!(TorusGrid::new(6, 8, 1).is_err());
        assert!(TorusGrid::new(9, 8, 1).is_err());
        assert!(TorusGrid::new(8, 8, 0).is_err());
    }

    #[test]
    fn mode_indexing_roundtrip() {
        let n = 16;
        for k in 0..n {
            let m = TorusGrid::mode(k, n);
            assert!(m.unsigned_abs() as usize <= n / 2);
            let kneg = TorusGrid::neg_index(k, n);
            if k != 0 && k != n / 2 {
                assert_eq!(TorusGrid::mode(kneg, n), -m);
            }
        }
        assert_eq!(TorusGrid::deriv_modes(n)[n / 2], 0.0);
    }

    #[test]
    fn fft2_roundtrip_identity() {
        let (n1, n2) = (8, 16);
        let orig: Vec<Complex64> = (0..n1 * n2)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.7).cos()))
            .collect();
        let mut data = orig.clone();
        fft2(&mut data, n1, n2, true);
        fft2(&mut data, n1, n2, false);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn fft2_single_mode_coefficient() {
        // f = e^{i(3 t1 + 2 t2)} has coefficient 1 at (3, 2) and 0 elsewhere.
        let grid = TorusGrid::new(16, 16, 1).unwrap();
        let mut data = vec![Complex64::default(); 256];
        for i1 in 0..16 {
            for i2 in 0..16 {
                let (t1, t2) = grid.point(i1, i2);
                data[i1 * 16 + i2] = (Complex64::i() * (3.0 * t1 + 2.0 * t2)).exp();
            }
        }
        fft2(&mut data, 16, 16, true);
        for k1 in 0..16 {
            for k2 in 0..16 {
                let expect = if k1 == 3 && k2 == 2 { 1.0 } else { 0.0 };
                assert!((data[k1 * 16 + k2] - expect).norm() < 1e-12);
            }
        }
    }
}
