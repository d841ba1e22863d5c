//! Phase-space fields Z = (q, q̄, p, p̄) on the torus.
//!
//! Only the analytic slots `q` and `p` are stored (d complex channels
//! each); the conjugate slots are derived on demand. `q` is kept as a
//! genuine periodic lift into ℂ^d ≅ ℝ^{2d}, which encodes that the map
//! into the torus target is nullhomotopic. Angle wrapping happens only
//! when positions are reported.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::field::SpectralField;
use crate::grid::TorusGrid;

#[derive(Debug, Clone)]
pub struct PhaseField {
    pub q: SpectralField,
    pub p: SpectralField,
}

/// The same object in real coordinates (q1, q2, p1, p2), each a stack of
/// `d` real channels. Used by the real-form Bridges operator.
#[derive(Debug, Clone)]
pub struct RealPhase {
    pub grid: TorusGrid,
    pub q1: Vec<Array2<f64>>,
    pub q2: Vec<Array2<f64>>,
    pub p1: Vec<Array2<f64>>,
    pub p2: Vec<Array2<f64>>,
}

impl PhaseField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            q: SpectralField::zeros(grid, grid.d),
            p: SpectralField::zeros(grid, grid.d),
        }
    }

    pub fn new(q: SpectralField, p: SpectralField) -> Self {
        assert_eq!(q.grid, p.grid);
        assert_eq!(q.channels(), p.channels());
        Self { q, p }
    }

    /// Constant field (q ≡ q0, p ≡ p0).
    pub fn constant(grid: TorusGrid, q0: &[Complex64], p0: &[Complex64]) -> Self {
        Self {
            q: SpectralField::constant(grid, q0),
            p: SpectralField::constant(grid, p0),
        }
    }

    pub fn random_band_limited<R: Rng>(
        grid: TorusGrid,
        kmax: usize,
        amplitude: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            q: SpectralField::random_band_limited(grid, grid.d, kmax, amplitude, rng),
            p: SpectralField::random_band_limited(grid, grid.d, kmax, amplitude, rng),
        }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.q.grid
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            q: self.q.add(&other.q),
            p: self.p.add(&other.p),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            q: self.q.sub(&other.q),
            p: self.p.sub(&other.p),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        let a = Complex64::new(a, 0.0);
        Self {
            q: self.q.scale(a),
            p: self.p.scale(a),
        }
    }

    /// L² pairing ⟨X, Y⟩ = Σ_ch ∫ Re(X_q conj(Y_q)) + Re(X_p conj(Y_p)) dV.
    /// This is the real inner product under which gradients are taken; in
    /// slot notation it is ½∫(X_q Y_q̄ + X_q̄ Y_q + X_p Y_p̄ + X_p̄ Y_p) dV.
    pub fn inner(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.q.values().iter().zip(other.q.values().iter()) {
            acc += a.re * b.re + a.im * b.im;
        }
        for (a, b) in self.p.values().iter().zip(other.p.values().iter()) {
            acc += a.re * b.re + a.im * b.im;
        }
        acc * self.grid().cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.q.linf_norm().max(self.p.linf_norm())
    }

    /// Pointwise |p|² = Σ_ch |p_ch|², maximized over the grid.
    pub fn max_p_sq(&self) -> f64 {
        let (c, n1, n2) = self.p.values().dim();
        let mut best = 0.0f64;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let mut s = 0.0;
                for ch in 0..c {
                    s += self.p.values()[(ch, i1, i2)].norm_sqr();
                }
                best = best.max(s);
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }

    pub fn dealias_two_thirds(&self) -> Self {
        Self {
            q: self.q.dealias_two_thirds(),
            p: self.p.dealias_two_thirds(),
        }
    }

    /// Split into real coordinates via q = q1 + i q2, p = p1 + i p2.
    pub fn to_real(&self) -> RealPhase {
        let grid = self.grid();
        let d = grid.d;
        let mut out = RealPhase::zeros(grid);
        for ch in 0..d {
            for i1 in 0..grid.n1 {
                for i2 in 0..grid.n2 {
                    let q = self.q.values()[(ch, i1, i2)];
                    let p = self.p.values()[(ch, i1, i2)];
                    out.q1[ch][(i1, i2)] = q.re;
                    out.q2[ch][(i1, i2)] = q.im;
                    out.p1[ch][(i1, i2)] = p.re;
                    out.p2[ch][(i1, i2)] = p.im;
                }
            }
        }
        out
    }

    pub fn from_real(real: &RealPhase) -> Self {
        let grid = real.grid;
        let mut qv = ndarray::Array3::default((grid.d, grid.n1, grid.n2));
        let mut pv = ndarray::Array3::default((grid.d, grid.n1, grid.n2));
        for ch in 0..grid.d {
            for i1 in 0..grid.n1 {
                for i2 in 0..grid.n2 {
                    qv[(ch, i1, i2)] =
                        Complex64::new(real.q1[ch][(i1, i2)], real.q2[ch][(i1, i2)]);
                    pv[(ch, i1, i2)] =
                        Complex64::new(real.p1[ch][(i1, i2)], real.p2[ch][(i1, i2)]);
                }
            }
        }
        Self {
            q: SpectralField::from_values(grid, qv).expect("shape"),
            p: SpectralField::from_values(grid, pv).expect("shape"),
        }
    }

    /// L² distance of (q mod 2π, p) against another field: per-node q
    /// differences are wrapped to (-π, π] componentwise before the norm.
    pub fn torus_distance(&self, other: &Self) -> f64 {
        let grid = self.grid();
        let mut acc = 0.0;
        for (a, b) in self.q.values().iter().zip(other.q.values().iter()) {
            let dre = wrap_angle(a.re - b.re);
            let dim = wrap_angle(a.im - b.im);
            acc += dre * dre + dim * dim;
        }
        for (a, b) in self.p.values().iter().zip(other.p.values().iter()) {
            acc += (a - b).norm_sqr();
        }
        (acc * grid.cell_area()).sqrt()
    }
}

fn wrap_angle(x: f64) -> f64 {
    let tau = crate::grid::TAU;
    let mut y = x % tau;
    if y > tau / 2.0 {
        y -= tau;
    } else if y <= -tau / 2.0 {
        y += tau;
    }
    y
}

impl RealPhase {
    pub fn zeros(grid: TorusGrid) -> Self {
        let mk = || {
            (0..grid.d)
                .map(|_| Array2::zeros((grid.n1, grid.n2)))
                .collect::<Vec<_>>()
        };
        Self {
            grid,
            q1: mk(),
            q2: mk(),
            p1: mk(),
            p2: mk(),
        }
    }

    pub fn linf_diff(&self, other: &Self) -> f64 {
        let mut best = 0.0f64;
        for (a, b) in [
            (&self.q1, &other.q1),
            (&self.q2, &other.q2),
            (&self.p1, &other.p1),
            (&self.p2, &other.p2),
        ] {
            for (x, y) in a.iter().zip(b.iter()) {
                for (u, v) in x.iter().zip(y.iter()) {
                    best = best.max((u - v).abs());
                }
            }
        }
        best
    }

    pub fn linf_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for stack in [&self.q1, &self.q2, &self.p1, &self.p2] {
            for arr in stack.iter() {
                for v in arr.iter() {
                    best = best.max(v.abs());
                }
            }
        }
        best
    }
}

/// Interconversion sanity: `to_real` followed by `from_real` is exact.
pub fn roundtrip_error(z: &PhaseField) -> f64 {
    let back = PhaseField::from_real(&z.to_real());
    let dq = z.q.sub(&back.q).linf_norm();
    let dp = z.p.sub(&back.p).linf_norm();
    dq.max(dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn real_complex_roundtrip_exact() {
        let grid = TorusGrid::new(16, 16, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = PhaseField::random_band_limited(grid, 4, 1.0, &mut rng);
        assert!(roundtrip_error(&z) < 1e-14);
    }

    #[test]
    fn wrapped_distance_of_shifted_constants() {
        // Constants (0,0) and (π,π) with d=1: |Δq| = π√2 pointwise,
        // so the L² distance is 2π·π·√2.
        let grid = TorusGrid::new(8, 8, 1).unwrap();
        let a = PhaseField::constant(grid, &[Complex64::default()], &[Complex64::default()]);
        let b = PhaseField::constant(
            grid,
            &[Complex64::new(std::f64::consts::PI, std::f64::consts::PI)],
            &[Complex64::default()],
        );
        let expect = crate::grid::TAU * std::f64::consts::PI * 2.0_f64.sqrt();
        assert!((a.torus_distance(&b) - expect).abs() < 1e-10);
    }

    #[test]
    fn wrap_is_identity_modulo_period() {
        let grid = TorusGrid::new(8, 8, 1).unwrap();
        let a = PhaseField::constant(grid, &[Complex64::new(0.3, -0.2)], &[Complex64::default()]);
        let b = PhaseField::constant(
            grid,
            &[Complex64::new(0.3 + crate::grid::TAU, -0.2 - crate::grid::TAU)],
            &[Complex64::default()],
        );
        assert!(a.torus_distance(&b) < 1e-10);
    }
}
