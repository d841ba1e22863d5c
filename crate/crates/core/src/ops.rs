//! Exact spectral implementations of the first-order operators on T²:
//! the Wirtinger derivatives ∂_t = ½(∂₁ - i∂₂) and ∂_t̄ = ½(∂₁ + i∂₂),
//! the Laplacian, the Bridges operator J_∂ in real coordinates and the
//! slashed operator ∂̸ in complex coordinates.
//!
//! All derivatives act mode-wise on Fourier coefficients; the Nyquist
//! mode is zeroed to keep the first-order operators skew-adjoint.

use ndarray::Array2;
use num_complex::Complex64;

use crate::field::SpectralField;
use crate::grid::{fft2, TorusGrid};
use crate::phase::{PhaseField, RealPhase};

/// ∂_t f: coefficient multiplier ½(i m1 + m2).
pub fn d_t(f: &SpectralField) -> SpectralField {
    let modes1 = TorusGrid::deriv_modes(f.grid.n1);
    let modes2 = TorusGrid::deriv_modes(f.grid.n2);
    f.map_coeffs(|_, k1, k2, v| {
        let m1 = modes1[k1];
        let m2 = modes2[k2];
        v * Complex64::new(0.5 * m2, 0.5 * m1)
    })
}

/// ∂_t̄ f: coefficient multiplier ½(i m1 - m2).
pub fn d_tbar(f: &SpectralField) -> SpectralField {
    let modes1 = TorusGrid::deriv_modes(f.grid.n1);
    let modes2 = TorusGrid::deriv_modes(f.grid.n2);
    f.map_coeffs(|_, k1, k2, v| {
        let m1 = modes1[k1];
        let m2 = modes2[k2];
        v * Complex64::new(-0.5 * m2, 0.5 * m1)
    })
}

/// ∂₁ f (real direction t1): multiplier i m1.
pub fn d_1(f: &SpectralField) -> SpectralField {
    let modes1 = TorusGrid::deriv_modes(f.grid.n1);
    f.map_coeffs(|_, k1, _, v| v * Complex64::new(0.0, modes1[k1]))
}

/// ∂₂ f (real direction t2): multiplier i m2.
pub fn d_2(f: &SpectralField) -> SpectralField {
    let modes2 = TorusGrid::deriv_modes(f.grid.n2);
    f.map_coeffs(|_, _, k2, v| v * Complex64::new(0.0, modes2[k2]))
}

/// Δf = (∂₁² + ∂₂²) f: multiplier -(m1² + m2²).
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let modes1 = TorusGrid::deriv_modes(f.grid.n1);
    let modes2 = TorusGrid::deriv_modes(f.grid.n2);
    f.map_coeffs(|_, k1, k2, v| {
        let m1 = modes1[k1];
        let m2 = modes2[k2];
        v * Complex64::new(-(m1 * m1 + m2 * m2), 0.0)
    })
}

/// Spectral ∂₁ / ∂₂ of a real scalar array (helper for the real-form
/// operator below). Returns the real part of the spectral derivative.
fn d_real(grid: TorusGrid, arr: &Array2<f64>, axis: usize) -> Array2<f64> {
    let (n1, n2) = (grid.n1, grid.n2);
    let mut buf: Vec<Complex64> = arr.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, n1, n2, true);
    let modes1 = TorusGrid::deriv_modes(n1);
    let modes2 = TorusGrid::deriv_modes(n2);
    for k1 in 0..n1 {
        for k2 in 0..n2 {
            let m = if axis == 0 { modes1[k1] } else { modes2[k2] };
            buf[k1 * n2 + k2] *= Complex64::new(0.0, m);
        }
    }
    fft2(&mut buf, n1, n2, false);
    Array2::from_shape_fn((n1, n2), |(i1, i2)| buf[i1 * n2 + i2].re)
}

/// The Bridges operator J_∂ acting on Z = (q1, q2, p1, p2), arranged so
/// that J_∂ Z = ∇H(Z) with the ordinary gradient (∂_{q1}H, ∂_{q2}H,
/// ∂_{p1}H, ∂_{p2}H) is exactly the first-order elliptic system coupling
/// the two Laplace equations. With this arrangement J_∂ = J₁∂₁ + J₂∂₂
/// for complex structures J₁, J₂, and J_∂² = -Δ componentwise; only
/// constant fields lie in the kernel.
///
/// Component rows:
///   out.q1 = -∂₁p1 - ∂₂p2
///   out.q2 =  ∂₁p2 - ∂₂p1
///   out.p1 =  ∂₁q1 + ∂₂q2
///   out.p2 = -∂₁q2 + ∂₂q1
pub fn bridges_op(z: &RealPhase) -> RealPhase {
    let grid = z.grid;
    let mut out = RealPhase::zeros(grid);
    for ch in 0..grid.d {
        let d1q1 = d_real(grid, &z.q1[ch], 0);
        let d2q1 = d_real(grid, &z.q1[ch], 1);
        let d1q2 = d_real(grid, &z.q2[ch], 0);
        let d2q2 = d_real(grid, &z.q2[ch], 1);
        let d1p1 = d_real(grid, &z.p1[ch], 0);
        let d2p1 = d_real(grid, &z.p1[ch], 1);
        let d1p2 = d_real(grid, &z.p2[ch], 0);
        let d2p2 = d_real(grid, &z.p2[ch], 1);
        out.q1[ch] = -&d1p1 - &d2p2;
        out.q2[ch] = &d1p2 - &d2p1;
        out.p1[ch] = &d1q1 + &d2q2;
        out.p2[ch] = -&d1q2 + &d2q1;
    }
    out
}

/// The slashed operator ∂̸ acting on Z = (q, q̄, p, p̄):
///
/// ∂̸ Z = (-∂_t̄ p̄, -∂_t p, ∂_t̄ q̄, ∂_t q)
///
/// Returned in the analytic-slot convention: slot q holds -∂_t̄ p̄ and
/// slot p holds ∂_t̄ q̄; the remaining two components are their
/// conjugates. Under the interconversion w = ½(v₁ + i v₂) per block this
/// is the complex form of `bridges_op`, and -∂̸² = ∂_t ∂_t̄ · Id.
pub fn slashed_del(z: &PhaseField) -> PhaseField {
    let pbar = z.p.conj();
    let qbar = z.q.conj();
    PhaseField {
        q: d_tbar(&pbar).scale(Complex64::new(-1.0, 0.0)),
        p: d_tbar(&qbar),
    }
}

/// Complexification of a real 4-row object in gradient pairing:
/// (v1, v2, v3, v4) ↦ slots (½(v1 + i v2), ½(v3 + i v4)).
pub fn complexify_gradient_rows(real: &RealPhase) -> PhaseField {
    let grid = real.grid;
    let mut qv = ndarray::Array3::default((grid.d, grid.n1, grid.n2));
    let mut pv = ndarray::Array3::default((grid.d, grid.n1, grid.n2));
    for ch in 0..grid.d {
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                qv[(ch, i1, i2)] = Complex64::new(
                    0.5 * real.q1[ch][(i1, i2)],
                    0.5 * real.q2[ch][(i1, i2)],
                );
                pv[(ch, i1, i2)] = Complex64::new(
                    0.5 * real.p1[ch][(i1, i2)],
                    0.5 * real.p2[ch][(i1, i2)],
                );
            }
        }
    }
    PhaseField {
        q: SpectralField::from_values(grid, qv).expect("shape"),
        p: SpectralField::from_values(grid, pv).expect("shape"),
    }
}
