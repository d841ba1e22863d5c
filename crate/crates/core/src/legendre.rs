//! The Lagrangian side: actions S[q], Euler-Lagrange residuals, the
//! Legendre transform to Hamiltonians and the fiber-map condition that
//! makes it invertible.
//!
//! Orientation convention: with t = t₁ + i t₂ one has
//! dt∧dt̄ = -2i dt₁∧dt₂, so the action -∫L dt∧dt̄/(2i) equals +∫L dV
//! with dV = dt₁dt₂. After the Legendre transform this matches the
//! Hamiltonian action ∫(p∂_t q + p̄∂_t̄q̄ - H) dV exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::hamiltonian::{CosinePotential, Nonlinearity};
use crate::ops::d_t;
use crate::phase::PhaseField;

type CMat = DMatrix<Complex64>;

/// A real-valued Lagrangian L(q, q̄, v, v̄, t, t̄) with v = ∂_t q, with
/// analytic derivatives through second order in all slots.
pub trait Lagrangian: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, node: (usize, usize), q: &[Complex64], v: &[Complex64]) -> f64;

    /// ∂L/∂q per channel (∂L/∂q̄ is the conjugate since L is real).
    fn d_q(&self, node: (usize, usize), q: &[Complex64], v: &[Complex64], out: &mut [Complex64]);

    /// ∂L/∂v per channel; this is the momentum map p = ∂L/∂(∂_t q).
    fn d_v(&self, node: (usize, usize), q: &[Complex64], v: &[Complex64], out: &mut [Complex64]);

    /// ∂²L/∂v_i∂v_j.
    fn d2_vv(&self, node: (usize, usize), q: &[Complex64], v: &[Complex64]) -> CMat;

    /// ∂²L/∂v_i∂v̄_j.
    fn d2_vvbar(&self, node: (usize, usize), q: &[Complex64], v: &[Complex64]) -> CMat;
}

/// The paper-level main example L = 2 ∂_t q ∂_t̄ q̄ - V(q, q̄) with a
/// split potential V ("dirichlet-minus-potential").
#[derive(Clone)]
pub struct DirichletMinusPotential {
    pub potential: Arc<dyn Nonlinearity>,
}

impl DirichletMinusPotential {
    pub fn new(potential: Arc<dyn Nonlinearity>) -> Self {
        Self { potential }
    }

    pub fn cosine(eps: Vec<f64>) -> Self {
        Self::new(Arc::new(CosinePotential::new(eps)))
    }

}

impl Lagrangian for DirichletMinusPotential {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn eval(&self, node: (usize, usize), q: &[Complex64], v: &[Complex64]) -> f64 {
        // 2 Σ v v̄ - V: v̄ = conj(v) on real tangent data.
        let kinetic: f64 = v.iter().map(|x| 2.0 * x.norm_sqr()).sum();
        kinetic - self.potential.eval(node, q, &vec![Complex64::default(); q.len()])
    }

    fn d_q(&self, node: (usize, usize), q: &[Complex64], _v: &[Complex64], out: &mut [Complex64]) {
        // ∂L/∂q = -∂V/∂q = -conj(∂V/∂q̄).
        let p0 = vec![Complex64::default(); q.len()];
        self.potential.grad_qbar(node, q, &p0, out);
        for g in out.iter_mut() {
            *g = -g.conj();
        }
    }

    fn d_v(&self, _: (usize, usize), _q: &[Complex64], v: &[Complex64], out: &mut [Complex64]) {
        // p = ∂L/∂v = 2 v̄.
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o = 2.0 * x.conj();
        }
    }

    fn d2_vv(&self, _: (usize, usize), _: &[Complex64], _: &[Complex64]) -> CMat {
        CMat::zeros(self.dim(), self.dim())
    }

    fn d2_vvbar(&self, _: (usize, usize), _: &[Complex64], _: &[Complex64]) -> CMat {
        CMat::from_diagonal_element(self.dim(), self.dim(), Complex64::new(2.0, 0.0))
    }
}

fn node_slices(
    q: &SpectralField,
    v: &SpectralField,
    i1: usize,
    i2: usize,
    qb: &mut [Complex64],
    vb: &mut [Complex64],
) {
    for ch in 0..qb.len() {
        qb[ch] = q.values()[(ch, i1, i2)];
        vb[ch] = v.values()[(ch, i1, i2)];
    }
}

/// S[q] = ∫ L(q, q̄, ∂_t q, ∂_t̄ q̄) dV. Real-valued for real L.
pub fn lagrangian_action(lag: &dyn Lagrangian, q: &SpectralField) -> f64 {
    let grid = q.grid;
    let v = d_t(q);
    let d = lag.dim();
    let mut qb = vec![Complex64::default(); d];
    let mut vb = vec![Complex64::default(); d];
    let mut acc = 0.0;
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            node_slices(q, &v, i1, i2, &mut qb, &mut vb);
            acc += lag.eval((i1, i2), &qb, &vb);
        }
    }
    acc * grid.cell_area()
}

/// Euler-Lagrange residual ∂L/∂q - ∂_t(∂L/∂(∂_t q)) per channel; the
/// conjugate row is implied since L is real. Zero exactly at critical
/// points of S.
pub fn euler_lagrange_residual(lag: &dyn Lagrangian, q: &SpectralField) -> SpectralField {
    let grid = q.grid;
    let v = d_t(q);
    let d = lag.dim();
    let mut qb = vec![Complex64::default(); d];
    let mut vb = vec![Complex64::default(); d];
    let mut gq = vec![Complex64::default(); d];
    let mut gv = vec![Complex64::default(); d];
    let mut dldq = ndarray::Array3::default((d, grid.n1, grid.n2));
    let mut p = ndarray::Array3::default((d, grid.n1, grid.n2));
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            node_slices(q, &v, i1, i2, &mut qb, &mut vb);
            lag.d_q((i1, i2), &qb, &vb, &mut gq);
            lag.d_v((i1, i2), &qb, &vb, &mut gv);
            for ch in 0..d {
                dldq[(ch, i1, i2)] = gq[ch];
                p[(ch, i1, i2)] = gv[ch];
            }
        }
    }
    let dldq = SpectralField::from_values(grid, dldq).expect("shape");
    let p = SpectralField::from_values(grid, p).expect("shape");
    dldq.sub(&d_t(&p))
}

/// Pointwise Legendre condition det((∂²L/∂v∂v̄)² - ∂²L/∂v² · ∂²L/∂v̄²),
/// plus the degeneracy flag at the 1e-8 threshold.
pub struct LegendreCondition {
    pub det: ndarray::Array2<Complex64>,
    pub min_abs: f64,
    pub degenerate: bool,
}

pub const LEGENDRE_DEGENERACY_THRESHOLD: f64 = 1e-8;

pub fn legendre_condition(lag: &dyn Lagrangian, q: &SpectralField) -> LegendreCondition {
    let grid = q.grid;
    let v = d_t(q);
    let d = lag.dim();
    let mut qb = vec![Complex64::default(); d];
    let mut vb = vec![Complex64::default(); d];
    let mut det = ndarray::Array2::default((grid.n1, grid.n2));
    let mut min_abs = f64::INFINITY;
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            node_slices(q, &v, i1, i2, &mut qb, &mut vb);
            let a = lag.d2_vvbar((i1, i2), &qb, &vb);
            let b = lag.d2_vv((i1, i2), &qb, &vb);
            // ∂²L/∂v̄² = conj(∂²L/∂v²) for real L.
            let c = b.map(|x| x.conj());
            let m = &a * &a - &b * &c;
            let value = m.determinant();
            det[(i1, i2)] = value;
            min_abs = min_abs.min(value.norm());
        }
    }
    LegendreCondition {
        det,
        min_abs,
        degenerate: min_abs < LEGENDRE_DEGENERACY_THRESHOLD,
    }
}

/// Result of the Legendre transform: the phase field Z = (q, p) with
/// p = ∂L/∂(∂_t q), plus the bookkeeping checks ∂H/∂p = ∂_t q (fiber
/// round trip) and ∂H/∂q = -∂L/∂q at sampled nodes.
pub struct LegendreTransform {
    pub z: PhaseField,
    pub max_velocity_roundtrip_err: f64,
    pub max_dh_dq_err: f64,
}

pub fn legendre_transform(lag: &dyn Lagrangian, q: &SpectralField) -> Result<LegendreTransform> {
    let grid = q.grid;
    let cond = legendre_condition(lag, q);
    if cond.degenerate {
        return Err(CoreError::SingularLegendre {
            min_det: cond.min_abs,
            threshold: LEGENDRE_DEGENERACY_THRESHOLD,
        });
    }
    let v = d_t(q);
    let d = lag.dim();
    let mut qb = vec![Complex64::default(); d];
    let mut vb = vec![Complex64::default(); d];
    let mut gv = vec![Complex64::default(); d];
    let mut pv = ndarray::Array3::default((d, grid.n1, grid.n2));
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            node_slices(q, &v, i1, i2, &mut qb, &mut vb);
            lag.d_v((i1, i2), &qb, &vb, &mut gv);
            for ch in 0..d {
                pv[(ch, i1, i2)] = gv[ch];
            }
        }
    }
    let p = SpectralField::from_values(grid, pv)?;
    let z = PhaseField::new(q.clone(), p);

    // Bookkeeping at a coarse sample of nodes: recover the velocity from
    // (q, p) by inverting the fiber map from a cold start, and compare
    // ∂H/∂q against -∂L/∂q by differencing H at fixed p.
    let mut max_rt = 0.0f64;
    let mut max_dq = 0.0f64;
    let stride = (grid.n1 / 8).max(1);
    for i1 in (0..grid.n1).step_by(stride) {
        for i2 in (0..grid.n2).step_by(stride) {
            node_slices(q, &v, i1, i2, &mut qb, &mut vb);
            lag.d_v((i1, i2), &qb, &vb, &mut gv);
            let p_node: Vec<Complex64> = gv.clone();
            let recovered = invert_fiber(lag, (i1, i2), &qb, &p_node, None)?;
            let rt: f64 = recovered
                .iter()
                .zip(vb.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            max_rt = max_rt.max(rt);

            // dH/dq_ch numerically at fixed p vs -∂L/∂q.
            let mut gq = vec![Complex64::default(); d];
            lag.d_q((i1, i2), &qb, &vb, &mut gq);
            let h = 1e-6;
            for ch in 0..d {
                for dir in 0..2 {
                    let mut qp = qb.clone();
                    let mut qm = qb.clone();
                    let step = if dir == 0 {
                        Complex64::new(h, 0.0)
                    } else {
                        Complex64::new(0.0, h)
                    };
                    qp[ch] += step;
                    qm[ch] -= step;
                    let hp = hamiltonian_value(lag, (i1, i2), &qp, &p_node, Some(&recovered))?;
                    let hm = hamiltonian_value(lag, (i1, i2), &qm, &p_node, Some(&recovered))?;
                    let fd = (hp - hm) / (2.0 * h);
                    // ∂₁H = 2Re(∂H/∂q), ∂₂H = -2Im(∂H/∂q), with
                    // ∂H/∂q = -∂L/∂q.
                    let expect = if dir == 0 { -2.0 * gq[ch].re } else { 2.0 * gq[ch].im };
                    max_dq = max_dq.max((fd - expect).abs());
                }
            }
        }
    }

    Ok(LegendreTransform {
        z,
        max_velocity_roundtrip_err: max_rt,
        max_dh_dq_err: max_dq,
    })
}

/// H(q, p) = p·v + p̄·v̄ - L(q, v) with v recovered from the fiber map.
pub fn hamiltonian_value(
    lag: &dyn Lagrangian,
    node: (usize, usize),
    q: &[Complex64],
    p: &[Complex64],
    v_guess: Option<&[Complex64]>,
) -> Result<f64> {
    let v = invert_fiber(lag, node, q, p, v_guess)?;
    let mut legendre_term = 0.0;
    for ch in 0..q.len() {
        legendre_term += 2.0 * (p[ch] * v[ch]).re;
    }
    Ok(legendre_term - lag.eval(node, q, &v))
}

/// Solve p = ∂L/∂v(q, v) for v by damped Newton on the 2d-real fiber
/// map, using the analytic Jacobian blocks ∂²L/∂v², ∂²L/∂v∂v̄.
/// Tolerance 1e-12, at most 50 iterations.
pub fn invert_fiber(
    lag: &dyn Lagrangian,
    node: (usize, usize),
    q: &[Complex64],
    p: &[Complex64],
    v_guess: Option<&[Complex64]>,
) -> Result<Vec<Complex64>> {
    let d = q.len();
    let mut v: Vec<Complex64> = match v_guess {
        Some(g) => g.to_vec(),
        None => vec![Complex64::default(); d],
    };
    let tol = 1e-12;
    let mut gv = vec![Complex64::default(); d];

    let residual = |lag: &dyn Lagrangian, v: &[Complex64], gv: &mut [Complex64]| -> (Vec<Complex64>, f64) {
        lag.d_v(node, q, v, gv);
        let r: Vec<Complex64> = gv.iter().zip(p.iter()).map(|(a, b)| a - b).collect();
        let n = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        (r, n)
    };

    let (mut r, mut rnorm) = residual(lag, &v, &mut gv);
    for iter in 0..50 {
        if rnorm <= tol {
            return Ok(v);
        }
        // Real 2d x 2d Jacobian of v ↦ ∂L/∂v: δr = B δv + C conj(δv)
        // with B = ∂²L/∂v², C = ∂²L/∂v∂v̄.
        let b = lag.d2_vv(node, q, &v);
        let c = lag.d2_vvbar(node, q, &v);
        let mut jac = DMatrix::<f64>::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let bij = b[(i, j)];
                let cij = c[(i, j)];
                // d(r_i)/d(Re v_j), d(r_i)/d(Im v_j) split into Re/Im rows.
                jac[(2 * i, 2 * j)] = bij.re + cij.re;
                jac[(2 * i, 2 * j + 1)] = -bij.im + cij.im;
                jac[(2 * i + 1, 2 * j)] = bij.im + cij.im;
                jac[(2 * i + 1, 2 * j + 1)] = bij.re - cij.re;
            }
        }
        let mut rhs = DVector::<f64>::zeros(2 * d);
        for i in 0..d {
            rhs[2 * i] = -r[i].re;
            rhs[2 * i + 1] = -r[i].im;
        }
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or(CoreError::FiberInversionFailed {
                iters: iter,
                residual: rnorm,
            })?;
        // Damped update: halve until the residual decreases.
        let mut lambda = 1.0;
        loop {
            let trial: Vec<Complex64> = v
                .iter()
                .enumerate()
                .map(|(i, x)| x + lambda * Complex64::new(delta[2 * i], delta[2 * i + 1]))
                .collect();
            let (tr, tn) = residual(lag, &trial, &mut gv);
            if tn < rnorm || lambda < 1.0 / 64.0 {
                v = trial;
                r = tr;
                rnorm = tn;
                break;
            }
            lambda *= 0.5;
        }
        let _ = &r;
    }
    if rnorm <= tol {
        Ok(v)
    } else {
        Err(CoreError::FiberInversionFailed {
            iters: 50,
            residual: rnorm,
        })
    }
}
