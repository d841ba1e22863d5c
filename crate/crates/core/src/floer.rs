//! Gradient-flow integration of the Floer equations
//!
//!   ½∂_s Z + ∂̸Z = (∂_q̄, ∂_q, ∂_p̄, ∂_p) H̃^{ρ,r}(Z),
//!
//! i.e. ∂_s Z = -grad A where A is the (homotopy) action. The linear
//! part ∂_s Z = (P - 2∂̸)Z is advanced exactly in Fourier space; the
//! nonlinearity is handled by an ETD-RK2 stage pair with 2/3-rule
//! dealiasing.
//!
//! The action is strongly indefinite: every spatial mode carries an
//! expanding eigendirection with rate ½(1+√(1+4m₁²+4m₂²)) alongside the
//! contracting one. Forward integration therefore converges only from
//! data whose expanding components stay switched off — exact constants
//! with p = 0 under split potentials (the invariant sector in which the
//! homotopy experiments run), or data projected onto the contracting
//! subspace. Generic data diverges and is reported as such.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::hamiltonian::{
    action_scaled, grad_f_tilde, grad_h_scaled, hofer_norm, HamiltonianSpec,
};
use crate::ops::{d_t, d_tbar, slashed_del};
use crate::phase::PhaseField;

// ---------------------------------------------------------------------
// Homotopy profile β_r
// ---------------------------------------------------------------------

/// The switching profile β_r: zero outside [-1, (2d+1)r+1], equal to
/// min(r,1) on the plateau [0, (2d+1)r] (so ≡ 1 for r ≥ 1), with C²
/// quintic ramps of slope ≤ 15/8 < 2, nonnegative going up and
/// nonpositive going down. β_r → 0 pointwise as r → 0⁺.
#[derive(Debug, Clone, Copy)]
pub enum HomotopyProfile {
    /// β ≡ 1: the fixed-nonlinearity Floer flow.
    ConstantOne,
    Switched {
        r: f64,
        d: usize,
    },
}

fn quintic(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

fn quintic_d1(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

impl HomotopyProfile {
    pub fn switched(r: f64, d: usize) -> Self {
        assert!(r >= 0.0);
        Self::Switched { r, d }
    }

    /// End of the unit-amplitude plateau, (2d+1)·r.
    pub fn plateau_end(&self) -> f64 {
        match self {
            Self::ConstantOne => f64::INFINITY,
            Self::Switched { r, d } => (2 * d + 1) as f64 * r,
        }
    }

    /// s beyond which β vanishes identically.
    pub fn support_end(&self) -> f64 {
        match self {
            Self::ConstantOne => f64::INFINITY,
            Self::Switched { .. } => self.plateau_end() + 1.0,
        }
    }

    pub fn beta(&self, s: f64) -> f64 {
        match self {
            Self::ConstantOne => 1.0,
            Self::Switched { r, .. } => {
                let amp = r.min(1.0);
                let l = self.plateau_end();
                if s <= -1.0 || s >= l + 1.0 {
                    0.0
                } else if s < 0.0 {
                    amp * quintic(s + 1.0)
                } else if s <= l {
                    amp
                } else {
                    amp * quintic(l + 1.0 - s)
                }
            }
        }
    }

    pub fn beta_prime(&self, s: f64) -> f64 {
        match self {
            Self::ConstantOne => 0.0,
            Self::Switched { r, .. } => {
                let amp = r.min(1.0);
                let l = self.plateau_end();
                if s <= -1.0 || s >= l + 1.0 {
                    0.0
                } else if s < 0.0 {
                    amp * quintic_d1(s + 1.0)
                } else if s <= l {
                    0.0
                } else {
                    -amp * quintic_d1(l + 1.0 - s)
                }
            }
        }
    }
}

/// Convenience for the spec-level profile family (target T^{2d}).
pub fn beta(r: f64, d: usize, s: f64) -> f64 {
    HomotopyProfile::switched(r, d).beta(s)
}

// ---------------------------------------------------------------------
// Flow right-hand side
// ---------------------------------------------------------------------

/// ∂_s Z = 2(∇H̃^{ρ,r} - ∂̸Z) with the nonlinearity scaled by β_r(s);
/// equal to -grad of the frozen-s action. Stationary exactly at
/// solutions of the Hamilton equations (for β = 1).
pub fn floer_rhs(
    spec: &HamiltonianSpec,
    profile: &HomotopyProfile,
    s: f64,
    z: &PhaseField,
) -> PhaseField {
    grad_h_scaled(spec, z, profile.beta(s))
        .sub(&slashed_del(z))
        .scale(2.0)
}

// ---------------------------------------------------------------------
// ETD-RK2 stepper
// ---------------------------------------------------------------------

/// 2×2 complex matrix in row-major order.
type Block = [Complex64; 4];

fn block_mul(m: &Block, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
    (m[0] * v.0 + m[1] * v.1, m[2] * v.0 + m[3] * v.1)
}

/// φ₁(x) = (e^x - 1)/x, φ₂(x) = (e^x - 1 - x)/x² for real x, evaluated
/// stably through expm1 and short series near zero.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-7 {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        x.exp_m1() / x
    }
}

fn phi2(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

#[derive(Clone)]
struct ModeProps {
    exp_a: Block,
    p1_a: Block,
    p2_a: Block,
    exp_b: Block,
    p1_b: Block,
    p2_b: Block,
}

/// Exponential-integrator state for a fixed grid and step size. The
/// generator P - 2∂̸ is Hermitian and block-diagonal per mode, pairing
/// slots (q, p̄) and (q̄, p) in 2×2 blocks [[0, w], [w̄, 1]] with
/// |w|² = m₁²+m₂²; eigenvalues x± = ½(1 ± √(1+4|w|²)) give closed-form
/// matrix functions through spectral projectors.
pub struct EtdStepper {
    grid: TorusGrid,
    pub ds: f64,
    props: Vec<ModeProps>,
}

fn matrix_functions(w: Complex64, h: f64) -> (Block, Block, Block) {
    let musq = w.norm_sqr();
    let root = (1.0 + 4.0 * musq).sqrt();
    let x_plus = 0.5 * (1.0 + root);
    let x_minus = 0.5 * (1.0 - root);
    // Spectral projectors of M = [[0, w], [w̄, 1]].
    let m: Block = [
        Complex64::default(),
        w,
        w.conj(),
        Complex64::new(1.0, 0.0),
    ];
    let denom = x_plus - x_minus;
    let proj = |shift: f64| -> Block {
        // (M - shift·I)/denom
        [
            (m[0] - shift) / denom,
            m[1] / denom,
            m[2] / denom,
            (m[3] - shift) / denom,
        ]
    };
    let pi_plus = proj(x_minus);
    let pi_minus = {
        let p = proj(x_plus);
        [-p[0], -p[1], -p[2], -p[3]]
    };
    let combine = |f: &dyn Fn(f64) -> f64| -> Block {
        let fp = f(x_plus * h);
        let fm = f(x_minus * h);
        [
            fp * pi_plus[0] + fm * pi_minus[0],
            fp * pi_plus[1] + fm * pi_minus[1],
            fp * pi_plus[2] + fm * pi_minus[2],
            fp * pi_plus[3] + fm * pi_minus[3],
        ]
    };
    let e = combine(&|x| x.exp());
    let p1 = combine(&|x| h * phi1(x));
    let p2 = combine(&|x| h * phi2(x));
    (e, p1, p2)
}

impl EtdStepper {
    pub fn new(grid: TorusGrid, ds: f64) -> Self {
        let modes1 = TorusGrid::deriv_modes(grid.n1);
        let modes2 = TorusGrid::deriv_modes(grid.n2);
        let mut props = Vec::with_capacity(grid.n1 * grid.n2);
        for k1 in 0..grid.n1 {
            for k2 in 0..grid.n2 {
                let m1 = modes1[k1];
                let m2 = modes2[k2];
                // Block A couples (q, p̄) via w_a = i m₁ - m₂; block B
                // couples (q̄, p) via w_b = i m₁ + m₂.
                let w_a = Complex64::new(-m2, m1);
                let w_b = Complex64::new(m2, m1);
                let (exp_a, p1_a, p2_a) = matrix_functions(w_a, ds);
                let (exp_b, p1_b, p2_b) = matrix_functions(w_b, ds);
                props.push(ModeProps {
                    exp_a,
                    p1_a,
                    p2_a,
                    exp_b,
                    p1_b,
                    p2_b,
                });
            }
        }
        Self { grid, ds, props }
    }

    /// Mode-wise linear combination out = E·z + P1·n (or P2 in place of
    /// P1), handling the (q, p̄)/(q̄, p) block pairing.
    fn apply_pair(
        &self,
        z: &PhaseField,
        n: Option<(&PhaseField, bool)>,
        use_exp: bool,
    ) -> PhaseField {
        let grid = self.grid;
        let (n1, n2) = (grid.n1, grid.n2);
        let mut qc = z.q.coeffs().clone();
        let mut pc = z.p.coeffs().clone();
        for ch in 0..grid.d {
            for k1 in 0..n1 {
                for k2 in 0..n2 {
                    let idx = k1 * n2 + k2;
                    let props = &self.props[idx];
                    let j1 = TorusGrid::neg_index(k1, n1);
                    let j2 = TorusGrid::neg_index(k2, n2);
                    let y_a = (
                        z.q.coeffs()[(ch, k1, k2)],
                        z.p.coeffs()[(ch, j1, j2)].conj(),
                    );
                    let y_b = (
                        z.q.coeffs()[(ch, j1, j2)].conj(),
                        z.p.coeffs()[(ch, k1, k2)],
                    );
                    let (mut out_a, mut out_b) = if use_exp {
                        (block_mul(&props.exp_a, y_a), block_mul(&props.exp_b, y_b))
                    } else {
                        ((Complex64::default(), Complex64::default()), (Complex64::default(), Complex64::default()))
                    };
                    if let Some((nf, second)) = n {
                        let n_a = (
                            nf.q.coeffs()[(ch, k1, k2)],
                            nf.p.coeffs()[(ch, j1, j2)].conj(),
                        );
                        let n_b = (
                            nf.q.coeffs()[(ch, j1, j2)].conj(),
                            nf.p.coeffs()[(ch, k1, k2)],
                        );
                        let (pa, pb) = if second {
                            (&props.p2_a, &props.p2_b)
                        } else {
                            (&props.p1_a, &props.p1_b)
                        };
                        let add_a = block_mul(pa, n_a);
                        let add_b = block_mul(pb, n_b);
                        out_a.0 += add_a.0;
                        out_a.1 += add_a.1;
                        out_b.0 += add_b.0;
                        out_b.1 += add_b.1;
                    }
                    qc[(ch, k1, k2)] = out_a.0;
                    pc[(ch, k1, k2)] = out_b.1;
                }
            }
        }
        PhaseField {
            q: SpectralField::from_coeffs(grid, qc).expect("shape"),
            p: SpectralField::from_coeffs(grid, pc).expect("shape"),
        }
    }

    /// Exact application of the linear generator (P - 2∂̸) (no stepping).
    pub fn apply_generator(z: &PhaseField) -> PhaseField {
        let half_p = PhaseField {
            q: SpectralField::zeros(z.grid(), z.grid().d),
            p: z.p.clone(),
        };
        half_p.sub(&slashed_del(z).scale(2.0))
    }
}

/// Nonlinear ETD source 2β·∇F̃(Z), dealiased by the 2/3 rule (the
/// cubic-type products in the gradient alias on the collocation grid).
fn nonlinear_term(
    spec: &HamiltonianSpec,
    profile: &HomotopyProfile,
    s: f64,
    z: &PhaseField,
) -> PhaseField {
    let beta = profile.beta(s);
    if beta == 0.0 {
        return PhaseField::zeros(z.grid());
    }
    grad_f_tilde(spec, z)
        .scale(2.0 * beta)
        .dealias_two_thirds()
}

// ---------------------------------------------------------------------
// Flow driver
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    pub ds: f64,
    pub grad_tol: f64,
    pub sustain_steps: usize,
    pub s_start: f64,
    pub s_max: f64,
    /// Per-step allowance for the frozen-β action comparison.
    pub action_tol: f64,
    /// Retain pointwise energy densities for the subsolution check.
    pub store_density: bool,
    /// sup-norm guard; beyond this the run is declared divergent.
    pub blowup_linf: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            ds: 0.01,
            grad_tol: 1e-9,
            sustain_steps: 100,
            s_start: -1.0,
            s_max: 40.0,
            action_tol: 1e-8,
            store_density: false,
            blowup_linf: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowStatus {
    Converged { s: f64 },
    ReachedSMax,
    StepRejected { s: f64, increase: f64 },
    Diverged { s: f64 },
}

#[derive(Debug, Clone)]
pub struct FlowSample {
    pub s: f64,
    pub action: f64,
    pub grad_norm: f64,
    pub max_p_sq: f64,
    /// ‖∂_s Z‖²_{L²} at this sample (the energy integrand).
    pub ds_z_sq: f64,
    pub e_density: Option<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    pub status: FlowStatus,
    pub config: FlowConfig,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    pub grid: TorusGrid,
}

impl FlowTrajectory {
    pub fn converged(&self) -> bool {
        matches!(self.status, FlowStatus::Converged { .. })
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.samples.last().map(|s| s.grad_norm).unwrap_or(f64::NAN)
    }

    pub fn max_p_sq(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.max_p_sq)
            .fold(0.0, f64::max)
    }
}

/// Pointwise energy density e = ½|∂_s Z|² + |∂_t Z|² + |∂_t̄ Z|²,
/// channels summed, with ∂_s Z supplied by the flow right-hand side.
pub fn energy_density(z: &PhaseField, ds_z: &PhaseField) -> Array2<f64> {
    let grid = z.grid();
    let dtq = d_t(&z.q);
    let dtp = d_t(&z.p);
    let dtbq = d_tbar(&z.q);
    let dtbp = d_tbar(&z.p);
    let mut e = Array2::zeros((grid.n1, grid.n2));
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            let mut acc = 0.0;
            for ch in 0..grid.d {
                acc += 0.5
                    * (ds_z.q.values()[(ch, i1, i2)].norm_sqr()
                        + ds_z.p.values()[(ch, i1, i2)].norm_sqr());
                acc += dtq.values()[(ch, i1, i2)].norm_sqr()
                    + dtp.values()[(ch, i1, i2)].norm_sqr();
                acc += dtbq.values()[(ch, i1, i2)].norm_sqr()
                    + dtbp.values()[(ch, i1, i2)].norm_sqr();
            }
            e[(i1, i2)] = acc;
        }
    }
    e
}

/// One ETD-RK2 step from (s, Z) to (s+ds, Z'). Errors with
/// [`CoreError::StepRejected`] if the frozen-β action increases beyond
/// `action_tol`, and with [`CoreError::NonFinite`] on NaN/Inf.
pub fn step(
    stepper: &EtdStepper,
    spec: &HamiltonianSpec,
    profile: &HomotopyProfile,
    s: f64,
    z: &PhaseField,
    action_tol: f64,
) -> Result<PhaseField> {
    let h = stepper.ds;
    let n1 = nonlinear_term(spec, profile, s, z);
    let stage = stepper.apply_pair(z, Some((&n1, false)), true);
    let n2 = nonlinear_term(spec, profile, s + h, &stage);
    let corr = stepper.apply_pair(&PhaseField::zeros(z.grid()), Some((&n2.sub(&n1), true)), false);
    let z_next = stage.add(&corr);

    if !z_next.is_finite() {
        return Err(CoreError::NonFinite { s: s + h });
    }

    let beta_next = profile.beta(s + h);
    let a_old = action_scaled(spec, z, beta_next);
    let a_new = action_scaled(spec, &z_next, beta_next);
    if a_new > a_old + action_tol {
        return Err(CoreError::StepRejected {
            increase: a_new - a_old,
            tol: action_tol,
        });
    }
    Ok(z_next)
}

/// Integrate the negative gradient flow from Z0. Convergence is
/// declared when the gradient L²-norm stays at or below `grad_tol` for
/// `sustain_steps` consecutive steps.
pub fn run_flow(
    spec: &HamiltonianSpec,
    profile: &HomotopyProfile,
    z0: &PhaseField,
    config: FlowConfig,
) -> FlowTrajectory {
    let grid = z0.grid();
    let stepper = EtdStepper::new(grid, config.ds);
    let r = match profile {
        HomotopyProfile::ConstantOne => None,
        HomotopyProfile::Switched { r, .. } => Some(*r),
    };
    let mut z = z0.clone();
    let mut s = config.s_start;
    let mut samples = Vec::new();
    let mut streak = 0usize;

    let record = |s: f64, z: &PhaseField, samples: &mut Vec<FlowSample>| -> f64 {
        let rhs = floer_rhs(spec, profile, s, z);
        let grad_norm = rhs.norm();
        let e_density = if config.store_density {
            Some(energy_density(z, &rhs))
        } else {
            None
        };
        samples.push(FlowSample {
            s,
            action: action_scaled(spec, z, profile.beta(s)),
            grad_norm,
            max_p_sq: z.max_p_sq(),
            ds_z_sq: grad_norm * grad_norm,
            e_density,
        });
        grad_norm
    };

    let mut grad_norm = record(s, &z, &mut samples);
    let status = loop {
        if grad_norm <= config.grad_tol {
            streak += 1;
            if streak >= config.sustain_steps {
                break FlowStatus::Converged { s };
            }
        } else {
            streak = 0;
        }
        if s >= config.s_max {
            break FlowStatus::ReachedSMax;
        }
        match step(&stepper, spec, profile, s, &z, config.action_tol) {
            Ok(z_next) => {
                z = z_next;
                s += config.ds;
            }
            Err(CoreError::StepRejected { increase, .. }) => {
                break FlowStatus::StepRejected { s, increase };
            }
            Err(CoreError::NonFinite { s: sf }) => {
                break FlowStatus::Diverged { s: sf };
            }
            Err(_) => unreachable!("step emits only rejection and finiteness errors"),
        }
        grad_norm = record(s, &z, &mut samples);
        if z.linf_norm() > config.blowup_linf {
            break FlowStatus::Diverged { s };
        }
    };

    FlowTrajectory {
        samples,
        status,
        config,
        r,
        rho: spec.cutoff.map(|c| c.rho),
        grid,
    }
}

/// Final state of a flow re-run (the driver records diagnostics only;
/// callers needing the converged field re-integrate with this helper).
pub fn flow_final_state(
    spec: &HamiltonianSpec,
    profile: &HomotopyProfile,
    z0: &PhaseField,
    config: FlowConfig,
) -> (PhaseField, FlowStatus) {
    let grid = z0.grid();
    let stepper = EtdStepper::new(grid, config.ds);
    let mut z = z0.clone();
    let mut s = config.s_start;
    let mut streak = 0usize;
    loop {
        let grad_norm = floer_rhs(spec, profile, s, &z).norm();
        if grad_norm <= config.grad_tol {
            streak += 1;
            if streak >= config.sustain_steps {
                return (z, FlowStatus::Converged { s });
            }
        } else {
            streak = 0;
        }
        if s >= config.s_max {
            return (z, FlowStatus::ReachedSMax);
        }
        match step(&stepper, spec, profile, s, &z, config.action_tol) {
            Ok(z_next) => {
                z = z_next;
                s += config.ds;
            }
            Err(CoreError::StepRejected { increase, .. }) => {
                return (z, FlowStatus::StepRejected { s, increase });
            }
            Err(_) => return (z, FlowStatus::Diverged { s }),
        }
        if !z.is_finite() || z.linf_norm() > config.blowup_linf {
            return (z, FlowStatus::Diverged { s });
        }
    }
}

// ---------------------------------------------------------------------
// Diagnostics: energy, maximum principle, density inequality
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EnergyReport {
    /// E = ∫ ‖∂_s Z‖² ds by trapezoidal quadrature over the samples.
    pub total: f64,
    pub hofer_bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Energy of a trajectory against the Hofer-type bound
/// E(Z) ≤ 2‖F̃^ρ‖_Hofer.
pub fn energy(traj: &FlowTrajectory, spec: &HamiltonianSpec) -> EnergyReport {
    let mut total = 0.0;
    for w in traj.samples.windows(2) {
        let ds = w[1].s - w[0].s;
        total += 0.5 * (w[0].ds_z_sq + w[1].ds_z_sq) * ds;
    }
    let hofer_bound = 2.0 * hofer_norm(spec, traj.grid);
    EnergyReport {
        total,
        hofer_bound,
        margin: hofer_bound - total,
        pass: total <= hofer_bound + 1e-9,
    }
}

/// ∫_K e_Z over the window K = [s_lo, s_hi] × T² from stored densities.
pub fn energy_density_window(traj: &FlowTrajectory, s_lo: f64, s_hi: f64) -> Result<f64> {
    let cells: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|smp| smp.s >= s_lo && smp.s <= s_hi)
        .map(|smp| {
            let e = smp.e_density.as_ref().ok_or_else(|| {
                CoreError::InsufficientSResolution("densities were not stored".into())
            })?;
            let mean: f64 = e.iter().sum::<f64>() / e.len() as f64;
            Ok((smp.s, mean * traj.grid.volume()))
        })
        .collect::<Result<_>>()?;
    if cells.len() < 2 {
        return Err(CoreError::InsufficientSResolution(format!(
            "window [{s_lo}, {s_hi}] contains {} samples",
            cells.len()
        )));
    }
    let mut total = 0.0;
    for w in cells.windows(2) {
        total += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    Ok(total)
}

/// Constant C(K) for the window bound ∫_K e ≤ E + C(K), assembled from
/// the cutoff radius, the C¹ bounds of F̃ and the Hofer energy bound:
/// ∫_K e ≤ (3/2)E + 4[(ρ/2 + 2·cₚ²) + c_q²]·vol(K), so
/// C(K) := ½·(2‖F̃‖_Hofer) + 4[(ρ/2 + 2cₚ²) + c_q²]·vol(K).
pub fn window_constant(spec: &HamiltonianSpec, traj: &FlowTrajectory, s_lo: f64, s_hi: f64) -> f64 {
    let b = spec.f_tilde_bounds();
    let rho = spec.cutoff.map(|c| c.rho).unwrap_or(0.0);
    let vol_k = (s_hi - s_lo) * traj.grid.volume();
    let hofer_bound = 2.0 * hofer_norm(spec, traj.grid);
    0.5 * hofer_bound + 4.0 * ((0.5 * rho + 2.0 * b.grad_p * b.grad_p) + b.grad_q * b.grad_q) * vol_k
}

#[derive(Debug, Clone)]
pub struct MaxPrincipleReport {
    pub max_p_sq: f64,
    pub rho: f64,
    pub pass: bool,
}

pub const MAX_PRINCIPLE_TOL: f64 = 1e-6;

/// Lemma-level bound |p(s,t)|² ≤ ρ over the whole trajectory.
pub fn max_principle_check(traj: &FlowTrajectory, rho: f64) -> MaxPrincipleReport {
    let max_p_sq = traj.max_p_sq();
    MaxPrincipleReport {
        max_p_sq,
        rho,
        pass: max_p_sq <= rho + MAX_PRINCIPLE_TOL,
    }
}

#[derive(Debug, Clone)]
pub struct DensityReport {
    pub c: f64,
    pub min_slack: f64,
    pub pass: bool,
}

pub const DENSITY_SLACK_TOL: f64 = -1e-6;

/// Subsolution inequality (∂_s² + Δ)e ≥ -c(1 + e^{3/2}) with the
/// constant assembled from the C³ data of H̃ = ½pp̄ + F̃:
///
///   Le = Σ_{i,j} |∂_jξ_i - ½(J_jσ)ᵀξ_i|² - ¼|(J_jσ)ᵀξ_i|²
///        - ⟨ξ_i, J_j(∇σ·ξ_j)ξ_i⟩
///      ≥ -Σ_{i,j} [¼·M₂²·|ξ_i|² + M₃·|ξ_i|²|ξ_j|]
///      ≥ -9·[½·M₂²·e + 2√2·M₃·e^{3/2}]     (|ξ|² ≤ 2e)
///
/// with M₂ = 1 + sup‖Hess F̃‖ (the 1 from ½pp̄) and M₃ = sup‖∇³F̃‖;
/// Young's inequality e ≤ ⅓ + ⅔e^{3/2} then yields c = (5/3)·c₅ with
/// c₅ = 9·max(½M₂², 2√2·M₃).
pub fn density_constant(spec: &HamiltonianSpec) -> f64 {
    let b = spec.f_tilde_bounds();
    let m2 = 1.0 + b.hess;
    let m3 = b.third;
    let c5 = 9.0 * (0.5 * m2 * m2).max(2.0 * 2.0_f64.sqrt() * m3);
    (5.0 / 3.0) * c5
}

/// Pointwise verification of the subsolution inequality on a stored
/// trajectory: ∂_s² by central differences over the uniform s-grid, Δ
/// spectrally on each density snapshot.
pub fn density_inequality_check(
    traj: &FlowTrajectory,
    spec: &HamiltonianSpec,
) -> Result<DensityReport> {
    let n = traj.samples.len();
    if n < 3 {
        return Err(CoreError::InsufficientSResolution(format!(
            "{n} samples; need at least 3 for second differences"
        )));
    }
    let ds = traj.samples[1].s - traj.samples[0].s;
    for w in traj.samples.windows(2) {
        if ((w[1].s - w[0].s) - ds).abs() > 1e-12 {
            return Err(CoreError::InsufficientSResolution(
                "nonuniform s-sampling".into(),
            ));
        }
    }
    let densities: Vec<&Array2<f64>> = traj
        .samples
        .iter()
        .map(|smp| {
            smp.e_density.as_ref().ok_or_else(|| {
                CoreError::InsufficientSResolution("densities were not stored".into())
            })
        })
        .collect::<Result<_>>()?;

    let grid = traj.grid;
    let c = density_constant(spec);
    let mut min_slack = f64::INFINITY;
    for k in 1..n - 1 {
        let lap = {
            let values = ndarray::Array3::from_shape_fn((1, grid.n1, grid.n2), |(_, i1, i2)| {
                Complex64::new(densities[k][(i1, i2)], 0.0)
            });
            crate::ops::laplacian(&SpectralField::from_values(grid, values)?)
        };
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                let e = densities[k][(i1, i2)];
                let dss =
                    (densities[k + 1][(i1, i2)] - 2.0 * e + densities[k - 1][(i1, i2)]) / (ds * ds);
                let lhs = dss + lap.values()[(0, i1, i2)].re;
                let rhs = -c * (1.0 + e.max(0.0).powf(1.5));
                min_slack = min_slack.min(lhs - rhs);
            }
        }
    }
    Ok(DensityReport {
        c,
        min_slack,
        pass: min_slack >= DENSITY_SLACK_TOL,
    })
}

/// Project a field onto the contracting subspace of the free flow:
/// per mode and block, keep only the component along the eigenvector
/// with nonpositive rate (x₋-direction; at the zero mode this keeps the
/// neutral q-constants and removes the expanding p-constants).
pub fn project_contracting(z: &PhaseField) -> PhaseField {
    let grid = z.grid();
    let (n1, n2) = (grid.n1, grid.n2);
    let modes1 = TorusGrid::deriv_modes(n1);
    let modes2 = TorusGrid::deriv_modes(n2);
    let mut qc = z.q.coeffs().clone();
    let mut pc = z.p.coeffs().clone();
    for ch in 0..grid.d {
        for k1 in 0..n1 {
            for k2 in 0..n2 {
                let m1 = modes1[k1];
                let m2 = modes2[k2];
                let j1 = TorusGrid::neg_index(k1, n1);
                let j2 = TorusGrid::neg_index(k2, n2);
                let w_a = Complex64::new(-m2, m1);
                let w_b = Complex64::new(m2, m1);
                let root = (1.0 + 4.0 * (m1 * m1 + m2 * m2)).sqrt();
                let x_plus = 0.5 * (1.0 + root);
                let x_minus = 0.5 * (1.0 - root);
                let denom = x_plus - x_minus;
                // Π₋ = (x₊·I - M)/(x₊ - x₋) for M = [[0,w],[w̄,1]].
                let proj = |w: Complex64, v: (Complex64, Complex64)| {
                    (
                        (x_plus * v.0 - w * v.1) / denom,
                        (-w.conj() * v.0 + (x_plus - 1.0) * v.1) / denom,
                    )
                };
                let y_a = (
                    z.q.coeffs()[(ch, k1, k2)],
                    z.p.coeffs()[(ch, j1, j2)].conj(),
                );
                let y_b = (
                    z.q.coeffs()[(ch, j1, j2)].conj(),
                    z.p.coeffs()[(ch, k1, k2)],
                );
                let out_a = proj(w_a, y_a);
                let out_b = proj(w_b, y_b);
                qc[(ch, k1, k2)] = out_a.0;
                pc[(ch, k1, k2)] = out_b.1;
            }
        }
    }
    PhaseField {
        q: SpectralField::from_coeffs(grid, qc).expect("shape"),
        p: SpectralField::from_coeffs(grid, pc).expect("shape"),
    }
}
