//! Time-local generator assembly and trajectory integration.
//!
//! The generator is K(t) X = -i[H(t), X] + sum_i gamma_i(t) (A_i X A_i†
//! - {A_i†A_i, X}/2). Rates may go negative; that is the whole point.
//! The state rho and its parameter derivative d_theta rho obey the same
//! linear equation and are advanced together through identical RK4 stages.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::operators::{anticommutator, commutator, eigh_default, ComplexMatrix, LinalgError};

/// Deepest step-halving recursion before giving up on a step.
const MAX_HALVING_DEPTH: u32 = 24;

/// Hard validity bounds for integrated states.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
pub const POSITIVITY_FLOOR: f64 = -1e-8;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: generator dim {0}, operand dim {1}")]
    DimensionMismatch(usize, usize),
    #[error("rate singularity at t = {t:.6}: {message}")]
    RateSingularity { t: f64, message: String },
    #[error("step size underflow at t = {t:.6} (depth {depth})")]
    StepSizeUnderflow { t: f64, depth: u32 },
    #[error("invariant violation at t = {t:.6}: {what}")]
    InvariantViolation { t: f64, what: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Error raised by a rate function inside its singularity guard band.
#[derive(Debug, Clone, Error)]
#[error("rate diverges at t = {t:.6}: |h| = {h_abs:.3e} within guard {guard:.3e}")]
pub struct RateSingularity {
    pub t: f64,
    pub h_abs: f64,
    pub guard: f64,
}

pub type RateFn = Arc<dyn Fn(f64) -> Result<f64, RateSingularity> + Send + Sync>;
pub type OperatorFn = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

/// One dissipative channel: a decay rate gamma_i(t), possibly negative, and a
/// jump operator A_i(t).
#[derive(Clone)]
pub struct DissipativeChannel {
    pub rate: RateFn,
    pub jump: OperatorFn,
}

impl DissipativeChannel {
    pub fn new(rate: RateFn, jump: OperatorFn) -> Self {
        Self { rate, jump }
    }

    /// Constant rate, constant jump operator.
    pub fn constant(rate: f64, jump: ComplexMatrix) -> Self {
        Self {
            rate: Arc::new(move |_| Ok(rate)),
            jump: Arc::new(move |_| jump.clone()),
        }
    }

    /// Time-dependent rate with a fixed jump operator.
    pub fn with_rate_fn<F>(rate: F, jump: ComplexMatrix) -> Self
    where
        F: Fn(f64) -> Result<f64, RateSingularity> + Send + Sync + 'static,
    {
        Self {
            rate: Arc::new(rate),
            jump: Arc::new(move |_| jump.clone()),
        }
    }
}

/// The time-local generator K(t): Hamiltonian plus dissipative channels.
#[derive(Clone)]
pub struct TimeLocalGenerator {
    dim: usize,
    pub hamiltonian: OperatorFn,
    pub channels: Vec<DissipativeChannel>,
}

impl TimeLocalGenerator {
    pub fn new(dim: usize, hamiltonian: OperatorFn, channels: Vec<DissipativeChannel>) -> Self {
        Self {
            dim,
            hamiltonian,
            channels,
        }
    }

    /// Purely dissipative generator (H = 0).
    pub fn dissipative(dim: usize, channels: Vec<DissipativeChannel>) -> Self {
        Self::new(dim, Arc::new(move |_| ComplexMatrix::zeros(dim)), channels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Apply K(t) to a Hermitian operand X.
pub fn apply_generator(
    gen: &TimeLocalGenerator,
    t: f64,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix, DynamicsError> {
    if x.dim() != gen.dim {
        return Err(DynamicsError::DimensionMismatch(gen.dim, x.dim()));
    }
    let h = (gen.hamiltonian)(t);
    if h.dim() != gen.dim {
        return Err(DynamicsError::DimensionMismatch(gen.dim, h.dim()));
    }
    if h.hermiticity_deviation() > 1e-10 * h.max_norm().max(1.0) {
        return Err(DynamicsError::InvariantViolation {
            t,
            what: "Hamiltonian is not Hermitian".into(),
        });
    }
    let mut out = commutator(&h, x)?.scale(C64::new(0.0, -1.0));
    for ch in &gen.channels {
        let gamma = (ch.rate)(t).map_err(|e| DynamicsError::RateSingularity {
            t,
            message: e.to_string(),
        })?;
        let a = (ch.jump)(t);
        if a.dim() != gen.dim {
            return Err(DynamicsError::DimensionMismatch(gen.dim, a.dim()));
        }
        let a_dag = a.dagger();
        let sandwich = &(&a * x) * &a_dag;
        let n_op = &a_dag * &a;
        let anti = anticommutator(&n_op, x)?;
        out = &out + &(&sandwich - &anti.scale_re(0.5)).scale_re(gamma);
    }
    Ok(out)
}

/// Density matrix with validated invariants.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate Hermiticity (1e-9), unit trace (1e-9) and numerical
    /// positivity (min eigenvalue >= -1e-8).
    pub fn new(matrix: ComplexMatrix) -> Result<Self, DynamicsError> {
        let dev = matrix.hermiticity_deviation();
        if dev > 1e-9 {
            return Err(DynamicsError::InvariantViolation {
                t: f64::NAN,
                what: format!("density matrix not Hermitian (deviation {dev:.3e})"),
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(DynamicsError::InvariantViolation {
                t: f64::NAN,
                what: format!("trace {tr} differs from 1"),
            });
        }
        let es = eigh_default(&matrix)?;
        if es.values[0] < POSITIVITY_FLOOR {
            return Err(DynamicsError::InvariantViolation {
                t: f64::NAN,
                what: format!("min eigenvalue {:.3e} below positivity floor", es.values[0]),
            });
        }
        Ok(Self {
            matrix: matrix.symmetrize(),
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Bloch components (Tr[rho sigma_k]) of a qubit state.
    pub fn bloch(&self) -> [f64; 3] {
        assert_eq!(self.dim(), 2, "Bloch vector requires a qubit state");
        let m = &self.matrix;
        let bx = 2.0 * m.get(0, 1).re;
        let by = -2.0 * m.get(0, 1).im;
        let bz = m.get(0, 0).re - m.get(1, 1).re;
        [bx, by, bz]
    }
}

/// Stepper selection for [`co_integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepperConfig {
    /// Classic fixed-step RK4, one step per grid interval.
    FixedRk4,
    /// RK4 with step-halving error control: a full step is compared against
    /// two half steps and recursively subdivided until the per-step
    /// difference is within `tol`.
    Halving { tol: f64 },
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig::FixedRk4
    }
}

/// Trajectory of (rho, d_theta rho) pairs on a time grid for one parameter
/// value.
#[derive(Clone, Debug)]
pub struct ParamTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub param_derivs: Vec<ComplexMatrix>,
    pub theta: f64,
}

impl ParamTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One RK4 step advancing rho and d_theta rho through identical stages.
pub fn rk4_step_pair(
    gen: &TimeLocalGenerator,
    t: f64,
    dt: f64,
    rho: &ComplexMatrix,
    drho: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix), DynamicsError> {
    let step_one = |x: &ComplexMatrix| -> Result<ComplexMatrix, DynamicsError> {
        let k1 = apply_generator(gen, t, x)?;
        let k2 = apply_generator(gen, t + 0.5 * dt, &(x + &k1.scale_re(0.5 * dt)))?;
        let k3 = apply_generator(gen, t + 0.5 * dt, &(x + &k2.scale_re(0.5 * dt)))?;
        let k4 = apply_generator(gen, t + dt, &(x + &k3.scale_re(dt)))?;
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_re(2.0);
        Ok(x + &incr.scale_re(dt / 6.0))
    };
    Ok((step_one(rho)?, step_one(drho)?))
}

/// Advance one grid interval under the configured stepper, symmetrizing the
/// results.
pub fn advance_pair(
    gen: &TimeLocalGenerator,
    t: f64,
    dt: f64,
    rho: &ComplexMatrix,
    drho: &ComplexMatrix,
    stepper: StepperConfig,
) -> Result<(ComplexMatrix, ComplexMatrix), DynamicsError> {
    advance_interval(gen, t, dt, rho, drho, stepper, 0)
}

fn advance_interval(
    gen: &TimeLocalGenerator,
    t: f64,
    dt: f64,
    rho: &ComplexMatrix,
    drho: &ComplexMatrix,
    stepper: StepperConfig,
    depth: u32,
) -> Result<(ComplexMatrix, ComplexMatrix), DynamicsError> {
    match stepper {
        StepperConfig::FixedRk4 => {
            let (r, d) = rk4_step_pair(gen, t, dt, rho, drho)?;
            Ok((r.symmetrize(), d.symmetrize()))
        }
        StepperConfig::Halving { tol } => {
            if depth >= MAX_HALVING_DEPTH {
                return Err(DynamicsError::StepSizeUnderflow { t, depth });
            }
            let (full_r, full_d) = rk4_step_pair(gen, t, dt, rho, drho)?;
            let (half_r, half_d) = rk4_step_pair(gen, t, 0.5 * dt, rho, drho)?;
            let (two_r, two_d) = rk4_step_pair(gen, t + 0.5 * dt, 0.5 * dt, &half_r, &half_d)?;
            let err = (&full_r - &two_r).max_norm().max((&full_d - &two_d).max_norm());
            if err <= tol {
                Ok((two_r.symmetrize(), two_d.symmetrize()))
            } else {
                let (mid_r, mid_d) =
                    advance_interval(gen, t, 0.5 * dt, rho, drho, stepper, depth + 1)?;
                advance_interval(gen, t + 0.5 * dt, 0.5 * dt, &mid_r, &mid_d, stepper, depth + 1)
            }
        }
    }
}

/// Integrate rho(t) and d_theta rho(t) on `t_grid`, checking state invariants
/// at every grid point. Trace renormalization is never applied; drift beyond
/// [`TRACE_DRIFT_LIMIT`] aborts the run.
pub fn co_integrate(
    gen: &TimeLocalGenerator,
    rho0: &DensityMatrix,
    drho0: &ComplexMatrix,
    t_grid: &[f64],
    stepper: StepperConfig,
    theta: f64,
) -> Result<ParamTrajectory, DynamicsError> {
    assert!(!t_grid.is_empty(), "time grid must be nonempty");
    assert!(
        t_grid.windows(2).all(|w| w[1] > w[0]),
        "time grid must be strictly increasing"
    );
    if rho0.dim() != gen.dim {
        return Err(DynamicsError::DimensionMismatch(gen.dim, rho0.dim()));
    }
    if drho0.dim() != gen.dim {
        return Err(DynamicsError::DimensionMismatch(gen.dim, drho0.dim()));
    }
    if drho0.trace().norm() > 1e-9 {
        return Err(DynamicsError::InvariantViolation {
            t: t_grid[0],
            what: "initial parameter derivative is not traceless".into(),
        });
    }

    let n = t_grid.len();
    let mut states = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    states.push(rho0.clone());
    derivs.push(drho0.symmetrize());

    let mut rho = rho0.matrix().clone();
    let mut drho = drho0.symmetrize();
    for w in t_grid.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        let dt = t_next - t;
        let (r, d) = advance_interval(gen, t, dt, &rho, &drho, stepper, 0)?;
        rho = r;
        drho = d;
        check_state_invariants(&rho, &drho, t_next)?;
        states.push(DensityMatrix {
            matrix: rho.clone(),
        });
        derivs.push(drho.clone());
    }

    Ok(ParamTrajectory {
        times: t_grid.to_vec(),
        states,
        param_derivs: derivs,
        theta,
    })
}

fn check_state_invariants(
    rho: &ComplexMatrix,
    drho: &ComplexMatrix,
    t: f64,
) -> Result<(), DynamicsError> {
    rho.check_finite()?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_DRIFT_LIMIT || tr.im.abs() > TRACE_DRIFT_LIMIT {
        return Err(DynamicsError::InvariantViolation {
            t,
            what: format!("trace drift: trace = {tr}"),
        });
    }
    let es = eigh_default(rho)?;
    if es.values[0] < POSITIVITY_FLOOR {
        return Err(DynamicsError::InvariantViolation {
            t,
            what: format!("min eigenvalue {:.3e} below positivity floor", es.values[0]),
        });
    }
    if drho.trace().norm() > 1e-9 {
        return Err(DynamicsError::InvariantViolation {
            t,
            what: "parameter derivative trace drifted from 0".into(),
        });
    }
    Ok(())
}

/// Independent oracle for the co-propagated parameter derivative: integrate
/// the theta +- delta trajectories separately and centrally difference them.
pub fn finite_diff_param_deriv(
    gen: &TimeLocalGenerator,
    rho0_plus: &DensityMatrix,
    rho0_minus: &DensityMatrix,
    t_grid: &[f64],
    stepper: StepperConfig,
    delta: f64,
) -> Result<Vec<ComplexMatrix>, DynamicsError> {
    assert!(delta > 0.0, "delta must be positive");
    let zero = ComplexMatrix::zeros(gen.dim());
    let plus = co_integrate(gen, rho0_plus, &zero, t_grid, stepper, 0.0)?;
    let minus = co_integrate(gen, rho0_minus, &zero, t_grid, stepper, 0.0)?;
    Ok(plus
        .states
        .iter()
        .zip(&minus.states)
        .map(|(p, m)| (p.matrix() - m.matrix()).scale_re(0.5 / delta))
        .collect())
}

/// Uniform grid 0, dt, 2 dt, ..., covering [0, t_max].
pub fn uniform_grid(t_max: f64, dt: f64) -> Vec<f64> {
    assert!(t_max > 0.0 && dt > 0.0);
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli_x, pauli_y, pauli_z, sigma_minus, C64};

    fn probe_x() -> DensityMatrix {
        // (I + sigma_x)/2
        let m = &ComplexMatrix::identity(2).scale_re(0.5) + &pauli_x().scale_re(0.5);
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn coherent_part_only() {
        // Hand oracle: K X = -i [sigma_z/2, (I + sigma_x)/2] = sigma_y / 2.
        let gen = TimeLocalGenerator::new(
            2,
            Arc::new(|_| pauli_z().scale_re(0.5)),
            vec![],
        );
        let out = apply_generator(&gen, 0.0, probe_x().matrix()).unwrap();
        assert!((&out - &pauli_y().scale_re(0.5)).max_norm() < 1e-15);
        assert!(out.trace().norm() < 1e-15);
    }

    #[test]
    fn maximally_mixed_fixed_by_unital_action() {
        // A unitary jump operator makes the channel unital; I/dim is fixed.
        let gen = TimeLocalGenerator::new(
            2,
            Arc::new(|_| pauli_z()),
            vec![DissipativeChannel::constant(0.7, pauli_x())],
        );
        let x = ComplexMatrix::identity(2).scale_re(0.5);
        let out = apply_generator(&gen, 0.3, &x).unwrap();
        assert!(out.max_norm() < 1e-15);
    }

    #[test]
    fn amplitude_damping_on_excited_state() {
        // Substituting sigma- by hand: K |e><e| = gamma (|g><g| - |e><e|).
        let gamma = 1.3;
        let gen = TimeLocalGenerator::dissipative(
            2,
            vec![DissipativeChannel::constant(gamma, sigma_minus())],
        );
        let excited = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]);
        let out = apply_generator(&gen, 0.0, &excited).unwrap();
        let expected = ComplexMatrix::from_real(2, &[-gamma, 0.0, 0.0, gamma]);
        assert!((&out - &expected).max_norm() < 1e-15);
    }

    #[test]
    fn generator_output_traceless() {
        let gen = TimeLocalGenerator::new(
            2,
            Arc::new(|t: f64| pauli_z().scale_re(0.5 + 0.1 * t)),
            vec![DissipativeChannel::constant(0.4, sigma_minus())],
        );
        let out = apply_generator(&gen, 1.7, probe_x().matrix()).unwrap();
        assert!(out.trace().norm() < 1e-14);
        assert!(out.hermiticity_deviation() < 1e-14);
    }

    #[test]
    fn unitary_evolution_is_isospectral() {
        let gen = TimeLocalGenerator::new(2, Arc::new(|_| pauli_x().scale_re(0.8)), vec![]);
        let grid = uniform_grid(2.0, 1e-3);
        let traj = co_integrate(
            &gen,
            &probe_x(),
            &ComplexMatrix::zeros(2),
            &grid,
            StepperConfig::FixedRk4,
            0.0,
        )
        .unwrap();
        let initial = eigh_default(probe_x().matrix()).unwrap().values;
        for s in traj.states.iter().step_by(200) {
            assert!((s.matrix().trace().re - 1.0).abs() < 1e-9);
            let vals = eigh_default(s.matrix()).unwrap().values;
            for (a, b) in vals.iter().zip(&initial) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trivial_generator_is_identity_dynamics() {
        let gen = TimeLocalGenerator::dissipative(
            2,
            vec![DissipativeChannel::constant(0.0, sigma_minus())],
        );
        let grid = uniform_grid(1.0, 0.01);
        let traj = co_integrate(
            &gen,
            &probe_x(),
            &ComplexMatrix::zeros(2),
            &grid,
            StepperConfig::FixedRk4,
            0.0,
        )
        .unwrap();
        for s in &traj.states {
            assert!((s.matrix() - probe_x().matrix()).max_norm() < 1e-15);
        }
    }

    #[test]
    fn linearity_of_integration() {
        let gen = TimeLocalGenerator::new(
            2,
            Arc::new(|_| pauli_z().scale_re(0.5)),
            vec![DissipativeChannel::constant(0.6, sigma_minus())],
        );
        let rho1 = probe_x();
        let rho2 = DensityMatrix::new(ComplexMatrix::from_real(2, &[0.9, 0.0, 0.0, 0.1])).unwrap();
        let alpha = 0.3;
        let mix = DensityMatrix::new(
            &rho1.matrix().scale_re(alpha) + &rho2.matrix().scale_re(1.0 - alpha),
        )
        .unwrap();
        let grid = uniform_grid(1.0, 1e-3);
        let zero = ComplexMatrix::zeros(2);
        let t1 = co_integrate(&gen, &rho1, &zero, &grid, StepperConfig::FixedRk4, 0.0).unwrap();
        let t2 = co_integrate(&gen, &rho2, &zero, &grid, StepperConfig::FixedRk4, 0.0).unwrap();
        let tm = co_integrate(&gen, &mix, &zero, &grid, StepperConfig::FixedRk4, 0.0).unwrap();
        for k in (0..grid.len()).step_by(100) {
            let combo = &t1.states[k].matrix().scale_re(alpha)
                + &t2.states[k].matrix().scale_re(1.0 - alpha);
            assert!((&combo - tm.states[k].matrix()).max_norm() < 1e-12);
        }
    }

    #[test]
    fn finite_diff_matches_zero_for_theta_independent_family() {
        let gen = TimeLocalGenerator::dissipative(
            2,
            vec![DissipativeChannel::constant(0.5, sigma_minus())],
        );
        let grid = uniform_grid(0.5, 1e-2);
        let series = finite_diff_param_deriv(
            &gen,
            &probe_x(),
            &probe_x(),
            &grid,
            StepperConfig::FixedRk4,
            1e-5,
        )
        .unwrap();
        for m in &series {
            assert!(m.max_norm() < 1e-12);
        }
    }

    #[test]
    fn phase_family_derivative_at_t0() {
        // rho(theta) = e^{i theta sz/2} rho e^{-i theta sz/2};
        // analytic derivative at theta = 0 is i[sz/2, rho].
        let rho = probe_x();
        let delta = 1e-5;
        let rotate = |theta: f64| -> DensityMatrix {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let u = ComplexMatrix::from_slice(
                2,
                &[
                    C64::new(c, s),
                    C64::new(0.0, 0.0),
                    C64::new(0.0, 0.0),
                    C64::new(c, -s),
                ],
            );
            DensityMatrix::new(&(&u * rho.matrix()) * &u.dagger()).unwrap()
        };
        let fd = (rotate(delta).matrix() - rotate(-delta).matrix()).scale_re(0.5 / delta);
        let analytic = commutator(&pauli_z().scale_re(0.5), rho.matrix())
            .unwrap()
            .scale(C64::new(0.0, 1.0));
        assert!((&fd - &analytic).max_norm() < 10.0 * delta * delta + 1e-11);
    }

    #[test]
    fn halving_stepper_agrees_with_fixed() {
        let gen = TimeLocalGenerator::new(
            2,
            Arc::new(|_| pauli_z().scale_re(0.5)),
            vec![DissipativeChannel::constant(0.6, sigma_minus())],
        );
        let grid = uniform_grid(1.0, 1e-2);
        let zero = ComplexMatrix::zeros(2);
        let fixed =
            co_integrate(&gen, &probe_x(), &zero, &grid, StepperConfig::FixedRk4, 0.0).unwrap();
        let halved = co_integrate(
            &gen,
            &probe_x(),
            &zero,
            &grid,
            StepperConfig::Halving { tol: 1e-10 },
            0.0,
        )
        .unwrap();
        let last = grid.len() - 1;
        assert!(
            (fixed.states[last].matrix() - halved.states[last].matrix()).max_norm() < 1e-8
        );
    }

    #[test]
    fn rejects_non_traceless_initial_deriv() {
        let gen = TimeLocalGenerator::dissipative(
            2,
            vec![DissipativeChannel::constant(0.5, sigma_minus())],
        );
        let bad = ComplexMatrix::identity(2);
        let err = co_integrate(
            &gen,
            &probe_x(),
            &bad,
            &[0.0, 0.1],
            StepperConfig::FixedRk4,
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, DynamicsError::InvariantViolation { .. }));
    }
}
