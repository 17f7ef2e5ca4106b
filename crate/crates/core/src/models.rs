//! Built-in scenarios: the damped Jaynes-Cummings two-level atom with a
//! Lorentzian reservoir, its analytic solution, the optimal phase probe, and
//! a constant-rate Markovian control.
//!
//! The damped JC model works in the interaction picture: the master equation
//! is purely dissipative with a single sigma- channel and rate
//! gamma(t) = -2 h'(t)/h(t), where h is the amplitude-damping envelope
//! determined by the transition strength W and spectral width lambda.

use thiserror::Error;

use crate::dynamics::{
    DensityMatrix, DissipativeChannel, RateSingularity, TimeLocalGenerator,
};
use crate::operators::{pauli_x, pauli_y, pauli_z, sigma_minus, ComplexMatrix};

/// Default |h| guard below which gamma(t) is treated as divergent.
pub const RATE_GUARD: f64 = 1e-9;

/// d is treated as exactly zero (critical coupling W = lambda/2) below this
/// relative threshold; the removable 0/0 is replaced by its limit.
const CRITICAL_D_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
}

/// Coupling regime of the damped JC model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingRegime {
    /// W <= lambda/2: h decays monotonically, gamma stays nonnegative.
    Weak,
    /// W > lambda/2: h oscillates through zero, gamma changes sign and
    /// diverges at the zeros.
    Strong,
}

/// Parameters of the damped Jaynes-Cummings model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampedJcParams {
    /// Transition strength W (inverse time).
    pub w: f64,
    /// Spectral width lambda (inverse time); the reservoir correlation time
    /// is 1/lambda.
    pub lambda: f64,
    /// Phase imprinted by the gate; the inference parameter.
    pub phi: f64,
}

impl DampedJcParams {
    pub fn new(w: f64, lambda: f64, phi: f64) -> Result<Self, ModelError> {
        if !(w > 0.0) {
            return Err(ModelError::NonPositiveParameter {
                name: "W",
                value: w,
            });
        }
        if !(lambda > 0.0) {
            return Err(ModelError::NonPositiveParameter {
                name: "lambda",
                value: lambda,
            });
        }
        Ok(Self { w, lambda, phi })
    }

    pub fn regime(&self) -> CouplingRegime {
        if self.w <= self.lambda / 2.0 {
            CouplingRegime::Weak
        } else {
            CouplingRegime::Strong
        }
    }

    /// d = sqrt(|lambda^2 - 4 W^2|).
    pub fn d(&self) -> f64 {
        (self.lambda * self.lambda - 4.0 * self.w * self.w).abs().sqrt()
    }

    fn is_critical(&self) -> bool {
        self.d() < CRITICAL_D_TOL * self.lambda
    }
}

/// The characteristic damping envelope h(t): h(0) = 1, h'(0) = 0.
pub fn h_function(t: f64, p: &DampedJcParams) -> f64 {
    let decay = (-p.lambda * t / 2.0).exp();
    if p.is_critical() {
        // Limit of both branches as d -> 0.
        return decay * (1.0 + p.lambda * t / 2.0);
    }
    let d = p.d();
    let x = d * t / 2.0;
    match p.regime() {
        CouplingRegime::Weak => decay * (x.cosh() + (p.lambda / d) * x.sinh()),
        CouplingRegime::Strong => decay * (x.cos() + (p.lambda / d) * x.sin()),
    }
}

/// Closed-form derivative of [`h_function`].
pub fn h_dot(t: f64, p: &DampedJcParams) -> f64 {
    let decay = (-p.lambda * t / 2.0).exp();
    if p.is_critical() {
        return -decay * p.lambda * p.lambda * t / 4.0;
    }
    let d = p.d();
    let x = d * t / 2.0;
    let coeff = -2.0 * p.w * p.w / d;
    match p.regime() {
        CouplingRegime::Weak => coeff * decay * x.sinh(),
        CouplingRegime::Strong => coeff * decay * x.sin(),
    }
}

/// Time-dependent decay rate gamma(t) = -2 h'(t)/h(t) with a singularity
/// guard on |h|.
pub fn gamma_t(t: f64, p: &DampedJcParams, guard: f64) -> Result<f64, RateSingularity> {
    let h = h_function(t, p);
    if h.abs() <= guard {
        return Err(RateSingularity {
            t,
            h_abs: h.abs(),
            guard,
        });
    }
    Ok(-2.0 * h_dot(t, p) / h)
}

/// Single-channel interaction-picture generator of the damped JC model:
/// H = 0, A = sigma-, rate gamma(t).
pub fn build_generator(p: &DampedJcParams) -> TimeLocalGenerator {
    let params = *p;
    TimeLocalGenerator::dissipative(
        2,
        vec![DissipativeChannel::with_rate_fn(
            move |t| gamma_t(t, &params, RATE_GUARD),
            sigma_minus(),
        )],
    )
}

/// Constant-rate amplitude-damping control with the same channel structure.
pub fn markov_control(gamma0: f64) -> Result<TimeLocalGenerator, ModelError> {
    if !(gamma0 > 0.0) {
        return Err(ModelError::NonPositiveParameter {
            name: "gamma0",
            value: gamma0,
        });
    }
    Ok(TimeLocalGenerator::dissipative(
        2,
        vec![DissipativeChannel::constant(gamma0, sigma_minus())],
    ))
}

/// Bloch vector (Bx, By, Bz) of a qubit state (I + B.sigma)/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let half = 0.5;
        let mut m = ComplexMatrix::identity(2).scale_re(half);
        m = &m + &pauli_x().scale_re(half * self.x);
        m = &m + &pauli_y().scale_re(half * self.y);
        m = &m + &pauli_z().scale_re(half * self.z);
        m
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::new(self.to_matrix()).expect("Bloch vector inside the unit ball")
    }
}

/// Phase-gated optimal probe state: rho0 = (I + cos(phi) sx - sin(phi) sy)/2.
pub fn optimal_probe(phi: f64) -> DensityMatrix {
    BlochVector {
        x: phi.cos(),
        y: -phi.sin(),
        z: 0.0,
    }
    .to_density()
}

/// d rho0 / d phi for the phase-gated probe.
pub fn probe_param_deriv(phi: f64) -> ComplexMatrix {
    &pauli_x().scale_re(-0.5 * phi.sin()) + &pauli_y().scale_re(-0.5 * phi.cos())
}

/// Exact Bloch solution B(t) = (h cos phi, -h sin phi, h^2 - 1).
pub fn analytic_state(t: f64, p: &DampedJcParams) -> BlochVector {
    let h = h_function(t, p);
    BlochVector {
        x: h * p.phi.cos(),
        y: -h * p.phi.sin(),
        z: h * h - 1.0,
    }
}

/// Exact d rho / d phi along the analytic trajectory.
pub fn analytic_param_deriv(t: f64, p: &DampedJcParams) -> ComplexMatrix {
    let h = h_function(t, p);
    &pauli_x().scale_re(-0.5 * h * p.phi.sin()) + &pauli_y().scale_re(-0.5 * h * p.phi.cos())
}

/// Exact QFI: F(t) = h(t)^2.
pub fn analytic_qfi(t: f64, p: &DampedJcParams) -> f64 {
    let h = h_function(t, p);
    h * h
}

/// Exact QFI flow: I(t) = 2 h(t) h'(t); finite for all t, including the
/// zeros of h where gamma diverges.
pub fn analytic_flow(t: f64, p: &DampedJcParams) -> f64 {
    2.0 * h_function(t, p) * h_dot(t, p)
}

/// Smallest positive zero of h, located by bisection; `None` in the weak
/// regime where h stays positive.
pub fn first_h_zero(p: &DampedJcParams) -> Option<f64> {
    if p.regime() == CouplingRegime::Weak || p.is_critical() {
        return None;
    }
    let d = p.d();
    // The first zero lies where cos(dt/2) + (lambda/d) sin(dt/2) changes
    // sign, inside dt/2 in (pi/2, pi).
    let mut lo = std::f64::consts::PI / d;
    let mut hi = 2.0 * std::f64::consts::PI / d;
    debug_assert!(h_function(lo, p) > 0.0 && h_function(hi, p) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h_function(mid, p) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
