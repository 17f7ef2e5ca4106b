//! SLD solver, QFI evaluation, QFI flow (direct and channel-decomposed), and
//! the inward-flow non-Markovianity witness.
//!
//! Two independent routes to the flow are kept side by side: the direct
//! expression Tr[L(2 d_theta - L) d_t rho] and the per-channel sum
//! sum_i gamma_i J_i with J_i = -Tr{rho [L,A_i]† [L,A_i]}. Their agreement is
//! the central self-check of the library.

use thiserror::Error;

use crate::dynamics::{apply_generator, DensityMatrix, DynamicsError, TimeLocalGenerator};
use crate::operators::{commutator, eigh_default, ComplexMatrix, LinalgError, C64};

/// Default absolute tolerance on eigenvalue sums defining the SLD support.
pub const DEFAULT_P_TOL: f64 = 1e-12;

/// d_theta rho restricted to the kernel of rho must vanish within this bound.
const KERNEL_DERIV_LIMIT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("eigendecomposition failed: {0}")]
    Eigh(#[from] LinalgError),
    #[error(
        "support inconsistency: |d_theta rho| = {norm:.3e} on the kernel of rho; \
         the parameter moves the state off its support and the QFI diverges"
    )]
    SupportInconsistency { norm: f64 },
    #[error("QFI evaluated to {0:.3e}, below the negativity tolerance")]
    NegativeQfi(f64),
    #[error("nonpositive QFI {0:.3e}: the Cramer-Rao bound is undefined")]
    NonpositiveQfi(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("Bloch vector norm {0:.6} exceeds 1")]
    BlochOutsideBall(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Symmetric logarithmic derivative and spectral diagnostics.
#[derive(Clone, Debug)]
pub struct SldResult {
    /// Hermitian L with d_theta rho = (L rho + rho L)/2 on the support.
    pub l: ComplexMatrix,
    /// Number of eigenvalues of rho above the support tolerance.
    pub support_rank: usize,
    /// Largest |d_theta rho| matrix element in the zeroed kernel block.
    pub kernel_deriv_norm: f64,
}

/// Solve the SLD equation in the eigenbasis of rho.
///
/// Matrix elements with p_i + p_j <= p_tol are outside the support and set to
/// zero; the corresponding d_theta rho elements must vanish or the family is
/// inconsistent with a finite QFI.
pub fn sld(rho: &DensityMatrix, drho: &ComplexMatrix, p_tol: f64) -> Result<SldResult, FlowError> {
    if rho.dim() != drho.dim() {
        return Err(FlowError::DimensionMismatch(rho.dim(), drho.dim()));
    }
    let es = eigh_default(rho.matrix())?;
    let n = es.dim();
    let d_eig = es.to_eigenbasis(drho);

    let mut l_eig = ComplexMatrix::zeros(n);
    let mut kernel_norm: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let psum = es.values[i] + es.values[j];
            if psum > p_tol {
                l_eig.set(i, j, d_eig.get(i, j) * C64::new(2.0 / psum, 0.0));
            } else {
                kernel_norm = kernel_norm.max(d_eig.get(i, j).norm());
            }
        }
    }
    if kernel_norm > KERNEL_DERIV_LIMIT {
        return Err(FlowError::SupportInconsistency { norm: kernel_norm });
    }
    let support_rank = es.values.iter().filter(|&&p| p > p_tol).count();
    Ok(SldResult {
        l: es.from_eigenbasis(&l_eig).symmetrize(),
        support_rank,
        kernel_deriv_norm: kernel_norm,
    })
}

/// QFI: F = Tr[L^2 rho], clamped to 0 when within -1e-10 of zero.
pub fn qfi(rho: &DensityMatrix, l: &ComplexMatrix) -> Result<f64, FlowError> {
    if rho.dim() != l.dim() {
        return Err(FlowError::DimensionMismatch(rho.dim(), l.dim()));
    }
    let f = (&(l * l) * rho.matrix()).trace().re;
    if f < -1e-10 {
        return Err(FlowError::NegativeQfi(f));
    }
    Ok(f.max(0.0))
}

/// Independent qubit oracle for the QFI in Bloch coordinates:
/// F = |dB|^2 + (B.dB)^2 / (1 - |B|^2) for mixed states, |dB|^2 on the
/// pure-state boundary.
pub fn qfi_bloch(b: [f64; 3], db: [f64; 3]) -> Result<f64, FlowError> {
    let b2 = b.iter().map(|x| x * x).sum::<f64>();
    if b2 > 1.0 + 1e-12 {
        return Err(FlowError::BlochOutsideBall(b2.sqrt()));
    }
    let db2 = db.iter().map(|x| x * x).sum::<f64>();
    let bdb: f64 = b.iter().zip(&db).map(|(x, y)| x * y).sum();
    let gap = 1.0 - b2;
    if gap <= 1e-12 {
        return Ok(db2);
    }
    Ok(db2 + bdb * bdb / gap)
}

/// Quantum Cramer-Rao bound: Var >= 1/(M F).
pub fn cramer_rao_bound(f: f64, m: u64) -> Result<f64, FlowError> {
    assert!(m >= 1, "M must be at least 1");
    if f <= 0.0 {
        return Err(FlowError::NonpositiveQfi(f));
    }
    Ok(1.0 / (m as f64 * f))
}

/// State-dependent subflow factor J_i = -Tr{rho [L,A_i]† [L,A_i]} <= 0.
pub fn channel_subflow_factor(
    rho: &DensityMatrix,
    l: &ComplexMatrix,
    a: &ComplexMatrix,
) -> Result<f64, FlowError> {
    if rho.dim() != l.dim() {
        return Err(FlowError::DimensionMismatch(rho.dim(), l.dim()));
    }
    if rho.dim() != a.dim() {
        return Err(FlowError::DimensionMismatch(rho.dim(), a.dim()));
    }
    let c = commutator(l, a)?;
    Ok(-(&(rho.matrix() * &c.dagger()) * &c).trace().re)
}

/// Per-channel record at one time.
#[derive(Clone, Copy, Debug)]
pub struct ChannelFlow {
    pub gamma: f64,
    pub j: f64,
    /// Subflow I_i = gamma_i J_i.
    pub i: f64,
}

/// Per-time flow record: QFI, total flow, and the channel decomposition.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: f64,
    pub f: f64,
    pub i_total: f64,
    pub channels: Vec<ChannelFlow>,
}

/// Evaluate the channel-decomposed flow at time t.
pub fn flow_decomposed(
    gen: &TimeLocalGenerator,
    t: f64,
    rho: &DensityMatrix,
    l: &ComplexMatrix,
) -> Result<FlowSample, FlowError> {
    let mut channels = Vec::with_capacity(gen.channels.len());
    let mut i_total = 0.0;
    for ch in &gen.channels {
        let gamma = (ch.rate)(t).map_err(|e| DynamicsError::RateSingularity {
            t,
            message: e.to_string(),
        })?;
        let a = (ch.jump)(t);
        let j = channel_subflow_factor(rho, l, &a)?;
        let i = gamma * j;
        i_total += i;
        channels.push(ChannelFlow { gamma, j, i });
    }
    Ok(FlowSample {
        t,
        f: qfi(rho, l)?,
        i_total,
        channels,
    })
}

/// Direct flow evaluation I = Tr[L(2 d_theta - L) d_t rho], with
/// d_t d_theta rho = K(t) d_theta rho (the generator carries no theta
/// dependence in any model in scope).
pub fn flow_direct(
    gen: &TimeLocalGenerator,
    t: f64,
    rho: &DensityMatrix,
    drho: &ComplexMatrix,
    l: &ComplexMatrix,
) -> Result<f64, FlowError> {
    let k_drho = apply_generator(gen, t, drho)?;
    let k_rho = apply_generator(gen, t, rho.matrix())?;
    let term1 = 2.0 * (&(l * &k_drho)).trace().re;
    let term2 = (&(&(l * l) * &k_rho)).trace().re;
    Ok(term1 - term2)
}

/// A maximal run of grid samples with inward flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InwardInterval {
    pub t_start: f64,
    pub t_end: f64,
}

/// Flow series with the inward-interval summary.
#[derive(Clone, Debug)]
pub struct FlowSeries {
    pub samples: Vec<FlowSample>,
    pub inward_intervals: Vec<InwardInterval>,
    /// Trapezoidal integral of max(I_total, 0) over the grid. This aggregate
    /// is specific to this library, not a standard measure.
    pub accumulated_inward: f64,
}

/// Default witness threshold: 1e-9 times the largest |I_total| in the series.
pub fn default_witness_eps(samples: &[FlowSample]) -> f64 {
    1e-9 * samples
        .iter()
        .map(|s| s.i_total.abs())
        .fold(0.0, f64::max)
}

/// Locate maximal runs of samples with I_total > eps and accumulate the
/// inward flow.
pub fn witness(samples: &[FlowSample], eps: f64) -> FlowSeries {
    debug_assert!(samples.windows(2).all(|w| w[1].t > w[0].t));
    let mut intervals = Vec::new();
    let mut run_start: Option<f64> = None;
    for (k, s) in samples.iter().enumerate() {
        if s.i_total > eps {
            if run_start.is_none() {
                run_start = Some(s.t);
            }
            if k + 1 == samples.len() {
                intervals.push(InwardInterval {
                    t_start: run_start.take().unwrap(),
                    t_end: s.t,
                });
            }
        } else if let Some(start) = run_start.take() {
            intervals.push(InwardInterval {
                t_start: start,
                t_end: samples[k - 1].t,
            });
        }
    }
    let mut accumulated = 0.0;
    for w in samples.windows(2) {
        let a = w[0].i_total.max(0.0);
        let b = w[1].i_total.max(0.0);
        accumulated += 0.5 * (a + b) * (w[1].t - w[0].t);
    }
    FlowSeries {
        samples: samples.to_vec(),
        inward_intervals: intervals,
        accumulated_inward: accumulated,
    }
}
