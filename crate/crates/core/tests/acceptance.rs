//! Acceptance gate: one test per criterion, each printing a single
//! `criterion N — <name>: PASS/FAIL (<detail>)` line before asserting.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the PASS
//! lines of green criteria; FAIL lines surface in the failure output either
//! way.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfiflow::config::{ModelKind, ScenarioConfig};
use qfiflow::dynamics::{
    co_integrate, uniform_grid, DensityMatrix, DissipativeChannel, StepperConfig,
    TimeLocalGenerator,
};
use qfiflow::flow::{
    channel_subflow_factor, cramer_rao_bound, flow_decomposed, flow_direct, qfi, sld,
    DEFAULT_P_TOL,
};
use qfiflow::models::{
    analytic_qfi, build_generator, first_h_zero, optimal_probe, probe_param_deriv, DampedJcParams,
};
use qfiflow::operators::{ComplexMatrix, C64};
use qfiflow::runner::{emit_fig2_panels, run_scenario, RunReport};

const DT: f64 = 1e-3;
const T_MAX: f64 = 10.0;

fn verdict(num: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {num} — {name}: {tag} ({detail})");
    assert!(pass, "criterion {num} — {name}: FAIL ({detail})");
}

fn standard_config(w: f64) -> ScenarioConfig {
    ScenarioConfig {
        model: ModelKind::DampedJc,
        w,
        lambda: 1.0,
        phi: 0.0,
        t_max: T_MAX,
        dt: DT,
        ..Default::default()
    }
}

fn standard_run(w: f64) -> RunReport {
    run_scenario(&standard_config(w)).expect("standard run must succeed")
}

fn rand_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn rand_matrix(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m.set(i, j, rand_c64(rng));
        }
    }
    m
}

fn rand_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    rand_matrix(dim, rng).symmetrize()
}

fn rand_traceless_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let h = rand_hermitian(dim, rng);
    let shift = h.trace() / C64::new(dim as f64, 0.0);
    let mut out = h;
    for i in 0..dim {
        let v = out.get(i, i) - shift;
        out.set(i, i, v);
    }
    out
}

/// Full-rank random state: G G† plus a ridge, normalized to unit trace.
fn rand_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = rand_matrix(dim, rng);
    let mut m = &g * &g.dagger();
    for i in 0..dim {
        let v = m.get(i, i) + C64::new(0.2, 0.0);
        m.set(i, i, v);
    }
    let tr = m.trace().re;
    m = m.scale_re(1.0 / tr);
    DensityMatrix::new(m).expect("ridged Gram matrix is a valid state")
}

/// Numeric QFI of a (rho, d_theta rho) pair through the SLD pipeline.
fn pipeline_qfi(rho: &DensityMatrix, drho: &ComplexMatrix) -> f64 {
    let l = sld(rho, drho, DEFAULT_P_TOL).expect("SLD must exist").l;
    qfi(rho, &l).expect("QFI must be finite")
}

#[test]
fn criterion_1_exact_solution_reproduction() {
    let mut worst = 0.0f64;
    let mut runtimes = Vec::new();
    for w in [0.3, 3.0] {
        let t0 = Instant::now();
        let report = standard_run(w);
        runtimes.push(t0.elapsed().as_secs_f64());
        for row in &report.rows {
            let exact = row.f_analytic.expect("damped-JC rows carry the exact QFI");
            worst = worst.max((row.f_numeric - exact).abs());
        }
    }
    let pass = worst <= 1e-6 && runtimes.iter().all(|&s| s < 5.0);
    verdict(
        1,
        "exact-solution reproduction",
        pass,
        &format!(
            "max |F_num - F_exact| = {worst:.2e}, runtimes {:.2} s / {:.2} s",
            runtimes[0], runtimes[1]
        ),
    );
}

#[test]
fn criterion_2_flow_identity() {
    // Part 1: every emitted grid point of both standard regimes.
    let mut worst = 0.0f64;
    for w in [0.3, 3.0] {
        for row in standard_run(w).rows {
            let dev = (row.i_direct - row.i_decomposed).abs() / (1.0 + row.i_decomposed.abs());
            worst = worst.max(dev);
        }
    }

    // Part 2: 10^3 random one/two-channel qubit generators, random states.
    let mut rng = ChaCha8Rng::seed_from_u64(0x51d2);
    for _ in 0..1000 {
        let n_channels = rng.gen_range(1..=2);
        let mut channels = Vec::new();
        for _ in 0..n_channels {
            let rate = rng.gen_range(-1.5..1.5);
            channels.push(DissipativeChannel::constant(rate, rand_matrix(2, &mut rng)));
        }
        let h0 = rand_hermitian(2, &mut rng);
        let h1 = rand_hermitian(2, &mut rng);
        let gen = TimeLocalGenerator::new(
            2,
            Arc::new(move |t: f64| &h0 + &h1.scale_re(t.cos())),
            channels,
        );
        let rho = rand_density(2, &mut rng);
        let drho = rand_traceless_hermitian(2, &mut rng).scale_re(0.5);
        let t = rng.gen_range(0.0..3.0);
        let l = sld(&rho, &drho, DEFAULT_P_TOL).unwrap().l;
        let sample = flow_decomposed(&gen, t, &rho, &l).unwrap();
        let direct = flow_direct(&gen, t, &rho, &drho, &l).unwrap();
        let dev = (direct - sample.i_total).abs() / (1.0 + sample.i_total.abs());
        worst = worst.max(dev);
    }

    verdict(
        2,
        "flow identity",
        worst <= 1e-8,
        &format!("max relative |I_direct - sum gamma_i J_i| = {worst:.2e}"),
    );
}

#[test]
fn criterion_3_regime_signatures() {
    // Weak regime: outward-only flow, strictly positive rate.
    let weak = standard_run(0.3);
    let weak_gamma_pos = weak
        .rows
        .iter()
        .filter(|r| r.t > 0.0)
        .all(|r| r.channels[0].0 > 0.0);
    let weak_outward = weak.rows.iter().all(|r| r.i_decomposed <= 1e-8);

    // Strong regime: inward intervals, rate sign changes.
    let strong = standard_run(3.0);
    let has_inward = strong.rows.iter().any(|r| r.i_decomposed > 1e-6);
    let gmin = strong
        .rows
        .iter()
        .map(|r| r.channels[0].0)
        .fold(f64::INFINITY, f64::min);
    let gmax = strong
        .rows
        .iter()
        .map(|r| r.channels[0].0)
        .fold(f64::NEG_INFINITY, f64::max);
    let gamma_changes_sign = gmin < 0.0 && gmax > 0.0;

    // The flow stays finite across the guard band around the first h-zero.
    let p = DampedJcParams::new(3.0, 1.0, 0.0).unwrap();
    let t_zero = first_h_zero(&p).expect("strong coupling has an h-zero");
    let zero_located = (t_zero - 0.5877).abs() <= 1e-3;
    let panels = emit_fig2_panels(T_MAX, DT).unwrap();
    let strong_flow = &panels[2];
    let band: Vec<f64> = strong_flow
        .rows
        .iter()
        .filter(|(lt, _)| (lt - t_zero).abs() <= 1e-3)
        .map(|&(_, v)| v)
        .collect();
    let finite_across_band = !band.is_empty() && band.iter().all(|v| v.abs() < 10.0);

    let pass = weak_gamma_pos
        && weak_outward
        && has_inward
        && gamma_changes_sign
        && zero_located
        && finite_across_band;
    verdict(
        3,
        "regime signatures",
        pass,
        &format!(
            "weak gamma>0: {weak_gamma_pos}, weak I<=1e-8: {weak_outward}, \
             strong inward: {has_inward}, gamma in [{gmin:.1}, {gmax:.1}], \
             first zero at t = {t_zero:.4}, |I| < 10 across band: {finite_across_band}"
        ),
    );
}

#[test]
fn criterion_4_subflow_nonpositivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa5a5);
    let t0 = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..10_000 {
        let dim = 2 + k % 3;
        let rho = rand_density(dim, &mut rng);
        let l = rand_hermitian(dim, &mut rng);
        let a = rand_matrix(dim, &mut rng);
        let j = channel_subflow_factor(&rho, &l, &a).unwrap();
        worst = worst.max(j);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && elapsed < 10.0;
    verdict(
        4,
        "subflow nonpositivity",
        pass,
        &format!("max J over 10^4 random triples = {worst:.2e}, {elapsed:.2} s"),
    );
}

/// Random bounded coherent term of the kind the model's frame drops: diagonal
/// in the excitation basis (a multiple of |e><e| plus a multiple of the
/// identity), with smoothly varying coefficients. A generic non-diagonal
/// Hamiltonian rotates the probe family and genuinely changes the QFI, so it
/// is outside this claim.
fn random_excitation_diagonal_h(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> ComplexMatrix {
    let a = rng.gen_range(-1.0..1.0);
    let b = rng.gen_range(-1.0..1.0);
    let c = rng.gen_range(0.5..3.0);
    let d = rng.gen_range(-1.0..1.0);
    move |t: f64| {
        let mut h = ComplexMatrix::zeros(2);
        h.set(0, 0, C64::new(a + b * (c * t).cos() + d, 0.0));
        h.set(1, 1, C64::new(d, 0.0));
        h
    }
}

#[test]
fn criterion_5_coherent_part_nullity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let mut worst = 0.0f64;
    // Strong-coupling segment ends well clear of the first guard band.
    for (w, t_end) in [(0.3, T_MAX), (3.0, 0.55)] {
        let p = DampedJcParams::new(w, 1.0, 0.0).unwrap();
        for _ in 0..3 {
            let h_fn = random_excitation_diagonal_h(&mut rng);
            let mut gen = build_generator(&p);
            gen.hamiltonian = Arc::new(h_fn);
            let grid = uniform_grid(t_end, DT);
            let traj = co_integrate(
                &gen,
                &optimal_probe(0.0),
                &probe_param_deriv(0.0),
                &grid,
                StepperConfig::FixedRk4,
                0.0,
            )
            .unwrap();
            for (k, &t) in traj.times.iter().enumerate() {
                let f = pipeline_qfi(&traj.states[k], &traj.param_derivs[k]);
                worst = worst.max((f - analytic_qfi(t, &p)).abs());
            }
        }
    }
    verdict(
        5,
        "coherent-part nullity",
        worst <= 1e-6,
        &format!("max |F_with_H - F_without| = {worst:.2e}"),
    );
}

#[test]
fn criterion_6_markovian_monotonicity() {
    // The constant-rate control scenario.
    let cfg = ScenarioConfig {
        model: ModelKind::MarkovControl,
        gamma0: 1.0,
        t_max: 5.0,
        dt: DT,
        ..Default::default()
    };
    let report = run_scenario(&cfg).unwrap();
    let mut worst = report
        .rows
        .iter()
        .map(|r| r.i_decomposed)
        .fold(f64::NEG_INFINITY, f64::max);

    // Random generators whose rates stay positive at all times.
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a9a);
    for _ in 0..10 {
        let n_channels = rng.gen_range(1..=2);
        let mut channels = Vec::new();
        for _ in 0..n_channels {
            let base = rng.gen_range(0.2..1.0);
            let wobble = rng.gen_range(-0.9..0.9) * base;
            let freq = rng.gen_range(0.5..3.0);
            channels.push(DissipativeChannel::with_rate_fn(
                move |t: f64| Ok(base + wobble * (freq * t).cos()),
                rand_matrix(2, &mut rng),
            ));
        }
        let h = rand_hermitian(2, &mut rng);
        let gen = TimeLocalGenerator::new(2, Arc::new(move |_| h.clone()), channels);
        let grid = uniform_grid(2.0, DT);
        let traj = co_integrate(
            &gen,
            &optimal_probe(0.4),
            &probe_param_deriv(0.4),
            &grid,
            StepperConfig::FixedRk4,
            0.4,
        )
        .unwrap();
        for (k, &t) in traj.times.iter().enumerate() {
            let l = sld(&traj.states[k], &traj.param_derivs[k], DEFAULT_P_TOL)
                .unwrap()
                .l;
            let sample = flow_decomposed(&gen, t, &traj.states[k], &l).unwrap();
            worst = worst.max(sample.i_total);
        }
    }
    verdict(
        6,
        "Markovian monotonicity",
        worst <= 1e-8,
        &format!("max I over control run and 10 positive-rate generators = {worst:.2e}"),
    );
}

#[test]
fn criterion_7_additivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rho = rand_density(2, &mut rng);
        let drho = rand_traceless_hermitian(2, &mut rng).scale_re(0.3);
        let f1 = pipeline_qfi(&rho, &drho);

        let rho2 = DensityMatrix::new(rho.matrix().tensor(rho.matrix())).unwrap();
        let drho2 = &drho.tensor(rho.matrix()) + &rho.matrix().tensor(&drho);
        let f2 = pipeline_qfi(&rho2, &drho2);
        worst = worst.max((f2 - 2.0 * f1).abs());
    }
    verdict(
        7,
        "additivity on product states",
        worst <= 1e-8,
        &format!("max |F(rho x rho) - 2 F(rho)| = {worst:.2e}"),
    );
}

#[test]
fn criterion_8_derivative_consistency() {
    let tol = 1e-5f64.max(3.0 * DT * DT);
    let mut details = Vec::new();
    let mut pass = true;
    for w in [0.3, 3.0] {
        let report = standard_run(w);
        let mut worst = 0.0f64;
        for win in report.rows.windows(3) {
            // Skip stencils interrupted by an omitted guard-band row.
            if (win[1].t - win[0].t - DT).abs() > 1e-9 || (win[2].t - win[1].t - DT).abs() > 1e-9 {
                continue;
            }
            let fd = (win[2].f_numeric - win[0].f_numeric) / (2.0 * DT);
            worst = worst.max((fd - win[1].i_decomposed).abs());
        }
        pass &= worst <= tol;
        details.push(format!("W = {w}: max |dF/dt - I| = {worst:.2e}"));
    }
    verdict(
        8,
        "derivative consistency",
        pass,
        &format!("tolerance {tol:.1e}; {}", details.join("; ")),
    );
}

#[test]
fn criterion_9_cramer_rao_arithmetic() {
    let unit = cramer_rao_bound(1.0, 1).unwrap();
    let mut exact = unit == 1.0;
    for m in [2u64, 3, 10, 100, 1_000_000] {
        exact &= cramer_rao_bound(1.0, m).unwrap() == 1.0 / (m as f64);
    }
    // 1/M scaling for generic F, to rounding.
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x9c12);
    for _ in 0..100 {
        let f = rng.gen_range(1e-6..1e6);
        let b1 = cramer_rao_bound(f, 1).unwrap();
        for m in [2u64, 7, 1000] {
            let bm = cramer_rao_bound(f, m).unwrap();
            worst = worst.max((bm * m as f64 - b1).abs() / b1);
        }
    }
    let pass = exact && worst <= 1e-15;
    verdict(
        9,
        "Cramer-Rao arithmetic",
        pass,
        &format!("bound(1,1) = {unit}, 1/M scaling exact for F = 1, relative error {worst:.1e} otherwise"),
    );
}
