//! Scenario configuration: a flat key-value text format with dotted section
//! prefixes, chosen for diff-friendliness in sweep scripts.
//!
//! ```text
//! model = damped_jc
//! damped_jc.w = 0.3
//! damped_jc.lambda = 1.0
//! damped_jc.phi = 0.0
//! time.t_max = 10.0
//! time.dt = 0.001
//! stepper = fixed_rk4
//! qcr.m = 1,100
//! ```
//!
//! Lines starting with `#` are comments. Validation reports every violation,
//! not just the first.

use std::fmt;

use thiserror::Error;

use crate::dynamics::StepperConfig;

#[derive(Debug, Error)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    DampedJc,
    MarkovControl,
    CustomGenerator,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::DampedJc => "damped_jc",
            ModelKind::MarkovControl => "markov_control",
            ModelKind::CustomGenerator => "custom_generator",
        }
    }
}

/// Named constant jump operators available to custom generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpOpName {
    SigmaMinus,
    SigmaPlus,
    SigmaX,
    SigmaY,
    SigmaZ,
}

impl JumpOpName {
    pub fn as_str(&self) -> &'static str {
        match self {
            JumpOpName::SigmaMinus => "sigma_minus",
            JumpOpName::SigmaPlus => "sigma_plus",
            JumpOpName::SigmaX => "sigma_x",
            JumpOpName::SigmaY => "sigma_y",
            JumpOpName::SigmaZ => "sigma_z",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sigma_minus" => Some(Self::SigmaMinus),
            "sigma_plus" => Some(Self::SigmaPlus),
            "sigma_x" => Some(Self::SigmaX),
            "sigma_y" => Some(Self::SigmaY),
            "sigma_z" => Some(Self::SigmaZ),
            _ => None,
        }
    }
}

/// One constant-rate channel of a custom generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CustomChannel {
    pub op: JumpOpName,
    pub rate: f64,
}

/// Custom qubit generator: H = hx sx + hy sy + hz sz plus constant channels.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CustomGeneratorSpec {
    pub h_coeffs: [f64; 3],
    pub channels: Vec<CustomChannel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepperChoice {
    FixedRk4,
    Halving,
}

impl StepperChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepperChoice::FixedRk4 => "fixed_rk4",
            StepperChoice::Halving => "halving",
        }
    }

    pub fn to_stepper(self) -> StepperConfig {
        match self {
            StepperChoice::FixedRk4 => StepperConfig::FixedRk4,
            StepperChoice::Halving => StepperConfig::Halving { tol: 1e-10 },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

/// Validated scenario configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub w: f64,
    pub lambda: f64,
    pub phi: f64,
    pub gamma0: f64,
    pub custom: CustomGeneratorSpec,
    pub t_max: f64,
    pub dt: f64,
    pub stepper: StepperChoice,
    /// Column selectors for the CSV; empty means all columns.
    pub outputs: Vec<String>,
    pub qcr_m: Vec<u64>,
    pub sweep: Option<SweepSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::DampedJc,
            w: 0.3,
            lambda: 1.0,
            phi: 0.0,
            gamma0: 1.0,
            custom: CustomGeneratorSpec::default(),
            t_max: 10.0,
            dt: 1e-3,
            stepper: StepperChoice::FixedRk4,
            outputs: Vec::new(),
            qcr_m: vec![1],
            sweep: None,
        }
    }
}

fn parse_f64(key: &str, value: &str, violations: &mut Vec<String>) -> Option<f64> {
    match value.parse::<f64>() {
        Ok(x) if x.is_finite() => Some(x),
        Ok(x) => {
            violations.push(format!("{key}: value {x} is not finite"));
            None
        }
        Err(_) => {
            violations.push(format!("{key}: expected a number, got `{value}`"));
            None
        }
    }
}

fn parse_f64_list(key: &str, value: &str, violations: &mut Vec<String>) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for part in value.split(',') {
        out.push(parse_f64(key, part.trim(), violations)?);
    }
    Some(out)
}

/// Parse and validate a configuration; all schema and range violations are
/// collected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut violations = Vec::new();
    let mut sweep_param: Option<String> = None;
    let mut sweep_values: Option<Vec<f64>> = None;
    // Custom channels arrive as numbered keys; collect then sort.
    let mut custom_ops: Vec<(usize, JumpOpName)> = Vec::new();
    let mut custom_rates: Vec<(usize, f64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            violations.push(format!("line {}: expected `key = value`", lineno + 1));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "model" => match value {
                "damped_jc" => cfg.model = ModelKind::DampedJc,
                "markov_control" => cfg.model = ModelKind::MarkovControl,
                "custom_generator" => cfg.model = ModelKind::CustomGenerator,
                other => violations.push(format!("model: unknown model `{other}`")),
            },
            "damped_jc.w" => {
                if let Some(x) = parse_f64(key, value, &mut violations) {
                    cfg.w = x;
                }
            }
            "damped_jc.lambda" => {
                if let Some(x) = parse_f64(key, value, &mut violations) {
                    cfg.lambda = x;
                }
            }
            "damped_jc.phi" => {
                if let Some(x) = parse_f64(key, value, &mut violations) {
                    cfg.phi = x;
                }
            }
            "markov_control.gamma0" => {
                if let Some(x) = parse_f64(key, value, &mut violations) {
                    cfg.gamma0 = x;
                }
            }
            "custom.hamiltonian" => {
                if let Some(v) = parse_f64_list(key, value, &mut violations) {
                    if v.len() == 3 {
                        cfg.custom.h_coeffs = [v[0], v[1], v[2]];
                    } else {
                        violations.push(format!(
                            "custom.hamiltonian: expected 3 Pauli coefficients, got {}",
                            v.len()
                        ));
                    }
                }
            }
            "time.t_max" => {
                if let Some(x) = parse_f64(key, value, &mut violations) {
                    cfg.t_max = x;
                }
            }
            "time.dt" => {
                if let Some(x) = parse_f64(key, value, &mut violations) {
                    cfg.dt = x;
                }
            }
            "stepper" => match value {
                "fixed_rk4" => cfg.stepper = StepperChoice::FixedRk4,
                "halving" => cfg.stepper = StepperChoice::Halving,
                other => violations.push(format!("stepper: unknown stepper `{other}`")),
            },
            "outputs" => {
                cfg.outputs = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
            }
            "qcr.m" => {
                let mut ms = Vec::new();
                let mut ok = true;
                for part in value.split(',') {
                    match part.trim().parse::<u64>() {
                        Ok(m) if m >= 1 => ms.push(m),
                        _ => {
                            violations
                                .push(format!("qcr.m: expected positive integers, got `{value}`"));
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    cfg.qcr_m = ms;
                }
            }
            "sweep.param" => sweep_param = Some(value.to_string()),
            "sweep.values" => {
                sweep_values = parse_f64_list(key, value, &mut violations);
            }
            _ => {
                if let Some(rest) = key.strip_prefix("custom.channel.") {
                    let Some((idx_str, field)) = rest.split_once('.') else {
                        violations.push(format!("{key}: expected custom.channel.<n>.<field>"));
                        continue;
                    };
                    let Ok(idx) = idx_str.parse::<usize>() else {
                        violations.push(format!("{key}: channel index must be an integer"));
                        continue;
                    };
                    match field {
                        "op" => match JumpOpName::parse(value) {
                            Some(op) => custom_ops.push((idx, op)),
                            None => violations
                                .push(format!("{key}: unknown jump operator `{value}`")),
                        },
                        "rate" => {
                            if let Some(x) = parse_f64(key, value, &mut violations) {
                                custom_rates.push((idx, x));
                            }
                        }
                        other => {
                            violations.push(format!("{key}: unknown channel field `{other}`"))
                        }
                    }
                } else {
                    violations.push(format!("unknown key `{key}`"));
                }
            }
        }
    }

    custom_ops.sort_by_key(|&(i, _)| i);
    custom_rates.sort_by_key(|&(i, _)| i);
    for &(idx, op) in &custom_ops {
        match custom_rates.iter().find(|&&(i, _)| i == idx) {
            Some(&(_, rate)) => cfg.custom.channels.push(CustomChannel { op, rate }),
            None => violations.push(format!("custom.channel.{idx}: missing rate")),
        }
    }
    for &(idx, _) in &custom_rates {
        if !custom_ops.iter().any(|&(i, _)| i == idx) {
            violations.push(format!("custom.channel.{idx}: missing op"));
        }
    }

    match (sweep_param, sweep_values) {
        (Some(param), Some(values)) => cfg.sweep = Some(SweepSpec { param, values }),
        (Some(_), None) => violations.push("sweep.param given without sweep.values".into()),
        (None, Some(_)) => violations.push("sweep.values given without sweep.param".into()),
        (None, None) => {}
    }

    validate(&cfg, &mut violations);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { violations })
    }
}

fn validate(cfg: &ScenarioConfig, violations: &mut Vec<String>) {
    if !(cfg.t_max > 0.0) {
        violations.push(format!("time.t_max must be positive, got {}", cfg.t_max));
    }
    if !(cfg.dt > 0.0) {
        violations.push(format!("time.dt must be positive, got {}", cfg.dt));
    }
    if cfg.t_max > 0.0 && cfg.dt > 0.0 && cfg.dt > cfg.t_max / 10.0 {
        violations.push(format!(
            "time.dt = {} exceeds t_max/10 = {}",
            cfg.dt,
            cfg.t_max / 10.0
        ));
    }
    match cfg.model {
        ModelKind::DampedJc => {
            if !(cfg.w > 0.0) {
                violations.push(format!("damped_jc.w must be positive, got {}", cfg.w));
            }
            if !(cfg.lambda > 0.0) {
                violations.push(format!(
                    "damped_jc.lambda must be positive, got {}",
                    cfg.lambda
                ));
            }
        }
        ModelKind::MarkovControl => {
            if !(cfg.gamma0 > 0.0) {
                violations.push(format!(
                    "markov_control.gamma0 must be positive, got {}",
                    cfg.gamma0
                ));
            }
        }
        ModelKind::CustomGenerator => {
            if cfg.custom.channels.is_empty() && cfg.custom.h_coeffs == [0.0; 3] {
                violations.push("custom_generator: no Hamiltonian and no channels".into());
            }
        }
    }
    if let Some(sweep) = &cfg.sweep {
        if sweep.values.is_empty() {
            violations.push("sweep.values must be nonempty".into());
        }
        if !matches!(
            sweep.param.as_str(),
            "damped_jc.w" | "damped_jc.lambda" | "damped_jc.phi" | "markov_control.gamma0"
                | "time.t_max" | "time.dt"
        ) {
            violations.push(format!("sweep.param: unknown parameter `{}`", sweep.param));
        }
    }
    if cfg.qcr_m.is_empty() {
        violations.push("qcr.m must list at least one M".into());
    }
}

/// Set a sweepable parameter on a copy of the config.
pub fn with_param(cfg: &ScenarioConfig, param: &str, value: f64) -> Result<ScenarioConfig, ConfigError> {
    let mut out = cfg.clone();
    match param {
        "damped_jc.w" | "W" | "w" => out.w = value,
        "damped_jc.lambda" | "lambda" => out.lambda = value,
        "damped_jc.phi" | "phi" => out.phi = value,
        "markov_control.gamma0" | "gamma0" => out.gamma0 = value,
        "time.t_max" | "t_max" => out.t_max = value,
        "time.dt" | "dt" => out.dt = value,
        other => {
            return Err(ConfigError {
                violations: vec![format!("unknown sweep parameter `{other}`")],
            })
        }
    }
    let mut violations = Vec::new();
    validate(&out, &mut violations);
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(ConfigError { violations })
    }
}

/// Serialize in the canonical key order; `parse_config(emit_config(c)) == c`
/// for every valid config.
pub fn emit_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("model", cfg.model.as_str().to_string());
    push("damped_jc.w", format_f64(cfg.w));
    push("damped_jc.lambda", format_f64(cfg.lambda));
    push("damped_jc.phi", format_f64(cfg.phi));
    push("markov_control.gamma0", format_f64(cfg.gamma0));
    if cfg.custom.h_coeffs != [0.0; 3] {
        push(
            "custom.hamiltonian",
            cfg.custom
                .h_coeffs
                .iter()
                .map(|&x| format_f64(x))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    for (k, ch) in cfg.custom.channels.iter().enumerate() {
        push(&format!("custom.channel.{}.op", k + 1), ch.op.as_str().to_string());
        push(&format!("custom.channel.{}.rate", k + 1), format_f64(ch.rate));
    }
    push("time.t_max", format_f64(cfg.t_max));
    push("time.dt", format_f64(cfg.dt));
    push("stepper", cfg.stepper.as_str().to_string());
    if !cfg.outputs.is_empty() {
        push("outputs", cfg.outputs.join(","));
    }
    push(
        "qcr.m",
        cfg.qcr_m
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    if let Some(sweep) = &cfg.sweep {
        push("sweep.param", sweep.param.clone());
        push(
            "sweep.values",
            sweep
                .values
                .iter()
                .map(|&x| format_f64(x))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    out
}

/// Shortest representation that round-trips through `parse::<f64>`.
pub fn format_f64(x: f64) -> String {
    let short = format!("{x}");
    debug_assert_eq!(short.parse::<f64>().ok(), Some(x));
    short
}
