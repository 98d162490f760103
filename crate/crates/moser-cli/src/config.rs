//! Problem configuration: a single JSON document describing the
//! Hamiltonian, the run parameters, and the verification options.
//!
//! Validation aggregates every violation instead of stopping at the first
//! one.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use moser_core::homological::Mode;
use moser_core::normalizer::{DPolicy, GridConfig, RunConfig};
use moser_core::pqseries::{MoserHamiltonian, PQSeries};
use moser_core::timecoeff::{ExpPoly, RateBasis, RateVector};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub omega: f64,
    pub mode: ModeName,
    /// Decay rate `a`. Required in strong mode; in aperiodic mode it only
    /// fixes the first slot of the rate lattice and defaults to 1.
    #[serde(default)]
    pub decay_rate: Option<f64>,
    pub radius_r0: f64,
    pub trunc_degree: u32,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
    pub d_policy: DPolicyName,
    pub perturbation: Vec<MonomialSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn default_max_steps() -> u32 {
    16
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Aperiodic,
    Strong,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DPolicyName {
    Certified,
    #[serde(untagged)]
    Empirical {
        empirical: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub alpha: [u32; 2],
    pub coeff: Vec<TermSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub amp_re: f64,
    #[serde(default)]
    pub amp_im: f64,
    #[serde(default)]
    pub tpow: u32,
    pub rate: RateSpec,
}

/// Lattice coordinates over the base rates `[-a, omega]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub i: i32,
    pub j: i32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Initial points `(p, q, eta)`.
    #[serde(default)]
    pub starts: Vec<[f64; 3]>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_threshold")]
    pub conjugacy_threshold: f64,
    #[serde(default = "default_escape")]
    pub escape_radius: f64,
}

fn default_t_final() -> f64 {
    3.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_n_samples() -> usize {
    50
}
fn default_threshold() -> f64 {
    1e-6
}
fn default_escape() -> f64 {
    1.0
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            t_final: default_t_final(),
            tol: default_tol(),
            starts: Vec::new(),
            n_samples: default_n_samples(),
            conjugacy_threshold: default_threshold(),
            escape_radius: default_escape(),
        }
    }
}

/// A validated problem ready to run.
pub struct Problem {
    pub hamiltonian: MoserHamiltonian,
    pub run: RunConfig,
    pub mode: Mode,
    pub omega: f64,
    pub verify: VerifySpec,
}

/// Load and validate; on failure every violation is reported.
pub fn load(path: &Path) -> Result<Problem, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    let raw: RawConfig =
        serde_json::from_str(&text).map_err(|e| vec![format!("schema violation: {e}")])?;
    validate(raw)
}

pub fn validate(raw: RawConfig) -> Result<Problem, Vec<String>> {
    let mut errors = Vec::new();

    if raw.omega <= 0.0 {
        errors.push(format!("omega must be positive, got {}", raw.omega));
    }
    let mode = match raw.mode {
        ModeName::Aperiodic => Mode::General,
        ModeName::Strong => Mode::Strong,
    };
    let decay_rate = match (mode, raw.decay_rate) {
        (Mode::Strong, Some(a)) if a > 0.0 => a,
        (Mode::Strong, Some(a)) => {
            errors.push(format!("strong mode requires decay_rate > 0, got {a}"));
            1.0
        }
        (Mode::Strong, None) => {
            errors.push("strong mode requires decay_rate".into());
            1.0
        }
        (Mode::General, Some(a)) if a > 0.0 => a,
        (Mode::General, Some(a)) => {
            errors.push(format!("decay_rate must be positive, got {a}"));
            1.0
        }
        (Mode::General, None) => 1.0,
    };
    if raw.radius_r0 <= 0.0 {
        errors.push(format!("radius_r0 must be positive, got {}", raw.radius_r0));
    }
    if raw.trunc_degree < 3 {
        errors.push(format!(
            "trunc_degree must be at least 3, got {}",
            raw.trunc_degree
        ));
    }
    let d_policy = match raw.d_policy {
        DPolicyName::Certified => DPolicy::Certified,
        DPolicyName::Empirical { empirical } => {
            if !(0.0..0.5).contains(&empirical) || empirical == 0.0 {
                errors.push(format!(
                    "empirical d must lie in (0, 0.5), got {empirical}"
                ));
            }
            DPolicy::Empirical(empirical)
        }
    };

    let omega = if raw.omega > 0.0 { raw.omega } else { 1.0 };
    let basis = RateBasis::standard(decay_rate, omega);
    let mut f = PQSeries::zero(&basis, raw.trunc_degree.max(3));

    for (idx, mono) in raw.perturbation.iter().enumerate() {
        let degree = mono.alpha[0] + mono.alpha[1];
        if degree < 3 {
            errors.push(format!(
                "perturbation[{idx}]: |alpha| = {degree} violates the degree >= 3 requirement"
            ));
            continue;
        }
        if degree > raw.trunc_degree {
            errors.push(format!(
                "perturbation[{idx}]: |alpha| = {degree} exceeds trunc_degree {}",
                raw.trunc_degree
            ));
            continue;
        }
        let mut coeff = ExpPoly::zero(&basis);
        for (tidx, term) in mono.coeff.iter().enumerate() {
            let rate = RateVector::new(vec![term.rate.i, term.rate.j]);
            let value = basis.value_of(&rate);
            if matches!(mode, Mode::Strong) && value >= 0.0 {
                errors.push(format!(
                    "perturbation[{idx}].coeff[{tidx}]: rate value {value} must be negative in strong mode"
                ));
                continue;
            }
            if matches!(mode, Mode::General) && value > 0.0 {
                errors.push(format!(
                    "perturbation[{idx}].coeff[{tidx}]: rate value {value} grows on t >= 0"
                ));
                continue;
            }
            if matches!(mode, Mode::General) && value == 0.0 && term.tpow > 0 {
                errors.push(format!(
                    "perturbation[{idx}].coeff[{tidx}]: secular term t^{} at rate 0",
                    term.tpow
                ));
                continue;
            }
            let term_poly = ExpPoly::term(
                &basis,
                C64::new(term.amp_re, term.amp_im),
                term.tpow,
                rate,
            )
            .expect("dimension fixed by construction");
            coeff = coeff.add(&term_poly).expect("same basis");
        }
        f.insert_add((mono.alpha[0], mono.alpha[1]), coeff);
    }

    for start in &raw.verify.starts {
        if start[0].abs() > raw.verify.escape_radius
            || start[1].abs() > raw.verify.escape_radius
        {
            errors.push(format!(
                "verify start ({}, {}) lies outside the escape radius {}",
                start[0], start[1], raw.verify.escape_radius
            ));
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    let hamiltonian = MoserHamiltonian::initial(omega, f).map_err(|e| vec![e.to_string()])?;
    let run = RunConfig {
        mode,
        r0: raw.radius_r0,
        max_steps: raw.max_steps,
        d_policy,
        omega_unit: basis.unit(1),
        decay: match mode {
            Mode::Strong => Some((decay_rate, basis.unit(0).negated())),
            Mode::General => None,
        },
        grid: GridConfig::default(),
        seed: 0,
    };

    Ok(Problem { hamiltonian, run, mode, omega, verify: raw.verify })
}
