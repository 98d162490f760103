//! The quantitative apparatus: closed-form bound schedules, smallness
//! conditions, generator bounds, and admissible-radius thresholds for both
//! normalization modes.
//!
//! Pure arithmetic with no series dependencies, so the certified-regime
//! identities can be tested independently of the engine. The structural
//! constants are kept as integer-power products and evaluated once.

use serde::Serialize;

use crate::homological::Mode;
use crate::{Error, Result};

fn e2() -> f64 {
    std::f64::consts::E * std::f64::consts::E
}

/// `3^6 8^-7 pi^-12 e^-2`, the factor of the initial-smallness condition.
pub fn initial_condition_constant() -> f64 {
    729.0 / (8.0f64.powi(7) * std::f64::consts::PI.powi(12) * e2())
}

/// `3^6 2^-25 pi^-12 e^-2`, the factor of the admissible-radius threshold.
pub fn radius_threshold_constant() -> f64 {
    729.0 / (2.0f64.powi(25) * std::f64::consts::PI.powi(12) * e2())
}

/// The bounding sequences of a certified run.
///
/// `eps[j] = eps0 (j+1)^-12`, `d[j]` the contraction parameters making the
/// quadratic recurrence an identity, `r[j]` the radii, and the
/// frequency-window sequences `m_lo[j]` (decreasing toward `omega/2`) and
/// `m_hi[j]` (increasing toward `3 omega/2`) for the general mode.
#[derive(Clone, Debug, Serialize)]
pub struct BoundSchedule {
    pub mode_strong: bool,
    pub omega: f64,
    pub a: Option<f64>,
    pub eps0: f64,
    pub r0: f64,
    pub r_star: f64,
    pub eps: Vec<f64>,
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    pub m_lo: Vec<f64>,
    pub m_hi: Vec<f64>,
    /// Largest `eps0` admitted by the initial-smallness condition.
    pub eps0_max: f64,
    pub condition_holds: bool,
}

/// Build the closed-form sequences for `j = 0..len`.
pub fn schedule(
    eps0: f64,
    r0: f64,
    omega: f64,
    mode: Mode,
    a: Option<f64>,
    len: usize,
) -> Result<BoundSchedule> {
    if eps0 < 0.0 || r0 <= 0.0 || omega <= 0.0 {
        return Err(Error::Precondition(
            "schedule requires eps0 >= 0, r0 > 0, omega > 0".into(),
        ));
    }
    let a_factor = match mode {
        Mode::General => 1.0,
        Mode::Strong => match a {
            Some(a) if a > 0.0 => a,
            _ => {
                return Err(Error::Precondition(
                    "strong-mode schedule requires a decay rate a > 0".into(),
                ))
            }
        },
    };
    let r_star = r0 / 2.0;
    let base = (8.0 * e2() * eps0 / (r_star * r_star * omega * a_factor)).powf(1.0 / 6.0);
    let eps0_max = initial_condition_constant() * omega * a_factor * r_star * r_star;

    let mut eps = Vec::with_capacity(len);
    let mut d = Vec::with_capacity(len);
    let mut r = Vec::with_capacity(len);
    let mut m_lo = Vec::with_capacity(len);
    let mut m_hi = Vec::with_capacity(len);
    let mut r_j = r0;
    let mut lo = 0.75 * omega;
    let mut hi = 1.25 * omega;
    for j in 0..len {
        let jf = j as f64;
        let eps_j = eps0 * (jf + 1.0).powi(-12);
        let d_j = base * (jf + 2.0) * (jf + 2.0) / (jf + 1.0).powi(4);
        eps.push(eps_j);
        d.push(d_j);
        r.push(r_j);
        m_lo.push(lo);
        m_hi.push(hi);
        let drift = if d_j > 0.0 {
            eps_j / (r_star * d_j * r_star * d_j)
        } else {
            0.0
        };
        lo -= drift;
        hi += drift;
        r_j *= 1.0 - 2.0 * d_j;
    }

    Ok(BoundSchedule {
        mode_strong: matches!(mode, Mode::Strong),
        omega,
        a,
        eps0,
        r0,
        r_star,
        eps,
        d,
        r,
        m_lo,
        m_hi,
        eps0_max,
        condition_holds: eps0 <= eps0_max,
    })
}

/// Outcome of the per-step smallness condition
/// `4 e^2 eps / (omega R_*^2 d^6) <= 1/2` (general) or with the extra
/// `a^-1` (strong).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmallnessCheck {
    pub lhs: f64,
    pub holds: bool,
}

pub fn smallness_check(
    eps_hat: f64,
    d: f64,
    r_star: f64,
    omega: f64,
    mode: Mode,
    a: Option<f64>,
) -> SmallnessCheck {
    let a_factor = match mode {
        Mode::General => 1.0,
        Mode::Strong => a.unwrap_or(1.0),
    };
    let lhs = 4.0 * e2() * eps_hat / (omega * a_factor * r_star * r_star * d.powi(6));
    SmallnessCheck { lhs, holds: lhs <= 0.5 }
}

/// Theoretical bound for the generator norm at radius `(1 - delta) R`:
/// `4 M / (omega delta^2)` in general mode, `4 M / (a delta^3)` in strong
/// mode.
pub fn chi_bound(m: f64, omega: f64, delta: f64, mode: Mode, a: Option<f64>) -> f64 {
    match mode {
        Mode::General => 4.0 * m / (omega * delta * delta),
        Mode::Strong => 4.0 * m / (a.unwrap_or(1.0) * delta.powi(3)),
    }
}

/// The admissible initial radius
/// `min{(3^6 2^-25 pi^-12 e^-2 omega [a] / M_F)^4, R^4}`.
pub fn r0_threshold(m_f: f64, omega: f64, r: f64, mode: Mode, a: Option<f64>) -> f64 {
    let a_factor = match mode {
        Mode::General => 1.0,
        Mode::Strong => a.unwrap_or(1.0),
    };
    let base = (radius_threshold_constant() * omega * a_factor / m_f).powi(4);
    base.min(r.powi(4))
}

/// Quadratic-recurrence right-hand side
/// `8 e^2 eps^2 / (omega [a] R_*^2 d^6)`.
pub fn recurrent_rhs(
    eps: f64,
    d: f64,
    r_star: f64,
    omega: f64,
    mode: Mode,
    a: Option<f64>,
) -> f64 {
    let a_factor = match mode {
        Mode::General => 1.0,
        Mode::Strong => a.unwrap_or(1.0),
    };
    8.0 * e2() * eps * eps / (omega * a_factor * r_star * r_star * d.powi(6))
}
