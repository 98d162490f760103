//! Closed-form solvers for the two time-dependent homological equations.
//!
//! General mode solves `[g(x,t) eth + d/dt] chi = F` for mixed monomials
//! (`alpha_1 != alpha_2`): per monomial the coefficient is
//!
//! ```text
//! F_alpha(x,t) = e^{-lambda A(x,t)} [ F_{alpha,0}(x)
//!                + int_0^t e^{lambda A(x,s)} f_alpha(s) ds ],
//! A(x,t) = int_0^t g(x,s) ds = omega t + Atilde(x,t),
//! lambda = alpha_2 - alpha_1,
//! ```
//!
//! with `F_{alpha,0} = 0` for `lambda > 0` and the tail-integral choice
//! that keeps the solution bounded for `lambda < 0`.
//!
//! Strong mode solves `c' + lhat c = f_alpha` per monomial, with
//! `lhat = omega (alpha_2 - alpha_1)` (diagonal monomials included): for
//! `lhat > 0` the solution vanishing at t = 0, for `lhat <= 0` the tail
//! integral `c(t) = -int_t^inf e^{lhat (s-t)} f(s) ds`, which exists
//! because the perturbation decays and makes the generator vanish as
//! `t -> infinity`.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::lie::GeneratingFunction;
use crate::pqseries::{PQSeries, XSeries};
use crate::timecoeff::{ExpPoly, RateVector};
use crate::{Error, Result};

/// Which homological equation a run solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Bounded aperiodic coefficients; mixed monomials only, diagonal terms
    /// are absorbed into the normal form.
    General,
    /// Exponentially decaying coefficients; diagonal monomials are removed
    /// through improper integrals.
    Strong,
}

/// Strong-mode problem: the full perturbation (diagonal included), the
/// frequency, and the lattice vector whose value is `omega` (used for the
/// exact `e^{lhat t}` shifts).
#[derive(Clone, Debug)]
pub struct StrongProblem {
    pub f: PQSeries,
    pub omega: f64,
    pub omega_unit: RateVector,
}

impl StrongProblem {
    pub fn new(f: PQSeries, omega: f64, omega_unit: RateVector) -> Result<Self> {
        let value = f.basis().value_of(&omega_unit);
        if value != omega {
            return Err(Error::Precondition(format!(
                "omega_unit has lattice value {value}, expected omega = {omega}"
            )));
        }
        if let Some(d) = f.min_degree() {
            if d < 3 {
                return Err(Error::Precondition(format!(
                    "strong-mode perturbation must start at degree 3, found {d}"
                )));
            }
        }
        Ok(StrongProblem { f, omega, omega_unit })
    }
}

/// General-mode problem: the mixed part of the perturbation and the
/// frequency series `g = dJ/dx` with `g(0, t) = omega`.
#[derive(Clone, Debug)]
pub struct GeneralProblem {
    pub f_mixed: PQSeries,
    pub g: XSeries,
    pub omega: f64,
    pub omega_unit: RateVector,
}

impl GeneralProblem {
    pub fn new(f_mixed: PQSeries, g: XSeries, omega: f64, omega_unit: RateVector) -> Result<Self> {
        let value = f_mixed.basis().value_of(&omega_unit);
        if value != omega {
            return Err(Error::Precondition(format!(
                "omega_unit has lattice value {value}, expected omega = {omega}"
            )));
        }
        for (alpha, _) in f_mixed.iter() {
            if alpha.0 == alpha.1 {
                return Err(Error::Precondition(format!(
                    "diagonal monomial p^{} q^{} in general-mode right-hand side",
                    alpha.0, alpha.1
                )));
            }
        }
        if let Some(d) = f_mixed.min_degree() {
            if d < 3 {
                return Err(Error::Precondition(format!(
                    "general-mode perturbation must start at degree 3, found {d}"
                )));
            }
        }
        match g.coeff(0) {
            Some(c0) => {
                let expect = ExpPoly::real_constant(f_mixed.basis(), omega);
                if !c0.approx_eq(&expect, 1e-12) {
                    return Err(Error::Precondition(
                        "g(0, t) must equal the constant omega".into(),
                    ));
                }
            }
            None => {
                return Err(Error::Precondition("g(0, t) must equal omega, found 0".into()))
            }
        }
        Ok(GeneralProblem { f_mixed, g, omega, omega_unit })
    }
}

/// Solve the strong homological equation per monomial; the ODE residual
/// vanishes identically in the exponential-polynomial algebra.
pub fn solve_strong(problem: &StrongProblem) -> Result<GeneratingFunction> {
    let f = &problem.f;
    let mut chi = PQSeries::zero(f.basis(), f.trunc());
    for ((a1, a2), f_alpha) in f.iter() {
        let lam = a2 as i32 - a1 as i32;
        let delta = problem.omega_unit.scaled(lam); // lattice vector of lhat
        let c = if lam > 0 {
            // c(t) = e^{-lhat t} int_0^t e^{lhat s} f(s) ds
            f_alpha
                .rate_shifted(&delta)?
                .integrate()
                .rate_shifted(&delta.negated())?
        } else {
            // c(t) = -e^{-lhat t} int_t^inf e^{lhat s} f(s) ds, lhat <= 0
            f_alpha
                .rate_shifted(&delta)?
                .improper_tail()
                .map_err(|e| match e {
                    Error::DivergentImproperIntegral(msg) => Error::DivergentImproperIntegral(
                        format!("monomial p^{a1} q^{a2}: {msg}"),
                    ),
                    other => other,
                })?
                .rate_shifted(&delta.negated())?
                .neg()
        };
        chi.insert_add((a1, a2), c);
    }
    GeneratingFunction::new(chi)
}

/// Exact per-monomial residual `c' + lhat c - f` of the strong equation,
/// assembled as a series; zero up to amplitude roundoff.
pub fn strong_ode_residual(
    chi: &GeneratingFunction,
    problem: &StrongProblem,
) -> Result<PQSeries> {
    let f = &problem.f;
    let mut residual = PQSeries::zero(f.basis(), f.trunc());
    let zero = ExpPoly::zero(f.basis());
    let mut alphas: Vec<(u32, u32)> = chi.series().iter().map(|(a, _)| a).collect();
    for (a, _) in f.iter() {
        if chi.series().coeff(a).is_none() {
            alphas.push(a);
        }
    }
    for alpha in alphas {
        let lam = alpha.1 as i32 - alpha.0 as i32;
        let lhat = problem.omega * lam as f64;
        let c = chi.series().coeff(alpha).unwrap_or(&zero);
        let f_alpha = f.coeff(alpha).unwrap_or(&zero);
        let r = c
            .derivative()
            .add(&c.scale(C64::new(lhat, 0.0)))?
            .sub(f_alpha)?;
        residual.insert_add(alpha, r);
    }
    Ok(residual)
}

/// Solve the general homological equation for the mixed right-hand side.
pub fn solve_general(problem: &GeneralProblem) -> Result<GeneratingFunction> {
    let f = &problem.f_mixed;
    let basis = f.basis();
    let n = f.trunc();
    let nx = n / 2;

    // Atilde(x, t) = int_0^t (g - omega) ds: x-orders >= 1 only
    let mut g_minus_omega = XSeries::zero(basis, nx);
    for (k, c) in problem.g.iter() {
        if k >= 1 {
            g_minus_omega.insert_add(k, c.clone());
        }
    }
    let a_tilde = g_minus_omega.integrate_t();

    let mut chi = PQSeries::zero(basis, n);
    for ((a1, a2), f_alpha) in f.iter() {
        let lam = a2 as i32 - a1 as i32;
        debug_assert!(lam != 0);
        let f_series = solve_general_monomial(&a_tilde, f_alpha, lam, &problem.omega_unit)
            .map_err(|e| match e {
                Error::DivergentImproperIntegral(msg) => Error::DivergentImproperIntegral(
                    format!("monomial p^{a1} q^{a2}: {msg}"),
                ),
                other => other,
            })?;
        // assemble F_alpha(pq, t) p^{a1} q^{a2}, dropping |alpha| + 2k > N
        for (k, c) in f_series.iter() {
            chi.insert_add((a1 + k, a2 + k), c.clone());
        }
    }
    GeneratingFunction::new(chi)
}

/// The x-series coefficient function of one mixed monomial.
fn solve_general_monomial(
    a_tilde: &XSeries,
    f_alpha: &ExpPoly,
    lam: i32,
    omega_unit: &RateVector,
) -> Result<XSeries> {
    if lam > 0 {
        // F = e^{-lam A} int_0^t e^{lam A(s)} f(s) ds
        let delta = omega_unit.scaled(lam);
        let e_plus = a_tilde.scale(C64::new(lam as f64, 0.0)).exp()?;
        let e_minus = a_tilde.scale(C64::new(-(lam as f64), 0.0)).exp()?;
        let integral = e_plus.mul_coeff(f_alpha)?.rate_shifted(&delta)?.integrate_t();
        e_minus.mul(&integral)?.rate_shifted(&delta.negated())
    } else {
        // lam < 0: with m = -lam > 0,
        // F = -e^{m A} int_t^inf e^{-m A(s)} f(s) ds
        let m = -lam;
        let delta = omega_unit.scaled(m);
        let e_plus = a_tilde.scale(C64::new(m as f64, 0.0)).exp()?;
        let e_minus = a_tilde.scale(C64::new(-(m as f64), 0.0)).exp()?;
        let tail = e_minus
            .mul_coeff(f_alpha)?
            .rate_shifted(&delta.negated())?
            .improper_tail_t()?;
        Ok(e_plus.mul(&tail)?.rate_shifted(&delta)?.scale(C64::new(-1.0, 0.0)))
    }
}

/// Sampled residual of `[g eth + d/dt] chi = F` normalized by the Taylor
/// norm of `F` at the sampling radius. Strong-mode problems pass the
/// constant series `g = omega`. The sampling radius should be small enough
/// that truncation tails are negligible against the reported values.
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub normalized: f64,
    pub f_norm: f64,
}

pub fn residual<R: Rng>(
    chi: &GeneratingFunction,
    g: &XSeries,
    f: &PQSeries,
    radius: f64,
    t_max: f64,
    samples: usize,
    rng: &mut R,
) -> Result<ResidualReport> {
    let d_chi_dt = chi.series().dt();
    let eth_chi = chi.series().eth();
    let mut max_abs = 0.0f64;
    for _ in 0..samples {
        let p = C64::new(rng.gen_range(-radius..=radius), 0.0);
        let q = C64::new(rng.gen_range(-radius..=radius), 0.0);
        let t = rng.gen_range(0.0..=t_max);
        let gv = g.eval(p * q, t);
        let r = gv * eth_chi.eval(p, q, t) + d_chi_dt.eval(p, q, t) - f.eval(p, q, t);
        max_abs = max_abs.max(r.norm());
    }
    let f_norm = f.taylor_norm(radius)?;
    let normalized = if f_norm > 0.0 { max_abs / f_norm } else { max_abs };
    Ok(ResidualReport { max_abs, normalized, f_norm })
}
