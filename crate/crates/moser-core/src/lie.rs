//! Poisson bracket actions and truncated Lie-series transforms.
//!
//! Everything the normalization brackets is either free of `eta` or equal
//! to `eta` itself, so the extended-space bracket reduces to two actions:
//! on a `(p, q)` series, `L_chi G = G_q chi_p - G_p chi_q`; on `eta`,
//! `L_chi eta = -d(chi)/dt`. Each application of `L_chi` with
//! `min_degree(chi) >= 3` raises the minimum degree by at least one, so
//! every Lie series terminates exactly at the truncation order.

use num_complex::Complex64 as C64;

use crate::pqseries::PQSeries;
use crate::timecoeff::{ExpPoly, RateBasis};
use crate::{Error, Result};

/// Generating function of one normalization step: a `(p, q)` series of
/// degree at least 3 with no `eta` dependence.
#[derive(Clone, Debug)]
pub struct GeneratingFunction {
    chi: PQSeries,
}

impl GeneratingFunction {
    pub fn new(chi: PQSeries) -> Result<Self> {
        if let Some(d) = chi.min_degree() {
            if d < 3 {
                return Err(Error::Precondition(format!(
                    "generating function must have degree >= 3, found {d}"
                )));
            }
        }
        Ok(GeneratingFunction { chi })
    }

    pub fn zero(basis: &RateBasis, trunc: u32) -> Self {
        GeneratingFunction { chi: PQSeries::zero(basis, trunc) }
    }

    pub fn series(&self) -> &PQSeries {
        &self.chi
    }

    pub fn is_zero(&self) -> bool {
        self.chi.is_zero()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.chi.min_degree()
    }

    /// The reversed generator, whose Lie series is the exact inverse map
    /// at truncation order.
    pub fn reversed(&self) -> Self {
        GeneratingFunction { chi: self.chi.neg() }
    }
}

/// `L_chi G = G_q chi_p - G_p chi_q`, truncated at the shared degree.
pub fn lie_derivative(g: &PQSeries, chi: &GeneratingFunction) -> Result<PQSeries> {
    let x = chi.series();
    g.dq().mul(&x.dp())?.sub(&g.dp().mul(&x.dq())?)
}

/// Action on the conjugate variable: `L_chi eta = -d(chi)/dt`.
pub fn lie_eta_action(chi: &GeneratingFunction) -> PQSeries {
    chi.series().dt().neg()
}

/// `exp(L_chi) G = sum_s L^s G / s!`, exact at truncation order.
pub fn exp_lie(g: &PQSeries, chi: &GeneratingFunction) -> Result<PQSeries> {
    if chi.is_zero() {
        return Ok(g.clone());
    }
    let mut acc = g.clone();
    let mut term = g.clone(); // L^s G / s!
    let cap = 2 * g.trunc() + 2;
    for s in 1..=cap {
        term = lie_derivative(&term, chi)?.scale(C64::new(1.0 / s as f64, 0.0));
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// The transformed perturbation `sum_{s>=1} s/(s+1)! L^s F` produced by one
/// normalization step whose generator solves the homological equation for
/// `F`; its minimum degree is at least `2 min_degree(F) - 2`.
pub fn transformed_perturbation(
    f: &PQSeries,
    chi: &GeneratingFunction,
) -> Result<PQSeries> {
    let mut acc = PQSeries::zero(f.basis(), f.trunc());
    if chi.is_zero() {
        return Ok(acc);
    }
    let mut term = f.clone(); // L^s F / s!
    let cap = 2 * f.trunc() + 2;
    for s in 1..=cap {
        term = lie_derivative(&term, chi)?.scale(C64::new(1.0 / s as f64, 0.0));
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term.scale(C64::new(s as f64 / (s as f64 + 1.0), 0.0)))?;
    }
    Ok(acc)
}

/// The series added to `eta` by the transform:
/// `exp(L_chi) eta = eta - sum_{s>=1} (1/s!) L^{s-1} (d chi/dt)`.
pub fn eta_shift_series(chi: &GeneratingFunction) -> Result<PQSeries> {
    let d = chi.series().dt();
    if d.is_zero() {
        return Ok(PQSeries::zero(chi.series().basis(), chi.series().trunc()));
    }
    let mut term = d.clone(); // (1/s!) L^{s-1} d, starting at s = 1
    let mut acc = d;
    let cap = 2 * chi.series().trunc() + 2;
    for s in 2..=cap {
        term = lie_derivative(&term, chi)?.scale(C64::new(1.0 / s as f64, 0.0));
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term)?;
    }
    Ok(acc.neg())
}

/// A point of the extended phase space; `t` is a parameter of the maps and
/// is never changed by them.
#[derive(Clone, Copy, Debug)]
pub struct PhasePoint {
    pub p: C64,
    pub q: C64,
    pub eta: C64,
    pub t: f64,
}

impl PhasePoint {
    pub fn real(p: f64, q: f64, eta: f64, t: f64) -> Self {
        PhasePoint {
            p: C64::new(p, 0.0),
            q: C64::new(q, 0.0),
            eta: C64::new(eta, 0.0),
            t,
        }
    }
}

/// Direction of a chain of step maps. `Forward` maps normal-form
/// coordinates to the original ones (the composition of the step maps);
/// `Inverse` undoes it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapDirection {
    Forward,
    Inverse,
}

/// The truncated images of the coordinate functions under one step map.
#[derive(Clone, Debug)]
pub struct PointMap {
    p_img: PQSeries,
    q_img: PQSeries,
    eta_shift: PQSeries,
}

impl PointMap {
    pub fn new(chi: &GeneratingFunction) -> Result<Self> {
        let basis = chi.series().basis();
        let trunc = chi.series().trunc();
        let p = PQSeries::monomial(trunc, (1, 0), ExpPoly::real_constant(basis, 1.0));
        let q = PQSeries::monomial(trunc, (0, 1), ExpPoly::real_constant(basis, 1.0));
        Ok(PointMap {
            p_img: exp_lie(&p, chi)?,
            q_img: exp_lie(&q, chi)?,
            eta_shift: eta_shift_series(chi)?,
        })
    }

    pub fn apply(&self, pt: PhasePoint) -> PhasePoint {
        PhasePoint {
            p: self.p_img.eval(pt.p, pt.q, pt.t),
            q: self.q_img.eval(pt.p, pt.q, pt.t),
            eta: pt.eta + self.eta_shift.eval(pt.p, pt.q, pt.t),
            t: pt.t,
        }
    }
}

/// Precomputed chain of step maps for a whole normalization run.
#[derive(Clone, Debug)]
pub struct TransformChain {
    forward: Vec<PointMap>,
    inverse: Vec<PointMap>,
    radius: f64,
}

impl TransformChain {
    /// `radius` is the working domain; points outside it are still mapped
    /// (the maps are polynomials) but reported as out of domain.
    pub fn new(chis: &[GeneratingFunction], radius: f64) -> Result<Self> {
        let mut forward = Vec::with_capacity(chis.len());
        let mut inverse = Vec::with_capacity(chis.len());
        for chi in chis {
            forward.push(PointMap::new(chi)?);
            inverse.push(PointMap::new(&chi.reversed())?);
        }
        Ok(TransformChain { forward, inverse, radius })
    }

    /// Apply the chain; returns the image and whether every intermediate
    /// point stayed within the working radius.
    pub fn apply(&self, pt: PhasePoint, dir: MapDirection) -> (PhasePoint, bool) {
        let mut current = pt;
        let mut in_domain = current.p.norm() <= self.radius && current.q.norm() <= self.radius;
        match dir {
            // step j maps (j+1)-coordinates to j-coordinates, so the
            // normal-form-to-original composition applies the last step
            // first
            MapDirection::Forward => {
                for map in self.forward.iter().rev() {
                    current = map.apply(current);
                    in_domain &=
                        current.p.norm() <= self.radius && current.q.norm() <= self.radius;
                }
            }
            MapDirection::Inverse => {
                for map in self.inverse.iter() {
                    current = map.apply(current);
                    in_domain &=
                        current.p.norm() <= self.radius && current.q.norm() <= self.radius;
                }
            }
        }
        (current, in_domain)
    }
}

/// One-shot variant of [`TransformChain`] for single points.
pub fn transform_point(
    chis: &[GeneratingFunction],
    pt: PhasePoint,
    dir: MapDirection,
    radius: f64,
) -> Result<(PhasePoint, bool)> {
    Ok(TransformChain::new(chis, radius)?.apply(pt, dir))
}
