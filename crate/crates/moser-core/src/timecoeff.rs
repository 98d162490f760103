//! Exact algebra of exponential polynomials of time.
//!
//! Every time coefficient handled by the engine is a finite sum of terms
//! `amp * t^k * exp(rate * t)` with complex amplitude, integer `k >= 0` and
//! a rate drawn from an integer lattice over a fixed list of base rates
//! (typically `[-a, omega]`). The class is closed under sums, products,
//! d/dt, definite integration from 0, and improper tail integrals of
//! decaying terms, which is exactly what the closed-form homological
//! solutions require.
//!
//! Rates are compared by their integer lattice coordinates, never by
//! floating value: two terms merge only when their coordinate vectors are
//! equal, so nearly rational ratios of base rates cannot cause false
//! cancellation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::{Error, Result, AMP_CLEANUP_REL};

/// The list of base rates generating the rate lattice, shared by every
/// value of a run.
#[derive(Clone, Debug)]
pub struct RateBasis {
    rates: Arc<Vec<f64>>,
}

impl PartialEq for RateBasis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.rates, &other.rates) || *self.rates == *other.rates
    }
}

impl RateBasis {
    pub fn new(rates: Vec<f64>) -> Self {
        assert!(!rates.is_empty(), "rate basis must have at least one entry");
        RateBasis { rates: Arc::new(rates) }
    }

    /// The two-slot basis `[-a, omega]` used by the normalization runs:
    /// slot 0 carries the decay scale, slot 1 the hyperbolicity frequency.
    pub fn standard(a: f64, omega: f64) -> Self {
        RateBasis::new(vec![-a, omega])
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }

    /// Unit lattice vector along slot `i`.
    pub fn unit(&self, i: usize) -> RateVector {
        let mut coords = vec![0i32; self.dim()];
        coords[i] = 1;
        RateVector::new(coords)
    }

    pub fn zero_vector(&self) -> RateVector {
        RateVector::new(vec![0i32; self.dim()])
    }

    /// Real rate value of a lattice vector. Computed in a fixed summation
    /// order so a given vector always evaluates identically.
    pub fn value_of(&self, v: &RateVector) -> f64 {
        assert_eq!(v.dim(), self.dim(), "rate vector dimension mismatch");
        let mut acc = 0.0;
        for (c, r) in v.coords.iter().zip(self.rates.iter()) {
            acc += (*c as f64) * *r;
        }
        acc
    }
}

/// Integer coordinates of an exponential rate over the basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RateVector {
    coords: Vec<i32>,
}

impl RateVector {
    pub fn new(coords: Vec<i32>) -> Self {
        RateVector { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == 0)
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        RateVector::new(
            self.coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scaled(&self, k: i32) -> Self {
        RateVector::new(self.coords.iter().map(|c| c * k).collect())
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1)
    }
}

/// Shape of one exponential-polynomial term: `t^tpow * exp(rate·t)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TermShape {
    rate: RateVector,
    tpow: u32,
}

/// A finite sum of terms `amp * t^tpow * exp(rate.value() * t)`.
///
/// Canonical form: at most one term per `(tpow, rate)` and no amplitude
/// below the relative cleanup threshold.
#[derive(Clone, Debug)]
pub struct ExpPoly {
    basis: RateBasis,
    terms: BTreeMap<TermShape, C64>,
}

/// Certified and sampled bounds for `sup_{t>=0} |f(t)|`.
///
/// `certified` is a triangle-inequality over-estimate (sum of exact
/// per-term maxima) that is safe to compare against theoretical upper
/// bounds; `sampled` is a grid estimate with golden-section refinement,
/// reported for diagnostics only.
#[derive(Clone, Copy, Debug)]
pub struct SupBound {
    pub certified: f64,
    pub sampled: f64,
    pub sampled_at: f64,
}

impl ExpPoly {
    pub fn zero(basis: &RateBasis) -> Self {
        ExpPoly { basis: basis.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(basis: &RateBasis, amp: C64) -> Self {
        let mut p = ExpPoly::zero(basis);
        if amp != C64::new(0.0, 0.0) {
            p.terms.insert(TermShape { rate: basis.zero_vector(), tpow: 0 }, amp);
        }
        p
    }

    pub fn real_constant(basis: &RateBasis, amp: f64) -> Self {
        ExpPoly::constant(basis, C64::new(amp, 0.0))
    }

    /// Single term `amp * t^tpow * exp(rate·t)`.
    pub fn term(basis: &RateBasis, amp: C64, tpow: u32, rate: RateVector) -> Result<Self> {
        if rate.dim() != basis.dim() {
            return Err(Error::Precondition(format!(
                "rate vector dimension {} does not match basis dimension {}",
                rate.dim(),
                basis.dim()
            )));
        }
        let mut p = ExpPoly::zero(basis);
        if amp != C64::new(0.0, 0.0) {
            p.terms.insert(TermShape { rate, tpow }, amp);
        }
        Ok(p)
    }

    pub fn basis(&self) -> &RateBasis {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterate terms as `(tpow, rate, amplitude)` in canonical order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (u32, &RateVector, C64)> {
        self.terms.iter().map(|(s, a)| (s.tpow, &s.rate, *a))
    }

    pub fn max_abs_amp(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    fn check_basis(&self, other: &Self) -> Result<()> {
        if self.basis == other.basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    fn canonicalized(mut terms: BTreeMap<TermShape, C64>, basis: &RateBasis) -> Self {
        let max = terms.values().map(|a| a.norm()).fold(0.0, f64::max);
        let floor = max * AMP_CLEANUP_REL;
        terms.retain(|_, a| a.norm() > floor);
        ExpPoly { basis: basis.clone(), terms }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_basis(other)?;
        let mut terms = self.terms.clone();
        for (shape, amp) in &other.terms {
            *terms.entry(shape.clone()).or_insert(C64::new(0.0, 0.0)) += *amp;
        }
        Ok(Self::canonicalized(terms, &self.basis))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> Self {
        if c == C64::new(0.0, 0.0) {
            return ExpPoly::zero(&self.basis);
        }
        let terms = self.terms.iter().map(|(s, a)| (s.clone(), *a * c)).collect();
        ExpPoly { basis: self.basis.clone(), terms }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_basis(other)?;
        let mut terms: BTreeMap<TermShape, C64> = BTreeMap::new();
        for (sa, aa) in &self.terms {
            for (sb, ab) in &other.terms {
                let shape =
                    TermShape { rate: sa.rate.plus(&sb.rate), tpow: sa.tpow + sb.tpow };
                *terms.entry(shape).or_insert(C64::new(0.0, 0.0)) += *aa * *ab;
            }
        }
        Ok(Self::canonicalized(terms, &self.basis))
    }

    /// Exact d/dt: `(c, k, mu) -> (c*mu, k, mu) + (c*k, k-1, mu)`.
    pub fn derivative(&self) -> Self {
        let mut terms: BTreeMap<TermShape, C64> = BTreeMap::new();
        for (shape, amp) in &self.terms {
            let mu = self.basis.value_of(&shape.rate);
            if mu != 0.0 {
                let s = TermShape { rate: shape.rate.clone(), tpow: shape.tpow };
                *terms.entry(s).or_insert(C64::new(0.0, 0.0)) += *amp * mu;
            }
            if shape.tpow > 0 {
                let s = TermShape { rate: shape.rate.clone(), tpow: shape.tpow - 1 };
                *terms.entry(s).or_insert(C64::new(0.0, 0.0)) += *amp * shape.tpow as f64;
            }
        }
        Self::canonicalized(terms, &self.basis)
    }

    /// Indefinite antiderivative of one term, as `(shape, amp)` pairs plus
    /// the value of that antiderivative at t = 0 (for the non-polynomial
    /// branch the boundary value is a pure constant).
    fn antiderivative_term(
        &self,
        shape: &TermShape,
        amp: C64,
    ) -> (Vec<(TermShape, C64)>, C64) {
        let mu = self.basis.value_of(&shape.rate);
        let k = shape.tpow;
        if shape.rate.is_zero() || mu == 0.0 {
            // polynomial branch: t^k -> t^(k+1)/(k+1), vanishes at 0
            let out = vec![(
                TermShape { rate: shape.rate.clone(), tpow: k + 1 },
                amp / (k as f64 + 1.0),
            )];
            (out, C64::new(0.0, 0.0))
        } else {
            // repeated integration by parts:
            //   G(t) = e^{mu t} * sum_{i=0..k} (-1)^i k!/(k-i)! t^(k-i) / mu^(i+1)
            let mut out = Vec::with_capacity(k as usize + 1);
            let mut falling = 1.0; // k!/(k-i)!
            let mut sign = 1.0;
            let mut mu_pow = mu;
            let mut at_zero = C64::new(0.0, 0.0);
            for i in 0..=k {
                let coeff = amp * (sign * falling / mu_pow);
                out.push((TermShape { rate: shape.rate.clone(), tpow: k - i }, coeff));
                if k - i == 0 {
                    at_zero = coeff;
                }
                falling *= (k - i) as f64;
                sign = -sign;
                mu_pow *= mu;
            }
            (out, at_zero)
        }
    }

    /// Definite integral from 0: returns `F` with `F(0) = 0` and `F' = f`
    /// exactly. Polynomially growing antiderivatives are legal
    /// intermediates.
    pub fn integrate(&self) -> Self {
        let mut terms: BTreeMap<TermShape, C64> = BTreeMap::new();
        let zero_rate = self.basis.zero_vector();
        for (shape, amp) in &self.terms {
            let (parts, at_zero) = self.antiderivative_term(shape, *amp);
            for (s, a) in parts {
                *terms.entry(s).or_insert(C64::new(0.0, 0.0)) += a;
            }
            if at_zero != C64::new(0.0, 0.0) {
                let s = TermShape { rate: zero_rate.clone(), tpow: 0 };
                *terms.entry(s).or_insert(C64::new(0.0, 0.0)) -= at_zero;
            }
        }
        Self::canonicalized(terms, &self.basis)
    }

    fn require_strict_decay(&self, op: &str) -> Result<()> {
        for (shape, amp) in &self.terms {
            let mu = self.basis.value_of(&shape.rate);
            if mu >= 0.0 {
                return Err(Error::DivergentImproperIntegral(format!(
                    "{op}: term {} t^{} e^({}t) has rate {} >= 0",
                    amp, shape.tpow, mu, mu
                )));
            }
        }
        Ok(())
    }

    /// Tail integral `g(t) = \int_t^\infty f(s) ds`, requiring every term
    /// to decay strictly.
    pub fn improper_tail(&self) -> Result<Self> {
        self.require_strict_decay("tail integral")?;
        let mut terms: BTreeMap<TermShape, C64> = BTreeMap::new();
        for (shape, amp) in &self.terms {
            // antiderivative G decays, so \int_t^\infty = -G(t)
            let (parts, _) = self.antiderivative_term(shape, *amp);
            for (s, a) in parts {
                *terms.entry(s).or_insert(C64::new(0.0, 0.0)) -= a;
            }
        }
        Ok(Self::canonicalized(terms, &self.basis))
    }

    /// Scalar improper integral `\int_0^\infty f(s) ds`.
    pub fn improper_from_zero(&self) -> Result<C64> {
        self.require_strict_decay("improper integral")?;
        let mut acc = C64::new(0.0, 0.0);
        for (shape, amp) in &self.terms {
            let (_, at_zero) = self.antiderivative_term(shape, *amp);
            acc -= at_zero;
        }
        Ok(acc)
    }

    /// Add `delta` to the rate vector of every term, i.e. multiply by
    /// `exp(delta·t)` exactly.
    pub fn rate_shifted(&self, delta: &RateVector) -> Result<Self> {
        if delta.dim() != self.basis.dim() {
            return Err(Error::Precondition(
                "rate shift dimension does not match basis".into(),
            ));
        }
        let terms = self
            .terms
            .iter()
            .map(|(s, a)| {
                (TermShape { rate: s.rate.plus(delta), tpow: s.tpow }, *a)
            })
            .collect();
        Ok(ExpPoly { basis: self.basis.clone(), terms })
    }

    /// Re-express `f(t0 + u)` as an exponential polynomial in `u`.
    pub fn time_shifted(&self, t0: f64) -> Self {
        let mut terms: BTreeMap<TermShape, C64> = BTreeMap::new();
        for (shape, amp) in &self.terms {
            let mu = self.basis.value_of(&shape.rate);
            let scale = (mu * t0).exp();
            // (t0 + u)^k = sum_i C(k,i) t0^(k-i) u^i
            let k = shape.tpow;
            let mut binom = 1.0;
            for i in 0..=k {
                let coeff = *amp * (scale * binom * t0.powi((k - i) as i32));
                let s = TermShape { rate: shape.rate.clone(), tpow: i };
                *terms.entry(s).or_insert(C64::new(0.0, 0.0)) += coeff;
                binom *= (k - i) as f64 / (i as f64 + 1.0);
            }
        }
        Self::canonicalized(terms, &self.basis)
    }

    /// Pointwise value at `t >= 0`.
    pub fn eval(&self, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (shape, amp) in &self.terms {
            let mu = self.basis.value_of(&shape.rate);
            acc += *amp * t.powi(shape.tpow as i32) * (mu * t).exp();
        }
        acc
    }

    /// The `t -> infinity` limit contribution: the sum of amplitudes of
    /// rate-zero, power-zero terms (every decaying term vanishes).
    pub fn constant_part(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (shape, amp) in &self.terms {
            if shape.tpow == 0 && self.basis.value_of(&shape.rate) == 0.0 {
                acc += *amp;
            }
        }
        acc
    }

    /// Certified upper bound and sampled estimate for `sup_{t>=0} |f|`.
    ///
    /// Requires every rate value <= 0 and rate-zero terms to be constant;
    /// otherwise the function grows and the bound does not exist.
    pub fn sup_bound(&self) -> Result<SupBound> {
        let mut certified = 0.0;
        let mut horizon: f64 = 1.0;
        for (shape, amp) in &self.terms {
            let mu = self.basis.value_of(&shape.rate);
            let k = shape.tpow;
            if mu > 0.0 || (mu == 0.0 && k > 0) {
                return Err(Error::UnboundedOnHalfLine(format!(
                    "term {} t^{} e^({}t) grows on t >= 0",
                    amp, k, mu
                )));
            }
            let per_term_max = if mu == 0.0 {
                1.0
            } else if k == 0 {
                1.0
            } else {
                // max of t^k e^{mu t} at t = -k/mu
                let tstar = -(k as f64) / mu;
                horizon = horizon.max(4.0 * tstar);
                tstar.powi(k as i32) * (-(k as f64)).exp()
            };
            if mu < 0.0 {
                horizon = horizon.max(8.0 / -mu);
            }
            certified += amp.norm() * per_term_max;
        }
        if self.terms.is_empty() {
            return Ok(SupBound { certified: 0.0, sampled: 0.0, sampled_at: 0.0 });
        }
        let horizon = horizon.min(400.0);
        let (sampled, sampled_at) = self.sampled_max(horizon);
        Ok(SupBound { certified, sampled, sampled_at })
    }

    /// Grid maximum of |f| on [0, horizon] refined by golden section.
    fn sampled_max(&self, horizon: f64) -> (f64, f64) {
        const GRID: usize = 400;
        let mut best = (self.eval(0.0).norm(), 0.0);
        for i in 1..=GRID {
            let t = horizon * i as f64 / GRID as f64;
            let v = self.eval(t).norm();
            if v > best.0 {
                best = (v, t);
            }
        }
        // refine around the best grid point
        let step = horizon / GRID as f64;
        let (mut lo, mut hi) = ((best.1 - step).max(0.0), best.1 + step);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = self.eval(x1).norm();
        let mut f2 = self.eval(x2).norm();
        for _ in 0..80 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = self.eval(x2).norm();
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = self.eval(x1).norm();
            }
        }
        let (v, t) = if f1 > f2 { (f1, x1) } else { (f2, x2) };
        if v > best.0 {
            (v, t)
        } else {
            best
        }
    }

    /// Largest amplitude difference over the union of term shapes.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        let mut shapes: Vec<&TermShape> = self.terms.keys().collect();
        for s in other.terms.keys() {
            if !self.terms.contains_key(s) {
                shapes.push(s);
            }
        }
        for s in shapes {
            let a = self.terms.get(s).copied().unwrap_or(C64::new(0.0, 0.0));
            let b = other.terms.get(s).copied().unwrap_or(C64::new(0.0, 0.0));
            worst = worst.max((a - b).norm());
        }
        worst
    }

    /// Term-set equality with a relative amplitude tolerance, for tests
    /// and exactness checks after floating arithmetic.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.basis != other.basis {
            return false;
        }
        let scale = self.max_abs_amp().max(other.max_abs_amp()).max(1e-300);
        self.max_diff(other) <= tol * scale
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (shape, amp) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if amp.im == 0.0 {
                write!(f, "({})", amp.re)?;
            } else {
                write!(f, "({}{:+}i)", amp.re, amp.im)?;
            }
            if shape.tpow > 0 {
                write!(f, "*t^{}", shape.tpow)?;
            }
            let mu = self.basis.value_of(&shape.rate);
            if !shape.rate.is_zero() {
                write!(f, "*e^({}t)", mu)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn basis() -> RateBasis {
        RateBasis::standard(1.0, 1.0) // [-1, 1]
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// amp * t^k * e^(-n t) over the standard basis.
    fn decay(b: &RateBasis, amp: f64, k: u32, n: i32) -> ExpPoly {
        ExpPoly::term(b, c(amp), k, RateVector::new(vec![n, 0])).unwrap()
    }

    #[test]
    fn product_adds_exponents() {
        let b = basis();
        let e1 = decay(&b, 1.0, 0, 1);
        let prod = e1.mul(&e1).unwrap();
        assert!(prod.approx_eq(&decay(&b, 1.0, 0, 2), 1e-14));
    }

    #[test]
    fn cancellation_empties_term_set() {
        let b = basis();
        let f = decay(&b, 1.0, 1, 1);
        let g = decay(&b, -1.0, 1, 1);
        assert!(f.add(&g).unwrap().is_zero());
    }

    #[test]
    fn product_distributes() {
        let b = basis();
        let one_plus_t = ExpPoly::real_constant(&b, 1.0)
            .add(&ExpPoly::term(&b, c(1.0), 1, b.zero_vector()).unwrap())
            .unwrap();
        let e2 = decay(&b, 1.0, 0, 2);
        let prod = one_plus_t.mul(&e2).unwrap();
        let expect = decay(&b, 1.0, 0, 2).add(&decay(&b, 1.0, 1, 2)).unwrap();
        assert!(prod.approx_eq(&expect, 1e-14));
    }

    #[test]
    fn mismatched_bases_rejected() {
        let b1 = basis();
        let b2 = RateBasis::standard(2.0, 1.0);
        let f = ExpPoly::real_constant(&b1, 1.0);
        let g = ExpPoly::real_constant(&b2, 1.0);
        assert!(matches!(f.add(&g), Err(Error::BasisMismatch)));
    }

    #[test]
    fn derivative_product_rule() {
        let b = basis();
        // d/dt (t e^{-t}) = e^{-t} - t e^{-t}
        let f = decay(&b, 1.0, 1, 1);
        let expect = decay(&b, 1.0, 0, 1).add(&decay(&b, -1.0, 1, 1)).unwrap();
        assert!(f.derivative().approx_eq(&expect, 1e-14));
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let b = basis();
        assert!(ExpPoly::real_constant(&b, 5.0).derivative().is_zero());
    }

    #[test]
    fn derivative_of_growing_exponential() {
        let b = basis();
        let f = ExpPoly::term(&b, c(1.0), 0, RateVector::new(vec![0, 2])).unwrap();
        assert!(f.derivative().approx_eq(&f.scale(c(2.0)), 1e-14));
    }

    #[test]
    fn integral_of_exponential() {
        let b = basis();
        // int_0^t e^{-2s} ds = (1 - e^{-2t})/2
        let f = decay(&b, 1.0, 0, 2);
        let expect = ExpPoly::real_constant(&b, 0.5).add(&decay(&b, -0.5, 0, 2)).unwrap();
        assert!(f.integrate().approx_eq(&expect, 1e-14));
    }

    #[test]
    fn integral_of_constant() {
        let b = basis();
        let f = ExpPoly::real_constant(&b, 1.0);
        let expect = ExpPoly::term(&b, c(1.0), 1, b.zero_vector()).unwrap();
        assert!(f.integrate().approx_eq(&expect, 1e-14));
    }

    #[test]
    fn integral_matches_quadrature() {
        let b = basis();
        // e^{t} * e^{-2t} = e^{-t}; int_0^t = 1 - e^{-t}, checked against
        // Simpson quadrature on [0, 3]
        let f = ExpPoly::term(&b, c(1.0), 0, RateVector::new(vec![0, 1]))
            .unwrap()
            .mul(&decay(&b, 1.0, 0, 2))
            .unwrap();
        let integral = f.integrate();
        for &t in &[0.3, 0.9, 1.7, 2.4, 3.0] {
            let n = 2000;
            let h = t / n as f64;
            let mut acc = f.eval(0.0) + f.eval(t);
            for i in 1..n {
                let w = if i % 2 == 0 { 2.0 } else { 4.0 };
                acc += f.eval(h * i as f64) * w;
            }
            let quad = acc * (h / 3.0);
            assert_relative_eq!(integral.eval(t).re, quad.re, epsilon = 1e-10);
        }
        // the decaying part stays at the lattice point (2, 1), which also
        // has rate value -1
        let expect = ExpPoly::real_constant(&b, 1.0)
            .add(&ExpPoly::term(&b, c(-1.0), 0, RateVector::new(vec![2, 1])).unwrap())
            .unwrap();
        assert!(integral.approx_eq(&expect, 1e-14));
    }

    #[test]
    fn integral_with_polynomial_factor() {
        let b = basis();
        // int_0^t s e^{-s} ds = 1 - (1+t) e^{-t}
        let f = decay(&b, 1.0, 1, 1);
        let g = f.integrate();
        assert!(g.eval(0.0).norm() < 1e-15);
        assert!(g.derivative().approx_eq(&f, 1e-13));
        assert_relative_eq!(g.eval(2.0).re, 1.0 - 3.0 * (-2.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn improper_from_zero_scalar() {
        let b = basis();
        let f = decay(&b, 1.0, 0, 2);
        assert_relative_eq!(f.improper_from_zero().unwrap().re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn improper_tail_of_exponential() {
        let b = basis();
        // int_t^inf e^{-s} ds = e^{-t}
        let f = decay(&b, 1.0, 0, 1);
        assert!(f.improper_tail().unwrap().approx_eq(&f, 1e-14));
    }

    #[test]
    fn improper_integral_rejects_rate_zero() {
        let b = basis();
        let f = ExpPoly::real_constant(&b, 1.0);
        assert!(matches!(
            f.improper_from_zero(),
            Err(Error::DivergentImproperIntegral(_))
        ));
        assert!(matches!(f.improper_tail(), Err(Error::DivergentImproperIntegral(_))));
    }

    #[test]
    fn sup_bound_of_t_exp() {
        let b = basis();
        let f = decay(&b, 1.0, 1, 1);
        let sb = f.sup_bound().unwrap();
        assert_relative_eq!(sb.certified, (-1.0f64).exp(), epsilon = 1e-14);
        assert_relative_eq!(sb.sampled, (-1.0f64).exp(), epsilon = 1e-10);
        assert_relative_eq!(sb.sampled_at, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn sup_bound_difference_of_exponentials() {
        let b = basis();
        // e^{-t} - e^{-2t}: per-term certified sum 2, true max 1/4 at ln 2
        let f = decay(&b, 1.0, 0, 1).add(&decay(&b, -1.0, 0, 2)).unwrap();
        let sb = f.sup_bound().unwrap();
        assert_relative_eq!(sb.certified, 2.0, epsilon = 1e-14);
        assert_relative_eq!(sb.sampled, 0.25, epsilon = 1e-9);
        assert_relative_eq!(sb.sampled_at, 2.0f64.ln(), epsilon = 1e-5);
    }

    #[test]
    fn sup_bound_of_constant() {
        let b = basis();
        let f = ExpPoly::real_constant(&b, 3.0);
        let sb = f.sup_bound().unwrap();
        assert_relative_eq!(sb.certified, 3.0, epsilon = 1e-15);
        assert_relative_eq!(sb.sampled, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn sup_bound_rejects_growth() {
        let b = basis();
        let grow = ExpPoly::term(&b, c(1.0), 0, RateVector::new(vec![0, 1])).unwrap();
        assert!(matches!(grow.sup_bound(), Err(Error::UnboundedOnHalfLine(_))));
        let secular = ExpPoly::term(&b, c(1.0), 1, b.zero_vector()).unwrap();
        assert!(matches!(secular.sup_bound(), Err(Error::UnboundedOnHalfLine(_))));
    }

    #[test]
    fn eval_examples() {
        let b = basis();
        assert_relative_eq!(decay(&b, 1.0, 0, 1).eval(0.0).re, 1.0);
        assert_relative_eq!(decay(&b, 1.0, 1, 1).eval(1.0).re, (-1.0f64).exp());
        let f = ExpPoly::real_constant(&b, 1.0).add(&decay(&b, -1.0, 0, 1)).unwrap();
        assert!((f.eval(30.0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_shift_is_exact_multiplication() {
        let b = basis();
        let f = decay(&b, 2.0, 1, 2);
        let shifted = f.rate_shifted(&RateVector::new(vec![-1, 0])).unwrap();
        assert!(shifted.approx_eq(&decay(&b, 2.0, 1, 1), 1e-14));
    }

    #[test]
    fn time_shift_reindexes_polynomial() {
        let b = basis();
        let f = decay(&b, 1.0, 2, 1); // t^2 e^{-t}
        let g = f.time_shifted(3.0);
        for &u in &[0.0, 0.5, 2.0] {
            assert_relative_eq!(g.eval(u).re, f.eval(3.0 + u).re, epsilon = 1e-12);
        }
    }

    #[test]
    fn lattice_resonance_integrates_to_polynomial() {
        // e^{-t} shifted by +1 lattice unit of omega with a = omega = 1 has
        // exact rate zero: the integral must take the polynomial branch.
        let b = basis();
        let f = decay(&b, 1.0, 0, 1).rate_shifted(&RateVector::new(vec![0, 1])).unwrap();
        let g = f.integrate();
        let expect = ExpPoly::term(&b, c(1.0), 1, RateVector::new(vec![1, 1])).unwrap();
        assert!(g.approx_eq(&expect, 1e-14));
        assert!(g.derivative().approx_eq(&f, 1e-14));
    }
}
