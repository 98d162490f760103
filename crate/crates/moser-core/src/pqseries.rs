//! Truncated Taylor series in `(p, q)` and in `x = pq` over
//! exponential-polynomial time coefficients.
//!
//! `PQSeries` stores monomials `p^a q^b` with `a + b <= N`; every product
//! drops monomials beyond the truncation degree, so the normalization
//! iteration terminates exactly once the residual degree exceeds `N`.
//! `XSeries` stores powers of `x = pq` up to `floor(N/2)` and houses the
//! normal-form part `J(x, t)` and the quantities derived from it.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::timecoeff::{ExpPoly, RateBasis, RateVector};
use crate::{Error, Result};

/// Truncated Taylor series `sum_{|alpha| <= N} g_alpha(t) p^a q^b`.
#[derive(Clone, Debug)]
pub struct PQSeries {
    basis: RateBasis,
    trunc: u32,
    coeffs: BTreeMap<(u32, u32), ExpPoly>,
}

impl PQSeries {
    pub fn zero(basis: &RateBasis, trunc: u32) -> Self {
        PQSeries { basis: basis.clone(), trunc, coeffs: BTreeMap::new() }
    }

    /// Single monomial `coeff * p^a q^b`.
    pub fn monomial(trunc: u32, alpha: (u32, u32), coeff: ExpPoly) -> Self {
        let mut s = PQSeries::zero(coeff.basis(), trunc);
        s.insert_add(alpha, coeff);
        s
    }

    pub fn basis(&self) -> &RateBasis {
        &self.basis
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, alpha: (u32, u32)) -> Option<&ExpPoly> {
        self.coeffs.get(&alpha)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), &ExpPoly)> {
        self.coeffs.iter().map(|(a, c)| (*a, c))
    }

    pub fn num_monomials(&self) -> usize {
        self.coeffs.len()
    }

    /// Add `coeff` to the stored coefficient of `alpha`, dropping the
    /// monomial if it exceeds the truncation degree or cancels to zero.
    pub fn insert_add(&mut self, alpha: (u32, u32), coeff: ExpPoly) {
        if alpha.0 + alpha.1 > self.trunc || coeff.is_zero() {
            return;
        }
        match self.coeffs.remove(&alpha) {
            None => {
                self.coeffs.insert(alpha, coeff);
            }
            Some(existing) => {
                let sum = existing.add(&coeff).expect("basis checked on construction");
                if !sum.is_zero() {
                    self.coeffs.insert(alpha, sum);
                }
            }
        }
    }

    fn check_compat(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        if self.trunc != other.trunc {
            return Err(Error::Precondition(format!(
                "truncation degrees differ: {} vs {}",
                self.trunc, other.trunc
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (alpha, c) in &other.coeffs {
            out.insert_add(*alpha, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = PQSeries::zero(&self.basis, self.trunc);
        for (alpha, coeff) in &self.coeffs {
            out.insert_add(*alpha, coeff.scale(c));
        }
        out
    }

    /// Product, exact below the truncation degree.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = PQSeries::zero(&self.basis, self.trunc);
        for ((a1, a2), ca) in &self.coeffs {
            if a1 + a2 > self.trunc {
                continue;
            }
            for ((b1, b2), cb) in &other.coeffs {
                if a1 + b1 + a2 + b2 > self.trunc {
                    continue;
                }
                out.insert_add((a1 + b1, a2 + b2), ca.mul(cb)?);
            }
        }
        Ok(out)
    }

    /// Partial derivative in `p`.
    pub fn dp(&self) -> Self {
        let mut out = PQSeries::zero(&self.basis, self.trunc);
        for ((a1, a2), c) in &self.coeffs {
            if *a1 > 0 {
                out.insert_add((a1 - 1, *a2), c.scale(C64::new(*a1 as f64, 0.0)));
            }
        }
        out
    }

    /// Partial derivative in `q`.
    pub fn dq(&self) -> Self {
        let mut out = PQSeries::zero(&self.basis, self.trunc);
        for ((a1, a2), c) in &self.coeffs {
            if *a2 > 0 {
                out.insert_add((*a1, a2 - 1), c.scale(C64::new(*a2 as f64, 0.0)));
            }
        }
        out
    }

    /// Coefficient-wise d/dt.
    pub fn dt(&self) -> Self {
        let mut out = PQSeries::zero(&self.basis, self.trunc);
        for (alpha, c) in &self.coeffs {
            out.insert_add(*alpha, c.derivative());
        }
        out
    }

    /// The grading operator `q d/dq - p d/dp`: multiplies each monomial by
    /// `alpha_2 - alpha_1`.
    pub fn eth(&self) -> Self {
        let mut out = PQSeries::zero(&self.basis, self.trunc);
        for ((a1, a2), c) in &self.coeffs {
            let lambda = *a2 as f64 - *a1 as f64;
            if lambda != 0.0 {
                out.insert_add((*a1, *a2), c.scale(C64::new(lambda, 0.0)));
            }
        }
        out
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|(a, b)| a + b).min()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|(a, b)| a + b).max()
    }

    /// Copy with a different truncation degree (dropping excess monomials).
    pub fn retruncated(&self, trunc: u32) -> Self {
        let mut out = PQSeries::zero(&self.basis, trunc);
        for (alpha, c) in &self.coeffs {
            out.insert_add(*alpha, c.clone());
        }
        out
    }

    /// Certified Taylor norm `sum_alpha |g_alpha|_+ R^|alpha|` using the
    /// certified sup bound of each coefficient.
    pub fn taylor_norm(&self, radius: f64) -> Result<f64> {
        let mut acc = 0.0;
        for ((a1, a2), c) in &self.coeffs {
            let sup = c.sup_bound()?.certified;
            acc += sup * radius.powi((a1 + a2) as i32);
        }
        Ok(acc)
    }

    /// Smallest certified `M` with
    /// `sum |g_alpha(t)| R^|alpha| <= M e^{-a t}` where the decay rate `a`
    /// is the (positive) value of `shift`: multiplies every coefficient by
    /// `e^{a t}` through an exact lattice shift and certifies the sup.
    pub fn decay_envelope(&self, radius: f64, shift: &RateVector) -> Result<f64> {
        let mut acc = 0.0;
        for ((a1, a2), c) in &self.coeffs {
            let sup = c.rate_shifted(shift)?.sup_bound()?.certified;
            acc += sup * radius.powi((a1 + a2) as i32);
        }
        Ok(acc)
    }

    /// Split into mixed monomials (`alpha_1 != alpha_2`) and the diagonal
    /// part as a series in `x = pq`; recombination reproduces the input
    /// exactly.
    pub fn split_mixed_diagonal(&self) -> (PQSeries, XSeries) {
        let mut mixed = PQSeries::zero(&self.basis, self.trunc);
        let mut diag = XSeries::zero(&self.basis, self.trunc / 2);
        for ((a1, a2), c) in &self.coeffs {
            if a1 == a2 {
                diag.insert_add(*a1, c.clone());
            } else {
                mixed.insert_add((*a1, *a2), c.clone());
            }
        }
        (mixed, diag)
    }

    /// Pointwise value at `(p, q, t)`.
    pub fn eval(&self, p: C64, q: C64, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ((a1, a2), c) in &self.coeffs {
            acc += c.eval(t) * p.powu(*a1) * q.powu(*a2);
        }
        acc
    }

    /// Largest coefficient amplitude across the series.
    pub fn max_abs_amp(&self) -> f64 {
        self.coeffs.values().map(|c| c.max_abs_amp()).fold(0.0, f64::max)
    }

    /// Term-set equality with a tolerance relative to the largest
    /// amplitude of the pair.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.basis != other.basis {
            return false;
        }
        let scale = self.max_abs_amp().max(other.max_abs_amp()).max(1e-300);
        let zero = ExpPoly::zero(&self.basis);
        let mut alphas: Vec<(u32, u32)> = self.coeffs.keys().copied().collect();
        for a in other.coeffs.keys() {
            if !self.coeffs.contains_key(a) {
                alphas.push(*a);
            }
        }
        alphas.iter().all(|a| {
            let x = self.coeffs.get(a).unwrap_or(&zero);
            let y = other.coeffs.get(a).unwrap_or(&zero);
            x.max_diff(y) <= tol * scale
        })
    }
}

/// Truncated series `sum_k c_k(t) x^k` in `x = pq`.
#[derive(Clone, Debug)]
pub struct XSeries {
    basis: RateBasis,
    trunc: u32,
    coeffs: BTreeMap<u32, ExpPoly>,
}

impl XSeries {
    pub fn zero(basis: &RateBasis, trunc: u32) -> Self {
        XSeries { basis: basis.clone(), trunc, coeffs: BTreeMap::new() }
    }

    pub fn constant(basis: &RateBasis, trunc: u32, c: C64) -> Self {
        let mut s = XSeries::zero(basis, trunc);
        s.insert_add(0, ExpPoly::constant(basis, c));
        s
    }

    pub fn monomial(trunc: u32, k: u32, coeff: ExpPoly) -> Self {
        let mut s = XSeries::zero(coeff.basis(), trunc);
        s.insert_add(k, coeff);
        s
    }

    pub fn basis(&self) -> &RateBasis {
        &self.basis
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: u32) -> Option<&ExpPoly> {
        self.coeffs.get(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &ExpPoly)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn min_xdegree(&self) -> Option<u32> {
        self.coeffs.keys().min().copied()
    }

    pub fn insert_add(&mut self, k: u32, coeff: ExpPoly) {
        if k > self.trunc || coeff.is_zero() {
            return;
        }
        match self.coeffs.remove(&k) {
            None => {
                self.coeffs.insert(k, coeff);
            }
            Some(existing) => {
                let sum = existing.add(&coeff).expect("basis checked on construction");
                if !sum.is_zero() {
                    self.coeffs.insert(k, sum);
                }
            }
        }
    }

    fn check_compat(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        if self.trunc != other.trunc {
            return Err(Error::Precondition(format!(
                "x-truncation degrees differ: {} vs {}",
                self.trunc, other.trunc
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.insert_add(*k, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (k, coeff) in &self.coeffs {
            out.insert_add(*k, coeff.scale(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (ka, ca) in &self.coeffs {
            for (kb, cb) in &other.coeffs {
                if ka + kb > self.trunc {
                    continue;
                }
                out.insert_add(ka + kb, ca.mul(cb)?);
            }
        }
        Ok(out)
    }

    /// Coefficient-wise product with a time coefficient.
    pub fn mul_coeff(&self, f: &ExpPoly) -> Result<Self> {
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (k, c) in &self.coeffs {
            out.insert_add(*k, c.mul(f)?);
        }
        Ok(out)
    }

    /// d/dx.
    pub fn dx(&self) -> Self {
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (k, c) in &self.coeffs {
            if *k > 0 {
                out.insert_add(k - 1, c.scale(C64::new(*k as f64, 0.0)));
            }
        }
        out
    }

    /// Coefficient-wise d/dt.
    pub fn dt(&self) -> Self {
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (k, c) in &self.coeffs {
            out.insert_add(*k, c.derivative());
        }
        out
    }

    /// Coefficient-wise integral from 0 in time.
    pub fn integrate_t(&self) -> Self {
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (k, c) in &self.coeffs {
            out.insert_add(*k, c.integrate());
        }
        out
    }

    /// Coefficient-wise tail integral in time.
    pub fn improper_tail_t(&self) -> Result<Self> {
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (k, c) in &self.coeffs {
            out.insert_add(*k, c.improper_tail()?);
        }
        Ok(out)
    }

    /// Coefficient-wise exact multiplication by `exp(delta·t)`.
    pub fn rate_shifted(&self, delta: &RateVector) -> Result<Self> {
        let mut out = XSeries::zero(&self.basis, self.trunc);
        for (k, c) in &self.coeffs {
            out.insert_add(*k, c.rate_shifted(delta)?);
        }
        Ok(out)
    }

    /// `exp(S)` truncated in x-degree; exact at truncation because a series
    /// without constant term is nilpotent there.
    pub fn exp(&self) -> Result<Self> {
        if self.coeffs.contains_key(&0) {
            return Err(Error::Precondition(
                "series exponential requires a zero x-constant term".into(),
            ));
        }
        let mut out = XSeries::constant(&self.basis, self.trunc, C64::new(1.0, 0.0));
        let mut power = XSeries::constant(&self.basis, self.trunc, C64::new(1.0, 0.0));
        for m in 1..=self.trunc {
            power = power.mul(self)?.scale(C64::new(1.0 / m as f64, 0.0));
            if power.is_zero() {
                break;
            }
            out = out.add(&power)?;
        }
        Ok(out)
    }

    /// Embed as a `PQSeries` via `x^k -> (pq)^k`.
    pub fn to_pq(&self, trunc: u32) -> PQSeries {
        let mut out = PQSeries::zero(&self.basis, trunc);
        for (k, c) in &self.coeffs {
            out.insert_add((*k, *k), c.clone());
        }
        out
    }

    pub fn eval(&self, x: C64, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (k, c) in &self.coeffs {
            acc += c.eval(t) * x.powu(*k);
        }
        acc
    }

    pub fn max_abs_amp(&self) -> f64 {
        self.coeffs.values().map(|c| c.max_abs_amp()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.basis != other.basis {
            return false;
        }
        let scale = self.max_abs_amp().max(other.max_abs_amp()).max(1e-300);
        let zero = ExpPoly::zero(&self.basis);
        let mut ks: Vec<u32> = self.coeffs.keys().copied().collect();
        for k in other.coeffs.keys() {
            if !self.coeffs.contains_key(k) {
                ks.push(*k);
            }
        }
        ks.iter().all(|k| {
            let x = self.coeffs.get(k).unwrap_or(&zero);
            let y = other.coeffs.get(k).unwrap_or(&zero);
            x.max_diff(y) <= tol * scale
        })
    }
}

/// The recursive Hamiltonian `J(x, t) + eta + F(p, q, t)`: `J` includes
/// the linear part `omega x`, the conjugate variable `eta` is implicit
/// with unit coefficient, and `F` starts at degree 3.
#[derive(Clone, Debug)]
pub struct MoserHamiltonian {
    omega: f64,
    j: XSeries,
    f: PQSeries,
}

impl MoserHamiltonian {
    /// The unnormalized Hamiltonian: `J = omega x` plus the perturbation.
    pub fn initial(omega: f64, f: PQSeries) -> Result<Self> {
        if omega <= 0.0 {
            return Err(Error::Precondition("omega must be positive".into()));
        }
        let j = XSeries::monomial(
            f.trunc() / 2,
            1,
            ExpPoly::real_constant(f.basis(), omega),
        );
        MoserHamiltonian::new(omega, j, f)
    }

    pub fn new(omega: f64, j: XSeries, f: PQSeries) -> Result<Self> {
        if let Some(d) = f.min_degree() {
            if d < 3 {
                return Err(Error::Precondition(format!(
                    "perturbation must start at degree 3, found degree {d}"
                )));
            }
        }
        if j.coeff(0).is_some() {
            return Err(Error::Precondition("J(0, t) must vanish".into()));
        }
        match j.coeff(1) {
            Some(c1) => {
                let expect = ExpPoly::real_constant(f.basis(), omega);
                if !c1.approx_eq(&expect, 1e-12) {
                    return Err(Error::Precondition(
                        "the x-linear coefficient of J must equal omega".into(),
                    ));
                }
            }
            None => {
                return Err(Error::Precondition(
                    "J must contain the linear term omega x".into(),
                ));
            }
        }
        Ok(MoserHamiltonian { omega, j, f })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn j(&self) -> &XSeries {
        &self.j
    }

    pub fn f(&self) -> &PQSeries {
        &self.f
    }

    pub fn trunc(&self) -> u32 {
        self.f.trunc()
    }

    pub fn basis(&self) -> &RateBasis {
        self.f.basis()
    }

    /// The frequency function `g = dJ/dx`.
    pub fn g(&self) -> XSeries {
        self.j.dx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timecoeff::RateVector;
    use approx::assert_relative_eq;

    fn basis() -> RateBasis {
        RateBasis::standard(1.0, 1.0)
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn decay(b: &RateBasis, amp: f64, k: u32, n: i32) -> ExpPoly {
        ExpPoly::term(b, c(amp), k, RateVector::new(vec![n, 0])).unwrap()
    }

    #[test]
    fn taylor_norm_single_monomial() {
        let b = basis();
        let g = PQSeries::monomial(8, (2, 1), ExpPoly::real_constant(&b, 2.0));
        assert_relative_eq!(g.taylor_norm(0.5).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn taylor_norm_of_zero() {
        let b = basis();
        assert_eq!(PQSeries::zero(&b, 8).taylor_norm(0.5).unwrap(), 0.0);
    }

    #[test]
    fn taylor_norm_mixes_sup_bounds() {
        let b = basis();
        let mut g = PQSeries::zero(&b, 8);
        g.insert_add((3, 0), decay(&b, 1.0, 0, 1));
        g.insert_add((0, 4), decay(&b, 1.0, 1, 1));
        let expect = 0.125 + (-1.0f64).exp() * 0.0625;
        assert_relative_eq!(g.taylor_norm(0.5).unwrap(), expect, epsilon = 1e-14);
        assert_relative_eq!(g.taylor_norm(0.5).unwrap(), 0.14799246507321514, epsilon = 1e-12);
    }

    #[test]
    fn decay_envelope_examples() {
        let b = basis();
        // shift by +a: one lattice unit against slot 0 (which carries -a)
        let shift = RateVector::new(vec![-1, 0]);
        let g = PQSeries::monomial(8, (3, 0), decay(&b, 1.0, 0, 1));
        assert_relative_eq!(g.decay_envelope(0.5, &shift).unwrap(), 0.125, epsilon = 1e-15);

        let g2 = PQSeries::monomial(8, (3, 0), decay(&b, 1.0, 0, 2));
        assert_relative_eq!(g2.decay_envelope(0.5, &shift).unwrap(), 0.125, epsilon = 1e-15);

        // envelope at rate 2a does not exist for an e^{-at} coefficient
        let shift2 = RateVector::new(vec![-2, 0]);
        assert!(matches!(
            g.decay_envelope(0.5, &shift2),
            Err(Error::UnboundedOnHalfLine(_))
        ));
    }

    #[test]
    fn split_examples() {
        let b = basis();
        let mut g = PQSeries::zero(&b, 8);
        g.insert_add((3, 0), ExpPoly::real_constant(&b, 1.0));
        g.insert_add((2, 2), ExpPoly::real_constant(&b, 1.0));
        let (mixed, diag) = g.split_mixed_diagonal();
        assert_eq!(mixed.num_monomials(), 1);
        assert!(mixed.coeff((3, 0)).is_some());
        assert!(diag.coeff(2).is_some());
        assert!(diag.coeff(0).is_none());

        let pq_only = PQSeries::monomial(8, (1, 1), decay(&b, 1.0, 0, 1));
        let (m2, d2) = pq_only.split_mixed_diagonal();
        assert!(m2.is_zero());
        assert!(d2.coeff(1).unwrap().approx_eq(&decay(&b, 1.0, 0, 1), 1e-14));

        let mut g3 = PQSeries::zero(&b, 8);
        g3.insert_add((4, 1), ExpPoly::real_constant(&b, 1.0));
        g3.insert_add((3, 3), decay(&b, 1.0, 0, 1));
        g3.insert_add((0, 3), ExpPoly::real_constant(&b, 1.0));
        let (m3, d3) = g3.split_mixed_diagonal();
        assert_eq!(m3.num_monomials(), 2);
        assert!(d3.coeff(3).unwrap().approx_eq(&decay(&b, 1.0, 0, 1), 1e-14));

        // recombination reproduces the input exactly
        let recombined = m3.add(&d3.to_pq(8)).unwrap();
        assert!(recombined.approx_eq(&g3, 0.0));
    }

    #[test]
    fn xseries_exp_examples() {
        let b = basis();
        let zero = XSeries::zero(&b, 3);
        let one = XSeries::constant(&b, 3, c(1.0));
        assert!(zero.exp().unwrap().approx_eq(&one, 1e-15));

        // scalar coefficient: exp(c x) = sum c^m x^m / m!
        let s = XSeries::monomial(3, 1, ExpPoly::real_constant(&b, 2.0));
        let e = s.exp().unwrap();
        assert!(e.coeff(0).unwrap().approx_eq(&ExpPoly::real_constant(&b, 1.0), 1e-14));
        assert!(e.coeff(1).unwrap().approx_eq(&ExpPoly::real_constant(&b, 2.0), 1e-14));
        assert!(e.coeff(2).unwrap().approx_eq(&ExpPoly::real_constant(&b, 2.0), 1e-14));
        assert!(e.coeff(3).unwrap().approx_eq(&ExpPoly::real_constant(&b, 4.0 / 3.0), 1e-14));

        // nonzero constant term rejected
        assert!(one.exp().is_err());
    }

    #[test]
    fn xseries_exp_time_dependent() {
        let b = basis();
        // S = (1 - e^{-t}) x at N = 4 (x-truncation 2)
        let coeff = ExpPoly::real_constant(&b, 1.0).add(&decay(&b, -1.0, 0, 1)).unwrap();
        let s = XSeries::monomial(2, 1, coeff.clone());
        let e = s.exp().unwrap();
        assert!(e.coeff(0).unwrap().approx_eq(&ExpPoly::real_constant(&b, 1.0), 1e-14));
        assert!(e.coeff(1).unwrap().approx_eq(&coeff, 1e-14));
        let half_sq = coeff.mul(&coeff).unwrap().scale(c(0.5));
        assert!(e.coeff(2).unwrap().approx_eq(&half_sq, 1e-14));

        // pointwise agreement with exp at sampled (x, t); the dropped
        // x^3 tail is below |S|^3/6 <= 2e-5 at these radii
        for &t in &[0.0, 0.7, 2.1] {
            for &x in &[0.0, 0.04, -0.05] {
                let sx = s.eval(c(x), t);
                let truth = sx.exp();
                let diff = (e.eval(c(x), t) - truth).norm();
                assert!(diff < 2e-5, "diff {diff} at x={x}, t={t}");
            }
        }
    }

    #[test]
    fn exp_times_exp_inverse_is_identity() {
        let b = basis();
        let coeff = decay(&b, 0.7, 1, 1);
        let mut s = XSeries::monomial(5, 1, coeff);
        s.insert_add(2, decay(&b, -0.3, 0, 2));
        let prod = s.exp().unwrap().mul(&s.scale(c(-1.0)).exp().unwrap()).unwrap();
        assert!(prod.coeff(0).unwrap().approx_eq(&ExpPoly::real_constant(&b, 1.0), 1e-13));
        for k in 1..=5 {
            if let Some(ck) = prod.coeff(k) {
                assert!(ck.max_abs_amp() < 1e-12, "order {k} residue {}", ck.max_abs_amp());
            }
        }
    }

    #[test]
    fn all_ones_norm_approaches_geometric_identity() {
        // sum_{|alpha| <= D} lambda^|alpha| -> (1 - lambda)^{-2}
        let b = basis();
        let d = 60;
        let mut g = PQSeries::zero(&b, d);
        for a1 in 0..=d {
            for a2 in 0..=(d - a1) {
                g.insert_add((a1, a2), ExpPoly::real_constant(&b, 1.0));
            }
        }
        let norm = g.taylor_norm(0.5).unwrap();
        assert!((norm - 4.0).abs() < 1e-6, "norm {norm}");
    }

    #[test]
    fn norm_is_submultiplicative_without_truncation() {
        let b = basis();
        let mut f = PQSeries::zero(&b, 24);
        f.insert_add((3, 0), decay(&b, 1.3, 0, 1));
        f.insert_add((1, 4), decay(&b, -0.4, 1, 2));
        f.insert_add((2, 2), ExpPoly::real_constant(&b, 0.9));
        let mut g = PQSeries::zero(&b, 24);
        g.insert_add((0, 3), decay(&b, 0.8, 0, 1));
        g.insert_add((5, 1), decay(&b, 2.0, 2, 3));
        let r = 0.4;
        let fg = f.mul(&g).unwrap();
        assert!(
            fg.taylor_norm(r).unwrap()
                <= f.taylor_norm(r).unwrap() * g.taylor_norm(r).unwrap() + 1e-13
        );
    }

    #[test]
    fn hamiltonian_invariants_enforced() {
        let b = basis();
        let f_bad = PQSeries::monomial(8, (1, 1), ExpPoly::real_constant(&b, 1.0));
        assert!(MoserHamiltonian::initial(1.0, f_bad).is_err());

        let f = PQSeries::monomial(8, (3, 0), decay(&b, 0.01, 0, 1));
        let h = MoserHamiltonian::initial(1.0, f).unwrap();
        assert!(h.j().coeff(0).is_none());
        assert!(h
            .j()
            .coeff(1)
            .unwrap()
            .approx_eq(&ExpPoly::real_constant(&b, 1.0), 1e-15));
        assert!(h.g().coeff(0).unwrap().approx_eq(&ExpPoly::real_constant(&b, 1.0), 1e-15));
    }
}
