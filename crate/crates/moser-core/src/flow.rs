//! Numerical verification of the dynamics: integrate the original
//! non-autonomous system, evaluate the normal-form flow from its closed
//! form, and measure the conjugacy error through the composed
//! transformation.

use num_complex::Complex64 as C64;

use crate::lie::{MapDirection, PhasePoint, TransformChain};
use crate::normalizer::NormalFormResult;
use crate::pqseries::{MoserHamiltonian, PQSeries, XSeries};
use crate::{Error, Result};

/// Integrator options for the adaptive fourth-order Runge-Kutta scheme
/// with step-doubling error control.
#[derive(Clone, Copy, Debug)]
pub struct IntegratorOpts {
    /// Local error per unit time.
    pub tol: f64,
    /// Trajectories leaving `|p|` or `|q| > escape_radius` are truncated
    /// and flagged.
    pub escape_radius: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        IntegratorOpts { tol: 1e-10, escape_radius: 1.0, max_steps: 20_000_000 }
    }
}

/// A sampled trajectory of the extended system.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `(p, q, eta)` at each retained time.
    pub states: Vec<[C64; 3]>,
    pub escaped: bool,
}

/// Right-hand side of the extended equations of motion for
/// `H = J(x,t) + eta + F(p,q,t)`:
/// `p' = -g(x,t) p - F_q`, `q' = g(x,t) q + F_p`, `eta' = -J_t - F_t`.
struct HamiltonianField {
    g: XSeries,
    j_t: XSeries,
    f_p: PQSeries,
    f_q: PQSeries,
    f_t: PQSeries,
}

impl HamiltonianField {
    fn new(h: &MoserHamiltonian) -> Self {
        HamiltonianField {
            g: h.g(),
            j_t: h.j().dt(),
            f_p: h.f().dp(),
            f_q: h.f().dq(),
            f_t: h.f().dt(),
        }
    }

    fn rhs(&self, t: f64, y: &[C64; 3]) -> [C64; 3] {
        let (p, q) = (y[0], y[1]);
        let x = p * q;
        let g = self.g.eval(x, t);
        [
            -g * p - self.f_q.eval(p, q, t),
            g * q + self.f_p.eval(p, q, t),
            -self.j_t.eval(x, t) - self.f_t.eval(p, q, t),
        ]
    }
}

fn rk4_step(field: &HamiltonianField, t: f64, y: &[C64; 3], h: f64) -> [C64; 3] {
    let k1 = field.rhs(t, y);
    let y2 = [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0), y[2] + k1[2] * (h / 2.0)];
    let k2 = field.rhs(t + h / 2.0, &y2);
    let y3 = [y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0), y[2] + k2[2] * (h / 2.0)];
    let k3 = field.rhs(t + h / 2.0, &y3);
    let y4 = [y[0] + k3[0] * h, y[1] + k3[1] * h, y[2] + k3[2] * h];
    let k4 = field.rhs(t + h, &y4);
    [
        y[0] + (k1[0] + k2[0] * 2.0 + k3[0] * 2.0 + k4[0]) * (h / 6.0),
        y[1] + (k1[1] + k2[1] * 2.0 + k3[1] * 2.0 + k4[1]) * (h / 6.0),
        y[2] + (k1[2] + k2[2] * 2.0 + k3[2] * 2.0 + k4[2]) * (h / 6.0),
    ]
}

/// Integrate the extended system, sampling the solution exactly at the
/// requested (strictly increasing) times.
pub fn integrate(
    h: &MoserHamiltonian,
    start: [C64; 3],
    times: &[f64],
    opts: &IntegratorOpts,
) -> Result<Trajectory> {
    if times.is_empty() || times[0] < 0.0 {
        return Err(Error::Precondition("output times must start at t >= 0".into()));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Precondition("output times must increase strictly".into()));
        }
    }
    let field = HamiltonianField::new(h);
    let mut out_times = Vec::with_capacity(times.len());
    let mut states = Vec::with_capacity(times.len());
    let mut escaped = false;

    let mut t = 0.0;
    let mut y = start;
    let mut step = (times[times.len() - 1] / 100.0).max(1e-6);
    let mut steps_taken = 0usize;

    'outer: for &target in times {
        while t < target {
            if steps_taken >= opts.max_steps {
                return Err(Error::Precondition(
                    "integrator exceeded the step budget".into(),
                ));
            }
            let h_try = step.min(target - t);
            let full = rk4_step(&field, t, &y, h_try);
            let half = rk4_step(&field, t, &y, h_try / 2.0);
            let two_half = rk4_step(&field, t + h_try / 2.0, &half, h_try / 2.0);
            let err = (full[0] - two_half[0])
                .norm()
                .max((full[1] - two_half[1]).norm())
                .max((full[2] - two_half[2]).norm())
                / 15.0;
            let allowed = opts.tol * h_try;
            if err <= allowed {
                // accept with the Richardson-extrapolated value
                y = [
                    two_half[0] + (two_half[0] - full[0]) / 15.0,
                    two_half[1] + (two_half[1] - full[1]) / 15.0,
                    two_half[2] + (two_half[2] - full[2]) / 15.0,
                ];
                t += h_try;
                steps_taken += 1;
                if y[0].norm() > opts.escape_radius || y[1].norm() > opts.escape_radius {
                    escaped = true;
                    break 'outer;
                }
            }
            // standard step-size update for a fourth-order pair
            let scale = if err > 0.0 {
                0.9 * (allowed / err).powf(0.2)
            } else {
                5.0
            };
            step = (h_try * scale.clamp(0.2, 5.0)).max(1e-12);
        }
        out_times.push(target);
        states.push(y);
    }

    Ok(Trajectory { times: out_times, states, escaped })
}

/// The exact normal-form flow: `x = pq` is a first integral, so
/// `p(t) = p(0) exp(-A(x0, t))`, `q(t) = q(0) exp(A(x0, t))` with
/// `A(x, t) = int_0^t dJ/dx ds`, and
/// `eta(t) = eta(0) - (J(x0, t) - J(x0, 0))`.
pub fn normalform_flow(j: &XSeries, start: [C64; 3], times: &[f64]) -> Trajectory {
    let a_fun = j.dx().integrate_t();
    let x0 = start[0] * start[1];
    let j0 = j.eval(x0, 0.0);
    let states = times
        .iter()
        .map(|&t| {
            let a = a_fun.eval(x0, t);
            [
                start[0] * (-a).exp(),
                start[1] * a.exp(),
                start[2] - (j.eval(x0, t) - j0),
            ]
        })
        .collect();
    Trajectory { times: times.to_vec(), states, escaped: false }
}

/// Conjugacy measurement: the distance in `(p, q)` between the integrated
/// original flow and the composition
/// `forward map o normal-form flow o inverse map`, plus the drift of the
/// pulled-back first integral `x` along the true flow.
#[derive(Clone, Debug)]
pub struct ConjugacyReport {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub x_drift: f64,
    pub escaped: bool,
}

pub fn conjugacy_error(
    result: &NormalFormResult,
    h0: &MoserHamiltonian,
    start: [C64; 3],
    t_final: f64,
    n_samples: usize,
    opts: &IntegratorOpts,
) -> Result<ConjugacyReport> {
    let n = n_samples.max(2);
    let times: Vec<f64> =
        (1..=n).map(|i| t_final * i as f64 / n as f64).collect();
    let chain = TransformChain::new(&result.chis, result.r_final)?;

    // true flow of the original Hamiltonian
    let truth = integrate(h0, start, &times, opts)?;

    // map the start into normal-form coordinates at t = 0
    let start_pt = PhasePoint { p: start[0], q: start[1], eta: start[2], t: 0.0 };
    let (nf_start, _) = chain.apply(start_pt, MapDirection::Inverse);
    let nf = normalform_flow(
        result.hamiltonian.j(),
        [nf_start.p, nf_start.q, nf_start.eta],
        &times,
    );

    let mut errors = Vec::with_capacity(truth.times.len());
    let mut max_error = 0.0f64;
    for (k, &t) in truth.times.iter().enumerate() {
        let nf_state = nf.states[k];
        let pt = PhasePoint { p: nf_state[0], q: nf_state[1], eta: nf_state[2], t };
        let (mapped, _) = chain.apply(pt, MapDirection::Forward);
        let e = ((mapped.p - truth.states[k][0]).norm_sqr()
            + (mapped.q - truth.states[k][1]).norm_sqr())
        .sqrt();
        errors.push(e);
        max_error = max_error.max(e);
    }

    // pulled-back first integral along the true flow
    let x_ref = {
        let (img, _) = chain.apply(start_pt, MapDirection::Inverse);
        img.p * img.q
    };
    let mut x_drift = 0.0f64;
    for (k, &t) in truth.times.iter().enumerate() {
        let pt = PhasePoint {
            p: truth.states[k][0],
            q: truth.states[k][1],
            eta: truth.states[k][2],
            t,
        };
        let (img, _) = chain.apply(pt, MapDirection::Inverse);
        x_drift = x_drift.max((img.p * img.q - x_ref).norm());
    }

    Ok(ConjugacyReport {
        times: truth.times,
        errors,
        max_error,
        x_drift,
        escaped: truth.escaped,
    })
}

/// Least-squares slope of `log(err)` against `log(r)` over `(r, err)`
/// pairs, the measured order of the conjugacy error in the initial radius.
pub fn scaling_exponent(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (r, e) in pairs {
        let x = r.ln();
        let y = e.max(1e-300).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
