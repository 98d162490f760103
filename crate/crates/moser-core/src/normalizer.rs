//! The normalization iteration: split off diagonal terms, solve the
//! homological equation, transform the perturbation, and record a ledger
//! row with the measured quantities every bound check needs.
//!
//! Each step at least doubles the minimum degree of the perturbation
//! (minus two), so at truncation degree `N` the residual vanishes exactly
//! after at most `ceil(log2(N - 2)) + 1` steps.

use rand::SeedableRng;
use serde::Serialize;

use crate::bounds;
use crate::homological::{self, GeneralProblem, Mode, StrongProblem};
use crate::lie::{
    transformed_perturbation, GeneratingFunction, MapDirection, PhasePoint, TransformChain,
};
use crate::pqseries::{MoserHamiltonian, XSeries};
use crate::timecoeff::RateVector;
use crate::{Error, Result};

/// How the per-step contraction parameter `d_j` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DPolicy {
    /// Fixed value, used for desk-scale demonstrations where the certified
    /// schedule radii would be astronomically small.
    Empirical(f64),
    /// The closed-form schedule sequence seeded with the measured initial
    /// norm.
    Certified,
}

/// Sampling grid used for the measured frequency-function hypotheses.
#[derive(Clone, Copy, Debug)]
pub struct GridConfig {
    pub nx: usize,
    pub nt: usize,
    pub t_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 32, nt: 64, t_max: 50.0 }
    }
}

/// Configuration of a normalization run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub r0: f64,
    pub max_steps: u32,
    pub d_policy: DPolicy,
    /// Lattice vector with value `omega`, for the exact exponential shifts.
    pub omega_unit: RateVector,
    /// Strong mode: the decay rate `a` and its (positive-value) lattice
    /// vector, used for envelope measurements and the strong smallness
    /// condition.
    pub decay: Option<(f64, RateVector)>,
    pub grid: GridConfig,
    /// Seed for the per-step sampled residual self-check.
    pub seed: u64,
}

/// One ledger row: everything measured during step `j`.
///
/// `eps_full` is the certified norm of the whole perturbation at `R_j`
/// before the step, `eps_mixed` the norm of its mixed part after the
/// diagonal has been absorbed (general mode), and `eps_next` the certified
/// norm of the transformed perturbation at `R_{j+1}`, which is what the
/// quadratic recurrence bounds.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub j: u32,
    pub r_j: f64,
    pub d_j: f64,
    pub r_next: f64,
    pub eps_full: f64,
    pub eps_mixed: f64,
    pub eps_next: f64,
    /// Strong mode: certified decay envelope of the perturbation at `R_j`.
    pub eps_envelope: Option<f64>,
    /// Certified-schedule bound for this step, when that policy is active.
    pub eps_theoretical: Option<f64>,
    pub f_min_degree: u32,
    pub f_next_min_degree: Option<u32>,
    pub chi_min_degree: Option<u32>,
    /// Measured `min Re g` and `max |g|` on the sampling grid (general).
    pub g_re_min: Option<f64>,
    pub g_abs_max: Option<f64>,
    pub smallness_lhs: f64,
    pub smallness_holds: bool,
    /// Normalized sampled residual of the homological equation at a
    /// truncation-safe radius.
    pub residual_normalized: f64,
    /// Certified norm of the generator at `(1 - d_j) R_j` and the
    /// theoretical bound it must respect.
    pub chi_norm: f64,
    pub chi_bound: f64,
    /// Certified norm of `L_chi F` at `(1 - 2 d_j) R_j` and the s = 1 Lie
    /// estimate evaluated with the measured norms.
    pub lie1_norm: f64,
    pub lie1_bound: f64,
    /// Norm of `F` at `(1 - d_j) R_j`, the right-hand factor of the Lie
    /// estimate.
    pub f_norm_inner: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NormalizationLedger {
    pub rows: Vec<StepRecord>,
}

/// Result of a run: the terminal Hamiltonian, the generator list (one per
/// step, in application order), the ledger, and the final radius.
#[derive(Clone, Debug)]
pub struct NormalFormResult {
    pub hamiltonian: MoserHamiltonian,
    pub chis: Vec<GeneratingFunction>,
    pub ledger: NormalizationLedger,
    pub mode: Mode,
    pub r_final: f64,
    pub converged: bool,
}

/// Measured bounds of the frequency function on the working domain: the
/// minimum real part and maximum modulus over a real grid
/// `|x| <= x_max`, `t in [0, t_max]`, plus the exact `t -> infinity`
/// limit.
pub fn measure_g_bounds(g: &XSeries, x_max: f64, grid: &GridConfig) -> (f64, f64) {
    let mut re_min = f64::INFINITY;
    let mut abs_max: f64 = 0.0;
    let nx = grid.nx.max(2);
    let nt = grid.nt.max(2);
    for i in 0..nx {
        let x = -x_max + 2.0 * x_max * i as f64 / (nx - 1) as f64;
        for k in 0..nt {
            let t = grid.t_max * k as f64 / (nt - 1) as f64;
            let v = g.eval(num_complex::Complex64::new(x, 0.0), t);
            re_min = re_min.min(v.re);
            abs_max = abs_max.max(v.norm());
        }
        // include the certified limit: decaying terms vanish, leaving the
        // rate-zero constant part
        let mut limit = num_complex::Complex64::new(0.0, 0.0);
        for (k, c) in g.iter() {
            limit += c.constant_part() * num_complex::Complex64::new(x, 0.0).powu(k);
        }
        re_min = re_min.min(limit.re);
        abs_max = abs_max.max(limit.norm());
    }
    (re_min, abs_max)
}

/// One normalization step. Returns the transformed Hamiltonian, the
/// generator, and the ledger row.
pub fn step(
    h: &MoserHamiltonian,
    cfg: &RunConfig,
    j: u32,
    r_j: f64,
    d_j: f64,
    r_star: f64,
    eps_theoretical: Option<f64>,
) -> Result<(MoserHamiltonian, GeneratingFunction, StepRecord)> {
    let omega = h.omega();
    let f_min_degree = h.f().min_degree().unwrap_or(0);
    let eps_full = h.f().taylor_norm(r_j)?;

    let (j_new, f_mixed, chi, g_re_min, g_abs_max, eps_mixed, eps_envelope) = match cfg.mode {
        Mode::General => {
            let (mixed, diag) = h.f().split_mixed_diagonal();
            let j_new = h.j().add(&diag)?;
            let g = j_new.dx();
            let (re_min, abs_max) = measure_g_bounds(&g, r_j * r_j, &cfg.grid);
            if re_min < omega / 2.0 {
                return Err(Error::HypothesisViolation(format!(
                    "step {j}: measured min Re g = {re_min} < omega/2 = {}",
                    omega / 2.0
                )));
            }
            let eps_mixed = mixed.taylor_norm(r_j)?;
            let problem =
                GeneralProblem::new(mixed.clone(), g, omega, cfg.omega_unit.clone())?;
            let chi = homological::solve_general(&problem)?;
            (j_new, mixed, chi, Some(re_min), Some(abs_max), eps_mixed, None)
        }
        Mode::Strong => {
            let (_, shift) = cfg.decay.as_ref().ok_or_else(|| {
                Error::Precondition("strong mode requires the decay rate".into())
            })?;
            let envelope = h.f().decay_envelope(r_j, shift)?;
            let problem =
                StrongProblem::new(h.f().clone(), omega, cfg.omega_unit.clone())?;
            let chi = homological::solve_strong(&problem)?;
            (h.j().clone(), h.f().clone(), chi, None, None, eps_full, Some(envelope))
        }
    };

    let f_next = transformed_perturbation(&f_mixed, &chi)?;
    let r_next = (1.0 - 2.0 * d_j) * r_j;
    let eps_next = f_next.taylor_norm(r_next)?;

    // seeded residual self-check at a radius where truncation tails are
    // negligible
    let residual_normalized = {
        let g_for_residual = match cfg.mode {
            Mode::General => j_new.dx(),
            Mode::Strong => XSeries::constant(h.basis(), h.trunc() / 2, omega.into()),
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(j as u64));
        let radius = (0.4 * r_j).min(0.04);
        homological::residual(&chi, &g_for_residual, &f_mixed, radius, 10.0, 100, &mut rng)?
            .normalized
    };

    // measured-vs-theoretical material for the bound checks
    let chi_norm = chi.series().taylor_norm((1.0 - d_j) * r_j)?;
    let a = cfg.decay.as_ref().map(|(a, _)| *a);
    let m_for_chi = match cfg.mode {
        Mode::General => eps_mixed,
        Mode::Strong => eps_envelope.unwrap_or(eps_full),
    };
    let chi_bound = bounds::chi_bound(m_for_chi, omega, d_j, cfg.mode, a);
    let f_norm_inner = f_mixed.taylor_norm((1.0 - d_j) * r_j)?;
    let lie1 = crate::lie::lie_derivative(&f_mixed, &chi)?;
    let lie1_norm = lie1.taylor_norm((1.0 - 2.0 * d_j) * r_j)?;
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let lie1_bound = e2 / (d_j * d_j) * chi_norm * f_norm_inner;
    let smallness = bounds::smallness_check(eps_full, d_j, r_star, omega, cfg.mode, a);

    let record = StepRecord {
        j,
        r_j,
        d_j,
        r_next,
        eps_full,
        eps_mixed,
        eps_next,
        eps_envelope,
        eps_theoretical,
        f_min_degree,
        f_next_min_degree: f_next.min_degree(),
        chi_min_degree: chi.min_degree(),
        g_re_min,
        g_abs_max,
        smallness_lhs: smallness.lhs,
        smallness_holds: smallness.holds,
        residual_normalized,
        chi_norm,
        chi_bound,
        lie1_norm,
        lie1_bound,
        f_norm_inner,
    };

    let h_next = MoserHamiltonian::new(omega, j_new, f_next)?;
    Ok((h_next, chi, record))
}

/// Run the iteration until the perturbation vanishes at truncation order
/// or `max_steps` is reached (in which case the partial result is flagged
/// as not converged).
pub fn run(h0: &MoserHamiltonian, cfg: &RunConfig) -> Result<NormalFormResult> {
    let mut h = h0.clone();
    let mut r_j = cfg.r0;
    let r_star = cfg.r0 / 2.0;
    let mut chis = Vec::new();
    let mut ledger = NormalizationLedger::default();
    let mut converged = h.f().is_zero();

    // certified policy: the schedule is seeded with the measured initial
    // norm once
    let schedule = match cfg.d_policy {
        DPolicy::Certified => {
            let eps0 = h.f().taylor_norm(cfg.r0)?;
            Some(bounds::schedule(
                eps0,
                cfg.r0,
                h.omega(),
                cfg.mode,
                cfg.decay.as_ref().map(|(a, _)| *a),
                cfg.max_steps as usize + 1,
            )?)
        }
        DPolicy::Empirical(_) => None,
    };

    for j in 0..cfg.max_steps {
        if h.f().is_zero() {
            converged = true;
            break;
        }
        let (d_j, eps_th) = match (&cfg.d_policy, &schedule) {
            (DPolicy::Empirical(d), _) => (*d, None),
            (DPolicy::Certified, Some(s)) => {
                (s.d[j as usize], Some(s.eps[j as usize]))
            }
            (DPolicy::Certified, None) => unreachable!(),
        };
        let (h_next, chi, record) = step(&h, cfg, j, r_j, d_j, r_star, eps_th)?;
        r_j = record.r_next;
        h = h_next;
        chis.push(chi);
        ledger.rows.push(record);
        if h.f().is_zero() {
            converged = true;
        }
    }

    Ok(NormalFormResult {
        hamiltonian: h,
        chis,
        ledger,
        mode: cfg.mode,
        r_final: r_j,
        converged,
    })
}

/// Map a point through the composed transformation at each requested time.
pub fn invert_and_compose(
    result: &NormalFormResult,
    point: PhasePoint,
    times: &[f64],
    direction: MapDirection,
) -> Result<Vec<(PhasePoint, bool)>> {
    let chain = TransformChain::new(&result.chis, result.r_final)?;
    Ok(times
        .iter()
        .map(|&t| chain.apply(PhasePoint { t, ..point }, direction))
        .collect())
}

/// Convenience builder for the strong-mode run configuration over the
/// standard two-slot basis `[-a, omega]`.
pub fn strong_config(
    basis: &crate::timecoeff::RateBasis,
    a: f64,
    r0: f64,
    max_steps: u32,
    d_policy: DPolicy,
) -> RunConfig {
    RunConfig {
        mode: Mode::Strong,
        r0,
        max_steps,
        d_policy,
        omega_unit: basis.unit(1),
        decay: Some((a, basis.unit(0).negated())),
        grid: GridConfig::default(),
        seed: 0,
    }
}

/// Convenience builder for the general-mode run configuration over the
/// standard two-slot basis.
pub fn general_config(
    basis: &crate::timecoeff::RateBasis,
    r0: f64,
    max_steps: u32,
    d_policy: DPolicy,
) -> RunConfig {
    RunConfig {
        mode: Mode::General,
        r0,
        max_steps,
        d_policy,
        omega_unit: basis.unit(1),
        decay: None,
        grid: GridConfig::default(),
        seed: 0,
    }
}
