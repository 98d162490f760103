//! Report assembly and emission: the run report (ledger plus bound-check
//! table plus conjugacy summary), the schedule document, and the
//! per-trajectory CSV files.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

use moser_core::bounds;
use moser_core::flow::{self, IntegratorOpts, Trajectory};
use moser_core::homological::Mode;
use moser_core::normalizer::{self, NormalFormResult};
use moser_core::timecoeff::ExpPoly;
use moser_core::Result as CoreResult;

use crate::config::Problem;

#[derive(Serialize)]
struct BoundCheckRow {
    name: String,
    measured: f64,
    theoretical: f64,
    holds: bool,
}

#[derive(Serialize)]
struct ConjugacySummary {
    start: [f64; 3],
    max_error: f64,
    x_drift: f64,
    threshold: f64,
    escaped: bool,
    holds: bool,
}

#[derive(Serialize)]
struct TermJson {
    amp_re: f64,
    amp_im: f64,
    tpow: u32,
    rate: Vec<i32>,
}

#[derive(Serialize)]
struct JCoefficient {
    xpower: u32,
    terms: Vec<TermJson>,
}

#[derive(Serialize)]
struct RunReport {
    mode: String,
    omega: f64,
    converged: bool,
    steps: usize,
    r_final: f64,
    ledger: Vec<moser_core::normalizer::StepRecord>,
    bound_checks: Vec<BoundCheckRow>,
    conjugacy: Vec<ConjugacySummary>,
    normal_form_j: Vec<JCoefficient>,
    all_checks_hold: bool,
}

fn terms_of(poly: &ExpPoly) -> Vec<TermJson> {
    poly.iter_terms()
        .map(|(tpow, rate, amp)| TermJson {
            amp_re: amp.re,
            amp_im: amp.im,
            tpow,
            rate: rate.coords().to_vec(),
        })
        .collect()
}

/// The measured-vs-theoretical table for one run.
fn bound_checks(problem: &Problem, result: &NormalFormResult) -> Vec<BoundCheckRow> {
    let mut rows = Vec::new();
    let r_star = problem.run.r0 / 2.0;
    let a = problem.run.decay.as_ref().map(|(a, _)| *a);
    for record in &result.ledger.rows {
        rows.push(BoundCheckRow {
            name: format!("smallness[{}]", record.j),
            measured: record.smallness_lhs,
            theoretical: 0.5,
            holds: record.smallness_holds,
        });
        rows.push(BoundCheckRow {
            name: format!("chi[{}]", record.j),
            measured: record.chi_norm,
            theoretical: record.chi_bound,
            holds: record.chi_norm <= record.chi_bound * (1.0 + 1e-12),
        });
        rows.push(BoundCheckRow {
            name: format!("lieest[{}]", record.j),
            measured: record.lie1_norm,
            theoretical: record.lie1_bound,
            holds: record.lie1_norm <= record.lie1_bound * (1.0 + 1e-12),
        });
        rows.push(BoundCheckRow {
            name: format!("residual[{}]", record.j),
            measured: record.residual_normalized,
            theoretical: 1e-9,
            holds: record.residual_normalized <= 1e-9,
        });
        // the quadratic recurrence binds only where smallness holds
        if record.smallness_holds {
            let eps_j = match result.mode {
                Mode::General => record.eps_full,
                Mode::Strong => record.eps_envelope.unwrap_or(record.eps_full),
            };
            let rhs = bounds::recurrent_rhs(
                eps_j,
                record.d_j,
                r_star,
                problem.omega,
                result.mode,
                a,
            );
            rows.push(BoundCheckRow {
                name: format!("recurrent[{}]", record.j),
                measured: record.eps_next,
                theoretical: rhs,
                holds: record.eps_next <= rhs * (1.0 + 1e-12),
            });
        }
    }
    rows
}

fn write_csv(path: &Path, traj: &Trajectory) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "t,p_re,p_im,q_re,q_im,eta_re,eta_im")?;
    for (k, t) in traj.times.iter().enumerate() {
        let s = traj.states[k];
        writeln!(
            file,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t, s[0].re, s[0].im, s[1].re, s[1].im, s[2].re, s[2].im
        )?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    fs::write(path, text)
}

pub fn run_schedule(problem: &Problem, out: &Path) -> CoreResult<bool> {
    fs::create_dir_all(out).map_err(io_err)?;
    let eps0 = problem.hamiltonian.f().taylor_norm(problem.run.r0)?;
    let a = problem.run.decay.as_ref().map(|(a, _)| *a);
    let schedule = bounds::schedule(
        eps0,
        problem.run.r0,
        problem.omega,
        problem.mode,
        a,
        (problem.run.max_steps as usize).max(20),
    )?;
    let m_f = 1.0 + eps0;
    let threshold = bounds::r0_threshold(m_f, problem.omega, 0.5, problem.mode, a);

    #[derive(Serialize)]
    struct ScheduleReport {
        eps0_measured: f64,
        m_f: f64,
        r0_admissible_threshold: f64,
        r0_within_threshold: bool,
        schedule: bounds::BoundSchedule,
    }
    let report = ScheduleReport {
        eps0_measured: eps0,
        m_f,
        r0_admissible_threshold: threshold,
        r0_within_threshold: problem.run.r0 <= threshold,
        schedule,
    };
    write_json(&out.join("schedule.json"), &report).map_err(io_err)?;
    println!(
        "schedule: eps0 = {:.6e}, admissible r0 threshold = {:.6e} (configured r0 = {:.6e})",
        eps0, threshold, problem.run.r0
    );
    Ok(true)
}

pub fn run_normalize(
    problem: &Problem,
    out: &Path,
    seed: u64,
    verify: bool,
) -> CoreResult<bool> {
    fs::create_dir_all(out).map_err(io_err)?;
    let mut run_cfg = problem.run.clone();
    run_cfg.seed = seed;
    let result = normalizer::run(&problem.hamiltonian, &run_cfg)?;
    let checks = bound_checks(problem, &result);

    let mut conjugacy = Vec::new();
    if verify {
        let opts = IntegratorOpts {
            tol: problem.verify.tol,
            escape_radius: problem.verify.escape_radius,
            ..Default::default()
        };
        for (k, start) in problem.verify.starts.iter().enumerate() {
            let start_c = [
                C64::new(start[0], 0.0),
                C64::new(start[1], 0.0),
                C64::new(start[2], 0.0),
            ];
            let rep = flow::conjugacy_error(
                &result,
                &problem.hamiltonian,
                start_c,
                problem.verify.t_final,
                problem.verify.n_samples,
                &opts,
            )?;
            conjugacy.push(ConjugacySummary {
                start: *start,
                max_error: rep.max_error,
                x_drift: rep.x_drift,
                threshold: problem.verify.conjugacy_threshold,
                escaped: rep.escaped,
                holds: rep.max_error <= problem.verify.conjugacy_threshold,
            });

            // export the true trajectory and the mapped normal-form flow
            let times: Vec<f64> = (1..=problem.verify.n_samples.max(2))
                .map(|i| {
                    problem.verify.t_final * i as f64 / problem.verify.n_samples.max(2) as f64
                })
                .collect();
            let truth = flow::integrate(&problem.hamiltonian, start_c, &times, &opts)?;
            write_csv(&out.join(format!("traj_true_{k}.csv")), &truth).map_err(io_err)?;
            let nf = flow::normalform_flow(result.hamiltonian.j(), start_c, &times);
            write_csv(&out.join(format!("traj_nf_{k}.csv")), &nf).map_err(io_err)?;
        }
    }

    let all_checks_hold =
        checks.iter().all(|c| c.holds) && conjugacy.iter().all(|c| c.holds) && result.converged;

    let report = RunReport {
        mode: match result.mode {
            Mode::General => "aperiodic".into(),
            Mode::Strong => "strong".into(),
        },
        omega: problem.omega,
        converged: result.converged,
        steps: result.ledger.rows.len(),
        r_final: result.r_final,
        ledger: result.ledger.rows.clone(),
        bound_checks: checks,
        conjugacy,
        normal_form_j: result
            .hamiltonian
            .j()
            .iter()
            .map(|(k, c)| JCoefficient { xpower: k, terms: terms_of(c) })
            .collect(),
        all_checks_hold,
    };
    write_json(&out.join("report.json"), &report).map_err(io_err)?;
    print_summary(&report);
    Ok(all_checks_hold)
}

pub fn run_all(problem: &Problem, out: &Path, seed: u64) -> CoreResult<bool> {
    run_schedule(problem, out)?;
    run_normalize(problem, out, seed, true)
}

fn print_summary(report: &RunReport) {
    println!(
        "normalization ({} mode): {} steps, converged = {}, final radius {:.6e}",
        report.mode, report.steps, report.converged, report.r_final
    );
    println!("  j    R_j          d_j      eps_hat      eps_next     small  chi    lie");
    for row in &report.ledger {
        println!(
            "  {:<4} {:<12.5e} {:<8.3} {:<12.5e} {:<12.5e} {:<6} {:<6} {:<6}",
            row.j,
            row.r_j,
            row.d_j,
            row.eps_full,
            row.eps_next,
            row.smallness_holds,
            row.chi_norm <= row.chi_bound,
            row.lie1_norm <= row.lie1_bound,
        );
    }
    let held = report.bound_checks.iter().filter(|c| c.holds).count();
    println!("bound checks: {held}/{} hold", report.bound_checks.len());
    for c in &report.conjugacy {
        println!(
            "conjugacy from ({:.4}, {:.4}): max error {:.3e} (threshold {:.1e}, holds = {})",
            c.start[0], c.start[1], c.max_error, c.threshold, c.holds
        );
    }
    println!(
        "overall: {}",
        if report.all_checks_hold { "PASS" } else { "FAIL" }
    );
}

fn io_err(e: std::io::Error) -> moser_core::Error {
    moser_core::Error::Precondition(format!("i/o failure: {e}"))
}
