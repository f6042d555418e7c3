//! Picard/Newton iteration for one implicit momentum step.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::grid::VectorField;

use super::assembly::{Discretization, Linearization};
use super::{MomentumProblem, NonlinearMethod, SolverConfig, SolverReport};

/// Sufficient-decrease constant of the backtracking line search.
const ARMIJO: f64 = 1e-4;

fn add_step(disc: &Discretization, v: &VectorField, dx: &[f64], scale: f64) -> VectorField {
    let mut out = v.clone();
    for (p, &n) in disc.free_nodes.iter().enumerate() {
        out.data[n][0] += scale * dx[2 * p];
        out.data[n][1] += scale * dx[2 * p + 1];
    }
    out
}

fn finite(v: &VectorField) -> bool {
    v.data.iter().all(|x| x[0].is_finite() && x[1].is_finite())
}

/// Solves the implicit momentum step starting from the previous velocity.
///
/// Returns the best iterate found; `report.converged` tells whether it meets
/// the tolerance.
pub fn solve_momentum(
    problem: &MomentumProblem,
    config: &SolverConfig,
) -> Result<(VectorField, SolverReport)> {
    config.validate()?;
    let disc = Discretization::new(problem)?;
    let mut v = problem.v_prev.clone();
    disc.impose_dirichlet(&mut v);
    let mut r = disc.residual(&v);
    let mut r_norm = disc.norm(&r);
    if !r_norm.is_finite() {
        return Err(Error::NotFinite { iteration: 0 });
    }
    let target = (config.rel_tol * r_norm).max(config.abs_tol);
    let mut report = SolverReport {
        iterations: 0,
        initial_residual: r_norm,
        final_residual: r_norm,
        converged: r_norm <= target || disc.free_count() == 0,
        trace: vec![r_norm],
        newton_steps: 0,
        picard_steps: 0,
    };
    if report.converged {
        return Ok((v, report));
    }

    let mut sys = disc.block_system();
    let mut best = (v.clone(), r_norm);
    for it in 1..=config.max_nonlinear_iters {
        let lin = match config.method {
            NonlinearMethod::Picard => Linearization::Picard,
            NonlinearMethod::Newton => Linearization::Newton,
            NonlinearMethod::PicardNewton if it <= config.picard_iters => Linearization::Picard,
            NonlinearMethod::PicardNewton => Linearization::Newton,
        };
        let rhs: Vec<f64> = disc.free_vector(&r).iter().map(|x| -x).collect();

        let mut accepted = None;
        if lin == Linearization::Newton {
            disc.assemble(&v, lin, &mut sys);
            match sys.solve(&rhs, disc.symmetric(lin), config.linear_rel_tol) {
                Ok(dx) => {
                    let mut lambda = 1.0;
                    while lambda >= config.min_damping {
                        let trial = add_step(&disc, &v, &dx, lambda);
                        let tr = disc.residual(&trial);
                        let tn = disc.norm(&tr);
                        if tn.is_finite() && tn <= (1.0 - ARMIJO * lambda) * r_norm {
                            accepted = Some((trial, tr, tn));
                            break;
                        }
                        lambda *= 0.5;
                    }
                    if accepted.is_some() {
                        report.newton_steps += 1;
                    } else {
                        debug!("iteration {it}: line search failed, taking a Picard step");
                    }
                }
                Err(e) => debug!("iteration {it}: Newton solve failed ({e}), taking a Picard step"),
            }
        }
        let (next, next_r, next_norm) = match accepted {
            Some(step) => step,
            None => {
                disc.assemble(&v, Linearization::Picard, &mut sys);
                let dx = sys.solve(
                    &rhs,
                    disc.symmetric(Linearization::Picard),
                    config.linear_rel_tol,
                )?;
                report.picard_steps += 1;
                let trial = add_step(&disc, &v, &dx, 1.0);
                let tr = disc.residual(&trial);
                let tn = disc.norm(&tr);
                (trial, tr, tn)
            }
        };
        if !finite(&next) || !next_norm.is_finite() {
            return Err(Error::NotFinite { iteration: it });
        }
        v = next;
        r = next_r;
        r_norm = next_norm;
        report.iterations = it;
        report.trace.push(r_norm);
        if r_norm < best.1 {
            best = (v.clone(), r_norm);
        }
        if r_norm <= target {
            report.converged = true;
            break;
        }
    }
    report.final_residual = best.1;
    if !report.converged {
        warn!(
            "momentum solve stopped after {} iterations at residual {:.3e} (initial {:.3e})",
            report.iterations, best.1, report.initial_residual
        );
    }
    Ok((best.0, report))
}
