//! Implicit-Euler momentum step `ρh (vⁿ⁺¹ − vⁿ)/Δt = div σ(vⁿ⁺¹) + f(vⁿ⁺¹)`
//! with `v = 0` on the boundary. The convective term is omitted.

pub mod assembly;
pub mod linear;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingInputs;
use crate::grid::{Mesh, ScalarField, VectorField};
use crate::params::Params;

pub use assembly::{Discretization, Linearization};
pub use solver::solve_momentum;

/// One implicit momentum step.
#[derive(Clone, Copy, Debug)]
pub struct MomentumProblem<'a> {
    pub mesh: &'a Mesh,
    pub v_prev: &'a VectorField,
    pub h: &'a ScalarField,
    pub a: &'a ScalarField,
    pub forcing: ForcingInputs,
    pub dt: f64,
    pub params: &'a Params,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearMethod {
    /// Picard iterations first, then Newton.
    #[default]
    PicardNewton,
    /// Newton from the first iteration.
    Newton,
    /// Picard only.
    Picard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_nonlinear_iters: usize,
    /// Stop when the residual norm falls below `rel_tol` times the initial one.
    pub rel_tol: f64,
    /// ... or below this absolute norm (N m⁻²).
    pub abs_tol: f64,
    pub method: NonlinearMethod,
    /// Number of Picard iterations before switching to Newton.
    pub picard_iters: usize,
    /// Relative residual required of each linear solve.
    pub linear_rel_tol: f64,
    /// Smallest line-search damping factor tried for a Newton step.
    pub min_damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_nonlinear_iters: 100,
            rel_tol: 1e-8,
            abs_tol: 1e-9,
            method: NonlinearMethod::PicardNewton,
            picard_iters: 3,
            linear_rel_tol: 1e-10,
            min_damping: 1.0 / 1024.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must lie in (0,1)")))
            }
        };
        unit("rel_tol", self.rel_tol)?;
        unit("linear_rel_tol", self.linear_rel_tol)?;
        if !(self.min_damping > 0.0 && self.min_damping <= 1.0) {
            return Err(Error::Validation("min_damping must lie in (0,1]".into()));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::Validation("abs_tol must be >= 0".into()));
        }
        if self.max_nonlinear_iters < 1 {
            return Err(Error::Validation("max_nonlinear_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub converged: bool,
    /// Residual norm after each iteration, starting with the initial one.
    pub trace: Vec<f64>,
    pub newton_steps: usize,
    pub picard_steps: usize,
}

/// Nodal mass or a node held at rest because it carries (almost) no ice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodalMass {
    Active(f64),
    Masked,
}

/// `ρ·max(h, h_min)`, or `Masked` when `A < a_min`.
pub fn mass_floor(h: f64, a: f64, params: &Params) -> NodalMass {
    if a < params.a_min {
        NodalMass::Masked
    } else {
        NodalMass::Active(params.rho * h.max(params.h_min))
    }
}

/// Residual of the discrete momentum equation for a candidate velocity.
pub fn momentum_residual(v: &VectorField, problem: &MomentumProblem) -> Result<VectorField> {
    v.check(problem.mesh)?;
    let disc = Discretization::new(problem)?;
    Ok(disc.residual(v))
}
