//! Pointwise external and basal forcing laws.
//!
//! `ocean_stress` is the raw drag law `C_o ρ_o ‖w‖ w`; the momentum balance
//! evaluates it with `w = v_o − v` so that it always opposes motion relative
//! to the ocean.

use serde::{Deserialize, Serialize};

use crate::params::{ForceToggles, Params, ScenarioSpec};

pub type Vec2 = [f64; 2];

#[inline]
fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// Rotation by +90°, `k × v`.
#[inline]
pub fn k_cross(v: Vec2) -> Vec2 {
    [-v[1], v[0]]
}

/// Constant wind and ocean velocities plus the per-term switches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingInputs {
    pub wind: Vec2,
    pub ocean_velocity: Vec2,
    pub toggles: ForceToggles,
}

impl ForcingInputs {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self {
            wind: spec.wind,
            ocean_velocity: spec.ocean_velocity,
            toggles: spec.forces,
        }
    }

    /// Everything off: no wind, no drag, no rotation, no grounding.
    pub fn none() -> Self {
        Self {
            wind: [0.0; 2],
            ocean_velocity: [0.0; 2],
            toggles: ForceToggles {
                ocean_drag: false,
                coriolis: false,
                surface_tilt: false,
                basal: false,
                tensile: true,
            },
        }
    }
}

/// `f_a = C_a ρ_a ‖v_a‖ v_a` (N m⁻²).
pub fn wind_stress(wind: Vec2, params: &Params) -> Vec2 {
    let c = params.c_a * params.rho_a * norm(wind);
    [c * wind[0], c * wind[1]]
}

/// `C_o ρ_o ‖v − v_o‖ (v − v_o)` (N m⁻²).
pub fn ocean_stress(v: Vec2, v_o: Vec2, params: &Params) -> Vec2 {
    let w = [v[0] - v_o[0], v[1] - v_o[1]];
    let c = params.c_o * params.rho_o * norm(w);
    [c * w[0], c * w[1]]
}

/// `f_c = −ρ h f k × v` (N m⁻²).
pub fn coriolis(v: Vec2, h: f64, params: &Params) -> Vec2 {
    let c = -params.rho * h * params.c_cor;
    let r = k_cross(v);
    [c * r[0], c * r[1]]
}

/// `f_sh ≈ f k × v_o`. The momentum balance scales this by the nodal mass ρh.
pub fn surface_tilt(v_o: Vec2, params: &Params) -> Vec2 {
    let r = k_cross(v_o);
    [params.c_cor * r[0], params.c_cor * r[1]]
}

/// Magnitude factor `k₂ (h − h_crit)⁺ exp(−α_b (1 − A))` (N m⁻³ · m).
pub fn basal_coefficient(h: f64, a: f64, params: &Params) -> f64 {
    if h <= params.h_crit {
        0.0
    } else {
        params.k2 * (h - params.h_crit) * (-params.alpha_b * (1.0 - a)).exp()
    }
}

/// `f_b = −coef · v / (|v| + v₀)` for a given magnitude factor.
pub fn basal_stress_with(v: Vec2, coefficient: f64, params: &Params) -> Vec2 {
    let c = -coefficient / (norm(v) + params.v0);
    [c * v[0], c * v[1]]
}

/// Basal stress of grounded ice; zero when `h ≤ h_crit`.
pub fn basal_stress(v: Vec2, h: f64, a: f64, params: &Params) -> Vec2 {
    basal_stress_with(v, basal_coefficient(h, a, params), params)
}

/// Jacobian of `‖w‖ w` with respect to `w`: `‖w‖ I + w wᵀ / ‖w‖`.
pub fn quadratic_drag_jacobian(w: Vec2) -> [[f64; 2]; 2] {
    let s = norm(w);
    if s == 0.0 {
        return [[0.0; 2]; 2];
    }
    [
        [s + w[0] * w[0] / s, w[0] * w[1] / s],
        [w[0] * w[1] / s, s + w[1] * w[1] / s],
    ]
}

/// Jacobian of `v / (|v| + v₀)` with respect to `v`.
pub fn saturating_jacobian(v: Vec2, v0: f64) -> [[f64; 2]; 2] {
    let s = norm(v);
    let inv = 1.0 / (s + v0);
    if s == 0.0 {
        return [[inv, 0.0], [0.0, inv]];
    }
    let c = inv * inv / s;
    [
        [inv - c * v[0] * v[0], -c * v[0] * v[1]],
        [-c * v[0] * v[1], inv - c * v[1] * v[1]],
    ]
}

/// Steady free-drift speed where wind drag balances ocean drag.
pub fn free_drift_speed(wind_speed: f64, params: &Params) -> f64 {
    wind_speed * (params.c_a * params.rho_a / (params.c_o * params.rho_o)).sqrt()
}
