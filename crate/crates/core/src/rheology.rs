//! Constitutive algebra of the viscous-plastic rheology with tensile strength.
//!
//! The stress is written through the constant 4-index array `𝕊` (aspect ratio
//! `e`) as `σ = (P̃/2)·𝕊ε̇/Δ(ε̇) − (P′/2)·I`, where `P̃ = P + T` and
//! `P′ = P − T`. Indices of `𝕊` follow the pairing used for the principal
//! coefficients: `𝕊_ij^kl` is the entry in row `(i,k)` and column `(j,l)` of
//! the 4×4 matrix acting on `(ε₁₁, ε₁₂, ε₂₁, ε₂₂)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DeltaForm, Params};

pub type Tensor2 = [[f64; 2]; 2];

/// Four-index array, `t[a][b][c][d]`.
pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

/// Symmetric strain-rate tensor (s⁻¹).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrainRate {
    pub eps11: f64,
    pub eps12: f64,
    pub eps21: f64,
    pub eps22: f64,
}

impl StrainRate {
    pub const ZERO: Self = Self {
        eps11: 0.0,
        eps12: 0.0,
        eps21: 0.0,
        eps22: 0.0,
    };

    pub fn new(eps11: f64, eps12: f64, eps22: f64) -> Self {
        Self {
            eps11,
            eps12,
            eps21: eps12,
            eps22,
        }
    }

    /// Symmetric part of a velocity gradient, `grad[j][l] = ∂_l v_j`.
    pub fn from_gradient(grad: &Tensor2) -> Self {
        let off = 0.5 * (grad[0][1] + grad[1][0]);
        Self::new(grad[0][0], off, grad[1][1])
    }

    pub fn as_tensor(&self) -> Tensor2 {
        [[self.eps11, self.eps12], [self.eps21, self.eps22]]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            eps11: s * self.eps11,
            eps12: s * self.eps12,
            eps21: s * self.eps21,
            eps22: s * self.eps22,
        }
    }
}

/// `(d_I, d_II, d_III) = (d₁₁ + d₂₂, d₁₁ − d₂₂, (d₁₂ + d₂₁)/2)`.
pub fn invariants_of(d: &Tensor2) -> (f64, f64, f64) {
    (
        d[0][0] + d[1][1],
        d[0][0] - d[1][1],
        0.5 * (d[0][1] + d[1][0]),
    )
}

/// `△²(d) = d_I² + e⁻²(d_II² + 4 d_III²)`, equal to `dᵀ𝕊d`.
pub fn triangle_sq(d: &Tensor2, e: f64) -> f64 {
    let (di, dii, diii) = invariants_of(d);
    di * di + (dii * dii + 4.0 * diii * diii) / (e * e)
}

/// The action `𝕊d`.
pub fn apply_s(d: &Tensor2, e: f64) -> Tensor2 {
    let ie2 = 1.0 / (e * e);
    let off = ie2 * (d[0][1] + d[1][0]);
    [
        [(1.0 + ie2) * d[0][0] + (1.0 - ie2) * d[1][1], off],
        [off, (1.0 - ie2) * d[0][0] + (1.0 + ie2) * d[1][1]],
    ]
}

/// `𝕊_ij^kl`: row `(i,k)`, column `(j,l)` of the 𝕊-matrix.
#[inline]
pub fn s_component(i: usize, j: usize, k: usize, l: usize, e: f64) -> f64 {
    let ie2 = 1.0 / (e * e);
    if i == k && j == l {
        if i == j {
            1.0 + ie2
        } else {
            1.0 - ie2
        }
    } else if i != k && j != l {
        ie2
    } else {
        0.0
    }
}

/// Frobenius contraction `a : b`.
pub fn contract(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

fn deviatoric_half_sq(d: &Tensor2) -> f64 {
    let half_tr = 0.5 * (d[0][0] + d[1][1]);
    let a = d[0][0] - half_tr;
    let b = d[1][1] - half_tr;
    0.5 * (a * a + b * b + d[0][1] * d[0][1] + d[1][0] * d[1][0])
}

/// The strain-rate invariant that enters `Δ`, selected by `params.delta_form`.
pub fn invariant_q(d: &StrainRate, params: &Params) -> f64 {
    let t = d.as_tensor();
    match params.delta_form {
        DeltaForm::Triangle => triangle_sq(&t, params.e),
        DeltaForm::Deviatoric => deviatoric_half_sq(&t),
    }
}

/// Regularized invariant `Δ = sqrt(Q(d) + Δ_min²)`; never below `Δ_min`.
pub fn delta_of(d: &StrainRate, params: &Params) -> f64 {
    (invariant_q(d, params) + params.delta_min * params.delta_min).sqrt()
}

/// Ice and tensile strengths (N m⁻¹).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strengths {
    pub p: f64,
    pub t: f64,
    pub p_prime: f64,
    pub p_tilde: f64,
}

/// `T = k_t·h·P*·exp(−c*(1−A))`, `P̃ = (1+k_t)(…)`, `P′ = (1−k_t)(…)`.
pub fn strengths_of(h: f64, a: f64, params: &Params) -> Strengths {
    let base = h * params.p_star * (-params.c_star * (1.0 - a)).exp();
    let t = params.k_t * base;
    Strengths {
        p: base,
        t,
        p_prime: (1.0 - params.k_t) * base,
        p_tilde: (1.0 + params.k_t) * base,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RheologyEval {
    pub delta: f64,
    /// `P̃ / (2Δ)`.
    pub zeta: f64,
    pub sigma: Tensor2,
    pub s_eps: Tensor2,
}

pub fn stress_of(d: &StrainRate, strengths: &Strengths, params: &Params) -> RheologyEval {
    let delta = delta_of(d, params);
    let s_eps = apply_s(&d.as_tensor(), params.e);
    let zeta = strengths.p_tilde / (2.0 * delta);
    let p = 0.5 * strengths.p_prime;
    let sigma = [
        [zeta * s_eps[0][0] - p, zeta * s_eps[0][1]],
        [zeta * s_eps[1][0], zeta * s_eps[1][1] - p],
    ];
    RheologyEval {
        delta,
        zeta,
        sigma,
        s_eps,
    }
}

/// Derivative of the stress with respect to the velocity gradient,
/// `tangent[i][k][j][l] = ∂σ_ik / ∂(∂_l v_j)`.
///
/// With the `Triangle` invariant this equals `−ρh·a_ij^kl`.
pub fn stress_tangent(d: &StrainRate, strengths: &Strengths, params: &Params) -> Tensor4 {
    let e = params.e;
    let delta = delta_of(d, params);
    let dt = d.as_tensor();
    let s_eps = apply_s(&dt, e);
    // q = ½ ∂Q/∂ε
    let q = match params.delta_form {
        DeltaForm::Triangle => s_eps,
        DeltaForm::Deviatoric => {
            let half_tr = 0.5 * (dt[0][0] + dt[1][1]);
            [
                [0.5 * (dt[0][0] - half_tr), 0.5 * dt[0][1]],
                [0.5 * dt[1][0], 0.5 * (dt[1][1] - half_tr)],
            ]
        }
    };
    let zeta = strengths.p_tilde / (2.0 * delta);
    let inv_d2 = 1.0 / (delta * delta);
    let mut c = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    c[i][k][j][l] =
                        zeta * (s_component(i, j, k, l, e) - s_eps[i][k] * q[j][l] * inv_d2);
                }
            }
        }
    }
    c
}

/// Lagged-viscosity tangent `(P̃/2Δ)·𝕊`, same layout as [`stress_tangent`].
pub fn picard_tangent(d: &StrainRate, strengths: &Strengths, params: &Params) -> Tensor4 {
    let zeta = strengths.p_tilde / (2.0 * delta_of(d, params));
    let mut c = [[[[0.0; 2]; 2]; 2]; 2];
    for (i, ci) in c.iter_mut().enumerate() {
        for (k, cik) in ci.iter_mut().enumerate() {
            for (j, cikj) in cik.iter_mut().enumerate() {
                for (l, value) in cikj.iter_mut().enumerate() {
                    *value = zeta * s_component(i, j, k, l, params.e);
                }
            }
        }
    }
    c
}

/// Principal-part coefficients `a_ij^kl`, stored as `a[i][j][k][l]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientTensor(pub Tensor4);

impl CoefficientTensor {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// `a_ij^kl = −(P̃/(2ρhΔ))·(𝕊_ij^kl − (𝕊d)_ik(𝕊d)_jl/Δ²)`.
pub fn coefficients_of(
    d: &StrainRate,
    strengths: &Strengths,
    h: f64,
    params: &Params,
) -> Result<CoefficientTensor> {
    if !(h > 0.0) {
        return Err(Error::NonpositiveThickness(h));
    }
    let e = params.e;
    let delta = delta_of(d, params);
    let s_eps = apply_s(&d.as_tensor(), e);
    let pref = -strengths.p_tilde / (2.0 * params.rho * h * delta);
    let inv_d2 = 1.0 / (delta * delta);
    let mut a = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    a[i][j][k][l] =
                        pref * (s_component(i, j, k, l, e) - s_eps[i][k] * s_eps[j][l] * inv_d2);
                }
            }
        }
    }
    Ok(CoefficientTensor(a))
}
