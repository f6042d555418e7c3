//! Sampled checks of the principal part of the linearized momentum operator:
//! coefficient symmetries, strong ellipticity with its explicit lower bound
//! `c·Δ_min²/e²`, and strong normal ellipticity.
//!
//! The lower bound uses `c = P̃/(2ρhΔ³)` evaluated at each sample. Coefficients
//! are always built with the `△²` invariant, which is the one the bound is
//! stated for.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Mesh, State};
use crate::momentum::assembly::{cell_gradient, center_gradients};
use crate::params::{DeltaForm, Params};
use crate::rheology::{
    apply_s, coefficients_of, contract, delta_of, strengths_of, triangle_sq, CoefficientTensor,
    StrainRate, Tensor2,
};

/// Local state at one point of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub h: f64,
    pub a: f64,
    pub strain: StrainRate,
}

/// Smallest thickness used when sampling states.
pub const KAPPA: f64 = 0.1;

/// Relative slack allowed below the theoretical bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// Random states: `h ∈ [κ, 5]`, `A ∈ [0, 1]`, strain rates either zero (one
/// in ten) or with log-uniform magnitude in `[1e-10, 1e3]` s⁻¹.
pub fn random_state_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<StatePoint> {
    (0..n)
        .map(|_| {
            let h = rng.random_range(KAPPA..5.0);
            let a = rng.random_range(0.0..=1.0);
            let strain = if rng.random_range(0..10) == 0 {
                StrainRate::ZERO
            } else {
                let scale = 10f64.powf(rng.random_range(-10.0..3.0));
                StrainRate::new(
                    scale * rng.random_range(-1.0..1.0),
                    scale * rng.random_range(-1.0..1.0),
                    scale * rng.random_range(-1.0..1.0),
                )
            };
            StatePoint { h, a, strain }
        })
        .collect()
}

/// Cell-centre states of a simulation state, skipping cells thinner than `κ`.
pub fn state_points_from(state: &State, mesh: &Mesh) -> Result<Vec<StatePoint>> {
    state.check(mesh)?;
    let grads = center_gradients(mesh);
    let mut out = Vec::new();
    for j in 0..mesh.ny {
        for i in 0..mesh.nx {
            let c = mesh.cell(i, j);
            if state.h.data[c] < KAPPA {
                continue;
            }
            let g = cell_gradient(mesh, &state.v, &grads, i, j);
            out.push(StatePoint {
                h: state.h.data[c],
                a: state.a.data[c],
                strain: StrainRate::from_gradient(&g),
            });
        }
    }
    Ok(out)
}

fn triangle_params(params: &Params) -> Params {
    Params {
        delta_form: DeltaForm::Triangle,
        ..params.clone()
    }
}

/// Coefficients `a_ij^kl` and the per-point constant `c = P̃/(2ρhΔ³)`.
pub fn coefficients_at(point: &StatePoint, params: &Params) -> Result<(CoefficientTensor, f64)> {
    let p = triangle_params(params);
    let strengths = strengths_of(point.h, point.a, &p);
    let a = coefficients_of(&point.strain, &strengths, point.h, &p)?;
    let delta = delta_of(&point.strain, &p);
    let c = strengths.p_tilde / (2.0 * p.rho * point.h * delta.powi(3));
    Ok((a, c))
}

/// Principal symbol `Σ_kl a_ij^kl ξ_k ξ_l` written with the reduced set of
/// independent coefficients.
pub fn principal_symbol(a: &CoefficientTensor, xi: [f64; 2]) -> Tensor2 {
    let g = |i: usize, j: usize, k: usize, l: usize| a.get(i - 1, j - 1, k - 1, l - 1);
    let (x1, x2) = (xi[0], xi[1]);
    let m11 = g(1, 1, 1, 1) * x1 * x1 + 2.0 * g(1, 1, 1, 2) * x1 * x2 + g(1, 1, 2, 2) * x2 * x2;
    let m12 = g(1, 1, 1, 2) * x1 * x1
        + (g(1, 2, 1, 2) + g(1, 1, 2, 2)) * x1 * x2
        + g(1, 2, 2, 2) * x2 * x2;
    let m22 = g(1, 1, 2, 2) * x1 * x1 + 2.0 * g(1, 2, 2, 2) * x1 * x2 + g(2, 2, 2, 2) * x2 * x2;
    [[m11, m12], [m12, m22]]
}

/// Largest deviation among `a_ij^kl = a_ji^lk = a_kl^ij = a_kj^il = a_il^kj
/// = a_lk^ji`, relative to the largest coefficient; 0 for the zero tensor.
pub fn check_symmetries(a: &CoefficientTensor) -> f64 {
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let x = a.get(i, j, k, l);
                    for y in [
                        a.get(j, i, l, k),
                        a.get(k, l, i, j),
                        a.get(k, j, i, l),
                        a.get(i, l, k, j),
                        a.get(l, k, j, i),
                    ] {
                        worst = worst.max((x - y).abs() / scale);
                    }
                }
            }
        }
    }
    worst
}

/// `Σ −a_ij^kl d_ik d_jl` for a real matrix `d`.
fn negative_form(a: &CoefficientTensor, d: &Tensor2) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s -= a.get(i, j, k, l) * d[i][k] * d[j][l];
                }
            }
        }
    }
    s
}

fn outer(a: [f64; 2], b: [f64; 2]) -> Tensor2 {
    [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    [t.cos(), t.sin()]
}

fn random_complex2(rng: &mut ChaCha8Rng) -> ([f64; 2], [f64; 2]) {
    let mut c = || rng.random_range(-1.0..1.0);
    ([c(), c()], [c(), c()])
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
fn symmetric_eigenvalues(m: &Tensor2) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let r = (0.5 * (m[0][0] - m[1][1])).hypot(m[0][1]);
    [mean - r, mean + r]
}

/// One failing sample of the strong-ellipticity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityWitness {
    pub point: StatePoint,
    pub xi: [f64; 2],
    /// Real and imaginary parts of `η`.
    pub eta: ([f64; 2], [f64; 2]),
    pub quotient: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub samples: usize,
    pub seed: u64,
    /// Minimum of `Re(−A#(ξ)η|η)` over the samples.
    pub min_quotient: f64,
    /// `c·Δ_min²/e²` at the sample attaining the smallest quotient-to-bound ratio.
    pub bound_at_min_ratio: f64,
    /// Minimum of quotient / bound; at least `1 − 1e-9` when the bound holds.
    pub min_ratio: f64,
    /// Smallest `c` seen.
    pub min_c: f64,
    pub max_symmetry_residual: f64,
    /// Largest `(d:𝕊ε)² / (△²(d)△²(ε))` over the samples with `d = ξ⊗Re η`.
    pub max_cauchy_schwarz_ratio: f64,
    /// Smallest eigenvalue of `−A#(ξ)` divided by the bound.
    pub min_eigenvalue_ratio: f64,
    pub violations: usize,
    pub first_violation: Option<EllipticityWitness>,
}

impl fmt::Display for EllipticityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "strong ellipticity: {} samples (seed {})",
            self.samples, self.seed
        )?;
        writeln!(f, "  min quotient            {:.6e}", self.min_quotient)?;
        writeln!(f, "  min quotient / bound    {:.6e}", self.min_ratio)?;
        writeln!(
            f,
            "  min eigenvalue / bound  {:.6e}",
            self.min_eigenvalue_ratio
        )?;
        writeln!(f, "  min c                   {:.6e}", self.min_c)?;
        writeln!(
            f,
            "  max symmetry residual   {:.3e}",
            self.max_symmetry_residual
        )?;
        writeln!(
            f,
            "  max Cauchy-Schwarz ratio {:.12}",
            self.max_cauchy_schwarz_ratio
        )?;
        write!(f, "  violations              {}", self.violations)
    }
}

/// Samples `(x, ξ, η)` with `|ξ| = |η| = 1` and compares the Rayleigh
/// quotient against `c·Δ_min²/e²`. Errors with the first witness when the
/// bound fails.
pub fn check_strong_ellipticity(
    points: &[StatePoint],
    n_samples: usize,
    seed: u64,
    params: &Params,
) -> Result<EllipticityReport> {
    let report = strong_ellipticity_report(points, n_samples, seed, params)?;
    match &report.first_violation {
        Some(w) => Err(Error::Ellipticity(format!(
            "quotient {:.6e} below bound {:.6e} at {:?}",
            w.quotient, w.bound, w
        ))),
        None => Ok(report),
    }
}

/// Same sampling as [`check_strong_ellipticity`], returning the report
/// even when violations occur.
pub fn strong_ellipticity_report(
    points: &[StatePoint],
    n_samples: usize,
    seed: u64,
    params: &Params,
) -> Result<EllipticityReport> {
    if points.is_empty() {
        return Err(Error::Validation("no state points to sample".into()));
    }
    let p = triangle_params(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EllipticityReport {
        samples: n_samples,
        seed,
        min_quotient: f64::INFINITY,
        bound_at_min_ratio: f64::NAN,
        min_ratio: f64::INFINITY,
        min_c: f64::INFINITY,
        max_symmetry_residual: 0.0,
        max_cauchy_schwarz_ratio: 0.0,
        min_eigenvalue_ratio: f64::INFINITY,
        violations: 0,
        first_violation: None,
    };
    let e2 = p.e * p.e;
    for _ in 0..n_samples {
        let point = points[rng.random_range(0..points.len())];
        if point.h < KAPPA {
            return Err(Error::Validation(format!(
                "sampled thickness {} below {KAPPA}",
                point.h
            )));
        }
        let (a, c) = coefficients_at(&point, &p)?;
        let xi = random_unit(&mut rng);
        let (mut x, mut y) = random_complex2(&mut rng);
        let norm = (x[0] * x[0] + x[1] * x[1] + y[0] * y[0] + y[1] * y[1]).sqrt();
        x.iter_mut().chain(y.iter_mut()).for_each(|v| *v /= norm);

        let m = principal_symbol(&a, xi);
        let form = |z: [f64; 2]| {
            -(m[0][0] * z[0] * z[0] + 2.0 * m[0][1] * z[0] * z[1] + m[1][1] * z[1] * z[1])
        };
        let quotient = form(x) + form(y);
        let bound = c * p.delta_min * p.delta_min / e2;
        let ratio = quotient / bound;

        report.min_quotient = report.min_quotient.min(quotient);
        if ratio < report.min_ratio {
            report.min_ratio = ratio;
            report.bound_at_min_ratio = bound;
        }
        report.min_c = report.min_c.min(c);
        report.max_symmetry_residual = report.max_symmetry_residual.max(check_symmetries(&a));
        let neg = [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]];
        report.min_eigenvalue_ratio = report
            .min_eigenvalue_ratio
            .min(symmetric_eigenvalues(&neg)[0] / bound);

        let eps = point.strain.as_tensor();
        let tri_eps = triangle_sq(&eps, p.e);
        if tri_eps > 0.0 {
            let d = outer(x, xi);
            let cs = contract(&d, &apply_s(&eps, p.e)).powi(2) / (triangle_sq(&d, p.e) * tri_eps);
            if cs.is_finite() {
                report.max_cauchy_schwarz_ratio = report.max_cauchy_schwarz_ratio.max(cs);
            }
        }

        if !(quotient >= bound * (1.0 - BOUND_SLACK)) {
            report.violations += 1;
            if report.first_violation.is_none() {
                report.first_violation = Some(EllipticityWitness {
                    point,
                    xi,
                    eta: (x, y),
                    quotient,
                    bound,
                });
            }
        }
    }
    Ok(report)
}

/// `Re Σ −a_ij^kl (ξ_l u_j − ν_l v_j) conj(ξ_k u_i − ν_k v_i)` for complex
/// `u = ur + i·ui`, `v = vr + i·vi`.
pub fn normal_form(
    a: &CoefficientTensor,
    xi: [f64; 2],
    nu: [f64; 2],
    u: ([f64; 2], [f64; 2]),
    v: ([f64; 2], [f64; 2]),
) -> f64 {
    // D_ik = ξ_k u_i − ν_k v_i, split into real and imaginary matrices
    let sub = |p: Tensor2, q: Tensor2| {
        [
            [p[0][0] - q[0][0], p[0][1] - q[0][1]],
            [p[1][0] - q[1][0], p[1][1] - q[1][1]],
        ]
    };
    let re = sub(outer(u.0, xi), outer(v.0, nu));
    let im = sub(outer(u.1, xi), outer(v.1, nu));
    negative_form(a, &re) + negative_form(a, &im)
}

/// `Im(u|v) = Σ Im(u_i conj v_i)`.
pub fn imag_inner(u: ([f64; 2], [f64; 2]), v: ([f64; 2], [f64; 2])) -> f64 {
    (0..2).map(|i| u.1[i] * v.0[i] - u.0[i] * v.1[i]).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalWitness {
    pub point: StatePoint,
    pub xi: [f64; 2],
    pub nu: [f64; 2],
    pub u: ([f64; 2], [f64; 2]),
    pub v: ([f64; 2], [f64; 2]),
    pub form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalEllipticityReport {
    pub samples: usize,
    pub seed: u64,
    /// Samples with `|Im(u|v)| > 1e-6·|u||v|`.
    pub strict_samples: usize,
    /// Smallest form value divided by `(P̃/2ρhΔ)·|D|²`, over all samples.
    pub min_scaled_margin: f64,
    /// The same minimum restricted to the strict samples.
    pub min_strict_scaled_margin: f64,
    /// Samples below `−1e-12·scale`.
    pub negative_violations: usize,
    /// Strict samples whose form is not positive.
    pub strict_violations: usize,
    pub first_violation: Option<NormalWitness>,
}

impl NormalEllipticityReport {
    pub fn violations(&self) -> usize {
        self.negative_violations + self.strict_violations
    }
}

impl fmt::Display for NormalEllipticityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "strong normal ellipticity: {} samples (seed {})",
            self.samples, self.seed
        )?;
        writeln!(f, "  samples with Im(u|v) != 0  {}", self.strict_samples)?;
        writeln!(
            f,
            "  min scaled margin          {:.6e}",
            self.min_scaled_margin
        )?;
        writeln!(
            f,
            "  min strict scaled margin   {:.6e}",
            self.min_strict_scaled_margin
        )?;
        write!(f, "  violations                 {}", self.violations())
    }
}

/// Samples orthonormal `(ξ, ν)` and complex `u, v`; errors with a witness on
/// the first violation.
pub fn check_normal_ellipticity(
    points: &[StatePoint],
    n_samples: usize,
    seed: u64,
    params: &Params,
) -> Result<NormalEllipticityReport> {
    let report = normal_ellipticity_report(points, n_samples, seed, params)?;
    match &report.first_violation {
        Some(w) => Err(Error::Ellipticity(format!(
            "normal form {:.6e} at {:?}",
            w.form, w
        ))),
        None => Ok(report),
    }
}

pub fn normal_ellipticity_report(
    points: &[StatePoint],
    n_samples: usize,
    seed: u64,
    params: &Params,
) -> Result<NormalEllipticityReport> {
    if points.is_empty() {
        return Err(Error::Validation("no state points to sample".into()));
    }
    let p = triangle_params(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = NormalEllipticityReport {
        samples: n_samples,
        seed,
        strict_samples: 0,
        min_scaled_margin: f64::INFINITY,
        min_strict_scaled_margin: f64::INFINITY,
        negative_violations: 0,
        strict_violations: 0,
        first_violation: None,
    };
    for _ in 0..n_samples {
        let point = points[rng.random_range(0..points.len())];
        let (a, c) = coefficients_at(&point, &p)?;
        let xi = random_unit(&mut rng);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let nu = [-sign * xi[1], sign * xi[0]];
        let u = random_complex2(&mut rng);
        let v = random_complex2(&mut rng);

        let form = normal_form(&a, xi, nu, u, v);
        let delta = delta_of(&point.strain, &p);
        let zeta = c * delta * delta;
        let sq = |z: ([f64; 2], [f64; 2])| {
            z.0[0].powi(2) + z.0[1].powi(2) + z.1[0].powi(2) + z.1[1].powi(2)
        };
        // |D|² = |u|² + |v|² for orthonormal ξ, ν
        let scale = zeta * (sq(u) + sq(v));
        let margin = form / scale;
        report.min_scaled_margin = report.min_scaled_margin.min(margin);

        let strict = imag_inner(u, v).abs() > 1e-6 * sq(u).sqrt() * sq(v).sqrt();
        let mut failed = false;
        if form < -1e-12 * scale {
            report.negative_violations += 1;
            failed = true;
        }
        if strict {
            report.strict_samples += 1;
            report.min_strict_scaled_margin = report.min_strict_scaled_margin.min(margin);
            if !(form > 0.0) {
                report.strict_violations += 1;
                failed = true;
            }
        }
        if failed && report.first_violation.is_none() {
            report.first_violation = Some(NormalWitness {
                point,
                xi,
                nu,
                u,
                v,
                form,
            });
        }
    }
    Ok(report)
}
