//! Slow reference implementations shared by the integration tests and the
//! acceptance harness.

#![allow(dead_code)]

use landfast::forcing::ForcingInputs;
use landfast::grid::{Mesh, ScalarField, VectorField};
use landfast::momentum::{Discretization, Linearization, MomentumProblem};
use landfast::params::{DeltaForm, ForceToggles, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Owned inputs of one momentum step.
pub struct Case {
    pub mesh: Mesh,
    pub params: Params,
    pub forcing: ForcingInputs,
    pub dt: f64,
    pub v_prev: VectorField,
    pub h: ScalarField,
    pub a: ScalarField,
}

impl Case {
    pub fn problem(&self) -> MomentumProblem<'_> {
        MomentumProblem {
            mesh: &self.mesh,
            v_prev: &self.v_prev,
            h: &self.h,
            a: &self.a,
            forcing: self.forcing,
            dt: self.dt,
            params: &self.params,
        }
    }
}

/// Random 8×8 step with every forcing term switched on. A few cells are
/// nearly ice free so that some nodes are masked.
pub fn random_case(seed: u64, form: DeltaForm) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = Mesh::square(8, 64e3).unwrap();
    let params = Params {
        h_crit: 1.0,
        delta_form: form,
        ..Params::default()
    };
    let h = ScalarField::from_fn(&mesh, |_, _| rng.random_range(0.2..4.0));
    let a = ScalarField::from_fn(&mesh, |_, _| {
        if rng.random_bool(0.1) {
            0.0
        } else {
            rng.random_range(0.3..1.0)
        }
    });
    let v_prev = VectorField::from_fn(&mesh, |_, _| {
        [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)]
    });
    let forcing = ForcingInputs {
        wind: [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)],
        ocean_velocity: [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)],
        toggles: ForceToggles {
            ocean_drag: true,
            coriolis: true,
            surface_tilt: true,
            basal: true,
            tensile: true,
        },
    };
    Case {
        mesh,
        params,
        forcing,
        dt: 1800.0,
        v_prev,
        h,
        a,
    }
}

/// Random velocity of magnitude around `scale`, zero on the boundary.
pub fn random_velocity(mesh: &Mesh, seed: u64, scale: f64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = VectorField::from_fn(mesh, |_, _| {
        [
            scale * rng.random_range(-1.0..1.0),
            scale * rng.random_range(-1.0..1.0),
        ]
    });
    v.zero_boundary(mesh);
    v
}

/// Hibler stress in its classical bulk/shear viscosity form.
pub fn hibler_stress(
    ux: f64,
    uy: f64,
    vx: f64,
    vy: f64,
    h: f64,
    a: f64,
    p: &Params,
) -> [[f64; 2]; 2] {
    let (e11, e22, e12) = (ux, vy, 0.5 * (uy + vx));
    let ie2 = 1.0 / (p.e * p.e);
    let q = match p.delta_form {
        DeltaForm::Triangle => {
            (e11 * e11 + e22 * e22) * (1.0 + ie2)
                + 4.0 * ie2 * e12 * e12
                + 2.0 * e11 * e22 * (1.0 - ie2)
        }
        DeltaForm::Deviatoric => {
            let m = 0.5 * (e11 + e22);
            0.5 * ((e11 - m).powi(2) + (e22 - m).powi(2) + 2.0 * e12 * e12)
        }
    };
    let delta = (q + p.delta_min * p.delta_min).sqrt();
    let strength = h * p.p_star * (-p.c_star * (1.0 - a)).exp();
    let zeta = (1.0 + p.k_t) * strength / (2.0 * delta);
    let eta = zeta * ie2;
    let pressure = 0.5 * (1.0 - p.k_t) * strength;
    let trace = e11 + e22;
    [
        [
            2.0 * eta * e11 + (zeta - eta) * trace - pressure,
            2.0 * eta * e12,
        ],
        [
            2.0 * eta * e12,
            2.0 * eta * e22 + (zeta - eta) * trace - pressure,
        ],
    ]
}

/// Node-by-node evaluation of the discrete momentum residual, written
/// straight from the weak form without any of the assembly helpers.
pub fn oracle_residual(case: &Case, v: &VectorField) -> Vec<[f64; 2]> {
    let m = &case.mesh;
    let p = &case.params;
    let t = case.forcing.toggles;
    let (nx, ny) = (m.nx, m.ny);
    let vel = |i: usize, j: usize| v.data[j * (nx + 1) + i];
    let mut out = vec![[0.0; 2]; m.node_count()];
    for j in 0..=ny {
        for i in 0..=nx {
            let n = j * (nx + 1) + i;
            let mut cells = Vec::new();
            for cj in [j as isize - 1, j as isize] {
                for ci in [i as isize - 1, i as isize] {
                    if ci >= 0 && cj >= 0 && (ci as usize) < nx && (cj as usize) < ny {
                        cells.push((ci as usize, cj as usize));
                    }
                }
            }
            let k = cells.len() as f64;
            let h_avg = cells
                .iter()
                .map(|&(ci, cj)| case.h.data[cj * nx + ci].max(p.h_min))
                .sum::<f64>()
                / k;
            let a_avg = cells
                .iter()
                .map(|&(ci, cj)| case.a.data[cj * nx + ci])
                .sum::<f64>()
                / k;
            let boundary = i == 0 || j == 0 || i == nx || j == ny;
            if boundary || a_avg < p.a_min {
                out[n] = v.data[n];
                continue;
            }

            let mut r = [0.0; 2];
            for &(ci, cj) in &cells {
                let (v00, v10, v01, v11) = (
                    vel(ci, cj),
                    vel(ci + 1, cj),
                    vel(ci, cj + 1),
                    vel(ci + 1, cj + 1),
                );
                let dx = |c: usize| (v10[c] + v11[c] - v00[c] - v01[c]) / (2.0 * m.dx);
                let dy = |c: usize| (v01[c] + v11[c] - v00[c] - v10[c]) / (2.0 * m.dy);
                let c = cj * nx + ci;
                let s = hibler_stress(
                    dx(0),
                    dy(0),
                    dx(1),
                    dy(1),
                    case.h.data[c],
                    case.a.data[c],
                    p,
                );
                // shape function of this node at the cell centre
                let sx = if i == ci { -1.0 } else { 1.0 };
                let sy = if j == cj { -1.0 } else { 1.0 };
                let (gx, gy) = (sx * 0.5 / m.dx, sy * 0.5 / m.dy);
                r[0] += s[0][0] * gx + s[0][1] * gy;
                r[1] += s[1][0] * gx + s[1][1] * gy;
            }

            let mass = p.rho * h_avg;
            let vn = v.data[n];
            let mut f = [0.0; 2];
            let wa = case.forcing.wind;
            let ca = p.c_a * p.rho_a * wa[0].hypot(wa[1]);
            f[0] += ca * wa[0];
            f[1] += ca * wa[1];
            let vo = case.forcing.ocean_velocity;
            if t.ocean_drag {
                let rel = [vo[0] - vn[0], vo[1] - vn[1]];
                let co = p.c_o * p.rho_o * rel[0].hypot(rel[1]);
                f[0] += co * rel[0];
                f[1] += co * rel[1];
            }
            if t.coriolis {
                f[0] += mass * p.c_cor * vn[1];
                f[1] -= mass * p.c_cor * vn[0];
            }
            if t.surface_tilt {
                f[0] -= mass * p.c_cor * vo[1];
                f[1] += mass * p.c_cor * vo[0];
            }
            if t.basal {
                let b = cells
                    .iter()
                    .map(|&(ci, cj)| {
                        let c = cj * nx + ci;
                        let excess = (case.h.data[c] - p.h_crit).max(0.0);
                        p.k2 * excess * (-p.alpha_b * (1.0 - case.a.data[c])).exp()
                    })
                    .sum::<f64>()
                    / k;
                let s = vn[0].hypot(vn[1]) + p.v0;
                f[0] -= b * vn[0] / s;
                f[1] -= b * vn[1] / s;
            }
            for c in 0..2 {
                out[n][c] = r[c] + mass * (vn[c] - case.v_prev.data[n][c]) / case.dt - f[c];
            }
        }
    }
    out
}

/// `max |r − r_oracle| / max |r_oracle|` for velocity `v`.
pub fn residual_mismatch(case: &Case, v: &VectorField) -> f64 {
    let disc = Discretization::new(&case.problem()).unwrap();
    let fast = disc.residual(v);
    let slow = oracle_residual(case, v);
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, b) in fast.data.iter().zip(&slow) {
        for c in 0..2 {
            diff = diff.max((a[c] - b[c]).abs());
            scale = scale.max(b[c].abs());
        }
    }
    diff / scale
}

/// Relative mismatch between the assembled linearization applied to `dir`
/// and a central difference of the residual along `dir`.
pub fn jacobian_mismatch(
    case: &Case,
    v: &VectorField,
    dir: &VectorField,
    lin: Linearization,
) -> f64 {
    let disc = Discretization::new(&case.problem()).unwrap();
    let mut sys = disc.block_system();
    disc.assemble(v, lin, &mut sys);
    let mut dir = dir.clone();
    disc.impose_dirichlet(&mut dir);
    let action = sys.apply(&disc.free_vector(&dir));

    let scale = v.max_speed().max(1e-30) / dir.max_speed().max(1e-30);
    let eps = 1e-5 * scale;
    let shifted = |s: f64| {
        let mut w = v.clone();
        for (x, d) in w.data.iter_mut().zip(&dir.data) {
            x[0] += s * d[0];
            x[1] += s * d[1];
        }
        disc.free_vector(&disc.residual(&w))
    };
    let (plus, minus) = (shifted(eps), shifted(-eps));
    let mut diff = 0.0;
    let mut norm = 0.0;
    for ((p, m), a) in plus.iter().zip(&minus).zip(&action) {
        let fd = (p - m) / (2.0 * eps);
        diff += (fd - a) * (fd - a);
        norm += a * a;
    }
    (diff / norm).sqrt()
}
