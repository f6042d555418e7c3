//! First-order upwind finite-volume transport of cell tracers with optional
//! explicit diffusion and zero-flux walls.
//!
//! Face velocities are the average of the two nodal velocities on the edge.
//! The step is positive when every cell's outflow Courant number
//! `dt · Σ outward face flux / area` is at most 1.

use crate::error::{Error, Result};
use crate::grid::{Mesh, ScalarField, VectorField};

/// How a tracer is clipped after the update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TracerKind {
    /// Mean thickness, clipped to `[0, ∞)`.
    Thickness,
    /// Concentration, clipped to `[0, 1]`.
    Concentration,
}

#[derive(Clone, Copy, Debug)]
pub struct TransportProblem<'a> {
    pub mesh: &'a Mesh,
    pub field: &'a ScalarField,
    pub kind: TracerKind,
    pub velocity: &'a VectorField,
    /// m² s⁻¹
    pub diffusivity: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportOutcome {
    pub field: ScalarField,
    /// Largest `|u_face| dt / dx` over interior faces.
    pub face_cfl: f64,
    /// Largest per-cell outflow Courant number.
    pub outflow_cfl: f64,
    /// Extremes of the updated field before clipping.
    pub raw_min: f64,
    pub raw_max: f64,
    /// Number of cells changed by clipping.
    pub clip_count: usize,
}

/// Normal velocities on the faces: `u[j][i]` on the vertical face at
/// `x = i dx` of row `j`, `w[j][i]` on the horizontal face at `y = j dy` of
/// column `i`.
pub struct FaceVelocities {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn face_velocities(mesh: &Mesh, v: &VectorField) -> FaceVelocities {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let mut u = vec![0.0; (nx + 1) * ny];
    for j in 0..ny {
        for i in 0..=nx {
            let a = v.data[mesh.node(i, j)][0];
            let b = v.data[mesh.node(i, j + 1)][0];
            u[j * (nx + 1) + i] = 0.5 * (a + b);
        }
    }
    let mut w = vec![0.0; nx * (ny + 1)];
    for j in 0..=ny {
        for i in 0..nx {
            let a = v.data[mesh.node(i, j)][1];
            let b = v.data[mesh.node(i + 1, j)][1];
            w[j * nx + i] = 0.5 * (a + b);
        }
    }
    FaceVelocities { u, w }
}

/// Face and per-cell outflow Courant numbers for velocity `v`, over the
/// faces that carry flux.
pub fn courant_numbers(mesh: &Mesh, v: &VectorField, dt: f64) -> (f64, f64) {
    let f = face_velocities(mesh, v);
    let (nx, ny) = (mesh.nx, mesh.ny);
    let mut face: f64 = 0.0;
    let mut outflow: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            // walls carry no flux
            let ul = if i == 0 { 0.0 } else { f.u[j * (nx + 1) + i] };
            let ur = if i + 1 == nx {
                0.0
            } else {
                f.u[j * (nx + 1) + i + 1]
            };
            let wb = if j == 0 { 0.0 } else { f.w[j * nx + i] };
            let wt = if j + 1 == ny {
                0.0
            } else {
                f.w[(j + 1) * nx + i]
            };
            face = face.max(ul.abs().max(ur.abs()) * dt / mesh.dx);
            face = face.max(wb.abs().max(wt.abs()) * dt / mesh.dy);
            let out =
                (ur.max(0.0) + (-ul).max(0.0)) / mesh.dx + (wt.max(0.0) + (-wb).max(0.0)) / mesh.dy;
            outflow = outflow.max(out * dt);
        }
    }
    (face, outflow)
}

/// Advances one tracer by one step.
pub fn advect_diffuse(problem: &TransportProblem) -> Result<TransportOutcome> {
    let mesh = problem.mesh;
    problem.field.check(mesh)?;
    problem.velocity.check(mesh)?;
    if !(problem.dt > 0.0) {
        return Err(Error::Validation("dt must be > 0".into()));
    }
    if !(problem.diffusivity >= 0.0) {
        return Err(Error::Validation("diffusivity must be >= 0".into()));
    }
    let (face_cfl, outflow_cfl) = courant_numbers(mesh, problem.velocity, problem.dt);
    if outflow_cfl > 1.0 {
        return Err(Error::Cfl { cfl: outflow_cfl });
    }
    let diff_number = problem.diffusivity * problem.dt / mesh.dx.min(mesh.dy).powi(2);
    if problem.diffusivity > 0.0 && diff_number > 0.25 {
        return Err(Error::DiffusionStability(diff_number));
    }

    let (nx, ny) = (mesh.nx, mesh.ny);
    let c = &problem.field.data;
    let f = face_velocities(mesh, problem.velocity);
    let dt = problem.dt;
    let mut next = c.clone();

    // interior vertical faces: flux from cell (i-1, j) to (i, j)
    for j in 0..ny {
        for i in 1..nx {
            let u = f.u[j * (nx + 1) + i];
            let (l, r) = (mesh.cell(i - 1, j), mesh.cell(i, j));
            let upwind = if u >= 0.0 { c[l] } else { c[r] };
            let flux = u * upwind * dt / mesh.dx;
            next[l] -= flux;
            next[r] += flux;
        }
    }
    // interior horizontal faces: flux from cell (i, j-1) to (i, j)
    for j in 1..ny {
        for i in 0..nx {
            let w = f.w[j * nx + i];
            let (b, t) = (mesh.cell(i, j - 1), mesh.cell(i, j));
            let upwind = if w >= 0.0 { c[b] } else { c[t] };
            let flux = w * upwind * dt / mesh.dy;
            next[b] -= flux;
            next[t] += flux;
        }
    }
    if problem.diffusivity > 0.0 {
        let kx = problem.diffusivity * dt / (mesh.dx * mesh.dx);
        let ky = problem.diffusivity * dt / (mesh.dy * mesh.dy);
        for j in 0..ny {
            for i in 1..nx {
                let (l, r) = (mesh.cell(i - 1, j), mesh.cell(i, j));
                let flux = kx * (c[l] - c[r]);
                next[l] -= flux;
                next[r] += flux;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let (b, t) = (mesh.cell(i, j - 1), mesh.cell(i, j));
                let flux = ky * (c[b] - c[t]);
                next[b] -= flux;
                next[t] += flux;
            }
        }
    }

    let raw_min = next.iter().copied().fold(f64::INFINITY, f64::min);
    let raw_max = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let upper = match problem.kind {
        TracerKind::Thickness => f64::INFINITY,
        TracerKind::Concentration => 1.0,
    };
    let mut clip_count = 0;
    for x in &mut next {
        let clipped = x.clamp(0.0, upper);
        if clipped != *x {
            clip_count += 1;
            *x = clipped;
        }
    }
    Ok(TransportOutcome {
        field: ScalarField { nx, ny, data: next },
        face_cfl,
        outflow_cfl,
        raw_min,
        raw_max,
        clip_count,
    })
}

/// `Σ field · dx · dy`.
pub fn total_mass(field: &ScalarField, mesh: &Mesh) -> f64 {
    field.data.iter().sum::<f64>() * mesh.cell_area()
}
