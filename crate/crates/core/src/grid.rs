//! Uniform quadrilateral mesh with velocity at nodes and tracers at cell centers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{InitialCondition, ScenarioSpec, VelocityMode};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
}

impl Mesh {
    pub fn new(nx: usize, ny: usize, lengths: [f64; 2]) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2x2 cells, got {nx}x{ny}"
            )));
        }
        if !(lengths[0] > 0.0 && lengths[1] > 0.0 && lengths.iter().all(|l| l.is_finite())) {
            return Err(Error::InvalidMesh(format!(
                "lengths must be positive, got {lengths:?}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            dx: lengths[0] / nx as f64,
            dy: lengths[1] / ny as f64,
            origin: [0.0, 0.0],
        })
    }

    /// Square mesh of `n × n` cells covering `[0, length]²`.
    pub fn square(n: usize, length: f64) -> Result<Self> {
        Self::new(n, n, [length, length])
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn lengths(&self) -> [f64; 2] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dy]
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.dx,
            self.origin[1] + j as f64 * self.dy,
        ]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
        ]
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Node indices of cell `(i, j)` ordered (i,j), (i+1,j), (i,j+1), (i+1,j+1).
    #[inline]
    pub fn cell_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        let n00 = self.node(i, j);
        let stride = self.nx + 1;
        [n00, n00 + 1, n00 + stride, n00 + stride + 1]
    }

    fn describe(&self) -> String {
        format!("{}x{} cells", self.nx, self.ny)
    }
}

/// Shorthand for [`Mesh::new`].
pub fn make_mesh(nx: usize, ny: usize, lengths: [f64; 2]) -> Result<Mesh> {
    Mesh::new(nx, ny, lengths)
}

/// Two velocity components per node, row-major over nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            nx: mesh.nx,
            ny: mesh.ny,
            data: vec![[0.0; 2]; mesh.node_count()],
        }
    }

    pub fn from_fn(mesh: &Mesh, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let mut data = Vec::with_capacity(mesh.node_count());
        for j in 0..=mesh.ny {
            for i in 0..=mesh.nx {
                data.push(f(i, j));
            }
        }
        Self {
            nx: mesh.nx,
            ny: mesh.ny,
            data,
        }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.nx != mesh.nx || self.ny != mesh.ny || self.data.len() != mesh.node_count() {
            return Err(Error::MeshMismatch {
                expected: mesh.describe(),
                found: format!("node field for {}x{} cells", self.nx, self.ny),
            });
        }
        Ok(())
    }

    pub fn speed(&self, n: usize) -> f64 {
        let [u, v] = self.data[n];
        u.hypot(v)
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.data.len())
            .map(|n| self.speed(n))
            .fold(0.0, f64::max)
    }

    pub fn zero_boundary(&mut self, mesh: &Mesh) {
        for j in 0..=mesh.ny {
            for i in 0..=mesh.nx {
                if mesh.is_boundary_node(i, j) {
                    self.data[mesh.node(i, j)] = [0.0; 2];
                }
            }
        }
    }
}

/// One value per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self {
            nx: mesh.nx,
            ny: mesh.ny,
            data: vec![value; mesh.cell_count()],
        }
    }

    pub fn from_fn(mesh: &Mesh, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(mesh.cell_count());
        for j in 0..mesh.ny {
            for i in 0..mesh.nx {
                data.push(f(i, j));
            }
        }
        Self {
            nx: mesh.nx,
            ny: mesh.ny,
            data,
        }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.nx != mesh.nx || self.ny != mesh.ny || self.data.len() != mesh.cell_count() {
            return Err(Error::MeshMismatch {
                expected: mesh.describe(),
                found: format!("cell field for {}x{} cells", self.nx, self.ny),
            });
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Node-based scalar values, used for averaged cell quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeScalar {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

/// Prognostic state: time, nodal velocity, cell thickness and concentration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub v: VectorField,
    pub h: ScalarField,
    pub a: ScalarField,
}

impl State {
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        self.v.check(mesh)?;
        self.h.check(mesh)?;
        self.a.check(mesh)
    }
}

/// Averages cell values onto nodes over the (one, two or four) adjacent cells.
pub fn cell_to_node_average(field: &ScalarField, mesh: &Mesh) -> Result<NodeScalar> {
    field.check(mesh)?;
    let mut data = Vec::with_capacity(mesh.node_count());
    for j in 0..=mesh.ny {
        for i in 0..=mesh.nx {
            let mut sum = 0.0;
            let mut count = 0usize;
            for cj in j.saturating_sub(1)..(j + 1).min(mesh.ny) {
                for ci in i.saturating_sub(1)..(i + 1).min(mesh.nx) {
                    sum += field.data[mesh.cell(ci, cj)];
                    count += 1;
                }
            }
            data.push(sum / count as f64);
        }
    }
    Ok(NodeScalar {
        nx: mesh.nx,
        ny: mesh.ny,
        data,
    })
}

/// Cell-center value of the bilinear interpolant: the mean of the four corners.
pub fn node_to_cell_average(field: &VectorField, mesh: &Mesh) -> Result<Vec<[f64; 2]>> {
    field.check(mesh)?;
    let mut out = Vec::with_capacity(mesh.cell_count());
    for j in 0..mesh.ny {
        for i in 0..mesh.nx {
            let mut acc = [0.0; 2];
            for n in mesh.cell_nodes(i, j) {
                acc[0] += field.data[n][0];
                acc[1] += field.data[n][1];
            }
            out.push([0.25 * acc[0], 0.25 * acc[1]]);
        }
    }
    Ok(out)
}

/// Scalar version of [`node_to_cell_average`].
pub fn node_scalar_to_cell_average(field: &NodeScalar, mesh: &Mesh) -> Result<ScalarField> {
    if field.nx != mesh.nx || field.ny != mesh.ny || field.data.len() != mesh.node_count() {
        return Err(Error::MeshMismatch {
            expected: mesh.describe(),
            found: format!("node field for {}x{} cells", field.nx, field.ny),
        });
    }
    Ok(ScalarField::from_fn(mesh, |i, j| {
        let [a, b, c, d] = mesh.cell_nodes(i, j);
        0.25 * (field.data[a] + field.data[b] + field.data[c] + field.data[d])
    }))
}

/// Samples the analytic initial condition of `spec` on `mesh`.
pub fn eval_initial_condition(spec: &ScenarioSpec, mesh: &Mesh) -> Result<State> {
    let length = mesh.lengths();
    let (h, a, mut v) = match &spec.initial_condition {
        InitialCondition::Sinusoidal {
            h_mean,
            h_amplitude,
            concentration,
            velocity_amplitude,
            velocity_mode,
        } => {
            let h = ScalarField::from_fn(mesh, |i, j| {
                let [x, _] = mesh.cell_center(i, j);
                h_mean - h_amplitude * (PI * x / length[0]).sin()
            });
            let a = ScalarField::constant(mesh, *concentration);
            let v = VectorField::from_fn(mesh, |i, j| {
                let [x, y] = mesh.node_position(i, j);
                let s =
                    velocity_amplitude * (PI * x / length[0]).sin() * (PI * y / length[1]).sin();
                match velocity_mode {
                    VelocityMode::Both => [s, s],
                    VelocityMode::XOnly => [s, 0.0],
                }
            });
            (h, a, v)
        }
        InitialCondition::Uniform {
            h,
            concentration,
            velocity,
        } => (
            ScalarField::constant(mesh, *h),
            ScalarField::constant(mesh, *concentration),
            VectorField::from_fn(mesh, |_, _| *velocity),
        ),
    };
    v.zero_boundary(mesh);
    Ok(State { t: 0.0, v, h, a })
}
