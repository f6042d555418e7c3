//! Bilinear finite-element discretization of the implicit momentum step.
//!
//! Velocities live on mesh nodes. The stress term uses one quadrature point
//! per cell (the centre), the mass and forcing terms are lumped to nodes.
//! Residual rows are divided by the cell area, so interior rows are in N m⁻².

use crate::error::Result;
use crate::forcing::{
    self, basal_coefficient, k_cross, quadratic_drag_jacobian, saturating_jacobian, ForcingInputs,
};
use crate::grid::{Mesh, VectorField};
use crate::params::{DeltaForm, Params};
use crate::rheology::{
    picard_tangent, strengths_of, stress_of, stress_tangent, StrainRate, Strengths, Tensor4,
};

use super::linear::{slot_of, BlockSystem, STENCIL};
use super::{mass_floor, MomentumProblem, NodalMass};

/// Which linearization to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linearization {
    /// Lagged viscosity and drag coefficients.
    Picard,
    /// Exact derivative of the residual.
    Newton,
}

/// Shape-function gradients of the four cell nodes at the cell centre,
/// node order as in [`Mesh::cell_nodes`].
pub fn center_gradients(mesh: &Mesh) -> [[f64; 2]; 4] {
    let gx = 0.5 / mesh.dx;
    let gy = 0.5 / mesh.dy;
    [[-gx, -gy], [gx, -gy], [-gx, gy], [gx, gy]]
}

/// Velocity gradient `g[j][l] = ∂_l v_j` at the centre of cell `(i, j)`.
pub fn cell_gradient(
    mesh: &Mesh,
    v: &VectorField,
    grads: &[[f64; 2]; 4],
    ci: usize,
    cj: usize,
) -> [[f64; 2]; 2] {
    let nodes = mesh.cell_nodes(ci, cj);
    let mut g = [[0.0; 2]; 2];
    for (a, &n) in nodes.iter().enumerate() {
        let va = v.data[n];
        for comp in 0..2 {
            g[comp][0] += va[comp] * grads[a][0];
            g[comp][1] += va[comp] * grads[a][1];
        }
    }
    g
}

/// Everything about a momentum step that does not depend on the iterate.
pub struct Discretization<'a> {
    pub mesh: &'a Mesh,
    pub params: &'a Params,
    pub forcing: ForcingInputs,
    pub dt: f64,
    pub v_prev: &'a VectorField,
    /// Lumped nodal mass ρh (kg m⁻²); 0 on fixed nodes.
    pub mass: Vec<f64>,
    /// Node-averaged basal magnitude factor.
    pub basal: Vec<f64>,
    /// Boundary or open-water node held at zero velocity.
    pub fixed: Vec<bool>,
    /// Free-node index per node (`usize::MAX` when fixed).
    pub free_index: Vec<usize>,
    pub free_nodes: Vec<usize>,
    pub strengths: Vec<Strengths>,
    grads: [[f64; 2]; 4],
}

impl<'a> Discretization<'a> {
    pub fn new(problem: &MomentumProblem<'a>) -> Result<Self> {
        let mesh = problem.mesh;
        let params = problem.params;
        problem.v_prev.check(mesh)?;
        problem.h.check(mesh)?;
        problem.a.check(mesh)?;

        let strengths = problem
            .h
            .data
            .iter()
            .zip(&problem.a.data)
            .map(|(&h, &a)| strengths_of(h, a, params))
            .collect();

        let n_nodes = mesh.node_count();
        let mut mass = vec![0.0; n_nodes];
        let mut basal = vec![0.0; n_nodes];
        let mut fixed = vec![false; n_nodes];
        for j in 0..=mesh.ny {
            for i in 0..=mesh.nx {
                let n = mesh.node(i, j);
                let (mut h_sum, mut a_sum, mut b_sum, mut count) = (0.0, 0.0, 0.0, 0usize);
                for cj in j.saturating_sub(1)..(j + 1).min(mesh.ny) {
                    for ci in i.saturating_sub(1)..(i + 1).min(mesh.nx) {
                        let c = mesh.cell(ci, cj);
                        let (h, a) = (problem.h.data[c], problem.a.data[c]);
                        h_sum += h.max(params.h_min);
                        a_sum += a;
                        if problem.forcing.toggles.basal {
                            b_sum += basal_coefficient(h, a, params);
                        }
                        count += 1;
                    }
                }
                let inv = 1.0 / count as f64;
                basal[n] = b_sum * inv;
                match mass_floor(h_sum * inv, a_sum * inv, params) {
                    NodalMass::Active(m) if !mesh.is_boundary_node(i, j) => mass[n] = m,
                    _ => fixed[n] = true,
                }
            }
        }
        let mut free_index = vec![usize::MAX; n_nodes];
        let mut free_nodes = Vec::new();
        for n in 0..n_nodes {
            if !fixed[n] {
                free_index[n] = free_nodes.len();
                free_nodes.push(n);
            }
        }
        Ok(Self {
            mesh,
            params,
            forcing: problem.forcing,
            dt: problem.dt,
            v_prev: problem.v_prev,
            mass,
            basal,
            fixed,
            free_index,
            free_nodes,
            strengths,
            grads: center_gradients(mesh),
        })
    }

    pub fn free_count(&self) -> usize {
        self.free_nodes.len()
    }

    /// `true` when the assembled linearization is symmetric.
    pub fn symmetric(&self, lin: Linearization) -> bool {
        let tangent_symmetric =
            lin == Linearization::Picard || self.params.delta_form == DeltaForm::Triangle;
        tangent_symmetric && !self.forcing.toggles.coriolis
    }

    /// Copies `v` with every fixed node set to zero.
    pub fn impose_dirichlet(&self, v: &mut VectorField) {
        for (n, &f) in self.fixed.iter().enumerate() {
            if f {
                v.data[n] = [0.0; 2];
            }
        }
    }

    /// Sum of the nodal forces other than stress, at velocity `v` of node `n`.
    fn nodal_force(&self, n: usize, v: [f64; 2]) -> [f64; 2] {
        let p = self.params;
        let t = &self.forcing.toggles;
        let m = self.mass[n];
        let mut f = forcing::wind_stress(self.forcing.wind, p);
        if t.ocean_drag {
            // drag on the ice is the raw law evaluated at v_o − v
            let fo = forcing::ocean_stress(self.forcing.ocean_velocity, v, p);
            f[0] += fo[0];
            f[1] += fo[1];
        }
        if t.coriolis {
            let fc = forcing::coriolis(v, m / p.rho, p);
            f[0] += fc[0];
            f[1] += fc[1];
        }
        if t.surface_tilt {
            let fs = forcing::surface_tilt(self.forcing.ocean_velocity, p);
            f[0] += m * fs[0];
            f[1] += m * fs[1];
        }
        if self.basal[n] > 0.0 {
            let fb = forcing::basal_stress_with(v, self.basal[n], p);
            f[0] += fb[0];
            f[1] += fb[1];
        }
        f
    }

    /// Nodal residual of the implicit step. Fixed rows hold `v − 0`.
    pub fn residual(&self, v: &VectorField) -> VectorField {
        let mesh = self.mesh;
        let mut r = VectorField::zeros(mesh);
        for cj in 0..mesh.ny {
            for ci in 0..mesh.nx {
                let g = cell_gradient(mesh, v, &self.grads, ci, cj);
                let eval = stress_of(
                    &StrainRate::from_gradient(&g),
                    &self.strengths[mesh.cell(ci, cj)],
                    self.params,
                );
                let s = eval.sigma;
                for (a, &n) in mesh.cell_nodes(ci, cj).iter().enumerate() {
                    let [gx, gy] = self.grads[a];
                    r.data[n][0] += s[0][0] * gx + s[0][1] * gy;
                    r.data[n][1] += s[1][0] * gx + s[1][1] * gy;
                }
            }
        }
        for n in 0..mesh.node_count() {
            if self.fixed[n] {
                r.data[n] = v.data[n];
                continue;
            }
            let vn = v.data[n];
            let f = self.nodal_force(n, vn);
            let m = self.mass[n] / self.dt;
            for c in 0..2 {
                r.data[n][c] += m * (vn[c] - self.v_prev.data[n][c]) - f[c];
            }
        }
        r
    }

    /// Residual restricted to the free unknowns, interleaved by component.
    pub fn free_vector(&self, field: &VectorField) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.free_count());
        for &n in &self.free_nodes {
            out.extend_from_slice(&field.data[n]);
        }
        out
    }

    /// Euclidean norm over the free rows.
    pub fn norm(&self, field: &VectorField) -> f64 {
        self.free_nodes
            .iter()
            .map(|&n| {
                let [a, b] = field.data[n];
                a * a + b * b
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn block_system(&self) -> BlockSystem {
        let mesh = self.mesh;
        let mut neighbours = vec![usize::MAX; self.free_count() * 9];
        for (p, &n) in self.free_nodes.iter().enumerate() {
            let (i, j) = ((n % (mesh.nx + 1)) as isize, (n / (mesh.nx + 1)) as isize);
            for (s, &(di, dj)) in STENCIL.iter().enumerate() {
                let (ii, jj) = (i + di, j + dj);
                if ii < 0 || jj < 0 || ii > mesh.nx as isize || jj > mesh.ny as isize {
                    continue;
                }
                neighbours[p * 9 + s] = self.free_index[mesh.node(ii as usize, jj as usize)];
            }
        }
        BlockSystem::new(self.free_count(), neighbours)
    }

    /// Assembles the chosen linearization of the residual at `v` into `sys`.
    pub fn assemble(&self, v: &VectorField, lin: Linearization, sys: &mut BlockSystem) {
        sys.clear();
        let mesh = self.mesh;
        let params = self.params;
        let stride = mesh.nx + 1;
        for cj in 0..mesh.ny {
            for ci in 0..mesh.nx {
                let g = cell_gradient(mesh, v, &self.grads, ci, cj);
                let d = StrainRate::from_gradient(&g);
                let st = &self.strengths[mesh.cell(ci, cj)];
                let c: Tensor4 = match lin {
                    Linearization::Newton => stress_tangent(&d, st, params),
                    Linearization::Picard => picard_tangent(&d, st, params),
                };
                let nodes = mesh.cell_nodes(ci, cj);
                for (a, &na) in nodes.iter().enumerate() {
                    let p = self.free_index[na];
                    if p == usize::MAX {
                        continue;
                    }
                    let ga = self.grads[a];
                    for (b, &nb) in nodes.iter().enumerate() {
                        if self.fixed[nb] {
                            continue;
                        }
                        let gb = self.grads[b];
                        let di = (nb % stride) as isize - (na % stride) as isize;
                        let dj = (nb / stride) as isize - (na / stride) as isize;
                        let block = &mut sys.blocks[p * 9 + slot_of(di, dj)];
                        for i in 0..2 {
                            for jc in 0..2 {
                                let mut acc = 0.0;
                                for k in 0..2 {
                                    for l in 0..2 {
                                        acc += ga[k] * c[i][k][jc][l] * gb[l];
                                    }
                                }
                                block[i][jc] += acc;
                            }
                        }
                    }
                }
            }
        }
        let t = &self.forcing.toggles;
        let diag = slot_of(0, 0);
        for (p, &n) in self.free_nodes.iter().enumerate() {
            let m = self.mass[n];
            let vn = v.data[n];
            let block = &mut sys.blocks[p * 9 + diag];
            block[0][0] += m / self.dt;
            block[1][1] += m / self.dt;
            if t.ocean_drag {
                let c = params.c_o * params.rho_o;
                let w = [
                    self.forcing.ocean_velocity[0] - vn[0],
                    self.forcing.ocean_velocity[1] - vn[1],
                ];
                match lin {
                    Linearization::Newton => {
                        let jq = quadratic_drag_jacobian(w);
                        for r in 0..2 {
                            for s in 0..2 {
                                block[r][s] += c * jq[r][s];
                            }
                        }
                    }
                    Linearization::Picard => {
                        let s = c * w[0].hypot(w[1]);
                        block[0][0] += s;
                        block[1][1] += s;
                    }
                }
            }
            if t.coriolis {
                // residual carries +m f k×v
                let f = m * params.c_cor;
                let e0 = k_cross([1.0, 0.0]);
                let e1 = k_cross([0.0, 1.0]);
                block[0][0] += f * e0[0];
                block[1][0] += f * e0[1];
                block[0][1] += f * e1[0];
                block[1][1] += f * e1[1];
            }
            let b = self.basal[n];
            if b > 0.0 {
                match lin {
                    Linearization::Newton => {
                        let js = saturating_jacobian(vn, params.v0);
                        for r in 0..2 {
                            for s in 0..2 {
                                block[r][s] += b * js[r][s];
                            }
                        }
                    }
                    Linearization::Picard => {
                        let s = b / (vn[0].hypot(vn[1]) + params.v0);
                        block[0][0] += s;
                        block[1][1] += s;
                    }
                }
            }
        }
    }
}
