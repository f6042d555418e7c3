//! Scalar diagnostics of a state and the per-step CSV time series.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{node_to_cell_average, Mesh, ScalarField, State};
use crate::params::Params;
use crate::transport::total_mass;

/// Column order of `timeseries.csv`.
pub const TIMESERIES_HEADER: [&str; 8] = [
    "t_seconds",
    "ke_inst",
    "ke_cum",
    "max_speed",
    "p99_scaled_speed",
    "polynya_area_m2",
    "mass_h_m3",
    "clip_count",
];

/// Only cells with more ice than this enter the scaled-speed percentile.
pub const SCALED_SPEED_MIN_CONCENTRATION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t_seconds: f64,
    /// J
    pub ke_inst: f64,
    /// J s, trapezoidal in time
    pub ke_cum: f64,
    /// m s⁻¹, over nodes
    pub max_speed: f64,
    /// m s⁻¹
    pub p99_scaled_speed: f64,
    pub polynya_area_m2: f64,
    pub mass_h_m3: f64,
    /// Cells clipped by the transport step that produced this state.
    pub clip_count: u64,
}

/// `∫ ½ρh|v|² dA` by the midpoint rule with cell-averaged velocity, and the
/// per-cell integrand `½ρh|v̄|²` (J m⁻²).
pub fn kinetic_energy(state: &State, mesh: &Mesh, params: &Params) -> Result<(f64, Vec<f64>)> {
    state.check(mesh)?;
    let vbar = node_to_cell_average(&state.v, mesh)?;
    let density: Vec<f64> = vbar
        .iter()
        .zip(&state.h.data)
        .map(|(v, &h)| 0.5 * params.rho * h * (v[0] * v[0] + v[1] * v[1]))
        .collect();
    let total = density.iter().sum::<f64>() * mesh.cell_area();
    Ok((total, density))
}

/// `A·|v̄|` per cell.
pub fn scaled_speed(state: &State, mesh: &Mesh) -> Result<ScalarField> {
    state.check(mesh)?;
    let vbar = node_to_cell_average(&state.v, mesh)?;
    Ok(ScalarField {
        nx: mesh.nx,
        ny: mesh.ny,
        data: vbar
            .iter()
            .zip(&state.a.data)
            .map(|(v, &a)| a * v[0].hypot(v[1]))
            .collect(),
    })
}

/// Percentile `q ∈ [0, 100]` with linear interpolation between order
/// statistics; 0 for an empty sample.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// 99th percentile of `A·|v̄|` over cells with `A > 0.5`.
pub fn p99_scaled_speed(state: &State, mesh: &Mesh) -> Result<f64> {
    let s = scaled_speed(state, mesh)?;
    let sample: Vec<f64> = s
        .data
        .iter()
        .zip(&state.a.data)
        .filter(|(_, &a)| a > SCALED_SPEED_MIN_CONCENTRATION)
        .map(|(&x, _)| x)
        .collect();
    Ok(percentile(&sample, 99.0))
}

/// Area of cells with `A < threshold` (m²).
pub fn polynya_area(a: &ScalarField, mesh: &Mesh, threshold: f64) -> Result<f64> {
    a.check(mesh)?;
    let count = a.data.iter().filter(|&&x| x < threshold).count();
    Ok(count as f64 * mesh.cell_area())
}

/// All instantaneous diagnostics of `state`; `ke_cum` and `clip_count` are
/// supplied by the caller.
pub fn diagnostics_row(
    state: &State,
    mesh: &Mesh,
    params: &Params,
    polynya_threshold: f64,
    ke_cum: f64,
    clip_count: u64,
) -> Result<DiagnosticsRow> {
    let (ke_inst, _) = kinetic_energy(state, mesh, params)?;
    Ok(DiagnosticsRow {
        t_seconds: state.t,
        ke_inst,
        ke_cum,
        max_speed: state.v.max_speed(),
        p99_scaled_speed: p99_scaled_speed(state, mesh)?,
        polynya_area_m2: polynya_area(&state.a, mesh, polynya_threshold)?,
        mass_h_m3: total_mass(&state.h, mesh),
        clip_count,
    })
}

/// Trapezoidal increment of the time-integrated kinetic energy.
pub fn trapezoid(t0: f64, ke0: f64, t1: f64, ke1: f64) -> f64 {
    0.5 * (t1 - t0) * (ke0 + ke1)
}

pub fn write_timeseries(rows: &[DiagnosticsRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(File::create(path)?);
    w.write_record(TIMESERIES_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TIMESERIES_HEADER {
        return Err(Error::Format {
            path: path.to_owned(),
            reason: format!("unexpected header {header:?}"),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
