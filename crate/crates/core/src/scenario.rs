//! Time loop, run directories, checkpoints and run comparison.
//!
//! A run directory holds `timeseries.csv`, `snapshots/NNNN.vtk`,
//! `manifest.json` and, for interrupted runs, `checkpoint.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    diagnostics_row, kinetic_energy, read_timeseries, trapezoid, write_timeseries, DiagnosticsRow,
};
use crate::error::{Error, Result};
use crate::forcing::ForcingInputs;
use crate::grid::{eval_initial_condition, node_to_cell_average, Mesh, State};
use crate::momentum::{solve_momentum, MomentumProblem};
use crate::params::{Params, ScenarioSpec};
use crate::transport::{advect_diffuse, TracerKind, TransportProblem};
use crate::vtk::{read_snapshot, write_snapshot, Snapshot};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Width of the coastal strip used by the comparison metrics (m).
pub const LEFT_STRIP_WIDTH: f64 = 64e3;

/// Solver and transport facts about one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub t: f64,
    pub iterations: usize,
    pub converged: bool,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub newton_steps: usize,
    pub picard_steps: usize,
    pub outflow_cfl: f64,
    pub clip_count: u64,
}

/// A simulation in progress.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    /// Parameters as given; the rheology uses [`ScenarioSpec::effective_params`].
    pub params: Params,
    pub spec: ScenarioSpec,
    pub mesh: Mesh,
    pub state: State,
    pub step: usize,
    pub ke_cum: f64,
    pub rows: Vec<DiagnosticsRow>,
    pub summaries: Vec<StepSummary>,
}

impl Simulation {
    pub fn new(params: Params, spec: ScenarioSpec) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        let mesh = Mesh::square(spec.cells_per_side, spec.domain_length)?;
        let state = eval_initial_condition(&spec, &mesh)?;
        let row = diagnostics_row(&state, &mesh, &params, spec.polynya_threshold, 0.0, 0)?;
        Ok(Self {
            params,
            spec,
            mesh,
            state,
            step: 0,
            ke_cum: 0.0,
            rows: vec![row],
            summaries: Vec::new(),
        })
    }

    pub fn total_steps(&self) -> usize {
        self.spec.step_count()
    }

    pub fn finished(&self) -> bool {
        self.step >= self.total_steps()
    }

    /// Momentum solve, then transport of `h` and `A`, then diagnostics.
    pub fn advance(&mut self) -> Result<StepSummary> {
        let params = self.spec.effective_params(&self.params);
        let dt = self.spec.dt;
        let problem = MomentumProblem {
            mesh: &self.mesh,
            v_prev: &self.state.v,
            h: &self.state.h,
            a: &self.state.a,
            forcing: ForcingInputs::from_spec(&self.spec),
            dt,
            params: &params,
        };
        let (v, report) = solve_momentum(&problem, &self.spec.solver)?;
        let step = self.step + 1;
        if !report.converged {
            warn!("step {step}: momentum solve did not converge, keeping best iterate");
        }

        let transport = |field, kind, diffusivity| {
            advect_diffuse(&TransportProblem {
                mesh: &self.mesh,
                field,
                kind,
                velocity: &v,
                diffusivity,
                dt,
            })
        };
        let h = transport(&self.state.h, TracerKind::Thickness, params.d_h)?;
        let a = transport(&self.state.a, TracerKind::Concentration, params.d_a)?;
        let clip_count = (h.clip_count + a.clip_count) as u64;

        let prev_t = self.state.t;
        let prev_ke = self.rows.last().map(|r| r.ke_inst).unwrap_or(0.0);
        self.state = State {
            t: step as f64 * dt,
            v,
            h: h.field,
            a: a.field,
        };
        self.step = step;
        let (ke, _) = kinetic_energy(&self.state, &self.mesh, &self.params)?;
        self.ke_cum += trapezoid(prev_t, prev_ke, self.state.t, ke);
        let row = diagnostics_row(
            &self.state,
            &self.mesh,
            &self.params,
            self.spec.polynya_threshold,
            self.ke_cum,
            clip_count,
        )?;
        self.rows.push(row);
        let summary = StepSummary {
            step,
            t: self.state.t,
            iterations: report.iterations,
            converged: report.converged,
            initial_residual: report.initial_residual,
            final_residual: report.final_residual,
            newton_steps: report.newton_steps,
            picard_steps: report.picard_steps,
            outflow_cfl: h.outflow_cfl,
            clip_count,
        };
        self.summaries.push(summary.clone());
        Ok(summary)
    }

    /// Runs all remaining steps, calling `observe` after each.
    pub fn run_to_end(&mut self, mut observe: impl FnMut(&Simulation) -> Result<()>) -> Result<()> {
        while !self.finished() {
            self.advance()?;
            observe(self)?;
        }
        Ok(())
    }

    /// JSON form of the full simulation state.
    pub fn to_checkpoint(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let sim: Simulation = serde_json::from_str(text)?;
        sim.params.validate()?;
        sim.spec.validate()?;
        sim.state.check(&sim.mesh)?;
        Ok(sim)
    }
}

/// Per-run settings that do not affect the physics.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the scenario's snapshot interval (s).
    pub snapshot_interval: Option<f64>,
    /// Stop after this many steps in total and leave a checkpoint.
    pub stop_after_steps: Option<usize>,
    /// Continue from `checkpoint.json` in `out_dir`.
    pub resume: bool,
    /// Recorded in the manifest; the time loop itself uses no randomness.
    pub seed: u64,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            snapshot_interval: None,
            stop_after_steps: None,
            resume: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub params: Params,
    pub scenario: ScenarioSpec,
    pub code_version: String,
    pub seed: u64,
    pub snapshot_interval: f64,
    pub wall_clock_seconds: f64,
    pub steps_completed: usize,
    pub total_steps: usize,
    pub completed: bool,
    /// Set when the run stopped on an error.
    pub aborted: Option<String>,
    /// Paths relative to the run directory.
    pub files: Vec<String>,
    pub step_reports: Vec<StepSummary>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(
            dir.join(MANIFEST_FILE),
        )?)?)
    }
}

/// Index of the snapshot due at the end of `step`, if any.
fn snapshot_due(step: usize, dt: f64, interval: f64) -> Option<usize> {
    let slot = |s: usize| ((s as f64 * dt) / interval + 1e-9).floor() as usize;
    if step == 0 {
        Some(0)
    } else if slot(step) > slot(step - 1) {
        Some(slot(step))
    } else {
        None
    }
}

fn snapshot_name(index: usize) -> String {
    format!("{SNAPSHOT_DIR}/{index:04}.vtk")
}

/// Runs (or resumes) a scenario and writes its run directory.
pub fn run(params: Params, spec: ScenarioSpec, opts: &RunOptions) -> Result<RunManifest> {
    let clock = Instant::now();
    let dir = &opts.out_dir;
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    let mut sim = if opts.resume {
        let sim = Simulation::from_checkpoint(&fs::read_to_string(dir.join(CHECKPOINT_FILE))?)?;
        if sim.params != params || sim.spec != spec {
            return Err(Error::Incompatible(
                "checkpoint was written for a different configuration".into(),
            ));
        }
        info!("resuming {} at step {}", sim.spec.name, sim.step);
        sim
    } else {
        Simulation::new(params, spec)?
    };
    let interval = opts.snapshot_interval.unwrap_or(sim.spec.snapshot_interval);
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Error::Validation("snapshot interval must be > 0".into()));
    }
    let dt = sim.spec.dt;
    let total = sim.total_steps();
    let stop_at = opts.stop_after_steps.unwrap_or(total).min(total);

    let mut files: Vec<String> = Vec::new();
    if !opts.resume {
        let name = snapshot_name(0);
        write_snapshot(&sim.state, &sim.mesh, &dir.join(&name))?;
        files.push(name);
    } else {
        for step in 0..=sim.step {
            if let Some(k) = snapshot_due(step, dt, interval) {
                files.push(snapshot_name(k));
            }
        }
    }

    let mut failure: Option<(usize, Error)> = None;
    while sim.step < stop_at {
        match sim.advance() {
            Ok(s) => {
                if sim.step % 48 == 0 || sim.step == total {
                    info!(
                        "{}: step {}/{} t={:.1} h, {} iterations, max |v| {:.3e}",
                        sim.spec.name,
                        s.step,
                        total,
                        s.t / 3600.0,
                        s.iterations,
                        sim.state.v.max_speed()
                    );
                }
                if let Some(k) = snapshot_due(sim.step, dt, interval) {
                    let name = snapshot_name(k);
                    write_snapshot(&sim.state, &sim.mesh, &dir.join(&name))?;
                    files.push(name);
                }
            }
            Err(e) => {
                failure = Some((sim.step + 1, e));
                break;
            }
        }
    }

    write_timeseries(&sim.rows, &dir.join(TIMESERIES_FILE))?;
    files.push(TIMESERIES_FILE.into());
    let completed = sim.finished();
    let aborted = failure
        .as_ref()
        .map(|(step, e)| format!("step {step}: {e}"));
    let checkpoint = dir.join(CHECKPOINT_FILE);
    if !completed && aborted.is_none() {
        fs::write(&checkpoint, sim.to_checkpoint()?)?;
        files.push(CHECKPOINT_FILE.into());
    } else if checkpoint.exists() {
        fs::remove_file(&checkpoint)?;
    }
    files.push(MANIFEST_FILE.into());
    let manifest = RunManifest {
        name: sim.spec.name.clone(),
        params: sim.params.clone(),
        scenario: sim.spec.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        snapshot_interval: interval,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        steps_completed: sim.step,
        total_steps: total,
        completed,
        aborted,
        files,
        step_reports: sim.summaries.clone(),
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    match failure {
        Some((_, e)) => Err(e),
        None => Ok(manifest),
    }
}

/// Summary metrics of one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub t: f64,
    /// Mean x-velocity over interior nodes (m s⁻¹).
    pub mean_eastward_velocity: f64,
    /// Mean cell speed over cells with `x < 64 km` and `h > h_crit`; `None`
    /// when no cell qualifies.
    pub grounded_strip_speed: Option<f64>,
    /// Mean cell speed over all cells with `x < 64 km`.
    pub left_strip_speed: f64,
    pub min_concentration_left_half: f64,
    pub max_speed: f64,
}

pub fn snapshot_metrics(snap: &Snapshot, h_crit: f64) -> Result<SnapshotMetrics> {
    let mesh = &snap.mesh;
    let vbar = node_to_cell_average(&snap.v, mesh)?;
    let (mut grounded, mut grounded_n, mut strip, mut strip_n) = (0.0, 0usize, 0.0, 0usize);
    let mut min_a_left = f64::INFINITY;
    let half = mesh.origin[0] + 0.5 * mesh.lengths()[0];
    for j in 0..mesh.ny {
        for i in 0..mesh.nx {
            let c = mesh.cell(i, j);
            let x = mesh.cell_center(i, j)[0];
            let speed = vbar[c][0].hypot(vbar[c][1]);
            if x - mesh.origin[0] < LEFT_STRIP_WIDTH {
                strip += speed;
                strip_n += 1;
                if snap.h.data[c] > h_crit {
                    grounded += speed;
                    grounded_n += 1;
                }
            }
            if x < half {
                min_a_left = min_a_left.min(snap.a.data[c]);
            }
        }
    }
    let mut east = 0.0;
    let mut interior = 0usize;
    for j in 1..mesh.ny {
        for i in 1..mesh.nx {
            east += snap.v.data[mesh.node(i, j)][0];
            interior += 1;
        }
    }
    Ok(SnapshotMetrics {
        t: snap.t,
        mean_eastward_velocity: east / interior as f64,
        grounded_strip_speed: (grounded_n > 0).then(|| grounded / grounded_n as f64),
        left_strip_speed: strip / strip_n.max(1) as f64,
        min_concentration_left_half: min_a_left,
        max_speed: snap.v.max_speed(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDiffs {
    pub v: f64,
    pub h: f64,
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub t: f64,
    pub snapshot: String,
    /// Largest absolute differences between the two snapshots.
    pub max_abs_diff: FieldDiffs,
    /// Largest absolute difference per time-series column over common rows.
    pub timeseries_max_abs_diff: Vec<(String, f64)>,
    pub metrics_a: SnapshotMetrics,
    pub metrics_b: SnapshotMetrics,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Compares two run directories at the latest snapshot time they share.
pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<CompareReport> {
    let ma = RunManifest::load(dir_a)?;
    let mb = RunManifest::load(dir_b)?;
    if ma.scenario.cells_per_side != mb.scenario.cells_per_side
        || ma.scenario.domain_length != mb.scenario.domain_length
    {
        return Err(Error::Incompatible(format!(
            "meshes differ: {}x{} cells over {} m vs {}x{} cells over {} m",
            ma.scenario.cells_per_side,
            ma.scenario.cells_per_side,
            ma.scenario.domain_length,
            mb.scenario.cells_per_side,
            mb.scenario.cells_per_side,
            mb.scenario.domain_length
        )));
    }
    let snaps = |m: &RunManifest| -> Vec<String> {
        m.files
            .iter()
            .filter(|f| f.starts_with(SNAPSHOT_DIR))
            .cloned()
            .collect()
    };
    let (sa, sb) = (snaps(&ma), snaps(&mb));
    let mut chosen = None;
    for name in sa.iter().rev() {
        if !sb.contains(name) {
            continue;
        }
        let a = read_snapshot(&dir_a.join(name))?;
        let b = read_snapshot(&dir_b.join(name))?;
        if a.t == b.t {
            chosen = Some((name.clone(), a, b));
            break;
        }
    }
    let (name, a, b) =
        chosen.ok_or_else(|| Error::Incompatible("no snapshot at a common time".into()))?;
    if a.mesh != b.mesh {
        return Err(Error::Incompatible("snapshot meshes differ".into()));
    }
    let flat = |s: &Snapshot| -> Vec<f64> { s.v.data.iter().flat_map(|x| *x).collect() };
    let max_abs = FieldDiffs {
        v: max_abs_diff(&flat(&a), &flat(&b)),
        h: max_abs_diff(&a.h.data, &b.h.data),
        a: max_abs_diff(&a.a.data, &b.a.data),
    };
    let ta = read_timeseries(&dir_a.join(TIMESERIES_FILE))?;
    let tb = read_timeseries(&dir_b.join(TIMESERIES_FILE))?;
    let n = ta.len().min(tb.len());
    let column = |f: fn(&DiagnosticsRow) -> f64| -> f64 {
        ta[..n]
            .iter()
            .zip(&tb[..n])
            .fold(0.0, |m, (x, y)| m.max((f(x) - f(y)).abs()))
    };
    let timeseries_max_abs_diff = vec![
        ("t_seconds".to_string(), column(|r| r.t_seconds)),
        ("ke_inst".to_string(), column(|r| r.ke_inst)),
        ("ke_cum".to_string(), column(|r| r.ke_cum)),
        ("max_speed".to_string(), column(|r| r.max_speed)),
        (
            "p99_scaled_speed".to_string(),
            column(|r| r.p99_scaled_speed),
        ),
        ("polynya_area_m2".to_string(), column(|r| r.polynya_area_m2)),
        ("mass_h_m3".to_string(), column(|r| r.mass_h_m3)),
        ("clip_count".to_string(), column(|r| r.clip_count as f64)),
    ];
    Ok(CompareReport {
        t: a.t,
        snapshot: name,
        max_abs_diff: max_abs,
        timeseries_max_abs_diff,
        metrics_a: snapshot_metrics(&a, ma.params.h_crit)?,
        metrics_b: snapshot_metrics(&b, mb.params.h_crit)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_schedule() {
        let due: Vec<usize> = (0..=96)
            .filter_map(|s| snapshot_due(s, 1800.0, 43200.0).map(|_| s))
            .collect();
        assert_eq!(due, vec![0, 24, 48, 72, 96]);
        assert_eq!(snapshot_due(48, 1800.0, 43200.0), Some(2));
    }

    #[test]
    fn step_counts_of_presets() {
        use crate::params::preset;
        assert_eq!(preset("ex2_unforced").unwrap().1.step_count(), 1056);
        assert_eq!(preset("ex1_lfi").unwrap().1.step_count(), 96);
    }

    #[test]
    fn short_duration_is_rejected() {
        let (params, mut spec) = crate::params::preset("ex1_lfi").unwrap();
        spec.duration = 100.0;
        match Simulation::new(params, spec) {
            Err(Error::Validation(m)) => assert_eq!(m, "duration shorter than one step"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
