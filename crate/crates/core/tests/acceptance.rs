//! Acceptance gate. Prints one PASS/FAIL line per criterion.
//!
//! Exits 0 regardless of the verdicts so that the test suite stays usable;
//! set `ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use landfast::diagnostics::{percentile, scaled_speed};
use landfast::ellipticity::{
    normal_ellipticity_report, random_state_points, strong_ellipticity_report,
};
use landfast::forcing::{free_drift_speed, ForcingInputs};
use landfast::grid::State;
use landfast::momentum::{Discretization, Linearization, MomentumProblem};
use landfast::params::{preset, DeltaForm, InitialCondition, Params, ScenarioSpec};
use landfast::scenario::{snapshot_metrics, Simulation};
use landfast::transport::total_mass;
use landfast::vtk::Snapshot;
use landfast::Result;

const DAY: f64 = 86_400.0;

// criterion 1
const EX2_DAY2_MAX: f64 = 1e-3;
const EX2_BAND: (f64, f64) = (1e-5, 1e-3);
const KE_INCREASE_TOL: f64 = 1e-10;
const EX2_RUNTIME: f64 = 600.0;
// criterion 2
const GROUNDED_STRIP_MAX: f64 = 1e-4;
const VP_CONTRAST: f64 = 10.0;
const POLYNYA_MAX_A: f64 = 0.5;
// criterion 3
const EX3_P99_MAX: f64 = 1e-4;
const EX3_RUNTIME: f64 = 1800.0;
// criterion 4
const FREE_DRIFT_QUOTED: f64 = 0.33254;
const FREE_DRIFT_TOL: f64 = 1e-3;
// criterion 5
const STRONG_SAMPLES: usize = 10_000;
const NORMAL_SAMPLES: usize = 100_000;
const SYMMETRY_MAX: f64 = 1e-13;
const ELLIPTICITY_RUNTIME: f64 = 60.0;
// criterion 6
const MASS_DRIFT_MAX: f64 = 1e-10;
// criterion 7
const ORACLE_MAX: f64 = 1e-12;
const FD_MAX: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn error(e: landfast::Error) -> Self {
        Verdict {
            pass: false,
            detail: format!("error: {e}"),
        }
    }
}

/// Invariants collected after every step of a run.
struct Stats {
    max_speed: Vec<f64>,
    mass_drift: f64,
    min_h: f64,
    min_a: f64,
    max_a: f64,
    nonzero_fixed: usize,
}

struct Tracked {
    sim: Simulation,
    seconds: f64,
    stats: Stats,
}

fn run_tracked(params: Params, spec: ScenarioSpec) -> Result<Tracked> {
    let clock = Instant::now();
    let mut sim = Simulation::new(params, spec)?;
    let mass0 = total_mass(&sim.state.h, &sim.mesh);
    let mut prev: State = sim.state.clone();
    let mut st = Stats {
        max_speed: vec![sim.state.v.max_speed()],
        mass_drift: 0.0,
        min_h: sim.state.h.min(),
        min_a: sim.state.a.min(),
        max_a: sim.state.a.max(),
        nonzero_fixed: 0,
    };
    sim.run_to_end(|s| {
        // rows held fixed by the step that produced this state
        let params = s.spec.effective_params(&s.params);
        let disc = Discretization::new(&MomentumProblem {
            mesh: &s.mesh,
            v_prev: &prev.v,
            h: &prev.h,
            a: &prev.a,
            forcing: ForcingInputs::from_spec(&s.spec),
            dt: s.spec.dt,
            params: &params,
        })?;
        st.nonzero_fixed += disc
            .fixed
            .iter()
            .zip(&s.state.v.data)
            .filter(|(f, v)| **f && **v != [0.0, 0.0])
            .count();
        st.max_speed.push(s.state.v.max_speed());
        st.mass_drift = st
            .mass_drift
            .max((total_mass(&s.state.h, &s.mesh) - mass0).abs() / mass0);
        st.min_h = st.min_h.min(s.state.h.min());
        st.min_a = st.min_a.min(s.state.a.min());
        st.max_a = st.max_a.max(s.state.a.max());
        prev = s.state.clone();
        Ok(())
    })?;
    let seconds = clock.elapsed().as_secs_f64();
    eprintln!("  {} done in {:.1} s", sim.spec.name, seconds);
    Ok(Tracked {
        sim,
        seconds,
        stats: st,
    })
}

fn run_preset(name: &str) -> Result<Tracked> {
    let (params, spec) = preset(name)?;
    run_tracked(params, spec)
}

fn step_of(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

fn criterion_1(ex2: &Tracked) -> Verdict {
    let dt = ex2.sim.spec.dt;
    let day2 = ex2.stats.max_speed[step_of(2.0 * DAY, dt)];
    let window = &ex2.stats.max_speed[step_of(2.0 * DAY, dt)..=step_of(6.0 * DAY, dt)];
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.iter().copied().fold(0.0, f64::max);
    let ke: Vec<f64> = ex2.sim.rows.iter().map(|r| r.ke_inst).collect();
    let increases = (2..ke.len())
        .filter(|&k| ke[k] > ke[k - 1] * (1.0 + KE_INCREASE_TOL))
        .count();
    let in_band = lo >= EX2_BAND.0 && hi <= EX2_BAND.1;
    let pass = day2 <= EX2_DAY2_MAX && in_band && increases == 0 && ex2.seconds <= EX2_RUNTIME;
    Verdict {
        pass,
        detail: format!(
            "max|v| at day 2 = {day2:.4e} (<= {EX2_DAY2_MAX:e}); days 2-6 range [{lo:.4e}, {hi:.4e}] vs band [{:e}, {:e}]{}; KE increases after step 1: {increases}; runtime {:.0} s",
            EX2_BAND.0,
            EX2_BAND.1,
            if in_band { "" } else { " OUT OF BAND" },
            ex2.seconds
        ),
    }
}

fn snapshot_of(sim: &Simulation) -> Result<Snapshot> {
    Ok(Snapshot {
        t: sim.state.t,
        mesh: sim.mesh,
        v: sim.state.v.clone(),
        h: sim.state.h.clone(),
        a: sim.state.a.clone(),
        scaled_speed: scaled_speed(&sim.state, &sim.mesh)?,
    })
}

fn criterion_2(lfi: &Tracked, vp: &Tracked) -> Result<Verdict> {
    let ml = snapshot_metrics(&snapshot_of(&lfi.sim)?, lfi.sim.params.h_crit)?;
    let mv = snapshot_metrics(&snapshot_of(&vp.sim)?, vp.sim.params.h_crit)?;
    let mesh = &vp.sim.mesh;
    let vp_edge_a = (0..mesh.ny)
        .map(|j| vp.sim.state.a.data[mesh.cell(0, j)])
        .fold(f64::INFINITY, f64::min);
    let polynya = ml.min_concentration_left_half < POLYNYA_MAX_A;
    let vp_drops = vp_edge_a < 1.0;
    let (strip, contrast) = match ml.grounded_strip_speed {
        Some(s) => (
            s <= GROUNDED_STRIP_MAX,
            mv.mean_eastward_velocity > VP_CONTRAST * s,
        ),
        None => (false, false),
    };
    let strip_text = match ml.grounded_strip_speed {
        Some(s) => format!("{s:.4e}"),
        None => "undefined (no cell with x < 64 km has h > h_crit)".into(),
    };
    Ok(Verdict {
        pass: strip && contrast && polynya && vp_drops,
        detail: format!(
            "ex1_lfi grounded-strip speed {strip_text} (<= {GROUNDED_STRIP_MAX:e}); ex1_vp mean eastward {:.4e} (> {VP_CONTRAST} x strip: {contrast}); ex1_lfi left-strip speed {:.4e} vs ex1_vp {:.4e}; ex1_lfi min A left half {:.4} (< {POLYNYA_MAX_A}); ex1_vp min A left column {:.4} (< 1: {vp_drops})",
            mv.mean_eastward_velocity,
            ml.left_strip_speed,
            mv.left_strip_speed,
            ml.min_concentration_left_half,
            vp_edge_a
        ),
    })
}

fn criterion_3(ex3: &Tracked) -> Result<Verdict> {
    let dt = ex3.sim.spec.dt;
    let rows = &ex3.sim.rows;
    let p5 = rows[step_of(5.0 * DAY, dt)].p99_scaled_speed;
    let p27 = rows[step_of(27.0 * DAY, dt)].p99_scaled_speed;
    // where the percentile comes from: compact ice versus the ice edge
    let s = scaled_speed(&ex3.sim.state, &ex3.sim.mesh)?;
    let a = &ex3.sim.state.a.data;
    let compact: Vec<f64> = s
        .data
        .iter()
        .zip(a)
        .filter(|(_, &a)| a > 0.99)
        .map(|(&x, _)| x)
        .collect();
    let pack = a.iter().filter(|&&a| a > 0.5).count();
    let fast = s
        .data
        .iter()
        .zip(a)
        .filter(|(&x, &a)| a > 0.5 && x > 1e-2)
        .count();
    Ok(Verdict {
        pass: p27 <= EX3_P99_MAX && p27 <= p5 && ex3.seconds <= EX3_RUNTIME,
        detail: format!(
            "p99 A|v| (A > 0.5) day 27 = {p27:.4e} (<= {EX3_P99_MAX:e}), day 5 = {p5:.4e} (day 27 <= day 5: {}); {fast} of {pack} cells with A > 0.5 move faster than 1e-2 m/s; p99 over A > 0.99 = {:.4e}; runtime {:.0} s",
            p27 <= p5,
            percentile(&compact, 99.0),
            ex3.seconds
        ),
    })
}

fn criterion_4() -> Result<Verdict> {
    let params = Params {
        p_star: 0.0,
        k2: 0.0,
        ..Params::default()
    };
    let (_, mut spec) = preset("ex1_vp")?;
    spec.name = "free_drift".into();
    spec.cells_per_side = 16;
    spec.domain_length = 128e3;
    spec.duration = 48.0 * spec.dt;
    spec.wind = [20.0, 0.0];
    spec.ocean_velocity = [0.0, 0.0];
    spec.forces.coriolis = false;
    spec.forces.surface_tilt = false;
    spec.forces.basal = false;
    spec.initial_condition = InitialCondition::Uniform {
        h: 1.0,
        concentration: 1.0,
        velocity: [0.0, 0.0],
    };
    let mut sim = Simulation::new(params.clone(), spec)?;
    let mut before = sim.state.clone();
    while !sim.finished() {
        before = sim.state.clone();
        sim.advance()?;
    }
    let mesh = sim.mesh;
    let (mut lo, mut hi, mut change) = (f64::INFINITY, 0.0f64, 0.0f64);
    for j in 1..mesh.ny {
        for i in 1..mesh.nx {
            let n = mesh.node(i, j);
            let s = sim.state.v.speed(n);
            lo = lo.min(s);
            hi = hi.max(s);
            change = change.max((s - before.v.speed(n)).abs());
        }
    }
    let exact = free_drift_speed(20.0, &params);
    let rel = |x: f64| (x - FREE_DRIFT_QUOTED).abs() / FREE_DRIFT_QUOTED;
    Ok(Verdict {
        pass: rel(lo) <= FREE_DRIFT_TOL && rel(hi) <= FREE_DRIFT_TOL,
        detail: format!(
            "interior speed in [{lo:.8}, {hi:.8}] m/s vs {FREE_DRIFT_QUOTED} +/- 0.1% (closed form {exact:.8}); last-step change {change:.2e}"
        ),
    })
}

fn criterion_5() -> Result<Verdict> {
    let clock = Instant::now();
    let params = Params::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let points = random_state_points(&mut rng, 1000);
    let strong = strong_ellipticity_report(&points, STRONG_SAMPLES, 0, &params)?;
    let normal = normal_ellipticity_report(&points, NORMAL_SAMPLES, 0, &params)?;
    let seconds = clock.elapsed().as_secs_f64();
    Ok(Verdict {
        pass: strong.violations == 0
            && strong.max_symmetry_residual <= SYMMETRY_MAX
            && normal.strict_violations == 0
            && normal.negative_violations == 0
            && seconds <= ELLIPTICITY_RUNTIME,
        detail: format!(
            "{} strong samples, {} below bound (min quotient/bound {:.4}); symmetry residual {:.2e}; {} normal samples ({} strict), {} violations; runtime {:.2} s",
            strong.samples,
            strong.violations,
            strong.min_ratio,
            strong.max_symmetry_residual,
            normal.samples,
            normal.strict_samples,
            normal.violations(),
            seconds
        ),
    })
}

fn criterion_6(runs: &[&Tracked]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in runs {
        let s = &t.stats;
        let ok = s.mass_drift <= MASS_DRIFT_MAX
            && s.min_h >= 0.0
            && s.min_a >= 0.0
            && s.max_a <= 1.0
            && s.nonzero_fixed == 0;
        pass &= ok;
        parts.push(format!(
            "{}: mass drift {:.1e}, min h {:.3e}, A in [{:.3e}, {}], nonzero fixed rows {}",
            t.sim.spec.name, s.mass_drift, s.min_h, s.min_a, s.max_a, s.nonzero_fixed
        ));
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_7() -> Verdict {
    let mut oracle: f64 = 0.0;
    let mut fd: f64 = 0.0;
    for seed in 0..20 {
        for form in [DeltaForm::Triangle, DeltaForm::Deviatoric] {
            let case = common::random_case(seed, form);
            for (k, scale) in [1e-7, 1e-4, 0.1].into_iter().enumerate() {
                let v = common::random_velocity(&case.mesh, 100 + seed * 3 + k as u64, scale);
                oracle = oracle.max(common::residual_mismatch(&case, &v));
                let dir = common::random_velocity(&case.mesh, 900 + seed, 1.0);
                fd = fd.max(common::jacobian_mismatch(
                    &case,
                    &v,
                    &dir,
                    Linearization::Newton,
                ));
            }
        }
    }
    Verdict {
        pass: oracle <= ORACLE_MAX && fd <= FD_MAX,
        detail: format!(
            "120 random 8x8 states: residual vs element oracle {oracle:.2e} (<= {ORACLE_MAX:e}); Newton matrix vs central differences {fd:.2e} (<= {FD_MAX:e})"
        ),
    }
}

fn supplementary_thick_ice() -> Result<String> {
    // same wind and grounding with ice thick enough to ground near the coast
    let (params, mut spec) = preset("ex1_lfi")?;
    spec.initial_condition = InitialCondition::Sinusoidal {
        h_mean: 3.5,
        h_amplitude: 1.0,
        concentration: 1.0,
        velocity_amplitude: 0.0,
        velocity_mode: Default::default(),
    };
    let mut sim = Simulation::new(params.clone(), spec)?;
    sim.run_to_end(|_| Ok(()))?;
    let m = snapshot_metrics(&snapshot_of(&sim)?, params.h_crit)?;
    Ok(format!(
        "ex1_lfi with h_mean = 3.5 m: grounded-strip speed {} m/s, max |v| {:.3e} m/s",
        m.grounded_strip_speed
            .map_or("undefined".into(), |s| format!("{s:.3e}")),
        m.max_speed
    ))
}

fn main() -> ExitCode {
    eprintln!("acceptance: running ex1_lfi, ex1_vp, ex2_unforced, ex3_constant_wind (release build recommended)");
    let lfi = run_preset("ex1_lfi");
    let vp = run_preset("ex1_vp");
    let ex2 = run_preset("ex2_unforced");
    let ex3 = run_preset("ex3_constant_wind");

    let verdicts = [
        match &ex2 {
            Ok(t) => criterion_1(t),
            Err(e) => Verdict::error(clone_error(e)),
        },
        match (&lfi, &vp) {
            (Ok(a), Ok(b)) => criterion_2(a, b).unwrap_or_else(Verdict::error),
            (Err(e), _) | (_, Err(e)) => Verdict::error(clone_error(e)),
        },
        match &ex3 {
            Ok(t) => criterion_3(t).unwrap_or_else(Verdict::error),
            Err(e) => Verdict::error(clone_error(e)),
        },
        criterion_4().unwrap_or_else(Verdict::error),
        criterion_5().unwrap_or_else(Verdict::error),
        match (&lfi, &vp, &ex2, &ex3) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => criterion_6(&[a, b, c, d]),
            _ => Verdict {
                pass: false,
                detail: "a scenario run failed".into(),
            },
        },
        criterion_7(),
    ];

    for (n, v) in verdicts.iter().enumerate() {
        println!(
            "criterion {}: {} | {}",
            n + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    match supplementary_thick_ice() {
        Ok(s) => println!("note: {s}"),
        Err(e) => println!("note: thick-ice run failed: {e}"),
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "acceptance: {} of {} criteria pass",
        verdicts.len() - failed,
        verdicts.len()
    );
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn clone_error(e: &landfast::Error) -> landfast::Error {
    landfast::Error::Validation(e.to_string())
}
