//! Physical constants, scenario descriptions, config files and presets.
//!
//! A config file is a TOML document with two optional tables, `[params]` and
//! `[scenario]` (the latter with nested `forces`, `initial_condition` and
//! `solver` tables). Every key is optional; missing keys take the defaults of
//! [`Params::default`] and [`ScenarioSpec::default`]. Key names are the field
//! names of the structs below.
//!
//! ```toml
//! [params]
//! h_crit = 2.5
//! k_t = 0.15
//!
//! [scenario]
//! name = "ex1_lfi"
//! duration = 172800.0
//! wind = [20.0, 0.0]
//!
//! [scenario.forces]
//! coriolis = false
//!
//! [scenario.initial_condition]
//! kind = "sinusoidal"
//! h_amplitude = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentum::SolverConfig;

const DAY: f64 = 86_400.0;

/// Which strain-rate invariant enters the regularized `Δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaForm {
    /// `d_I² + e⁻²(d_II² + 4 d_III²)`, the quadratic form of the 𝕊-matrix.
    #[default]
    Triangle,
    /// `½ ε̇′ : ε̇′`, half the squared Frobenius norm of the deviator.
    Deviatoric,
}

/// Model constants. All quantities in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Ellipse aspect ratio of the yield curve.
    pub e: f64,
    /// Isotropic tensile strength parameter, in [0, 1].
    pub k_t: f64,
    /// Critical mean thickness for grounding (m).
    pub h_crit: f64,
    /// Maximum basal stress parameter (N m⁻³).
    pub k2: f64,
    /// Basal stress concentration parameter.
    pub alpha_b: f64,
    /// Basal stress velocity parameter (m s⁻¹).
    pub v0: f64,
    /// Ice density (kg m⁻³).
    pub rho: f64,
    /// Air density (kg m⁻³).
    pub rho_a: f64,
    /// Water density (kg m⁻³).
    pub rho_o: f64,
    /// Air drag coefficient.
    pub c_a: f64,
    /// Water drag coefficient.
    pub c_o: f64,
    /// Coriolis parameter (s⁻¹).
    pub c_cor: f64,
    /// Ice strength parameter (N m⁻²).
    pub p_star: f64,
    /// Ice concentration parameter.
    pub c_star: f64,
    /// Strain-rate regularization (s⁻¹).
    pub delta_min: f64,
    /// Thickness diffusivity (m² s⁻¹).
    pub d_h: f64,
    /// Concentration diffusivity (m² s⁻¹).
    pub d_a: f64,
    /// Thickness floor used for the nodal mass (m).
    pub h_min: f64,
    /// Nodes whose averaged concentration falls below this are held at rest.
    pub a_min: f64,
    pub delta_form: DeltaForm,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            e: 2.0,
            k_t: 0.15,
            h_crit: 2.0,
            k2: 5.0,
            alpha_b: 20.0,
            v0: 5e-8,
            rho: 900.0,
            rho_a: 1.3,
            rho_o: 1026.0,
            c_a: 1.2e-3,
            c_o: 5.5e-3,
            c_cor: 1.46e-4,
            p_star: 27.5e3,
            c_star: 20.0,
            delta_min: 2e-9,
            d_h: 0.0,
            d_a: 0.0,
            h_min: 1e-3,
            a_min: 0.01,
            delta_form: DeltaForm::Triangle,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("e", self.e),
            ("k_t", self.k_t),
            ("h_crit", self.h_crit),
            ("k2", self.k2),
            ("alpha_b", self.alpha_b),
            ("v0", self.v0),
            ("rho", self.rho),
            ("rho_a", self.rho_a),
            ("rho_o", self.rho_o),
            ("c_a", self.c_a),
            ("c_o", self.c_o),
            ("c_cor", self.c_cor),
            ("p_star", self.p_star),
            ("c_star", self.c_star),
            ("delta_min", self.delta_min),
            ("d_h", self.d_h),
            ("d_a", self.d_a),
            ("h_min", self.h_min),
            ("a_min", self.a_min),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::Validation(format!("{name} is not finite")));
            }
        }
        if !(0.0..=1.0).contains(&self.k_t) {
            return Err(Error::Validation("k_t out of [0,1]".into()));
        }
        let positive = [
            ("e", self.e),
            ("alpha_b", self.alpha_b),
            ("v0", self.v0),
            ("rho", self.rho),
            ("rho_a", self.rho_a),
            ("rho_o", self.rho_o),
            ("c_star", self.c_star),
            ("delta_min", self.delta_min),
            ("h_min", self.h_min),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(Error::Validation(format!("{name} must be > 0")));
            }
        }
        // p_star = 0 is the free-drift configuration
        let nonnegative = [
            ("h_crit", self.h_crit),
            ("k2", self.k2),
            ("c_a", self.c_a),
            ("c_o", self.c_o),
            ("c_cor", self.c_cor),
            ("p_star", self.p_star),
            ("d_h", self.d_h),
            ("d_a", self.d_a),
        ];
        for (name, value) in nonnegative {
            if value < 0.0 {
                return Err(Error::Validation(format!("{name} must be >= 0")));
            }
        }
        if !(0.0..1.0).contains(&self.a_min) {
            return Err(Error::Validation("a_min out of [0,1)".into()));
        }
        Ok(())
    }
}

/// Per-term switches for the momentum forcing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceToggles {
    pub ocean_drag: bool,
    pub coriolis: bool,
    pub surface_tilt: bool,
    pub basal: bool,
    /// When off, the rheology runs with `k_t = 0`.
    pub tensile: bool,
}

impl Default for ForceToggles {
    fn default() -> Self {
        Self {
            ocean_drag: true,
            coriolis: false,
            surface_tilt: false,
            basal: true,
            tensile: true,
        }
    }
}

/// Direction in which a scalar initial velocity profile is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMode {
    #[default]
    Both,
    XOnly,
}

/// Analytic initial conditions.
///
/// `Sinusoidal` is the family used by the experiments:
/// `h = h_mean − h_amplitude·sin(πx/L)`, `A = concentration`,
/// `v = velocity_amplitude·sin(πx/L)·sin(πy/L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Sinusoidal {
        #[serde(default = "default_h_mean")]
        h_mean: f64,
        #[serde(default = "default_h_amplitude")]
        h_amplitude: f64,
        #[serde(default = "default_concentration")]
        concentration: f64,
        #[serde(default)]
        velocity_amplitude: f64,
        #[serde(default)]
        velocity_mode: VelocityMode,
    },
    Uniform {
        h: f64,
        #[serde(default = "default_concentration")]
        concentration: f64,
        #[serde(default)]
        velocity: [f64; 2],
    },
}

fn default_h_mean() -> f64 {
    2.5
}
fn default_h_amplitude() -> f64 {
    1.0
}
fn default_concentration() -> f64 {
    1.0
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Sinusoidal {
            h_mean: 2.5,
            h_amplitude: 1.0,
            concentration: 1.0,
            velocity_amplitude: 0.0,
            velocity_mode: VelocityMode::Both,
        }
    }
}

/// One simulation setup: domain, time stepping, forcing and initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Side length of the square domain (m).
    pub domain_length: f64,
    pub cells_per_side: usize,
    /// Time step (s).
    pub dt: f64,
    /// Simulated time span (s).
    pub duration: f64,
    /// Constant wind velocity (m s⁻¹).
    pub wind: [f64; 2],
    /// Constant ocean velocity (m s⁻¹).
    pub ocean_velocity: [f64; 2],
    pub forces: ForceToggles,
    pub initial_condition: InitialCondition,
    /// Interval between VTK snapshots (s).
    pub snapshot_interval: f64,
    /// Concentration below which a cell counts as open water.
    pub polynya_threshold: f64,
    pub solver: SolverConfig,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            domain_length: 512e3,
            cells_per_side: 64,
            dt: 1800.0,
            duration: 2.0 * DAY,
            wind: [20.0, 0.0],
            ocean_velocity: [0.0, 0.0],
            forces: ForceToggles::default(),
            initial_condition: InitialCondition::default(),
            snapshot_interval: 0.5 * DAY,
            polynya_threshold: 0.2,
            solver: SolverConfig::default(),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Validation("dt must be > 0".into()));
        }
        if !self.duration.is_finite() || self.duration < self.dt {
            return Err(Error::Validation("duration shorter than one step".into()));
        }
        if self.cells_per_side < 2 {
            return Err(Error::Validation("cells_per_side must be >= 2".into()));
        }
        if !(self.domain_length.is_finite() && self.domain_length > 0.0) {
            return Err(Error::Validation("domain_length must be > 0".into()));
        }
        if !(self.snapshot_interval.is_finite() && self.snapshot_interval > 0.0) {
            return Err(Error::Validation("snapshot_interval must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.polynya_threshold) {
            return Err(Error::Validation("polynya_threshold out of [0,1]".into()));
        }
        if self
            .wind
            .iter()
            .chain(&self.ocean_velocity)
            .any(|c| !c.is_finite())
        {
            return Err(Error::Validation(
                "forcing velocities must be finite".into(),
            ));
        }
        match &self.initial_condition {
            InitialCondition::Sinusoidal {
                h_mean,
                h_amplitude,
                concentration,
                velocity_amplitude,
                ..
            } => {
                if h_mean - h_amplitude.abs() < 0.0 {
                    return Err(Error::Validation(
                        "initial thickness would be negative".into(),
                    ));
                }
                check_concentration(*concentration)?;
                if !velocity_amplitude.is_finite() {
                    return Err(Error::Validation("velocity_amplitude not finite".into()));
                }
            }
            InitialCondition::Uniform {
                h,
                concentration,
                velocity,
            } => {
                if !(h.is_finite() && *h >= 0.0) {
                    return Err(Error::Validation("initial thickness must be >= 0".into()));
                }
                check_concentration(*concentration)?;
                if velocity.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Validation("initial velocity not finite".into()));
                }
            }
        }
        self.solver.validate()
    }

    /// Number of time steps covering `duration`.
    pub fn step_count(&self) -> usize {
        // guard against 2*86400/1800 landing a hair above an integer
        let ratio = self.duration / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// Params as seen by the rheology once the tensile toggle is applied.
    pub fn effective_params(&self, params: &Params) -> Params {
        let mut p = params.clone();
        if !self.forces.tensile {
            p.k_t = 0.0;
        }
        p
    }
}

fn check_concentration(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::Validation(
            "initial concentration out of [0,1]".into(),
        ))
    }
}

/// On-disk layout of a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub params: Params,
    pub scenario: ScenarioSpec,
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<(Params, ScenarioSpec)> {
    let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.params.validate()?;
    cfg.scenario.validate()?;
    Ok((cfg.params, cfg.scenario))
}

pub fn load_config(path: &Path) -> Result<(Params, ScenarioSpec)> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn to_toml(params: &Params, scenario: &ScenarioSpec) -> Result<String> {
    let cfg = ConfigFile {
        params: params.clone(),
        scenario: scenario.clone(),
    };
    toml::to_string(&cfg).map_err(|e| Error::Parse(e.to_string()))
}

pub const PRESET_NAMES: [&str; 4] = ["ex1_vp", "ex1_lfi", "ex2_unforced", "ex3_constant_wind"];

/// The experiment setups. All run on 64×64 cells of 8 km with dt = 1800 s.
pub fn preset(name: &str) -> Result<(Params, ScenarioSpec)> {
    let mut params = Params {
        k_t: 0.15,
        h_crit: 2.5,
        k2: 5.0,
        alpha_b: 20.0,
        ..Params::default()
    };
    let mut spec = ScenarioSpec {
        name: name.to_string(),
        domain_length: 512e3,
        cells_per_side: 64,
        dt: 1800.0,
        duration: 2.0 * DAY,
        wind: [20.0, 0.0],
        ocean_velocity: [0.0, 0.0],
        forces: ForceToggles {
            ocean_drag: true,
            coriolis: false,
            surface_tilt: false,
            basal: true,
            tensile: true,
        },
        initial_condition: InitialCondition::Sinusoidal {
            h_mean: 2.5,
            h_amplitude: 1.0,
            concentration: 1.0,
            velocity_amplitude: 0.0,
            velocity_mode: VelocityMode::Both,
        },
        ..ScenarioSpec::default()
    };
    match name {
        "ex1_lfi" => {}
        "ex1_vp" => {
            params.k_t = 0.0;
            params.k2 = 0.0;
        }
        "ex2_unforced" => {
            spec.duration = 22.0 * DAY;
            spec.wind = [0.0, 0.0];
            spec.forces.ocean_drag = false;
            spec.initial_condition = InitialCondition::Sinusoidal {
                h_mean: 2.5,
                h_amplitude: 0.5,
                concentration: 1.0,
                velocity_amplitude: 0.05,
                velocity_mode: VelocityMode::Both,
            };
        }
        "ex3_constant_wind" => {
            spec.duration = 27.0 * DAY;
            spec.initial_condition = InitialCondition::Sinusoidal {
                h_mean: 2.5,
                h_amplitude: 0.5,
                concentration: 1.0,
                velocity_amplitude: 0.0,
                velocity_mode: VelocityMode::Both,
            };
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    }
    Ok((params, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_table_defaults() {
        let (p, s) = parse_config("").unwrap();
        assert_eq!(p.e, 2.0);
        assert_eq!(p.p_star, 27500.0);
        assert_eq!(p.h_crit, 2.0);
        assert_eq!(p.delta_min, 2e-9);
        assert_eq!(p, Params::default());
        assert_eq!(s, ScenarioSpec::default());
    }

    #[test]
    fn negative_tensile_parameter_is_rejected() {
        let err = parse_config("[params]\nk_t = -0.1\n").unwrap_err();
        assert!(err.to_string().contains("k_t out of [0,1]"), "{err}");
    }

    #[test]
    fn h_crit_override() {
        let (p, _) = parse_config("[params]\nh_crit = 2.5\n").unwrap();
        assert_eq!(p.h_crit, 2.5);
    }

    #[test]
    fn malformed_and_unknown_keys() {
        assert!(matches!(parse_config("[params\n"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_config("[params]\nfoo = 1\n"),
            Err(Error::Parse(_))
        ));
        let err = parse_config("[scenario.initial_condition]\nkind = \"gaussian\"\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn scenario_validation() {
        let err = parse_config("[scenario]\ndt = 1800.0\nduration = 100.0\n").unwrap_err();
        assert!(err.to_string().contains("duration shorter than one step"));
        assert!(parse_config("[scenario]\ncells_per_side = 1\n").is_err());
        assert!(parse_config("[scenario]\ndt = 0.0\n").is_err());
        assert!(parse_config("[scenario]\ndomain_length = -1.0\n").is_err());
    }

    #[test]
    fn presets_match_experiments() {
        let (p, s) = preset("ex1_lfi").unwrap();
        assert_eq!((p.k_t, p.h_crit, p.k2, p.alpha_b), (0.15, 2.5, 5.0, 20.0));
        assert_eq!(s.wind, [20.0, 0.0]);
        assert!(!s.forces.coriolis && !s.forces.surface_tilt);
        assert_eq!(s.step_count(), 96);
        assert_eq!(s.cells_per_side, 64);
        assert_eq!(s.domain_length / s.cells_per_side as f64, 8000.0);
        assert_eq!(
            s.initial_condition,
            InitialCondition::Sinusoidal {
                h_mean: 2.5,
                h_amplitude: 1.0,
                concentration: 1.0,
                velocity_amplitude: 0.0,
                velocity_mode: VelocityMode::Both
            }
        );

        let (pv, sv) = preset("ex1_vp").unwrap();
        assert_eq!((pv.k_t, pv.k2), (0.0, 0.0));
        assert_eq!(sv.wind, s.wind);
        assert_eq!(sv.forces, s.forces);
        assert_eq!(sv.initial_condition, s.initial_condition);

        let (_, s2) = preset("ex2_unforced").unwrap();
        assert_eq!(s2.wind, [0.0, 0.0]);
        assert!(!s2.forces.ocean_drag && !s2.forces.coriolis && !s2.forces.surface_tilt);
        assert_eq!(s2.step_count(), 1056);
        match s2.initial_condition {
            InitialCondition::Sinusoidal {
                velocity_amplitude,
                h_amplitude,
                ..
            } => {
                assert_eq!(velocity_amplitude, 0.05);
                assert_eq!(h_amplitude, 0.5);
            }
            _ => panic!("wrong initial condition"),
        }

        let (_, s3) = preset("ex3_constant_wind").unwrap();
        assert_eq!(s3.step_count(), 27 * 48);

        assert!(matches!(preset("ex4"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn presets_are_pure_and_valid() {
        for name in PRESET_NAMES {
            let a = preset(name).unwrap();
            let b = preset(name).unwrap();
            assert_eq!(a, b);
            a.0.validate().unwrap();
            a.1.validate().unwrap();
        }
    }

    #[test]
    fn tensile_toggle_zeroes_k_t() {
        let (p, mut s) = preset("ex1_lfi").unwrap();
        assert_eq!(s.effective_params(&p).k_t, 0.15);
        s.forces.tensile = false;
        assert_eq!(s.effective_params(&p).k_t, 0.0);
    }
}
