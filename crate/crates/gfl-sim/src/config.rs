//! Run configuration: strict flat-key JSON with unit-suffixed key names,
//! converted to SI once at parse time.
//!
//! Config files are JSON objects whose keys are flat dotted names, e.g.
//! `{"system.L_mH": 2.0, "gains.kd_ohm": 1.2, ...}`. Unknown keys are
//! rejected so typos cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::controller::{ClampConfig, SaturationMode};
use crate::design::DesignMargins;
use crate::error::{Error, Result};
use crate::load::LoadModel;
use crate::params::{validate_params, ControlGains, DesignConstraints, SystemParams};
use crate::sim::DcMode;

/// Ramp-rate grid for feasibility sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityGrid {
    /// Lowest ramp rate (W/s).
    pub rho_min: f64,
    /// Highest ramp rate (W/s).
    pub rho_max: f64,
    pub points: usize,
}

impl FeasibilityGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.rho_min];
        }
        let step = (self.rho_max - self.rho_min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| self.rho_min + k as f64 * step)
            .collect()
    }
}

/// Fully-resolved run configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub gains: ControlGains,
    pub constraints: DesignConstraints,
    pub load: LoadModel,
    pub margins: DesignMargins,
    pub clamp: ClampConfig,
    pub saturation: SaturationMode,
    pub dc_mode: DcMode,
    pub feasibility: FeasibilityGrid,
    /// Multiplier on `mu |ln mu|` defining the transient window used by the
    /// trace statistics.
    pub window_multiplier: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Simulated span (s).
    pub horizon: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Canonical flat-key JSON rendering (sorted keys); the scenario hash in
    /// metrics reports is computed over this string.
    pub fn canonical_json(&self) -> String {
        let mut map: BTreeMap<String, Value> = BTreeMap::new();
        let f = |v: f64| Value::from(v);
        map.insert("system.L_mH".into(), f(self.system.l * 1e3));
        map.insert("system.R_ohm".into(), f(self.system.r));
        map.insert("system.Vg_V".into(), f(self.system.v_g));
        map.insert(
            "system.fgrid_Hz".into(),
            f(self.system.omega_g / (2.0 * std::f64::consts::PI)),
        );
        map.insert("system.Vdc_nom_V".into(), f(self.system.v_dc_nom));
        map.insert("system.Vdc_min_V".into(), f(self.system.v_dc_min));
        map.insert("system.Cdc_mF".into(), f(self.system.c_dc * 1e3));
        map.insert("system.tau_p_ms".into(), f(self.system.tau_p * 1e3));
        map.insert("system.kappa".into(), f(self.system.kappa));
        map.insert("system.m_max".into(), f(self.system.m_max));
        map.insert("system.fsw_kHz".into(), f(self.system.f_sw * 1e-3));
        map.insert("gains.kd_ohm".into(), f(self.gains.k_d));
        map.insert("gains.kq_ohm".into(), f(self.gains.k_q));
        map.insert("gains.Kpp_mA_per_W".into(), f(self.gains.k_pp * 1e3));
        map.insert("gains.Pstar_kW".into(), f(self.gains.p_star * 1e-3));
        map.insert("constraints.alpha".into(), f(self.constraints.alpha));
        map.insert("constraints.e_max_A".into(), f(self.constraints.e_max));
        map.insert(
            "constraints.delta_i_max_A".into(),
            f(self.constraints.delta_i_max),
        );
        map.insert("constraints.n".into(), f(self.constraints.n));
        map.insert("constraints.DeltaP_kW".into(), f(self.constraints.delta_p * 1e-3));
        map.insert(
            "constraints.rhoP_MW_per_s".into(),
            f(self.constraints.rho_p * 1e-6),
        );
        map.insert("load.Pbase_kW".into(), f(self.load.p_base * 1e-3));
        if let Some(end) = self.load.p_base_end {
            map.insert("load.Pbase_end_kW".into(), f(end * 1e-3));
        }
        map.insert(
            "load.rho_base_kW_per_s".into(),
            f(self.load.rho_b * 1e-3),
        );
        map.insert("load.lambda_per_s".into(), f(self.load.lambda));
        map.insert("load.bmax_kW".into(), f(self.load.b_max * 1e-3));
        map.insert(
            "load.tau_filter_ms".into(),
            f(self.load.tau_filter * 1e3),
        );
        map.insert("load.tau_rise_ms".into(), f(self.load.tau_rise * 1e3));
        map.insert(
            "load.pulse_width_ms".into(),
            f(self.load.pulse_width * 1e3),
        );
        map.insert("load.Mw_kW".into(), f(self.load.m_w * 1e-3));
        map.insert("load.z0_kW".into(), f(self.load.z0 * 1e-3));
        map.insert("design.kd_fraction".into(), f(self.margins.kd_fraction));
        map.insert("design.Kpp_fraction".into(), f(self.margins.kpp_fraction));
        map.insert("clamp.enabled".into(), Value::from(self.clamp.enabled));
        map.insert(
            "clamp.id_star_max_A".into(),
            f(self.clamp.i_d_star_max),
        );
        map.insert(
            "clamp.anti_windup".into(),
            Value::from(self.clamp.anti_windup),
        );
        map.insert(
            "controller.saturation".into(),
            Value::from(match self.saturation {
                SaturationMode::Monitor => "monitor",
                SaturationMode::Clip => "clip",
            }),
        );
        match self.dc_mode {
            DcMode::Balanced => {
                map.insert("sim.dc_mode".into(), Value::from("balanced"));
            }
            DcMode::Constant { p_dc_in } => {
                map.insert("sim.dc_mode".into(), Value::from("constant"));
                map.insert("sim.Pdc_in_kW".into(), f(p_dc_in * 1e-3));
            }
        }
        map.insert(
            "feasibility.rho_min_MW_s".into(),
            f(self.feasibility.rho_min * 1e-6),
        );
        map.insert(
            "feasibility.rho_max_MW_s".into(),
            f(self.feasibility.rho_max * 1e-6),
        );
        map.insert(
            "feasibility.points".into(),
            Value::from(self.feasibility.points as u64),
        );
        map.insert(
            "analysis.window_multiplier".into(),
            f(self.window_multiplier),
        );
        map.insert("dt_us".into(), f(self.dt * 1e6));
        map.insert("horizon_s".into(), f(self.horizon));
        map.insert("seed".into(), Value::from(self.seed));
        map.insert(
            "output_dir".into(),
            Value::from(self.output_dir.to_string_lossy().into_owned()),
        );
        serde_json::to_string_pretty(&map).expect("canonical config serializes")
    }
}

struct KeyReader {
    map: serde_json::Map<String, Value>,
}

impl KeyReader {
    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::Config(format!("key {key} must be a number"))),
        }
    }

    fn require_number(&mut self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    fn boolean(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| Error::Config(format!("key {key} must be a boolean"))),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| Error::Config(format!("key {key} must be a string"))),
        }
    }

    fn integer(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Error::Config(format!("key {key} must be a non-negative integer"))),
        }
    }
}

/// Parses a config file. Every remaining (unrecognized) key is an error.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parses config text; see [`load_config`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
    let map = match value {
        Value::Object(map) => map,
        _ => return Err(Error::Config("config root must be a JSON object".into())),
    };
    let mut r = KeyReader { map };

    let system = SystemParams {
        l: r.require_number("system.L_mH")? * 1e-3,
        r: r.require_number("system.R_ohm")?,
        v_g: r.require_number("system.Vg_V")?,
        omega_g: 2.0 * std::f64::consts::PI * r.require_number("system.fgrid_Hz")?,
        v_dc_nom: r.require_number("system.Vdc_nom_V")?,
        v_dc_min: r.require_number("system.Vdc_min_V")?,
        c_dc: r.require_number("system.Cdc_mF")? * 1e-3,
        tau_p: r.require_number("system.tau_p_ms")? * 1e-3,
        kappa: r.require_number("system.kappa")?,
        m_max: r.require_number("system.m_max")?,
        f_sw: r.require_number("system.fsw_kHz")? * 1e3,
    };
    let gains = ControlGains {
        k_d: r.require_number("gains.kd_ohm")?,
        k_q: r.require_number("gains.kq_ohm")?,
        k_pp: r.require_number("gains.Kpp_mA_per_W")? * 1e-3,
        p_star: r.require_number("gains.Pstar_kW")? * 1e3,
    };
    let constraints = DesignConstraints {
        alpha: r.require_number("constraints.alpha")?,
        e_max: r.require_number("constraints.e_max_A")?,
        delta_i_max: r.require_number("constraints.delta_i_max_A")?,
        n: r.require_number("constraints.n")?,
        delta_p: r.number("constraints.DeltaP_kW")?.unwrap_or(20.0) * 1e3,
        rho_p: r.number("constraints.rhoP_MW_per_s")?.unwrap_or(2.0) * 1e6,
    };

    let b_max = r.number("load.bmax_kW")?.unwrap_or(10.0) * 1e3;
    let load = LoadModel {
        p_base: r.number("load.Pbase_kW")?.unwrap_or(10.0) * 1e3,
        p_base_end: r.number("load.Pbase_end_kW")?.map(|v| v * 1e3),
        rho_b: r.number("load.rho_base_kW_per_s")?.unwrap_or(0.0) * 1e3,
        lambda: r.number("load.lambda_per_s")?.unwrap_or(50.0),
        b_max,
        tau_filter: r.number("load.tau_filter_ms")?.unwrap_or(20.0) * 1e-3,
        tau_rise: r.number("load.tau_rise_ms")?.unwrap_or(5.0) * 1e-3,
        pulse_width: r.number("load.pulse_width_ms")?.unwrap_or(1.0) * 1e-3,
        m_w: r.number("load.Mw_kW")?.map_or(b_max, |v| v * 1e3),
        z0: r.number("load.z0_kW")?.unwrap_or(0.0) * 1e3,
        seed: 0, // overwritten below once the seed key is read
    };
    let margins = DesignMargins {
        kd_fraction: r.number("design.kd_fraction")?.unwrap_or(0.65),
        kpp_fraction: r.number("design.Kpp_fraction")?.unwrap_or(0.83),
    };
    let clamp = ClampConfig {
        enabled: r.boolean("clamp.enabled", false)?,
        i_d_star_max: r.number("clamp.id_star_max_A")?.unwrap_or(0.0),
        anti_windup: r.boolean("clamp.anti_windup", true)?,
    };
    let saturation = match r.string("controller.saturation")?.as_deref() {
        None | Some("monitor") => SaturationMode::Monitor,
        Some("clip") => SaturationMode::Clip,
        Some(other) => {
            return Err(Error::Config(format!(
                "controller.saturation must be \"monitor\" or \"clip\", got \"{other}\""
            )))
        }
    };
    let dc_mode = match r.string("sim.dc_mode")?.as_deref() {
        None | Some("balanced") => {
            // A stray Pdc_in under balanced mode would be ignored silently;
            // reject it instead.
            if r.map.contains_key("sim.Pdc_in_kW") {
                return Err(Error::Config(
                    "sim.Pdc_in_kW requires sim.dc_mode = \"constant\"".into(),
                ));
            }
            DcMode::Balanced
        }
        Some("constant") => DcMode::Constant {
            p_dc_in: r.require_number("sim.Pdc_in_kW")? * 1e3,
        },
        Some(other) => {
            return Err(Error::Config(format!(
                "sim.dc_mode must be \"balanced\" or \"constant\", got \"{other}\""
            )))
        }
    };
    let feasibility = FeasibilityGrid {
        rho_min: r.number("feasibility.rho_min_MW_s")?.unwrap_or(0.5) * 1e6,
        rho_max: r.number("feasibility.rho_max_MW_s")?.unwrap_or(25.0) * 1e6,
        points: r.integer("feasibility.points", 50)? as usize,
    };
    let window_multiplier = r.number("analysis.window_multiplier")?.unwrap_or(5.0);
    let dt = r.number("dt_us")?.unwrap_or(50.0) * 1e-6;
    let horizon = r.number("horizon_s")?.unwrap_or(10.0);
    let seed = r.integer("seed", 0)?;
    let output_dir = PathBuf::from(r.string("output_dir")?.unwrap_or_else(|| "out".into()));

    if let Some(key) = r.map.keys().next() {
        return Err(Error::Config(format!("unknown key \"{key}\"")));
    }
    if clamp.enabled && (clamp.i_d_star_max.is_nan() || clamp.i_d_star_max <= 0.0) {
        return Err(Error::Config(
            "clamp.id_star_max_A must be positive when the clamp is enabled".into(),
        ));
    }
    if feasibility.points == 0 || feasibility.rho_min > feasibility.rho_max {
        return Err(Error::Config("feasibility grid is empty".into()));
    }

    // Reject invariant violations at the gate.
    validate_params(system, gains, constraints)?;

    let mut load = load;
    load.seed = seed;
    Ok(RunConfig {
        system,
        gains,
        constraints,
        load,
        margins,
        clamp,
        saturation,
        dc_mode,
        feasibility,
        window_multiplier,
        dt,
        horizon,
        seed,
        output_dir,
    })
}
