//! Physical, control, and design-rule parameters plus the derived timescale
//! quantities every other module consumes.
//!
//! All values are SI internally. Config files use the customary scaled units
//! (mH, ms, mA/W, kHz) and are converted once at parse time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hardware constants of the inverter, its RL filter, and the DC link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Filter inductance (H).
    pub l: f64,
    /// Filter parasitic resistance (Ohm).
    pub r: f64,
    /// Grid voltage amplitude in the dq frame (V).
    pub v_g: f64,
    /// Grid angular frequency (rad/s).
    pub omega_g: f64,
    /// Nominal DC-link voltage (V).
    pub v_dc_nom: f64,
    /// Minimum admissible DC-link voltage (V).
    pub v_dc_min: f64,
    /// DC-link capacitance (F).
    pub c_dc: f64,
    /// Power-measurement filter time constant (s).
    pub tau_p: f64,
    /// Modulation scaling factor, set by the PWM scheme (dimensionless).
    pub kappa: f64,
    /// Linear modulation limit (dimensionless).
    pub m_max: f64,
    /// Switching frequency (Hz).
    pub f_sw: f64,
}

impl SystemParams {
    /// Switching angular frequency `2*pi*f_sw` (rad/s).
    pub fn omega_sw(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_sw
    }
}

/// Controller gains and the power setpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGains {
    /// d-axis tracking gain (Ohm).
    pub k_d: f64,
    /// q-axis tracking gain (Ohm).
    pub k_q: f64,
    /// Droop gain mapping power error to current reference (A/W).
    pub k_pp: f64,
    /// Power setpoint (W).
    pub p_star: f64,
}

impl ControlGains {
    /// `1 + 1.5 * V_g * K_pp`, the denominator shared by the droop
    /// characteristic, the effective time constant, and the gain bounds.
    pub fn droop_denominator(&self, params: &SystemParams) -> f64 {
        1.0 + 1.5 * params.v_g * self.k_pp
    }
}

/// Design-rule constants: timescale margin, tracking-error budget, and the
/// disturbance class the controller must tolerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    /// Required fast/slow timescale separation factor (dimensionless, >= 1).
    pub alpha: f64,
    /// Quasi-steady tracking-error limit under load ramps (A).
    pub e_max: f64,
    /// Worst-case current excursion, including the initial transient (A).
    pub delta_i_max: f64,
    /// Bandwidth divisor relating the inner loop to the switching
    /// frequency (dimensionless, in [5, 10]).
    pub n: f64,
    /// Load amplitude bound (W).
    pub delta_p: f64,
    /// Load ramp-rate bound (W/s).
    pub rho_p: f64,
}

/// Fast and slow time constants of the closed loop and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimescaleReport {
    /// Inner-loop time constant `L / (k_d + R)` (s).
    pub mu: f64,
    /// Effective power-loop time constant `tau_p / (1 + 1.5 V_g K_pp)` (s).
    pub tau_eff: f64,
    /// `tau_eff / mu` (dimensionless).
    pub ratio: f64,
    /// Whether `ratio >= alpha`. Exact comparison: alpha is a design margin,
    /// not a measurement.
    pub separation_ok: bool,
}

/// Parameter bundle that has passed [`validate_params`]. Constructing one is
/// the only way to assert the invariants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidatedParams {
    pub system: SystemParams,
    pub gains: ControlGains,
    pub constraints: DesignConstraints,
}

impl ValidatedParams {
    pub fn timescales(&self) -> TimescaleReport {
        derive_timescales(&self.system, &self.gains, &self.constraints)
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParam(msg.to_string()))
    }
}

fn require_positive(value: f64, name: &str) -> Result<()> {
    require(
        value.is_finite() && value > 0.0,
        &format!("{name} must be positive"),
    )
}

/// Checks every invariant and returns the bundle on success. The error names
/// the first violated invariant.
pub fn validate_params(
    system: SystemParams,
    gains: ControlGains,
    constraints: DesignConstraints,
) -> Result<ValidatedParams> {
    require_positive(system.l, "L")?;
    require_positive(system.r, "R")?;
    require_positive(system.v_g, "V_g")?;
    require_positive(system.omega_g, "omega_g")?;
    require_positive(system.v_dc_nom, "V_dc_nom")?;
    require_positive(system.v_dc_min, "V_dc_min")?;
    require_positive(system.c_dc, "C_dc")?;
    require_positive(system.tau_p, "tau_p")?;
    require_positive(system.f_sw, "f_sw")?;
    require(
        system.v_dc_min <= system.v_dc_nom,
        "V_dc_min exceeds nominal",
    )?;
    require(
        system.kappa > 0.0 && system.kappa <= 1.0,
        "kappa must lie in (0, 1]",
    )?;
    require(
        system.m_max > 0.0 && system.m_max <= 1.0,
        "m_max must lie in (0, 1]",
    )?;

    require_positive(gains.k_d, "k_d")?;
    require_positive(gains.k_q, "k_q")?;
    require_positive(gains.k_pp, "K_pp")?;
    require(gains.p_star.is_finite(), "P_star must be finite")?;

    require(
        constraints.alpha.is_finite() && constraints.alpha >= 1.0,
        "alpha must be >= 1",
    )?;
    require_positive(constraints.e_max, "e_max")?;
    require_positive(constraints.delta_i_max, "delta_i_max")?;
    require(
        constraints.e_max <= constraints.delta_i_max,
        "e_max exceeds delta_i_max",
    )?;
    require(
        constraints.n >= 5.0 && constraints.n <= 10.0,
        "n must lie in [5, 10]",
    )?;
    require(
        constraints.delta_p.is_finite() && constraints.delta_p >= 0.0,
        "Delta_P must be non-negative",
    )?;
    require(
        constraints.rho_p.is_finite() && constraints.rho_p >= 0.0,
        "rho_P must be non-negative",
    )?;

    Ok(ValidatedParams {
        system,
        gains,
        constraints,
    })
}

/// Evaluates the closed-form timescales. Pure; safe to call on any inputs
/// with `k_d + R > 0`.
pub fn derive_timescales(
    system: &SystemParams,
    gains: &ControlGains,
    constraints: &DesignConstraints,
) -> TimescaleReport {
    let mu = system.l / (gains.k_d + system.r);
    let tau_eff = system.tau_p / gains.droop_denominator(system);
    let ratio = tau_eff / mu;
    TimescaleReport {
        mu,
        tau_eff,
        ratio,
        separation_ok: ratio >= constraints.alpha,
    }
}
