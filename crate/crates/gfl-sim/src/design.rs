//! Gain-selection algebra: closed-form bounds on the tracking gain, the
//! droop-gain ceiling, modulation admissibility, the sequential design
//! procedure, feasibility sweeps over load ramp rate, and the steady-state
//! droop characteristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{
    validate_params, ControlGains, DesignConstraints, SystemParams, TimescaleReport,
};

/// All gain bounds for one hardware/constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainBounds {
    /// Lower bound from fast/slow timescale separation: `alpha L / tau_p` (Ohm).
    pub kd_sp: f64,
    /// Lower bound from quasi-steady ramp tracking:
    /// `L K_pp rho_P / ((1 + 1.5 V_g K_pp) e_max)` (Ohm).
    pub kd_ramp: f64,
    /// Upper bound from the modulation voltage margin: `H_min / delta_i_max` (Ohm).
    pub kd_volt: f64,
    /// Upper bound from switching bandwidth: `L omega_sw / n` (Ohm).
    pub kd_bw: f64,
    /// `min(kd_volt, kd_bw)` (Ohm).
    pub kd_max: f64,
    /// `max(kd_sp, kd_ramp)` (Ohm).
    pub kd_lower: f64,
    /// Droop-gain ceiling from slow-side separation:
    /// `(2 / 3 V_g)(k_d tau_p / (alpha L) - 1)` at the supplied `k_d` (A/W).
    pub kpp_sp: f64,
    /// Modulation margin `kappa m_max V_dc_min - sqrt(2) V_g` (V).
    pub h_min: f64,
    /// Largest tolerable load ramp rate,
    /// `(1 + 1.5 V_g K_pp) e_max kd_max / (L K_pp)` (W/s).
    pub rho_p_max: f64,
    /// Whether the gain interval `[kd_lower, kd_max]` is nonempty.
    pub feasible: bool,
}

/// Worst-case modulation check over the trajectory class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Worst-case tracking error used for the admissibility decision (A).
    pub e_bar: f64,
    /// Worst-case current `K_pp (P* + Delta_P) / (1 + 1.5 V_g K_pp) + e_bar` (A).
    pub i_d_bar: f64,
    /// Worst modulation magnitude during the initial transient (error up to
    /// `delta_i_max`).
    pub m_norm_boundary: f64,
    /// Worst modulation magnitude after the transient (error up to `e_max`).
    pub m_norm_post: f64,
    /// Whether the boundary-layer worst case stays inside the linear region.
    pub admissible: bool,
}

/// Output of the sequential design procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub gains: ControlGains,
    pub bounds: GainBounds,
    pub timescales: TimescaleReport,
    pub admissibility: AdmissibilityReport,
}

/// Margin knobs for the sequential procedure. `kd_fraction` places `k_d`
/// inside `[kd_sp, kd_max]` by linear interpolation; `kpp_fraction` backs
/// `K_pp` off its ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMargins {
    pub kd_fraction: f64,
    pub kpp_fraction: f64,
}

impl Default for DesignMargins {
    fn default() -> Self {
        // Lands on the 20 kW reference gains (1.2 Ohm, 0.4 mA/W) to within
        // a fraction of a percent.
        Self {
            kd_fraction: 0.65,
            kpp_fraction: 0.83,
        }
    }
}

/// Bound curves over a load ramp-rate grid plus the two critical points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCurve {
    pub rho_p_grid: Vec<f64>,
    pub kd_sp_curve: Vec<f64>,
    pub kd_ramp_curve: Vec<f64>,
    pub kd_volt_line: Vec<f64>,
    pub kd_bw_line: Vec<f64>,
    /// Ramp rate where the ramp bound overtakes the separation bound (W/s).
    pub rho_p_crit: f64,
    /// Ramp rate where the ramp bound meets `kd_max` and closes the feasible
    /// region (W/s).
    pub rho_p_close: f64,
}

/// Steady operating point of the droop loop for a constant load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// `K_pp (P* + P_L) / (1 + 1.5 V_g K_pp)` (A).
    pub i_d_bar: f64,
    /// `1.5 V_g i_d_bar` (W).
    pub p_inv_ss: f64,
    /// Marginal share of load picked up by the inverter,
    /// `1.5 V_g K_pp / (1 + 1.5 V_g K_pp)` (dimensionless).
    pub participation: f64,
}

/// Voltage headroom left for feedback after matching the grid:
/// `kappa m_max V_dc_min - sqrt(2) V_g` (V).
pub fn modulation_margin(params: &SystemParams) -> f64 {
    params.kappa * params.m_max * params.v_dc_min - std::f64::consts::SQRT_2 * params.v_g
}

/// Ramp-tracking lower bound on `k_d` as a function of ramp rate (Ohm).
pub fn kd_ramp_bound(params: &SystemParams, constraints: &DesignConstraints, k_pp: f64, rho_p: f64) -> f64 {
    params.l * k_pp * rho_p / ((1.0 + 1.5 * params.v_g * k_pp) * constraints.e_max)
}

/// Evaluates every bound at the supplied gains. Errors when the hardware has
/// no modulation headroom at all.
pub fn compute_gain_bounds(
    params: &SystemParams,
    constraints: &DesignConstraints,
    gains: &ControlGains,
) -> Result<GainBounds> {
    let h_min = modulation_margin(params);
    if h_min <= 0.0 {
        return Err(Error::NoHeadroom { h_min });
    }
    let kd_sp = constraints.alpha * params.l / params.tau_p;
    let kd_ramp = kd_ramp_bound(params, constraints, gains.k_pp, constraints.rho_p);
    let kd_volt = h_min / constraints.delta_i_max;
    let kd_bw = params.l * params.omega_sw() / constraints.n;
    let kd_max = kd_volt.min(kd_bw);
    let kd_lower = kd_sp.max(kd_ramp);
    let kpp_sp = (2.0 / (3.0 * params.v_g))
        * (gains.k_d * params.tau_p / (constraints.alpha * params.l) - 1.0);
    let rho_p_max =
        (1.0 + 1.5 * params.v_g * gains.k_pp) * constraints.e_max * kd_max / (params.l * gains.k_pp);
    Ok(GainBounds {
        kd_sp,
        kd_ramp,
        kd_volt,
        kd_bw,
        kd_max,
        kd_lower,
        kpp_sp,
        h_min,
        rho_p_max,
        feasible: kd_lower <= kd_max,
    })
}

/// Worst-case modulation magnitudes over the trajectory class with load
/// amplitude `delta_p`. The admissibility decision uses the boundary-layer
/// error bound `delta_i_max`; the post-transient figure uses `e_max`.
pub fn modulation_admissibility(
    params: &SystemParams,
    gains: &ControlGains,
    constraints: &DesignConstraints,
    delta_p: f64,
) -> AdmissibilityReport {
    let i_ref = gains.k_pp * (gains.p_star + delta_p) / gains.droop_denominator(params);
    let cap = params.kappa * params.v_dc_min;
    let m_worst = |e_bar: f64| {
        (params.v_g + gains.k_d * e_bar).hypot(params.l * params.omega_g * (i_ref + e_bar)) / cap
    };
    let e_bar = constraints.delta_i_max;
    let m_norm_boundary = m_worst(e_bar);
    AdmissibilityReport {
        e_bar,
        i_d_bar: i_ref + e_bar,
        m_norm_boundary,
        m_norm_post: m_worst(constraints.e_max),
        admissible: m_norm_boundary <= params.m_max,
    }
}

/// Sequential gain selection: hardware fixes the ceiling, separation fixes
/// the floor, `k_d` is placed between them, `K_pp` backs off its own ceiling,
/// then the ramp bound and admissibility are verified for the target
/// disturbance class. Any failure names the binding step.
pub fn sequential_design(
    params: &SystemParams,
    constraints: &DesignConstraints,
    margins: &DesignMargins,
    p_star: f64,
) -> Result<DesignResult> {
    if !(margins.kd_fraction > 0.0 && margins.kd_fraction <= 1.0) {
        return Err(Error::InvalidParam("kd_fraction must lie in (0, 1]".into()));
    }
    if !(margins.kpp_fraction > 0.0 && margins.kpp_fraction <= 1.0) {
        return Err(Error::InvalidParam(
            "Kpp_fraction must lie in (0, 1]".into(),
        ));
    }

    // Step 1: hardware ceiling.
    let h_min = modulation_margin(params);
    if h_min <= 0.0 {
        return Err(Error::NoHeadroom { h_min });
    }
    let kd_volt = h_min / constraints.delta_i_max;
    let kd_bw = params.l * params.omega_sw() / constraints.n;
    let kd_max = kd_volt.min(kd_bw);

    // Step 2: separation floor, then place k_d.
    let kd_sp = constraints.alpha * params.l / params.tau_p;
    if kd_sp > kd_max {
        return Err(Error::Infeasible {
            binding: "kd_SP".into(),
            detail: format!("kd_SP = {kd_sp:.4} Ohm exceeds kd_max = {kd_max:.4} Ohm"),
        });
    }
    let k_d = kd_sp + margins.kd_fraction * (kd_max - kd_sp);

    // Step 3: droop ceiling at the chosen k_d.
    let kpp_sp = (2.0 / (3.0 * params.v_g))
        * (k_d * params.tau_p / (constraints.alpha * params.l) - 1.0);
    if kpp_sp <= 0.0 {
        return Err(Error::Infeasible {
            binding: "Kpp_SP".into(),
            detail: format!("Kpp_SP = {kpp_sp:.3e} A/W at k_d = {k_d:.4} Ohm"),
        });
    }
    let k_pp = margins.kpp_fraction * kpp_sp;

    // Step 4: verify the ramp bound at the target ramp rate.
    let kd_ramp = kd_ramp_bound(params, constraints, k_pp, constraints.rho_p);
    if kd_ramp > k_d {
        let vs = if kd_ramp > kd_max { "kd_max" } else { "k_d" };
        return Err(Error::Infeasible {
            binding: "kd_ramp".into(),
            detail: format!(
                "kd_ramp = {kd_ramp:.4} Ohm exceeds {vs} at rho_P = {:.3e} W/s",
                constraints.rho_p
            ),
        });
    }

    // Step 5: verify modulation admissibility for the load amplitude class.
    let gains = ControlGains {
        k_d,
        k_q: k_d,
        k_pp,
        p_star,
    };
    let admissibility = modulation_admissibility(params, &gains, constraints, constraints.delta_p);
    if !admissibility.admissible {
        return Err(Error::Infeasible {
            binding: "mod_condition".into(),
            detail: format!(
                "worst-case |m| = {:.4} exceeds m_max = {}",
                admissibility.m_norm_boundary, params.m_max
            ),
        });
    }

    let validated = validate_params(*params, gains, *constraints)?;
    Ok(DesignResult {
        gains,
        bounds: compute_gain_bounds(params, constraints, &gains)?,
        timescales: validated.timescales(),
        admissibility,
    })
}

/// Evaluates the four bound curves over `rho_grid` and inverts the affine
/// ramp bound exactly for the two critical ramp rates.
pub fn feasibility_sweep(
    params: &SystemParams,
    constraints: &DesignConstraints,
    rho_grid: &[f64],
    k_pp: f64,
) -> Result<FeasibilityCurve> {
    if rho_grid.is_empty() {
        return Err(Error::Scenario("empty ramp-rate grid".into()));
    }
    let h_min = modulation_margin(params);
    if h_min <= 0.0 {
        return Err(Error::NoHeadroom { h_min });
    }
    let kd_sp = constraints.alpha * params.l / params.tau_p;
    let kd_volt = h_min / constraints.delta_i_max;
    let kd_bw = params.l * params.omega_sw() / constraints.n;
    let kd_max = kd_volt.min(kd_bw);
    // kd_ramp(rho) = slope * rho with slope = L K_pp / ((1 + 1.5 V_g K_pp) e_max).
    let slope = params.l * k_pp / ((1.0 + 1.5 * params.v_g * k_pp) * constraints.e_max);
    Ok(FeasibilityCurve {
        rho_p_grid: rho_grid.to_vec(),
        kd_sp_curve: vec![kd_sp; rho_grid.len()],
        kd_ramp_curve: rho_grid.iter().map(|&r| slope * r).collect(),
        kd_volt_line: vec![kd_volt; rho_grid.len()],
        kd_bw_line: vec![kd_bw; rho_grid.len()],
        rho_p_crit: kd_sp / slope,
        rho_p_close: kd_max / slope,
    })
}

/// Closed-form droop operating point for a constant load.
pub fn steady_state(params: &SystemParams, gains: &ControlGains, p_l: f64) -> SteadyState {
    let denom = gains.droop_denominator(params);
    let i_d_bar = gains.k_pp * (gains.p_star + p_l) / denom;
    SteadyState {
        i_d_bar,
        p_inv_ss: 1.5 * params.v_g * i_d_bar,
        participation: 1.5 * params.v_g * gains.k_pp / denom,
    }
}
