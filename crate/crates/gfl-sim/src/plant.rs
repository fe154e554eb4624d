//! Full nonlinear plant: dq inductor dynamics, DC-link energy balance, and
//! the first-order power measurement, plus the power balance at the point of
//! common coupling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// The four dynamic states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// d-axis inductor current (A).
    pub i_d: f64,
    /// q-axis inductor current (A).
    pub i_q: f64,
    /// DC-link voltage (V). Must stay positive.
    pub v_dc: f64,
    /// Measured (filtered) PCC power (W).
    pub p_m: f64,
}

/// Exogenous inputs to the plant at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantInputs {
    /// d-axis terminal voltage (V).
    pub v_d: f64,
    /// q-axis terminal voltage (V).
    pub v_q: f64,
    /// Power delivered by the DC source into the link (W).
    pub p_dc_in: f64,
    /// Local load power at the PCC (W).
    pub p_l: f64,
}

/// Split of the load between the inverter and the stiff grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerBalance {
    /// Inverter output power `1.5 * V_g * i_d` (W).
    pub p_inv: f64,
    /// Power drawn from the grid, `P_L - P_inv` (W). Negative means the
    /// inverter exports surplus to the grid.
    pub p_net: f64,
}

/// Evaluates the state derivative:
///
/// ```text
/// L di_d/dt   = -R i_d + L w_g i_q + v_d - V_g
/// L di_q/dt   = -R i_q - L w_g i_d + v_q
/// C V dV/dt   = P_dc_in - 1.5 V_g i_d
/// tau_p dPm/dt = -P_m + 1.5 V_g i_d - P_L
/// ```
///
/// Errors with [`Error::SingularState`] when `V_dc <= 0`; the DC energy
/// equation divides by `V_dc`, and a collapsed link must abort the run
/// rather than be clamped over.
pub fn plant_derivative(
    state: &PlantState,
    inputs: &PlantInputs,
    params: &SystemParams,
) -> Result<PlantState> {
    if state.v_dc.is_nan() || state.v_dc <= 0.0 {
        return Err(Error::SingularState { v_dc: state.v_dc });
    }
    let p_out = 1.5 * params.v_g * state.i_d;
    Ok(PlantState {
        i_d: (-params.r * state.i_d + params.l * params.omega_g * state.i_q + inputs.v_d
            - params.v_g)
            / params.l,
        i_q: (-params.r * state.i_q - params.l * params.omega_g * state.i_d + inputs.v_q)
            / params.l,
        v_dc: (inputs.p_dc_in - p_out) / (params.c_dc * state.v_dc),
        p_m: (-state.p_m + p_out - inputs.p_l) / params.tau_p,
    })
}

/// Exact power-balance identity at the PCC.
pub fn pcc_power_balance(state: &PlantState, p_l: f64, params: &SystemParams) -> PowerBalance {
    let p_inv = 1.5 * params.v_g * state.i_d;
    PowerBalance {
        p_inv,
        p_net: p_l - p_inv,
    }
}
