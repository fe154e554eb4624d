//! Composite control law: droop reference, inner tracking loop, feedback
//! linearization, and modulation-index synthesis with saturation monitoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ControlGains, SystemParams};
use crate::plant::PlantState;

/// Everything the controller produces in one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput {
    /// Current reference from the droop law (A), after any clamp.
    pub i_d_star: f64,
    /// d-axis virtual input (V).
    pub u_d: f64,
    /// q-axis virtual input (V).
    pub u_q: f64,
    /// Applied d-axis terminal voltage (V).
    pub v_d: f64,
    /// Applied q-axis terminal voltage (V).
    pub v_q: f64,
    /// d-axis modulation index `v_d / (kappa V_dc)`.
    pub m_d: f64,
    /// q-axis modulation index `v_q / (kappa V_dc)`.
    pub m_q: f64,
    /// `sqrt(m_d^2 + m_q^2)`.
    pub m_norm: f64,
    /// True when the commanded magnitude left the linear modulation region.
    pub saturated: bool,
}

/// Optional clamp on the droop reference. With a purely proportional droop
/// law there is no integrator to unwind; holding the reference at the clamp
/// before feedback linearization is the whole anti-windup story, and the
/// `anti_windup` flag records that intent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampConfig {
    pub enabled: bool,
    /// Clamp level (A); must be positive when enabled.
    pub i_d_star_max: f64,
    pub anti_windup: bool,
}

impl Default for ClampConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            i_d_star_max: 0.0,
            anti_windup: true,
        }
    }
}

/// What to do when the modulation command exceeds `m_max`.
///
/// `Monitor` (default) records the excursion without altering the command:
/// admissible designs are guaranteed not to saturate, and the simulator's job
/// is to verify that, not mask it. `Clip` projects the command radially onto
/// the `m_max` circle for exploratory runs outside the admissible region; the
/// recorded voltages and indices are then the projected ones and `saturated`
/// marks that clipping occurred.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaturationMode {
    #[default]
    Monitor,
    Clip,
}

/// Droop reference `i_d* = K_pp (P* - P_m)`, clamped symmetrically when the
/// clamp is enabled.
pub fn droop_reference(p_m: f64, gains: &ControlGains, clamp: &ClampConfig) -> f64 {
    let raw = gains.k_pp * (gains.p_star - p_m);
    if clamp.enabled {
        raw.clamp(-clamp.i_d_star_max, clamp.i_d_star_max)
    } else {
        raw
    }
}

/// First-order tracking inputs `u_d = -k_d (i_d - i_d*)`, `u_q = -k_q i_q`.
pub fn inner_loop(i_d: f64, i_q: f64, i_d_star: f64, gains: &ControlGains) -> (f64, f64) {
    (-gains.k_d * (i_d - i_d_star), -gains.k_q * i_q)
}

/// Cancels the grid feedforward and the dq cross coupling:
/// `v_d = V_g - L w_g i_q + u_d`, `v_q = L w_g i_d + u_q`.
pub fn feedback_linearize(
    state: &PlantState,
    u_d: f64,
    u_q: f64,
    params: &SystemParams,
) -> (f64, f64) {
    (
        params.v_g - params.l * params.omega_g * state.i_q + u_d,
        params.l * params.omega_g * state.i_d + u_q,
    )
}

/// Inverts the terminal-voltage relation `v = kappa V_dc m` and flags (never
/// silently clips) commands outside the linear region.
pub fn modulation_indices(
    v_d: f64,
    v_q: f64,
    v_dc: f64,
    params: &SystemParams,
) -> Result<(f64, f64, f64, bool)> {
    if v_dc.is_nan() || v_dc <= 0.0 {
        return Err(Error::SingularState { v_dc });
    }
    let m_d = v_d / (params.kappa * v_dc);
    let m_q = v_q / (params.kappa * v_dc);
    let m_norm = m_d.hypot(m_q);
    Ok((m_d, m_q, m_norm, m_norm > params.m_max))
}

/// Chains droop reference -> inner loop -> feedback linearization ->
/// modulation indices.
pub fn controller_step(
    state: &PlantState,
    gains: &ControlGains,
    clamp: &ClampConfig,
    mode: SaturationMode,
    params: &SystemParams,
) -> Result<ControlOutput> {
    let i_d_star = droop_reference(state.p_m, gains, clamp);
    let (u_d, u_q) = inner_loop(state.i_d, state.i_q, i_d_star, gains);
    let (mut v_d, mut v_q) = feedback_linearize(state, u_d, u_q, params);
    let (mut m_d, mut m_q, mut m_norm, saturated) =
        modulation_indices(v_d, v_q, state.v_dc, params)?;
    if saturated && mode == SaturationMode::Clip {
        let scale = params.m_max / m_norm;
        v_d *= scale;
        v_q *= scale;
        m_d *= scale;
        m_q *= scale;
        m_norm = params.m_max;
    }
    Ok(ControlOutput {
        i_d_star,
        u_d,
        u_q,
        v_d,
        v_q,
        m_d,
        m_q,
        m_norm,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::plant_derivative;
    use crate::plant::PlantInputs;
    use crate::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn droop_zero_error() {
        let p = presets::baseline();
        assert_eq!(
            droop_reference(p.gains.p_star, &p.gains, &ClampConfig::default()),
            0.0
        );
    }

    #[test]
    fn droop_direct_evaluation() {
        let p = presets::baseline();
        let i = droop_reference(0.0, &p.gains, &ClampConfig::default());
        assert_relative_eq!(i, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn droop_clamp_engages_at_rating() {
        let mut p = presets::high_voltage();
        p.gains.p_star = 20e3;
        let clamp = ClampConfig {
            enabled: true,
            i_d_star_max: 48.1,
            anti_windup: true,
        };
        let unclamped = droop_reference(0.0, &p.gains, &ClampConfig::default());
        assert_relative_eq!(unclamped, 54.0, max_relative = 1e-12);
        assert_eq!(droop_reference(0.0, &p.gains, &clamp), 48.1);
    }

    #[test]
    fn inner_loop_values() {
        let p = presets::baseline();
        assert_eq!(inner_loop(5.0, 0.0, 5.0, &p.gains), (0.0, 0.0));
        let (u_d, _) = inner_loop(100.0, 0.0, 0.0, &p.gains);
        assert_relative_eq!(u_d, -120.0, max_relative = 1e-12);
        let (_, u_q) = inner_loop(0.0, 5.0, 0.0, &p.gains);
        assert_relative_eq!(u_q, -6.0, max_relative = 1e-12);
    }

    #[test]
    fn linearization_feeds_forward_grid_voltage() {
        let p = presets::baseline();
        let state = PlantState {
            v_dc: p.system.v_dc_nom,
            ..Default::default()
        };
        let (v_d, v_q) = feedback_linearize(&state, 0.0, 0.0, &p.system);
        assert_eq!(v_d, p.system.v_g);
        assert_eq!(v_q, 0.0);
    }

    #[test]
    fn linearization_cross_term() {
        let p = presets::baseline();
        let state = PlantState {
            i_d: 23.7,
            v_dc: p.system.v_dc_nom,
            ..Default::default()
        };
        let (_, v_q) = feedback_linearize(&state, 0.0, 0.0, &p.system);
        // L * w_g * 23.7
        assert_relative_eq!(v_q, 17.869, max_relative = 1e-3);
    }

    #[test]
    fn modulation_direct_values() {
        let p = presets::baseline();
        let (m_d, _, m_norm, sat) =
            modulation_indices(p.system.v_g, 0.0, 1200.0, &p.system).unwrap();
        assert_relative_eq!(m_d, 0.462, max_relative = 1e-3);
        assert!(m_norm < 0.95);
        assert!(!sat);

        let (m_d, _, _, _) = modulation_indices(397.0, 0.0, 1100.0, &p.system).unwrap();
        assert_relative_eq!(m_d, 0.722, max_relative = 1e-3);

        assert_eq!(
            modulation_indices(0.0, 0.0, 1100.0, &p.system).unwrap(),
            (0.0, 0.0, 0.0, false)
        );
    }

    #[test]
    fn modulation_rejects_collapsed_link() {
        let p = presets::baseline();
        assert!(matches!(
            modulation_indices(100.0, 0.0, -1.0, &p.system),
            Err(Error::SingularState { .. })
        ));
    }

    // Worst-case witness states: tracking error at its bound with the
    // reference at the disturbance-class worst case, DC link at its floor.
    #[test]
    fn step_boundary_layer_worst_case() {
        let p = presets::baseline();
        let denom = p.gains.droop_denominator(&p.system);
        let i_ref = p.gains.k_pp * (p.gains.p_star + p.constraints.delta_p) / denom;
        let i_d = i_ref + p.constraints.delta_i_max;
        let i_star = i_d + p.constraints.delta_i_max; // e_d = -delta_i_max
        let state = PlantState {
            i_d,
            i_q: 0.0,
            v_dc: p.system.v_dc_min,
            p_m: p.gains.p_star - i_star / p.gains.k_pp,
        };
        let out = controller_step(
            &state,
            &p.gains,
            &ClampConfig::default(),
            SaturationMode::Monitor,
            &p.system,
        )
        .unwrap();
        assert_relative_eq!(out.m_norm, 0.739, max_relative = 0.01);
        assert!(!out.saturated);
    }

    #[test]
    fn step_post_transient_worst_case() {
        let p = presets::baseline();
        let denom = p.gains.droop_denominator(&p.system);
        let i_ref = p.gains.k_pp * (p.gains.p_star + p.constraints.delta_p) / denom;
        let i_d = i_ref + p.constraints.e_max;
        let i_star = i_d + p.constraints.e_max; // e_d = -e_max
        let state = PlantState {
            i_d,
            i_q: 0.0,
            v_dc: p.system.v_dc_min,
            p_m: p.gains.p_star - i_star / p.gains.k_pp,
        };
        let out = controller_step(
            &state,
            &p.gains,
            &ClampConfig::default(),
            SaturationMode::Monitor,
            &p.system,
        )
        .unwrap();
        assert_relative_eq!(out.m_norm, 0.527, max_relative = 0.01);
        assert!(!out.saturated);
    }

    #[test]
    fn step_at_droop_equilibrium_matches_closed_form() {
        let p = presets::baseline();
        let sys = p.system;
        let p_l = 10e3;
        let ss = crate::design::steady_state(&sys, &p.gains, p_l);
        let state = PlantState {
            i_d: ss.i_d_bar,
            i_q: 0.0,
            v_dc: sys.v_dc_nom,
            p_m: 1.5 * sys.v_g * ss.i_d_bar - p_l,
        };
        let out = controller_step(
            &state,
            &p.gains,
            &ClampConfig::default(),
            SaturationMode::Monitor,
            &sys,
        )
        .unwrap();
        // On the droop line e_d = 0, so v_d = V_g and v_q = L w_g i_d.
        let expected = (sys.v_g.powi(2) + (sys.l * sys.omega_g * ss.i_d_bar).powi(2)).sqrt()
            / (sys.kappa * sys.v_dc_nom);
        assert_relative_eq!(out.m_norm, expected, max_relative = 1e-12);
        assert!(!out.saturated);
    }

    #[test]
    fn clip_mode_projects_onto_limit_circle() {
        let p = presets::baseline();
        let state = PlantState {
            i_d: 500.0,
            i_q: 0.0,
            v_dc: p.system.v_dc_min,
            p_m: -2e6,
        };
        let out = controller_step(
            &state,
            &p.gains,
            &ClampConfig::default(),
            SaturationMode::Clip,
            &p.system,
        )
        .unwrap();
        assert!(out.saturated);
        assert_relative_eq!(out.m_norm, p.system.m_max, max_relative = 1e-12);
        assert_relative_eq!(
            out.v_d,
            out.m_d * p.system.kappa * state.v_dc,
            max_relative = 1e-12
        );
    }

    proptest! {
        // Closing the loop must reproduce the d-axis form
        // L di_d/dt = -(k_d + R)(i_d - i_d*) - R i_d* exactly.
        #[test]
        fn closed_loop_d_axis_identity(
            i_d in -200.0f64..200.0, i_q in -200.0f64..200.0, p_m in -50e3f64..50e3,
        ) {
            let p = presets::baseline();
            let state = PlantState { i_d, i_q, v_dc: p.system.v_dc_nom, p_m };
            let out = controller_step(
                &state, &p.gains, &ClampConfig::default(), SaturationMode::Monitor, &p.system,
            ).unwrap();
            let inputs = PlantInputs { v_d: out.v_d, v_q: out.v_q, p_dc_in: 0.0, p_l: 0.0 };
            let d = plant_derivative(&state, &inputs, &p.system).unwrap();
            let lhs = p.system.l * d.i_d;
            let rhs = -(p.gains.k_d + p.system.r) * (i_d - out.i_d_star)
                - p.system.r * out.i_d_star;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }

        // Closed-loop q axis: di_q/dt = -(k_q + R) i_q / L for any i_d, P_m.
        #[test]
        fn closed_loop_q_axis_decouples(
            i_d in -200.0f64..200.0, i_q in -200.0f64..200.0, p_m in -50e3f64..50e3,
        ) {
            let p = presets::baseline();
            let state = PlantState { i_d, i_q, v_dc: p.system.v_dc_nom, p_m };
            let out = controller_step(
                &state, &p.gains, &ClampConfig::default(), SaturationMode::Monitor, &p.system,
            ).unwrap();
            let inputs = PlantInputs { v_d: out.v_d, v_q: out.v_q, p_dc_in: 0.0, p_l: 0.0 };
            let d = plant_derivative(&state, &inputs, &p.system).unwrap();
            let expected = -(p.gains.k_q + p.system.r) * i_q / p.system.l;
            prop_assert!((d.i_q - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }

        // Unclamped droop is affine in P_m with slope -K_pp, which satisfies
        // the stability requirement slope < 2/(3 V_g) for any K_pp > 0.
        #[test]
        fn droop_is_affine_with_slope_kpp(p_m in -100e3f64..100e3, dp in 1.0f64..10e3) {
            let p = presets::baseline();
            let clamp = ClampConfig::default();
            let a = droop_reference(p_m, &p.gains, &clamp);
            let b = droop_reference(p_m + dp, &p.gains, &clamp);
            let slope = (b - a) / dp;
            prop_assert!((slope + p.gains.k_pp).abs() < 1e-12);
            prop_assert!(slope < 2.0 / (3.0 * p.system.v_g));
        }
    }
}
