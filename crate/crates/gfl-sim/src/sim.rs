//! Fixed-step closed-loop integration of the full four-state plant and of
//! the reduced scalar power dynamics, plus the boundary-layer test harness
//! and the slow-manifold comparison between the two.
//!
//! Integration is classical fourth-order Runge-Kutta on a uniform grid. The
//! load is sampled by zero-order hold within each step and burst edges land
//! on grid points by construction, so traces are bit-reproducible for a
//! fixed seed, step size, and horizon.

use serde::{Deserialize, Serialize};

use crate::analysis::linear_fit;
use crate::controller::{controller_step, ClampConfig, SaturationMode};
use crate::error::{Error, Result};
use crate::load::{generate_load_trace, LoadModel, LoadTrace};
use crate::params::{derive_timescales, validate_params, ControlGains, DesignConstraints, SystemParams};
use crate::plant::{pcc_power_balance, plant_derivative, PlantInputs, PlantState};

/// How the DC source feeds the link.
///
/// `Balanced` supplies exactly the inverter output power at every instant,
/// holding `V_dc` at its initial value; it is the mode used for all
/// reference reproductions, consistent with treating the DC link as stiff.
/// `Constant` fixes the injected power and lets the link integrate the
/// mismatch, exercising the `V_dc >= V_dc_min` monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DcMode {
    Balanced,
    Constant { p_dc_in: f64 },
}

/// Initial condition selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// Solve the closed-loop equilibrium at the initial load value. The
    /// droop line is corrected for the residual `-R i_d*` term of the inner
    /// loop so the resulting point is an exact fixed point of the full
    /// dynamics; `V_dc` starts at nominal.
    ReducedEquilibrium,
    Explicit(PlantState),
}

/// Load description for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LoadSpec {
    Model(LoadModel),
    Trace(LoadTrace),
    Constant(f64),
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: SystemParams,
    pub gains: ControlGains,
    pub constraints: DesignConstraints,
    pub clamp: ClampConfig,
    pub saturation: SaturationMode,
    pub load: LoadSpec,
    pub dc_mode: DcMode,
    pub init: InitialState,
    /// Simulated time span (s).
    pub horizon: f64,
    /// Integration step (s).
    pub dt: f64,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub enum SimStatus {
    #[default]
    Completed,
    /// The DC link collapsed; the trace holds everything up to the failure.
    DcCollapse { t: f64, v_dc: f64 },
}

/// Column-oriented record of one run, one row per grid point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub dt: f64,
    pub t: Vec<f64>,
    pub i_d: Vec<f64>,
    pub i_q: Vec<f64>,
    pub v_dc: Vec<f64>,
    pub p_m: Vec<f64>,
    pub i_d_star: Vec<f64>,
    pub m_d: Vec<f64>,
    pub m_q: Vec<f64>,
    pub m_norm: Vec<f64>,
    pub saturated: Vec<bool>,
    pub p_inv: Vec<f64>,
    pub p_net: Vec<f64>,
    pub p_l: Vec<f64>,
    /// Saturation-flag transitions as `(t, new_value)` pairs.
    pub sat_events: Vec<(f64, bool)>,
    pub status: SimStatus,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn with_capacity(dt: f64, n: usize) -> Self {
        SimTrace {
            dt,
            t: Vec::with_capacity(n),
            i_d: Vec::with_capacity(n),
            i_q: Vec::with_capacity(n),
            v_dc: Vec::with_capacity(n),
            p_m: Vec::with_capacity(n),
            i_d_star: Vec::with_capacity(n),
            m_d: Vec::with_capacity(n),
            m_q: Vec::with_capacity(n),
            m_norm: Vec::with_capacity(n),
            saturated: Vec::with_capacity(n),
            p_inv: Vec::with_capacity(n),
            p_net: Vec::with_capacity(n),
            p_l: Vec::with_capacity(n),
            sat_events: Vec::new(),
            status: SimStatus::Completed,
        }
    }

    fn push_row(
        &mut self,
        t: f64,
        state: &PlantState,
        ctrl: &crate::controller::ControlOutput,
        p_inv: f64,
        p_net: f64,
        p_l: f64,
    ) {
        if ctrl.saturated != self.saturated.last().copied().unwrap_or(false) {
            self.sat_events.push((t, ctrl.saturated));
        }
        self.t.push(t);
        self.i_d.push(state.i_d);
        self.i_q.push(state.i_q);
        self.v_dc.push(state.v_dc);
        self.p_m.push(state.p_m);
        self.i_d_star.push(ctrl.i_d_star);
        self.m_d.push(ctrl.m_d);
        self.m_q.push(ctrl.m_q);
        self.m_norm.push(ctrl.m_norm);
        self.saturated.push(ctrl.saturated);
        self.p_inv.push(p_inv);
        self.p_net.push(p_net);
        self.p_l.push(p_l);
    }
}

/// Manifold-tracking report from a full/reduced trace pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldReport {
    /// Start of the evaluation window (s): the initial transient is excluded.
    pub window_start: f64,
    /// `sup |i_d - K_pp (P* - P_m)|` over the window, from the full trace (A).
    pub manifold_deviation: f64,
    /// `sup |P_m_full - P_m_reduced|` over the window (W).
    pub p_m_deviation: f64,
}

fn sample_count(horizon: f64, dt: f64) -> usize {
    (horizon / dt + 0.5).floor() as usize + 1
}

/// Exact fixed point of the closed loop at a constant load. The inner loop
/// leaves a residual `-R i_d*` in the d-axis, so the realized steady current
/// sits on a droop line with gain `K_pp k_d / (k_d + R)`.
pub fn closed_loop_equilibrium(
    params: &SystemParams,
    gains: &ControlGains,
    p_l: f64,
) -> PlantState {
    let beta = gains.k_pp * gains.k_d / (gains.k_d + params.r);
    let i_d = beta * (gains.p_star + p_l) / (1.0 + 1.5 * params.v_g * beta);
    PlantState {
        i_d,
        i_q: 0.0,
        v_dc: params.v_dc_nom,
        p_m: 1.5 * params.v_g * i_d - p_l,
    }
}

/// Right-hand side of the reduced power dynamics. Pure; accepts any gains,
/// including the degenerate `K_pp = 0` (droop disabled), where the power
/// measurement becomes a plain first-order filter of `-P_L`.
pub fn reduced_derivative(
    p_m: f64,
    p_l: f64,
    params: &SystemParams,
    gains: &ControlGains,
) -> f64 {
    let denom = gains.droop_denominator(params);
    let tau_eff = params.tau_p / denom;
    let share = 1.5 * params.v_g * gains.k_pp / denom;
    -p_m / tau_eff + share * gains.p_star / tau_eff - p_l / params.tau_p
}

fn resolve_load(load: &LoadSpec, horizon: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    match load {
        LoadSpec::Constant(p) => Ok(vec![*p; n]),
        LoadSpec::Model(model) => {
            let trace = generate_load_trace(model, horizon, dt)?;
            Ok(trace.p_l)
        }
        LoadSpec::Trace(trace) => {
            if trace.len() < n {
                return Err(Error::Scenario(format!(
                    "fixed load trace has {} samples, scenario needs {n}",
                    trace.len()
                )));
            }
            if trace.len() > 1 && ((trace.times[1] - trace.times[0]) - dt).abs() > 1e-12 {
                return Err(Error::Scenario(
                    "fixed load trace step does not match scenario dt".into(),
                ));
            }
            Ok(trace.p_l[..n].to_vec())
        }
    }
}

fn axpy(s: &PlantState, k: &PlantState, h: f64) -> PlantState {
    PlantState {
        i_d: s.i_d + h * k.i_d,
        i_q: s.i_q + h * k.i_q,
        v_dc: s.v_dc + h * k.v_dc,
        p_m: s.p_m + h * k.p_m,
    }
}

/// Integrates the four-state closed loop. On DC-link collapse the partial
/// trace is returned with a `DcCollapse` status instead of an error so the
/// diagnostic retains everything recorded up to the failure.
pub fn simulate_full(scenario: &Scenario) -> Result<SimTrace> {
    validate_params(scenario.params, scenario.gains, scenario.constraints)?;
    let params = &scenario.params;
    let gains = &scenario.gains;
    let ts = derive_timescales(params, gains, &scenario.constraints);
    if !(scenario.dt > 0.0 && scenario.dt.is_finite()) {
        return Err(Error::Scenario(format!("invalid dt = {}", scenario.dt)));
    }
    if scenario.dt > ts.mu / 10.0 {
        return Err(Error::Scenario(format!(
            "dt too large for boundary layer: dt = {} s, needs dt <= mu/10 = {} s",
            scenario.dt,
            ts.mu / 10.0
        )));
    }
    if !(scenario.horizon >= 0.0 && scenario.horizon.is_finite()) {
        return Err(Error::Scenario(format!(
            "invalid horizon = {}",
            scenario.horizon
        )));
    }
    let dt = scenario.dt;
    let n = sample_count(scenario.horizon, dt);
    let p_l = resolve_load(&scenario.load, scenario.horizon, dt, n)?;

    let mut state = match scenario.init {
        InitialState::Explicit(s) => s,
        InitialState::ReducedEquilibrium => closed_loop_equilibrium(params, gains, p_l[0]),
    };

    let rhs = |s: &PlantState, load: f64| -> Result<PlantState> {
        let ctrl = controller_step(s, gains, &scenario.clamp, scenario.saturation, params)?;
        let p_dc_in = match scenario.dc_mode {
            DcMode::Balanced => 1.5 * params.v_g * s.i_d,
            DcMode::Constant { p_dc_in } => p_dc_in,
        };
        plant_derivative(
            s,
            &PlantInputs {
                v_d: ctrl.v_d,
                v_q: ctrl.v_q,
                p_dc_in,
                p_l: load,
            },
            params,
        )
    };

    let mut trace = SimTrace::with_capacity(dt, n);
    for (k, &load) in p_l.iter().enumerate() {
        let t = k as f64 * dt;
        let ctrl = match controller_step(&state, gains, &scenario.clamp, scenario.saturation, params)
        {
            Ok(c) => c,
            Err(Error::SingularState { v_dc }) => {
                trace.status = SimStatus::DcCollapse { t, v_dc };
                break;
            }
            Err(e) => return Err(e),
        };
        let balance = pcc_power_balance(&state, load, params);
        trace.push_row(t, &state, &ctrl, balance.p_inv, balance.p_net, load);
        if k + 1 == n {
            break;
        }
        let step = (|| -> Result<PlantState> {
            let k1 = rhs(&state, load)?;
            let k2 = rhs(&axpy(&state, &k1, 0.5 * dt), load)?;
            let k3 = rhs(&axpy(&state, &k2, 0.5 * dt), load)?;
            let k4 = rhs(&axpy(&state, &k3, dt), load)?;
            Ok(PlantState {
                i_d: state.i_d + dt / 6.0 * (k1.i_d + 2.0 * k2.i_d + 2.0 * k3.i_d + k4.i_d),
                i_q: state.i_q + dt / 6.0 * (k1.i_q + 2.0 * k2.i_q + 2.0 * k3.i_q + k4.i_q),
                v_dc: state.v_dc + dt / 6.0 * (k1.v_dc + 2.0 * k2.v_dc + 2.0 * k3.v_dc + k4.v_dc),
                p_m: state.p_m + dt / 6.0 * (k1.p_m + 2.0 * k2.p_m + 2.0 * k3.p_m + k4.p_m),
            })
        })();
        match step {
            Ok(next) => state = next,
            Err(Error::SingularState { v_dc }) => {
                trace.status = SimStatus::DcCollapse { t: t + dt, v_dc };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

/// Integrates the scalar reduced power dynamics and reports the implied
/// on-manifold states: `i_d` equals the droop reference, `i_q = 0`, and the
/// DC link is held at nominal.
pub fn simulate_reduced(scenario: &Scenario) -> Result<SimTrace> {
    validate_params(scenario.params, scenario.gains, scenario.constraints)?;
    let params = &scenario.params;
    let gains = &scenario.gains;
    let ts = derive_timescales(params, gains, &scenario.constraints);
    if !(scenario.dt > 0.0 && scenario.dt.is_finite()) {
        return Err(Error::Scenario(format!("invalid dt = {}", scenario.dt)));
    }
    if scenario.dt > ts.tau_eff / 20.0 {
        return Err(Error::Scenario(format!(
            "dt too large for the reduced dynamics: dt = {} s, needs dt <= tau_eff/20 = {} s",
            scenario.dt,
            ts.tau_eff / 20.0
        )));
    }
    let dt = scenario.dt;
    let n = sample_count(scenario.horizon, dt);
    let p_l = resolve_load(&scenario.load, scenario.horizon, dt, n)?;

    let mut p_m = match scenario.init {
        InitialState::Explicit(s) => s.p_m,
        InitialState::ReducedEquilibrium => {
            // Fixed point of the reduced dynamics at the initial load.
            let denom = gains.droop_denominator(params);
            (1.5 * params.v_g * gains.k_pp * gains.p_star - p_l[0]) / denom
        }
    };

    let mut trace = SimTrace::with_capacity(dt, n);
    for (k, &load) in p_l.iter().enumerate() {
        let t = k as f64 * dt;
        let i_d = crate::controller::droop_reference(p_m, gains, &scenario.clamp);
        let state = PlantState {
            i_d,
            i_q: 0.0,
            v_dc: params.v_dc_nom,
            p_m,
        };
        let ctrl = controller_step(&state, gains, &scenario.clamp, scenario.saturation, params)?;
        let balance = pcc_power_balance(&state, load, params);
        trace.push_row(t, &state, &ctrl, balance.p_inv, balance.p_net, load);
        if k + 1 == n {
            break;
        }
        let f = |pm: f64| reduced_derivative(pm, load, params, gains);
        let k1 = f(p_m);
        let k2 = f(p_m + 0.5 * dt * k1);
        let k3 = f(p_m + 0.5 * dt * k2);
        let k4 = f(p_m + dt * k3);
        p_m += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Ok(trace)
}

/// Integrates the inner-loop error dynamics with a frozen reference and
/// returns the log-linear fitted decay rate (1/s). The closed-form rate is
/// `(k_d + R) / L`.
pub fn boundary_layer_test(
    params: &SystemParams,
    gains: &ControlGains,
    i_d0: f64,
    i_d_star: f64,
) -> Result<f64> {
    if i_d0 == i_d_star {
        return Err(Error::Scenario(
            "boundary-layer test needs a nonzero initial error".into(),
        ));
    }
    let rate = (gains.k_d + params.r) / params.l;
    let dt = 1.0 / (30.0 * rate);
    let steps = (8.0 * 30.0) as usize; // ~8 decay constants
    let mut e = i_d0 - i_d_star;
    let mut ts = Vec::with_capacity(steps + 1);
    let mut logs = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        ts.push(k as f64 * dt);
        logs.push(e.abs().ln());
        let f = |x: f64| -rate * x;
        let k1 = f(e);
        let k2 = f(e + 0.5 * dt * k1);
        let k3 = f(e + 0.5 * dt * k2);
        let k4 = f(e + dt * k3);
        e += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let (slope, _, r2) = linear_fit(&ts, &logs);
    if r2 < 0.999 {
        return Err(Error::FitQuality { r_squared: r2 });
    }
    Ok(-slope)
}

/// Compares a full and a reduced run of the same scenario past the initial
/// transient window `multiplier * mu * |ln mu|`.
pub fn compare_reduced_full(
    full: &SimTrace,
    reduced: &SimTrace,
    gains: &ControlGains,
    mu: f64,
    multiplier: f64,
) -> Result<ManifoldReport> {
    if full.len() != reduced.len() || (full.dt - reduced.dt).abs() > 1e-15 {
        return Err(Error::Scenario(
            "full and reduced traces do not share a grid".into(),
        ));
    }
    let window_start = multiplier * mu * mu.ln().abs();
    let mut manifold_deviation: f64 = 0.0;
    let mut p_m_deviation: f64 = 0.0;
    let mut seen = false;
    for k in 0..full.len() {
        if full.t[k] <= window_start {
            continue;
        }
        seen = true;
        let manifold = gains.k_pp * (gains.p_star - full.p_m[k]);
        manifold_deviation = manifold_deviation.max((full.i_d[k] - manifold).abs());
        p_m_deviation = p_m_deviation.max((full.p_m[k] - reduced.p_m[k]).abs());
    }
    if !seen {
        return Err(Error::Scenario(format!(
            "trace too short: nothing past the transient window {window_start} s"
        )));
    }
    Ok(ManifoldReport {
        window_start,
        manifold_deviation,
        p_m_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    fn constant_scenario(p_l: f64, horizon: f64) -> Scenario {
        let p = presets::baseline();
        Scenario {
            params: p.system,
            gains: p.gains,
            constraints: p.constraints,
            clamp: ClampConfig::default(),
            saturation: SaturationMode::Monitor,
            load: LoadSpec::Constant(p_l),
            dc_mode: DcMode::Balanced,
            init: InitialState::ReducedEquilibrium,
            horizon,
            dt: 50e-6,
        }
    }

    #[test]
    fn equilibrium_persists_for_one_second() {
        let scenario = constant_scenario(10e3, 1.0);
        let trace = simulate_full(&scenario).unwrap();
        assert_eq!(trace.status, SimStatus::Completed);
        let rel = |v: &[f64]| {
            let first = v[0];
            v.iter()
                .map(|&x| ((x - first) / first.abs().max(1.0)).abs())
                .fold(0.0, f64::max)
        };
        assert!(rel(&trace.i_d) < 1e-8, "i_d drift {}", rel(&trace.i_d));
        assert!(rel(&trace.p_m) < 1e-8, "p_m drift {}", rel(&trace.p_m));
        assert!(rel(&trace.v_dc) < 1e-12);
        assert!(trace.i_q.iter().all(|&x| x.abs() < 1e-9));
        assert!(trace.sat_events.is_empty());
    }

    #[test]
    fn trace_grid_and_length() {
        let scenario = constant_scenario(0.0, 0.01);
        let trace = simulate_full(&scenario).unwrap();
        assert_eq!(trace.len(), 201);
        assert_relative_eq!(trace.t[200], 0.01, max_relative = 1e-12);
    }

    #[test]
    fn zero_horizon_gives_single_row() {
        let scenario = constant_scenario(5e3, 0.0);
        let trace = simulate_full(&scenario).unwrap();
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn coarse_step_rejected() {
        let mut scenario = constant_scenario(0.0, 0.1);
        scenario.dt = 1e-3; // mu/10 = 154 us
        let err = simulate_full(&scenario).unwrap_err();
        assert!(err.to_string().contains("dt too large for boundary layer"));
    }

    #[test]
    fn full_run_is_reproducible() {
        let p = presets::baseline();
        let mut scenario = constant_scenario(0.0, 0.2);
        scenario.load = LoadSpec::Model(p.load.clone());
        let a = simulate_full(&scenario).unwrap();
        let b = simulate_full(&scenario).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dc_collapse_aborts_with_partial_trace() {
        let mut scenario = constant_scenario(0.0, 0.5);
        scenario.dc_mode = DcMode::Constant { p_dc_in: -4e6 };
        scenario.init = InitialState::Explicit(PlantState {
            i_d: 0.0,
            i_q: 0.0,
            v_dc: 300.0,
            p_m: 0.0,
        });
        let trace = simulate_full(&scenario).unwrap();
        match trace.status {
            SimStatus::DcCollapse { t, .. } => assert!(t > 0.0),
            SimStatus::Completed => panic!("expected collapse"),
        }
        assert!(trace.len() > 1);
        assert!(trace.len() < sample_count(scenario.horizon, scenario.dt));
    }

    #[test]
    fn reduced_decays_at_effective_rate() {
        let p = presets::baseline();
        let mut scenario = constant_scenario(0.0, 0.2);
        scenario.dt = 1e-4;
        scenario.init = InitialState::Explicit(PlantState {
            i_d: 0.0,
            i_q: 0.0,
            v_dc: p.system.v_dc_nom,
            p_m: 5e3,
        });
        let trace = simulate_reduced(&scenario).unwrap();
        let ts = derive_timescales(&p.system, &p.gains, &p.constraints);
        // Fixed point at zero load, then log-linear decay toward it.
        let denom = p.gains.droop_denominator(&p.system);
        let p_inf = 1.5 * p.system.v_g * p.gains.k_pp * p.gains.p_star / denom;
        let idx: Vec<usize> = (0..trace.len()).filter(|&k| trace.t[k] < 0.05).collect();
        let xs: Vec<f64> = idx.iter().map(|&k| trace.t[k]).collect();
        let ys: Vec<f64> = idx.iter().map(|&k| (trace.p_m[k] - p_inf).abs().ln()).collect();
        let (slope, _, r2) = linear_fit(&xs, &ys);
        assert!(r2 > 0.999999);
        assert_relative_eq!(-slope, 1.0 / ts.tau_eff, max_relative = 1e-6);
    }

    #[test]
    fn reduced_steady_state_matches_droop_closed_form() {
        let p = presets::baseline();
        let mut scenario = constant_scenario(10e3, 0.5);
        scenario.dt = 1e-4;
        scenario.init = InitialState::Explicit(PlantState::default());
        let trace = simulate_reduced(&scenario).unwrap();
        let ss = crate::design::steady_state(&p.system, &p.gains, 10e3);
        let i_final = *trace.i_d.last().unwrap();
        assert_relative_eq!(i_final, ss.i_d_bar, max_relative = 1e-6);
    }

    #[test]
    fn reduced_without_droop_filters_negated_load() {
        let p = presets::baseline();
        let mut gains = p.gains;
        gains.k_pp = 0.0;
        // Derivative vanishes exactly at P_m = -P_L.
        let d = reduced_derivative(-7.5e3, 7.5e3, &p.system, &gains);
        assert!(d.abs() < 1e-12);
        // And tau_eff degenerates to tau_p: rate toward the fixed point.
        let d2 = reduced_derivative(0.0, 7.5e3, &p.system, &gains);
        assert_relative_eq!(d2, -7.5e3 / p.system.tau_p, max_relative = 1e-12);
    }

    #[test]
    fn boundary_layer_rate_and_half_life() {
        let p = presets::baseline();
        let rate = boundary_layer_test(&p.system, &p.gains, 10.0, 60.0).unwrap();
        assert_relative_eq!(rate, 650.0, max_relative = 0.005);
        let half_life = std::f64::consts::LN_2 / rate;
        assert_relative_eq!(half_life, 1.07e-3, max_relative = 0.01);
    }

    #[test]
    fn boundary_layer_rejects_zero_error() {
        let p = presets::baseline();
        assert!(boundary_layer_test(&p.system, &p.gains, 5.0, 5.0).is_err());
    }

    #[test]
    fn manifold_deviation_small_relative_to_current() {
        let p = presets::baseline();
        let mut scenario = constant_scenario(10e3, 0.3);
        let eq = closed_loop_equilibrium(&p.system, &p.gains, 10e3);
        scenario.init = InitialState::Explicit(PlantState {
            i_d: eq.i_d - 20.0,
            ..eq
        });
        let full = simulate_full(&scenario).unwrap();
        let reduced = simulate_reduced(&scenario).unwrap();
        let ts = derive_timescales(&p.system, &p.gains, &p.constraints);
        let report = compare_reduced_full(&full, &reduced, &p.gains, ts.mu, 5.0).unwrap();
        assert!(report.manifold_deviation.is_finite());
        // Post-transient tracking offset stays well under 10% of the current.
        assert!(report.manifold_deviation < 0.1 * eq.i_d.abs());
    }

    // Near the singular limit (large k_d, vanishing R) the equilibrium sits
    // on the droop line itself, so the manifold deviation collapses to
    // integrator noise.
    #[test]
    fn singular_limit_tracks_manifold_to_integrator_precision() {
        let mut scenario = constant_scenario(10e3, 0.05);
        scenario.params.r = 1e-9;
        scenario.gains.k_d = 12.0;
        scenario.gains.k_q = 12.0;
        scenario.dt = 1e-5;
        let full = simulate_full(&scenario).unwrap();
        let reduced = simulate_reduced(&scenario).unwrap();
        let ts = derive_timescales(&scenario.params, &scenario.gains, &scenario.constraints);
        let report = compare_reduced_full(&full, &reduced, &scenario.gains, ts.mu, 5.0).unwrap();
        assert!(
            report.manifold_deviation < 1e-6,
            "deviation {}",
            report.manifold_deviation
        );
    }

    #[test]
    fn mismatched_traces_rejected() {
        let scenario_a = constant_scenario(10e3, 0.1);
        let mut scenario_b = constant_scenario(10e3, 0.2);
        scenario_b.dt = scenario_a.dt;
        let a = simulate_full(&scenario_a).unwrap();
        let b = simulate_reduced(&scenario_b).unwrap();
        let p = presets::baseline();
        assert!(compare_reduced_full(&a, &b, &p.gains, 1.5e-3, 5.0).is_err());
    }
}
