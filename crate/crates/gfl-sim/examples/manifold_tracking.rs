//! Slow-manifold tracking: past the boundary layer the d-axis current stays
//! within O(mu) of the droop line, and halving mu (by doubling k_d + R at a
//! fixed droop gain) halves the deviation.

use gfl_sim::controller::{ClampConfig, SaturationMode};
use gfl_sim::params::derive_timescales;
use gfl_sim::presets;
use gfl_sim::sim::{
    compare_reduced_full, simulate_full, simulate_reduced, DcMode, InitialState, LoadSpec,
    Scenario,
};

fn deviation(k_d: f64) -> (f64, f64) {
    let mut cfg = presets::baseline();
    cfg.gains.k_d = k_d;
    cfg.gains.k_q = k_d;
    let ts = derive_timescales(&cfg.system, &cfg.gains, &cfg.constraints);
    let scenario = Scenario {
        params: cfg.system,
        gains: cfg.gains,
        constraints: cfg.constraints,
        clamp: ClampConfig::default(),
        saturation: SaturationMode::Monitor,
        load: LoadSpec::Constant(10e3),
        dc_mode: DcMode::Balanced,
        init: InitialState::ReducedEquilibrium,
        horizon: 0.3,
        dt: cfg.dt,
    };
    let full = simulate_full(&scenario).expect("full run");
    let reduced = simulate_reduced(&scenario).expect("reduced run");
    let report = compare_reduced_full(&full, &reduced, &cfg.gains, ts.mu, cfg.window_multiplier)
        .expect("traces share a grid");
    (ts.mu, report.manifold_deviation)
}

fn main() {
    let base = presets::baseline();
    let (mu_1, dev_1) = deviation(base.gains.k_d);
    // k_d + R doubled => mu halved, tau_eff untouched.
    let (mu_2, dev_2) = deviation(2.0 * base.gains.k_d + base.system.r);
    println!("mu = {:.3} ms -> manifold deviation {:.4} A", mu_1 * 1e3, dev_1);
    println!("mu = {:.3} ms -> manifold deviation {:.4} A", mu_2 * 1e3, dev_2);
    println!("deviation ratio {:.3} (mu ratio {:.3})", dev_1 / dev_2, mu_1 / mu_2);
}
