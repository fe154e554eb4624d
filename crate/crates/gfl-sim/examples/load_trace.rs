//! Stochastic burst-load generation with its deterministic certificate:
//! every realization stays inside the certified amplitude and ramp bounds.
//! Writes `out/load.csv`.

use std::fmt::Write as _;
use std::fs;

use gfl_sim::load::{certify_bounds, generate_load_trace};
use gfl_sim::presets;

fn main() {
    let cfg = presets::baseline();
    let cert = certify_bounds(&cfg.load).expect("model is valid");
    println!(
        "certificate: |P_L| <= {:.1} kW, |dP_L/dt| <= {:.2} MW/s (filter-state bound {:.1} kW)",
        cert.delta_p / 1e3,
        cert.rho_p / 1e6,
        cert.m_z / 1e3
    );

    let dt = 2e-4;
    let trace = generate_load_trace(&cfg.load, 5.0, dt).expect("trace generates");
    let mean = trace.p_l.iter().sum::<f64>() / trace.len() as f64;
    let peak = trace.p_l.iter().cloned().fold(f64::MIN, f64::max);
    let max_ramp = trace
        .p_l
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / dt)
        .fold(0.0, f64::max);
    println!(
        "realization (seed {}): {} bursts over 5 s, mean {:.2} kW, peak {:.2} kW, max ramp {:.2} MW/s",
        cfg.load.seed,
        trace.arrival_times.len(),
        mean / 1e3,
        peak / 1e3,
        max_ramp / 1e6
    );
    assert!(peak <= cert.delta_p && max_ramp <= cert.rho_p);

    fs::create_dir_all("out").expect("create out/");
    let mut csv = String::from("t_s,P_L_W,P_AI_W\n");
    for k in 0..trace.len() {
        let _ = writeln!(csv, "{},{},{}", trace.times[k], trace.p_l[k], trace.p_ai[k]);
    }
    fs::write("out/load.csv", csv).expect("write trace");
    println!("trace written to out/load.csv");
}
