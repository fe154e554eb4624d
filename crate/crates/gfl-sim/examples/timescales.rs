//! Closed-form fast/slow timescales for the two bundled designs.

use gfl_sim::params::{derive_timescales, validate_params};
use gfl_sim::presets;

fn main() {
    for (name, cfg) in [
        ("baseline (1200 V)", presets::baseline()),
        ("high-voltage (1500 V)", presets::high_voltage()),
    ] {
        let validated =
            validate_params(cfg.system, cfg.gains, cfg.constraints).expect("preset validates");
        let ts = derive_timescales(&validated.system, &validated.gains, &validated.constraints);
        println!("{name}:");
        println!("  inner-loop time constant  mu      = {:.3} ms", ts.mu * 1e3);
        println!("  power-loop time constant  tau_eff = {:.2} ms", ts.tau_eff * 1e3);
        println!(
            "  separation ratio          {:.2} (required >= {}) -> {}",
            ts.ratio,
            cfg.constraints.alpha,
            if ts.separation_ok { "ok" } else { "VIOLATED" }
        );
    }
}
