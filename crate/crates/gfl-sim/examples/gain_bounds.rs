//! Gain bounds and the sequential design procedure: hardware fixes the
//! ceiling, timescale separation the floor, then the droop gain backs off
//! its own ceiling and the ramp/admissibility checks close the loop.

use gfl_sim::design::{compute_gain_bounds, sequential_design};
use gfl_sim::presets;

fn main() {
    for (name, cfg) in [
        ("baseline (1200 V)", presets::baseline()),
        ("high-voltage (1500 V)", presets::high_voltage()),
    ] {
        let bounds = compute_gain_bounds(&cfg.system, &cfg.constraints, &cfg.gains)
            .expect("hardware has modulation headroom");
        println!("{name}:");
        println!("  H_min   = {:.1} V of modulation headroom", bounds.h_min);
        println!(
            "  k_d in [max({:.2}, {:.3}), min({:.2}, {:.2})] Ohm  (feasible: {})",
            bounds.kd_sp, bounds.kd_ramp, bounds.kd_volt, bounds.kd_bw, bounds.feasible
        );
        println!("  K_pp ceiling = {:.3} mA/W", bounds.kpp_sp * 1e3);
        println!("  max tolerable ramp = {:.1} MW/s", bounds.rho_p_max * 1e-6);

        match sequential_design(&cfg.system, &cfg.constraints, &cfg.margins, cfg.gains.p_star) {
            Ok(result) => println!(
                "  sequential pick: k_d = {:.3} Ohm, K_pp = {:.3} mA/W, tau_eff = {:.2} ms\n",
                result.gains.k_d,
                result.gains.k_pp * 1e3,
                result.timescales.tau_eff * 1e3
            ),
            Err(e) => println!("  sequential pick failed: {e}\n"),
        }
    }
}
