//! Worst-case modulation magnitudes over the bounded-load trajectory class:
//! the boundary-layer figure allows the full current excursion, the
//! post-transient figure only the quasi-steady tracking error.

use gfl_sim::design::modulation_admissibility;
use gfl_sim::load::certify_bounds;
use gfl_sim::presets;

fn main() {
    for (name, cfg) in [
        ("baseline (1200 V)", presets::baseline()),
        ("high-voltage (1500 V)", presets::high_voltage()),
    ] {
        let cert = certify_bounds(&cfg.load).expect("load model is valid");
        let report =
            modulation_admissibility(&cfg.system, &cfg.gains, &cfg.constraints, cert.delta_p);
        println!("{name} (load amplitude bound {:.0} kW):", cert.delta_p / 1e3);
        println!(
            "  worst current {:.1} A, worst |m| boundary layer {:.3}, post-transient {:.3}",
            report.i_d_bar, report.m_norm_boundary, report.m_norm_post
        );
        println!(
            "  linear modulation region (m_max = {}): {}\n",
            cfg.system.m_max,
            if report.admissible { "guaranteed" } else { "NOT guaranteed" }
        );
    }
}
