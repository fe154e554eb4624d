//! Inner-loop boundary layer: with a frozen reference the tracking error
//! decays exponentially at (k_d + R) / L, independent of the slow dynamics.

use gfl_sim::presets;
use gfl_sim::sim::boundary_layer_test;

fn main() {
    let cfg = presets::baseline();
    let fitted = boundary_layer_test(&cfg.system, &cfg.gains, 10.0, 60.0).expect("fit succeeds");
    let expected = (cfg.gains.k_d + cfg.system.r) / cfg.system.l;
    println!("fitted decay rate   {fitted:.2} 1/s");
    println!("closed form (k_d+R)/L = {expected:.2} 1/s");
    println!(
        "error half-life     {:.3} ms",
        std::f64::consts::LN_2 / fitted * 1e3
    );
}
