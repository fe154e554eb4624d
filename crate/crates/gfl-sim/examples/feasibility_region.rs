//! Feasible gain region versus load ramp rate for both designs: where the
//! ramp-tracking bound overtakes the separation bound, and where it closes
//! the region entirely. Writes the curves to `out/feasibility_*.csv`.

use std::fmt::Write as _;
use std::fs;

use gfl_sim::design::feasibility_sweep;
use gfl_sim::presets;

fn main() {
    fs::create_dir_all("out").expect("create out/");
    for (tag, cfg) in [
        ("baseline", presets::baseline()),
        ("highvolt", presets::high_voltage()),
    ] {
        let grid = cfg.feasibility.values();
        let curve = feasibility_sweep(&cfg.system, &cfg.constraints, &grid, cfg.gains.k_pp)
            .expect("sweep succeeds");
        println!(
            "{tag}: ramp bound overtakes separation at {:.2} MW/s, region closes at {:.2} MW/s",
            curve.rho_p_crit * 1e-6,
            curve.rho_p_close * 1e-6
        );
        let mut csv = String::from("rho_P_MW_s,kd_SP,kd_ramp,kd_volt,kd_bw\n");
        for k in 0..curve.rho_p_grid.len() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                curve.rho_p_grid[k] * 1e-6,
                curve.kd_sp_curve[k],
                curve.kd_ramp_curve[k],
                curve.kd_volt_line[k],
                curve.kd_bw_line[k]
            );
        }
        let path = format!("out/feasibility_{tag}.csv");
        fs::write(&path, csv).expect("write curve");
        println!("  curve written to {path}");
    }
}
