//! Command implementations behind the `gfl-sim` binary: config in, CSV and
//! JSON artifacts out. Exit codes: 0 success, 1 usage/config/runtime error,
//! 2 infeasible design or failed validation.
//!
//! All outputs are deterministic for a fixed config and seed; re-running a
//! command produces byte-identical files (no timestamps).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{
    audit_bounds, fit_time_constant, fnv1a_hash, modulation_stats, power_sharing_stats,
    MetricsReport,
};
use crate::config::RunConfig;
use crate::design::{
    compute_gain_bounds, feasibility_sweep, modulation_admissibility, sequential_design,
    FeasibilityCurve,
};
use crate::error::{Error, Result};
use crate::load::{certify_bounds, generate_load_trace};
use crate::params::derive_timescales;
use crate::sim::{compare_reduced_full, simulate_full, simulate_reduced, SimStatus, SimTrace};
use crate::validate::{run_acceptance, stochastic_scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

/// Exit code for an error that escaped a command.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } | Error::NoHeadroom { .. } => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Trace CSV with one row per grid point.
pub fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<()> {
    let mut out = String::with_capacity(trace.len() * 96 + 128);
    out.push_str("t_s,id_A,iq_A,Vdc_V,Pm_W,id_star_A,md,mq,m_norm,saturated,Pinv_W,Pnet_W,PL_W\n");
    for k in 0..trace.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            trace.t[k],
            trace.i_d[k],
            trace.i_q[k],
            trace.v_dc[k],
            trace.p_m[k],
            trace.i_d_star[k],
            trace.m_d[k],
            trace.m_q[k],
            trace.m_norm[k],
            u8::from(trace.saturated[k]),
            trace.p_inv[k],
            trace.p_net[k],
            trace.p_l[k],
        );
    }
    write_text(path, &out)
}

fn write_feasibility_csv(path: &Path, curve: &FeasibilityCurve) -> Result<()> {
    let mut out = String::new();
    out.push_str("rho_P_MW_s,kd_SP,kd_ramp,kd_volt,kd_bw\n");
    for k in 0..curve.rho_p_grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            curve.rho_p_grid[k] * 1e-6,
            curve.kd_sp_curve[k],
            curve.kd_ramp_curve[k],
            curve.kd_volt_line[k],
            curve.kd_bw_line[k],
        );
    }
    write_text(path, &out)
}

/// `design`: run the sequential procedure and write the report. Exit 2 with
/// the binding constraint named in the JSON when no feasible gain exists.
pub fn cmd_design(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let path = out_dir.join("design.json");
    match sequential_design(&cfg.system, &cfg.constraints, &cfg.margins, cfg.gains.p_star) {
        Ok(result) => {
            #[derive(serde::Serialize)]
            struct Report<'a> {
                feasible: bool,
                design: &'a crate::design::DesignResult,
            }
            write_json(
                &path,
                &Report {
                    feasible: true,
                    design: &result,
                },
            )?;
            println!(
                "feasible design: k_d = {:.4} Ohm, K_pp = {:.4} mA/W ({})",
                result.gains.k_d,
                result.gains.k_pp * 1e3,
                path.display()
            );
            Ok(EXIT_OK)
        }
        Err(Error::Infeasible { binding, detail }) => {
            #[derive(serde::Serialize)]
            struct Report {
                feasible: bool,
                binding: String,
                detail: String,
            }
            write_json(
                &path,
                &Report {
                    feasible: false,
                    binding: binding.clone(),
                    detail: detail.clone(),
                },
            )?;
            eprintln!("infeasible design: {binding} ({detail})");
            Ok(EXIT_INFEASIBLE)
        }
        Err(Error::NoHeadroom { h_min }) => {
            #[derive(serde::Serialize)]
            struct Report {
                feasible: bool,
                binding: String,
                detail: String,
            }
            write_json(
                &path,
                &Report {
                    feasible: false,
                    binding: "H_min".into(),
                    detail: format!("modulation margin H_min = {h_min:.3} V"),
                },
            )?;
            eprintln!("infeasible hardware: H_min = {h_min:.3} V");
            Ok(EXIT_INFEASIBLE)
        }
        Err(other) => Err(other),
    }
}

/// `simulate`: integrate the configured scenario, write `trace.csv` and
/// `metrics.json`. A DC-link collapse writes the partial trace and exits 1.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let scenario = stochastic_scenario(cfg, cfg.seed);
    let trace = simulate_full(&scenario)?;
    write_trace_csv(&out_dir.join("trace.csv"), &trace)?;
    if let SimStatus::DcCollapse { t, v_dc } = trace.status {
        eprintln!(
            "DC link collapsed at t = {t} s (V_dc = {v_dc} V); partial trace written to {}",
            out_dir.join("trace.csv").display()
        );
        return Ok(EXIT_USAGE);
    }

    let ts = derive_timescales(&cfg.system, &cfg.gains, &cfg.constraints);
    let skip = cfg.window_multiplier * ts.mu * ts.mu.ln().abs();
    let sharing = power_sharing_stats(&trace, skip, ts.tau_eff)?;
    let (m_boundary, m_post) = modulation_stats(&trace, ts.mu);
    let tau_fit = fit_time_constant(&trace, (1.2 * ts.tau_eff, 6.0 * ts.tau_eff))
        .ok()
        .map(|f| f.tau);
    let certificate = certify_bounds(&cfg.load)?;
    let design = crate::design::DesignResult {
        gains: cfg.gains,
        bounds: compute_gain_bounds(&cfg.system, &cfg.constraints, &cfg.gains)?,
        timescales: ts,
        admissibility: modulation_admissibility(
            &cfg.system,
            &cfg.gains,
            &cfg.constraints,
            cfg.constraints.delta_p,
        ),
    };
    let violations = audit_bounds(&trace, &certificate, &design, cfg.system.m_max);
    let manifold = if trace.len() > 1 {
        let reduced = simulate_reduced(&scenario)?;
        compare_reduced_full(&trace, &reduced, &cfg.gains, ts.mu, cfg.window_multiplier)
            .ok()
            .map(|r| r.manifold_deviation)
    } else {
        None
    };
    let metrics = MetricsReport {
        tau_fit,
        tau_expected: ts.tau_eff,
        m_norm_max_boundary: m_boundary,
        m_norm_max_post: m_post,
        mean_p_inv: sharing.mean_p_inv,
        mean_p_net: sharing.mean_p_net,
        mean_p_l: sharing.mean_p_l,
        participation_empirical: sharing.participation,
        sup_p_m: trace.p_m.iter().map(|p| p.abs()).fold(0.0, f64::max),
        bound_violations: violations.total(),
        manifold_deviation: manifold,
        scenario_hash: format!("{:016x}", fnv1a_hash(cfg.canonical_json().as_bytes())),
        seed: cfg.seed,
    };
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    println!(
        "simulated {:.3} s: mean P_inv = {:.1} W, mean P_net = {:.1} W, violations = {}",
        cfg.horizon,
        metrics.mean_p_inv,
        metrics.mean_p_net,
        metrics.bound_violations
    );
    Ok(EXIT_OK)
}

/// `feasibility`: bound curves over the ramp-rate grid, plus critical points.
pub fn cmd_feasibility(
    cfg: &RunConfig,
    overlay: Option<&RunConfig>,
    out_dir: &Path,
) -> Result<i32> {
    let grid = cfg.feasibility.values();
    let curve = feasibility_sweep(&cfg.system, &cfg.constraints, &grid, cfg.gains.k_pp)?;
    write_feasibility_csv(&out_dir.join("feasibility.csv"), &curve)?;

    #[derive(serde::Serialize)]
    struct CurveSummary {
        rho_p_crit_mw_s: f64,
        rho_p_close_mw_s: f64,
    }
    #[derive(serde::Serialize)]
    struct Summary {
        primary: CurveSummary,
        #[serde(skip_serializing_if = "Option::is_none")]
        overlay: Option<CurveSummary>,
    }
    let mut summary = Summary {
        primary: CurveSummary {
            rho_p_crit_mw_s: curve.rho_p_crit * 1e-6,
            rho_p_close_mw_s: curve.rho_p_close * 1e-6,
        },
        overlay: None,
    };
    if let Some(other) = overlay {
        let other_curve =
            feasibility_sweep(&other.system, &other.constraints, &grid, other.gains.k_pp)?;
        write_feasibility_csv(&out_dir.join("feasibility_overlay.csv"), &other_curve)?;
        summary.overlay = Some(CurveSummary {
            rho_p_crit_mw_s: other_curve.rho_p_crit * 1e-6,
            rho_p_close_mw_s: other_curve.rho_p_close * 1e-6,
        });
    }
    write_json(&out_dir.join("feasibility_summary.json"), &summary)?;
    println!(
        "feasible region: ramp bound active above {:.2} MW/s, closes at {:.2} MW/s",
        curve.rho_p_crit * 1e-6,
        curve.rho_p_close * 1e-6
    );
    Ok(EXIT_OK)
}

/// `loadgen`: write the load trace CSV, the arrival sidecar, and the
/// certificate.
pub fn cmd_loadgen(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let mut model = cfg.load.clone();
    model.seed = cfg.seed;
    let trace = generate_load_trace(&model, cfg.horizon, cfg.dt)?;
    let mut out = String::with_capacity(trace.len() * 32 + 32);
    out.push_str("t_s,P_L_W,P_AI_W\n");
    for k in 0..trace.len() {
        let _ = writeln!(out, "{},{},{}", trace.times[k], trace.p_l[k], trace.p_ai[k]);
    }
    write_text(&out_dir.join("load.csv"), &out)?;

    let mut events = String::from("t_s,b_W\n");
    for (t, b) in trace.arrival_times.iter().zip(&trace.batch_sizes) {
        let _ = writeln!(events, "{t},{b}");
    }
    write_text(&out_dir.join("arrivals.csv"), &events)?;
    write_json(&out_dir.join("certificate.json"), &certify_bounds(&model)?)?;
    println!(
        "{} samples, {} bursts written to {}",
        trace.len(),
        trace.arrival_times.len(),
        out_dir.display()
    );
    Ok(EXIT_OK)
}

/// `validate`: run the acceptance suite against this config and the built-in
/// high-voltage companion design; exit 0 only when every criterion passes.
pub fn cmd_validate(cfg: &RunConfig, jobs: usize, out_dir: &Path) -> Result<i32> {
    let hv = crate::presets::high_voltage();
    let report = run_acceptance(cfg, &hv, jobs)?;
    println!("{}", report.summary());
    for criterion in &report.criteria {
        for diag in &criterion.diagnostics {
            println!(
                "  note [{}]: {} ({})",
                criterion.id, diag.label, diag.detail
            );
        }
    }
    write_json(&out_dir.join("validation.json"), &report)?;
    Ok(if report.all_pass {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}
