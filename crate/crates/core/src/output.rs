//! Result files: `records.csv`, `metrics.json`, `run.log`, comparison and
//! sweep tables. All files are written to a temporary sibling first and
//! renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::harness::{
    ComparisonReport, LyapunovCheck, Metrics, RunOutput, Scenario, SimRecord, SweepTable,
    RESIDUAL_WINDOW, SETTLING_BAND,
};

pub const RECORD_HEADER: [&str; 13] = [
    "t", "x", "x_dot", "theta1", "theta1_dot", "theta2", "theta2_dot", "u", "kp", "kd", "kl", "v",
    "v_dot",
];

/// Nine significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    // fold negative zero so identical states print identically
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.8e}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn record_row(r: &SimRecord) -> [f64; 13] {
    let s = &r.state;
    [
        r.t, s.x, s.x_dot, s.theta1, s.theta1_dot, s.theta2, s.theta2_dot, r.u, r.gains.kp,
        r.gains.kd, r.gains.kl, r.v, r.v_dot,
    ]
}

/// Every `decimate`-th record starting with the first.
pub fn records_csv(records: &[SimRecord], decimate: usize) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_HEADER).expect("in-memory write");
    for r in records.iter().step_by(decimate.max(1)) {
        w.write_record(record_row(r).iter().map(|v| format_number(*v)))
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    scenario: &'a str,
    controller: String,
    settling_band: f64,
    residual_window_s: f64,
    steps: usize,
    records_written: usize,
    metrics: &'a Metrics,
    lyapunov_check: LyapunovDoc<'a>,
}

#[derive(Serialize)]
struct LyapunovDoc<'a> {
    #[serde(flatten)]
    check: &'a LyapunovCheck,
    v_dot_nonpositive: bool,
    v_non_increasing: bool,
    v_dot_matches_finite_difference: bool,
}

pub fn metrics_json(sc: &Scenario, out: &RunOutput, records_written: usize) -> String {
    let doc = MetricsDoc {
        scenario: &sc.label,
        controller: sc.kind.to_string(),
        settling_band: SETTLING_BAND,
        residual_window_s: RESIDUAL_WINDOW,
        steps: sc.integrator.steps(),
        records_written,
        metrics: &out.metrics,
        lyapunov_check: LyapunovDoc {
            check: &out.lyapunov,
            v_dot_nonpositive: out.lyapunov.v_dot_ok(),
            v_non_increasing: out.lyapunov.non_increasing(),
            v_dot_matches_finite_difference: out.lyapunov.matches_finite_difference(),
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("metrics serialize");
    s.push('\n');
    s
}

/// Human-readable run summary; deterministic for a given run.
pub fn run_log(sc: &Scenario, out: &RunOutput) -> String {
    let m = &out.metrics;
    let l = &out.lyapunov;
    let mut log = String::new();
    let p = &sc.params;
    log.push_str(&format!(
        "scenario {} ({}): m={} m1={} m2={} l1={} l2={} g={} x_d={}\n",
        sc.label, sc.kind, p.m, p.m1, p.m2, p.l1, p.l2, p.g, sc.x_d
    ));
    log.push_str(&format!(
        "integrator {:?} dt={} t_end={} steps={}\n",
        sc.integrator.method,
        sc.integrator.dt,
        sc.integrator.t_end,
        sc.integrator.steps()
    ));
    log.push_str(&format!(
        "initial gains kp={} kd={} kl={}\n",
        sc.gains0.kp, sc.gains0.kd, sc.gains0.kl
    ));
    match m.settling_time {
        Some(t) => log.push_str(&format!("settled ({}% band) at t = {t} s\n", SETTLING_BAND * 100.0)),
        None => log.push_str("not settled\n"),
    }
    log.push_str(&format!(
        "steady-state error {} m, residual swing {} deg, peak swing {} / {} deg, max |u| {} N\n",
        m.steady_state_error, m.residual_theta, m.peak_theta1, m.peak_theta2, m.max_u
    ));
    log.push_str(&format!("gain clamp events: {}\n", m.clamp_events));
    if !l.v_dot_ok() {
        log.push_str(&format!("WARNING analytic v_dot reached {} (> 0)\n", l.max_v_dot));
    }
    if !l.non_increasing() {
        log.push_str(&format!(
            "WARNING energy function increased by up to {} between samples\n",
            l.max_v_increase
        ));
    }
    if !l.matches_finite_difference() {
        log.push_str(&format!(
            "WARNING analytic v_dot disagrees with finite-difference dV/dt at {} of {} samples \
             (max relative error {}); use the finite difference of the v column as the \
             derivative diagnostic\n",
            l.fd_violations, l.fd_samples, l.fd_max_rel_error
        ));
    }
    log
}

/// Writes `records.csv`, `metrics.json` and `run.log` into `dir`.
pub fn write_bundle(
    dir: &Path,
    sc: &Scenario,
    out: &RunOutput,
    decimate: usize,
) -> std::io::Result<usize> {
    std::fs::create_dir_all(dir)?;
    let csv = records_csv(&out.records, decimate);
    let written = out.records.iter().step_by(decimate.max(1)).count();
    write_atomic(&dir.join("records.csv"), &csv)?;
    write_atomic(&dir.join("metrics.json"), metrics_json(sc, out, written).as_bytes())?;
    write_atomic(&dir.join("run.log"), run_log(sc, out).as_bytes())?;
    Ok(written)
}

pub fn write_comparison(dir: &Path, report: &ComparisonReport) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    write_atomic(&dir.join("comparison.json"), json.as_bytes())?;
    write_atomic(&dir.join("comparison.txt"), report.to_string().as_bytes())
}

pub fn sweep_csv(table: &SweepTable) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["axis", "value", "status"];
    header.extend(Metrics::NAMES);
    header.extend(["lyapunov_max_v_dot", "lyapunov_max_v_increase", "error"]);
    w.write_record(&header).expect("in-memory write");
    for row in &table.rows {
        let mut fields = vec![table.axis.name().to_string(), row.value.to_string()];
        match &row.outcome {
            Ok((m, l)) => {
                fields.push("ok".into());
                fields.extend(m.values().iter().map(|v| match v {
                    Some(v) => format_number(*v),
                    None => "not settled".into(),
                }));
                fields.push(format_number(l.max_v_dot));
                fields.push(format_number(l.max_v_increase));
                fields.push(String::new());
            }
            Err(e) => {
                fields.push("failed".into());
                fields.extend(std::iter::repeat(String::new()).take(Metrics::NAMES.len() + 2));
                fields.push(e.to_string());
            }
        }
        w.write_record(&fields).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
