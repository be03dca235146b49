//! End-to-end checks of the command-line surface.

use std::io::Write;
use std::process::Command;

fn crsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crsim"))
}

#[test]
fn speed_emits_csv_with_expected_header() {
    let out = crsim()
        .args([
            "speed",
            "--deltas-over-eta",
            "0.4333333",
            "--points",
            "8",
            "--eps-max-over-eta",
            "0.4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "delta_over_eta,eps_over_eta,speed_over_g"
    );
    assert_eq!(lines.count(), 8);
}

#[test]
fn speed_maxima_table() {
    let out = crsim()
        .args(["speed", "--maxima", "--deltas-over-eta", "0.3,0.6333333"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("delta_over_eta,speed_max_over_g,eps_opt_over_eta"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn calibrate_report_json_round_trips_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("point.json");
    std::fs::write(
        &cfg_path,
        r#"{ "delta_ct_mhz": 130.0, "eta_c_mhz": 300.0, "eta_t_mhz": 300.0,
             "g_mhz": 3.0, "eps_m_mhz": 40.0, "tau_r_frac": 0.3,
             "drive_frame": "midpoint", "steps_per_ramp": 150 }"#,
    )
    .unwrap();
    let out = crsim()
        .args(["calibrate", "--config"])
        .arg(&cfg_path)
        .args(["--t1-c-ns", "50000", "--t1-t-ns", "50000", "--t2-c-ns", "50000", "--t2-t-ns", "50000"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let tau = v["tau_cnot_ns"].as_f64().unwrap();
    assert!(tau > 150.0 && tau < 200.0, "tau = {tau}");
    assert!(v["infidelity"].as_f64().unwrap() < 0.02);
    assert!(v["decoherence_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn budget_includes_channel_map() {
    let out = crsim()
        .args([
            "budget",
            "--delta-ct-mhz",
            "130",
            "--eps-m-mhz",
            "60",
            "--steps-per-ramp",
            "300",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["budget"]["channels"].as_array().unwrap().len() > 2);
    // the dominant Delta = 130 channel family is |0,m> -> |2,m'>
    assert_eq!(v["budget"]["channels"][0]["to_n"].as_i64().unwrap(), 2);
}

#[test]
fn sweep_writes_csv_file_with_status_column() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.toml");
    let csv_path = dir.path().join("out.csv");
    let mut f = std::fs::File::create(&spec_path).unwrap();
    write!(
        f,
        r#"
axis = "eps_m"
grid = [20.0, 40.0]
gate_type = "basic"
mode = "infidelity_curve"

[fixed]
delta_ct_mhz = 130.0
eta_c_mhz = 300.0
eta_t_mhz = 300.0
g_mhz = 3.0
eps_m_mhz = 40.0
tau_r_frac = 0.3
steps_per_ramp = 150
"#
    )
    .unwrap();
    let out = crsim()
        .args(["sweep", "--spec"])
        .arg(&spec_path)
        .args(["--out"])
        .arg(&csv_path)
        .args(["--workers", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let header = text.lines().next().unwrap();
    for col in [
        "eps_m_mhz",
        "gate_type",
        "status",
        "tau_cnot_ns",
        "phi0",
        "phi1",
        "x_comp",
        "z_comp",
        "infidelity",
        "infid_total",
        "infid_leak",
        "infid_unitary",
        "df_u_c0",
        "df_u_c1",
        "p_leak_out",
        "p_leak_comp",
    ] {
        assert!(header.contains(col), "missing column {col} in {header}");
    }
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains(",ok,"));
}

#[test]
fn rejects_unknown_drive_frame() {
    let out = crsim()
        .args(["calibrate", "--drive-frame", "nonsense"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown drive frame"));
}
