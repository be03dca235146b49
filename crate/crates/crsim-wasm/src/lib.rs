//! wasm-bindgen surface for the browser demo page.
//!
//! Three interactive operations, all returning JSON strings the page can
//! plot directly: the dimensionless CR speed curve, the drive envelope, and
//! a full single-point calibration with its error budget.

use wasm_bindgen::prelude::*;

use crsim::sweep::calibrate_point;
use crsim::{Config, DriveFrame, GateType, Pulse};

fn frame_from_str(s: &str) -> Result<DriveFrame, JsValue> {
    match s {
        "resonant_c0" => Ok(DriveFrame::ResonantC0),
        "resonant_c1" => Ok(DriveFrame::ResonantC1),
        "midpoint" => Ok(DriveFrame::Midpoint),
        other => other
            .parse::<f64>()
            .map(DriveFrame::ExplicitDelta)
            .map_err(|_| JsValue::from_str(&format!("unknown drive frame '{other}'"))),
    }
}

fn err_js(e: crsim::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Dimensionless speed curve `(eps/eta_c, (eps~_1 - eps~_0)/g)` for one
/// relative detuning. Returns `{"eps_over_eta": [...], "speed_over_g": [...]}`.
#[wasm_bindgen]
pub fn speed_curve_json(
    delta_over_eta: f64,
    eps_max_over_eta: f64,
    points: usize,
) -> Result<String, JsValue> {
    let eta = 300.0;
    let p = crsim::DeviceParams::new(delta_over_eta * eta, eta, eta, 3.0);
    let grid: Vec<f64> = (1..=points.max(2))
        .map(|k| eps_max_over_eta * eta * k as f64 / points.max(2) as f64)
        .collect();
    let curve = crsim::semianalytic::speed_curve(&p, &grid).map_err(err_js)?;
    let (eps, speed): (Vec<f64>, Vec<f64>) = curve.into_iter().unzip();
    Ok(serde_json::json!({ "eps_over_eta": eps, "speed_over_g": speed }).to_string())
}

/// Extremal speed and its amplitude over a detuning range. Returns
/// `{"delta_over_eta": [...], "speed_max_over_g": [...], "eps_opt_over_eta": [...]}`;
/// detunings where the search fails (level resonances) carry nulls.
#[wasm_bindgen]
pub fn speed_maxima_json(
    delta_lo_over_eta: f64,
    delta_hi_over_eta: f64,
    points: usize,
) -> Result<String, JsValue> {
    let eta = 300.0;
    let n = points.max(2);
    let mut deltas = Vec::with_capacity(n);
    let mut speeds: Vec<Option<f64>> = Vec::with_capacity(n);
    let mut eps_opt: Vec<Option<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let r = delta_lo_over_eta + (delta_hi_over_eta - delta_lo_over_eta) * k as f64 / (n - 1) as f64;
        deltas.push(r);
        let p = crsim::DeviceParams::new(r * eta, eta, eta, 3.0);
        match crsim::semianalytic::maximize_speed(&p) {
            Ok(m) => {
                speeds.push(Some(m.speed_over_g));
                eps_opt.push(Some(m.eps_opt_over_eta));
            }
            Err(_) => {
                speeds.push(None);
                eps_opt.push(None);
            }
        }
    }
    Ok(serde_json::json!({
        "delta_over_eta": deltas,
        "speed_max_over_g": speeds,
        "eps_opt_over_eta": eps_opt,
    })
    .to_string())
}

/// Sampled drive envelope for plotting. Returns `{"t_ns": [...], "eps_mhz": [...]}`.
#[wasm_bindgen]
pub fn envelope_json(
    eps_m: f64,
    tau_p: f64,
    tau_r_frac: f64,
    echo: bool,
    points: usize,
) -> Result<String, JsValue> {
    let pulse = if echo {
        Pulse::echo_frac(eps_m, tau_p, tau_r_frac, 600)
    } else {
        Pulse::basic_frac(eps_m, tau_p, tau_r_frac, 600)
    }
    .map_err(err_js)?;
    let n = points.max(2);
    let mut ts = Vec::with_capacity(n);
    let mut es = Vec::with_capacity(n);
    for k in 0..n {
        let t = tau_p * k as f64 / (n - 1) as f64;
        ts.push(t);
        es.push(pulse.envelope(t).map_err(err_js)?);
    }
    Ok(serde_json::json!({ "t_ns": ts, "eps_mhz": es }).to_string())
}

/// Calibrate a CNOT-equivalent gate and decompose its error budget.
/// Returns the combined `{"report": ..., "budget": ...}` JSON.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn calibrate_json(
    delta_ct_mhz: f64,
    g_mhz: f64,
    eta_mhz: f64,
    eps_m_mhz: f64,
    tau_r_frac: f64,
    steps_per_ramp: usize,
    drive_frame: &str,
    echo: bool,
) -> Result<String, JsValue> {
    let cfg = Config {
        delta_ct_mhz,
        eta_c_mhz: eta_mhz,
        eta_t_mhz: eta_mhz,
        g_mhz,
        c_ct: 0.0,
        n_c: 7,
        n_t: 5,
        drive_frame: frame_from_str(drive_frame)?,
        eps_m_mhz,
        tau_r_frac,
        steps_per_ramp,
    };
    let gate = if echo { GateType::Echo } else { GateType::Basic };
    let (report, budget) = calibrate_point(&cfg, gate).map_err(err_js)?;
    Ok(serde_json::json!({ "report": report, "budget": budget }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_curve_json_parses() {
        let s = speed_curve_json(0.4333, 0.5, 16).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["eps_over_eta"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn envelope_json_has_flat_top() {
        let s = envelope_json(40.0, 100.0, 0.3, false, 101).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let eps = v["eps_mhz"].as_array().unwrap();
        assert_eq!(eps[50].as_f64().unwrap(), 40.0);
        assert_eq!(eps[0].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn calibrate_json_smoke() {
        let s = calibrate_json(130.0, 3.0, 300.0, 40.0, 0.3, 150, "midpoint", false).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v["report"]["tau_cnot_ns"].as_f64().unwrap() > 100.0);
        assert!(v["budget"]["p_leak_out"].as_f64().unwrap() >= 0.0);
    }
}
