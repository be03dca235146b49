//! Declarative parameter sweeps and machine-readable tables.
//!
//! A [`SweepSpec`] names one axis, a grid of values, the fixed working
//! point, the gate flavor and a mode; [`run_sweep`] calibrates every grid
//! point, decomposes its error budget and assembles one CSV row per point.
//! Failed points (level resonances, no duration bracket) are kept as rows
//! with an error class in the `status` column rather than dropped. All
//! floats are emitted with 12 significant digits, and identical specs
//! produce byte-identical tables regardless of worker count.

use serde::{Deserialize, Serialize};

use crate::calibration::{self, CalibratedGate, GateReport, GateType, ShapeSpec};
use crate::error::{Error, Result};
use crate::errorbudget::{self, BudgetReport};
use crate::model::{Config, DeviceParams, DriveFrame};
use crate::propagator::Propagator;
use crate::semianalytic;
use crate::units::fmt_sig12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    EpsM,
    DeltaCt,
    G,
    TauRFrac,
    CCt,
    DriveFrame,
}

impl SweepAxis {
    pub fn column_name(&self) -> &'static str {
        match self {
            SweepAxis::EpsM => "eps_m_mhz_axis",
            SweepAxis::DeltaCt => "delta_ct_mhz",
            SweepAxis::G => "g_mhz",
            SweepAxis::TauRFrac => "tau_r_frac",
            SweepAxis::CCt => "c_ct",
            SweepAxis::DriveFrame => "drive_frame",
        }
    }
}

/// A grid entry: a number for numeric axes, a frame for the drive-frame axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Number(f64),
    Frame(DriveFrame),
}

impl GridValue {
    fn label(&self) -> String {
        match self {
            GridValue::Number(x) => fmt_sig12(*x),
            GridValue::Frame(f) => match f {
                DriveFrame::ResonantC0 => "resonant_c0".into(),
                DriveFrame::ResonantC1 => "resonant_c1".into(),
                DriveFrame::Midpoint => "midpoint".into(),
                DriveFrame::ExplicitDelta(d) => format!("explicit_delta:{}", fmt_sig12(*d)),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    DurationCurve,
    InfidelityCurve,
    Parametric,
    SpeedCurve,
    Budget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<GridValue>,
    pub fixed: Config,
    pub gate_type: GateType,
    pub mode: SweepMode,
    /// Output path; `None` leaves writing to the caller.
    #[serde(default)]
    pub output: Option<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParams("empty sweep grid".into()));
        }
        for v in &self.grid {
            match (self.axis, v) {
                (SweepAxis::DriveFrame, GridValue::Frame(_)) => {}
                (SweepAxis::DriveFrame, GridValue::Number(_)) => {
                    return Err(Error::InvalidParams(
                        "drive_frame axis needs frame names in the grid".into(),
                    ))
                }
                (_, GridValue::Frame(_)) => {
                    return Err(Error::InvalidParams(
                        "numeric axis needs numeric grid values".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// A rendered table: header plus stringified rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SweepTable {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// One calibrated-and-budgeted grid point.
struct PointOutcome {
    label: String,
    result: std::result::Result<(GateReport, BudgetReport), Error>,
}

fn apply_axis(cfg: &Config, axis: SweepAxis, value: GridValue) -> Config {
    let mut c = cfg.clone();
    match (axis, value) {
        (SweepAxis::EpsM, GridValue::Number(x)) => c.eps_m_mhz = x,
        (SweepAxis::DeltaCt, GridValue::Number(x)) => c.delta_ct_mhz = x,
        (SweepAxis::G, GridValue::Number(x)) => c.g_mhz = x,
        (SweepAxis::TauRFrac, GridValue::Number(x)) => c.tau_r_frac = x,
        (SweepAxis::CCt, GridValue::Number(x)) => c.c_ct = x,
        (SweepAxis::DriveFrame, GridValue::Frame(f)) => c.drive_frame = f,
        _ => unreachable!("validated"),
    }
    c
}

/// Calibrate one working point and decompose its budget.
pub fn calibrate_point(cfg: &Config, gate: GateType) -> Result<(GateReport, BudgetReport)> {
    let device = cfg.device();
    let prop = Propagator::new(&device)?;
    let shape = ShapeSpec::new(cfg.tau_r_frac, cfg.steps_per_ramp);
    let cal = calibration::find_cnot_duration(&prop, gate, &shape, cfg.eps_m_mhz)?;
    let budget = errorbudget::decompose(&cal, device.n_t)?;
    Ok((cal.report, budget))
}

/// As [`calibrate_point`] but returning the full calibrated gate.
pub fn calibrate_point_full(cfg: &Config, gate: GateType) -> Result<(CalibratedGate, BudgetReport)> {
    let device = cfg.device();
    let prop = Propagator::new(&device)?;
    let shape = ShapeSpec::new(cfg.tau_r_frac, cfg.steps_per_ramp);
    let cal = calibration::find_cnot_duration(&prop, gate, &shape, cfg.eps_m_mhz)?;
    let budget = errorbudget::decompose(&cal, device.n_t)?;
    Ok((cal, budget))
}

fn compute_points(spec: &SweepSpec) -> Vec<PointOutcome> {
    let job = |value: &GridValue| -> PointOutcome {
        let cfg = apply_axis(&spec.fixed, spec.axis, *value);
        PointOutcome {
            label: value.label(),
            result: calibrate_point(&cfg, spec.gate_type),
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        spec.grid.par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        spec.grid.iter().map(job).collect()
    }
}

fn error_class(e: &Error) -> &'static str {
    match e {
        Error::LabelingAmbiguous { .. } => "labeling_ambiguous",
        Error::NoBracket { .. } => "no_bracket",
        Error::ContinuationLost { .. } => "continuation_lost",
        Error::DivisionSingularity(_) => "division_singularity",
        Error::StepTooCoarse { .. } => "step_too_coarse",
        Error::DegenerateBlock { .. } => "degenerate_block",
        Error::RankDeficientBlock { .. } => "rank_deficient_block",
        Error::UnwrapAmbiguous { .. } => "unwrap_ambiguous",
        Error::TargetUnreachable { .. } => "target_unreachable",
        Error::InvalidParams(_) | Error::InvalidPulse(_) => "invalid_input",
        Error::Io(_) => "io",
    }
}

/// Run a sweep and assemble the table (rows in grid order).
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    if spec.mode == SweepMode::SpeedCurve {
        return speed_curve_table(spec);
    }
    let points = compute_points(spec);

    // Global top-8 leakage channels across the table, ranked by peak
    // probability, give the channel column set.
    let mut channel_peak: Vec<(String, f64)> = Vec::new();
    for p in &points {
        if let Ok((_, budget)) = &p.result {
            for ch in &budget.channels {
                let name = ch.column_name();
                match channel_peak.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, peak)) => *peak = peak.max(ch.probability),
                    None => channel_peak.push((name, ch.probability)),
                }
            }
        }
    }
    channel_peak.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    channel_peak.truncate(8);
    let channel_cols: Vec<String> = channel_peak.into_iter().map(|(n, _)| n).collect();

    let mut columns: Vec<String> = vec![
        spec.axis.column_name().to_string(),
        "gate_type".into(),
        "status".into(),
        "eps_m_mhz".into(),
        "tau_cnot_ns".into(),
        "phi0".into(),
        "phi1".into(),
        "x_comp".into(),
        "z_comp".into(),
        "infidelity".into(),
        "infid_total".into(),
        "infid_leak".into(),
        "infid_unitary".into(),
        "df_u_c0".into(),
        "df_u_c1".into(),
        "p_leak_out".into(),
        "p_leak_comp".into(),
    ];
    columns.extend(channel_cols.iter().cloned());

    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let mut row = vec![p.label.clone(), spec.gate_type.to_string()];
        match p.result {
            Ok((report, budget)) => {
                row.push("ok".into());
                row.push(fmt_sig12(report.eps_m_mhz));
                row.push(fmt_sig12(report.tau_cnot_ns));
                row.push(fmt_sig12(report.angles.phi0));
                row.push(fmt_sig12(report.angles.phi1));
                row.push(fmt_sig12(report.x_comp));
                row.push(fmt_sig12(report.z_comp));
                row.push(fmt_sig12(report.infidelity));
                row.push(fmt_sig12(1.0 - budget.f_mu));
                row.push(fmt_sig12(1.0 - budget.f_mmtilde));
                row.push(fmt_sig12(1.0 - budget.f_mtilde_u));
                row.push(fmt_sig12(budget.df_u_c0));
                row.push(fmt_sig12(budget.df_u_c1));
                row.push(fmt_sig12(budget.p_leak_out));
                row.push(fmt_sig12(budget.p_leak_comp));
                for name in &channel_cols {
                    let p = budget
                        .channels
                        .iter()
                        .find(|c| c.column_name() == *name)
                        .map(|c| c.probability)
                        .unwrap_or(0.0);
                    row.push(fmt_sig12(p));
                }
            }
            Err(e) => {
                row.push(error_class(&e).into());
                for _ in 0..(columns.len() - 3) {
                    row.push(String::new());
                }
            }
        }
        rows.push(row);
    }
    Ok(SweepTable { columns, rows })
}

/// Semi-analytical speed table `(delta_over_eta, eps_over_eta, speed_over_g)`
/// for the fixed device over the grid of drive amplitudes (MHz).
fn speed_curve_table(spec: &SweepSpec) -> Result<SweepTable> {
    let device = spec.fixed.device();
    let grid: Vec<f64> = spec
        .grid
        .iter()
        .map(|v| match v {
            GridValue::Number(x) => Ok(*x),
            GridValue::Frame(_) => Err(Error::InvalidParams(
                "speed_curve mode needs numeric eps grid".into(),
            )),
        })
        .collect::<Result<_>>()?;
    let curve = semianalytic::speed_curve(&device, &grid)?;
    let columns = vec![
        "delta_over_eta".to_string(),
        "eps_over_eta".to_string(),
        "speed_over_g".to_string(),
    ];
    let d_over_eta = device.delta_ct / device.eta_c;
    let rows = curve
        .into_iter()
        .map(|(e, s)| vec![fmt_sig12(d_over_eta), fmt_sig12(e), fmt_sig12(s)])
        .collect();
    Ok(SweepTable { columns, rows })
}

/// Speed-maxima table over a detuning grid:
/// `(delta_over_eta, speed_max_over_g, eps_opt_over_eta)`.
pub fn speed_maxima_table(p_template: &DeviceParams, delta_over_eta: &[f64]) -> SweepTable {
    let columns = vec![
        "delta_over_eta".to_string(),
        "speed_max_over_g".to_string(),
        "eps_opt_over_eta".to_string(),
    ];
    let rows = delta_over_eta
        .iter()
        .map(|&r| {
            let mut p = *p_template;
            p.delta_ct = r * p.eta_c;
            match semianalytic::maximize_speed(&p) {
                Ok(m) => vec![
                    fmt_sig12(r),
                    fmt_sig12(m.speed_over_g),
                    fmt_sig12(m.eps_opt_over_eta),
                ],
                Err(_) => vec![fmt_sig12(r), String::new(), String::new()],
            }
        })
        .collect();
    SweepTable { columns, rows }
}

/// Result of the duration-at-infidelity search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DurationAtTarget {
    pub tau_cnot_ns: f64,
    pub eps_m_mhz: f64,
    pub infidelity: f64,
    /// Grid points evaluated before the target was met.
    pub scanned: usize,
}

/// Shortest CNOT-equivalent duration with intrinsic infidelity at or below
/// `target`, scanning the drive amplitude downward from the
/// speed-maximizing value (the duration grows monotonically as the
/// amplitude shrinks, so the first qualifying point is the fastest).
pub fn duration_for_infidelity(
    p: &DeviceParams,
    shape: &ShapeSpec,
    gate: GateType,
    target: f64,
) -> Result<DurationAtTarget> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParams(format!(
            "target infidelity {target} outside (0, 1)"
        )));
    }
    let prop = Propagator::new(p)?;
    let opt = semianalytic::maximize_speed(p)?;
    let eps_start = opt.eps_opt_over_eta * p.eta_c;
    let eps_floor = (eps_start / 64.0).max(1.0);
    let mut eps = eps_start;
    let mut scanned = 0usize;
    while eps >= eps_floor {
        scanned += 1;
        // respect the coarse-step guard at high amplitudes: bump the ramp
        // step count where the requested one would be rejected. The search
        // scans durations past the prediction, so size for twice the guess.
        let shape_here = match semianalytic::predict_duration(p, eps, shape.tau_r_frac) {
            Ok(tau_pred) => {
                let need = prop.min_steps_per_ramp(eps, 2.0 * shape.tau_r_frac * tau_pred);
                ShapeSpec::new(shape.tau_r_frac, shape.steps_per_ramp.max(need))
            }
            Err(_) => *shape,
        };
        if let Ok(cal) = calibration::find_cnot_duration(&prop, gate, &shape_here, eps) {
            if cal.report.infidelity <= target {
                return Ok(DurationAtTarget {
                    tau_cnot_ns: cal.report.tau_cnot_ns,
                    eps_m_mhz: eps,
                    infidelity: cal.report.infidelity,
                    scanned,
                });
            }
        }
        eps *= 0.94;
    }
    Err(Error::TargetUnreachable { target })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            axis: SweepAxis::EpsM,
            grid: vec![GridValue::Number(20.0), GridValue::Number(40.0)],
            fixed: Config::from_device(&DeviceParams::standard(130.0), 40.0, 0.3, 150),
            gate_type: GateType::Basic,
            mode: SweepMode::InfidelityCurve,
            output: None,
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = small_spec();
        let t1 = run_sweep(&spec).unwrap();
        let t2 = run_sweep(&spec).unwrap();
        assert_eq!(t1.to_csv_string(), t2.to_csv_string());
        assert_eq!(t1.rows.len(), 2);
        assert!(t1.rows.iter().all(|r| r[2] == "ok"));
    }

    #[test]
    fn failed_points_get_status_rows() {
        let mut spec = small_spec();
        // Delta = eta_c is a hard level resonance: labeling must fail and the
        // point must be kept as an error row
        spec.axis = SweepAxis::DeltaCt;
        spec.grid = vec![GridValue::Number(130.0), GridValue::Number(300.0)];
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0][2], "ok");
        assert_eq!(t.rows[1][2], "labeling_ambiguous");
        // error rows keep the full width
        assert_eq!(t.rows[1].len(), t.columns.len());
    }

    #[test]
    fn spec_roundtrips_through_json() {
        let spec = small_spec();
        let s = serde_json::to_string(&spec).unwrap();
        let back: SweepSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.grid, spec.grid);
        assert_eq!(back.axis, spec.axis);
        // frame axis roundtrip
        let spec2 = SweepSpec {
            axis: SweepAxis::DriveFrame,
            grid: vec![
                GridValue::Frame(DriveFrame::ResonantC0),
                GridValue::Frame(DriveFrame::Midpoint),
            ],
            ..spec
        };
        let s2 = serde_json::to_string(&spec2).unwrap();
        let back2: SweepSpec = serde_json::from_str(&s2).unwrap();
        assert_eq!(back2.grid, spec2.grid);
    }

    #[test]
    fn speed_curve_mode_emits_dimensionless_table() {
        let mut spec = small_spec();
        spec.mode = SweepMode::SpeedCurve;
        spec.grid = (1..=16)
            .map(|k| GridValue::Number(k as f64 * 300.0 / 16.0))
            .collect();
        let t = run_sweep(&spec).unwrap();
        assert_eq!(
            t.columns,
            vec!["delta_over_eta", "eps_over_eta", "speed_over_g"]
        );
        assert_eq!(t.rows.len(), 16);
        let e: f64 = t.rows[15][1].parse().unwrap();
        assert!((e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duration_target_relaxation_is_monotone() {
        let p = DeviceParams::standard(130.0);
        let shape = ShapeSpec::new(0.3, 150);
        let loose = duration_for_infidelity(&p, &shape, GateType::Basic, 0.5).unwrap();
        let tight = duration_for_infidelity(&p, &shape, GateType::Basic, 0.003).unwrap();
        assert!(loose.tau_cnot_ns <= tight.tau_cnot_ns + 1e-9);
    }
}
