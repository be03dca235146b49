//! `crsim` — cross-resonance gate simulation from the command line.
//!
//! Subcommands:
//! - `speed`        dimensionless CR speed curves or maxima tables (CSV)
//! - `calibrate`    calibrate one working point, print the gate report (JSON)
//! - `budget`       calibrate and print the full error budget (JSON)
//! - `echo`         like `calibrate`/`budget` for the echo-CR gate
//! - `sweep`        run a sweep-spec file (JSON or TOML), emit CSV
//! - `duration-at`  shortest duration reaching a target infidelity (JSON)

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crsim::calibration::decoherence_estimate;
use crsim::sweep::{self, SweepSpec};
use crsim::{Config, DecoherenceParams, DriveFrame, GateType, ShapeSpec};

#[derive(Parser)]
#[command(name = "crsim", version, about = "two-transmon cross-resonance gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Working-point flags; all mirror config-file keys and override them.
#[derive(Args, Debug, Clone)]
struct PointArgs {
    /// Config file (.json or .toml) with the model keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    delta_ct_mhz: Option<f64>,
    #[arg(long)]
    eta_c_mhz: Option<f64>,
    #[arg(long)]
    eta_t_mhz: Option<f64>,
    #[arg(long)]
    g_mhz: Option<f64>,
    #[arg(long)]
    c_ct: Option<f64>,
    #[arg(long)]
    n_c: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    /// resonant_c0 | resonant_c1 | midpoint | a number (explicit delta, MHz)
    #[arg(long)]
    drive_frame: Option<String>,
    #[arg(long)]
    eps_m_mhz: Option<f64>,
    #[arg(long)]
    tau_r_frac: Option<f64>,
    #[arg(long)]
    steps_per_ramp: Option<usize>,
}

impl PointArgs {
    fn config(&self) -> Result<Config, String> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => Config {
                delta_ct_mhz: 130.0,
                eta_c_mhz: 300.0,
                eta_t_mhz: 300.0,
                g_mhz: 3.0,
                c_ct: 0.0,
                n_c: 7,
                n_t: 5,
                drive_frame: DriveFrame::ResonantC0,
                eps_m_mhz: 40.0,
                tau_r_frac: 0.3,
                steps_per_ramp: 600,
            },
        };
        if let Some(x) = self.delta_ct_mhz {
            cfg.delta_ct_mhz = x;
        }
        if let Some(x) = self.eta_c_mhz {
            cfg.eta_c_mhz = x;
        }
        if let Some(x) = self.eta_t_mhz {
            cfg.eta_t_mhz = x;
        }
        if let Some(x) = self.g_mhz {
            cfg.g_mhz = x;
        }
        if let Some(x) = self.c_ct {
            cfg.c_ct = x;
        }
        if let Some(x) = self.n_c {
            cfg.n_c = x;
        }
        if let Some(x) = self.n_t {
            cfg.n_t = x;
        }
        if let Some(f) = &self.drive_frame {
            cfg.drive_frame = parse_frame(f)?;
        }
        if let Some(x) = self.eps_m_mhz {
            cfg.eps_m_mhz = x;
        }
        if let Some(x) = self.tau_r_frac {
            cfg.tau_r_frac = x;
        }
        if let Some(x) = self.steps_per_ramp {
            cfg.steps_per_ramp = x;
        }
        Ok(cfg)
    }
}

/// Optional coherence times for the closed-form infidelity estimate.
#[derive(Args, Debug, Clone)]
struct DecoherenceArgs {
    #[arg(long)]
    t1_c_ns: Option<f64>,
    #[arg(long)]
    t1_t_ns: Option<f64>,
    #[arg(long)]
    t2_c_ns: Option<f64>,
    #[arg(long)]
    t2_t_ns: Option<f64>,
}

impl DecoherenceArgs {
    fn params(&self) -> Option<DecoherenceParams> {
        match (self.t1_c_ns, self.t1_t_ns, self.t2_c_ns, self.t2_t_ns) {
            (Some(t1_c), Some(t1_t), Some(t2_c), Some(t2_t)) => Some(DecoherenceParams {
                t1_c,
                t1_t,
                t2_c,
                t2_t,
            }),
            _ => None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dimensionless speed tables (semi-analytical).
    Speed {
        /// Detunings as Delta/eta_c ratios, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![-0.5, -0.25, 0.25, 0.4333333333333333, 0.6333333333333333, 0.7, 1.2, 1.8])]
        deltas_over_eta: Vec<f64>,
        /// Largest drive amplitude, in units of eta_c.
        #[arg(long, default_value_t = 1.0)]
        eps_max_over_eta: f64,
        /// Grid points per curve.
        #[arg(long, default_value_t = 64)]
        points: usize,
        /// Emit the maxima table (one row per detuning) instead of curves.
        #[arg(long)]
        maxima: bool,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the CNOT-equivalent basic CR gate at one working point.
    Calibrate {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        decoherence: DecoherenceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate and print the full error budget with the channel map.
    Budget {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        decoherence: DecoherenceArgs,
        /// Evaluate the echo-CR gate instead of the basic one.
        #[arg(long)]
        echo: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the echo-CR gate against the ZX_{pi/2} target.
    Echo {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        decoherence: DecoherenceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep-spec file and write the CSV table.
    Sweep {
        /// Sweep specification file (.json or .toml).
        #[arg(long)]
        spec: PathBuf,
        /// Output path; overrides the spec's `output`, "-" for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to the rayon heuristic).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Shortest CNOT duration reaching a target infidelity.
    DurationAt {
        #[arg(long)]
        target: f64,
        #[arg(long, value_enum, default_value = "basic")]
        gate: GateArg,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum GateArg {
    Basic,
    Echo,
}

impl From<GateArg> for GateType {
    fn from(g: GateArg) -> Self {
        match g {
            GateArg::Basic => GateType::Basic,
            GateArg::Echo => GateType::Echo,
        }
    }
}

fn parse_frame(s: &str) -> Result<DriveFrame, String> {
    match s {
        "resonant_c0" => Ok(DriveFrame::ResonantC0),
        "resonant_c1" => Ok(DriveFrame::ResonantC1),
        "midpoint" => Ok(DriveFrame::Midpoint),
        other => other
            .parse::<f64>()
            .map(DriveFrame::ExplicitDelta)
            .map_err(|_| format!("unknown drive frame '{other}'")),
    }
}

fn load_config(path: &Path) -> Result<Config, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display())),
        _ => serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display())),
    }
}

fn load_sweep_spec(path: &Path) -> Result<SweepSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display())),
        _ => serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display())),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) if p.as_os_str() == "-" => {
            print!("{content}");
            Ok(())
        }
        Some(p) => {
            let mut f = std::fs::File::create(p).map_err(|e| format!("{}: {e}", p.display()))?;
            f.write_all(content.as_bytes())
                .map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn json_pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialize");
    s.push('\n');
    s
}

fn run() -> Result<(), String> {
    match Cli::parse().command {
        Command::Speed {
            deltas_over_eta,
            eps_max_over_eta,
            points,
            maxima,
            point,
            out,
        } => {
            let cfg = point.config()?;
            let device = cfg.device();
            let content = if maxima {
                sweep::speed_maxima_table(&device, &deltas_over_eta).to_csv_string()
            } else {
                let mut blocks = Vec::new();
                for (i, &r) in deltas_over_eta.iter().enumerate() {
                    let mut d = device;
                    d.delta_ct = r * d.eta_c;
                    let grid: Vec<f64> = (1..=points)
                        .map(|k| eps_max_over_eta * d.eta_c * k as f64 / points as f64)
                        .collect();
                    let curve =
                        crsim::semianalytic::speed_curve(&d, &grid).map_err(|e| e.to_string())?;
                    if i == 0 {
                        blocks.push("delta_over_eta,eps_over_eta,speed_over_g".to_string());
                    }
                    for (e, s) in curve {
                        blocks.push(format!(
                            "{},{},{}",
                            crsim::units::fmt_sig12(r),
                            crsim::units::fmt_sig12(e),
                            crsim::units::fmt_sig12(s)
                        ));
                    }
                }
                blocks.join("\n") + "\n"
            };
            emit(out.as_deref(), &content)
        }
        Command::Calibrate {
            point,
            decoherence,
            out,
        } => {
            let cfg = point.config()?;
            let (mut report, _) =
                sweep::calibrate_point(&cfg, GateType::Basic).map_err(|e| e.to_string())?;
            if let Some(dec) = decoherence.params() {
                report.decoherence_estimate = Some(decoherence_estimate(report.tau_cnot_ns, &dec));
            }
            emit(out.as_deref(), &json_pretty(&report))
        }
        Command::Budget {
            point,
            decoherence,
            echo,
            out,
        } => {
            let cfg = point.config()?;
            let gate = if echo { GateType::Echo } else { GateType::Basic };
            let (mut report, budget) =
                sweep::calibrate_point(&cfg, gate).map_err(|e| e.to_string())?;
            if let Some(dec) = decoherence.params() {
                report.decoherence_estimate = Some(decoherence_estimate(report.tau_cnot_ns, &dec));
            }
            #[derive(serde::Serialize)]
            struct Full<'a> {
                report: &'a crsim::GateReport,
                budget: &'a crsim::BudgetReport,
            }
            emit(
                out.as_deref(),
                &json_pretty(&Full {
                    report: &report,
                    budget: &budget,
                }),
            )
        }
        Command::Echo {
            point,
            decoherence,
            out,
        } => {
            let cfg = point.config()?;
            let (mut report, _) =
                sweep::calibrate_point(&cfg, GateType::Echo).map_err(|e| e.to_string())?;
            if let Some(dec) = decoherence.params() {
                report.decoherence_estimate = Some(decoherence_estimate(report.tau_cnot_ns, &dec));
            }
            emit(out.as_deref(), &json_pretty(&report))
        }
        Command::Sweep { spec, out, workers } => {
            if let Some(n) = workers {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| e.to_string())?;
            }
            let spec = load_sweep_spec(&spec)?;
            let table = sweep::run_sweep(&spec).map_err(|e| e.to_string())?;
            let target = out.or_else(|| spec.output.as_ref().map(PathBuf::from));
            emit(target.as_deref(), &table.to_csv_string())
        }
        Command::DurationAt {
            target,
            gate,
            point,
            out,
        } => {
            let cfg = point.config()?;
            let device = cfg.device();
            let shape = ShapeSpec::new(cfg.tau_r_frac, cfg.steps_per_ramp);
            let d = sweep::duration_for_infidelity(&device, &shape, gate.into(), target)
                .map_err(|e| e.to_string())?;
            emit(out.as_deref(), &json_pretty(&d))
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
