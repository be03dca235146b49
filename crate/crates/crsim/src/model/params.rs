//! Device parameters and the on-disk configuration schema.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Selects the drive frequency `omega_d` relative to the dressed
/// target-qubit frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveFrame {
    /// On resonance with the target qubit when the control qubit is |0>.
    ResonantC0,
    /// On resonance with the target qubit when the control qubit is |1>.
    ResonantC1,
    /// Exactly in between the two resonances.
    Midpoint,
    /// Explicit detuning `delta = omega_t - omega_d` in MHz.
    ExplicitDelta(f64),
}

impl Default for DriveFrame {
    fn default() -> Self {
        DriveFrame::ResonantC0
    }
}

/// Physical constants of the two-qubit system.
///
/// All frequencies are ordinary frequencies in MHz; the bare target-qubit
/// frequency is the zero of the frequency axis, so `delta_ct` is both the
/// qubit-qubit detuning and the bare control-qubit frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Qubit-qubit detuning (omega_c - omega_t), MHz.
    pub delta_ct: f64,
    /// Control-qubit anharmonicity, MHz (positive for transmons).
    pub eta_c: f64,
    /// Target-qubit anharmonicity, MHz (positive for transmons).
    pub eta_t: f64,
    /// Qubit-qubit coupling, MHz.
    pub g: f64,
    /// Real microwave crosstalk coefficient (drive leaking onto the target).
    pub c_ct: f64,
    /// Number of simulated control-qubit levels.
    pub n_c: usize,
    /// Number of simulated target-qubit levels.
    pub n_t: usize,
    /// Drive-frequency selection rule.
    pub drive_frame: DriveFrame,
}

impl DeviceParams {
    /// Typical parameters used throughout: `eta/2pi = 300 MHz`,
    /// `g/2pi = 3 MHz`, 7x5 levels, drive resonant for control |0>.
    pub fn new(delta_ct: f64, eta_c: f64, eta_t: f64, g: f64) -> Self {
        DeviceParams {
            delta_ct,
            eta_c,
            eta_t,
            g,
            c_ct: 0.0,
            n_c: 7,
            n_t: 5,
            drive_frame: DriveFrame::ResonantC0,
        }
    }

    /// Shorthand for the paper-style working point (equal anharmonicities).
    pub fn standard(delta_ct: f64) -> Self {
        Self::new(delta_ct, 300.0, 300.0, 3.0)
    }

    pub fn with_drive_frame(mut self, frame: DriveFrame) -> Self {
        self.drive_frame = frame;
        self
    }

    pub fn with_crosstalk(mut self, c_ct: f64) -> Self {
        self.c_ct = c_ct;
        self
    }

    pub fn with_levels(mut self, n_c: usize, n_t: usize) -> Self {
        self.n_c = n_c;
        self.n_t = n_t;
        self
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.n_c * self.n_t
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_c > 0.0) {
            return Err(Error::InvalidParams(format!("eta_c = {} must be > 0", self.eta_c)));
        }
        if !(self.eta_t > 0.0) {
            return Err(Error::InvalidParams(format!("eta_t = {} must be > 0", self.eta_t)));
        }
        if self.n_c < 3 {
            return Err(Error::InvalidParams(format!("n_c = {} must be >= 3", self.n_c)));
        }
        if self.n_t < 3 {
            return Err(Error::InvalidParams(format!("n_t = {} must be >= 3", self.n_t)));
        }
        if !self.delta_ct.is_finite() || !self.g.is_finite() || !self.c_ct.is_finite() {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Coherence times for the closed-form infidelity estimate; all in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceParams {
    pub t1_c: f64,
    pub t1_t: f64,
    pub t2_c: f64,
    pub t2_t: f64,
}

fn default_n_c() -> usize {
    7
}
fn default_n_t() -> usize {
    5
}
fn default_steps_per_ramp() -> usize {
    600
}
fn default_tau_r_frac() -> f64 {
    0.3
}

/// On-disk configuration (JSON or TOML), key names fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub delta_ct_mhz: f64,
    pub eta_c_mhz: f64,
    pub eta_t_mhz: f64,
    pub g_mhz: f64,
    #[serde(default)]
    pub c_ct: f64,
    #[serde(default = "default_n_c")]
    pub n_c: usize,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default)]
    pub drive_frame: DriveFrame,
    pub eps_m_mhz: f64,
    #[serde(default = "default_tau_r_frac")]
    pub tau_r_frac: f64,
    #[serde(default = "default_steps_per_ramp")]
    pub steps_per_ramp: usize,
}

impl Config {
    pub fn device(&self) -> DeviceParams {
        DeviceParams {
            delta_ct: self.delta_ct_mhz,
            eta_c: self.eta_c_mhz,
            eta_t: self.eta_t_mhz,
            g: self.g_mhz,
            c_ct: self.c_ct,
            n_c: self.n_c,
            n_t: self.n_t,
            drive_frame: self.drive_frame,
        }
    }

    pub fn from_device(p: &DeviceParams, eps_m: f64, tau_r_frac: f64, steps_per_ramp: usize) -> Self {
        Config {
            delta_ct_mhz: p.delta_ct,
            eta_c_mhz: p.eta_c,
            eta_t_mhz: p.eta_t,
            g_mhz: p.g,
            c_ct: p.c_ct,
            n_c: p.n_c,
            n_t: p.n_t,
            drive_frame: p.drive_frame,
            eps_m_mhz: eps_m,
            tau_r_frac,
            steps_per_ramp,
        }
    }
}
