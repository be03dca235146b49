//! Gate angles, fidelity against the restricted unitary class, and the
//! CNOT-equivalent duration search.
//!
//! The reference class is a control-conditioned target x-rotation,
//!
//! ```text
//! U = e^{i theta_0} |0><0|_c Rx(phi_0) + e^{i theta_1} |1><1|_c Rx(phi_1),
//! ```
//!
//! whose fidelity-optimal angles are closed-form in the elements of the
//! projected evolution `M`. A CNOT is a member with `phi_1 - phi_0 = pi`
//! (mod 2 pi) plus single-qubit compensations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{trace, unitarity_defect, CMatrix, C64, C_I};
use crate::model::{DecoherenceParams, Pulse};
use crate::propagator::{EvolutionResult, IdealOp, Propagator};
use crate::semianalytic;
use crate::units::{wrap_angle, MHZ_TO_ANG};

/// Angle tolerance of the duration bisection, rad.
const PHASE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateType {
    Basic,
    Echo,
}

impl std::fmt::Display for GateType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateType::Basic => write!(f, "basic"),
            GateType::Echo => write!(f, "echo"),
        }
    }
}

/// Pulse-shape fractions shared by a calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeSpec {
    /// Ramp fraction `tau_r / tau_p`.
    pub tau_r_frac: f64,
    /// Integration steps per individual ramp.
    pub steps_per_ramp: usize,
}

impl ShapeSpec {
    pub fn new(tau_r_frac: f64, steps_per_ramp: usize) -> Self {
        ShapeSpec {
            tau_r_frac,
            steps_per_ramp,
        }
    }

    pub fn pulse(&self, gate: GateType, eps_m: f64, tau_p: f64) -> Result<Pulse> {
        match gate {
            GateType::Basic => Pulse::basic_frac(eps_m, tau_p, self.tau_r_frac, self.steps_per_ramp),
            GateType::Echo => Pulse::echo_frac(eps_m, tau_p, self.tau_r_frac, self.steps_per_ramp),
        }
    }
}

impl Default for ShapeSpec {
    fn default() -> Self {
        ShapeSpec::new(0.3, 600)
    }
}

/// Extracted gate angles; `phi` angles wrapped to (-pi, pi].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GateAngles {
    pub phi0: f64,
    pub phi1: f64,
    pub theta0: f64,
    pub theta1: f64,
    /// `theta_1' - theta_0'` in the control-qubit frame; equals
    /// `theta1 - theta0` until the frame correction is applied.
    pub theta_diff_lab: f64,
}

impl GateAngles {
    pub fn new(phi0: f64, phi1: f64, theta0: f64, theta1: f64) -> Self {
        GateAngles {
            phi0,
            phi1,
            theta0,
            theta1,
            theta_diff_lab: wrap_angle(theta1 - theta0),
        }
    }

    /// Apply the frame correction `(omega_c^t0 - omega_d) tau` that moves
    /// the phase difference into the control-qubit rotating frame.
    pub fn with_frame_correction(mut self, offset_mhz: f64, tau_ns: f64) -> Self {
        self.theta_diff_lab =
            wrap_angle(self.theta1 - self.theta0 + offset_mhz * MHZ_TO_ANG * tau_ns);
        self
    }
}

/// Fidelity-optimal angles of the restricted class for a projected
/// evolution `M` (rows/columns |00>, |01>, |10>, |11>).
pub fn extract_angles(m: &CMatrix) -> Result<GateAngles> {
    debug_assert_eq!(m.nrows(), 4);
    let block = |r: usize| {
        let (a, b, c, d) = (m[(r, r)], m[(r + 1, r + 1)], m[(r, r + 1)], m[(r + 1, r)]);
        (a + b + c + d, a + b - c - d)
    };
    let (num0, den0) = block(0);
    let (num1, den1) = block(2);
    for (idx, (num, den)) in [(0usize, (num0, den0)), (1, (num1, den1))] {
        if num.norm() < 1e-12 && den.norm() < 1e-12 {
            return Err(Error::DegenerateBlock { block: idx });
        }
    }
    let phi0 = wrap_angle(den0.arg() - num0.arg());
    let phi1 = wrap_angle(den1.arg() - num1.arg());
    let theta0 = ((m[(0, 0)] + m[(1, 1)]) * (0.5 * phi0).cos()
        + C_I * (m[(0, 1)] + m[(1, 0)]) * (0.5 * phi0).sin())
    .arg();
    let theta1 = ((m[(2, 2)] + m[(3, 3)]) * (0.5 * phi1).cos()
        + C_I * (m[(2, 3)] + m[(3, 2)]) * (0.5 * phi1).sin())
    .arg();
    Ok(GateAngles::new(phi0, phi1, theta0, theta1))
}

/// Assemble the class member with the given angles.
pub fn assemble_restricted_unitary(a: &GateAngles) -> CMatrix {
    let mut u = CMatrix::zeros(4, 4);
    for (off, phi, theta) in [(0usize, a.phi0, a.theta0), (2, a.phi1, a.theta1)] {
        let ph = C64::from_polar(1.0, theta);
        let c = C64::new((0.5 * phi).cos(), 0.0);
        let s = C64::new(0.0, -(0.5 * phi).sin());
        u[(off, off)] = ph * c;
        u[(off + 1, off + 1)] = ph * c;
        u[(off, off + 1)] = ph * s;
        u[(off + 1, off)] = ph * s;
    }
    u
}

/// Average-gate fidelity between the (generally non-unitary) projection `M`
/// and a unitary `U`: `Tr(M^H M)/20 + |Tr(M^H U)|^2/20` for d = 4.
pub fn fidelity(m: &CMatrix, u: &CMatrix) -> f64 {
    debug_assert!(unitarity_defect(u) < 1e-10);
    let mm = m.adjoint() * m;
    let mu = m.adjoint() * u;
    (trace(&mm).re + trace(&mu).norm_sqr()) / 20.0
}

/// The closest member of the restricted class and its fidelity.
pub fn closest_restricted_unitary(m: &CMatrix) -> Result<(CMatrix, f64, GateAngles)> {
    let angles = extract_angles(m)?;
    let u = assemble_restricted_unitary(&angles);
    let f = fidelity(m, &u);
    Ok((u, f, angles))
}

/// The ideal echo target `ZX_{pi/2}`: `phi_1 = -phi_0 = sign * pi/2` with
/// equal control phases.
pub fn zx_target(sign: f64) -> (CMatrix, GateAngles) {
    let half = sign * std::f64::consts::FRAC_PI_2;
    let angles = GateAngles::new(-half, half, 0.0, 0.0);
    (assemble_restricted_unitary(&angles), angles)
}

/// Decoherence infidelity estimate for an idle pair over `tau` ns.
pub fn decoherence_estimate(tau: f64, dec: &DecoherenceParams) -> f64 {
    0.2 * (tau / dec.t1_c + tau / dec.t1_t) + 0.4 * (tau / dec.t2_c + tau / dec.t2_t)
}

/// Calibrated-gate summary.
#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    pub gate_type: GateType,
    pub eps_m_mhz: f64,
    pub tau_cnot_ns: f64,
    pub angles: GateAngles,
    pub f_mu: f64,
    pub infidelity: f64,
    /// Compensating target-qubit x-rotation.
    pub x_comp: f64,
    /// Compensating control-qubit z-rotation.
    pub z_comp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoherence_estimate: Option<f64>,
}

/// A calibrated gate with everything needed for budget post-processing.
pub struct CalibratedGate {
    pub report: GateReport,
    pub evolution: EvolutionResult,
    /// The unitary `F_MU` was computed against, with its angles.
    pub target: (CMatrix, GateAngles),
}

fn echo_flips(tau_p: f64) -> Vec<(f64, IdealOp)> {
    vec![
        (0.5 * tau_p, IdealOp::ControlFlip),
        (tau_p, IdealOp::ControlFlip),
    ]
}

fn evolve_gate(
    prop: &Propagator,
    gate: GateType,
    shape: &ShapeSpec,
    eps_m: f64,
    tau_p: f64,
) -> Result<(EvolutionResult, GateAngles)> {
    let pulse = shape.pulse(gate, eps_m, tau_p)?;
    let flips = match gate {
        GateType::Basic => Vec::new(),
        GateType::Echo => echo_flips(tau_p),
    };
    let r = prop.evolve(&pulse, &flips)?;
    let angles = extract_angles(&r.m)?;
    Ok((r, angles))
}

/// Find the shortest duration with `phi_1 - phi_0 = +-pi` and report the
/// calibrated gate. The scan starts from the semi-analytical guess, brackets
/// the first +-pi crossing of the continuity-unwrapped angle difference in
/// steps of an eighth of the guess, then refines by safeguarded secant.
pub fn find_cnot_duration(
    prop: &Propagator,
    gate: GateType,
    shape: &ShapeSpec,
    eps_m: f64,
) -> Result<CalibratedGate> {
    find_phase_crossing(prop, gate, shape, eps_m, std::f64::consts::PI)
}

/// Generalized duration search: shortest `tau_p` with the unwrapped
/// `|phi_1 - phi_0|` reaching `target_angle`.
pub fn find_phase_crossing(
    prop: &Propagator,
    gate: GateType,
    shape: &ShapeSpec,
    eps_m: f64,
    target_angle: f64,
) -> Result<CalibratedGate> {
    let full = semianalytic::predict_duration(prop.params(), eps_m, shape.tau_r_frac)?;
    let guess = full * target_angle / std::f64::consts::PI;
    let step = guess / 8.0;
    let max_tau = 4.0 * guess;

    let eval = |tau: f64| -> Result<(f64, EvolutionResult, GateAngles)> {
        let (r, a) = evolve_gate(prop, gate, shape, eps_m, tau)?;
        Ok((wrap_angle(a.phi1 - a.phi0), r, a))
    };

    // Scan upward, unwrapping by continuity between consecutive samples.
    let mut tau_prev = step;
    let (mut d_prev_raw, mut r_prev, mut a_prev) = eval(tau_prev)?;
    let mut acc_prev = d_prev_raw;
    let mut bracket = None;
    if acc_prev.abs() >= target_angle {
        return Err(Error::NoBracket { tau_max_ns: max_tau });
    }
    let mut k = 2usize;
    while (k as f64) * step <= max_tau + 1e-9 {
        let tau = (k as f64) * step;
        let (d_raw, r, a) = eval(tau)?;
        let acc = acc_prev + wrap_angle(d_raw - d_prev_raw);
        if acc.abs() >= target_angle {
            bracket = Some((tau_prev, acc_prev, d_prev_raw, tau, acc));
            let _ = (r, a);
            break;
        }
        tau_prev = tau;
        d_prev_raw = d_raw;
        acc_prev = acc;
        r_prev = r;
        a_prev = a;
        k += 1;
    }
    let (tau_a, acc_a, d_raw_a, tau_b, acc_b) =
        bracket.ok_or(Error::NoBracket { tau_max_ns: max_tau })?;
    let target = target_angle.copysign(acc_b);

    // Safeguarded secant on s(tau) = acc_a + wrap(d(tau) - d(tau_a)) - target.
    let (mut lo, mut hi) = (tau_a, tau_b);
    let (mut f_lo, mut f_hi) = (acc_a - target, acc_b - target);
    let mut best = (tau_prev, r_prev, a_prev);
    for _ in 0..80 {
        let t_secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let t = if (t_secant - lo).abs() < 1e-3 * (hi - lo) || (hi - t_secant).abs() < 1e-3 * (hi - lo)
        {
            0.5 * (lo + hi)
        } else {
            t_secant
        };
        let (d_raw, r, a) = eval(t)?;
        let s = acc_a + wrap_angle(d_raw - d_raw_a) - target;
        // monotone-bracket check: the value must stay inside the bracket span
        if s < f_lo.min(f_hi) - 1e-6 || s > f_lo.max(f_hi) + 1e-6 {
            return Err(Error::NoBracket { tau_max_ns: max_tau });
        }
        best = (t, r, a);
        if s.abs() <= PHASE_TOL {
            break;
        }
        if (s > 0.0) == (f_hi > 0.0) {
            hi = t;
            f_hi = s;
        } else {
            lo = t;
            f_lo = s;
        }
    }
    let (tau_cnot, evolution, raw_angles) = best;

    let angles = raw_angles.with_frame_correction(prop.basis().control_frame_offset(), tau_cnot);
    let (target_u, f_mu, x_comp, z_comp, target_angles) = match gate {
        GateType::Basic => {
            let (u, f, a) = closest_restricted_unitary(&evolution.m)?;
            let x = -angles.phi0;
            let z = wrap_angle(-angles.theta_diff_lab + std::f64::consts::FRAC_PI_2);
            (u, f, x, z, a)
        }
        GateType::Echo => {
            // mirrored gate accepted: compare against both sign choices
            let (up, ap) = zx_target(1.0);
            let (um, am) = zx_target(-1.0);
            let (fp, fm) = (fidelity(&evolution.m, &up), fidelity(&evolution.m, &um));
            // only the fixed pi/2 conversions remain to turn ZX_{pi/2} into
            // CNOT; no pulse-derived compensations
            let half = std::f64::consts::FRAC_PI_2;
            if fp >= fm {
                (up, fp, half, half, ap)
            } else {
                (um, fm, -half, half, am)
            }
        }
    };
    let report = GateReport {
        gate_type: gate,
        eps_m_mhz: eps_m,
        tau_cnot_ns: tau_cnot,
        angles,
        f_mu,
        infidelity: 1.0 - f_mu,
        x_comp,
        z_comp,
        decoherence_estimate: None,
    };
    Ok(CalibratedGate {
        report,
        evolution,
        target: (target_u, target_angles),
    })
}
