//! Decomposition of the gate infidelity into physical mechanisms.
//!
//! Three reference objects with growing freedom are fitted to the projected
//! evolution `M`: the restricted class `U` (control-conditioned target
//! x-rotations), the block unitary `M~` (arbitrary target rotations, no
//! control change) and the full two-qubit unitary `M~'`. The gaps between
//! their fidelities attribute the error:
//!
//! ```text
//! 1 - F_MU ~ (1 - F_MM~) + (1 - F_M~U)        leakage + imperfect unitary
//! 1 - F_MU ~ (1 - F_MM~') + (1 - F_M~'M~) + (1 - F_M~U)
//! ```
//!
//! Leakage is further attributed to individual dressed-state channels from
//! the full evolution matrix `V`.

use serde::Serialize;

use crate::calibration::{fidelity, CalibratedGate};
use crate::error::{Error, Result};
use crate::linalg::{trace, CMatrix, C64};
use crate::model::{BareIndex, DeviceParams};
use crate::semianalytic;
use crate::units::MHZ_TO_ANG;

/// Channels with averaged probability below this are not reported.
const CHANNEL_REPORT_THRESHOLD: f64 = 1e-8;

/// One leakage channel between labeled dressed states, with its
/// initial-state-averaged probability (the 1/4 factor included).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelLeak {
    pub from_n: usize,
    pub from_m: usize,
    pub to_n: usize,
    pub to_m: usize,
    pub probability: f64,
}

impl ChannelLeak {
    pub fn column_name(&self) -> String {
        format!(
            "ch_{}_{}_to_{}_{}",
            self.from_n, self.from_m, self.to_n, self.to_m
        )
    }
}

/// Full error-budget record for one calibrated gate.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetReport {
    pub f_mu: f64,
    pub f_mmtilde: f64,
    pub f_mtilde_u: f64,
    pub f_mmtildeprime: f64,
    /// `|(1 - F_MU) - (1 - F_MM~) - (1 - F_M~U)|`.
    pub additivity_defect: f64,
    /// Imperfect-unitary infidelity per control state,
    /// `4/5 - (2/5)|Tr(U~_c U_c^H)|`.
    pub df_u_c0: f64,
    pub df_u_c1: f64,
    /// Averaged probability of leaving the computational subspace.
    pub p_leak_out: f64,
    /// Averaged probability of control |0> <-> |1> transitions inside it.
    pub p_leak_comp: f64,
    /// Reported channels, sorted by decreasing probability.
    pub channels: Vec<ChannelLeak>,
}

fn block(m: &CMatrix, off: usize) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[(off + i, off + j)])
}

/// Polar factor of a 2x2 block with the phase rotated so the trace overlap
/// with the source block is real non-negative.
fn aligned_polar(b: &CMatrix, which: usize) -> Result<CMatrix> {
    let (u, s) = crate::linalg::polar_unitary(b);
    if s[0] < 1e-12 {
        return Err(Error::RankDeficientBlock { block: which });
    }
    let z = trace(&(b.adjoint() * &u));
    let phase = if z.norm() > 0.0 {
        C64::from_polar(1.0, -z.arg())
    } else {
        C64::new(1.0, 0.0)
    };
    Ok(u.map(|x| x * phase))
}

/// Closest control-block unitary `M~` and the fidelity `F_MM~`, via the
/// singular values of the two control-diagonal blocks.
pub fn closest_block_unitary(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let a = block(m, 0);
    let b = block(m, 2);
    let u0 = aligned_polar(&a, 0)?;
    let u1 = aligned_polar(&b, 1)?;
    let mut mt = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            mt[(i, j)] = u0[(i, j)];
            mt[(2 + i, 2 + j)] = u1[(i, j)];
        }
    }
    let f = fidelity(m, &mt);
    Ok((mt, f))
}

/// Closest unrestricted two-qubit unitary `M~'` (full polar factor) and
/// `F_MM~'` via the nuclear norm.
pub fn closest_unitary(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let (u, s) = crate::linalg::polar_unitary(m);
    if s[0] < 1e-12 {
        return Err(Error::RankDeficientBlock { block: 0 });
    }
    let tr_mm = trace(&(m.adjoint() * m)).re;
    let nuc: f64 = s.iter().sum();
    Ok((u, (tr_mm + nuc * nuc) / 20.0))
}

/// Per-channel leakage probabilities from the full evolution `V` (label
/// order), averaged over the four computational initial states.
/// Returns the reported channels plus `(P_leak_out, P_leak_comp)`.
pub fn channel_leakage(v: &CMatrix, n_t: usize) -> (Vec<ChannelLeak>, f64, f64) {
    let dim = v.nrows();
    let comp = [0usize, 1, n_t, n_t + 1];
    let control_of = |flat: usize| flat / n_t;
    let mut channels = Vec::new();
    let mut p_out = 0.0;
    let mut p_comp = 0.0;
    for &i in &comp {
        for f in 0..dim {
            let in_comp = comp.contains(&f);
            if in_comp && control_of(f) == control_of(i) {
                continue; // intended gate action, not leakage
            }
            let p = v[(f, i)].norm_sqr() / 4.0;
            if in_comp {
                p_comp += p;
            } else {
                p_out += p;
            }
            if p > CHANNEL_REPORT_THRESHOLD {
                let bi = BareIndex::from_flat(i, n_t);
                let bf = BareIndex::from_flat(f, n_t);
                channels.push(ChannelLeak {
                    from_n: bi.n,
                    from_m: bi.m,
                    to_n: bf.n,
                    to_m: bf.m,
                    probability: p,
                });
            }
        }
    }
    channels.sort_by(|a, b| b.probability.partial_cmp(&a.probability).unwrap());
    (channels, p_out, p_comp)
}

/// Target-block x-rotation `Rx(phi)`.
fn rx(phi: f64) -> CMatrix {
    let c = C64::new((0.5 * phi).cos(), 0.0);
    let s = C64::new(0.0, -(0.5 * phi).sin());
    CMatrix::from_row_slice(2, 2, &[c, s, s, c])
}

/// Full budget decomposition of a calibrated gate.
pub fn decompose(gate: &CalibratedGate, n_t: usize) -> Result<BudgetReport> {
    let m = &gate.evolution.m;
    let (target_u, target_angles) = (&gate.target.0, &gate.target.1);
    let f_mu = fidelity(m, target_u);
    let (mtilde, f_mmtilde) = closest_block_unitary(m)?;
    let f_mtilde_u = fidelity(&mtilde, target_u);
    let (_, f_mmtildeprime) = closest_unitary(m)?;
    let additivity_defect = ((1.0 - f_mu) - (1.0 - f_mmtilde) - (1.0 - f_mtilde_u)).abs();

    let df = |off: usize, phi: f64| {
        let ut = block(&mtilde, off);
        let ideal = rx(phi);
        0.8 - 0.4 * trace(&(ut * ideal.adjoint())).norm()
    };
    let df_u_c0 = df(0, target_angles.phi0);
    let df_u_c1 = df(2, target_angles.phi1);

    let (channels, p_leak_out, p_leak_comp) = channel_leakage(&gate.evolution.v, n_t);
    Ok(BudgetReport {
        f_mu,
        f_mmtilde,
        f_mtilde_u,
        f_mmtildeprime,
        additivity_defect,
        df_u_c0,
        df_u_c1,
        p_leak_out,
        p_leak_comp,
        channels,
    })
}

/// Non-adiabatic `|0> -> |2>` leakage estimate for one cosine front ramp:
/// `2 pi^4 eps_m^4 / (Delta^2 (eta_c - 2 Delta)^6 tau_r^4)` in angular
/// units, dimensionless.
pub fn ramp_leakage_estimate(p: &DeviceParams, eps_m: f64, tau_r: f64) -> Result<f64> {
    let gap = p.eta_c - 2.0 * p.delta_ct;
    if gap.abs() < 1e-9 * p.eta_c.max(1.0) {
        return Err(Error::DivisionSingularity(
            "ramp_leakage_estimate at eta_c = 2 Delta".into(),
        ));
    }
    let eps = eps_m * MHZ_TO_ANG;
    let delta = p.delta_ct * MHZ_TO_ANG;
    let gap = gap * MHZ_TO_ANG;
    let pi4 = std::f64::consts::PI.powi(4);
    Ok(2.0 * pi4 * eps.powi(4) / (delta * delta * gap.powi(6) * tau_r.powi(4)))
}

/// Which effective-drive estimate feeds the tilted-axis formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltDriveSource {
    FirstOrder,
    SemiAnalytic,
}

/// Tilted-axis infidelity of the control-|1> target rotation:
/// `(2/5) sin^2(phi1/2) w_zz^2 / ((25/40)(2 eps~_1)^2 + w_zz^2)`.
///
/// The 25/40 factor is the pulse-shape integral of `eps^2(t)` for 30%
/// ramps, applied to the denominator only.
pub fn tilted_axis_estimate(
    p: &DeviceParams,
    eps_m: f64,
    phi1: f64,
    omega_zz: f64,
    source: TiltDriveSource,
) -> Result<f64> {
    let eps1 = match source {
        TiltDriveSource::FirstOrder => semianalytic::first_order_drives(p, eps_m)?.eps_tilde[1],
        TiltDriveSource::SemiAnalytic => semianalytic::effective_drives(p, eps_m)?.eps_tilde[1],
    };
    let rabi2 = (25.0 / 40.0) * (2.0 * eps1) * (2.0 * eps1);
    Ok(0.4 * (0.5 * phi1).sin().powi(2) * omega_zz * omega_zz / (rabi2 + omega_zz * omega_zz))
}

/// The "almost perfect" variant: integrate the Bloch evolution of the
/// control-|1> target spin under the detuned drive over the actual pulse
/// shape and compare with the ideal x-rotation by `phi1`.
pub fn integrated_tilt_estimate(
    p: &DeviceParams,
    eps_m: f64,
    tau_r_frac: f64,
    tau_p: f64,
    phi1: f64,
    omega_zz: f64,
) -> Result<f64> {
    let table = semianalytic::DriveTable::build(p, eps_m.abs())?;
    let steps = 4096usize;
    let h = tau_p / steps as f64;
    let mut u = CMatrix::identity(2, 2);
    let shape = |t: f64| {
        let u01 = t / tau_p;
        let fr = tau_r_frac;
        if u01 < fr {
            0.5 * (1.0 - (std::f64::consts::PI * u01 / fr).cos())
        } else if u01 <= 1.0 - fr {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * (1.0 - u01) / fr).cos())
        }
    };
    for k in 0..steps {
        let t = (k as f64 + 0.5) * h;
        let eps1 = table.eps1_at(eps_m * shape(t));
        // H = eps~_1 X + (w_zz/2) Z, angular
        let ax = eps1 * MHZ_TO_ANG;
        let az = 0.5 * omega_zz * MHZ_TO_ANG;
        let ang = (ax * ax + az * az).sqrt() * h;
        let (nx, nz) = if ang > 0.0 {
            let n = (ax * ax + az * az).sqrt();
            (ax / n, az / n)
        } else {
            (0.0, 0.0)
        };
        let c = C64::new((0.5 * ang).cos(), 0.0);
        let sx = C64::new(0.0, -(0.5 * ang).sin() * nx);
        let sz = C64::new(0.0, -(0.5 * ang).sin() * nz);
        let step = CMatrix::from_row_slice(2, 2, &[c + sz, sx, sx, c - sz]);
        u = step * u;
    }
    Ok(0.8 - 0.4 * trace(&(u * rx(phi1).adjoint())).norm())
}
