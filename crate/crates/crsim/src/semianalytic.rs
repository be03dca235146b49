//! Effective drive amplitudes from the driven control-qubit eigenproblem.
//!
//! With the drive treated as part of the unperturbed problem, the control
//! qubit alone is diagonalized at fixed drive amplitude `eps`,
//!
//! ```text
//! H^(c) = sum_n E_n^(c) |n><n| + sqrt(n) eps (|n><n-1| + |n-1><n|),
//! ```
//!
//! and the effective drive on the target when the control is in dressed
//! state `n` is
//!
//! ```text
//! eps~_n = g sum_k sqrt(k) c_k^(n) c_{k-1}^(n),
//! ```
//!
//! which is exact in the drive and first order in `g`. Everything here is
//! linear in `g` and depends otherwise only on the ratios `Delta/eta_c` and
//! `eps/eta_c`. Energies and amplitudes are plain MHz throughout.
//!
//! Dressed states are labeled by adiabatic continuation from `eps = 0`
//! along a geometrically refined amplitude grid; plain max-overlap labeling
//! against bare states fails at large `eps` where level repulsion dominates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::model::{DeviceParams, DressedBasis};
use crate::units::{wrap_angle, MHZ_TO_ANG};

/// Points in the geometric continuation grid from `eps/eta_c = 1e-4`.
const CONTINUATION_POINTS: usize = 200;

/// Quadrature points for pulse-shape integrals.
const QUAD_POINTS: usize = 512;

/// Cap for the speed maximization, in units of `eta_c`.
const EPS_CAP_OVER_ETA: f64 = 1.0;

/// One dressed eigenstate of the driven control qubit.
#[derive(Debug, Clone)]
pub struct ControlDressedState {
    /// Adiabatic label: the bare level this state connects to at `eps = 0`.
    pub n: usize,
    /// Real amplitudes `c_k` over bare control levels.
    pub coeffs: DVector<f64>,
    /// Eigenenergy in the rotating frame, MHz.
    pub energy: f64,
}

/// Effective drive amplitudes at one drive amplitude.
#[derive(Debug, Clone)]
pub struct EffectiveDrives {
    /// Physical drive amplitude, MHz.
    pub eps: f64,
    /// `eps~_n` for each control level, MHz.
    pub eps_tilde: Vec<f64>,
    /// Gate speed `eps~_1 - eps~_0`, MHz.
    pub speed: f64,
}

fn control_hamiltonian(p: &DeviceParams, delta: f64, eps: f64) -> RMatrix {
    let n = p.n_c;
    let mut h = DMatrix::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        h[(k, k)] = kf * (p.delta_ct + delta) - 0.5 * kf * (kf - 1.0) * p.eta_c;
        if k >= 1 {
            let amp = eps * kf.sqrt();
            h[(k, k - 1)] = amp;
            h[(k - 1, k)] = amp;
        }
    }
    h
}

fn bare_states(p: &DeviceParams) -> Vec<ControlDressedState> {
    (0..p.n_c)
        .map(|n| {
            let mut c = DVector::zeros(p.n_c);
            c[n] = 1.0;
            ControlDressedState {
                n,
                coeffs: c,
                energy: control_hamiltonian(p, 0.0, 0.0)[(n, n)],
            }
        })
        .collect()
}

/// Incremental continuation state: eigenpairs labeled by overlap with the
/// previous amplitude point.
struct Continuation<'a> {
    p: &'a DeviceParams,
    states: Vec<ControlDressedState>,
    eps: f64,
}

impl<'a> Continuation<'a> {
    fn new(p: &'a DeviceParams) -> Self {
        Continuation {
            p,
            states: bare_states(p),
            eps: 0.0,
        }
    }

    /// Advance to amplitude `eps`, relabeling by max overlap with the
    /// current states. Steps must be small enough that overlaps stay > 0.5.
    fn advance(&mut self, eps: f64) -> Result<()> {
        let h = control_hamiltonian(self.p, 0.0, eps);
        let se = h.symmetric_eigen();
        let (vals, vecs) = (se.eigenvalues, se.eigenvectors);
        let n = self.p.n_c;
        let mut new_states = Vec::with_capacity(n);
        let mut taken = vec![false; n];
        for prev in &self.states {
            let (mut best, mut best_ov, mut best_sign) = (usize::MAX, -1.0, 1.0);
            for col in 0..n {
                if taken[col] {
                    continue;
                }
                let ov: f64 = (0..n).map(|i| prev.coeffs[i] * vecs[(i, col)]).sum();
                if ov.abs() > best_ov {
                    best_ov = ov.abs();
                    best = col;
                    best_sign = ov.signum();
                }
            }
            if best == usize::MAX || best_ov * best_ov <= 0.5 {
                return Err(Error::ContinuationLost {
                    eps_mhz: eps,
                    overlap: best_ov * best_ov,
                });
            }
            taken[best] = true;
            let coeffs = DVector::from_iterator(n, (0..n).map(|i| best_sign * vecs[(i, best)]));
            new_states.push(ControlDressedState {
                n: prev.n,
                coeffs,
                energy: vals[best],
            });
        }
        self.states = new_states;
        self.eps = eps;
        Ok(())
    }
}

/// Geometric grid from `1e-4 eta_c` up to `|eps|`, carrying the sign.
fn continuation_grid(p: &DeviceParams, eps: f64) -> Vec<f64> {
    let target = eps.abs();
    let start = 1e-4 * p.eta_c;
    if target <= start {
        return vec![eps];
    }
    let ratio = (target / start).powf(1.0 / (CONTINUATION_POINTS - 1) as f64);
    let mut grid: Vec<f64> = (0..CONTINUATION_POINTS)
        .map(|k| eps.signum() * start * ratio.powi(k as i32))
        .collect();
    *grid.last_mut().unwrap() = eps;
    grid
}

/// All dressed eigenpairs of the driven control qubit at amplitude `eps`,
/// labeled by adiabatic continuation from `eps = 0`.
pub fn dressed_control_states(p: &DeviceParams, eps: f64) -> Result<Vec<ControlDressedState>> {
    p.validate()?;
    if eps == 0.0 {
        return Ok(bare_states(p));
    }
    let mut cont = Continuation::new(p);
    for e in continuation_grid(p, eps) {
        cont.advance(e)?;
    }
    Ok(cont.states)
}

fn drives_from_states(p: &DeviceParams, eps: f64, states: &[ControlDressedState]) -> EffectiveDrives {
    let eps_tilde: Vec<f64> = states
        .iter()
        .map(|s| {
            let mut acc = 0.0;
            for k in 1..p.n_c {
                acc += (k as f64).sqrt() * s.coeffs[k] * s.coeffs[k - 1];
            }
            p.g * acc
        })
        .collect();
    let speed = eps_tilde[1] - eps_tilde[0];
    EffectiveDrives {
        eps,
        eps_tilde,
        speed,
    }
}

/// Semi-analytical effective drives `eps~_n(eps)`.
pub fn effective_drives(p: &DeviceParams, eps: f64) -> Result<EffectiveDrives> {
    let states = dressed_control_states(p, eps)?;
    Ok(drives_from_states(p, eps, &states))
}

/// First-order (in the drive) formulas:
/// `eps~_n = -g (Delta + eta_c) eps / ([Delta - (n-1) eta_c][Delta - n eta_c])`.
pub fn first_order_drives(p: &DeviceParams, eps: f64) -> Result<EffectiveDrives> {
    let d = p.delta_ct;
    let eta = p.eta_c;
    let scale = d.abs().max(eta);
    let eps_tilde: Vec<f64> = (0..p.n_c)
        .map(|n| {
            let nf = n as f64;
            let den = (d - (nf - 1.0) * eta) * (d - nf * eta);
            if den.abs() < 1e-12 * scale * scale {
                return Err(Error::DivisionSingularity(format!(
                    "first_order_drives pole at n = {n}"
                )));
            }
            Ok(-p.g * (d + eta) * eps / den)
        })
        .collect::<Result<_>>()?;
    let speed = eps_tilde[1] - eps_tilde[0];
    Ok(EffectiveDrives {
        eps,
        eps_tilde,
        speed,
    })
}

/// First-order speed `eps~_1 - eps~_0 = 2 g eta_c eps / (Delta (eta_c - Delta))`.
pub fn first_order_speed(p: &DeviceParams, eps: f64) -> Result<f64> {
    let den = p.delta_ct * (p.eta_c - p.delta_ct);
    if den.abs() < 1e-12 * p.eta_c * p.eta_c {
        return Err(Error::DivisionSingularity("first_order_speed pole".into()));
    }
    Ok(2.0 * p.g * p.eta_c * eps / den)
}

/// First-order difference `eps~_2 - eps~_0`.
pub fn first_order_speed_20(p: &DeviceParams, eps: f64) -> Result<f64> {
    let (d, eta) = (p.delta_ct, p.eta_c);
    let den = d * (eta - d) * (2.0 * eta - d);
    if den.abs() < 1e-12 * eta * eta * eta {
        return Err(Error::DivisionSingularity("first_order_speed_20 pole".into()));
    }
    Ok(2.0 * p.g * eta * (eta - 2.0 * d) * eps / den)
}

fn third_order_denominators(p: &DeviceParams) -> Result<(f64, f64, f64, f64)> {
    // delta is neglected here: E_1 = Delta, E_2 = 2 Delta - eta_c,
    // E_21 = Delta - eta_c, E_31 = 2 Delta - 3 eta_c.
    let d = p.delta_ct;
    let eta = p.eta_c;
    let e1 = d;
    let e2 = 2.0 * d - eta;
    let e21 = d - eta;
    let e31 = 2.0 * d - 3.0 * eta;
    let scale = d.abs().max(eta);
    for (v, name) in [(e1, "E_10"), (e2, "E_2"), (e21, "E_21"), (e31, "E_31")] {
        if v.abs() < 1e-12 * scale {
            return Err(Error::DivisionSingularity(format!(
                "third-order formulas pole at {name} = 0"
            )));
        }
    }
    Ok((e1, e2, e21, e31))
}

/// Third-order effective drives `(eps~_0, eps~_1)`, accurate to `eps^3`.
pub fn third_order_drives(p: &DeviceParams, eps: f64) -> Result<(f64, f64)> {
    let (e1, e2, e21, e31) = third_order_denominators(p)?;
    let e10 = e1;
    let x = eps * eps;
    let t0 = -p.g * eps / e1 * (1.0 - 2.0 * x / (e1 * e1) + 4.0 * x / (e1 * e2));
    let t1 = -2.0 * eps * p.g / e21
        * (1.0 + 6.0 * x / (e21 * e31) + x / (e10 * e21)
            - 4.0 * x / (e21 * e21)
            - x / (e10 * e10))
        + eps * p.g / e10
            * (1.0 - 2.0 * x / (e10 * e10) + 2.0 * x / (e10 * e21) - 2.0 * x / (e21 * e21));
    Ok((t0, t1))
}

/// Fourth-order dressed energies `(E_|0>eps, E_|1>eps)` of the driven
/// control qubit, MHz.
pub fn dressed_energy_third_order(p: &DeviceParams, eps: f64) -> Result<(f64, f64)> {
    let (e1, e2, e21, e31) = third_order_denominators(p)?;
    let e01 = -e1;
    let x = eps * eps;
    let en0 = -x / e1 * (1.0 + 2.0 * x / (e1 * e2) - x / (e1 * e1));
    let en1 = e1
        - x / e01 * (1.0 - x / (e01 * e01) - 2.0 * x / (e21 * e01))
        - 2.0 * x / e21
            * (1.0 + 3.0 * x / (e21 * e31) - 2.0 * x / (e21 * e21) - x / (e01 * e21));
    Ok((en0, en1))
}

/// Table of `(eps/eta_c, speed/g)` over a drive-amplitude grid, built from a
/// single continuation pass.
pub fn speed_curve(p: &DeviceParams, eps_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    p.validate()?;
    let mut sorted: Vec<f64> = eps_grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.iter().any(|&e| e < 0.0) {
        // negative amplitudes are just the odd image; keep the pass positive
        return Err(Error::InvalidParams("speed_curve expects eps >= 0".into()));
    }
    let mut cont = Continuation::new(p);
    let mut out = Vec::with_capacity(sorted.len());
    let mut prev = 0.0f64;
    for &eps in &sorted {
        if eps == 0.0 {
            out.push((0.0, 0.0));
            continue;
        }
        // refine the jump from the previous point geometrically
        for e in refinement(p, prev, eps) {
            cont.advance(e)?;
        }
        let d = drives_from_states(p, eps, &cont.states);
        out.push((eps / p.eta_c, d.speed / p.g));
        prev = eps;
    }
    Ok(out)
}

fn refinement(p: &DeviceParams, from: f64, to: f64) -> Vec<f64> {
    let start = (1e-4 * p.eta_c).max(from);
    if to <= start {
        return vec![to];
    }
    // enough intermediate points to keep continuation overlaps high
    let steps = ((to / start).ln() / (1.0 + 1.0 / CONTINUATION_POINTS as f64).ln())
        .ceil()
        .max(1.0) as usize;
    let ratio = (to / start).powf(1.0 / steps as f64);
    let mut g: Vec<f64> = (1..=steps).map(|k| start * ratio.powi(k as i32)).collect();
    *g.last_mut().unwrap() = to;
    g
}

/// A dense `eps -> (eps~_0, eps~_1, E_0, E_1)` table from one continuation
/// pass, with linear interpolation. Used for pulse-shape integrals.
pub struct DriveTable {
    eps: Vec<f64>,
    eps0: Vec<f64>,
    eps1: Vec<f64>,
    en0: Vec<f64>,
    en1: Vec<f64>,
}

impl DriveTable {
    /// Tabulate up to `eps_max >= 0` (MHz).
    pub fn build(p: &DeviceParams, eps_max: f64) -> Result<Self> {
        p.validate()?;
        let n = 512usize;
        let mut eps = Vec::with_capacity(n + 1);
        let mut eps0 = Vec::with_capacity(n + 1);
        let mut eps1 = Vec::with_capacity(n + 1);
        let mut en0 = Vec::with_capacity(n + 1);
        let mut en1 = Vec::with_capacity(n + 1);
        let bare = bare_states(p);
        eps.push(0.0);
        eps0.push(0.0);
        eps1.push(0.0);
        en0.push(bare[0].energy);
        en1.push(bare[1].energy);
        if eps_max > 0.0 {
            let mut cont = Continuation::new(p);
            let mut prev = 0.0;
            for k in 1..=n {
                let e = eps_max * k as f64 / n as f64;
                for step in refinement(p, prev, e) {
                    cont.advance(step)?;
                }
                let d = drives_from_states(p, e, &cont.states);
                eps.push(e);
                eps0.push(d.eps_tilde[0]);
                eps1.push(d.eps_tilde[1]);
                en0.push(cont.states[0].energy);
                en1.push(cont.states[1].energy);
                prev = e;
            }
        }
        Ok(DriveTable {
            eps,
            eps0,
            eps1,
            en0,
            en1,
        })
    }

    fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        if x <= xs[0] {
            return ys[0];
        }
        let last = xs.len() - 1;
        if x >= xs[last] {
            return ys[last];
        }
        let i = xs.partition_point(|&v| v < x).max(1);
        let (x0, x1) = (xs[i - 1], xs[i]);
        let t = (x - x0) / (x1 - x0);
        ys[i - 1] * (1.0 - t) + ys[i] * t
    }

    /// `eps~_1 - eps~_0` at a signed amplitude; odd in `eps`.
    pub fn speed_at(&self, eps: f64) -> f64 {
        let s = eps.signum();
        let a = eps.abs();
        s * (Self::interp(&self.eps, &self.eps1, a) - Self::interp(&self.eps, &self.eps0, a))
    }

    pub fn eps0_at(&self, eps: f64) -> f64 {
        eps.signum() * Self::interp(&self.eps, &self.eps0, eps.abs())
    }

    pub fn eps1_at(&self, eps: f64) -> f64 {
        eps.signum() * Self::interp(&self.eps, &self.eps1, eps.abs())
    }

    /// Dressed-energy splitting `E_|1>eps - E_|0>eps`; even in `eps`.
    pub fn splitting_at(&self, eps: f64) -> f64 {
        let a = eps.abs();
        Self::interp(&self.eps, &self.en1, a) - Self::interp(&self.eps, &self.en0, a)
    }
}

/// Signed extremal speed over the drive amplitude.
#[derive(Debug, Clone, Copy)]
pub struct SpeedMax {
    /// Signed `speed/g` at the extremum.
    pub speed_over_g: f64,
    /// `eps/eta_c` where it is reached.
    pub eps_opt_over_eta: f64,
    /// The extremum sits at the search cap rather than in the interior.
    pub at_cap: bool,
}

/// Golden-section maximization of `|speed|` over `eps/eta_c in (0, 1]`.
pub fn maximize_speed(p: &DeviceParams) -> Result<SpeedMax> {
    let table = DriveTable::build(p, EPS_CAP_OVER_ETA * p.eta_c)?;
    let f = |eps: f64| table.speed_at(eps).abs();
    let (mut a, mut b) = (0.0, EPS_CAP_OVER_ETA * p.eta_c);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    let eps_opt = 0.5 * (a + b);
    let speed = table.speed_at(eps_opt);
    let at_cap = eps_opt > (EPS_CAP_OVER_ETA - 1e-3) * p.eta_c;
    Ok(SpeedMax {
        speed_over_g: speed / p.g,
        eps_opt_over_eta: eps_opt / p.eta_c,
        at_cap,
    })
}

/// Semi-analytical prediction for a calibrated gate.
#[derive(Debug, Clone, Copy)]
pub struct CnotPrediction {
    /// Predicted CNOT-equivalent duration, ns.
    pub tau_p: f64,
    /// Predicted (unwrapped) target rotation angle for control |0>, rad.
    pub phi0: f64,
    /// Drive-induced level-repulsion phase, rad, reduced mod 2 pi.
    pub theta_rep: f64,
    /// zz phase `omega_zz tau_p / 2`, rad.
    pub theta_zz: f64,
}

/// Normalized pulse shape `s(u)` for ramp fraction `fr`, sampled at the
/// composite-midpoint quadrature node `u`.
fn shape_at(fr: f64, u: f64) -> f64 {
    if u < fr {
        0.5 * (1.0 - (std::f64::consts::PI * u / fr).cos())
    } else if u <= 1.0 - fr {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * (1.0 - u) / fr).cos())
    }
}

fn shape_integral(table: &DriveTable, quantity: impl Fn(&DriveTable, f64) -> f64, eps_m: f64, fr: f64) -> f64 {
    let n = QUAD_POINTS;
    let mut acc = 0.0;
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        acc += quantity(table, eps_m * shape_at(fr, u));
    }
    acc / n as f64
}

/// Predicted CNOT duration (ns) for a cosine-ramp pulse with ramp fraction
/// `tau_r_frac` at mid-pulse amplitude `eps_m`, from the condition that the
/// shape-integrated Rabi-angle difference reaches pi. `tau_r_frac = 0`
/// selects a rectangular pulse.
pub fn predict_duration(p: &DeviceParams, eps_m: f64, tau_r_frac: f64) -> Result<f64> {
    let table = DriveTable::build(p, eps_m.abs())?;
    predict_duration_with(&table, eps_m, tau_r_frac)
}

/// As [`predict_duration`], reusing a prebuilt table.
pub fn predict_duration_with(table: &DriveTable, eps_m: f64, tau_r_frac: f64) -> Result<f64> {
    let mean_speed = shape_integral(table, DriveTable::speed_at, eps_m, tau_r_frac);
    if mean_speed == 0.0 {
        return Err(Error::DivisionSingularity(
            "zero CR speed: unbounded duration".into(),
        ));
    }
    // 2 * MHZ_TO_ANG * tau_p * |mean speed| = pi
    Ok(std::f64::consts::PI / (2.0 * MHZ_TO_ANG * mean_speed.abs()))
}

/// Full semi-analytical gate prediction including compensating-angle
/// contributions. The level-repulsion phase integrates the dressed splitting
/// minus the frame baseline `omega_c^t0 - omega_d`.
pub fn predict_cnot(
    p: &DeviceParams,
    basis: &DressedBasis,
    eps_m: f64,
    tau_r_frac: f64,
) -> Result<CnotPrediction> {
    let table = DriveTable::build(p, eps_m.abs())?;
    let tau_p = predict_duration_with(&table, eps_m, tau_r_frac)?;
    let mean_eps0 = shape_integral(&table, DriveTable::eps0_at, eps_m, tau_r_frac);
    let phi0 = 2.0 * MHZ_TO_ANG * mean_eps0 * tau_p + crosstalk_phase(p, eps_m, tau_r_frac, tau_p);
    let baseline = basis.control_frame_offset();
    let mean_rep = shape_integral(
        &table,
        |t, e| t.splitting_at(e) - baseline,
        eps_m,
        tau_r_frac,
    );
    let theta_rep = wrap_angle(MHZ_TO_ANG * mean_rep * tau_p);
    let theta_zz = 0.5 * basis.omega_zz * MHZ_TO_ANG * tau_p;
    Ok(CnotPrediction {
        tau_p,
        phi0,
        theta_rep,
        theta_zz,
    })
}

/// Crosstalk contribution `int 2 c_ct eps(t) dt` to both target angles.
fn crosstalk_phase(p: &DeviceParams, eps_m: f64, tau_r_frac: f64, tau_p: f64) -> f64 {
    if p.c_ct == 0.0 {
        return 0.0;
    }
    // exact integral of the cosine-ramp shape: (1 - fr) eps_m tau_p
    2.0 * p.c_ct * eps_m * (1.0 - tau_r_frac) * tau_p * MHZ_TO_ANG
}

/// Duration minimized over the drive amplitude (golden section over the
/// speed table), returning `(tau_p, eps_opt)`.
pub fn predict_min_duration(p: &DeviceParams, tau_r_frac: f64) -> Result<(f64, f64)> {
    let table = DriveTable::build(p, EPS_CAP_OVER_ETA * p.eta_c)?;
    let f = |eps_m: f64| {
        shape_integral(&table, DriveTable::speed_at, eps_m, tau_r_frac).abs()
    };
    let (mut a, mut b) = (0.0, EPS_CAP_OVER_ETA * p.eta_c);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    let eps_opt = 0.5 * (a + b);
    let mean = f(eps_opt);
    if mean == 0.0 {
        return Err(Error::DivisionSingularity("zero CR speed".into()));
    }
    Ok((std::f64::consts::PI / (2.0 * MHZ_TO_ANG * mean), eps_opt))
}
