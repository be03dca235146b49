//! Rotating-frame Hamiltonian assembly.
//!
//! Bare states `|n, m>` (control excitation `n`, target excitation `m`) are
//! flattened control-major: `flat = n * n_t + m`, which keeps the four
//! control-diagonal 2x2 blocks of the computational subspace contiguous.
//!
//! Within the rotating-wave approximation with real coupling and drive, all
//! Hamiltonian terms are real symmetric matrices; entries are angular
//! frequencies in rad/ns (ordinary MHz times [`crate::units::MHZ_TO_ANG`]).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::units::MHZ_TO_ANG;

use super::DeviceParams;

/// Bare product-state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BareIndex {
    pub n: usize,
    pub m: usize,
}

impl BareIndex {
    pub fn flat(&self, n_t: usize) -> usize {
        self.n * n_t + self.m
    }

    pub fn from_flat(flat: usize, n_t: usize) -> Self {
        BareIndex {
            n: flat / n_t,
            m: flat % n_t,
        }
    }
}

impl std::fmt::Display for BareIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{},{}>", self.n, self.m)
    }
}

/// Duffing-oscillator level energies in the rotating frame, MHz.
fn control_level(p: &DeviceParams, delta: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf * (p.delta_ct + delta) - 0.5 * nf * (nf - 1.0) * p.eta_c
}

fn target_level(p: &DeviceParams, delta: f64, m: usize) -> f64 {
    let mf = m as f64;
    mf * delta - 0.5 * mf * (mf - 1.0) * p.eta_t
}

/// Static part `H_qb + H_g` at drive detuning `delta = omega_t - omega_d`:
/// Duffing level energies on the diagonal plus the excitation-preserving
/// coupling `g sqrt(n m)` between `|n, m-1>` and `|n-1, m>`.
pub fn build_static_hamiltonian(p: &DeviceParams, delta: f64) -> Result<RMatrix> {
    p.validate()?;
    let (nc, nt) = (p.n_c, p.n_t);
    let dim = nc * nt;
    let mut h = DMatrix::zeros(dim, dim);
    for n in 0..nc {
        for m in 0..nt {
            let i = BareIndex { n, m }.flat(nt);
            h[(i, i)] = (control_level(p, delta, n) + target_level(p, delta, m)) * MHZ_TO_ANG;
            // coupling |n, m-1><n-1, m|: from (n-1, m) to (n, m-1)
            if n >= 1 && m + 1 < nt {
                let from = BareIndex { n: n - 1, m: m + 1 }.flat(nt);
                let to = BareIndex { n, m }.flat(nt);
                let amp = p.g * ((n * (m + 1)) as f64).sqrt() * MHZ_TO_ANG;
                h[(to, from)] += amp;
                h[(from, to)] += amp;
            }
        }
    }
    Ok(h)
}

/// Drive part at instantaneous amplitude `eps` (MHz, signed): `eps sqrt(n)`
/// on the control ladder plus `c_ct eps sqrt(m)` directly on the target.
pub fn build_drive_hamiltonian(p: &DeviceParams, eps: f64) -> RMatrix {
    let (nc, nt) = (p.n_c, p.n_t);
    let dim = nc * nt;
    let mut h = DMatrix::zeros(dim, dim);
    for n in 1..nc {
        for m in 0..nt {
            let to = BareIndex { n, m }.flat(nt);
            let from = BareIndex { n: n - 1, m }.flat(nt);
            let amp = eps * (n as f64).sqrt() * MHZ_TO_ANG;
            h[(to, from)] += amp;
            h[(from, to)] += amp;
        }
    }
    if p.c_ct != 0.0 {
        for n in 0..nc {
            for m in 1..nt {
                let to = BareIndex { n, m }.flat(nt);
                let from = BareIndex { n, m: m - 1 }.flat(nt);
                let amp = p.c_ct * eps * (m as f64).sqrt() * MHZ_TO_ANG;
                h[(to, from)] += amp;
                h[(from, to)] += amp;
            }
        }
    }
    h
}

/// Second-order estimate of the zz-coupling from the repulsion of |11> by
/// |02> and |20>: `2g^2/(Delta + eta_t) - 2g^2/(Delta - eta_c)`, MHz.
pub fn zz_approx(p: &DeviceParams) -> Result<f64> {
    let scale = p.eta_c.max(p.eta_t).max(p.delta_ct.abs()).max(1.0);
    let d1 = p.delta_ct + p.eta_t;
    let d2 = p.delta_ct - p.eta_c;
    if d1.abs() < 1e-12 * scale || d2.abs() < 1e-12 * scale {
        return Err(Error::DivisionSingularity(
            "zz_approx at Delta = eta_c or Delta = -eta_t".into(),
        ));
    }
    Ok(2.0 * p.g * p.g / d1 - 2.0 * p.g * p.g / d2)
}
