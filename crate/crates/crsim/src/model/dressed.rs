//! Eigenbasis of the static Hamiltonian with adiabatic bare-state labels.
//!
//! Everything downstream (propagation, angle extraction, leakage reporting)
//! works in this basis. Columns are permuted into bare-label order, so column
//! `k` is the dressed state adiabatically connected to the bare state with
//! flat index `k`; labeling is by maximum squared overlap and must be
//! unambiguous (> 0.5), which fails loudly near level resonances.
//!
//! Frequencies are quoted relative to the bare target-qubit frequency
//! (`omega_t = 0`), so `omega_d = -delta` and the laboratory-frame eigenvalue
//! of labeled state `(n, m)` is the rotating-frame one plus `(n+m) * omega_d`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{eigh_r, RMatrix};
use crate::units::ANG_TO_MHZ;

use super::hamiltonian::{build_static_hamiltonian, BareIndex};
use super::params::{DeviceParams, DriveFrame};

#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub n_c: usize,
    pub n_t: usize,
    pub dim: usize,
    /// Drive detuning `omega_t - omega_d` (MHz) this basis was built at.
    pub delta: f64,
    /// Orthogonal eigenvector matrix, columns in bare-label order. The
    /// static Hamiltonian is real symmetric, so eigenvectors are real; the
    /// sign is fixed by making the labeled bare component positive.
    pub eigvecs: RMatrix,
    /// Rotating-frame eigenvalues in MHz, in bare-label order.
    pub eigvals: DVector<f64>,
    /// Dressed target-qubit frequency for control |0> resp. |1>, relative to
    /// the bare target frequency, MHz.
    pub omega_t_c0: f64,
    pub omega_t_c1: f64,
    /// Dressed control-qubit frequency for target |0> resp. |1>, same
    /// reference, MHz.
    pub omega_c_t0: f64,
    pub omega_c_t1: f64,
    /// zz-coupling `omega_t_c1 - omega_t_c0`, MHz (frame independent).
    pub omega_zz: f64,
}

impl DressedBasis {
    /// Rotating-frame eigenvalue (MHz) of the state labeled `(n, m)`.
    pub fn level(&self, n: usize, m: usize) -> f64 {
        self.eigvals[BareIndex { n, m }.flat(self.n_t)]
    }

    /// Flat indices of the computational dressed states |00>, |01>, |10>,
    /// |11> in label order.
    pub fn computational_indices(&self) -> [usize; 4] {
        [0, 1, self.n_t, self.n_t + 1]
    }

    /// `omega_c^t0 - omega_d` in MHz: the frame-correction frequency for the
    /// control-qubit phase, equal to the rotating-frame splitting of the
    /// labeled states (1,0) and (0,0).
    pub fn control_frame_offset(&self) -> f64 {
        self.level(1, 0) - self.level(0, 0)
    }
}

/// Diagonalize `H_qb + H_g` at an explicit detuning and label eigenstates.
pub fn diagonalize_static(p: &DeviceParams, delta: f64) -> Result<DressedBasis> {
    let h = build_static_hamiltonian(p, delta)?;
    let (vals, vecs) = eigh_r(&h);
    let dim = p.dim();
    let nt = p.n_t;

    // For each bare index, the unique column overlapping it by more than 1/2.
    let mut label_of = vec![usize::MAX; dim];
    let mut taken = vec![false; dim];
    for flat in 0..dim {
        let (mut best_col, mut best_ov) = (0usize, -1.0f64);
        for col in 0..dim {
            let ov = vecs[(flat, col)] * vecs[(flat, col)];
            if ov > best_ov {
                best_ov = ov;
                best_col = col;
            }
        }
        if best_ov <= 0.5 || taken[best_col] {
            let b = BareIndex::from_flat(flat, nt);
            return Err(Error::LabelingAmbiguous {
                n: b.n,
                m: b.m,
                overlap: best_ov.max(0.0),
            });
        }
        taken[best_col] = true;
        label_of[flat] = best_col;
    }

    // Permute columns into bare-label order, fixing the sign so the labeled
    // component is positive.
    let mut eigvecs = RMatrix::zeros(dim, dim);
    let mut eigvals = DVector::zeros(dim);
    for flat in 0..dim {
        let col = label_of[flat];
        let sgn = if vecs[(flat, col)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..dim {
            eigvecs[(row, flat)] = sgn * vecs[(row, col)];
        }
        eigvals[flat] = vals[col] * ANG_TO_MHZ;
    }

    let lab = |n: usize, m: usize| eigvals[BareIndex { n, m }.flat(nt)] + (n + m) as f64 * (-delta);
    let omega_t_c0 = lab(0, 1) - lab(0, 0);
    let omega_t_c1 = lab(1, 1) - lab(1, 0);
    let omega_c_t0 = lab(1, 0) - lab(0, 0);
    let omega_c_t1 = lab(1, 1) - lab(0, 1);
    Ok(DressedBasis {
        n_c: p.n_c,
        n_t: p.n_t,
        dim,
        delta,
        eigvecs,
        eigvals,
        omega_t_c0,
        omega_t_c1,
        omega_c_t0,
        omega_c_t1,
        omega_zz: omega_t_c1 - omega_t_c0,
    })
}

/// Resolve the drive detuning `delta = omega_t - omega_d` from the frame
/// selection rule, given a basis built at `delta = 0` (laboratory pass).
/// Frequency differences are frame independent, so one pass suffices.
pub fn resolve_drive_frame(p: &DeviceParams, basis_at_zero: &DressedBasis) -> f64 {
    match p.drive_frame {
        DriveFrame::ResonantC0 => -basis_at_zero.omega_t_c0,
        DriveFrame::ResonantC1 => -basis_at_zero.omega_t_c1,
        DriveFrame::Midpoint => -0.5 * (basis_at_zero.omega_t_c0 + basis_at_zero.omega_t_c1),
        DriveFrame::ExplicitDelta(d) => d,
    }
}

/// Two-pass construction: a `delta = 0` diagonalization to resolve the drive
/// frame, then the working basis at the resolved detuning.
pub fn resolved_basis(p: &DeviceParams) -> Result<(f64, DressedBasis)> {
    let lab = diagonalize_static(p, 0.0)?;
    let delta = resolve_drive_frame(p, &lab);
    if delta == 0.0 {
        return Ok((0.0, lab));
    }
    Ok((delta, diagonalize_static(p, delta)?))
}
