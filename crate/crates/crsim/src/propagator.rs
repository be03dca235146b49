//! Full two-transmon time evolution over a drive pulse.
//!
//! The simulation runs in the eigenbasis of the static Hamiltonian: the
//! diagonal part is exact and only the drive term evolves. Each ramp step
//! uses the two-Gauss-point Magnus scheme
//!
//! ```text
//! Omega = -i h (H_a + H_b)/2 - (sqrt(3) h^2 / 12) [H_b, H_a],
//! ```
//!
//! with `H_{a,b}` evaluated at `t + h (1/2 -+ sqrt(3)/6)`; since
//! `H(t) = D + eps(t) W` the commutator reduces to `(eps_a - eps_b) [D, W]`
//! with `[D, W]` precomputed. The exponential of the anti-Hermitian `Omega`
//! is taken through a Hermitian eigendecomposition, so every step is unitary
//! to machine precision. Flat stretches have constant `H` and are advanced
//! in a single exact exponential.
//!
//! With a real coupling and a real drive the whole Hamiltonian family is
//! real, which buys two step-kernel identities used to avoid recomputing
//! eigendecompositions: the mirrored down-ramp steps are transposes of the
//! up-ramp ones, and a sign-flipped drive is a parity conjugation
//! `K(-eps) = P K(eps) P` with `P = diag((-1)^(n+m))` (exact because the
//! static Hamiltonian preserves total excitation). Both identities are
//! cross-checked against directly built kernels in the tests.

use nalgebra::DVector;

use crate::calibration;
use crate::error::{Error, Result};
use crate::linalg::{eigh_c, eigh_r, to_complex, unitarity_defect, CMatrix, RMatrix, C64};
use crate::model::{
    build_drive_hamiltonian, build_static_hamiltonian, BareIndex, DeviceParams, DressedBasis,
    Pulse,
};
use crate::units::{wrap_angle, ANG_TO_MHZ, MHZ_TO_ANG};

/// Idealized instantaneous operations interleaved with the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdealOp {
    /// Swap the dressed states `(0, m) <-> (1, m)` for every target level m.
    ControlFlip,
}

/// Result of one pulse evolution.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    /// Full evolution unitary in the dressed basis (bare-label order).
    pub v: CMatrix,
    /// 4x4 projection onto the computational dressed states
    /// |00>, |01>, |10>, |11> (plain element selection).
    pub m: CMatrix,
    /// Number of exponential applications taken.
    pub step_count: usize,
    /// Max-norm of `V^H V - I`.
    pub unitarity_defect: f64,
}

/// Prepared propagation engine for one device working point.
pub struct Propagator {
    params: DeviceParams,
    delta: f64,
    basis: DressedBasis,
    /// Static eigenvalues, rad/ns, label order.
    d_ang: DVector<f64>,
    /// Dressed drive operator per MHz of drive amplitude, rad/ns.
    w_ang: RMatrix,
    /// Commutator `[D, W]` (real antisymmetric), rad/ns squared.
    c_ang: RMatrix,
    /// `(-1)^(n+m)` per labeled state.
    parity: DVector<f64>,
    /// Spectral-norm bound of `w_ang`, for the coarse-step guard.
    w_bound: f64,
}

impl Propagator {
    pub fn new(params: &DeviceParams) -> Result<Self> {
        params.validate()?;
        let (delta, basis) = sector_resolved_basis(params)?;
        let dim = params.dim();
        let d_ang = basis.eigvals.map(|e| e * MHZ_TO_ANG);
        let w_bare = build_drive_hamiltonian(params, 1.0);
        let w_ang = basis.eigvecs.transpose() * w_bare * &basis.eigvecs;
        let mut c_ang = RMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                c_ang[(i, j)] = (d_ang[i] - d_ang[j]) * w_ang[(i, j)];
            }
        }
        let parity = DVector::from_iterator(
            dim,
            (0..dim).map(|f| {
                let b = BareIndex::from_flat(f, params.n_t);
                if (b.n + b.m) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }),
        );
        let w_bound = spectral_bound(&w_ang);
        Ok(Propagator {
            params: *params,
            delta,
            basis,
            d_ang,
            w_ang,
            c_ang,
            parity,
            w_bound,
        })
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn basis(&self) -> &DressedBasis {
        &self.basis
    }

    /// Resolved drive detuning `omega_t - omega_d`, MHz.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Smallest per-ramp step count that keeps the drive phase per step
    /// under the 0.5 rad coarse-step guard for this amplitude and ramp
    /// duration (with a 20% margin).
    pub fn min_steps_per_ramp(&self, eps_m: f64, tau_r: f64) -> usize {
        let h_max = 0.5 / (eps_m.abs().max(1e-12) * self.w_bound);
        ((1.2 * tau_r / h_max).ceil() as usize).max(1)
    }

    /// Evolve over `pulse` with ideal operations inserted at the given
    /// times. Flip times must coincide with a segment boundary or fall in a
    /// flat stretch (which is split exactly there); the echo sequence puts
    /// them at segment boundaries.
    pub fn evolve(&self, pulse: &Pulse, flips: &[(f64, IdealOp)]) -> Result<EvolutionResult> {
        const TOL: f64 = 1e-9;
        let dim = self.params.dim();
        let mut v = CMatrix::identity(dim, dim);
        let mut steps = 0usize;

        let mut flip_times: Vec<(f64, IdealOp)> = flips.to_vec();
        flip_times.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for &(t, _) in &flip_times {
            if !(0.0..=pulse.tau_p + TOL).contains(&t) {
                return Err(Error::InvalidPulse(format!(
                    "flip time {t} outside [0, {}]",
                    pulse.tau_p
                )));
            }
            let inside_ramp = pulse.segments.iter().any(|seg| {
                (t > seg.start + TOL && t < seg.start + seg.ramp - TOL)
                    || (t > seg.end - seg.ramp + TOL && t < seg.end - TOL)
            });
            if inside_ramp {
                return Err(Error::InvalidPulse(format!(
                    "flip time {t} falls inside a ramp; only segment boundaries \
                     and flat stretches are supported"
                )));
            }
        }
        let mut next_flip = 0usize;

        let mut kernels: Vec<(u64, RampKernels)> = Vec::new();
        for seg in &pulse.segments {
            let key = (seg.ramp / pulse.steps_per_ramp as f64).to_bits();
            if !kernels.iter().any(|(k, _)| *k == key) {
                let k = RampKernels::build(self, pulse.eps_m, seg.ramp, pulse.steps_per_ramp)?;
                kernels.push((key, k));
            }
        }

        for seg in &pulse.segments {
            let key = (seg.ramp / pulse.steps_per_ramp as f64).to_bits();
            let kern = &kernels.iter().find(|(k, _)| *k == key).unwrap().1;
            let flat_start = seg.start + seg.ramp;
            let flat_end = seg.end - seg.ramp;

            self.flush_flips(&mut v, &flip_times, &mut next_flip, seg.start + TOL);
            steps += kern.apply(&mut v, seg.sign > 0.0, false, &self.parity);

            // flat stretch, split exactly at interior flip times
            if flat_end > flat_start + TOL {
                let mut t0 = flat_start;
                loop {
                    let t_next = flip_times
                        .get(next_flip)
                        .map(|&(t, _)| t)
                        .filter(|&t| t > t0 + TOL && t < flat_end - TOL);
                    let t1 = t_next.unwrap_or(flat_end);
                    self.apply_flat(&mut v, seg.sign * pulse.eps_m, t1 - t0);
                    steps += 1;
                    if t_next.is_some() {
                        self.flush_flips(&mut v, &flip_times, &mut next_flip, t1 + TOL);
                        t0 = t1;
                    } else {
                        break;
                    }
                }
            }

            steps += kern.apply(&mut v, seg.sign > 0.0, true, &self.parity);
        }
        self.flush_flips(&mut v, &flip_times, &mut next_flip, f64::INFINITY);

        let m = self.project_m(&v);
        let defect = unitarity_defect(&v);
        Ok(EvolutionResult {
            v,
            m,
            step_count: steps,
            unitarity_defect: defect,
        })
    }

    fn flush_flips(
        &self,
        v: &mut CMatrix,
        flips: &[(f64, IdealOp)],
        next: &mut usize,
        up_to: f64,
    ) {
        while *next < flips.len() && flips[*next].0 <= up_to {
            match flips[*next].1 {
                IdealOp::ControlFlip => self.control_flip(v),
            }
            *next += 1;
        }
    }

    /// Swap rows `(0, m) <-> (1, m)` of `v` for all target levels.
    fn control_flip(&self, v: &mut CMatrix) {
        let nt = self.params.n_t;
        for m in 0..nt {
            v.swap_rows(m, nt + m);
        }
    }

    /// One exact exponential over a constant-drive stretch.
    fn apply_flat(&self, v: &mut CMatrix, eps: f64, dur: f64) {
        let dim = self.params.dim();
        let mut a = RMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                a[(i, j)] = eps * self.w_ang[(i, j)];
            }
            a[(i, i)] += self.d_ang[i];
        }
        let (vals, q) = eigh_r(&a);
        let qc = to_complex(&q);
        let mut inner = qc.adjoint() * &*v;
        for (k, val) in vals.iter().enumerate() {
            let ph = C64::from_polar(1.0, -val * dur);
            for c in 0..dim {
                inner[(k, c)] *= ph;
            }
        }
        *v = qc * inner;
    }

    fn project_m(&self, v: &CMatrix) -> CMatrix {
        let idx = self.basis.computational_indices();
        CMatrix::from_fn(4, 4, |i, j| v[(idx[i], idx[j])])
    }

    /// Effective drive amplitudes from the derivative definition
    /// `eps~_n = (1/2) d phi_n / d tau_p` at fixed ramp duration and
    /// amplitude, by a central finite difference over `tau_p +- dtau`.
    /// Returns `(eps~_0, eps~_1)` in MHz.
    pub fn effective_drives_numeric(
        &self,
        eps_m: f64,
        tau_r: f64,
        tau_p: f64,
        dtau: f64,
    ) -> Result<(f64, f64)> {
        let lo = Pulse::basic(eps_m, tau_p - dtau, tau_r, 600)?;
        let hi = Pulse::basic(eps_m, tau_p + dtau, tau_r, 600)?;
        let a_lo = calibration::extract_angles(&self.evolve(&lo, &[])?.m)?;
        let a_hi = calibration::extract_angles(&self.evolve(&hi, &[])?.m)?;
        let d0 = wrap_angle(a_hi.phi0 - a_lo.phi0);
        let d1 = wrap_angle(a_hi.phi1 - a_lo.phi1);
        for d in [a_hi.phi0 - a_lo.phi0, a_hi.phi1 - a_lo.phi1] {
            if wrap_angle(d).abs() > std::f64::consts::PI - 1e-6 {
                return Err(Error::UnwrapAmbiguous { dphi: d.abs() });
            }
        }
        let scale = 1.0 / (4.0 * dtau * MHZ_TO_ANG);
        Ok((d0 * scale, d1 * scale))
    }
}

/// Diagonalize the static Hamiltonian sector by sector (total excitation
/// `n + m` is conserved), which keeps exactly degenerate states from
/// different sectors unmixed and makes the parity of every labeled state
/// exact. Produces the same `DressedBasis` contract as
/// [`crate::model::resolved_basis`].
fn sector_resolved_basis(p: &DeviceParams) -> Result<(f64, DressedBasis)> {
    let b0 = sector_diagonalize(p, 0.0)?;
    let delta = crate::model::resolve_drive_frame(p, &b0);
    if delta == 0.0 {
        return Ok((0.0, b0));
    }
    Ok((delta, sector_diagonalize(p, delta)?))
}

fn sector_diagonalize(p: &DeviceParams, delta: f64) -> Result<DressedBasis> {
    let h = build_static_hamiltonian(p, delta)?;
    let dim = p.dim();
    let nt = p.n_t;
    let max_s = (p.n_c - 1) + (p.n_t - 1);
    let mut eigvecs = RMatrix::zeros(dim, dim);
    let mut eigvals = DVector::zeros(dim);
    for s in 0..=max_s {
        let members: Vec<usize> = (0..dim)
            .filter(|&f| {
                let b = BareIndex::from_flat(f, nt);
                b.n + b.m == s
            })
            .collect();
        let k = members.len();
        let hs = RMatrix::from_fn(k, k, |i, j| h[(members[i], members[j])]);
        let (vals, vecs) = eigh_r(&hs);
        // label within the sector by max overlap
        let mut taken = vec![false; k];
        for (li, &flat) in members.iter().enumerate() {
            let (mut best, mut best_ov) = (usize::MAX, -1.0f64);
            for col in 0..k {
                if taken[col] {
                    continue;
                }
                let ov = vecs[(li, col)] * vecs[(li, col)];
                if ov > best_ov {
                    best_ov = ov;
                    best = col;
                }
            }
            if best == usize::MAX || best_ov <= 0.5 {
                let b = BareIndex::from_flat(flat, nt);
                return Err(Error::LabelingAmbiguous {
                    n: b.n,
                    m: b.m,
                    overlap: best_ov.max(0.0),
                });
            }
            taken[best] = true;
            let sgn = if vecs[(li, best)] < 0.0 { -1.0 } else { 1.0 };
            for (ri, &rflat) in members.iter().enumerate() {
                eigvecs[(rflat, flat)] = sgn * vecs[(ri, best)];
            }
            eigvals[flat] = vals[best] * ANG_TO_MHZ;
        }
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

/// Step unitaries for the canonical positive-sign ramp-up, from which the
/// mirrored and sign-flipped ramps follow by transposition and parity.
struct RampKernels {
    /// `U_k = exp(Omega_k)` for each up-ramp step.
    unitaries: Vec<CMatrix>,
}

impl RampKernels {
    fn build(prop: &Propagator, eps_m: f64, tau_r: f64, steps: usize) -> Result<Self> {
        let dim = prop.params.dim();
        let h = tau_r / steps as f64;
        let gauss = 3f64.sqrt() / 6.0;
        let gamma = 3f64.sqrt() * h * h / 12.0;
        let shape = |t: f64| 0.5 * (1.0 - (std::f64::consts::PI * t / tau_r).cos());
        let mut unitaries = Vec::with_capacity(steps);
        for k in 0..steps {
            let t0 = k as f64 * h;
            let eps_a = eps_m * shape(t0 + h * (0.5 - gauss));
            let eps_b = eps_m * shape(t0 + h * (0.5 + gauss));
            let eps_mid = 0.5 * (eps_a + eps_b);
            let deps = eps_a - eps_b;

            // coarse-step accuracy guard on the drive part of the step phase
            let phase = h * eps_mid.abs() * prop.w_bound;
            if phase > 0.5 {
                return Err(Error::StepTooCoarse { phase });
            }

            // K = i Omega = h (D + eps_mid W) - i gamma deps [D, W]
            let mut kmat = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    kmat[(i, j)] = C64::new(
                        h * eps_mid * prop.w_ang[(i, j)],
                        -gamma * deps * prop.c_ang[(i, j)],
                    );
                }
                kmat[(i, i)] += C64::new(h * prop.d_ang[i], 0.0);
            }
            let (vals, q) = eigh_c(&kmat);
            let mut inner = q.adjoint();
            for (r, val) in vals.iter().enumerate() {
                let ph = C64::from_polar(1.0, -val);
                for c in 0..dim {
                    inner[(r, c)] *= ph;
                }
            }
            unitaries.push(q * inner);
        }
        Ok(RampKernels { unitaries })
    }

    /// Apply this ramp to `v`. `positive` selects the drive sign, `down`
    /// selects the mirrored (descending) ramp — step unitary variants
    /// `U`, `U^T`, `P U P`, `P U^T P`. Returns the step count.
    fn apply(&self, v: &mut CMatrix, positive: bool, down: bool, parity: &DVector<f64>) -> usize {
        let steps = self.unitaries.len();
        let dim = v.nrows();
        let mut buf = CMatrix::zeros(dim, dim);
        if !positive {
            scale_rows_by_parity(v, parity);
        }
        for k in 0..steps {
            let u = if down {
                &self.unitaries[steps - 1 - k]
            } else {
                &self.unitaries[k]
            };
            if down {
                u.tr_mul_to(v, &mut buf);
            } else {
                u.mul_to(v, &mut buf);
            }
            std::mem::swap(v, &mut buf);
        }
        if !positive {
            scale_rows_by_parity(v, parity);
        }
        steps
    }
}

/// Row sign flips by the parity vector; conjugation `P (...) P` around a
/// whole ramp collapses to one pre- and one post-scaling because parity
/// signs between consecutive steps cancel.
fn scale_rows_by_parity(v: &mut CMatrix, p: &DVector<f64>) {
    for i in 0..v.nrows() {
        if p[i] < 0.0 {
            v.row_mut(i).neg_mut();
        }
    }
}

/// Spectral-norm bound by a few power iterations on `m^T m`.
fn spectral_bound(m: &RMatrix) -> f64 {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut norm = 0.0;
    for _ in 0..60 {
        let y = m.transpose() * (m * &x);
        norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        x = y / norm;
    }
    norm.sqrt() * 1.000001
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_c;
    use approx::assert_relative_eq;

    fn prop130() -> Propagator {
        Propagator::new(&DeviceParams::standard(130.0)).unwrap()
    }

    #[test]
    fn sector_basis_matches_dense_basis() {
        let p = DeviceParams::standard(130.0);
        let (d1, b1) = sector_resolved_basis(&p).unwrap();
        let (d2, b2) = crate::model::resolved_basis(&p).unwrap();
        assert_relative_eq!(d1, d2, max_relative = 1e-10);
        assert!((b1.omega_zz - b2.omega_zz).abs() < 1e-10);
        for f in 0..b1.dim {
            assert!((b1.eigvals[f] - b2.eigvals[f]).abs() < 1e-9);
            // columns agree up to the fixed sign convention
            let dot: f64 = b1.eigvecs.column(f).dot(&b2.eigvecs.column(f));
            assert!(dot > 1.0 - 1e-10, "column {f} mismatch: dot = {dot}");
        }
    }

    #[test]
    fn zero_drive_gives_diagonal_phases() {
        let prop = prop130();
        let pulse = Pulse::basic(0.0, 50.0, 15.0, 50).unwrap();
        let r = prop.evolve(&pulse, &[]).unwrap();
        assert!(r.unitarity_defect <= 1e-10);
        // diagonal in the dressed basis with unit-modulus entries
        for i in 0..prop.params.dim() {
            for j in 0..prop.params.dim() {
                if i != j {
                    assert!(r.v[(i, j)].norm() < 1e-12);
                }
            }
            assert_relative_eq!(r.v[(i, i)].norm(), 1.0, max_relative = 1e-12);
            let expected = -prop.d_ang[i] * 50.0;
            let got = r.v[(i, i)].arg();
            assert!(
                wrap_angle(got - expected).abs() < 1e-9,
                "phase mismatch at {i}"
            );
        }
        for k in 0..4 {
            assert_relative_eq!(r.m[(k, k)].norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn kernel_reuse_matches_direct_construction() {
        // Build a sign-flipped and a mirrored ramp directly and compare with
        // the parity/transpose shortcuts.
        let prop = prop130();
        let steps = 40usize;
        let tau_r = 13.0;
        let kern = RampKernels::build(&prop, 40.0, tau_r, steps).unwrap();
        let kern_neg = RampKernels::build(&prop, -40.0, tau_r, steps).unwrap();
        let dim = prop.params.dim();

        // parity: U(-eps) = P U(+eps) P
        for k in 0..steps {
            let mut expected = kern.unitaries[k].clone();
            for i in 0..dim {
                for j in 0..dim {
                    expected[(i, j)] *= prop.parity[i] * prop.parity[j];
                }
            }
            let diff = max_abs_c(&(&expected - &kern_neg.unitaries[k]));
            assert!(diff < 1e-12, "parity reuse broken at step {k}: {diff}");
        }

        // mirror: the down-ramp is the reversed-transposed up-ramp. Compare
        // a full up+down traversal against an explicitly sampled down ramp.
        let mut v_fast = CMatrix::identity(dim, dim);
        kern.apply(&mut v_fast, true, true, &prop.parity);
        // direct: sample the descending shape
        let h = tau_r / steps as f64;
        let gauss = 3f64.sqrt() / 6.0;
        let gamma = 3f64.sqrt() * h * h / 12.0;
        let shape_down = |t: f64| 0.5 * (1.0 - (std::f64::consts::PI * (tau_r - t) / tau_r).cos());
        let mut v_direct = CMatrix::identity(dim, dim);
        for k in 0..steps {
            let t0 = k as f64 * h;
            let eps_a = 40.0 * shape_down(t0 + h * (0.5 - gauss));
            let eps_b = 40.0 * shape_down(t0 + h * (0.5 + gauss));
            let eps_mid = 0.5 * (eps_a + eps_b);
            let deps = eps_a - eps_b;
            let mut kmat = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    kmat[(i, j)] = C64::new(
                        h * eps_mid * prop.w_ang[(i, j)],
                        -gamma * deps * prop.c_ang[(i, j)],
                    );
                }
                kmat[(i, i)] += C64::new(h * prop.d_ang[i], 0.0);
            }
            let (vals, q) = eigh_c(&kmat);
            let mut inner = q.adjoint() * &v_direct;
            for (r, val) in vals.iter().enumerate() {
                let ph = C64::from_polar(1.0, -val);
                for c in 0..dim {
                    inner[(r, c)] *= ph;
                }
            }
            v_direct = &q * inner;
        }
        let diff = max_abs_c(&(&v_fast - &v_direct));
        assert!(diff < 1e-11, "mirror reuse broken: {diff}");
    }

    #[test]
    fn piecewise_constant_matches_exponential_product() {
        // 3x3-level system, two flat stretches: the evolution must equal the
        // product of the exact matrix exponentials.
        let p = DeviceParams::standard(130.0).with_levels(3, 3);
        let prop = Propagator::new(&p).unwrap();
        let dim = p.dim();
        let (e1, t1) = (25.0, 17.0);
        let (e2, t2) = (-40.0, 9.0);
        let mut v = CMatrix::identity(dim, dim);
        prop.apply_flat(&mut v, e1, t1);
        prop.apply_flat(&mut v, e2, t2);

        let expm = |eps: f64, dur: f64| {
            let mut a = RMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    a[(i, j)] = eps * prop.w_ang[(i, j)];
                }
                a[(i, i)] += prop.d_ang[i];
            }
            let (vals, q) = eigh_r(&a);
            let qc = to_complex(&q);
            let d = CMatrix::from_diagonal(&vals.map(|x| C64::from_polar(1.0, -x * dur)));
            &qc * d * qc.adjoint()
        };
        let oracle = expm(e2, t2) * expm(e1, t1);
        assert!(max_abs_c(&(&v - &oracle)) < 1e-10);
    }

    #[test]
    fn time_symmetric_pulse_gives_symmetric_v() {
        // For a real Hamiltonian family and a time-symmetric envelope the
        // evolution matrix is complex symmetric; conjugation then inverts it.
        let prop = prop130();
        let pulse = Pulse::basic(40.0, 80.0, 24.0, 80).unwrap();
        let r = prop.evolve(&pulse, &[]).unwrap();
        let sym_defect = max_abs_c(&(&r.v - r.v.transpose()));
        assert!(sym_defect < 1e-9, "V not symmetric: {sym_defect}");
        let conj = r.v.map(|z| z.conj());
        let prod = &conj * &r.v;
        let eye = CMatrix::identity(prop.params.dim(), prop.params.dim());
        assert!(max_abs_c(&(prod - eye)) < 1e-9);
    }

    #[test]
    fn envelope_sign_flip_is_parity_conjugation() {
        let prop = prop130();
        let plus = prop
            .evolve(&Pulse::basic(40.0, 60.0, 18.0, 60).unwrap(), &[])
            .unwrap();
        let minus = prop
            .evolve(&Pulse::basic(-40.0, 60.0, 18.0, 60).unwrap(), &[])
            .unwrap();
        for i in 0..prop.params.dim() {
            for j in 0..prop.params.dim() {
                let expected = plus.v[(i, j)] * prop.parity[i] * prop.parity[j];
                assert!((expected - minus.v[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unitarity_and_step_halving_order() {
        let prop = prop130();
        let r1 = prop
            .evolve(&Pulse::basic(40.0, 100.0, 30.0, 150).unwrap(), &[])
            .unwrap();
        assert!(r1.unitarity_defect <= 1e-10);
        let r2 = prop
            .evolve(&Pulse::basic(40.0, 100.0, 30.0, 300).unwrap(), &[])
            .unwrap();
        let r3 = prop
            .evolve(&Pulse::basic(40.0, 100.0, 30.0, 600).unwrap(), &[])
            .unwrap();
        let d12 = max_abs_c(&(&r1.v - &r2.v));
        let d23 = max_abs_c(&(&r2.v - &r3.v));
        // classical order 4: each halving shrinks the defect ~16x
        let ratio = d12 / d23;
        assert!(
            (10.0..26.0).contains(&ratio),
            "halving ratio {ratio} (diffs {d12:.3e}, {d23:.3e})"
        );
        assert!(d23 < 3e-7, "300->600 diff too large: {d23:.3e}");
    }

    #[test]
    fn coarse_step_guard_fires() {
        let prop = prop130();
        let pulse = Pulse::basic(400.0, 100.0, 30.0, 2).unwrap();
        match prop.evolve(&pulse, &[]) {
            Err(Error::StepTooCoarse { .. }) => {}
            other => panic!("expected StepTooCoarse, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn control_flip_squares_to_identity() {
        let prop = prop130();
        let pulse = Pulse::basic(0.0, 40.0, 12.0, 40).unwrap();
        let flips = vec![(20.0, IdealOp::ControlFlip), (40.0, IdealOp::ControlFlip)];
        let r = prop.evolve(&pulse, &flips).unwrap();
        assert!(r.unitarity_defect < 1e-10);
        // two flips with free evolution in between: |M| entries diagonal
        for i in 0..4 {
            assert_relative_eq!(r.m[(i, i)].norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn numeric_drives_match_first_order_at_small_amplitude() {
        let prop = prop130();
        let (e0, _e1) = prop.effective_drives_numeric(2.0, 20.0, 60.0, 1.0).unwrap();
        // ratio eps~_0 / eps_m -> -g/Delta within 2%
        assert_relative_eq!(e0 / 2.0, -3.0 / 130.0, max_relative = 0.02);
    }

    #[test]
    fn numeric_drive_sign_pattern_matches_first_order() {
        for delta in [-70.0, 70.0, 130.0, 190.0] {
            let p = DeviceParams::standard(delta);
            let prop = Propagator::new(&p).unwrap();
            let (e0, e1) = prop
                .effective_drives_numeric(10.0, 20.0, 60.0, 1.0)
                .unwrap();
            let fo = crate::semianalytic::first_order_speed(&p, 10.0).unwrap();
            assert_eq!(
                (e1 - e0).signum(),
                fo.signum(),
                "sign mismatch at Delta = {delta}"
            );
        }
    }

    #[test]
    fn g_zero_numeric_drives_vanish() {
        let mut p = DeviceParams::standard(130.0);
        p.g = 0.0;
        let prop = Propagator::new(&p).unwrap();
        let (e0, e1) = prop.effective_drives_numeric(10.0, 20.0, 60.0, 1.0).unwrap();
        assert!(e0.abs() < 1e-8 && e1.abs() < 1e-8, "{e0} {e1}");
    }
}
