//! Echo-CR sequence: two half-duration CR pulses with the drive sign
//! flipped for the second half, ideal instantaneous control pi-flips at
//! `tau_p/2` and `tau_p`, evaluated against the fixed `ZX_{pi/2}` target.
//!
//! The symmetry cancels both compensating rotations of the basic gate
//! (`phi_1 = -phi_0`, control phases cancel); only fixed pi/2 conversions
//! remain to turn the gate into a CNOT. The trailing flip at `tau_p` is
//! kept inside the reported evolution rather than compiled away.

use crate::calibration::{
    find_phase_crossing, CalibratedGate, GateAngles, GateType, ShapeSpec,
};
use crate::error::Result;
use crate::linalg::CMatrix;
use crate::model::Pulse;
use crate::propagator::{EvolutionResult, IdealOp, Propagator};

/// The echo pulse plus its flip schedule and ideal target.
#[derive(Debug, Clone)]
pub struct EchoSpec {
    pub pulse: Pulse,
    pub flip_times: [f64; 2],
    /// `ZX_{pi/2}` target (positive sign choice) with its angles.
    pub target: (CMatrix, GateAngles),
}

impl EchoSpec {
    pub fn new(eps_m: f64, tau_p: f64, tau_r: f64, steps_per_ramp: usize) -> Result<Self> {
        Ok(EchoSpec {
            pulse: Pulse::echo(eps_m, tau_p, tau_r, steps_per_ramp)?,
            flip_times: [0.5 * tau_p, tau_p],
            target: {
                let (u, a) = crate::calibration::zx_target(1.0);
                (u, a)
            },
        })
    }

    pub fn flips(&self) -> Vec<(f64, IdealOp)> {
        self.flip_times
            .iter()
            .map(|&t| (t, IdealOp::ControlFlip))
            .collect()
    }
}

/// Evolve the echo sequence at explicit duration and ramp length.
pub fn run_echo(
    prop: &Propagator,
    eps_m: f64,
    tau_p: f64,
    tau_r: f64,
    steps_per_ramp: usize,
) -> Result<EvolutionResult> {
    let spec = EchoSpec::new(eps_m, tau_p, tau_r, steps_per_ramp)?;
    prop.evolve(&spec.pulse, &spec.flips())
}

/// Calibrate the echo gate duration against the `ZX_{pi/2}` target.
pub fn calibrate_echo(prop: &Propagator, shape: &ShapeSpec, eps_m: f64) -> Result<CalibratedGate> {
    find_phase_crossing(prop, GateType::Echo, shape, eps_m, std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::errorbudget::closest_block_unitary;
    use crate::model::DeviceParams;
    use crate::units::wrap_angle;
    use approx::assert_relative_eq;

    fn shape() -> ShapeSpec {
        ShapeSpec::new(0.3, 120)
    }

    #[test]
    fn zero_drive_echo_has_identity_moduli() {
        let p = DeviceParams::standard(130.0);
        let prop = Propagator::new(&p).unwrap();
        let r = run_echo(&prop, 0.0, 80.0, 24.0, 60).unwrap();
        assert!(r.unitarity_defect < 1e-10);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(r.m[(i, j)].norm(), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn echo_angles_are_antisymmetric_and_phases_cancel() {
        let p = DeviceParams::standard(130.0);
        let prop = Propagator::new(&p).unwrap();
        let cal = calibrate_echo(&prop, &shape(), 20.0).unwrap();
        let a = &cal.report.angles;
        // phi_1 = -phi_0
        assert!(
            (a.phi1 + a.phi0).abs() < 1e-3,
            "phi1 = {}, phi0 = {}",
            a.phi1,
            a.phi0
        );
        // theta_rep and theta_zz cancel between the halves
        assert!(
            wrap_angle(a.theta1 - a.theta0).abs() < 1e-2,
            "theta diff = {}",
            wrap_angle(a.theta1 - a.theta0)
        );
        // and the gate is close to ZX_{pi/2}
        assert!(cal.report.infidelity < 0.05);
        assert_relative_eq!(a.phi1.abs(), std::f64::consts::FRAC_PI_2, epsilon = 0.05);
    }

    #[test]
    fn half_pulse_composes_into_full_echo() {
        // calibrate a single half to |phi1 - phi0| = pi/2; the echo built
        // from two such halves must sit at |phi1 - phi0| = pi
        let p = DeviceParams::standard(130.0)
            .with_drive_frame(crate::model::DriveFrame::Midpoint);
        let prop = Propagator::new(&p).unwrap();
        let sh = shape();
        let half = find_phase_crossing(
            &prop,
            GateType::Basic,
            &sh,
            30.0,
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let tau_full = 2.0 * half.report.tau_cnot_ns;
        let spec = EchoSpec::new(30.0, tau_full, sh.tau_r_frac * tau_full, sh.steps_per_ramp)
            .unwrap();
        let r = prop.evolve(&spec.pulse, &spec.flips()).unwrap();
        let a = crate::calibration::extract_angles(&r.m).unwrap();
        let diff = wrap_angle(a.phi1 - a.phi0).abs();
        assert!(
            (diff - std::f64::consts::PI).abs() < 1e-3,
            "full-echo |phi1-phi0| = {diff}"
        );
    }

    #[test]
    fn echo_leaks_more_than_basic_at_equal_duration() {
        // four shorter ramps make the echo more non-adiabatic
        let p = DeviceParams::standard(190.0);
        let prop = Propagator::new(&p).unwrap();
        for eps_m in [30.0, 45.0, 60.0] {
            let tau_p = 160.0;
            let basic = prop
                .evolve(&Pulse::basic_frac(eps_m, tau_p, 0.3, 240).unwrap(), &[])
                .unwrap();
            let echo = run_echo(&prop, eps_m, tau_p, 0.3 * tau_p, 120).unwrap();
            let (_, f_basic) = closest_block_unitary(&basic.m).unwrap();
            let (_, f_echo) = closest_block_unitary(&echo.m).unwrap();
            assert!(
                1.0 - f_echo >= 1.0 - f_basic,
                "eps_m = {eps_m}: echo leak {:.3e} < basic {:.3e}",
                1.0 - f_echo,
                1.0 - f_basic
            );
        }
    }
}
