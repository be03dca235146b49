//! Unit conventions.
//!
//! All frequencies in the public API are ordinary frequencies in MHz (the
//! "/2pi" convention used when quoting device parameters), all times are in
//! nanoseconds. Hamiltonian assembly multiplies by `MHZ_TO_ANG` exactly once,
//! producing angular frequencies in rad/ns, so that `H * t` is a phase in
//! radians with no further conversion.

/// rad/ns per ordinary MHz: 2 pi * 1e-3.
pub const MHZ_TO_ANG: f64 = 2.0 * std::f64::consts::PI * 1e-3;

/// Inverse of [`MHZ_TO_ANG`].
pub const ANG_TO_MHZ: f64 = 1.0 / MHZ_TO_ANG;

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = a.rem_euclid(two_pi);
    if x > std::f64::consts::PI {
        x -= two_pi;
    }
    x
}

/// Format a float with 12 significant digits, the CSV output convention.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.11e}");
    // trim trailing zeros in the mantissa for stable, compact output
    if let Some((mant, exp)) = s.split_once('e') {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        let e: i32 = exp.parse().unwrap_or(0);
        if (-4..12).contains(&e) {
            // re-render in plain notation when the exponent is small
            let digits = 11 - e;
            let plain = format!("{x:.*}", digits.max(0) as usize);
            let plain = plain.trim_end_matches('0').trim_end_matches('.');
            return plain.to_string();
        }
        return format!("{mant}e{e}");
    }
    s
}
