use crate::error::{invalid, Result};

pub const DEFAULT_SAFETY: f64 = 0.1;

/// Smallest `t` with `w1 ≤ safety · t^{d/2+2}`, i.e. `(w1/safety)^{1/(d/2+2)}`.
pub fn select_bandwidth_wass(w1: f64, d: usize, safety: f64) -> Result<f64> {
    if !(w1 > 0.0) || !w1.is_finite() {
        return Err(invalid("w1", format!("Wasserstein distance must be positive, got {w1}")));
    }
    if !(safety > 0.0 && safety < 1.0) {
        return Err(invalid("safety", format!("safety factor must lie in (0, 1), got {safety}")));
    }
    if d == 0 {
        return Err(invalid("d", "dimension must be positive"));
    }
    let exponent = d as f64 / 2.0 + 2.0;
    Ok((w1 / safety).powf(1.0 / exponent))
}

/// Spectral gap `(1 − e^{−tλ₂})/t` of the intermediate operator `(1 − S_t)/t`.
pub fn intermediate_gap(t: f64, lambda2: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", format!("bandwidth must be positive, got {t}")));
    }
    Ok(-(-t * lambda2).exp_m1() / t)
}
