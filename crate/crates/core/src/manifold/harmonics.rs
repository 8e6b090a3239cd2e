//! Real spherical harmonics normalized against the unit-mass sphere measure.

use std::f64::consts::SQRT_2;

use super::Point;

/// `Q_l^m(z) = sqrt((2l+1)(l−m)!/(l+m)!)·P_l^m(z)` for `0 ≤ m ≤ l`, without
/// the Condon–Shortley phase. Computed by the stable three-term recurrence in
/// `l` starting from the sectoral value.
pub fn normalized_legendre(l: u32, m: u32, z: f64) -> f64 {
    assert!(m <= l, "order exceeds degree");
    let s = (1.0 - z * z).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        let k = k as f64;
        pmm *= ((2.0 * k + 1.0) / (2.0 * k)).sqrt() * s;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut prev = pmm;
    let mut cur = (2.0 * mf + 3.0).sqrt() * z * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (z * cur - b * prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Real harmonic of degree `l` and signed order `m` at the unit vector `p`.
pub(super) fn real_harmonic(l: u32, m: i32, p: &Point) -> f64 {
    let [x, y, z] = p.0;
    let q = normalized_legendre(l, m.unsigned_abs(), z);
    if m == 0 {
        return q;
    }
    let phi = y.atan2(x);
    let am = m.unsigned_abs() as f64;
    if m > 0 {
        SQRT_2 * q * (am * phi).cos()
    } else {
        SQRT_2 * q * (am * phi).sin()
    }
}

/// `Σ_l coeffs[l]·P_l(x)` with the ordinary Legendre polynomials.
pub fn legendre_series(coeffs: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    let (mut p0, mut p1) = (1.0, x);
    for (l, c) in coeffs.iter().enumerate() {
        let pl = match l {
            0 => 1.0,
            1 => x,
            _ => {
                let lf = l as f64;
                let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        sum += c * pl;
    }
    sum
}
