//! Bessel functions `J_m` for the orders `m = (d-2)/2` used by the radial
//! Fourier transforms, and the remainder kernel `K`.
//!
//! For `x ≤ BESSEL_SEAM` the power series is summed in double-double
//! arithmetic (the terms reach `1e7` at the seam, so plain `f64` would lose
//! about nine digits to cancellation). Beyond the seam the Hankel expansion
//! is truncated at its smallest term.

use std::f64::consts::PI;

use twofloat::TwoFloat;

use crate::tolerances::BESSEL_SEAM;

/// Order `(d - 2)/2`.
pub fn order(d: usize) -> f64 {
    (d as f64 - 2.0) / 2.0
}

/// `Γ(z)` for `z` a positive integer or half-integer.
pub fn gamma_half_integer(z: f64) -> f64 {
    assert!(z > 0.0 && (2.0 * z).fract() == 0.0, "z must be a positive multiple of 1/2");
    let (mut g, mut x) = if z.fract() == 0.0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while x < z {
        g *= x;
        x += 1.0;
    }
    g
}

/// `a / b` to double-double accuracy. `TwoFloat`'s own division returns
/// only a double-precision quotient, so one Newton correction is applied.
fn div(a: TwoFloat, b: f64) -> TwoFloat {
    let r = 1.0 / b;
    let x = a * r;
    let residual = a - x * TwoFloat::from(b);
    x + residual * r
}

/// Power series `Σ_k (-1)^k (x/2)^{2k+m} / (k! Γ(k+m+1))`.
pub fn series(m: f64, x: f64) -> f64 {
    let half = x / 2.0;
    let prefactor = half.powf(m) / gamma_half_integer(m + 1.0);
    let q = TwoFloat::from(half) * TwoFloat::from(half);
    let mut term = TwoFloat::from(1.0);
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term = -div(term * q, k * (k + m));
        sum += term;
        if term.hi().abs() < 1e-34 * sum.hi().abs().max(1e-300) || k > 200.0 {
            break;
        }
        k += 1.0;
    }
    prefactor * f64::from(sum)
}

/// Phase `x - mπ/2 - π/4` of the leading asymptotic term.
pub fn phase(m: f64, x: f64) -> f64 {
    x - m * PI / 2.0 - PI / 4.0
}

/// Hankel expansion `√(2/(πx)) (P cos χ - Q sin χ)`, truncated at the
/// smallest term, with at least three correction terms.
pub fn asymptotic(m: f64, x: f64) -> f64 {
    let mu = 4.0 * m * m;
    let (mut p, mut q) = (1.0, 0.0);
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = a.abs();
        if a == 0.0 || (k > 3 && (mag > prev || mag < 1e-18)) {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        prev = mag;
    }
    let chi = phase(m, x);
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `J_m(x)` for `x ≥ 0`.
pub fn bessel_j(m: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0.0 {
            1.0
        } else if m > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if x <= BESSEL_SEAM {
        series(m, x)
    } else {
        asymptotic(m, x)
    }
}

/// Leading asymptotic term `√(2/(πx)) cos(x - mπ/2 - π/4)`.
pub fn leading_term(m: f64, x: f64) -> f64 {
    (2.0 / (PI * x)).sqrt() * phase(m, x).cos()
}

/// `(J(r), K(r))` with `J = J_{(d-2)/2}` and `K = J - leading term`.
pub fn bessel_kernel(d: usize, r: f64) -> (f64, f64) {
    let m = order(d);
    if r == 0.0 {
        return match d {
            1 => (f64::INFINITY, 0.0),
            2 => (1.0, f64::NEG_INFINITY),
            _ => (0.0, 0.0),
        };
    }
    let j = bessel_j(m, r);
    (j, j - leading_term(m, r))
}

/// `∫_{S^{d-1}} e^{2πi t θ₁} dσ(θ) = 2π t^{-m} J_m(2πt)` with surface measure
/// (counting measure on `{±1}` when d = 1); equals the surface area at `t = 0`.
pub fn sphere_fourier(d: usize, t: f64) -> f64 {
    let m = order(d);
    if t == 0.0 {
        return 2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d as f64 / 2.0);
    }
    match d {
        1 => 2.0 * (2.0 * PI * t).cos(),
        3 => 4.0 * PI * (2.0 * PI * t).sin() / (2.0 * PI * t),
        _ => 2.0 * PI * t.powf(-m) * bessel_j(m, 2.0 * PI * t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_at_zero() {
        assert_eq!(bessel_kernel(2, 0.0).0, 1.0);
        assert!((bessel_j(0.0, 1e-8) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn known_values() {
        // Reference values of J_0 from standard tables.
        assert!((bessel_j(0.0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(0.0, 10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((bessel_j(0.0, 30.0) - (-0.086_367_983_581_040_2)).abs() < 1e-13);
    }

    #[test]
    fn seam_agreement() {
        for d in 1..=3 {
            let m = order(d);
            let gap = (series(m, BESSEL_SEAM) - asymptotic(m, BESSEL_SEAM)).abs();
            assert!(gap < crate::tolerances::BESSEL_SEAM_ABS, "d = {d}, gap = {gap:e}");
        }
    }

    #[test]
    fn remainder_decays() {
        for d in 1..=3 {
            for i in 1..400 {
                let r = 0.25 * i as f64;
                let (_, k) = bessel_kernel(d, r);
                assert!(k.abs() <= 2.0 * r.powf(-0.5).min(r.powf(-1.5)), "d = {d}, r = {r}");
            }
        }
        assert_eq!(bessel_kernel(1, 7.0).1.abs() < 1e-14, true);
    }

    #[test]
    fn sphere_fourier_limits() {
        assert!((sphere_fourier(1, 0.0) - 2.0).abs() < 1e-15);
        assert!((sphere_fourier(2, 0.0) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_fourier(2, 1e-9) - 2.0 * PI).abs() < 1e-9);
        assert!((sphere_fourier(3, 0.0) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_half_integer(0.5) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(2.5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half_integer(4.0), 6.0);
    }
}
