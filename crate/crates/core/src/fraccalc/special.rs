//! Gamma and Mittag-Leffler functions.

use std::f64::consts::PI;

use super::FracError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    // z is already shifted by one
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// Γ(z) for z > 0 (Lanczos, g = 7, with reflection below 1/2).
pub fn gamma(z: f64) -> Result<f64, FracError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(FracError::Domain {
            what: "gamma argument",
            value: z,
        });
    }
    Ok(gamma_positive(z))
}

pub(crate) fn gamma_positive(z: f64) -> f64 {
    if z < 0.5 {
        return PI / ((PI * z).sin() * gamma_positive(1.0 - z));
    }
    // exact factorials keep integer arguments free of Lanczos rounding
    if z <= 171.0 && z.fract() == 0.0 {
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < z {
            acc *= k;
            k += 1.0;
        }
        return acc;
    }
    let x = z - 1.0;
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_sum(x)
}

/// ln Γ(z) for z > 0.
pub fn ln_gamma(z: f64) -> Result<f64, FracError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(FracError::Domain {
            what: "ln_gamma argument",
            value: z,
        });
    }
    Ok(ln_gamma_positive(z))
}

pub(crate) fn ln_gamma_positive(z: f64) -> f64 {
    if z < 0.5 {
        return (PI / (PI * z).sin()).ln() - ln_gamma_positive(1.0 - z);
    }
    let x = z - 1.0;
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

const ML_MAX_TERMS: usize = 100_000;

/// One-parameter Mittag-Leffler function E_β(z) by direct series summation.
///
/// Summation stops once three consecutive terms fall below `tol` relative to
/// the partial sum. Intended for moderate arguments (|z| ≤ 50).
pub fn mittag_leffler(beta: f64, z: f64, tol: f64) -> Result<f64, FracError> {
    mittag_leffler_two(beta, 1.0, z, tol)
}

/// Two-parameter Mittag-Leffler function E_{β,γ}(z) = Σ z^k / Γ(βk + γ).
pub fn mittag_leffler_two(beta: f64, gamma_shift: f64, z: f64, tol: f64) -> Result<f64, FracError> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(FracError::OrderOutOfRange { beta });
    }
    if !(gamma_shift > 0.0) {
        return Err(FracError::Domain {
            what: "Mittag-Leffler second parameter",
            value: gamma_shift,
        });
    }
    if !(z.abs() <= 50.0) {
        return Err(FracError::Domain {
            what: "Mittag-Leffler argument",
            value: z,
        });
    }
    if !(tol > 0.0) {
        return Err(FracError::Domain {
            what: "Mittag-Leffler tolerance",
            value: tol,
        });
    }
    if z == 0.0 {
        return Ok(1.0 / gamma_positive(gamma_shift));
    }

    let ln_abs_z = z.abs().ln();
    let mut acc = CompensatedSum::default();
    let mut small_run = 0;
    for k in 0..ML_MAX_TERMS {
        let arg = beta * k as f64 + gamma_shift;
        let magnitude = if arg < 170.0 {
            z.abs().powi(k as i32) / gamma_positive(arg)
        } else {
            (k as f64 * ln_abs_z - ln_gamma_positive(arg)).exp()
        };
        let term = if z < 0.0 && k % 2 == 1 {
            -magnitude
        } else {
            magnitude
        };
        acc.add(term);
        if magnitude < tol * acc.value().abs() {
            small_run += 1;
            if small_run == 3 {
                return Ok(acc.value());
            }
        } else {
            small_run = 0;
        }
    }
    Err(FracError::NonConvergence {
        terms: ML_MAX_TERMS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_anchor_values() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert_eq!(gamma(5.0).unwrap(), 24.0);
        assert_relative_eq!(gamma(0.5).unwrap(), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(1.5).unwrap(), 0.5 * PI.sqrt(), max_relative = 1e-13);
        // Γ(0.3) and Γ(1.7) from high-precision tables
        assert_relative_eq!(gamma(0.3).unwrap(), 2.991_568_987_687_590_9, max_relative = 1e-13);
        assert_relative_eq!(gamma(1.7).unwrap(), 0.908_638_732_853_290_2, max_relative = 1e-13);
    }

    #[test]
    fn gamma_recurrence_holds() {
        for i in 1..200 {
            let z = 0.05 * i as f64 + 0.013;
            let lhs = gamma(z + 1.0).unwrap();
            let rhs = z * gamma(z).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn gamma_rejects_non_positive() {
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &z in &[0.1, 0.7, 1.3, 4.5, 30.0, 150.0] {
            assert_relative_eq!(ln_gamma(z).unwrap(), gamma(z).unwrap().ln(), max_relative = 1e-12);
        }
        // beyond overflow of Γ itself: ln Γ(201) = ln(200!)
        let ln_fact: f64 = (1..=200).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(ln_gamma(201.0).unwrap(), ln_fact, max_relative = 1e-13);
    }

    #[test]
    fn mittag_leffler_reduces_to_exponential() {
        let v = mittag_leffler(1.0, -1.0, 1e-15).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-14);
        assert_eq!(mittag_leffler(0.5, 0.0, 1e-14).unwrap(), 1.0);
        // E_2(-z²) = cos z
        let v = mittag_leffler(2.0, -4.0, 1e-15).unwrap();
        assert_relative_eq!(v, 2.0f64.cos(), max_relative = 1e-12);
        // E_{1,2}(z) = (e^z - 1)/z
        let v = mittag_leffler_two(1.0, 2.0, 0.5, 1e-15).unwrap();
        assert_relative_eq!(v, (0.5f64.exp() - 1.0) / 0.5, max_relative = 1e-14);
    }

    #[test]
    fn mittag_leffler_half_order_closed_form() {
        // E_{1/2}(-x) = exp(x²) erfc(x); at x = 1: e·erfc(1)
        let erfc1 = 0.157_299_207_050_285_13;
        let v = mittag_leffler(0.5, -1.0, 1e-15).unwrap();
        assert_relative_eq!(v, 1f64.exp() * erfc1, max_relative = 1e-12);
    }

    #[test]
    fn mittag_leffler_argument_checks() {
        assert!(mittag_leffler(2.5, -1.0, 1e-12).is_err());
        assert!(mittag_leffler(0.7, -51.0, 1e-12).is_err());
        assert!(mittag_leffler(0.7, -1.0, 0.0).is_err());
    }
}
