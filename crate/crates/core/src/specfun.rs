//! Log-gamma, log-beta, the regularized incomplete beta function and its inverse.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest shape parameter accepted anywhere in the crate.
pub const MAX_SHAPE: f64 = 1e6;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

// Lanczos coefficients, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

// Above this the Stirling series with seven correction terms is used.
const STIRLING_CUTOFF: f64 = 10.0;

/// Beta shape parameters `(alpha, beta)`, both in `(0, MAX_SHAPE]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePair {
    alpha: f64,
    beta: f64,
}

impl ShapePair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!(
                    "shape {name} = {v} must be positive and finite"
                )));
            }
            if v > MAX_SHAPE {
                return Err(domain(format!(
                    "shape {name} = {v} exceeds cap {MAX_SHAPE}"
                )));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(beta, alpha)`: the shapes of `1 - X`.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// Stirling remainder `ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)]` for `x >= 10`.
fn stirling_delta(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0
                    + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0 + r2 / 156.0))))))
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    let z = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + sum.ln()
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        0.0
    } else if x < 0.5 {
        // Reflection; sin(pi x) > 0 on (0, 1/2).
        LN_PI - (std::f64::consts::PI * x).sin().ln() - lanczos_ln_gamma(1.0 - x)
    } else if x < STIRLING_CUTOFF {
        lanczos_ln_gamma(x)
    } else {
        (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_delta(x)
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_beta_unchecked(a: f64, b: f64) -> f64 {
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    let s = a + b;
    if small >= STIRLING_CUTOFF {
        // Collected Stirling form: no large cancelling terms.
        (small - 0.5) * (small / s).ln() + (large - 0.5) * (large / s).ln() - 0.5 * s.ln()
            + LN_SQRT_2PI
            + stirling_delta(small)
            + stirling_delta(large)
            - stirling_delta(s)
    } else if large >= STIRLING_CUTOFF {
        // ln Γ(large) - ln Γ(s) via Stirling, keeping ln Γ(small) exact.
        let ratio = -(large - 0.5) * (small / large).ln_1p() - small * s.ln()
            + small
            + stirling_delta(large)
            - stirling_delta(s);
        ln_gamma_unchecked(small) + ratio
    } else {
        ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(s)
    }
}

/// `ln B(alpha, beta)`.
pub fn log_beta(p: ShapePair) -> Result<f64> {
    Ok(ln_beta_unchecked(p.alpha, p.beta))
}

/// `ln[x^a y^b / B(a, b)]` with `y = 1 - x` supplied by the caller.
///
/// For large shapes the exponent is rewritten around the mode `a / (a + b)` so
/// the two big logarithms cancel analytically instead of numerically.
pub(crate) fn ln_power_kernel(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if a >= STIRLING_CUTOFF && b >= STIRLING_CUTOFF {
        let s = a + b;
        let d = x * b - y * a; // x s - a
        let t = a * (d / a).ln_1p() + b * (-d / b).ln_1p();
        t + 0.5 * (a * b / s).ln()
            - LN_SQRT_2PI
            - (stirling_delta(a) + stirling_delta(b) - stirling_delta(s))
    } else {
        a * x.ln() + b * y.ln() - ln_beta_unchecked(a, b)
    }
}

/// Continued fraction for `I_x(a, b)` (modified Lentz), valid for
/// `x < (a + 1) / (a + b + 2)`.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 50_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

/// `(I_x(a, b), 1 - I_x(a, b))`, each computed without cancellation on its
/// small side. `y` must equal `1 - x`.
pub(crate) fn inc_beta_pair(x: f64, y: f64, a: f64, b: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if y <= 0.0 {
        return (1.0, 0.0);
    }
    if a == b && x == 0.5 {
        return (0.5, 0.5);
    }
    let front = ln_power_kernel(x, y, a, b).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = (front * beta_cf(x, a, b) / a).clamp(0.0, 1.0);
        (lower, 1.0 - lower)
    } else {
        let upper = (front * beta_cf(y, b, a) / b).clamp(0.0, 1.0);
        (1.0 - upper, upper)
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(format!("{what} = {x} must lie in [0, 1]")))
    }
}

/// Regularized incomplete beta `I_x(alpha, beta)`: the Beta(alpha, beta) CDF.
pub fn reg_inc_beta(x: f64, p: ShapePair) -> Result<f64> {
    check_unit(x, "x")?;
    Ok(inc_beta_pair(x, 1.0 - x, p.alpha, p.beta).0)
}

/// `1 - I_x(alpha, beta)`, accurate when the CDF is close to one.
pub fn reg_inc_beta_complement(x: f64, p: ShapePair) -> Result<f64> {
    check_unit(x, "x")?;
    Ok(inc_beta_pair(x, 1.0 - x, p.alpha, p.beta).1)
}

/// Initial quantile guess (normal approximation for shapes >= 1, power-law
/// tails otherwise).
fn quantile_guess(u: f64, a: f64, b: f64) -> f64 {
    if a >= 1.0 && b >= 1.0 {
        let pp = if u < 0.5 { u } else { 1.0 - u };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.307_53 + t * 0.270_61) / (1.0 + t * (0.992_29 + t * 0.044_81)) - t;
        if u < 0.5 {
            z = -z;
        }
        let al = (z * z - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        let w = z * (al + h).sqrt() / h
            - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        a / (a + b * (2.0 * w).exp())
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let v = (b * lnb).exp() / b;
        let w = t + v;
        if u < t / w {
            (a * w * u).powf(1.0 / a)
        } else {
            1.0 - (b * w * (1.0 - u)).powf(1.0 / b)
        }
    }
}

/// Solves `I_x(a, b) = u` for `u` in `(0, 1/2]`. Safeguarded Newton: every
/// iterate shrinks a sign bracket, and steps that leave the bracket (as happens
/// where the density vanishes at an endpoint) fall back to bisection.
fn solve_lower_tail(u: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 2000;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = quantile_guess(u, a, b);
    if !(x > 0.0 && x < 1.0) {
        x = 0.5;
    }
    for _ in 0..MAX_ITER {
        let y = 1.0 - x;
        let (cdf, _) = inc_beta_pair(x, y, a, b);
        let err = cdf - u;
        if err == 0.0 {
            return x;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let log_pdf = ln_power_kernel(x, y, a, b) - x.ln() - y.ln();
        let step = err / log_pdf.exp();
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo == 0.0 {
                0.25 * hi
            } else if hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= 4.0 * f64::EPSILON * hi
        {
            return next;
        }
        x = next;
    }
    x
}

/// Quantile of Beta(alpha, beta): `x` with `I_x(alpha, beta) = u`.
pub fn inv_reg_inc_beta(u: f64, p: ShapePair) -> Result<f64> {
    check_unit(u, "u")?;
    Ok(quantile_from_tails(u, 1.0 - u, p))
}

/// Upper-tail quantile: `x` with `1 - I_x(alpha, beta) = q`. Use this when the
/// upper-tail probability is known more precisely than `1 - q`.
pub fn inv_reg_inc_beta_complement(q: f64, p: ShapePair) -> Result<f64> {
    check_unit(q, "q")?;
    Ok(quantile_from_tails(1.0 - q, q, p))
}

fn quantile_from_tails(lower: f64, upper: f64, p: ShapePair) -> f64 {
    if lower <= 0.0 {
        return 0.0;
    }
    if upper <= 0.0 {
        return 1.0;
    }
    if lower <= upper {
        solve_lower_tail(lower, p.alpha, p.beta)
    } else {
        1.0 - solve_lower_tail(upper, p.beta, p.alpha)
    }
}
