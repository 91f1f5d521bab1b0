//! Beta, restricted Beta `Beta(n a, m a)` and GB2 distributions.
//!
//! Densities and density ratios are evaluated in log space; shapes of order
//! `10^2`–`10^4` are routine in the concentration scans and would otherwise
//! overflow the normalizing constants.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{self, inc_beta_pair, ln_power_kernel, ShapePair};

/// Default saturation value for [`density_ratio`] near the endpoints.
pub const DEFAULT_RATIO_CAP: f64 = 1e300;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} must be positive and finite")))
    }
}

/// Member `a` of the family `Beta(n a, m a)` with fixed weights `(n, m)`.
///
/// Every member has mean `n / (n + m)`; the variance falls as `a` grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedBetaParams {
    a: f64,
    n: f64,
    m: f64,
}

impl RestrictedBetaParams {
    pub fn new(a: f64, n: f64, m: f64) -> Result<Self> {
        positive("a", a)?;
        positive("n", n)?;
        positive("m", m)?;
        ShapePair::new(n * a, m * a)?;
        Ok(Self { a, n, m })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `(n a, m a)`.
    pub fn shapes(&self) -> ShapePair {
        ShapePair::new(self.n * self.a, self.m * self.a).expect("validated at construction")
    }

    /// Another member of the same family.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(a, self.n, self.m)
    }

    pub fn same_family(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m
    }

    pub(crate) fn ensure_same_family(&self, other: &Self) -> Result<()> {
        if self.same_family(other) {
            Ok(())
        } else {
            Err(Error::MismatchedFamily {
                n1: self.n,
                m1: self.m,
                n2: other.n,
                m2: other.m,
            })
        }
    }
}

/// Generalized Beta of the second kind: `X = b (Y / (1 - Y))^(1/gamma)` with
/// `Y ~ Beta(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GB2Params {
    pub scale_b: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GB2Params {
    pub fn new(scale_b: f64, gamma: f64, alpha: f64, beta: f64) -> Result<Self> {
        positive("scale b", scale_b)?;
        positive("gamma", gamma)?;
        ShapePair::new(alpha, beta)?;
        Ok(Self {
            scale_b,
            gamma,
            alpha,
            beta,
        })
    }

    /// GB2 with Beta shapes taken from a `(xi, a)` pair.
    pub fn from_xi_a(scale_b: f64, gamma: f64, xi_a: XiA) -> Result<Self> {
        let (alpha, beta) = xi_a.shapes();
        Self::new(scale_b, gamma, alpha, beta)
    }

    /// GB2 whose underlying Beta variable is the restricted member `p`.
    pub fn from_restricted(scale_b: f64, gamma: f64, p: &RestrictedBetaParams) -> Result<Self> {
        let s = p.shapes();
        Self::new(scale_b, gamma, s.alpha(), s.beta())
    }

    pub fn shapes(&self) -> ShapePair {
        ShapePair::new(self.alpha, self.beta).expect("validated at construction")
    }

    /// The mean is finite iff `beta * gamma > 1`.
    pub fn mean_exists(&self) -> bool {
        self.beta * self.gamma > 1.0
    }

    /// `(w, 1 - w)` with `w = (x/b)^gamma / (1 + (x/b)^gamma)`.
    pub(crate) fn beta_space(&self, x: f64) -> (f64, f64) {
        if x == 0.0 {
            return (0.0, 1.0);
        }
        if x.is_infinite() {
            return (1.0, 0.0);
        }
        let z = (x / self.scale_b).powf(self.gamma);
        if z.is_infinite() {
            return (1.0, 0.0);
        }
        (z / (1.0 + z), 1.0 / (1.0 + z))
    }

    pub fn xi_a(&self) -> XiA {
        xi_a_from_shapes(self.alpha, self.beta).expect("validated at construction")
    }
}

/// `(xi, a)` reparameterization of Beta shapes: `alpha = a xi`, `beta = a (1 - xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiA {
    pub xi: f64,
    pub a: f64,
}

impl XiA {
    pub fn new(xi: f64, a: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(domain(format!("xi = {xi} must lie in (0, 1)")));
        }
        positive("a", a)?;
        Ok(Self { xi, a })
    }

    /// `(alpha, beta) = (a xi, a (1 - xi))`.
    pub fn shapes(&self) -> (f64, f64) {
        (self.a * self.xi, self.a * (1.0 - self.xi))
    }
}

/// `xi = alpha / (alpha + beta)`, `a = alpha + beta`.
pub fn xi_a_from_shapes(alpha: f64, beta: f64) -> Result<XiA> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    let a = alpha + beta;
    Ok(XiA { xi: alpha / a, a })
}

/// Mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// A moment that may not exist; `exists == false` is a warning, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentQuery {
    pub value: f64,
    pub exists: bool,
}

/// Beta(alpha, beta) density.
///
/// At `x = 0` or `x = 1` the limit is returned when it is finite; an
/// endpoint where the density is unbounded (shape below one) is a domain error.
pub fn beta_pdf(x: f64, p: ShapePair) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("beta_pdf: x = {x} outside [0, 1]")));
    }
    let (a, b) = (p.alpha(), p.beta());
    let endpoint_limit = |shape: f64, other: f64| -> Result<f64> {
        if shape < 1.0 {
            Err(domain(format!(
                "beta_pdf unbounded at x = {x} (shape {shape} < 1)"
            )))
        } else if shape > 1.0 {
            Ok(0.0)
        } else {
            // Density at the endpoint is 1 / B(1, other) = other.
            Ok(other)
        }
    };
    if x == 0.0 {
        return endpoint_limit(a, b);
    }
    if x == 1.0 {
        return endpoint_limit(b, a);
    }
    let y = 1.0 - x;
    Ok((ln_power_kernel(x, y, a, b) - x.ln() - y.ln()).exp())
}

/// Density `p_a(x)` of `Beta(n a, m a)`.
pub fn restricted_pdf(x: f64, p: &RestrictedBetaParams) -> Result<f64> {
    beta_pdf(x, p.shapes())
}

/// CDF `F_a(x)` of `Beta(n a, m a)`.
pub fn restricted_cdf(x: f64, p: &RestrictedBetaParams) -> Result<f64> {
    specfun::reg_inc_beta(x, p.shapes())
}

/// Survival `1 - F_a(x)`, computed directly.
pub fn restricted_survival(x: f64, p: &RestrictedBetaParams) -> Result<f64> {
    specfun::reg_inc_beta_complement(x, p.shapes())
}

pub fn restricted_quantile(u: f64, p: &RestrictedBetaParams) -> Result<f64> {
    specfun::inv_reg_inc_beta(u, p.shapes())
}

/// Closed-form mean `n/(n+m)` and variance `n m / ((n+m)^2 (n a + m a + 1))`.
pub fn restricted_moments(p: &RestrictedBetaParams) -> Moments {
    let (a, n, m) = (p.a, p.n, p.m);
    let s = n + m;
    Moments {
        mean: n / s,
        variance: n * m / (s * s * (n * a + m * a + 1.0)),
    }
}

/// GB2 CDF: `I_w(alpha, beta)` at `w = (x/b)^gamma / (1 + (x/b)^gamma)`.
pub fn gb2_cdf(x: f64, p: &GB2Params) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("gb2_cdf: x = {x} must be nonnegative")));
    }
    let (w, y) = p.beta_space(x);
    Ok(inc_beta_pair(w, y, p.alpha, p.beta).0)
}

/// GB2 survival `1 - F(x)`, accurate in the upper tail.
pub fn gb2_survival(x: f64, p: &GB2Params) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("gb2_survival: x = {x} must be nonnegative")));
    }
    let (w, y) = p.beta_space(x);
    Ok(inc_beta_pair(w, y, p.alpha, p.beta).1)
}

/// GB2 quantile `b (y / (1 - y))^(1/gamma)` with `y` the Beta(alpha, beta) quantile.
pub fn gb2_quantile(u: f64, p: &GB2Params) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(domain(format!("gb2_quantile: u = {u} must lie in (0, 1)")));
    }
    let shapes = p.shapes();
    // Work from the smaller tail so y / (1 - y) keeps its precision.
    let odds = if u <= 0.5 {
        let y = specfun::inv_reg_inc_beta(u, shapes)?;
        y / (1.0 - y)
    } else {
        let one_minus_y = specfun::inv_reg_inc_beta(1.0 - u, shapes.swapped())?;
        (1.0 - one_minus_y) / one_minus_y
    };
    Ok(p.scale_b * odds.powf(1.0 / p.gamma))
}

/// GB2 mean `b B(alpha + 1/gamma, beta - 1/gamma) / B(alpha, beta)`; flagged
/// as non-existent (value `+inf`) when `beta gamma <= 1`.
pub fn gb2_mean(p: &GB2Params) -> MomentQuery {
    if !p.mean_exists() {
        return MomentQuery {
            value: f64::INFINITY,
            exists: false,
        };
    }
    let shift = 1.0 / p.gamma;
    let num = ShapePair::new(p.alpha + shift, p.beta - shift).and_then(specfun::log_beta);
    let den = specfun::log_beta(p.shapes());
    match (num, den) {
        (Ok(num), Ok(den)) => MomentQuery {
            value: p.scale_b * (num - den).exp(),
            exists: true,
        },
        _ => MomentQuery {
            value: f64::INFINITY,
            exists: false,
        },
    }
}

/// `ln t(x)` with `t = p_{a1} / p_{a2} = K x^{-p} (1-x)^{-q}`,
/// `p = n (a2 - a1)`, `q = m (a2 - a1)`, `K = B(n a2, m a2) / B(n a1, m a1)`.
pub fn log_density_ratio(
    x: f64,
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
) -> Result<f64> {
    p1.ensure_same_family(p2)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("density_ratio: x = {x} outside [0, 1]")));
    }
    if p1.a == p2.a {
        return Ok(0.0);
    }
    let ln_k = specfun::log_beta(p2.shapes())? - specfun::log_beta(p1.shapes())?;
    let da = p2.a - p1.a;
    let (p, q) = (p1.n * da, p1.m * da);
    let term = |coef: f64, base: f64| if coef == 0.0 { 0.0 } else { coef * base.ln() };
    Ok(ln_k - term(p, x) - term(q, 1.0 - x))
}

/// Density ratio `p_{a1}(x) / p_{a2}(x)`, saturating at [`DEFAULT_RATIO_CAP`].
pub fn density_ratio(x: f64, p1: &RestrictedBetaParams, p2: &RestrictedBetaParams) -> Result<f64> {
    density_ratio_capped(x, p1, p2, DEFAULT_RATIO_CAP)
}

pub fn density_ratio_capped(
    x: f64,
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
    cap: f64,
) -> Result<f64> {
    let ln_t = log_density_ratio(x, p1, p2)?;
    if ln_t.is_nan() {
        return Err(domain(format!("density_ratio undefined at x = {x}")));
    }
    Ok(ln_t.exp().min(cap))
}

/// Second derivative of `x^{-p} (1-x)^{-q}`:
/// `[q x^2 + p (1-x)^2 + (q x - p (1-x))^2] / [x^{2+p} (1-x)^{2+q}]`.
pub fn ratio_second_derivative(x: f64, p: f64, q: f64) -> Result<f64> {
    positive("p", p)?;
    positive("q", q)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(domain(format!(
            "ratio_second_derivative: x = {x} outside (0, 1)"
        )));
    }
    let y = 1.0 - x;
    let mixed = q * x - p * y;
    let numerator = q * x * x + p * y * y + mixed * mixed;
    Ok((numerator.ln() - (2.0 + p) * x.ln() - (2.0 + q) * y.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    fn rb(a: f64, n: f64, m: f64) -> RestrictedBetaParams {
        RestrictedBetaParams::new(a, n, m).unwrap()
    }

    fn sp(a: f64, b: f64) -> ShapePair {
        ShapePair::new(a, b).unwrap()
    }

    const SHAPES: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 20.0];

    #[test]
    fn beta_pdf_examples() {
        assert!((beta_pdf(0.5, sp(2.0, 2.0)).unwrap() - 1.5).abs() < 1e-14);
        assert!((beta_pdf(0.25, sp(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-14);
        // d/dx (5x^4 - 4x^5) = 20 x^3 (1 - x) = 1.25 at x = 1/2.
        assert!((beta_pdf(0.5, sp(4.0, 2.0)).unwrap() - 1.25).abs() < 1e-14);
    }

    #[test]
    fn beta_pdf_endpoints() {
        assert!(beta_pdf(0.0, sp(0.5, 2.0)).is_err());
        assert!(beta_pdf(1.0, sp(2.0, 0.5)).is_err());
        assert_eq!(beta_pdf(0.0, sp(2.0, 2.0)).unwrap(), 0.0);
        assert_eq!(beta_pdf(0.0, sp(1.0, 3.0)).unwrap(), 3.0);
        assert_eq!(beta_pdf(1.0, sp(1.0, 1.0)).unwrap(), 1.0);
        assert!(beta_pdf(1.5, sp(1.0, 1.0)).is_err());
    }

    #[test]
    fn beta_density_normalizes() {
        for &a in &SHAPES {
            for &b in &SHAPES {
                let p = sp(a, b);
                // Upper half through the reflected density so points near x = 1
                // keep their distance to the endpoint.
                let lower = integrate(|x| beta_pdf(x, p).unwrap_or(f64::INFINITY), 0.0, 0.5, 1e-11)
                    .unwrap();
                let upper = integrate(
                    |s| beta_pdf(s, p.swapped()).unwrap_or(f64::INFINITY),
                    0.0,
                    0.5,
                    1e-11,
                )
                .unwrap();
                let total = lower + upper;
                assert!((total - 1.0).abs() <= 1e-8, "({a}, {b}): {total}");
            }
        }
    }

    #[test]
    fn restricted_cdf_examples() {
        assert!((restricted_cdf(0.5, &rb(1.0, 1.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((restricted_cdf(0.5, &rb(1.0, 2.0, 1.0)).unwrap() - 0.25).abs() < 1e-15);
        assert!((restricted_cdf(0.5, &rb(2.0, 2.0, 1.0)).unwrap() - 0.1875).abs() < 1e-15);
        assert!(restricted_cdf(1.2, &rb(2.0, 2.0, 1.0)).is_err());
    }

    #[test]
    fn restricted_moment_examples() {
        let m = restricted_moments(&rb(3.0, 2.0, 1.0));
        assert!((m.mean - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.variance - 2.0 / 90.0).abs() < 1e-15);
        let m = restricted_moments(&rb(1.0, 1.0, 1.0));
        assert_eq!(m.mean, 0.5);
        assert!((m.variance - 1.0 / 12.0).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for a in [1.0, 10.0, 100.0, 1e3, 1e4] {
            let v = restricted_moments(&rb(a, 1.0, 1.0)).variance;
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn restricted_moments_match_quadrature() {
        for (a, n, m) in [
            (1.0, 1.0, 1.0),
            (3.0, 2.0, 1.0),
            (0.7, 1.5, 2.5),
            (10.0, 3.0, 1.0),
        ] {
            let p = rb(a, n, m);
            let mean = integrate(
                |x| x * restricted_pdf(x, &p).unwrap_or(f64::INFINITY),
                0.0,
                1.0,
                1e-11,
            )
            .unwrap();
            let second = integrate(
                |x| x * x * restricted_pdf(x, &p).unwrap_or(f64::INFINITY),
                0.0,
                1.0,
                1e-11,
            )
            .unwrap();
            let mo = restricted_moments(&p);
            assert!((mean - mo.mean).abs() <= 1e-8);
            assert!((second - mean * mean - mo.variance).abs() <= 1e-8);
        }
    }

    #[test]
    fn restricted_mean_is_exactly_invariant_in_a() {
        let means: Vec<f64> = [0.1, 1.0, 7.5, 300.0]
            .iter()
            .map(|&a| restricted_moments(&rb(a, 2.3, 0.9)).mean)
            .collect();
        assert!(means.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn gb2_cdf_examples() {
        let p = GB2Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((gb2_cdf(1.0, &p).unwrap() - 0.5).abs() < 1e-15);
        for gamma in [0.5, 1.0, 3.0] {
            let p = GB2Params::new(2.5, gamma, 1.7, 1.7).unwrap();
            assert!((gb2_cdf(2.5, &p).unwrap() - 0.5).abs() < 1e-14);
        }
        let p = GB2Params::new(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((gb2_cdf(3.0, &p).unwrap() - 0.9375).abs() < 1e-15);
        assert!(gb2_cdf(-1.0, &p).is_err());
        assert_eq!(gb2_cdf(0.0, &p).unwrap(), 0.0);
        assert_eq!(gb2_cdf(f64::INFINITY, &p).unwrap(), 1.0);
    }

    #[test]
    fn gb2_cdf_at_scale_is_beta_cdf_at_half() {
        let p = GB2Params::new(3.0, 1.4, 2.0, 5.0).unwrap();
        let want = specfun::reg_inc_beta(0.5, p.shapes()).unwrap();
        assert!((gb2_cdf(3.0, &p).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn gb2_quantile_examples() {
        let p = GB2Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((gb2_quantile(0.5, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!((gb2_quantile(0.75, &p).unwrap() - 3.0).abs() < 1e-12);
        let p = GB2Params::new(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((gb2_quantile(0.9375, &p).unwrap() - 3.0).abs() < 1e-11);
        assert!(gb2_quantile(0.0, &p).is_err());
        assert!(gb2_quantile(1.0, &p).is_err());
    }

    #[test]
    fn gb2_quantile_inverts_cdf_and_pushes_back_to_beta() {
        for (b, g, al, be) in [
            (1.0, 1.0, 2.0, 2.2),
            (50.0, 0.8, 0.7, 3.0),
            (2.0, 2.5, 5.0, 0.9),
        ] {
            let p = GB2Params::new(b, g, al, be).unwrap();
            for k in 1..20 {
                let u = k as f64 / 20.0;
                let x = gb2_quantile(u, &p).unwrap();
                assert!((gb2_cdf(x, &p).unwrap() - u).abs() <= 1e-9);
                let z = (x / b).powf(g);
                let w = z / (1.0 + z);
                let y = specfun::inv_reg_inc_beta(u, p.shapes()).unwrap();
                assert!((w - y).abs() <= 1e-10, "u={u}: {w} vs {y}");
            }
        }
    }

    #[test]
    fn gb2_mean_flags_missing_moment() {
        let p = GB2Params::new(1.0, 1.0, 1.0, 2.0).unwrap();
        let m = gb2_mean(&p);
        assert!(m.exists);
        assert!((m.value - 1.0).abs() < 1e-14);
        let p = GB2Params::new(1.0, 0.9, 1.0, 1.0).unwrap();
        assert!(!gb2_mean(&p).exists);
    }

    #[test]
    fn xi_a_round_trip() {
        let x = xi_a_from_shapes(2.0, 2.2).unwrap();
        assert!((x.xi - 2.0 / 4.2).abs() < 1e-15);
        assert!((x.a - 4.2).abs() < 1e-15);
        let x = xi_a_from_shapes(1.0, 1.0).unwrap();
        assert_eq!((x.xi, x.a), (0.5, 2.0));
        let start = XiA::new(0.483, 4.7).unwrap();
        let (al, be) = start.shapes();
        let back = xi_a_from_shapes(al, be).unwrap();
        assert!((back.xi - start.xi).abs() <= 2.0 * f64::EPSILON);
        assert!((back.a - start.a).abs() <= 4.0 * f64::EPSILON * start.a);
        assert!(XiA::new(1.0, 2.0).is_err());
    }

    #[test]
    fn density_ratio_examples() {
        let (p1, p2) = (rb(1.0, 1.0, 1.0), rb(2.0, 1.0, 1.0));
        assert!((density_ratio(0.5, &p1, &p2).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        for x in [0.1, 0.5, 0.93] {
            assert_eq!(density_ratio(x, &p1, &p1).unwrap(), 1.0);
        }
        assert_eq!(density_ratio(0.0, &p1, &p2).unwrap(), DEFAULT_RATIO_CAP);
        assert_eq!(
            density_ratio(1e-320, &rb(1.0, 2.0, 1.0), &rb(50.0, 2.0, 1.0)).unwrap(),
            DEFAULT_RATIO_CAP
        );
        assert_eq!(density_ratio_capped(1.0, &p1, &p2, 1e10).unwrap(), 1e10);
        assert!(matches!(
            density_ratio(0.5, &p1, &rb(2.0, 2.0, 1.0)),
            Err(Error::MismatchedFamily { .. })
        ));
    }

    #[test]
    fn density_ratio_agrees_with_densities() {
        let (p1, p2) = (rb(0.8, 2.0, 1.3), rb(2.6, 2.0, 1.3));
        for x in [0.05, 0.3, 0.61, 0.9] {
            let direct = restricted_pdf(x, &p1).unwrap() / restricted_pdf(x, &p2).unwrap();
            assert!((density_ratio(x, &p1, &p2).unwrap() / direct - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_examples() {
        assert!((ratio_second_derivative(0.5, 1.0, 1.0).unwrap() - 32.0).abs() < 1e-12);
        for x in [0.1, 0.27, 0.4] {
            let l = ratio_second_derivative(x, 2.5, 2.5).unwrap();
            let r = ratio_second_derivative(1.0 - x, 2.5, 2.5).unwrap();
            assert!((l / r - 1.0).abs() < 1e-12);
        }
        assert!(ratio_second_derivative(0.0, 1.0, 1.0).is_err());
        assert!(ratio_second_derivative(0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        let (p1, p2) = (rb(1.0, 2.0, 1.0), rb(1.5, 2.0, 1.0));
        let ln_k =
            specfun::log_beta(p2.shapes()).unwrap() - specfun::log_beta(p1.shapes()).unwrap();
        let t = |x: f64| density_ratio(x, &p1, &p2).unwrap() / ln_k.exp();
        let (p, q) = (2.0 * 0.5, 1.0 * 0.5);
        let h = 1e-4;
        for x in [0.2, 0.5, 0.8] {
            let fd = (t(x + h) - 2.0 * t(x) + t(x - h)) / (h * h);
            let exact = ratio_second_derivative(x, p, q).unwrap();
            assert!(
                (fd / exact - 1.0).abs() < 1e-6,
                "x={x}: fd {fd} exact {exact}"
            );
        }
    }

    #[test]
    fn second_derivative_positive_on_grid() {
        let ps = [0.5, 1.0, 2.0, 5.0];
        for &p in &ps {
            for &q in &ps {
                for i in 1..=999 {
                    let x = i as f64 / 1000.0;
                    assert!(ratio_second_derivative(x, p, q).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn restricted_params_validation() {
        assert!(RestrictedBetaParams::new(0.0, 1.0, 1.0).is_err());
        assert!(RestrictedBetaParams::new(1.0, -1.0, 1.0).is_err());
        assert!(RestrictedBetaParams::new(1e6, 2.0, 1.0).is_err());
    }
}
