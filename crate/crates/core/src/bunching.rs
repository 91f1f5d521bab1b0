//! Bunching order within the restricted Beta family `Beta(n a, m a)`.
//!
//! For `a1 < a2` the CDF difference `F_{a2} - F_{a1}` is negative on `(0, x*)`
//! and positive on `(x*, 1)`: the member with the larger `a` puts less mass
//! in every interval reaching out to either endpoint from `x*`, i.e. it is
//! bunched more tightly around `x*`. This module locates `x*` and the two
//! density crossings, checks the sign pattern on a grid, derives the
//! increasing-concave verdict, and runs the numerical experiments around the
//! `x*(n)` curve and the half-point probability `F_a(1/2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    log_density_ratio, restricted_cdf, restricted_moments, restricted_survival,
    RestrictedBetaParams,
};
use crate::error::{domain, Error, Result};
use crate::numerics::{find_root, minimize_1d, Bracket, DEFAULT_XTOL};
use crate::specfun::inc_beta_pair;

/// Default number of interior grid points used for verification.
pub const DEFAULT_GRID: usize = 4096;

/// Minimum grid accepted by [`verify_bunching`].
pub const MIN_GRID: usize = 64;

/// Grid used to bracket sign changes before polishing with the root finder.
const SCAN_POINTS: usize = 1024;

/// Smallest accepted Monte Carlo sample size.
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Increasing-concave comparison between the two members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcvVerdict {
    A2DominatesIcv,
    A1DominatesIcv,
    Inconclusive,
}

impl IcvVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            IcvVerdict::A2DominatesIcv => "a2_dominates_icv",
            IcvVerdict::A1DominatesIcv => "a1_dominates_icv",
            IcvVerdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for IcvVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything [`verify_bunching`] learns about a pair `(a1, a2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BunchingReport {
    pub a1: f64,
    pub a2: f64,
    pub n: f64,
    pub m: f64,
    pub x_star: f64,
    pub density_cross_lo: f64,
    pub density_cross_hi: f64,
    pub grid_size: usize,
    pub verified: bool,
    /// Sign changes of `F_{a2} - F_{a1}` on the grid, zeros omitted.
    pub sign_changes: usize,
    /// Whether the first nonzero value of `F_{a2} - F_{a1}` is negative.
    pub starts_negative: bool,
    pub icv_conclusion: IcvVerdict,
}

fn check_pair(p1: &RestrictedBetaParams, p2: &RestrictedBetaParams) -> Result<()> {
    p1.ensure_same_family(p2)?;
    if p1.a() == p2.a() {
        return Err(Error::DegenerateParams { a: p1.a() });
    }
    Ok(())
}

/// `F_{a2}(x) - F_{a1}(x)`, taken from whichever tail is smaller so the
/// difference keeps its relative precision.
fn cdf_difference(x: f64, p1: &RestrictedBetaParams, p2: &RestrictedBetaParams) -> f64 {
    let y = 1.0 - x;
    let s1 = p1.shapes();
    let s2 = p2.shapes();
    let (f1, sv1) = inc_beta_pair(x, y, s1.alpha(), s1.beta());
    let (f2, sv2) = inc_beta_pair(x, y, s2.alpha(), s2.beta());
    if f1 + f2 <= sv1 + sv2 {
        f2 - f1
    } else {
        sv1 - sv2
    }
}

fn unit_grid(points: usize) -> impl Iterator<Item = f64> {
    let denom = (points + 1) as f64;
    (1..=points).map(move |i| i as f64 / denom)
}

/// Brackets the first sign change of `g` over the ordered abscissae `xs`,
/// skipping exact zeros, and polishes it with [`find_root`].
fn first_crossing<G: Fn(f64) -> f64>(g: G, xs: &[f64], xtol: f64) -> Result<f64> {
    let mut last: Option<(f64, f64)> = None;
    for &x in xs {
        let v = g(x);
        if v == 0.0 || v.is_nan() {
            continue;
        }
        if let Some((xl, vl)) = last {
            if vl.signum() != v.signum() {
                return find_root(&g, Bracket::new(xl, x)?, xtol);
            }
        }
        last = Some((x, v));
    }
    Err(Error::NoCrossing)
}

/// Push-forward of `p1` onto `p2`: the `y` with `F_{a2}(y) = F_{a1}(x)`.
pub fn push_forward_map(
    x: f64,
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
) -> Result<f64> {
    p1.ensure_same_family(p2)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("push_forward_map: x = {x} outside [0, 1]")));
    }
    if p1.a() == p2.a() {
        return Ok(x);
    }
    let s1 = p1.shapes();
    let (lower, upper) = inc_beta_pair(x, 1.0 - x, s1.alpha(), s1.beta());
    // Match whichever tail probability is known to full relative precision.
    if lower <= upper {
        crate::specfun::inv_reg_inc_beta(lower, p2.shapes())
    } else {
        crate::specfun::inv_reg_inc_beta_complement(upper, p2.shapes())
    }
}

/// The unique interior zero `x*` of `F_{a2} - F_{a1}`.
///
/// The order of `a1` and `a2` does not matter; swapping them flips the sign
/// pattern of the difference but not its zero.
pub fn crossing_point(
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
    xtol: f64,
) -> Result<f64> {
    check_pair(p1, p2)?;
    let xs: Vec<f64> = unit_grid(SCAN_POINTS).collect();
    first_crossing(|x| cdf_difference(x, p1, p2), &xs, xtol)
}

/// The two interior points where the densities of `p1` and `p2` coincide.
///
/// The log of the density ratio (smaller `a` over larger `a`) is strictly
/// convex with both ends at `+inf`; its minimizer splits `(0, 1)` into two
/// brackets, each holding one zero.
pub fn density_crossings(
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
    xtol: f64,
) -> Result<(f64, f64)> {
    check_pair(p1, p2)?;
    let (flat, peaked) = if p1.a() < p2.a() { (p1, p2) } else { (p2, p1) };
    let ln_t = |x: f64| log_density_ratio(x, flat, peaked).unwrap_or(f64::NAN);

    let x_min = minimize_1d(ln_t, Bracket::new(0.0, 1.0)?, xtol)?;
    let min_value = ln_t(x_min);
    if min_value > 0.0 {
        return Err(Error::RatioAboveOne {
            min_ratio: min_value.exp(),
        });
    }
    let left_end = f64::MIN_POSITIVE;
    let right_end = 1.0 - f64::EPSILON / 2.0;
    let lo = find_root(ln_t, Bracket::new(left_end, x_min)?, xtol)?;
    let hi = find_root(ln_t, Bracket::new(x_min, right_end)?, xtol)?;
    Ok((lo, hi))
}

/// Number of sign alternations in `values`, zeros omitted.
pub fn sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut last = 0.0_f64;
    for &v in values {
        if v == 0.0 || v.is_nan() {
            continue;
        }
        if last != 0.0 && last.signum() != v.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

fn first_sign(values: &[f64]) -> Option<f64> {
    values
        .iter()
        .copied()
        .find(|v| *v != 0.0 && !v.is_nan())
        .map(f64::signum)
}

fn icv_from_signs(changes: usize, first: Option<f64>, mean1: f64, mean2: f64) -> IcvVerdict {
    match (changes, first) {
        (1, Some(s)) if s < 0.0 && mean2 >= mean1 => IcvVerdict::A2DominatesIcv,
        (1, Some(s)) if s > 0.0 && mean1 >= mean2 => IcvVerdict::A1DominatesIcv,
        _ => IcvVerdict::Inconclusive,
    }
}

/// Increasing-concave verdict from the sign changes of `F_{a2} - F_{a1}` on a
/// uniform grid: one change starting negative, together with
/// `E[X_{a2}] >= E[X_{a1}]`, gives `X_{a2} >=_icv X_{a1}` (and symmetrically).
/// More than one change is reported as an error since it can only come from
/// numerical noise in this family.
pub fn check_icv_icx(
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
    grid_size: usize,
) -> Result<IcvVerdict> {
    p1.ensure_same_family(p2)?;
    if p1.a() == p2.a() {
        return Ok(IcvVerdict::Inconclusive);
    }
    let diffs: Vec<f64> = unit_grid(grid_size)
        .map(|x| cdf_difference(x, p1, p2))
        .collect();
    let changes = sign_changes(&diffs);
    if changes > 1 {
        return Err(Error::Inconclusive {
            sign_changes: changes,
        });
    }
    let (m1, m2) = (restricted_moments(p1).mean, restricted_moments(p2).mean);
    Ok(icv_from_signs(changes, first_sign(&diffs), m1, m2))
}

/// [`verify_bunching_with`] at the default root tolerance.
pub fn verify_bunching(
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
    grid_size: usize,
) -> Result<BunchingReport> {
    verify_bunching_with(p1, p2, grid_size, DEFAULT_XTOL)
}

/// Checks the bunching sign pattern on `grid_size` uniform interior points.
///
/// With `a1 < a2` the report is verified iff `F_{a1} > F_{a2}` at every grid
/// point left of `x*` and `1 - F_{a1} > 1 - F_{a2}` at every point right of
/// it (points within `xtol` of `x*` are skipped). With `a1 > a2` the roles are
/// swapped: `p1` is then the more bunched member.
pub fn verify_bunching_with(
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
    grid_size: usize,
    xtol: f64,
) -> Result<BunchingReport> {
    if grid_size < MIN_GRID {
        return Err(domain(format!(
            "grid_size {grid_size} is below the minimum {MIN_GRID}"
        )));
    }
    let x_star = crossing_point(p1, p2, xtol)?;
    let (lo, hi) = density_crossings(p1, p2, xtol)?;
    let (flat, peaked) = if p1.a() < p2.a() { (p1, p2) } else { (p2, p1) };

    let mut verified = true;
    let mut diffs = Vec::with_capacity(grid_size);
    for x in unit_grid(grid_size) {
        diffs.push(cdf_difference(x, p1, p2));
        if (x - x_star).abs() <= xtol {
            continue;
        }
        let holds = if x < x_star {
            restricted_cdf(x, flat)? > restricted_cdf(x, peaked)?
        } else {
            restricted_survival(x, flat)? > restricted_survival(x, peaked)?
        };
        verified &= holds;
    }
    let changes = sign_changes(&diffs);
    let first = first_sign(&diffs);
    let (m1, m2) = (restricted_moments(p1).mean, restricted_moments(p2).mean);

    Ok(BunchingReport {
        a1: p1.a(),
        a2: p2.a(),
        n: p1.n(),
        m: p1.m(),
        x_star,
        density_cross_lo: lo,
        density_cross_hi: hi,
        grid_size,
        verified,
        sign_changes: changes,
        starts_negative: first.is_some_and(|s| s < 0.0),
        icv_conclusion: icv_from_signs(changes, first, m1, m2),
    })
}

fn ensure_strictly_increasing(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(domain(format!("{what} is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(domain(format!("{what} contains non-finite values")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

/// `x*` as a function of `n`, with `m`, `a1`, `a2` held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XStarCurve {
    pub m: f64,
    pub a1: f64,
    pub a2: f64,
    /// `(n, x*(n))` in input order.
    pub points: Vec<(f64, f64)>,
    /// Observed on the grid only; not a proof of monotonicity.
    pub strictly_increasing: bool,
}

pub fn xstar_curve(n_grid: &[f64], m: f64, a1: f64, a2: f64) -> Result<XStarCurve> {
    ensure_strictly_increasing(n_grid, "n grid")?;
    if n_grid[0] < m {
        return Err(domain(format!(
            "n grid starts at {} below m = {m}",
            n_grid[0]
        )));
    }
    let points = n_grid
        .par_iter()
        .map(|&n| {
            let p1 = RestrictedBetaParams::new(a1, n, m)?;
            let p2 = RestrictedBetaParams::new(a2, n, m)?;
            crossing_point(&p1, &p2, DEFAULT_XTOL).map(|x| (n, x))
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_increasing = points.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(XStarCurve {
        m,
        a1,
        a2,
        points,
        strictly_increasing,
    })
}

/// Monotone direction of a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Closed-form, strictly monotone maps applied to a variable on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneTransform {
    /// `scale * x + shift`
    Affine { scale: f64, shift: f64 },
    /// `x^exponent`
    Power { exponent: f64 },
    /// `ln x`
    Logarithm,
    /// `exp(rate * x)`
    Exponential { rate: f64 },
}

impl MonotoneTransform {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::NonMonotoneTransform(msg));
        match *self {
            MonotoneTransform::Affine { scale, shift } => {
                if !(scale.is_finite() && shift.is_finite()) || scale == 0.0 {
                    return bad(format!("affine map needs finite nonzero scale, got scale = {scale}, shift = {shift}"));
                }
            }
            MonotoneTransform::Power { exponent } => {
                if !exponent.is_finite() || exponent == 0.0 {
                    return bad(format!(
                        "power map needs a finite nonzero exponent, got {exponent}"
                    ));
                }
            }
            MonotoneTransform::Logarithm => {}
            MonotoneTransform::Exponential { rate } => {
                if !rate.is_finite() || rate == 0.0 {
                    return bad(format!(
                        "exponential map needs a finite nonzero rate, got {rate}"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn direction(&self) -> Direction {
        let increasing = match *self {
            MonotoneTransform::Affine { scale, .. } => scale > 0.0,
            MonotoneTransform::Power { exponent } => exponent > 0.0,
            MonotoneTransform::Logarithm => true,
            MonotoneTransform::Exponential { rate } => rate > 0.0,
        };
        if increasing {
            Direction::Increasing
        } else {
            Direction::Decreasing
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            MonotoneTransform::Affine { scale, shift } => scale * x + shift,
            MonotoneTransform::Power { exponent } => x.powf(exponent),
            MonotoneTransform::Logarithm => x.ln(),
            MonotoneTransform::Exponential { rate } => (rate * x).exp(),
        }
    }

    pub fn inverse(&self, z: f64) -> f64 {
        match *self {
            MonotoneTransform::Affine { scale, shift } => (z - shift) / scale,
            MonotoneTransform::Power { exponent } => z.powf(1.0 / exponent),
            MonotoneTransform::Logarithm => z.exp(),
            MonotoneTransform::Exponential { rate } => z.ln() / rate,
        }
    }
}

/// Crossing of the CDFs of `T(X_{a1})` and `T(X_{a2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedCrossing {
    /// Zero of `G_{a2} - G_{a1}` found directly on the transformed axis.
    pub x_star_transformed: f64,
    /// `T(x*)` for comparison.
    pub image_of_x_star: f64,
    /// Whether `G_{a2}(T(x)) - G_{a1}(T(x))` has the same sign as
    /// `F_{a2}(x) - F_{a1}(x)`. A decreasing map flips the CDF inequalities at
    /// corresponding points; the larger-`a` member stays the concentrated one.
    pub direction_preserved: bool,
}

/// Locates the crossing of the transformed pair on the transformed axis and
/// compares it with `T(x*)`.
pub fn transform_crossing(
    p1: &RestrictedBetaParams,
    p2: &RestrictedBetaParams,
    transform: &MonotoneTransform,
) -> Result<TransformedCrossing> {
    transform.validate()?;
    let x_star = crossing_point(p1, p2, DEFAULT_XTOL)?;
    let increasing = transform.direction() == Direction::Increasing;

    // CDF of T(X) at z, evaluated through the closed-form inverse.
    let transformed_cdf = |z: f64, p: &RestrictedBetaParams| -> f64 {
        let x = transform.inverse(z).clamp(0.0, 1.0);
        let s = p.shapes();
        let (lower, upper) = inc_beta_pair(x, 1.0 - x, s.alpha(), s.beta());
        if increasing {
            lower
        } else {
            upper
        }
    };
    let diff = |z: f64| transformed_cdf(z, p2) - transformed_cdf(z, p1);

    let mut zs: Vec<f64> = unit_grid(SCAN_POINTS).map(|x| transform.apply(x)).collect();
    if !increasing {
        zs.reverse();
    }
    if zs.iter().any(|z| !z.is_finite()) || zs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneTransform(
            "image of (0, 1) is not strictly ordered in floating point".into(),
        ));
    }
    let x_star_transformed = first_crossing(diff, &zs, 1e-14)?;

    let probe = 0.5 * x_star;
    let original = cdf_difference(probe, p1, p2);
    let transformed = diff(transform.apply(probe));
    Ok(TransformedCrossing {
        x_star_transformed,
        image_of_x_star: transform.apply(x_star),
        direction_preserved: original.signum() == transformed.signum(),
    })
}

/// `F_a(1/2)` across an `a` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureScan {
    pub n: f64,
    pub m: f64,
    /// `(a, F_a(1/2))` in input order.
    pub rows: Vec<(f64, f64)>,
    /// Observed on the grid only.
    pub strictly_decreasing: bool,
}

/// `F_a(1/2)` for each `a` without the `n > m` guard.
pub fn half_point_probabilities(n: f64, m: f64, a_grid: &[f64]) -> Result<ConjectureScan> {
    ensure_strictly_increasing(a_grid, "a grid")?;
    let rows = a_grid
        .par_iter()
        .map(|&a| {
            let p = RestrictedBetaParams::new(a, n, m)?;
            restricted_cdf(0.5, &p).map(|f| (a, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(ConjectureScan {
        n,
        m,
        rows,
        strictly_decreasing,
    })
}

/// Scan of `a -> F_a(1/2)` for `n > m`, where it is expected (but not
/// proven) to be strictly decreasing.
pub fn conjecture_scan(n: f64, m: f64, a_grid: &[f64]) -> Result<ConjectureScan> {
    if !(n > m) {
        return Err(domain(format!(
            "conjecture scan requires n > m, got n = {n}, m = {m}"
        )));
    }
    half_point_probabilities(n, m, a_grid)
}

/// Marsaglia–Tsang sampler for `Gamma(shape, 1)`; shapes below one use the
/// `U^(1/shape)` boost.
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    shape: f64,
    d: f64,
    c: f64,
}

impl GammaSampler {
    pub fn new(shape: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(domain(format!(
                "gamma shape {shape} must be positive and finite"
            )));
        }
        let d = if shape < 1.0 { shape + 1.0 } else { shape } - 1.0 / 3.0;
        Ok(Self {
            shape,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let draw = loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + self.c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u: f64 = rng.random();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                break self.d * v;
            }
        };
        if self.shape < 1.0 {
            let u: f64 = rng.random();
            draw * u.powf(1.0 / self.shape)
        } else {
            draw
        }
    }
}

/// Monte Carlo estimate of `Pr{U < V}` with `U ~ Gamma(n a)`, `V ~ Gamma(m a)`.
///
/// `U / (U + V) ~ Beta(n a, m a)`, so the estimate targets `F_a(1/2)`.
/// Deterministic for a given `seed` (ChaCha8 stream).
pub fn gamma_mc_oracle(n: f64, m: f64, a: f64, samples: usize, seed: u64) -> Result<f64> {
    if samples < MIN_MC_SAMPLES {
        return Err(domain(format!(
            "at least {MIN_MC_SAMPLES} samples required, got {samples}"
        )));
    }
    let p = RestrictedBetaParams::new(a, n, m)?;
    let shapes = p.shapes();
    let u_gen = GammaSampler::new(shapes.alpha())?;
    let v_gen = GammaSampler::new(shapes.beta())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut below = 0usize;
    for _ in 0..samples {
        let u = u_gen.sample(&mut rng);
        let v = v_gen.sample(&mut rng);
        if u < v {
            below += 1;
        }
    }
    Ok(below as f64 / samples as f64)
}
