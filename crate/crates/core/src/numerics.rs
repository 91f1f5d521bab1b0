//! Scalar numerical kernel: bracketed root finding, bracketed 1-D minimization,
//! adaptive quadrature and a restarting Nelder–Mead simplex.
//!
//! Everything here is a pure function of its inputs. No global state, no
//! randomness, so repeated calls are bit-identical.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_XTOL: f64 = 1e-12;
pub const DEFAULT_FTOL: f64 = 1e-10;
pub const DEFAULT_INTEGRATE_TOL: f64 = 1e-10;

/// Maximum bisection depth of any quadrature sub-interval.
pub const MAX_QUAD_DEPTH: usize = 50;

const MAX_QUAD_INTERVALS: usize = 200_000;
const MAX_ROOT_ITER: usize = 500;
const MAX_MIN_ITER: usize = 500;
const MAX_NM_RUNS: usize = 10;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidBracket { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Outcome of a multivariate minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn finite_or_err(v: f64, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective {
            at: format!("{at}"),
        })
    }
}

/// Brent's method: inverse quadratic / secant steps safeguarded by bisection.
///
/// The returned root lies inside a final bracket no wider than roughly
/// `xtol + 4 eps |root|`.
pub fn find_root<F>(f: F, bracket: Bracket, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut fa = finite_or_err(f(a), a)?;
    let mut fb = finite_or_err(f(b), b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let xtol = xtol.max(0.0);
    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ROOT_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = finite_or_err(f(b), b)?;
    }
    Ok(b)
}

/// Brent's parabolic-interpolation / golden-section minimizer.
///
/// Only interior points of the bracket are evaluated, so objectives that blow
/// up at the endpoints are fine. Achievable accuracy is limited to about
/// `sqrt(eps) * |x|` by the flatness of `f` at the minimum, so the effective
/// tolerance is `max(xtol, 1.5e-8 * |x|)`.
pub fn minimize_1d<F>(f: F, bracket: Bracket, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    const GOLD: f64 = 0.381_966_011_250_105_1;
    const REL: f64 = 1.5e-8;

    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut x = a + GOLD * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = finite_or_err(f(x), x)?;
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let xtol = xtol.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_MIN_ITER {
        let xm = 0.5 * (a + b);
        let tol1 = REL * x.abs() + xtol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(x);
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = finite_or_err(f(u), u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok(x)
}

// Quintic smoothstep and its derivative. The substitution x = lo + w * phi(t)
// clusters nodes near both endpoints and makes the transformed integrand
// vanish there, which tames integrable power singularities.
fn smoothstep(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn smoothstep_deriv(t: f64) -> f64 {
    let s = t * (1.0 - t);
    30.0 * s * s
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    depth: usize,
}

struct Refined {
    panel: Panel,
    left: f64,
    right: f64,
    flm: f64,
    frm: f64,
    err: f64,
}

impl Refined {
    fn estimate(&self) -> f64 {
        let two = self.left + self.right;
        two + (two - self.panel.whole) / 15.0
    }
}

impl PartialEq for Refined {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Refined {}
impl PartialOrd for Refined {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Refined {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.panel.a.total_cmp(&self.panel.a))
    }
}

/// Globally adaptive Simpson quadrature of `f` over `[lo, hi]`.
///
/// The panel with the largest local error estimate is bisected until the summed
/// estimate drops below `tol`. The integration variable is first mapped through
/// a quintic smoothstep, so `f` is never evaluated exactly at `lo` or `hi` unless
/// the mapped node rounds onto an endpoint; a non-finite value there is taken
/// as zero (it carries no resolvable mass).
pub fn integrate<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(crate::error::domain(format!(
            "integration limits must be finite: [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return integrate(f, hi, lo, tol).map(|v| -v);
    }
    let width = hi - lo;
    let map = |t: f64| -> f64 {
        // Measure from the nearer endpoint so both ends keep full resolution.
        if t <= 0.5 {
            lo + width * smoothstep(t)
        } else {
            hi - width * smoothstep(1.0 - t)
        }
    };
    let g = |t: f64| -> Result<f64> {
        let jac = smoothstep_deriv(t);
        if jac == 0.0 {
            return Ok(0.0);
        }
        let x = map(t);
        let v = f(x);
        if v.is_finite() {
            Ok(v * width * jac)
        } else if x <= lo || x >= hi {
            Ok(0.0)
        } else {
            Err(Error::NonFiniteObjective { at: format!("{x}") })
        }
    };

    let refine = |panel: Panel| -> Result<Refined> {
        let m = 0.5 * (panel.a + panel.b);
        let lm = 0.5 * (panel.a + m);
        let rm = 0.5 * (m + panel.b);
        let flm = g(lm)?;
        let frm = g(rm)?;
        let h = panel.b - panel.a;
        let left = h / 12.0 * (panel.fa + 4.0 * flm + panel.fm);
        let right = h / 12.0 * (panel.fm + 4.0 * frm + panel.fb);
        // Once the mapped abscissae stop being distinct no further resolution is possible.
        let exhausted = map(panel.a) == map(lm) || map(rm) == map(panel.b);
        let err = if exhausted {
            0.0
        } else {
            (left + right - panel.whole).abs() / 15.0
        };
        Ok(Refined {
            panel,
            left,
            right,
            flm,
            frm,
            err,
        })
    };

    let (fa, fm, fb) = (g(0.0)?, g(0.5)?, g(1.0)?);
    let root = Panel {
        a: 0.0,
        b: 1.0,
        fa,
        fm,
        fb,
        whole: (fa + 4.0 * fm + fb) / 6.0,
        depth: 0,
    };
    let mut heap = BinaryHeap::new();
    let first = refine(root)?;
    let mut total_err = first.err;
    heap.push(first);

    while total_err > tol {
        let Some(worst) = heap.pop() else { break };
        if worst.err == 0.0 {
            heap.push(worst);
            break;
        }
        if worst.panel.depth + 1 > MAX_QUAD_DEPTH || heap.len() + 2 > MAX_QUAD_INTERVALS {
            let t = 0.5 * (worst.panel.a + worst.panel.b);
            return Err(Error::MaxDepthExceeded {
                depth: worst.panel.depth + 1,
                near: map(t),
            });
        }
        total_err -= worst.err;
        let p = &worst.panel;
        let m = 0.5 * (p.a + p.b);
        let depth = p.depth + 1;
        let left = Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: worst.flm,
            fb: p.fm,
            whole: worst.left,
            depth,
        };
        let right = Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: worst.frm,
            fb: p.fb,
            whole: worst.right,
            depth,
        };
        for child in [left, right] {
            let r = refine(child)?;
            total_err += r.err;
            heap.push(r);
        }
        // Guard against drift in the running sum.
        if total_err < 0.0 {
            total_err = heap.iter().map(|r| r.err).sum();
        }
    }

    // Sum in interval order so the result does not depend on heap layout.
    let mut panels: Vec<Refined> = heap.into_vec();
    panels.sort_by(|x, y| x.panel.a.total_cmp(&y.panel.a));
    Ok(panels.iter().map(Refined::estimate).sum())
}

#[derive(Clone)]
struct Vertex {
    x: Vec<f64>,
    f: f64,
}

struct Simplex<'a, F: Fn(&[f64]) -> f64> {
    f: &'a F,
    vertices: Vec<Vertex>,
}

impl<'a, F: Fn(&[f64]) -> f64> Simplex<'a, F> {
    fn eval(&self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn build(f: &'a F, start: &[f64], fstart: f64, scale: &[f64]) -> Self {
        let mut s = Simplex {
            f,
            vertices: Vec::with_capacity(start.len() + 1),
        };
        s.vertices.push(Vertex {
            x: start.to_vec(),
            f: fstart,
        });
        for (i, step) in scale.iter().enumerate() {
            let mut x = start.to_vec();
            x[i] += step;
            let fx = s.eval(&x);
            s.vertices.push(Vertex { x, f: fx });
        }
        s
    }

    fn sort(&mut self) {
        self.vertices.sort_by(|a, b| a.f.total_cmp(&b.f));
    }

    fn spread(&self) -> f64 {
        let last = self.vertices.len() - 1;
        self.vertices[last].f - self.vertices[0].f
    }

    fn collapsed(&self) -> bool {
        let best = &self.vertices[0].x;
        self.vertices[1..].iter().all(|v| {
            v.x.iter()
                .zip(best)
                .all(|(a, b)| (a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1e-300))
        })
    }

    /// Runs until the value spread is below `ftol` or the budget is spent.
    /// Returns (iterations used, converged).
    fn run(&mut self, budget: usize, ftol: f64) -> (usize, bool) {
        const REFLECT: f64 = 1.0;
        const EXPAND: f64 = 2.0;
        const CONTRACT: f64 = 0.5;
        const SHRINK: f64 = 0.5;

        let n = self.vertices.len() - 1;
        self.sort();
        let mut iters = 0;
        while iters < budget {
            if self.spread() < ftol || self.collapsed() {
                return (iters, true);
            }
            iters += 1;

            let mut centroid = vec![0.0; n];
            for v in &self.vertices[..n] {
                for (c, xi) in centroid.iter_mut().zip(&v.x) {
                    *c += xi;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= n as f64);

            let worst = self.vertices[n].clone();
            let toward = |coef: f64, target: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(target)
                    .map(|(c, t)| c + coef * (t - c))
                    .collect()
            };
            let xr = toward(-REFLECT, &worst.x);
            let fr = self.eval(&xr);
            let fbest = self.vertices[0].f;
            let fsecond = self.vertices[n - 1].f;

            if fr < fbest {
                let xe = toward(EXPAND, &xr);
                let fe = self.eval(&xe);
                self.vertices[n] = if fe < fr {
                    Vertex { x: xe, f: fe }
                } else {
                    Vertex { x: xr, f: fr }
                };
            } else if fr < fsecond {
                self.vertices[n] = Vertex { x: xr, f: fr };
            } else {
                let accepted = if fr < worst.f {
                    let xc = toward(CONTRACT, &xr);
                    let fc = self.eval(&xc);
                    (fc <= fr).then_some(Vertex { x: xc, f: fc })
                } else {
                    let xc = toward(CONTRACT, &worst.x);
                    let fc = self.eval(&xc);
                    (fc < worst.f).then_some(Vertex { x: xc, f: fc })
                };
                match accepted {
                    Some(v) => self.vertices[n] = v,
                    None => {
                        let best = self.vertices[0].x.clone();
                        for i in 1..=n {
                            let x: Vec<f64> = best
                                .iter()
                                .zip(&self.vertices[i].x)
                                .map(|(b, xi)| b + SHRINK * (xi - b))
                                .collect();
                            let fx = self.eval(&x);
                            self.vertices[i] = Vertex { x, f: fx };
                        }
                    }
                }
            }
            self.sort();
        }
        (iters, self.spread() < ftol || self.collapsed())
    }
}

/// Nelder–Mead simplex minimization with automatic restarts.
///
/// The initial simplex is `start` plus `scale[i]` along each axis. After the
/// value spread first drops below `ftol` the simplex is rebuilt around the
/// best vertex and the search resumes; convergence is reported only once a
/// restarted run fails to improve the best value by more than `ftol`.
/// Non-finite objective values away from `start` are treated as `+inf`.
pub fn nelder_mead<F>(
    f: F,
    start: &[f64],
    scale: &[f64],
    maxiter: usize,
    ftol: f64,
) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
{
    if start.is_empty() {
        return Err(crate::error::domain(
            "nelder_mead needs at least one dimension",
        ));
    }
    if scale.len() != start.len() {
        return Err(crate::error::domain(format!(
            "scale has {} entries, start has {}",
            scale.len(),
            start.len()
        )));
    }
    if start.iter().any(|x| !x.is_finite()) {
        return Err(crate::error::domain("start point must be finite"));
    }
    if scale.iter().any(|s| !s.is_finite() || *s == 0.0) {
        return Err(crate::error::domain(
            "simplex scale entries must be finite and nonzero",
        ));
    }
    let f0 = f(start);
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective {
            at: format!("{start:?}"),
        });
    }

    let mut best = Vertex {
        x: start.to_vec(),
        f: f0,
    };
    let mut iterations = 0;
    let mut converged = false;
    let mut runs = 0;
    while runs < MAX_NM_RUNS {
        let mut simplex = Simplex::build(&f, &best.x, best.f, scale);
        let (used, run_converged) = simplex.run(maxiter - iterations, ftol);
        iterations += used;
        runs += 1;
        let candidate = simplex.vertices[0].clone();
        let improvement = best.f - candidate.f;
        if candidate.f <= best.f {
            best = candidate;
        }
        if !run_converged {
            converged = false;
            break;
        }
        if runs >= 2 && improvement <= ftol {
            converged = true;
            break;
        }
        if iterations >= maxiter {
            break;
        }
    }

    Ok(OptimResult {
        point: best.x,
        value: best.f,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Bracket {
        Bracket::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn bracket_rejects_reversed_interval() {
        assert!(matches!(
            Bracket::new(1.0, 0.0),
            Err(Error::InvalidBracket { .. })
        ));
        assert!(Bracket::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn root_examples() {
        let r = find_root(|x| x - 0.5, unit(), 1e-12).unwrap();
        assert!((r - 0.5).abs() <= 1e-12);
        let r = find_root(|x| x * x - 0.25, unit(), 1e-12).unwrap();
        assert!((r - 0.5).abs() <= 1e-12);
        let r = find_root(|x| 3.0 * x * x - 2.0 * x.powi(3) - 0.5, unit(), 1e-12).unwrap();
        assert!((r - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn root_at_endpoint_is_returned() {
        assert_eq!(find_root(|x| x, unit(), 1e-12).unwrap(), 0.0);
        assert_eq!(find_root(|x| x - 1.0, unit(), 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn root_without_sign_change_fails() {
        let err = find_root(|x| x * x + 1.0, unit(), 1e-12).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn minimize_examples() {
        let x = minimize_1d(|x| (x - 0.3).powi(2), unit(), 1e-12).unwrap();
        assert!((x - 0.3).abs() < 1e-7, "{x}");
        let x = minimize_1d(|x| 1.0 / (x * (1.0 - x)), unit(), 1e-12).unwrap();
        assert!((x - 0.5).abs() < 1e-7, "{x}");
        // x^-p (1-x)^-q is minimized at p / (p + q).
        let x = minimize_1d(|x| 1.0 / (x * x * (1.0 - x)), unit(), 1e-12).unwrap();
        assert!((x - 2.0 / 3.0).abs() < 1e-7, "{x}");
    }

    #[test]
    fn minimize_reports_nonfinite() {
        let err = minimize_1d(|_| f64::NAN, unit(), 1e-12).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { .. }));
    }

    #[test]
    fn integrate_examples() {
        let v = integrate(|x| 6.0 * x * (1.0 - x), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 1.0).abs() <= 1e-10);
        let v = integrate(|x| x * 6.0 * x * (1.0 - x), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 0.5).abs() <= 1e-10);
        // (1 + x)^-4 over [0, inf) through x = w / (1 - w).
        let v = integrate(
            |w| {
                let x = w / (1.0 - w);
                (1.0 + x).powi(-4) / ((1.0 - w) * (1.0 - w))
            },
            0.0,
            1.0,
            1e-10,
        )
        .unwrap();
        assert!((v - 1.0 / 3.0).abs() <= 1e-8);
    }

    #[test]
    fn integrate_endpoint_singularities() {
        // Beta(1/2, 1/2) density integrates to one.
        let v = integrate(
            |x| 1.0 / (std::f64::consts::PI * (x * (1.0 - x)).sqrt()),
            0.0,
            1.0,
            1e-10,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
        let v = integrate(|x| x.powf(-0.75), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 4.0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn integrate_reversed_limits_negate() {
        let a = integrate(|x| x.exp(), 0.0, 2.0, 1e-10).unwrap();
        let b = integrate(|x| x.exp(), 2.0, 0.0, 1e-10).unwrap();
        assert_eq!(a, -b);
        assert!((a - (2f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn integrate_is_additive() {
        let tol = 1e-10;
        let f = |x: f64| (3.0 * x).sin() + x * x;
        for (a, b, c) in [(0.0, 0.4, 1.0), (-1.0, 0.25, 3.0), (0.1, 0.2, 0.9)] {
            let ab = integrate(f, a, b, tol).unwrap();
            let bc = integrate(f, b, c, tol).unwrap();
            let ac = integrate(f, a, c, tol).unwrap();
            assert!((ab + bc - ac).abs() <= 3.0 * tol);
        }
    }

    #[test]
    fn integrate_interior_nan_is_an_error() {
        let err = integrate(
            |x| if (x - 0.5).abs() < 0.1 { f64::NAN } else { x },
            0.0,
            1.0,
            1e-10,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { .. }));
    }

    #[test]
    fn integrate_unreachable_tolerance() {
        // A jump discontinuity can never satisfy a zero tolerance.
        let err = integrate(|x| if x < 0.3 { 0.0 } else { 1.0 }, 0.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::MaxDepthExceeded { .. }));
    }

    #[test]
    fn nelder_mead_examples() {
        let r = nelder_mead(
            |v| (v[0] - 1.0).powi(2) + (v[1] - 1.0).powi(2),
            &[0.0, 0.0],
            &[0.5, 0.5],
            5000,
            1e-14,
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.value < 1e-12);
        assert!((r.point[0] - 1.0).abs() < 1e-6 && (r.point[1] - 1.0).abs() < 1e-6);

        let r = nelder_mead(
            |v| (v[0] - 3.0).powi(2) + 10.0 * (v[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &[1.0, 1.0],
            5000,
            1e-16,
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.point[0] - 3.0).abs() < 1e-6, "{:?}", r.point);
        assert!((r.point[1] + 2.0).abs() < 1e-6, "{:?}", r.point);

        let rosen = |v: &[f64]| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.2, 1.0], &[0.5, 0.5], 20_000, 1e-16).unwrap();
        assert!(r.converged);
        assert!(
            (r.point[0] - 1.0).abs() < 1e-4 && (r.point[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r.point
        );
    }

    #[test]
    fn nelder_mead_convex_quadratics_up_to_dim_four() {
        let ftol = 1e-10;
        for dim in 1..=4 {
            let f = |v: &[f64]| {
                v.iter()
                    .enumerate()
                    .map(|(i, x)| (i as f64 + 1.0) * (x - 0.5 * i as f64).powi(2))
                    .sum()
            };
            let start = vec![2.0; dim];
            let scale = vec![0.7; dim];
            let r = nelder_mead(f, &start, &scale, 10_000, ftol).unwrap();
            assert!(r.converged, "dim {dim}");
            assert!(r.value < 10.0 * ftol, "dim {dim}: {}", r.value);
            assert!(r.iterations <= 10_000);
        }
    }

    #[test]
    fn nelder_mead_respects_iteration_budget() {
        let rosen = |v: &[f64]| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.2, 1.0], &[0.1, 0.1], 5, 1e-16).unwrap();
        assert!(!r.converged);
        assert!(r.iterations <= 5);
        assert!(r.value.is_finite());
    }

    #[test]
    fn nelder_mead_rejects_nonfinite_start() {
        let err = nelder_mead(|_| f64::NAN, &[0.0], &[1.0], 10, 1e-10).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { .. }));
    }

    #[test]
    fn nelder_mead_is_deterministic() {
        let f = |v: &[f64]| (v[0] - 0.1).powi(2) + (v[1] * v[0] - 2.0).powi(2) + v[2].abs();
        let a = nelder_mead(f, &[1.0, 1.0, 1.0], &[0.3, 0.3, 0.3], 4000, 1e-12).unwrap();
        let b = nelder_mead(f, &[1.0, 1.0, 1.0], &[0.3, 0.3, 0.3], 4000, 1e-12).unwrap();
        assert_eq!(a, b);
    }
}
