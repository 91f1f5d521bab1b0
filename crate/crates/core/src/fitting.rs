//! Minimum chi-square fits of GB2 distributions to grouped income tables.

use serde::{Deserialize, Serialize};

use crate::distributions::{GB2Params, XiA};
use crate::error::{Error, Result};
use crate::numerics::nelder_mead;
use crate::specfun::inc_beta_pair;

/// Value returned by the objective when a model cell probability vanishes.
pub const CHI_SQUARE_PENALTY: f64 = 1e12;

/// Cells with model probability below this trigger the penalty.
pub const MIN_CELL_PROBABILITY: f64 = 1e-12;

/// Accepted range for the raw percent total before normalization.
pub const PERCENT_SUM_RANGE: (f64, f64) = (99.0, 101.0);

const FIT_MAXITER: usize = 20_000;
const FIT_FTOL: f64 = 1e-15;
const SIMPLEX_STEP: f64 = 0.5;

/// Percent of households per income bin for one year.
///
/// `edges_kusd` holds the lower edge of every bin, starting at 0; bin `i`
/// spans `[edges[i], edges[i + 1])` and the last bin is open-ended, so there
/// is one percent per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedTable {
    year: i32,
    edges_kusd: Vec<f64>,
    percents: Vec<f64>,
    median_kusd: Option<f64>,
    gini_official: Option<f64>,
}

impl GroupedTable {
    /// Validates the table and rescales the percents to sum to exactly 100.
    pub fn new(year: i32, edges_kusd: Vec<f64>, percents: Vec<f64>) -> Result<Self> {
        let invalid = |msg: String| Err(Error::Validation(format!("year {year}: {msg}")));
        if edges_kusd.is_empty() {
            return invalid("no bins".into());
        }
        if edges_kusd.len() != percents.len() {
            return invalid(format!(
                "{} edges but {} percents",
                edges_kusd.len(),
                percents.len()
            ));
        }
        if edges_kusd[0] != 0.0 {
            return invalid(format!(
                "first bin starts at {} instead of 0",
                edges_kusd[0]
            ));
        }
        if edges_kusd.iter().any(|e| !e.is_finite()) || edges_kusd.windows(2).any(|w| w[1] <= w[0])
        {
            return invalid("bin edges must be finite and strictly increasing".into());
        }
        if percents.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("percents must be finite and nonnegative".into());
        }
        let total: f64 = percents.iter().sum();
        if !(PERCENT_SUM_RANGE.0..=PERCENT_SUM_RANGE.1).contains(&total) {
            return invalid(format!(
                "percents sum to {total}, outside [{}, {}]",
                PERCENT_SUM_RANGE.0, PERCENT_SUM_RANGE.1
            ));
        }
        let percents = percents.into_iter().map(|p| 100.0 * p / total).collect();
        Ok(Self {
            year,
            edges_kusd,
            percents,
            median_kusd: None,
            gini_official: None,
        })
    }

    /// Table whose percents are `100 * probs`, e.g. model cell probabilities.
    pub fn from_probabilities(year: i32, edges_kusd: Vec<f64>, probs: &[f64]) -> Result<Self> {
        Self::new(year, edges_kusd, probs.iter().map(|p| 100.0 * p).collect())
    }

    pub fn with_median(mut self, median_kusd: f64) -> Result<Self> {
        if !(median_kusd.is_finite() && median_kusd > 0.0) {
            return Err(Error::Validation(format!(
                "year {}: median {median_kusd} must be positive",
                self.year
            )));
        }
        self.median_kusd = Some(median_kusd);
        Ok(self)
    }

    pub fn with_official_gini(mut self, gini: Option<f64>) -> Self {
        self.gini_official = gini;
        self
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn edges_kusd(&self) -> &[f64] {
        &self.edges_kusd
    }

    /// Normalized percents, summing to 100.
    pub fn percents(&self) -> &[f64] {
        &self.percents
    }

    /// Observed proportions, summing to 1.
    pub fn proportions(&self) -> Vec<f64> {
        self.percents.iter().map(|p| p / 100.0).collect()
    }

    pub fn median_kusd(&self) -> Option<f64> {
        self.median_kusd
    }

    pub fn gini_official(&self) -> Option<f64> {
        self.gini_official
    }

    pub fn bins(&self) -> usize {
        self.percents.len()
    }
}

/// How the GB2 scale `b` is handled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// `b` equals the year's median: the table's own median if present,
    /// otherwise one interpolated from the groups.
    FixedMedian,
    /// `b` fixed at the given value in thousands of dollars.
    Provided(f64),
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    FixedOne,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub scale_mode: ScaleMode,
    pub gamma_mode: GammaMode,
    /// Starting parameters in kUSD units; defaults to `xi = 0.5, a = 4,
    /// gamma = 1` with `b` at the scale.
    pub start: Option<GB2Params>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            scale_mode: ScaleMode::FixedMedian,
            gamma_mode: GammaMode::FixedOne,
            start: None,
        }
    }
}

impl FitConfig {
    pub fn free_params(&self) -> usize {
        2 + usize::from(self.gamma_mode == GammaMode::Free)
            + usize::from(self.scale_mode == ScaleMode::Free)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Fitted parameters with `scale_b` in kUSD.
    pub params: GB2Params,
    pub xi_a: XiA,
    pub chi_square: f64,
    pub converged: bool,
    pub iterations: usize,
    /// The kUSD value the edges were divided by during the fit.
    pub scale_kusd: f64,
}

/// Model probability of each bin; the last bin is `1 - F(last edge)`.
pub fn bin_probabilities(p: &GB2Params, edges_kusd: &[f64]) -> Result<Vec<f64>> {
    if edges_kusd.is_empty() {
        return Err(crate::error::domain("bin_probabilities: no edges"));
    }
    if !(edges_kusd[0] >= 0.0) || edges_kusd.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(crate::error::domain(
            "bin_probabilities: edges must be nonnegative and increasing",
        ));
    }
    // (F, 1 - F) at each edge, then differences on whichever side is small.
    let tails: Vec<(f64, f64)> = edges_kusd
        .iter()
        .map(|&e| {
            let (w, y) = p.beta_space(e);
            inc_beta_pair(w, y, p.alpha, p.beta)
        })
        .collect();
    let mut probs = Vec::with_capacity(tails.len());
    for pair in tails.windows(2) {
        let ((f0, s0), (f1, s1)) = (pair[0], pair[1]);
        let cell = if f1 <= 0.5 { f1 - f0 } else { s0 - s1 };
        probs.push(cell.max(0.0));
    }
    probs.push(tails[tails.len() - 1].1);
    Ok(probs)
}

fn chi_square_from(observed: &[f64], model: &[f64]) -> f64 {
    if model.iter().any(|&pi| !(pi >= MIN_CELL_PROBABILITY)) {
        return CHI_SQUARE_PENALTY;
    }
    observed
        .iter()
        .zip(model)
        .map(|(o, pi)| (o - pi) * (o - pi) / pi)
        .sum()
}

/// `sum (o_i - pi_i)^2 / pi_i` over bins, on proportions. Returns
/// [`CHI_SQUARE_PENALTY`] instead of failing when a model cell is empty.
pub fn chi_square_objective(p: &GB2Params, table: &GroupedTable) -> f64 {
    match bin_probabilities(p, &table.edges_kusd) {
        Ok(model) => chi_square_from(&table.proportions(), &model),
        Err(_) => CHI_SQUARE_PENALTY,
    }
}

/// Median by linear interpolation of the grouped CDF.
pub fn estimate_median_from_groups(table: &GroupedTable) -> Result<f64> {
    let edges = &table.edges_kusd;
    let mut cum = 0.0;
    for i in 0..edges.len() - 1 {
        let p = table.percents[i];
        if cum + p >= 50.0 {
            return Ok(edges[i] + (50.0 - cum) / p * (edges[i + 1] - edges[i]));
        }
        cum += p;
    }
    Err(Error::MedianInOpenBin {
        cumulative_percent: cum,
    })
}

/// The divisor applied to the edges during a fit.
pub fn resolve_scale(table: &GroupedTable, mode: ScaleMode) -> Result<f64> {
    let median = || {
        table
            .median_kusd
            .map_or_else(|| estimate_median_from_groups(table), Ok)
    };
    match mode {
        ScaleMode::FixedMedian => median(),
        ScaleMode::Provided(b) if b.is_finite() && b > 0.0 => Ok(b),
        ScaleMode::Provided(b) => Err(crate::error::domain(format!(
            "provided scale {b} must be positive"
        ))),
        // Only conditioning depends on this, so fall back to the top edge.
        ScaleMode::Free => median().or_else(|_| {
            Ok(table
                .edges_kusd
                .last()
                .copied()
                .filter(|e| *e > 0.0)
                .unwrap_or(1.0))
        }),
    }
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Unconstrained coordinates: `(logit xi, ln a, [ln gamma], [ln b])`.
struct Coordinates {
    gamma_free: bool,
    scale_free: bool,
}

impl Coordinates {
    fn decode(&self, theta: &[f64]) -> Result<GB2Params> {
        let xi = logistic(theta[0]);
        let a = theta[1].exp();
        let mut k = 2;
        let gamma = if self.gamma_free {
            k += 1;
            theta[k - 1].exp()
        } else {
            1.0
        };
        let b = if self.scale_free { theta[k].exp() } else { 1.0 };
        GB2Params::from_xi_a(b, gamma, XiA::new(xi, a)?)
    }

    fn encode(&self, p: &GB2Params) -> Vec<f64> {
        let xa = p.xi_a();
        let mut theta = vec![logit(xa.xi), xa.a.ln()];
        if self.gamma_free {
            theta.push(p.gamma.ln());
        }
        if self.scale_free {
            theta.push(p.scale_b.ln());
        }
        theta
    }
}

/// Minimum chi-square GB2 fit.
///
/// Edges are divided by the resolved scale, the objective is minimized with
/// Nelder–Mead in log/logit coordinates, and the result is reported back in
/// kUSD. A fit that does not converge is returned inside
/// [`Error::OptimizerFailed`].
pub fn fit_gb2(table: &GroupedTable, config: &FitConfig) -> Result<FitResult> {
    let free = config.free_params();
    if table.bins() < free + 1 {
        return Err(Error::Underdetermined {
            bins: table.bins(),
            free_params: free,
        });
    }
    let scale = resolve_scale(table, config.scale_mode)?;
    let edges: Vec<f64> = table.edges_kusd.iter().map(|e| e / scale).collect();
    let observed = table.proportions();
    let coords = Coordinates {
        gamma_free: config.gamma_mode == GammaMode::Free,
        scale_free: config.scale_mode == ScaleMode::Free,
    };

    let start = match config.start {
        Some(s) => {
            let gamma = if coords.gamma_free { s.gamma } else { 1.0 };
            let b = if coords.scale_free {
                s.scale_b / scale
            } else {
                1.0
            };
            GB2Params::new(b, gamma, s.alpha, s.beta)?
        }
        None => GB2Params::from_xi_a(1.0, 1.0, XiA::new(0.5, 4.0)?)?,
    };
    let objective = |theta: &[f64]| match coords.decode(theta) {
        Ok(p) => match bin_probabilities(&p, &edges) {
            Ok(model) => chi_square_from(&observed, &model),
            Err(_) => f64::INFINITY,
        },
        Err(_) => f64::INFINITY,
    };
    let theta0 = coords.encode(&start);
    let steps = vec![SIMPLEX_STEP; theta0.len()];
    let opt = nelder_mead(objective, &theta0, &steps, FIT_MAXITER, FIT_FTOL)?;

    let scaled = coords.decode(&opt.point)?;
    let params = GB2Params::new(
        scaled.scale_b * scale,
        scaled.gamma,
        scaled.alpha,
        scaled.beta,
    )?;
    let result = FitResult {
        params,
        xi_a: params.xi_a(),
        chi_square: opt.value,
        converged: opt.converged,
        iterations: opt.iterations,
        scale_kusd: scale,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::OptimizerFailed {
            result: Box::new(result),
        })
    }
}
