//! Grouped income CSV ingestion, per-year fits, model Gini and the trend table.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{gb2_mean, GB2Params};
use crate::error::{Error, Result};
use crate::fitting::{fit_gb2, FitConfig, GroupedTable};
use crate::numerics::integrate;
use crate::specfun::{inc_beta_pair, ShapePair};

/// Default `|xi1 - xi2|` below which two years are compared by `a`.
pub const DEFAULT_XI_TOLERANCE: f64 = 0.005;

const GINI_TOL: f64 = 1e-11;

pub const TREND_HEADER: [&str; 8] = [
    "year",
    "a_hat",
    "xi_hat",
    "neg_a",
    "gini_model",
    "gini_official",
    "chi_square",
    "converged",
];

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        message: message.into(),
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn required_column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| parse_err(1, format!("missing required column `{name}`")))
}

fn field<'r>(record: &'r csv::StringRecord, idx: usize, line: u64, name: &str) -> Result<&'r str> {
    record
        .get(idx)
        .ok_or_else(|| parse_err(line, format!("missing field `{name}`")))
}

fn parse_f64(text: &str, line: u64, name: &str) -> Result<f64> {
    let v: f64 = text
        .parse()
        .map_err(|_| parse_err(line, format!("`{name}` is not a number: {text:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{name}` is not finite: {text:?}")));
    }
    Ok(v)
}

fn parse_year(text: &str, line: u64) -> Result<i32> {
    text.parse()
        .map_err(|_| parse_err(line, format!("`year` is not an integer: {text:?}")))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => parse_err(line, format!("{kind:?}")),
    }
}

fn read_headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<csv::StringRecord> {
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(parse_err(1, "empty input: header row required"));
    }
    Ok(headers)
}

struct BinRow {
    line: u64,
    lower: f64,
    upper: Option<f64>,
    percent: f64,
    median: Option<f64>,
}

/// Reads `year,bin_lower_kusd,bin_upper_kusd,percent[,median_kusd]` rows into
/// one validated table per year, in ascending year order.
pub fn read_grouped_csv<R: Read>(reader: R) -> Result<Vec<GroupedTable>> {
    let mut rdr = csv_reader(reader);
    let headers = read_headers(&mut rdr)?;
    let year_col = required_column(&headers, "year")?;
    let lower_col = required_column(&headers, "bin_lower_kusd")?;
    let upper_col = required_column(&headers, "bin_upper_kusd")?;
    let percent_col = required_column(&headers, "percent")?;
    let median_col = column(&headers, "median_kusd");

    let mut by_year: BTreeMap<i32, Vec<BinRow>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let year = parse_year(field(&record, year_col, line, "year")?, line)?;
        let lower = parse_f64(
            field(&record, lower_col, line, "bin_lower_kusd")?,
            line,
            "bin_lower_kusd",
        )?;
        let upper = match field(&record, upper_col, line, "bin_upper_kusd")? {
            "" => None,
            text => Some(parse_f64(text, line, "bin_upper_kusd")?),
        };
        let percent = parse_f64(
            field(&record, percent_col, line, "percent")?,
            line,
            "percent",
        )?;
        let median = match median_col.and_then(|c| record.get(c)) {
            None | Some("") => None,
            Some(text) => Some(parse_f64(text, line, "median_kusd")?),
        };
        if let Some(u) = upper {
            if u <= lower {
                return Err(parse_err(
                    line,
                    format!("bin upper edge {u} is not above lower edge {lower}"),
                ));
            }
        }
        by_year.entry(year).or_default().push(BinRow {
            line,
            lower,
            upper,
            percent,
            median,
        });
    }
    if by_year.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }

    by_year
        .into_iter()
        .map(|(year, rows)| assemble_year(year, rows))
        .collect()
}

fn assemble_year(year: i32, mut rows: Vec<BinRow>) -> Result<GroupedTable> {
    let invalid = |msg: String| Error::Validation(format!("year {year}: {msg}"));
    rows.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    for pair in rows.windows(2) {
        match pair[0].upper {
            None => {
                return Err(invalid(format!(
                    "open bin on line {} is not the top bin",
                    pair[0].line
                )))
            }
            Some(u) if u != pair[1].lower => return Err(invalid(format!(
                "bin ending at {u} (line {}) does not meet the next bin starting at {} (line {})",
                pair[0].line, pair[1].lower, pair[1].line
            ))),
            Some(_) => {}
        }
    }
    let top = rows.last().expect("at least one row per year");
    if top.upper.is_some() {
        return Err(invalid(format!(
            "top bin (line {}) must be open: leave bin_upper_kusd empty",
            top.line
        )));
    }

    let mut median = None;
    for row in &rows {
        match (median, row.median) {
            (Some(m), Some(r)) if m != r => {
                return Err(invalid(format!(
                    "median_kusd {r} on line {} differs from {m}",
                    row.line
                )));
            }
            (None, Some(r)) => median = Some(r),
            _ => {}
        }
    }
    let edges = rows.iter().map(|r| r.lower).collect();
    let percents = rows.iter().map(|r| r.percent).collect();
    let table = GroupedTable::new(year, edges, percents)?;
    match median {
        Some(m) => table.with_median(m),
        None => Ok(table),
    }
}

pub fn load_grouped_csv(path: impl AsRef<Path>) -> Result<Vec<GroupedTable>> {
    read_grouped_csv(File::open(path)?)
}

/// Reads `year,gini` rows.
pub fn read_official_gini<R: Read>(reader: R) -> Result<BTreeMap<i32, f64>> {
    let mut rdr = csv_reader(reader);
    let headers = read_headers(&mut rdr)?;
    let year_col = required_column(&headers, "year")?;
    let gini_col = required_column(&headers, "gini")?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let year = parse_year(field(&record, year_col, line, "year")?, line)?;
        let gini = parse_f64(field(&record, gini_col, line, "gini")?, line, "gini")?;
        if !(0.0..=1.0).contains(&gini) {
            return Err(parse_err(line, format!("gini {gini} outside [0, 1]")));
        }
        if out.insert(year, gini).is_some() {
            return Err(parse_err(line, format!("duplicate year {year}")));
        }
    }
    Ok(out)
}

pub fn load_official_gini(path: impl AsRef<Path>) -> Result<BTreeMap<i32, f64>> {
    read_official_gini(File::open(path)?)
}

pub fn attach_official_gini(
    tables: Vec<GroupedTable>,
    gini: &BTreeMap<i32, f64>,
) -> Vec<GroupedTable> {
    tables
        .into_iter()
        .map(|t| {
            let g = gini.get(&t.year()).copied().or(t.gini_official());
            t.with_official_gini(g)
        })
        .collect()
}

/// `1 - (1/mu) * integral of S^2` written over the Beta variable `w` of the
/// GB2, where `x = b (w / (1 - w))^(1/gamma)`.
pub fn model_gini(p: &GB2Params) -> Result<f64> {
    let mean = gb2_mean(p);
    if !mean.exists {
        return Err(Error::MeanUndefined {
            beta_gamma: p.beta * p.gamma,
        });
    }
    let inv_g = 1.0 / p.gamma;
    let ln_front = (p.scale_b * inv_g).ln();
    let integrand = |w: f64| {
        let (_, s) = inc_beta_pair(w, 1.0 - w, p.alpha, p.beta);
        if s == 0.0 {
            return 0.0;
        }
        (2.0 * s.ln() + ln_front + (inv_g - 1.0) * w.ln() - (inv_g + 1.0) * (1.0 - w).ln()).exp()
    };
    let area = integrate(integrand, 0.0, 1.0, GINI_TOL * p.scale_b)?;
    Ok(1.0 - area / mean.value)
}

/// Gini of a Beta(alpha, beta) variable on `[0, 1]`.
pub fn beta_gini(shapes: ShapePair) -> Result<f64> {
    let (a, b) = (shapes.alpha(), shapes.beta());
    let area = integrate(
        |x| {
            let s = inc_beta_pair(x, 1.0 - x, a, b).1;
            s * s
        },
        0.0,
        1.0,
        GINI_TOL,
    )?;
    Ok(1.0 - area * (a + b) / a)
}

/// One row of the yearly trend table. Missing values mean the fit failed
/// before producing parameters; `note` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub year: i32,
    pub a_hat: Option<f64>,
    pub xi_hat: Option<f64>,
    pub neg_a: Option<f64>,
    pub gini_model: Option<f64>,
    pub gini_official: Option<f64>,
    pub chi_square: Option<f64>,
    pub converged: bool,
    pub note: Option<String>,
}

fn trend_row(table: &GroupedTable, config: &FitConfig) -> TrendRow {
    let mut row = TrendRow {
        year: table.year(),
        a_hat: None,
        xi_hat: None,
        neg_a: None,
        gini_model: None,
        gini_official: table.gini_official(),
        chi_square: None,
        converged: false,
        note: None,
    };
    let fit = match fit_gb2(table, config) {
        Ok(fit) => fit,
        Err(Error::OptimizerFailed { result }) => {
            row.note = Some("optimizer did not converge".into());
            *result
        }
        Err(e) => {
            row.note = Some(e.to_string());
            return row;
        }
    };
    row.a_hat = Some(fit.xi_a.a);
    row.xi_hat = Some(fit.xi_a.xi);
    row.neg_a = Some(-fit.xi_a.a);
    row.chi_square = Some(fit.chi_square);
    row.converged = fit.converged;
    match model_gini(&fit.params) {
        Ok(g) => row.gini_model = Some(g),
        Err(e) => {
            let note = row
                .note
                .take()
                .map_or_else(|| e.to_string(), |n| format!("{n}; {e}"));
            row.note = Some(note);
        }
    }
    row
}

/// Fits every table (in parallel) and returns rows in ascending year order.
/// Failed years are kept with `converged = false` and a note.
pub fn build_trend(tables: &[GroupedTable], config: &FitConfig) -> Vec<TrendRow> {
    let mut rows: Vec<TrendRow> = tables.par_iter().map(|t| trend_row(t, config)).collect();
    rows.sort_by_key(|r| r.year);
    rows
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes the trend table as CSV with [`TREND_HEADER`] columns.
pub fn write_trend_csv<W: Write>(rows: &[TrendRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let flush = |e: csv::Error| csv_error(e);
    w.write_record(TREND_HEADER).map_err(flush)?;
    for r in rows {
        w.write_record([
            r.year.to_string(),
            opt_cell(r.a_hat),
            opt_cell(r.xi_hat),
            opt_cell(r.neg_a),
            opt_cell(r.gini_model),
            opt_cell(r.gini_official),
            opt_cell(r.chi_square),
            r.converged.to_string(),
        ])
        .map_err(flush)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearComparison {
    Year2MoreBunched,
    Year1MoreBunched,
    NotComparable,
}

impl YearComparison {
    pub fn as_str(&self) -> &'static str {
        match self {
            YearComparison::Year2MoreBunched => "year2_more_bunched",
            YearComparison::Year1MoreBunched => "year1_more_bunched",
            YearComparison::NotComparable => "not_comparable",
        }
    }
}

/// [`compare_years_with`] at [`DEFAULT_XI_TOLERANCE`].
pub fn compare_years(row1: &TrendRow, row2: &TrendRow) -> YearComparison {
    compare_years_with(row1, row2, DEFAULT_XI_TOLERANCE)
}

/// Larger `a` means more bunched, but only when both fits converged and
/// their `xi` values are within `xi_tol`.
pub fn compare_years_with(row1: &TrendRow, row2: &TrendRow, xi_tol: f64) -> YearComparison {
    if !(row1.converged && row2.converged) {
        return YearComparison::NotComparable;
    }
    let (Some(a1), Some(a2), Some(x1), Some(x2)) =
        (row1.a_hat, row2.a_hat, row1.xi_hat, row2.xi_hat)
    else {
        return YearComparison::NotComparable;
    };
    if !((x1 - x2).abs() <= xi_tol) {
        return YearComparison::NotComparable;
    }
    if a2 > a1 {
        YearComparison::Year2MoreBunched
    } else if a1 > a2 {
        YearComparison::Year1MoreBunched
    } else {
        YearComparison::NotComparable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::RestrictedBetaParams;
    use crate::fitting::{bin_probabilities, ScaleMode};

    const EDGES: [f64; 9] = [0.0, 15.0, 25.0, 35.0, 50.0, 75.0, 100.0, 150.0, 200.0];

    fn two_year_csv() -> String {
        let mut s = String::from("year,bin_lower_kusd,bin_upper_kusd,percent,median_kusd\n");
        for (year, beta) in [(2015, 2.2), (2016, 2.3)] {
            let p = GB2Params::new(70.0, 1.0, 2.0, beta).unwrap();
            let probs = bin_probabilities(&p, &EDGES).unwrap();
            for (i, pr) in probs.iter().enumerate() {
                let upper = EDGES.get(i + 1).map_or(String::new(), |u| u.to_string());
                s.push_str(&format!("{year},{},{upper},{},70\n", EDGES[i], 100.0 * pr));
            }
        }
        s
    }

    fn row(a: f64, xi: f64) -> TrendRow {
        TrendRow {
            year: 0,
            a_hat: Some(a),
            xi_hat: Some(xi),
            neg_a: Some(-a),
            gini_model: None,
            gini_official: None,
            chi_square: Some(0.0),
            converged: true,
            note: None,
        }
    }

    #[test]
    fn loads_two_years() {
        let tables = read_grouped_csv(two_year_csv().as_bytes()).unwrap();
        assert_eq!(tables.len(), 2);
        assert!(tables.iter().all(|t| t.bins() == 9));
        assert_eq!(tables[0].year(), 2015);
        assert_eq!(tables[1].median_kusd(), Some(70.0));
        assert_eq!(tables[0].edges_kusd(), &EDGES);
    }

    #[test]
    fn rows_may_arrive_unsorted() {
        let csv = "year,bin_lower_kusd,bin_upper_kusd,percent\n1,50,,50\n1,0,50,50\n";
        let t = read_grouped_csv(csv.as_bytes()).unwrap();
        assert_eq!(t[0].edges_kusd(), &[0.0, 50.0]);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            read_grouped_csv("".as_bytes()),
            Err(Error::Parse { .. })
        ));
        let short = "year,bin_lower_kusd,bin_upper_kusd,percent\n1,0,50,47\n1,50,,50\n";
        assert!(matches!(
            read_grouped_csv(short.as_bytes()),
            Err(Error::Validation(_))
        ));
        let bad = "year,bin_lower_kusd,bin_upper_kusd,percent\n1,0,50,50\n1,fifty,,50\n";
        match read_grouped_csv(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let gap = "year,bin_lower_kusd,bin_upper_kusd,percent\n1,0,40,50\n1,50,,50\n";
        assert!(matches!(
            read_grouped_csv(gap.as_bytes()),
            Err(Error::Validation(_))
        ));
        let closed = "year,bin_lower_kusd,bin_upper_kusd,percent\n1,0,50,50\n1,50,90,50\n";
        assert!(matches!(
            read_grouped_csv(closed.as_bytes()),
            Err(Error::Validation(_))
        ));
        let missing = "year,lower,percent\n1,0,100\n";
        assert!(matches!(
            read_grouped_csv(missing.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn official_gini() {
        let g = read_official_gini("year,gini\n2015,0.479\n2016,0.481\n".as_bytes()).unwrap();
        assert_eq!(g[&2016], 0.481);
        assert!(read_official_gini("year,gini\n2015,1.5\n".as_bytes()).is_err());
        let tables = attach_official_gini(read_grouped_csv(two_year_csv().as_bytes()).unwrap(), &g);
        assert_eq!(tables[0].gini_official(), Some(0.479));
    }

    #[test]
    fn gini_examples() {
        let g = model_gini(&GB2Params::new(1.0, 1.0, 1.0, 2.0).unwrap()).unwrap();
        assert!((g - 2.0 / 3.0).abs() < 1e-6, "{g}");
        // Scale does not matter.
        let g2 = model_gini(&GB2Params::new(70.0, 1.0, 1.0, 2.0).unwrap()).unwrap();
        assert!((g2 - g).abs() < 1e-9);
        let u = beta_gini(ShapePair::new(1.0, 1.0).unwrap()).unwrap();
        assert!((u - 1.0 / 3.0).abs() < 1e-6, "{u}");
        assert!(matches!(
            model_gini(&GB2Params::new(1.0, 1.0, 2.0, 0.9).unwrap()),
            Err(Error::MeanUndefined { .. })
        ));
    }

    #[test]
    fn gini_matches_lomax_closed_form() {
        // GB2(b, 1, 1, q) is Lomax with Gini q / (2q - 1).
        for q in [1.5, 3.0, 7.0] {
            let g = model_gini(&GB2Params::new(2.0, 1.0, 1.0, q).unwrap()).unwrap();
            assert!((g - q / (2.0 * q - 1.0)).abs() < 1e-8, "q {q}: {g}");
        }
        // Fisk (log-logistic) with shape c: Gini 1/c.
        for c in [1.5, 2.5, 4.0] {
            let g = model_gini(&GB2Params::new(1.0, c, 1.0, 1.0).unwrap()).unwrap();
            assert!((g - 1.0 / c).abs() < 1e-8, "c {c}: {g}");
        }
    }

    #[test]
    fn gini_decreases_with_bunching() {
        let ginis: Vec<f64> = [2.0, 4.0, 8.0]
            .iter()
            .map(|&a| {
                let p = RestrictedBetaParams::new(a, 1.0, 1.0).unwrap();
                model_gini(&GB2Params::from_restricted(1.0, 1.0, &p).unwrap()).unwrap()
            })
            .collect();
        assert!(ginis.windows(2).all(|w| w[1] < w[0]), "{ginis:?}");
        assert!(ginis.iter().all(|g| *g > 0.0 && *g < 1.0));
    }

    #[test]
    fn trend_orders_years_and_recovers_a() {
        let tables = read_grouped_csv(two_year_csv().as_bytes()).unwrap();
        let rows = build_trend(&tables, &FitConfig::default());
        assert_eq!(
            rows.iter().map(|r| r.year).collect::<Vec<_>>(),
            vec![2015, 2016]
        );
        let (a1, a2) = (rows[0].a_hat.unwrap(), rows[1].a_hat.unwrap());
        assert!((a1 - 4.2).abs() < 0.02 * 4.2 && (a2 - 4.3).abs() < 0.02 * 4.3);
        assert!(a1 < a2);
        assert!(rows
            .iter()
            .all(|r| r.converged && r.neg_a == r.a_hat.map(|a| -a)));
    }

    #[test]
    fn trend_flags_open_bin_median() {
        let t = GroupedTable::new(2020, vec![0.0, 10.0, 20.0], vec![20.0, 20.0, 60.0]).unwrap();
        let rows = build_trend(&[t], &FitConfig::default());
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].converged);
        assert!(rows[0].a_hat.is_none());
        assert!(rows[0].note.as_deref().unwrap().contains("open top bin"));

        let cfg = FitConfig {
            scale_mode: ScaleMode::Provided(10.0),
            ..FitConfig::default()
        };
        let t = GroupedTable::new(2020, vec![0.0, 10.0, 20.0], vec![20.0, 20.0, 60.0]).unwrap();
        assert!(build_trend(&[t], &cfg)[0].a_hat.is_some());
    }

    #[test]
    fn trend_csv_is_deterministic() {
        let tables = read_grouped_csv(two_year_csv().as_bytes()).unwrap();
        let render = || {
            let mut buf = Vec::new();
            write_trend_csv(&build_trend(&tables, &FitConfig::default()), &mut buf).unwrap();
            buf
        };
        let first = render();
        assert_eq!(first, render());
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with(
            "year,a_hat,xi_hat,neg_a,gini_model,gini_official,chi_square,converged\n"
        ));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn comparison_examples() {
        assert_eq!(
            compare_years(&row(4.2, 0.482), &row(4.3, 0.483)),
            YearComparison::Year2MoreBunched
        );
        assert_eq!(
            compare_years(&row(4.3, 0.482), &row(4.2, 0.483)),
            YearComparison::Year1MoreBunched
        );
        assert_eq!(
            compare_years(&row(4.2, 0.40), &row(4.3, 0.48)),
            YearComparison::NotComparable
        );
        assert_eq!(
            compare_years(&row(4.2, 0.48), &row(4.2, 0.48)),
            YearComparison::NotComparable
        );
        let mut failed = row(4.3, 0.483);
        failed.converged = false;
        assert_eq!(
            compare_years(&row(4.2, 0.482), &failed),
            YearComparison::NotComparable
        );
    }
}
