//! Text, JSON and CSV renderings. Floats use Rust's shortest round-trip
//! formatting everywhere so the three formats carry identical values.

use serde::Serialize;
use serde_json::{json, Map, Value};

use bunchkit::bunching::{BunchingReport, ConjectureScan, XStarCurve};
use bunchkit::fitting::FitResult;
use bunchkit::income::{write_trend_csv, TrendRow, YearComparison};

use crate::args::Format;

/// Run settings, echoed at the top of every report.
pub struct Settings(Vec<(&'static str, Value)>);

impl Settings {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn with(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.0.push((key, value.into()));
        self
    }

    fn header(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("# {k} = {}\n", scalar(v)))
            .collect()
    }

    fn json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect::<Map<_, _>>(),
        )
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => u.to_string(),
            (_, Some(i), _) => i.to_string(),
            (_, _, Some(f)) => f.to_string(),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn opt(v: Option<f64>, missing: &str) -> String {
    v.map_or_else(|| missing.to_string(), |x| x.to_string())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn compare(settings: &Settings, r: &BunchingReport, format: Format) -> String {
    let fields: [(&str, String); 12] = [
        ("a1", r.a1.to_string()),
        ("a2", r.a2.to_string()),
        ("n", r.n.to_string()),
        ("m", r.m.to_string()),
        ("x_star", r.x_star.to_string()),
        ("density_cross_lo", r.density_cross_lo.to_string()),
        ("density_cross_hi", r.density_cross_hi.to_string()),
        ("grid_size", r.grid_size.to_string()),
        ("verified", r.verified.to_string()),
        ("sign_changes", r.sign_changes.to_string()),
        ("starts_negative", r.starts_negative.to_string()),
        ("icv_conclusion", r.icv_conclusion.to_string()),
    ];
    match format {
        Format::Json => pretty(&json!({ "settings": settings.json(), "report": r })),
        Format::Text => {
            let mut s = settings.header();
            for (k, v) in &fields {
                s.push_str(&format!("{k} = {v}\n"));
            }
            s
        }
        Format::Csv => {
            let mut s = settings.header();
            s.push_str(&fields.iter().map(|f| f.0).collect::<Vec<_>>().join(","));
            s.push('\n');
            s.push_str(
                &fields
                    .iter()
                    .map(|f| f.1.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            s.push('\n');
            s
        }
    }
}

/// One year of `fit` output.
#[derive(Debug, Serialize)]
pub struct FitRow {
    pub year: i32,
    pub converged: bool,
    pub xi: Option<f64>,
    pub a: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub scale_b_kusd: Option<f64>,
    pub chi_square: Option<f64>,
    pub iterations: Option<usize>,
    pub note: Option<String>,
}

impl FitRow {
    pub fn from_outcome(year: i32, outcome: bunchkit::Result<FitResult>) -> Self {
        let (fit, note) = match outcome {
            Ok(fit) => (Some(fit), None),
            Err(bunchkit::Error::OptimizerFailed { result }) => (
                Some(*result),
                Some("optimizer did not converge".to_string()),
            ),
            Err(e) => (None, Some(e.to_string())),
        };
        let f = fit.as_ref();
        FitRow {
            year,
            converged: f.is_some_and(|f| f.converged),
            xi: f.map(|f| f.xi_a.xi),
            a: f.map(|f| f.xi_a.a),
            alpha: f.map(|f| f.params.alpha),
            beta: f.map(|f| f.params.beta),
            gamma: f.map(|f| f.params.gamma),
            scale_b_kusd: f.map(|f| f.params.scale_b),
            chi_square: f.map(|f| f.chi_square),
            iterations: f.map(|f| f.iterations),
            note,
        }
    }

    fn cells(&self, missing: &str) -> Vec<String> {
        vec![
            self.year.to_string(),
            self.converged.to_string(),
            opt(self.xi, missing),
            opt(self.a, missing),
            opt(self.alpha, missing),
            opt(self.beta, missing),
            opt(self.gamma, missing),
            opt(self.scale_b_kusd, missing),
            opt(self.chi_square, missing),
            self.iterations
                .map_or_else(|| missing.to_string(), |i| i.to_string()),
        ]
    }
}

const FIT_COLUMNS: [&str; 10] = [
    "year",
    "converged",
    "xi",
    "a",
    "alpha",
    "beta",
    "gamma",
    "scale_b_kusd",
    "chi_square",
    "iterations",
];

fn csv_line(cells: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(cells).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

pub fn fits(settings: &Settings, rows: &[FitRow], format: Format) -> String {
    match format {
        Format::Json => pretty(&json!({ "settings": settings.json(), "fits": rows })),
        Format::Csv => {
            let mut s = settings.header();
            let mut header: Vec<String> = FIT_COLUMNS.iter().map(|c| c.to_string()).collect();
            header.push("note".into());
            s.push_str(&csv_line(&header));
            for r in rows {
                let mut cells = r.cells("");
                cells.push(r.note.clone().unwrap_or_default());
                s.push_str(&csv_line(&cells));
            }
            s
        }
        Format::Text => {
            let mut s = settings.header();
            for r in rows {
                let cells = r.cells("-");
                let line: Vec<String> = FIT_COLUMNS
                    .iter()
                    .zip(&cells)
                    .map(|(k, v)| format!("{k} = {v}"))
                    .collect();
                s.push_str(&line.join(", "));
                if let Some(note) = &r.note {
                    s.push_str(&format!(", note = {note}"));
                }
                s.push('\n');
            }
            s
        }
    }
}

pub fn trend(
    settings: &Settings,
    rows: &[TrendRow],
    comparisons: &[(i32, i32, YearComparison)],
    format: Format,
) -> bunchkit::Result<String> {
    Ok(match format {
        Format::Json => {
            let cmp: Vec<Value> = comparisons
                .iter()
                .map(|(y1, y2, c)| json!({ "year1": y1, "year2": y2, "verdict": c }))
                .collect();
            pretty(&json!({ "settings": settings.json(), "rows": rows, "comparisons": cmp }))
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_trend_csv(rows, &mut buf)?;
            let mut s = settings.header();
            s.push_str(&String::from_utf8(buf).expect("utf-8 csv"));
            for (y1, y2, c) in comparisons {
                s.push_str(&format!("# {y1} -> {y2}: {}\n", c.as_str()));
            }
            s
        }
        Format::Text => {
            let mut s = settings.header();
            for r in rows {
                s.push_str(&format!(
                    "{}: a_hat = {}, xi_hat = {}, neg_a = {}, gini_model = {}, gini_official = {}, chi_square = {}, converged = {}",
                    r.year,
                    opt(r.a_hat, "-"),
                    opt(r.xi_hat, "-"),
                    opt(r.neg_a, "-"),
                    opt(r.gini_model, "-"),
                    opt(r.gini_official, "-"),
                    opt(r.chi_square, "-"),
                    r.converged
                ));
                if let Some(note) = &r.note {
                    s.push_str(&format!(", note = {note}"));
                }
                s.push('\n');
            }
            for (y1, y2, c) in comparisons {
                s.push_str(&format!("{y1} -> {y2}: {}\n", c.as_str()));
            }
            s
        }
    })
}

fn table(
    settings: &Settings,
    columns: &[&str],
    rows: &[Vec<String>],
    verdict: (&str, bool),
    format: Format,
) -> String {
    let sep = if format == Format::Csv { "," } else { " " };
    let mut s = settings.header();
    s.push_str(&columns.join(sep));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(sep));
        s.push('\n');
    }
    let prefix = if format == Format::Csv { "# " } else { "" };
    s.push_str(&format!("{prefix}{} = {}\n", verdict.0, verdict.1));
    s
}

pub fn xstar(settings: &Settings, curve: &XStarCurve, format: Format) -> String {
    if format == Format::Json {
        let points: Vec<Value> = curve
            .points
            .iter()
            .map(|(n, x)| json!({ "n": n, "x_star": x }))
            .collect();
        return pretty(&json!({
            "settings": settings.json(),
            "points": points,
            "strictly_increasing": curve.strictly_increasing,
        }));
    }
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|(n, x)| vec![n.to_string(), x.to_string()])
        .collect();
    table(
        settings,
        &["n", "x_star"],
        &rows,
        ("strictly_increasing", curve.strictly_increasing),
        format,
    )
}

pub fn conjecture(
    settings: &Settings,
    scan: &ConjectureScan,
    mc: Option<&[f64]>,
    format: Format,
) -> String {
    if format == Format::Json {
        let rows: Vec<Value> = scan
            .rows
            .iter()
            .enumerate()
            .map(|(i, (a, f))| match mc {
                Some(est) => json!({ "a": a, "f_half": f, "mc_estimate": est[i] }),
                None => json!({ "a": a, "f_half": f }),
            })
            .collect();
        return pretty(&json!({
            "settings": settings.json(),
            "rows": rows,
            "strictly_decreasing": scan.strictly_decreasing,
        }));
    }
    let mut columns = vec!["a", "f_half"];
    if mc.is_some() {
        columns.push("mc_estimate");
    }
    let rows: Vec<Vec<String>> = scan
        .rows
        .iter()
        .enumerate()
        .map(|(i, (a, f))| {
            let mut r = vec![a.to_string(), f.to_string()];
            if let Some(est) = mc {
                r.push(est[i].to_string());
            }
            r
        })
        .collect();
    table(
        settings,
        &columns,
        &rows,
        ("strictly_decreasing", scan.strictly_decreasing),
        format,
    )
}
