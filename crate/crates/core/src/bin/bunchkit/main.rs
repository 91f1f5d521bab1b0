// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod render;

use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use rayon::prelude::*;

use args::{
    Cli, Command, CompareArgs, ConjectureArgs, FitArgs, TrendArgs, XstarArgs, DEFAULT_SEED,
};
use bunchkit::bunching::{conjecture_scan, gamma_mc_oracle, verify_bunching_with, xstar_curve};
use bunchkit::distributions::RestrictedBetaParams;
use bunchkit::fitting::fit_gb2;
use bunchkit::income::{
    attach_official_gini, build_trend, compare_years_with, load_grouped_csv, load_official_gini,
    write_trend_csv,
};
use render::{FitRow, Settings};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_UNVERIFIED: u8 = 2;
const EXIT_PARTIAL_FIT: u8 = 3;

const SEED_ENV: &str = "BUNCHKIT_SEED";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] bunchkit::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

type CliResult = Result<u8, CliError>;

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_compare(args: &CompareArgs) -> CliResult {
    let p1 = RestrictedBetaParams::new(args.a1, args.n, args.m)?;
    let p2 = RestrictedBetaParams::new(args.a2, args.n, args.m)?;
    let report = verify_bunching_with(&p1, &p2, args.grid, args.xtol)?;
    let settings = Settings::new()
        .with("n", args.n)
        .with("m", args.m)
        .with("a1", args.a1)
        .with("a2", args.a2)
        .with("grid", args.grid)
        .with("xtol", args.xtol)
        .with("format", args.output.format.name());
    emit(
        &render::compare(&settings, &report, args.output.format),
        args.output.out.as_deref(),
    )?;
    Ok(if report.verified {
        EXIT_OK
    } else {
        EXIT_UNVERIFIED
    })
}

fn fit_settings(fit: &args::FitFlags) -> Settings {
    Settings::new()
        .with("input", fit.input.display().to_string())
        .with("scale_mode", fit.scale_label())
        .with("gamma_mode", fit.gamma_label())
}

fn run_fit(args: &FitArgs) -> CliResult {
    let tables = load_grouped_csv(&args.fit.input)?;
    let config = args.fit.config();
    let rows: Vec<FitRow> = tables
        .par_iter()
        .map(|t| FitRow::from_outcome(t.year(), fit_gb2(t, &config)))
        .collect();
    let settings = fit_settings(&args.fit).with("format", args.output.format.name());
    emit(
        &render::fits(&settings, &rows, args.output.format),
        args.output.out.as_deref(),
    )?;
    Ok(if rows.iter().all(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_PARTIAL_FIT
    })
}

fn run_trend(args: &TrendArgs) -> CliResult {
    let mut tables = load_grouped_csv(&args.fit.input)?;
    if let Some(path) = &args.gini {
        tables = attach_official_gini(tables, &load_official_gini(path)?);
    }
    if !(args.xi_tol >= 0.0) {
        return Err(CliError::Usage(format!(
            "--xi-tol must be nonnegative, got {}",
            args.xi_tol
        )));
    }
    let rows = build_trend(&tables, &args.fit.config());
    let comparisons: Vec<_> = rows
        .windows(2)
        .map(|w| {
            (
                w[0].year,
                w[1].year,
                compare_years_with(&w[0], &w[1], args.xi_tol),
            )
        })
        .collect();

    let mut settings = fit_settings(&args.fit)
        .with("xi_tol", args.xi_tol)
        .with("format", args.format.name());
    if let Some(path) = &args.gini {
        settings = settings.with("gini", path.display().to_string());
    }
    if let Some(path) = &args.out {
        let mut buf = Vec::new();
        write_trend_csv(&rows, &mut buf)?;
        std::fs::write(path, buf).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })?;
        settings = settings.with("out", path.display().to_string());
    }
    emit(
        &render::trend(&settings, &rows, &comparisons, args.format)?,
        None,
    )?;
    Ok(if rows.iter().all(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_PARTIAL_FIT
    })
}

fn run_xstar(args: &XstarArgs) -> CliResult {
    let curve = xstar_curve(&args.n_range.values, args.m, args.a1, args.a2)?;
    let settings = Settings::new()
        .with("m", args.m)
        .with("n_range", args.n_range.text.as_str())
        .with("a1", args.a1)
        .with("a2", args.a2)
        .with("format", args.output.format.name());
    emit(
        &render::xstar(&settings, &curve, args.output.format),
        args.output.out.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{SEED_ENV} must be an unsigned integer, got {text:?}"
            ))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn run_conjecture(args: &ConjectureArgs) -> CliResult {
    let scan = conjecture_scan(args.n, args.m, &args.a_range.values)?;
    let mut settings = Settings::new()
        .with("n", args.n)
        .with("m", args.m)
        .with("a_range", args.a_range.text.as_str())
        .with("format", args.output.format.name());
    let mc = match args.mc_samples {
        Some(samples) => {
            let seed = resolve_seed(args.seed)?;
            settings = settings.with("mc_samples", samples).with("seed", seed);
            let estimates = scan
                .rows
                .iter()
                .map(|&(a, _)| gamma_mc_oracle(args.n, args.m, a, samples, seed))
                .collect::<Result<Vec<_>, _>>()?;
            Some(estimates)
        }
        None => None,
    };
    emit(
        &render::conjecture(&settings, &scan, mc.as_deref(), args.output.format),
        args.output.out.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Compare(a) => run_compare(a),
        Command::Fit(a) => run_fit(a),
        Command::Trend(a) => run_trend(a),
        Command::Xstar(a) => run_xstar(a),
        Command::Conjecture(a) => run_conjecture(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
