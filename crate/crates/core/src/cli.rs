//! The `esdual` command line: scenario CSV ingestion, the `compute`,
//! `verify`, `subadd`, `wce` and `quantile` subcommands, and deterministic
//! JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::distributions::{DiscreteDistribution, FiniteSpace, Level};
use crate::duality::{
    dichotomy_check, dual_value_greedy, expectation_under, is_feasible, sample_feasible_measure,
    sign_tolerance, verify_subadditivity, worst_case_measure, DensityMeasure, EsSign, Orientation,
};
use crate::error::Error;
use crate::risk_measures::{es_closed_form, es_integral, var, wce, MAX_WCE_OUTCOMES};
use crate::ORACLE_TOLERANCE;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_INVALID_PARAMETER: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;
pub const EXIT_SIZE_LIMIT: u8 = 5;

const DEFAULT_VERIFY_GRID: &[f64] = &[0.01, 0.05, 0.1, 0.25, 0.5, 0.9];
const DEFAULT_SUBADD_GRID: &[f64] = &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Parser)]
#[command(name = "esdual", version)]
#[command(
    about = "Value at Risk, Expected Shortfall and its dual representation on scenario files"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// VaR, ES (closed form and integral), greedy dual value and worst-case measure.
    Compute(ComputeArgs),
    /// Dominance sampling, attainment and acceptance-dichotomy checks over a level grid.
    Verify(VerifyArgs),
    /// Subadditivity of ES on a joint (probability, x, y) file.
    Subadd(GridArgs),
    /// Worst Conditional Expectation by event enumeration (at most 20 rows).
    Wce(ComputeArgs),
    /// Upper quantiles and VaR at one or more levels.
    Quantile(GridArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Scenario CSV: `value` or `value,probability` per row, optional header.
    #[arg(long)]
    pub input: PathBuf,
    /// Report destination; stdout if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, conflicts_with = "alpha_grid", allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Command {
    pub fn output(&self) -> Option<&Path> {
        let io = match self {
            Command::Compute(a) | Command::Wce(a) => &a.io,
            Command::Verify(a) => &a.grid.io,
            Command::Subadd(a) | Command::Quantile(a) => &a.io,
        };
        io.output.as_deref()
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid input: {0}")]
    Data(Error),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{rows} rows exceed the limit of {limit}")]
    SizeLimit { rows: usize, limit: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Data(_) => EXIT_PARSE,
            CliError::InvalidParameter(_) => EXIT_INVALID_PARAMETER,
            CliError::SizeLimit { .. } => EXIT_SIZE_LIMIT,
        }
    }
}

/// A rendered report and the exit code it warrants.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub exit_code: u8,
}

impl Report {
    fn with_status(json: Value, pass: bool) -> Self {
        Report {
            json,
            exit_code: if pass { EXIT_OK } else { EXIT_VERIFICATION },
        }
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("JSON values always serialize");
        s.push('\n');
        s
    }
}

/// Rounds to 12 significant digits; non-finite values become `null`.
pub fn real(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(real).collect())
}

/// Parsed scenario rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRows {
    pub values: Vec<f64>,
    /// Present when the file has a probability column.
    pub probs: Option<Vec<f64>>,
}

impl ScenarioRows {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn distribution(&self) -> Result<DiscreteDistribution, CliError> {
        match &self.probs {
            Some(p) => DiscreteDistribution::from_scenarios(&self.values, p),
            None => DiscreteDistribution::from_sample(&self.values),
        }
        .map_err(CliError::Data)
    }

    /// One outcome per row; uniform probabilities without a probability column.
    pub fn space(&self) -> Result<FiniteSpace, CliError> {
        let n = self.values.len();
        let probs = self
            .probs
            .clone()
            .unwrap_or_else(|| vec![1.0 / n as f64; n]);
        let outcomes = (0..n).map(|i| format!("row{i}")).collect();
        FiniteSpace::new(outcomes, probs)
            .and_then(|s| s.with_variable("x", self.values.clone()))
            .map_err(CliError::Data)
    }
}

/// Line number and parsed fields.
type NumericRow = (u64, Vec<f64>);

/// Rows of numeric fields; a first row whose first token is not a number is
/// taken as a header. Returns `(header_present, rows with line numbers)`.
fn read_numeric_rows(text: &str) -> Result<(bool, Vec<NumericRow>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut header = false;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if i == 0 && record.get(0).is_some_and(|t| t.parse::<f64>().is_err()) {
            header = true;
            continue;
        }
        let fields = record
            .iter()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(CliError::Parse {
                    line,
                    message: format!("non-finite value `{t}`"),
                }),
                Err(_) => Err(CliError::Parse {
                    line,
                    message: format!("not a number: `{t}`"),
                }),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((line, fields));
    }
    Ok((header, rows))
}

/// Parses a scenario file: `value` or `value,probability` on every row.
pub fn parse_scenarios(text: &str) -> Result<ScenarioRows, CliError> {
    let (_, rows) = read_numeric_rows(text)?;
    let Some((_, first)) = rows.first() else {
        return Err(CliError::Data(Error::EmptySupport));
    };
    let width = first.len();
    if width != 1 && width != 2 {
        return Err(CliError::Parse {
            line: rows[0].0,
            message: format!("expected 1 or 2 columns, found {width}"),
        });
    }
    let mut values = Vec::with_capacity(rows.len());
    let mut probs = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != width {
            return Err(CliError::Parse {
                line,
                message: format!("expected {width} columns, found {}", fields.len()),
            });
        }
        values.push(fields[0]);
        if width == 2 {
            probs.push(fields[1]);
        }
    }
    Ok(ScenarioRows {
        values,
        probs: (width == 2).then_some(probs),
    })
}

/// Parses a joint file with header and `probability,x,y` rows into a space
/// carrying variables `x` and `y`.
pub fn parse_joint(text: &str) -> Result<FiniteSpace, CliError> {
    let (header, rows) = read_numeric_rows(text)?;
    if !header {
        return Err(CliError::Parse {
            line: 1,
            message: "joint file requires a header line (probability,x,y)".into(),
        });
    }
    if rows.is_empty() {
        return Err(CliError::Data(Error::EmptySupport));
    }
    let mut probs = Vec::with_capacity(rows.len());
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != 3 {
            return Err(CliError::Parse {
                line,
                message: format!("expected 3 columns, found {}", fields.len()),
            });
        }
        if !(fields[0] > 0.0) {
            return Err(CliError::Parse {
                line,
                message: format!("probability {} is not positive", fields[0]),
            });
        }
        probs.push(fields[0]);
        xs.push(fields[1]);
        ys.push(fields[2]);
    }
    FiniteSpace::with_probs(probs)
        .and_then(|s| s.with_variable("x", xs))
        .and_then(|s| s.with_variable("y", ys))
        .map_err(CliError::Data)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn level(alpha: f64) -> Result<Level, CliError> {
    Level::new(alpha).map_err(|e| CliError::InvalidParameter(e.to_string()))
}

fn levels(args: &GridArgs, default: &[f64]) -> Result<Vec<Level>, CliError> {
    let grid = match (&args.alpha, &args.alpha_grid) {
        (Some(a), _) => vec![*a],
        (None, Some(g)) => g.clone(),
        (None, None) => default.to_vec(),
    };
    if grid.is_empty() {
        return Err(CliError::InvalidParameter("empty alpha grid".into()));
    }
    grid.into_iter().map(level).collect()
}

/// Runs one subcommand and returns its report.
pub fn run(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Compute(args) => {
            let alpha = level(args.alpha)?;
            let dist = parse_scenarios(&read_input(&args.io.input)?)?.distribution()?;
            Ok(compute_report(&dist, alpha))
        }
        Command::Verify(args) => {
            let grid = levels(&args.grid, DEFAULT_VERIFY_GRID)?;
            let dist = parse_scenarios(&read_input(&args.grid.io.input)?)?.distribution()?;
            Ok(verify_report(
                &dist,
                &grid,
                args.samples,
                args.seed,
                worst_case_measure,
            ))
        }
        Command::Subadd(args) => {
            let grid = levels(args, DEFAULT_SUBADD_GRID)?;
            let space = parse_joint(&read_input(&args.io.input)?)?;
            subadd_report(&space, &grid)
        }
        Command::Wce(args) => {
            let alpha = level(args.alpha)?;
            let rows = parse_scenarios(&read_input(&args.io.input)?)?;
            if rows.len() > MAX_WCE_OUTCOMES {
                return Err(CliError::SizeLimit {
                    rows: rows.len(),
                    limit: MAX_WCE_OUTCOMES,
                });
            }
            wce_report(&rows.space()?, alpha)
        }
        Command::Quantile(args) => {
            let grid = levels(args, &[0.5])?;
            let dist = parse_scenarios(&read_input(&args.io.input)?)?.distribution()?;
            Ok(quantile_report(&dist, &grid))
        }
    }
}

pub fn compute_report(dist: &DiscreteDistribution, alpha: Level) -> Report {
    let es = es_closed_form(dist, alpha);
    let es_oracle = es_integral(dist, alpha);
    let dual_value = dual_value_greedy(dist, alpha);
    let worst = worst_case_measure(dist, alpha);
    let gap = (es - dual_value).abs();
    let worst_case: Vec<Value> = dist
        .atoms()
        .iter()
        .zip(dist.probs())
        .zip(worst.densities())
        .map(|((x, p), d)| json!({ "atom": real(*x), "prob": real(*p), "density": real(*d) }))
        .collect();
    let json = json!({
        "alpha": real(alpha.value()),
        "var": real(var(dist, alpha)),
        "es": real(es),
        "es_oracle": real(es_oracle),
        "dual_value": real(dual_value),
        "worst_case": worst_case,
        "duality_gap": real(gap),
    });
    let pass = gap <= ORACLE_TOLERANCE && (es - es_oracle).abs() <= ORACLE_TOLERANCE;
    Report::with_status(json, pass)
}

/// Per-level verification outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelVerification {
    pub alpha: Level,
    pub es: f64,
    pub max_sampled_loss: f64,
    pub dominance: bool,
    pub attainment_error: f64,
    pub attainment: bool,
    pub duality: bool,
    pub dichotomy: Vec<crate::duality::DichotomyCheck>,
}

impl LevelVerification {
    pub fn pass(&self) -> bool {
        self.dominance
            && self.attainment
            && self.duality
            && self.dichotomy.iter().all(|c| c.consistent)
    }

    fn to_json(&self) -> Value {
        let dichotomy: Vec<Value> = self
            .dichotomy
            .iter()
            .map(|c| {
                json!({
                    "shift": real(c.shift),
                    "es_shifted": real(c.es_shifted),
                    "branch": match c.sign { EsSign::NonPositive => "<=0", EsSign::Positive => ">0" },
                    "sup_loss": real(c.sup_loss),
                    "min_position": real(c.min_position),
                    "consistent": c.consistent,
                })
            })
            .collect();
        json!({
            "alpha": real(self.alpha.value()),
            "es": real(self.es),
            "max_sampled_loss": real(self.max_sampled_loss),
            "dominance": self.dominance,
            "attainment_error": real(self.attainment_error),
            "attainment": self.attainment,
            "duality": self.duality,
            "dichotomy": dichotomy,
            "pass": self.pass(),
        })
    }
}

/// Runs every check at one level. `worst` is the candidate maximizer whose
/// attainment is tested.
pub fn verify_level(
    dist: &DiscreteDistribution,
    alpha: Level,
    worst: &DensityMeasure,
    samples: usize,
    seed: u64,
) -> LevelVerification {
    let es = es_closed_form(dist, alpha);
    let mut max_loss = f64::NEG_INFINITY;
    let mut all_feasible = true;
    for i in 0..samples {
        let q = sample_feasible_measure(dist, alpha, seed.wrapping_add(i as u64));
        all_feasible &= is_feasible(&q, alpha);
        let loss = expectation_under(dist, &q, Orientation::Loss).expect("same base");
        max_loss = max_loss.max(loss);
    }
    let dominance = all_feasible && max_loss <= es + ORACLE_TOLERANCE;

    let attained = expectation_under(dist, worst, Orientation::Loss).unwrap_or(f64::NAN);
    let attainment_error = (attained - es).abs();
    let attainment = is_feasible(worst, alpha) && attainment_error <= sign_tolerance(dist);
    let duality = (dual_value_greedy(dist, alpha) - es).abs() <= ORACLE_TOLERANCE;

    let dichotomy = [es - 1.0, es, es + 1.0]
        .into_iter()
        .map(|m| dichotomy_check(dist, alpha, m, samples, seed))
        .collect();
    LevelVerification {
        alpha,
        es,
        max_sampled_loss: max_loss,
        dominance,
        attainment_error,
        attainment,
        duality,
        dichotomy,
    }
}

/// Verification over a grid. `worst_case` supplies the attainment candidate
/// so a broken construction can be plugged in as a negative control.
pub fn verify_report(
    dist: &DiscreteDistribution,
    grid: &[Level],
    samples: usize,
    seed: u64,
    worst_case: impl Fn(&DiscreteDistribution, Level) -> DensityMeasure,
) -> Report {
    let results: Vec<LevelVerification> = grid
        .iter()
        .enumerate()
        .map(|(i, alpha)| {
            let level_seed = seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            verify_level(dist, *alpha, &worst_case(dist, *alpha), samples, level_seed)
        })
        .collect();
    let pass = results.iter().all(LevelVerification::pass);
    let json = json!({
        "samples": samples,
        "seed": seed,
        "levels": results.iter().map(LevelVerification::to_json).collect::<Vec<_>>(),
        "pass": pass,
    });
    Report::with_status(json, pass)
}

pub fn subadd_report(space: &FiniteSpace, grid: &[Level]) -> Result<Report, CliError> {
    let mut rows = Vec::with_capacity(grid.len());
    let mut pass = true;
    for alpha in grid {
        let check = verify_subadditivity(space, "x", "y", *alpha).map_err(CliError::Data)?;
        let es_x = es_closed_form(&space.law("x").map_err(CliError::Data)?, *alpha);
        pass &= check.holds;
        rows.push(json!({
            "alpha": real(alpha.value()),
            "es_x": real(es_x),
            "es_y": real(check.rhs - es_x),
            "es_sum": real(check.lhs),
            "holds": check.holds,
        }));
    }
    Ok(Report::with_status(
        json!({ "levels": rows, "pass": pass }),
        pass,
    ))
}

pub fn wce_report(space: &FiniteSpace, alpha: Level) -> Result<Report, CliError> {
    let result = wce(space, "x", alpha).map_err(|e| match e {
        Error::TooManyOutcomes(rows, limit) => CliError::SizeLimit { rows, limit },
        other => CliError::Data(other),
    })?;
    let es = es_closed_form(&space.law("x").map_err(CliError::Data)?, alpha);
    let gap = es - result.value;
    let json = json!({
        "alpha": real(alpha.value()),
        "wce": real(result.value),
        "es": real(es),
        "gap": real(gap),
        "argmax_event": result.event,
    });
    Ok(Report::with_status(json, gap >= -ORACLE_TOLERANCE))
}

pub fn quantile_report(dist: &DiscreteDistribution, grid: &[Level]) -> Report {
    let rows: Vec<Value> = grid
        .iter()
        .map(|alpha| {
            let q = dist.upper_quantile(*alpha);
            let mut row = Map::new();
            row.insert("alpha".into(), real(alpha.value()));
            row.insert("upper_quantile".into(), real(q));
            row.insert("var".into(), real(-q));
            row.insert("cdf_at_quantile".into(), real(dist.cdf(q)));
            Value::Object(row)
        })
        .collect();
    let json = json!({
        "atoms": reals(dist.atoms()),
        "probs": reals(dist.probs()),
        "levels": rows,
    });
    Report::with_status(json, true)
}
