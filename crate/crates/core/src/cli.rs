//! Command-line front end: argument parsing, dispatch and report rendering.
//!
//! Every command renders to a `String` first, so output is identical whether
//! it goes to stdout or to `--output`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::bounds::{theorem_bounds, BoundKind, BoundReport};
use crate::caratheodory::NamedGenerator;
use crate::classes::{build_function, witness, ClassError, ClassParams, WitnessId};
use crate::search::{
    brute_force_extremum, full_verify, witness_check, Attainment, GridSpec, SearchError,
    SearchResult, VerificationReport, WitnessCheck, OVERSHOOT_TOL, SEARCH_TOL, WITNESS_ORDER,
    WITNESS_TOL,
};

/// Column order shared by every tabular report.
pub const CSV_HEADER: &str =
    "class,param1,param2,bound,branch,closed_form,searched,witness,gap,pass";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for anything that is the caller's fault (flags, ranges, files).
    pub fn exit_code(&self) -> i32 {
        2
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "uil",
    version,
    about = "Sharp bounds on successive inverse coefficients for three classes of univalent functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassSel {
    G,
    F0,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Human,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundSel {
    Lower21,
    Upper21,
    Lower32,
    Upper32,
}

impl From<BoundSel> for BoundKind {
    fn from(b: BoundSel) -> Self {
        match b {
            BoundSel::Lower21 => BoundKind::Lower21,
            BoundSel::Upper21 => BoundKind::Upper21,
            BoundSel::Lower32 => BoundKind::Lower32,
            BoundSel::Upper32 => BoundKind::Upper32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorSel {
    P1,
    P2,
    P3,
    P4,
    Pt,
    Pq,
}

#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    /// Function class: g = G(ν), f0 = F₀(λ), c = C_γ(α).
    #[arg(long, value_enum)]
    pub class: ClassSel,
    /// ν in (0, 1]. `sweep` also accepts start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// λ in [1/2, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// γ in (-π/2, π/2), radians.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "gamma_deg")]
    pub gamma: Option<String>,
    /// γ in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_deg: Option<String>,
    /// α in [0, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = GridSpec::default().c1_points)]
    pub c1_points: usize,
    #[arg(long, default_value_t = GridSpec::default().radial)]
    pub radial: usize,
    #[arg(long, default_value_t = GridSpec::default().angular)]
    pub angular: usize,
    #[arg(long, default_value_t = GridSpec::default().refine_rounds)]
    pub refine_rounds: usize,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        GridSpec::new(
            self.c1_points,
            self.radial,
            self.angular,
            self.refine_rounds,
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    #[arg(long, value_enum, default_value_t = GeneratorSel::P1)]
    pub generator: GeneratorSel,
    /// Parameter of p3, in (0, 1].
    #[arg(long)]
    pub s: Option<f64>,
    /// Parameter of p4, in (0, 1].
    #[arg(long)]
    pub r: Option<f64>,
    /// Parameter of pt, in (0, 1].
    #[arg(long)]
    pub t: Option<f64>,
    /// q1 of pq, in (0, 1].
    #[arg(long)]
    pub q1: Option<f64>,
    /// Argument of the unimodular q2 of pq, radians.
    #[arg(long, allow_hyphen_values = true)]
    pub q2_arg: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form bounds with branch labels and witnesses.
    Bounds {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Brute-force extrema of |A_{n+1}| - |A_n| over the coefficient body.
    Search {
        #[command(flatten)]
        class: ClassArgs,
        /// 1 for |A2| - |A1|, 2 for |A3| - |A2|.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        index: u8,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Series of an extremal function and the bounds it attains.
    Witness {
        #[command(flatten)]
        class: ClassArgs,
        /// Witness id, e.g. g3, f1, h4.
        #[arg(long)]
        id: String,
        #[arg(short = 'N', long = "order", default_value_t = WITNESS_ORDER)]
        order: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed form vs search vs witness for all four bounds.
    Verify {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Seed for the random generators of the pipeline row.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// One bound over a parameter range, one row per point.
    Sweep {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_enum, default_value_t = BoundSel::Upper32)]
        bound: BoundSel,
        /// Also run the brute-force search at each point.
        #[arg(long)]
        search: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Coefficients of f and its inverse for a chosen generator.
    Series {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        generator: GeneratorArgs,
        #[arg(short = 'N', long = "order", default_value_t = 8)]
        order: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Clone)]
pub enum Task {
    Bounds,
    Search { index: usize },
    Witness { id: WitnessId },
    Verify,
    Sweep { bound: BoundKind, search: bool },
    Series { generator: NamedGenerator },
}

/// Fully validated configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    /// One point, except for `sweep`.
    pub params: Vec<ClassParams>,
    pub grid: GridSpec,
    pub order: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

/// Rendered output and whether every verification row passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub text: String,
    pub pass: bool,
}

/// `start:stop:step` or a single number.
pub fn parse_values(flag: &str, s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| usage(format!("--{flag}: cannot parse '{t}' as a number")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(usage(format!(
                    "--{flag}: range {s} needs start <= stop and step > 0"
                )));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize + 1;
            if n > 100_000 {
                return Err(usage(format!("--{flag}: range {s} has too many points")));
            }
            Ok((0..n)
                .map(|i| {
                    let x = a + step * i as f64;
                    if (x - b).abs() <= 1e-9 * step {
                        b
                    } else {
                        x
                    }
                })
                .collect())
        }
        _ => Err(usage(format!(
            "--{flag}: expected a number or start:stop:step, got '{s}'"
        ))),
    }
}

fn class_params(args: &ClassArgs, allow_range: bool) -> Result<Vec<ClassParams>> {
    let get = |flag: &str, v: &Option<String>| -> Result<Option<Vec<f64>>> {
        match v {
            None => Ok(None),
            Some(s) => {
                let vals = parse_values(flag, s)?;
                if vals.len() > 1 && !allow_range {
                    return Err(usage(format!(
                        "--{flag}: ranges are only accepted by sweep"
                    )));
                }
                Ok(Some(vals))
            }
        }
    };
    let nu = get("nu", &args.nu)?;
    let lambda = get("lambda", &args.lambda)?;
    let gamma = match (
        get("gamma", &args.gamma)?,
        get("gamma-deg", &args.gamma_deg)?,
    ) {
        (Some(g), _) => Some(g),
        (None, Some(d)) => Some(d.into_iter().map(|x| x * PI / 180.0).collect()),
        (None, None) => None,
    };
    let alpha = get("alpha", &args.alpha)?;

    let stray = |present: bool, flag: &str| -> Result<()> {
        if present {
            Err(usage(format!(
                "--{flag} does not apply to class {}",
                match args.class {
                    ClassSel::G => "g",
                    ClassSel::F0 => "f0",
                    ClassSel::C => "c",
                }
            )))
        } else {
            Ok(())
        }
    };
    let required = |v: Option<Vec<f64>>, flag: &str| -> Result<Vec<f64>> {
        v.ok_or_else(|| usage(format!("missing --{flag}")))
    };
    let out = match args.class {
        ClassSel::G => {
            stray(lambda.is_some(), "lambda")?;
            stray(gamma.is_some(), "gamma")?;
            stray(alpha.is_some(), "alpha")?;
            required(nu, "nu")?
                .into_iter()
                .map(ClassParams::gnu)
                .collect::<std::result::Result<Vec<_>, _>>()?
        }
        ClassSel::F0 => {
            stray(nu.is_some(), "nu")?;
            stray(gamma.is_some(), "gamma")?;
            stray(alpha.is_some(), "alpha")?;
            required(lambda, "lambda")?
                .into_iter()
                .map(ClassParams::f0)
                .collect::<std::result::Result<Vec<_>, _>>()?
        }
        ClassSel::C => {
            stray(nu.is_some(), "nu")?;
            stray(lambda.is_some(), "lambda")?;
            let gamma = required(gamma, "gamma")?;
            let alpha = required(alpha, "alpha")?;
            let mut out = Vec::with_capacity(gamma.len() * alpha.len());
            for &g in &gamma {
                for &a in &alpha {
                    out.push(ClassParams::cgamma(g, a)?);
                }
            }
            out
        }
    };
    Ok(out)
}

fn named_generator(args: &GeneratorArgs) -> Result<NamedGenerator> {
    let need =
        |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("generator needs --{flag}")));
    let g = match args.generator {
        GeneratorSel::P1 => NamedGenerator::P1,
        GeneratorSel::P2 => NamedGenerator::P2,
        GeneratorSel::P3 => NamedGenerator::P3 {
            s: need(args.s, "s")?,
        },
        GeneratorSel::P4 => NamedGenerator::P4 {
            r: need(args.r, "r")?,
        },
        GeneratorSel::Pt => NamedGenerator::Pt {
            t: need(args.t, "t")?,
        },
        GeneratorSel::Pq => NamedGenerator::Pq {
            q1: need(args.q1, "q1")?,
            q2: Complex64::from_polar(1.0, need(args.q2_arg, "q2-arg")?),
        },
    };
    g.validate().map_err(ClassError::from)?;
    Ok(g)
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<RunConfig> {
        let base = |params, out: &OutputArgs| RunConfig {
            task: Task::Bounds,
            params,
            grid: GridSpec::default(),
            order: WITNESS_ORDER,
            format: out.format,
            output: out.output.clone(),
            seed: 0,
        };
        let cfg = match &cli.command {
            Command::Bounds { class, out } => base(class_params(class, false)?, out),
            Command::Search {
                class,
                index,
                grid,
                out,
            } => RunConfig {
                task: Task::Search {
                    index: *index as usize,
                },
                grid: grid.spec(),
                ..base(class_params(class, false)?, out)
            },
            Command::Witness {
                class,
                id,
                order,
                out,
            } => {
                let id = WitnessId::parse(id).ok_or_else(|| {
                    usage(format!(
                        "unknown witness '{id}'; expected one of {}",
                        WitnessId::ALL.map(|w| w.name()).join(", ")
                    ))
                })?;
                RunConfig {
                    task: Task::Witness { id },
                    order: *order,
                    ..base(class_params(class, false)?, out)
                }
            }
            Command::Verify {
                class,
                grid,
                seed,
                out,
            } => RunConfig {
                task: Task::Verify,
                grid: grid.spec(),
                seed: *seed,
                ..base(class_params(class, false)?, out)
            },
            Command::Sweep {
                class,
                bound,
                search,
                grid,
                out,
            } => RunConfig {
                task: Task::Sweep {
                    bound: (*bound).into(),
                    search: *search,
                },
                grid: grid.spec(),
                ..base(class_params(class, true)?, out)
            },
            Command::Series {
                class,
                generator,
                order,
                out,
            } => RunConfig {
                task: Task::Series {
                    generator: named_generator(generator)?,
                },
                order: *order,
                ..base(class_params(class, false)?, out)
            },
        };
        if cfg.order < 3 {
            return Err(usage(format!("-N = {} is below the minimum 3", cfg.order)));
        }
        cfg.grid.validate()?;
        Ok(cfg)
    }
}

/// Formats `x` with 12 significant digits, shortest form, `.` as separator.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A number rounded to what `fmt_num` prints, for JSON output.
fn json_num(x: f64) -> Value {
    if x.is_finite() {
        json!(fmt_num(x).parse::<f64>().unwrap())
    } else {
        Value::Null
    }
}

fn json_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, json_num)
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        fmt_num(z.re)
    } else {
        let sign = if z.im < 0.0 { "-" } else { "+" };
        format!("{}{sign}{}i", fmt_num(z.re), fmt_num(z.im.abs()))
    }
}

/// One line of the shared tabular schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub class: &'static str,
    pub param1: f64,
    pub param2: Option<f64>,
    pub bound: String,
    pub branch: String,
    pub closed_form: Option<f64>,
    pub searched: Option<f64>,
    pub witness: Option<f64>,
    pub gap: Option<f64>,
    pub pass: Option<bool>,
}

impl ReportRow {
    fn new(params: ClassParams, bound: impl Into<String>) -> Self {
        let (param1, param2) = params.params();
        ReportRow {
            class: params.class_id(),
            param1,
            param2,
            bound: bound.into(),
            branch: String::new(),
            closed_form: None,
            searched: None,
            witness: None,
            gap: None,
            pass: None,
        }
    }

    fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        [
            self.class.to_string(),
            fmt_num(self.param1),
            opt(self.param2),
            self.bound.clone(),
            self.branch.clone(),
            opt(self.closed_form),
            opt(self.searched),
            opt(self.witness),
            opt(self.gap),
            self.pass
                .map(|p| if p { "pass" } else { "fail" }.to_string())
                .unwrap_or_default(),
        ]
        .join(",")
    }

    fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("class".into(), json!(self.class));
        m.insert("param1".into(), json_num(self.param1));
        m.insert("param2".into(), json_opt(self.param2));
        m.insert("bound".into(), json!(self.bound));
        m.insert("branch".into(), json!(self.branch));
        m.insert("closed_form".into(), json_opt(self.closed_form));
        m.insert("searched".into(), json_opt(self.searched));
        m.insert("witness".into(), json_opt(self.witness));
        m.insert("gap".into(), json_opt(self.gap));
        m.insert("pass".into(), self.pass.map_or(Value::Null, Value::Bool));
        Value::Object(m)
    }
}

fn csv_table(rows: &[ReportRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values are finite or null");
    s.push('\n');
    s
}

fn json_rows(rows: &[ReportRow]) -> Value {
    Value::Array(rows.iter().map(ReportRow::json).collect())
}

/// Fixed-width text table; the first row is the header.
fn human_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .map(|r| r.get(c).map_or(0, |s| s.chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s:<w$}", w = widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn human_rows(rows: &[ReportRow]) -> String {
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| "-".into());
    let mut table = vec![vec![
        "bound".into(),
        "branch".into(),
        "closed_form".into(),
        "searched".into(),
        "witness".into(),
        "gap".into(),
        "result".into(),
    ]];
    for r in rows {
        table.push(vec![
            r.bound.clone(),
            if r.branch.is_empty() {
                "-".into()
            } else {
                r.branch.clone()
            },
            opt(r.closed_form),
            opt(r.searched),
            opt(r.witness),
            opt(r.gap),
            r.pass
                .map(|p| if p { "PASS" } else { "FAIL" }.to_string())
                .unwrap_or_else(|| "-".into()),
        ]);
    }
    human_table(&table)
}

fn params_line(params: ClassParams) -> String {
    match params {
        ClassParams::Gnu { nu } => format!("class g, nu = {}", fmt_num(nu)),
        ClassParams::F0 { lambda } => format!("class f0, lambda = {}", fmt_num(lambda)),
        ClassParams::Cgamma { gamma, alpha } => {
            let tau = params.tau().unwrap();
            format!(
                "class c, gamma = {}, alpha = {}, |tau| = {}",
                fmt_num(gamma),
                fmt_num(alpha),
                fmt_num(tau.norm())
            )
        }
    }
}

fn witness_list(ids: &[WitnessId]) -> String {
    ids.iter().map(|w| w.name()).collect::<Vec<_>>().join(" ")
}

fn single(cfg: &RunConfig) -> ClassParams {
    cfg.params[0]
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Rendered> {
    let params = single(cfg);
    let b = theorem_bounds(params);
    let rows: Vec<ReportRow> = BoundKind::ALL
        .into_iter()
        .map(|k| {
            let bound = b.get(k);
            ReportRow {
                branch: bound.branch.label().to_string(),
                closed_form: Some(bound.value),
                ..ReportRow::new(params, k.name())
            }
        })
        .collect();
    let text = match cfg.format {
        Format::Csv => csv_table(&rows),
        Format::Json => json_text(&bounds_json(&b, &rows)),
        Format::Human => {
            let mut table = vec![vec![
                "bound".to_string(),
                "value".into(),
                "branch".into(),
                "witnesses".into(),
            ]];
            for k in BoundKind::ALL {
                let bound = b.get(k);
                table.push(vec![
                    k.name().to_string(),
                    fmt_num(bound.value),
                    bound.branch.label().to_string(),
                    witness_list(&bound.witnesses),
                ]);
            }
            let mut s = params_line(params);
            s.push('\n');
            s.push_str(&human_table(&table));
            let _ = writeln!(
                s,
                "lemma: upper32 = {} ({}), lower32 = {} ({})",
                fmt_num(b.lemma_upper32),
                b.lemma_plus_case,
                fmt_num(b.lemma_lower32),
                b.lemma_minus_case
            );
            s
        }
    };
    Ok(Rendered { text, pass: true })
}

fn bounds_json(b: &BoundReport, rows: &[ReportRow]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .zip(BoundKind::ALL)
        .map(|(r, k)| {
            let mut v = r.json();
            v["witnesses"] = json!(b
                .get(k)
                .witnesses
                .iter()
                .map(|w| w.name())
                .collect::<Vec<_>>());
            v
        })
        .collect();
    Value::Array(rows)
}

fn search_rows(result: &SearchResult) -> Vec<ReportRow> {
    let b = theorem_bounds(result.params);
    let (lower, upper) = if result.functional == 1 {
        (BoundKind::Lower21, BoundKind::Upper21)
    } else {
        (BoundKind::Lower32, BoundKind::Upper32)
    };
    [(lower, result.min), (upper, result.max)]
        .into_iter()
        .map(|(k, searched)| {
            let bound = b.get(k);
            let gap = (searched - bound.value).abs();
            let over = if k.is_upper() {
                searched - bound.value
            } else {
                bound.value - searched
            };
            ReportRow {
                branch: bound.branch.label().to_string(),
                closed_form: Some(bound.value),
                searched: Some(searched),
                gap: Some(gap),
                pass: Some(gap <= SEARCH_TOL && over <= OVERSHOOT_TOL),
                ..ReportRow::new(result.params, k.name())
            }
        })
        .collect()
}

fn point_text(p: &crate::caratheodory::BodyPoint) -> String {
    format!("c1 = {}, zeta = {}", fmt_num(p.c1), fmt_complex(p.zeta))
}

fn point_json(p: &crate::caratheodory::BodyPoint) -> Value {
    json!({"c1": json_num(p.c1), "zeta_re": json_num(p.zeta.re), "zeta_im": json_num(p.zeta.im)})
}

pub fn cmd_search(cfg: &RunConfig) -> Result<Rendered> {
    let index = match cfg.task {
        Task::Search { index } => index,
        _ => 2,
    };
    let result = brute_force_extremum(single(cfg), index, cfg.grid)?;
    let rows = search_rows(&result);
    let pass = rows.iter().all(|r| r.pass == Some(true));
    let text = match cfg.format {
        Format::Csv => csv_table(&rows),
        Format::Json => json_text(&json!({
            "rows": json_rows(&rows),
            "argmin": point_json(&result.argmin),
            "argmax": point_json(&result.argmax),
            "argmin_ties": result.min_ties.iter().map(point_json).collect::<Vec<_>>(),
            "argmax_ties": result.max_ties.iter().map(point_json).collect::<Vec<_>>(),
            "grid": result.grid,
        })),
        Format::Human => {
            let g = result.grid;
            let name = if index == 1 {
                "|A2| - |A1|"
            } else {
                "|A3| - |A2|"
            };
            let mut s = params_line(result.params);
            let _ = writeln!(
                s,
                "\nfunctional {name}, grid {} x {} x {}, {} refinement rounds",
                g.c1_points, g.radial, g.angular, g.refine_rounds
            );
            let _ = writeln!(
                s,
                "min {} at {}",
                fmt_num(result.min),
                point_text(&result.argmin)
            );
            let _ = writeln!(
                s,
                "max {} at {}",
                fmt_num(result.max),
                point_text(&result.argmax)
            );
            let _ = writeln!(
                s,
                "grid ties: {} at the minimum, {} at the maximum",
                result.min_ties.len(),
                result.max_ties.len()
            );
            s.push_str(&human_rows(&rows));
            s
        }
    };
    Ok(Rendered { text, pass })
}

fn attainment_row(params: ClassParams, a: &Attainment) -> ReportRow {
    let b = theorem_bounds(params);
    ReportRow {
        branch: b.get(a.bound).branch.label().to_string(),
        closed_form: Some(a.closed_form),
        witness: Some(a.value),
        gap: Some(a.gap),
        pass: Some(a.pass),
        ..ReportRow::new(params, a.bound.name())
    }
}

fn series_json(s: &crate::series::Series) -> Value {
    Value::Array(
        s.coeffs()
            .iter()
            .map(|c| json!([json_num(c.re), json_num(c.im)]))
            .collect(),
    )
}

fn coefficient_table(f: &crate::series::Series, inv: &crate::series::Series) -> String {
    let mut table = vec![vec!["n".to_string(), "f".into(), "inverse".into()]];
    for n in 1..=f.order() {
        table.push(vec![n.to_string(), fmt_complex(f[n]), fmt_complex(inv[n])]);
    }
    human_table(&table)
}

fn coefficient_csv(f: &crate::series::Series, inv: &crate::series::Series) -> String {
    let mut s = String::from("n,f_re,f_im,inverse_re,inverse_im\n");
    for n in 1..=f.order() {
        let _ = writeln!(
            s,
            "{n},{},{},{},{}",
            fmt_num(f[n].re),
            fmt_num(f[n].im),
            fmt_num(inv[n].re),
            fmt_num(inv[n].im)
        );
    }
    s
}

pub fn cmd_witness(cfg: &RunConfig) -> Result<Rendered> {
    let Task::Witness { id } = cfg.task else {
        return Err(usage("witness needs --id"));
    };
    let params = single(cfg);
    let check: WitnessCheck = witness_check(params, id)?;
    let w = witness(params, id, cfg.order)?;
    let rows: Vec<ReportRow> = check
        .attained
        .iter()
        .map(|a| attainment_row(params, a))
        .collect();
    let text = match cfg.format {
        Format::Csv => csv_table(&rows),
        Format::Json => json_text(&json!({
            "witness": id.name(),
            "generator": w.generator.to_string(),
            "consistency_gap": json_num(check.consistency_gap),
            "rows": json_rows(&rows),
            "function": series_json(&w.function),
            "inverse": series_json(&w.inverse),
        })),
        Format::Human => {
            let mut s = params_line(params);
            let _ = writeln!(s, "\nwitness {id}, generator {}", w.generator);
            s.push_str(&coefficient_table(&w.function, &w.inverse));
            let _ = writeln!(
                s,
                "inverse coefficients, reversion vs formula: gap {}",
                fmt_num(check.consistency_gap)
            );
            s.push_str(&human_rows(&rows));
            s
        }
    };
    Ok(Rendered {
        text,
        pass: check.pass,
    })
}

fn verify_rows(report: &VerificationReport) -> Vec<ReportRow> {
    let params = report.params;
    let mut rows: Vec<ReportRow> = report
        .rows
        .iter()
        .map(|r| ReportRow {
            branch: r.branch.label().to_string(),
            closed_form: Some(r.closed_form),
            searched: Some(r.searched),
            witness: Some(r.witness).filter(|w| w.is_finite()),
            gap: Some(r.gap()).filter(|g| g.is_finite()),
            pass: Some(r.pass),
            ..ReportRow::new(params, r.bound.name())
        })
        .collect();
    rows.push(ReportRow {
        gap: Some(report.pipeline.max_gap),
        pass: Some(report.pipeline.pass),
        ..ReportRow::new(params, "pipeline")
    });
    rows
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Rendered> {
    let report = full_verify(single(cfg), cfg.grid, cfg.seed)?;
    let rows = verify_rows(&report);
    let pass = report.pass();
    let text = match cfg.format {
        Format::Csv => csv_table(&rows),
        Format::Json => json_text(&json_rows(&rows)),
        Format::Human => {
            let mut s = params_line(report.params);
            s.push('\n');
            s.push_str(&human_rows(&rows));
            let _ = writeln!(
                s,
                "tolerances: witness {}, search {}; pipeline over {} generators",
                fmt_num(WITNESS_TOL),
                fmt_num(SEARCH_TOL),
                report.pipeline.samples
            );
            let _ = writeln!(s, "{}", if pass { "all rows pass" } else { "FAILED" });
            s
        }
    };
    Ok(Rendered { text, pass })
}

fn sweep_row(params: ClassParams, kind: BoundKind, search: Option<GridSpec>) -> Result<ReportRow> {
    let b = theorem_bounds(params);
    let bound = b.get(kind);
    let mut witness_value = None;
    let mut witness_gap: f64 = 0.0;
    let mut pass = true;
    for &id in &bound.witnesses {
        let check = witness_check(params, id)?;
        let a = check.attained.iter().find(|a| a.bound == kind).unwrap();
        pass &= a.pass && check.pass;
        if witness_value.is_none() || a.gap > witness_gap {
            witness_gap = a.gap;
            witness_value = Some(a.value);
        }
    }
    let mut gap = witness_gap;
    let mut searched = None;
    if let Some(grid) = search {
        let r = brute_force_extremum(params, kind.index(), grid)?;
        let value = if kind.is_upper() { r.max } else { r.min };
        let over = if kind.is_upper() {
            value - bound.value
        } else {
            bound.value - value
        };
        let sg = (value - bound.value).abs();
        pass &= sg <= SEARCH_TOL && over <= OVERSHOOT_TOL;
        gap = gap.max(sg);
        searched = Some(value);
    }
    Ok(ReportRow {
        branch: bound.branch.label().to_string(),
        closed_form: Some(bound.value),
        searched,
        witness: witness_value,
        gap: Some(gap),
        pass: Some(pass),
        ..ReportRow::new(params, kind.name())
    })
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Rendered> {
    let (kind, search) = match cfg.task {
        Task::Sweep { bound, search } => (bound, search),
        _ => (BoundKind::Upper32, false),
    };
    let rows = cfg
        .params
        .iter()
        .map(|&p| sweep_row(p, kind, search.then_some(cfg.grid)))
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass == Some(true));
    let text = match cfg.format {
        Format::Csv => csv_table(&rows),
        Format::Json => json_text(&json_rows(&rows)),
        Format::Human => {
            let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| "-".into());
            let mut table = vec![vec![
                "param1".to_string(),
                "param2".into(),
                "closed_form".into(),
                "searched".into(),
                "witness".into(),
                "gap".into(),
                "branch".into(),
                "result".into(),
            ]];
            for r in &rows {
                table.push(vec![
                    fmt_num(r.param1),
                    opt(r.param2),
                    opt(r.closed_form),
                    opt(r.searched),
                    opt(r.witness),
                    opt(r.gap),
                    r.branch.clone(),
                    if r.pass == Some(true) { "PASS" } else { "FAIL" }.into(),
                ]);
            }
            let mut s = format!("class {}, bound {}\n", cfg.params[0].class_id(), kind);
            s.push_str(&human_table(&table));
            s
        }
    };
    Ok(Rendered { text, pass })
}

pub fn cmd_series(cfg: &RunConfig) -> Result<Rendered> {
    let Task::Series { generator } = cfg.task else {
        return Err(usage("series needs --generator"));
    };
    let params = single(cfg);
    let p = generator.series(cfg.order).map_err(ClassError::from)?;
    let f = build_function(params, &p)?;
    let inv = f.revert().map_err(ClassError::from)?;
    let text = match cfg.format {
        Format::Csv => coefficient_csv(&f, &inv),
        Format::Json => json_text(&json!({
            "class": params.class_id(),
            "param1": json_num(params.params().0),
            "param2": json_opt(params.params().1),
            "generator": generator.to_string(),
            "order": cfg.order,
            "function": series_json(&f),
            "inverse": series_json(&inv),
        })),
        Format::Human => {
            let mut s = params_line(params);
            let _ = writeln!(s, "\ngenerator {generator}, N = {}", cfg.order);
            s.push_str(&coefficient_table(&f, &inv));
            s
        }
    };
    Ok(Rendered { text, pass: true })
}

pub fn execute(cfg: &RunConfig) -> Result<Rendered> {
    match cfg.task {
        Task::Bounds => cmd_bounds(cfg),
        Task::Search { .. } => cmd_search(cfg),
        Task::Witness { .. } => cmd_witness(cfg),
        Task::Verify => cmd_verify(cfg),
        Task::Sweep { .. } => cmd_sweep(cfg),
        Task::Series { .. } => cmd_series(cfg),
    }
}

/// Parses, runs and writes; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    crate::search::configure_threads_from_env();
    let outcome = RunConfig::from_cli(&cli).and_then(|cfg| {
        let rendered = execute(&cfg)?;
        match &cfg.output {
            Some(path) => std::fs::write(path, &rendered.text).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?,
            None => print!("{}", rendered.text),
        }
        Ok(rendered.pass)
    });
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> Result<RunConfig> {
        let cli = Cli::try_parse_from(std::iter::once("uil").chain(args.iter().copied())).unwrap();
        RunConfig::from_cli(&cli)
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(1.0 / 6.0), "0.166666666667");
        assert_eq!(fmt_num(-0.5), "-0.5");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1e-9), "1e-9");
        assert_eq!(fmt_num(2.5e-5), "0.000025");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_num(-1.0 / 3.0), "-0.333333333333");
        assert_eq!(fmt_num(0.9999999999999), "1");
    }

    #[test]
    fn range_parsing() {
        let v = parse_values("lambda", "0.5:1.0:0.05").unwrap();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 0.5);
        assert_eq!(v[10], 1.0);
        assert_eq!(parse_values("nu", "0.25").unwrap(), vec![0.25]);
        assert!(parse_values("nu", "1:0:0.1").is_err());
        assert!(parse_values("nu", "0:1:0").is_err());
        assert!(parse_values("nu", "x").is_err());
        assert!(parse_values("nu", "0:1").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            cfg(&["bounds", "--class", "g", "--nu", "2"]),
            Err(CliError::Class(ClassError::OutOfRange { .. }))
        ));
        assert!(matches!(
            cfg(&["bounds", "--class", "g"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            cfg(&["bounds", "--class", "g", "--nu", "0.5", "--alpha", "0"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            cfg(&["bounds", "--class", "g", "--nu", "0.1:1:0.1"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            cfg(&["series", "--class", "g", "--nu", "1", "-N", "2"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            cfg(&["search", "--class", "g", "--nu", "1", "--radial", "2"]),
            Err(CliError::Search(SearchError::Resolution { .. }))
        ));
        let c = cfg(&[
            "bounds",
            "--class",
            "c",
            "--gamma-deg",
            "45",
            "--alpha",
            "0",
        ])
        .unwrap();
        let ClassParams::Cgamma { gamma, .. } = c.params[0] else {
            panic!()
        };
        assert!((gamma - PI / 4.0).abs() < 1e-15);
        let c = cfg(&[
            "sweep",
            "--class",
            "c",
            "--gamma",
            "0:0.2:0.1",
            "--alpha",
            "0:0.5:0.5",
        ])
        .unwrap();
        assert_eq!(c.params.len(), 6);
    }

    #[test]
    fn bounds_output() {
        let r = execute(&cfg(&["bounds", "--class", "g", "--nu", "1", "--format", "csv"]).unwrap())
            .unwrap();
        let lines: Vec<&str> = r.text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[4], "g,1,,upper32,single,0.166666666667,,,,");
        let r = execute(&cfg(&["bounds", "--class", "f0", "--lambda", "0.5"]).unwrap()).unwrap();
        assert!(r.text.contains("lower32  -0.5"));
        let r = execute(
            &cfg(&[
                "bounds", "--class", "c", "--gamma", "0", "--alpha", "0", "--format", "json",
            ])
            .unwrap(),
        )
        .unwrap();
        let v: Value = serde_json::from_str(&r.text).unwrap();
        assert_eq!(v[3]["bound"], "upper32");
        assert_eq!(v[3]["closed_form"].as_f64().unwrap(), 0.333333333333);
        assert_eq!(v[3]["witnesses"][0], "h2");
    }

    #[test]
    fn sweep_has_one_row_per_point() {
        let r = execute(
            &cfg(&[
                "sweep",
                "--class",
                "f0",
                "--lambda",
                "0.5:1.0:0.05",
                "--format",
                "csv",
            ])
            .unwrap(),
        )
        .unwrap();
        assert!(r.pass);
        let values: Vec<f64> = r
            .text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
            .collect();
        assert_eq!(values.len(), 11);
        assert!(values[5..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn convex_series() {
        let r = execute(
            &cfg(&[
                "series",
                "--class",
                "c",
                "--gamma",
                "0",
                "--alpha",
                "0",
                "--generator",
                "p1",
                "-N",
                "5",
                "--format",
                "csv",
            ])
            .unwrap(),
        )
        .unwrap();
        let lines: Vec<&str> = r.text.lines().skip(1).collect();
        assert_eq!(lines.len(), 5);
        for (i, l) in lines.iter().enumerate() {
            let sign = if i % 2 == 0 { "1" } else { "-1" };
            assert_eq!(*l, format!("{},1,0,{sign},0", i + 1));
        }
    }

    #[test]
    fn witness_output() {
        let r = execute(
            &cfg(&[
                "witness", "--class", "g", "--nu", "1", "--id", "g3", "--format", "csv",
            ])
            .unwrap(),
        )
        .unwrap();
        assert!(r.pass);
        assert!(r.text.contains("g,1,,lower32,nu>=1/8,-0.25,,-0.25,0,pass"));
        assert!(matches!(
            cfg(&["witness", "--class", "g", "--nu", "1", "--id", "x9"]),
            Err(CliError::Usage(_))
        ));
        let err = execute(&cfg(&["witness", "--class", "g", "--nu", "1", "--id", "g4"]).unwrap())
            .unwrap_err();
        assert!(matches!(
            err,
            CliError::Search(SearchError::NotDesignated { .. })
        ));
    }
}
