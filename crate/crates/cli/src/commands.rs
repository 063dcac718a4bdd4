use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use illiquid_core::attenuation::{ShockPolicy, StudyConfig};
use illiquid_core::markov::steady_state;
use illiquid_core::regime::{CalibratedModel, ForecastOptions, ForecastResult, ModelKind, SdeParams};
use illiquid_core::sde::GbmParams;
use illiquid_core::stats::{ks_two_sample, mape_values, pdf_comparison, pearson, rolling_correlation, StatsError};
use illiquid_core::timeseries::{
    forward_fill_calendar, log_returns, remove_repetitions, weekday_calendar, weekly_resample, Observation,
    PriceSeries,
};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::config::{FileConfig, StateEncoding, DEFAULT_SEED};
use crate::error::CliError;
use crate::formats::{fmt_f64, fmt_opt, read_series, ser_f64, ser_f64_vec, stem, to_json, OutputDir, OutputFormat};
use crate::ingest::{parse_price_csv, CsvSchema};
use crate::parallel::{par_attenuation_study, par_forecast};

/// Resolved global settings shared by every command.
pub struct Context {
    pub file: FileConfig,
    pub seed: u64,
    pub format: OutputFormat,
    pub jobs: usize,
    pub out: OutputDir,
    /// Human-readable report for stdout.
    pub report: String,
    /// Warnings for stderr.
    pub warnings: Vec<String>,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &global.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Ok(Self {
            seed: global.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            format: global.format.or(file.format).unwrap_or_default(),
            jobs: global.jobs.or(file.jobs).unwrap_or(0),
            out: OutputDir::new(&global.output_dir)?,
            file,
            report: String::new(),
            warnings: Vec::new(),
        })
    }
}

pub fn run(cli: &Cli) -> Result<Context, CliError> {
    let mut ctx = Context::new(&cli.global)?;
    match &cli.command {
        Command::Ingest(a) => ingest(&mut ctx, a)?,
        Command::Clean(a) => clean(&mut ctx, a)?,
        Command::Resample(a) => resample(&mut ctx, a)?,
        Command::Calibrate(a) => calibrate(&mut ctx, a)?,
        Command::Forecast(a) => forecast(&mut ctx, a)?,
        Command::Evaluate(a) => evaluate(&mut ctx, a)?,
        Command::Correlate(a) => correlate(&mut ctx, a)?,
        Command::AttenuationStudy(a) => attenuation_study(&mut ctx, a)?,
        Command::PdfCompare(a) => pdf_compare(&mut ctx, a)?,
    }
    Ok(ctx)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_weekday(s: &str) -> Result<Weekday, CliError> {
    s.parse::<Weekday>()
        .map_err(|_| CliError::Usage(format!("unknown weekday `{s}`")))
}

fn weekday_name(w: Weekday) -> &'static str {
    match w {
        Weekday::Mon => "monday",
        Weekday::Tue => "tuesday",
        Weekday::Wed => "wednesday",
        Weekday::Thu => "thursday",
        Weekday::Fri => "friday",
        Weekday::Sat => "saturday",
        Weekday::Sun => "sunday",
    }
}

/// Forward-fills onto every weekday of the series' span; weekend rows are dropped.
fn fill_weekdays(series: &PriceSeries) -> Result<PriceSeries, CliError> {
    let weekdays: Vec<Observation> = series
        .observations()
        .iter()
        .filter(|o| !matches!(o.date.weekday(), Weekday::Sat | Weekday::Sun))
        .copied()
        .collect();
    let weekdays = PriceSeries::new(weekdays)
        .map_err(|_| CliError::Input("series has no weekday observations".into()))?;
    let calendar = weekday_calendar(weekdays.first().date, weekdays.last().date);
    Ok(forward_fill_calendar(&weekdays, &calendar)?)
}

#[derive(Serialize)]
struct SeriesMeta<'a, C: Serialize> {
    command: &'a str,
    source: String,
    rows: usize,
    start: NaiveDate,
    end: NaiveDate,
    config: C,
}

fn series_meta<'a, C: Serialize>(command: &'a str, source: &Path, s: &PriceSeries, config: C) -> SeriesMeta<'a, C> {
    SeriesMeta {
        command,
        source: file_name(source),
        rows: s.len(),
        start: s.first().date,
        end: s.last().date,
        config,
    }
}

pub fn ingest(ctx: &mut Context, a: &IngestArgs) -> Result<(), CliError> {
    let c = &ctx.file.ingest;
    let d = CsvSchema::default();
    let schema = CsvSchema {
        date_column: a.date_column.clone().or(c.date_column.clone()).unwrap_or(d.date_column),
        price_column: a.price_column.clone().or(c.price_column.clone()).unwrap_or(d.price_column),
        date_format: a.date_format.clone().or(c.date_format.clone()).unwrap_or(d.date_format),
        order: a.order.or(c.order).unwrap_or(d.order),
        delimiter: a.delimiter.or(c.delimiter).unwrap_or(d.delimiter),
    };
    let raw = fs::read(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let series = parse_price_csv(raw.as_slice(), &schema).map_err(|source| CliError::Ingest {
        path: a.input.clone(),
        source,
    })?;
    let name = a.name.clone().unwrap_or_else(|| stem(&a.input));
    let path = ctx.out.write_series(&name, &series, ctx.format)?;
    ctx.out
        .write(&format!("{name}.meta.json"), &to_json(&series_meta("ingest", &a.input, &series, &schema)))?;
    writeln!(
        ctx.report,
        "{} rows, {} to {} -> {}",
        series.len(),
        series.first().date,
        series.last().date,
        path.display()
    )
    .ok();
    Ok(())
}

pub fn clean(ctx: &mut Context, a: &SeriesArg) -> Result<(), CliError> {
    let series = read_series(&a.series)?;
    let cleaned = remove_repetitions(&series);
    let name = format!("{}_clean", stem(&a.series));
    #[derive(Serialize)]
    struct Meta {
        source_rows: usize,
        removed: usize,
    }
    let meta = Meta {
        source_rows: cleaned.source_len(),
        removed: cleaned.removed(),
    };
    ctx.out.write_series(&name, cleaned.series(), ctx.format)?;
    ctx.out
        .write(&format!("{name}.meta.json"), &to_json(&series_meta("clean", &a.series, cleaned.series(), meta)))?;
    writeln!(
        ctx.report,
        "kept {} of {} rows ({} repeats removed)",
        cleaned.series().len(),
        cleaned.source_len(),
        cleaned.removed()
    )
    .ok();
    Ok(())
}

pub fn resample(ctx: &mut Context, a: &ResampleArgs) -> Result<(), CliError> {
    let weekday = parse_weekday(a.weekday.as_deref().or(ctx.file.resample.weekday.as_deref()).unwrap_or("fri"))?;
    let series = read_series(&a.series)?;
    let weekly = weekly_resample(&fill_weekdays(&series)?, weekday)?;
    let name = format!("{}_{}", stem(&a.series), weekday_name(weekday));
    #[derive(Serialize)]
    struct Cfg {
        weekday: &'static str,
    }
    let cfg = Cfg {
        weekday: weekday_name(weekday),
    };
    ctx.out.write_series(&name, &weekly, ctx.format)?;
    ctx.out
        .write(&format!("{name}.meta.json"), &to_json(&series_meta("resample", &a.series, &weekly, cfg)))?;
    writeln!(ctx.report, "{} {} observations", weekly.len(), weekday_name(weekday)).ok();
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub source: String,
    pub model: ModelKind,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub dt: f64,
    pub state_encoding: StateEncoding,
}

/// Contents of a parameter file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub calibration: CalibratedModel,
    pub config: CalibrateConfig,
}

pub fn calibrate(ctx: &mut Context, a: &CalibrateArgs) -> Result<(), CliError> {
    let c = &ctx.file.calibrate;
    let config = CalibrateConfig {
        source: file_name(&a.series),
        model: a.model.or(c.model).unwrap_or(ModelKind::MmGbm),
        start: a.start.or(c.start),
        end: a.end.or(c.end),
        dt: a.dt.or(c.dt).unwrap_or(1.0),
        state_encoding: a.state_encoding.or(c.state_encoding).unwrap_or_default(),
    };
    let series = read_series(&a.series)?;
    let start = config.start.unwrap_or(series.first().date);
    let end = config.end.unwrap_or(series.last().date);
    let mut window = series.window(start, end)?;
    if config.state_encoding == StateEncoding::Filled {
        window = fill_weekdays(&window)?;
    }
    let model = CalibratedModel::calibrate(config.model, &window, config.dt)?;
    let name = format!("{}_{}_params.json", stem(&a.series), config.model);
    let file = ParamsFile {
        calibration: model,
        config,
    };
    ctx.out.write(&name, &to_json(&file))?;
    ctx.report.push_str(&parameter_block(&model));
    if model.non_mean_reverting {
        ctx.warnings
            .push("reversion speed is negative: the fitted process is not mean-reverting and forecasts will diverge".into());
    }
    Ok(())
}

fn parameter_block(m: &CalibratedModel) -> String {
    let mut s = String::new();
    let w = m.sde_window;
    writeln!(
        s,
        "{}  {} to {}  n={}{}",
        m.model,
        w.start,
        w.end,
        w.n,
        if w.cleaned { " (cleaned)" } else { "" }
    )
    .ok();
    match m.sde {
        SdeParams::Gbm(g) => writeln!(s, "mu = {:.6}  sigma = {:.6}", g.mu, g.sigma),
        SdeParams::Xou(x) => writeln!(s, "gamma = {:.6}  sigma = {:.6}  phi = {:.6}", x.gamma, x.sigma, x.phi),
    }
    .ok();
    if let Some(chain) = m.chain {
        writeln!(s, "p = {:.6}  q = {:.6}", chain.p(), chain.q()).ok();
        writeln!(s, "{chain}").ok();
        if let Ok(pi) = steady_state(&chain) {
            writeln!(s, "pi0 = {:.6}  pi1 = {:.6}", pi.pi0, pi.pi1).ok();
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct ForecastConfig {
    params: String,
    actuals: String,
    horizon: usize,
    n_sims: usize,
    #[serde(serialize_with = "ser_f64")]
    ceiling: f64,
    seed: u64,
}

#[derive(Serialize)]
struct PathSummary {
    name: String,
    seed: u64,
    #[serde(serialize_with = "ser_f64")]
    mape: f64,
    diverged: bool,
}

#[derive(Serialize)]
struct ForecastSummary {
    model: ModelKind,
    horizon: usize,
    start: NaiveDate,
    end: NaiveDate,
    s0: f64,
    initial_state: Option<u8>,
    non_mean_reverting: bool,
    paths: Vec<PathSummary>,
    #[serde(serialize_with = "ser_f64")]
    mean_mape: f64,
    #[serde(serialize_with = "ser_f64")]
    median_mape: f64,
    divergence_count: usize,
    config: ForecastConfig,
}

fn path_name(i: usize) -> String {
    format!("sn_{}", i + 1)
}

pub fn forecast(ctx: &mut Context, a: &ForecastArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.params).map_err(|e| CliError::io(&a.params, e))?;
    let params: ParamsFile = serde_json::from_str(&text).map_err(|e| CliError::format(&a.params, e))?;
    let model = params.calibration;
    let series = read_series(&a.actuals)?;
    let after: Vec<Observation> = series
        .observations()
        .iter()
        .filter(|o| o.date > model.anchor.date)
        .copied()
        .collect();
    let c = &ctx.file.forecast;
    let horizon = a.horizon.or(c.horizon).unwrap_or(after.len());
    if horizon == 0 || horizon > after.len() {
        return Err(CliError::Input(format!(
            "horizon {horizon} needs that many actual prices after {}, found {}",
            model.anchor.date,
            after.len()
        )));
    }
    let actual = PriceSeries::new(after[..horizon].to_vec())?;
    let config = ForecastConfig {
        params: file_name(&a.params),
        actuals: file_name(&a.actuals),
        horizon,
        n_sims: a.n_sims.or(c.n_sims).unwrap_or(3),
        ceiling: a.ceiling.or(c.ceiling).unwrap_or(illiquid_core::regime::DEFAULT_DIVERGENCE_CEILING),
        seed: ctx.seed,
    };
    let opts = ForecastOptions {
        n_sims: config.n_sims,
        master_seed: config.seed,
        divergence_ceiling: config.ceiling,
    };
    let result = par_forecast(&model, &actual, &opts, ctx.jobs)?;
    let base = format!("{}_forecast", model.model);
    match ctx.format {
        OutputFormat::Csv => ctx.out.write(&format!("{base}.csv"), &forecast_csv(&result))?,
        OutputFormat::Json => ctx.out.write(&format!("{base}_paths.json"), &to_json(&forecast_paths_json(&result)))?,
    };
    let summary = ForecastSummary {
        model: result.model,
        horizon,
        start: actual.first().date,
        end: actual.last().date,
        s0: result.s0,
        initial_state: result.initial_state.map(|s| s as u8),
        non_mean_reverting: result.non_mean_reverting,
        paths: result
            .paths
            .iter()
            .map(|p| PathSummary {
                name: path_name(p.index),
                seed: p.seed,
                mape: p.mape,
                diverged: p.diverged,
            })
            .collect(),
        mean_mape: result.mean_mape(),
        median_mape: result.median_mape(),
        divergence_count: result.divergence_count(),
        config,
    };
    ctx.out.write(&format!("{base}.json"), &to_json(&summary))?;
    ctx.report.push_str(&mape_table(&result));
    if result.divergence_count() > 0 {
        ctx.warnings
            .push(format!("{} of {} paths diverged", result.divergence_count(), result.paths.len()));
    }
    Ok(())
}

fn mape_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "∞".into()
    }
}

fn mape_table(r: &ForecastResult) -> String {
    let mut s = format!("{} MAPE (%), horizon {}\n", r.model, r.horizon);
    for p in &r.paths {
        writeln!(s, "Sn_{:<4} {}", p.index + 1, mape_cell(p.mape)).ok();
    }
    writeln!(s, "mean    {}", mape_cell(r.mean_mape())).ok();
    writeln!(s, "median  {}", mape_cell(r.median_mape())).ok();
    writeln!(s, "diverged {}/{}", r.divergence_count(), r.paths.len()).ok();
    s
}

fn forecast_csv(r: &ForecastResult) -> String {
    let mut s = String::from("date,actual");
    for p in &r.paths {
        write!(s, ",{}", path_name(p.index)).ok();
    }
    s.push('\n');
    for (t, date) in r.dates.iter().enumerate() {
        write!(s, "{date},{}", fmt_f64(r.actual[t])).ok();
        for p in &r.paths {
            write!(s, ",{}", fmt_f64(p.closes[t])).ok();
        }
        s.push('\n');
    }
    s
}

fn forecast_paths_json(r: &ForecastResult) -> serde_json::Value {
    #[derive(Serialize)]
    struct Col<'a> {
        name: String,
        #[serde(serialize_with = "ser_f64_vec")]
        values: &'a [f64],
    }
    let mut cols = vec![Col {
        name: "actual".into(),
        values: &r.actual,
    }];
    cols.extend(r.paths.iter().map(|p| Col {
        name: path_name(p.index),
        values: &p.closes,
    }));
    serde_json::json!({ "dates": r.dates, "columns": cols })
}

/// A forecast file read back: dates, actual column and named path columns.
#[derive(Debug, Clone)]
pub struct ForecastTable {
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub paths: Vec<(String, Vec<f64>)>,
}

fn parse_cell(path: &Path, row: usize, v: &str) -> Result<f64, CliError> {
    match v.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t
            .parse()
            .map_err(|_| CliError::format(path, format!("row {row}: bad number `{t}`"))),
    }
}

pub fn read_forecast_csv(path: &Path) -> Result<ForecastTable, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::format(path, e))?.clone();
    if headers.get(0) != Some("date") || headers.get(1) != Some("actual") || headers.len() < 3 {
        return Err(CliError::format(path, "expected header `date,actual,sn_1,...`"));
    }
    let mut table = ForecastTable {
        dates: Vec::new(),
        actual: Vec::new(),
        paths: headers.iter().skip(2).map(|h| (h.to_string(), Vec::new())).collect(),
    };
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::format(path, e))?;
        if rec.len() != headers.len() {
            return Err(CliError::format(path, format!("row {row}: expected {} fields", headers.len())));
        }
        let date = rec[0]
            .parse()
            .map_err(|_| CliError::format(path, format!("row {row}: bad date `{}`", &rec[0])))?;
        table.dates.push(date);
        table.actual.push(parse_cell(path, row, &rec[1])?);
        for (j, col) in table.paths.iter_mut().enumerate() {
            col.1.push(parse_cell(path, row, &rec[j + 2])?);
        }
    }
    if table.dates.is_empty() {
        return Err(CliError::format(path, "no rows"));
    }
    Ok(table)
}

fn log_diff(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}

#[derive(Serialize)]
struct EvalRow {
    source: String,
    model: String,
    path: String,
    #[serde(serialize_with = "ser_f64")]
    mape: f64,
    ks_statistic: Option<f64>,
    ks_p_value: Option<f64>,
    decision: String,
}

pub fn evaluate(ctx: &mut Context, a: &EvaluateArgs) -> Result<(), CliError> {
    let alpha = a.alpha.or(ctx.file.evaluate.alpha).unwrap_or(0.01);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let override_actuals: Option<BTreeMap<NaiveDate, f64>> = match &a.actuals {
        Some(p) => Some(read_series(p)?.observations().iter().map(|o| (o.date, o.close)).collect()),
        None => None,
    };
    let mut rows = Vec::new();
    for file in &a.forecasts {
        let table = read_forecast_csv(file)?;
        let actual = match &override_actuals {
            Some(map) => table
                .dates
                .iter()
                .map(|d| {
                    map.get(d)
                        .copied()
                        .ok_or_else(|| CliError::Input(format!("no actual price for {d}")))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => table.actual.clone(),
        };
        let actual_returns = log_diff(&actual);
        let model = stem(file).trim_end_matches("_forecast").to_string();
        for (name, values) in &table.paths {
            let mape = match mape_values(&actual, values) {
                Ok(m) => m,
                Err(StatsError::ZeroActual { .. }) => {
                    return Err(CliError::Input(format!("{}: zero actual price", file.display())))
                }
                Err(e) => return Err(e.into()),
            };
            let finite = values.iter().all(|v| v.is_finite());
            let ks = if finite && !actual_returns.is_empty() {
                Some(ks_two_sample(&log_diff(values), &actual_returns, alpha)?)
            } else {
                None
            };
            rows.push(EvalRow {
                source: file_name(file),
                model: model.clone(),
                path: name.clone(),
                mape,
                ks_statistic: ks.map(|k| k.statistic),
                ks_p_value: ks.map(|k| k.p_value),
                decision: match ks {
                    Some(k) => format!("{:?}", k.decision).to_lowercase(),
                    None if !finite => "diverged".into(),
                    None => "undefined".into(),
                },
            });
        }
    }
    match ctx.format {
        OutputFormat::Csv => {
            let mut s = String::from("source,model,path,mape,ks_statistic,ks_p_value,decision\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.source,
                    r.model,
                    r.path,
                    fmt_f64(r.mape),
                    fmt_opt(r.ks_statistic),
                    fmt_opt(r.ks_p_value),
                    r.decision
                )
                .ok();
            }
            ctx.out.write("evaluation.csv", &s)?;
        }
        OutputFormat::Json => {}
    }
    #[derive(Serialize)]
    struct Report<'a> {
        alpha: f64,
        sources: Vec<String>,
        actuals: Option<String>,
        rows: &'a [EvalRow],
    }
    let report = Report {
        alpha,
        sources: a.forecasts.iter().map(|f| file_name(f)).collect(),
        actuals: a.actuals.as_deref().map(file_name),
        rows: &rows,
    };
    ctx.out.write("evaluation.json", &to_json(&report))?;
    writeln!(ctx.report, "{:<10} {:<6} {:>10} {:>8} {:>10}  decision (alpha={alpha})", "model", "path", "MAPE", "KS D", "p-value").ok();
    for r in &rows {
        writeln!(
            ctx.report,
            "{:<10} {:<6} {:>10} {:>8} {:>10}  {}",
            r.model,
            r.path,
            mape_cell(r.mape),
            r.ks_statistic.map(|v| format!("{v:.4}")).unwrap_or("-".into()),
            r.ks_p_value.map(|v| format!("{v:.4}")).unwrap_or("-".into()),
            r.decision
        )
        .ok();
    }
    Ok(())
}

/// Both series on a shared weekday calendar over their common span.
fn align(a: &PriceSeries, b: &PriceSeries) -> Result<(PriceSeries, PriceSeries), CliError> {
    let fa = fill_weekdays(a)?;
    let fb = fill_weekdays(b)?;
    let start = fa.first().date.max(fb.first().date);
    let end = fa.last().date.min(fb.last().date);
    if start >= end {
        return Err(CliError::Input("series do not overlap".into()));
    }
    Ok((fa.window(start, end)?, fb.window(start, end)?))
}

pub fn correlate(ctx: &mut Context, a: &CorrelateArgs) -> Result<(), CliError> {
    let c = &ctx.file.correlate;
    let windows = a.windows.clone().or(c.windows.clone()).unwrap_or(vec![30, 60, 100, 200]);
    let daily = a.daily || c.resample == Some(false);
    let weekday = parse_weekday(a.weekday.as_deref().or(c.weekday.as_deref()).unwrap_or("fri"))?;
    let (mut sa, mut sb) = align(&read_series(&a.a)?, &read_series(&a.b)?)?;
    if !daily {
        sa = weekly_resample(&sa, weekday)?;
        sb = weekly_resample(&sb, weekday)?;
    }
    let dates = sa.dates();
    let (pa, pb) = (sa.closes(), sb.closes());
    let ra = log_returns(&sa)?.values;
    let rb = log_returns(&sb)?.values;

    #[derive(Serialize)]
    struct WindowSummary {
        window: usize,
        points: usize,
        undefined: usize,
        file: Option<String>,
    }
    let mut summaries = Vec::new();
    for &k in &windows {
        if k < 2 || k > ra.len() {
            ctx.warnings
                .push(format!("window {k} skipped: {} returns available", ra.len()));
            summaries.push(WindowSummary {
                window: k,
                points: 0,
                undefined: 0,
                file: None,
            });
            continue;
        }
        let by_returns = rolling_correlation(&ra, &rb, k)?;
        let by_prices = rolling_correlation(&pa[1..], &pb[1..], k)?;
        let undefined = by_returns.undefined_count();
        if undefined > 0 {
            ctx.warnings.push(format!(
                "window {k}: {undefined} of {} windows undefined (a series is constant there)",
                by_returns.values.len()
            ));
        }
        let file = match ctx.format {
            OutputFormat::Csv => {
                let mut s = String::from("start,end,rho_returns,rho_prices\n");
                for (r, p) in by_returns.values.iter().zip(&by_prices.values) {
                    writeln!(
                        s,
                        "{},{},{},{}",
                        dates[r.start + 1],
                        dates[r.start + k],
                        fmt_opt(r.rho),
                        fmt_opt(p.rho)
                    )
                    .ok();
                }
                ctx.out.write(&format!("rolling_corr_k{k}.csv"), &s)?
            }
            OutputFormat::Json => {
                let points: Vec<_> = by_returns
                    .values
                    .iter()
                    .zip(&by_prices.values)
                    .map(|(r, p)| {
                        serde_json::json!({
                            "start": dates[r.start + 1],
                            "end": dates[r.start + k],
                            "rho_returns": r.rho,
                            "rho_prices": p.rho,
                        })
                    })
                    .collect();
                ctx.out.write(&format!("rolling_corr_k{k}.json"), &to_json(&points))?
            }
        };
        writeln!(ctx.report, "k={k}: {} windows, {undefined} undefined", by_returns.values.len()).ok();
        summaries.push(WindowSummary {
            window: k,
            points: by_returns.values.len(),
            undefined,
            file: Some(file_name(&file)),
        });
    }
    let full = match pearson(&ra, &rb) {
        Ok(r) => Some(r),
        Err(StatsError::ZeroVariance(which)) => {
            ctx.warnings
                .push(format!("series {which} is constant over the common span; correlation undefined"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    #[derive(Serialize)]
    struct Meta {
        a: String,
        b: String,
        start: NaiveDate,
        end: NaiveDate,
        observations: usize,
        weekday: Option<&'static str>,
        rho_full_sample: Option<f64>,
        windows: Vec<WindowSummary>,
    }
    let meta = Meta {
        a: file_name(&a.a),
        b: file_name(&a.b),
        start: sa.first().date,
        end: sa.last().date,
        observations: sa.len(),
        weekday: (!daily).then(|| weekday_name(weekday)),
        rho_full_sample: full,
        windows: summaries,
    };
    ctx.out.write("correlation.json", &to_json(&meta))?;
    Ok(())
}

pub const DEFAULT_GRID: [(f64, f64); 4] = [(0.0, 1.0), (0.875, 0.5), (0.7, 0.7), (0.5, 0.875)];

fn parse_cell_spec(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("grid cell `{s}` must look like p:q"));
    let (p, q) = s.split_once(':').ok_or_else(bad)?;
    Ok((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?))
}

pub fn study_config(ctx: &Context, a: &StudyArgs) -> Result<StudyConfig, CliError> {
    let c = &ctx.file.attenuation;
    let grid = match &a.grid {
        Some(cells) => cells.iter().map(|s| parse_cell_spec(s)).collect::<Result<Vec<_>, _>>()?,
        None => c
            .grid
            .as_ref()
            .map(|g| g.iter().map(|[p, q]| (*p, *q)).collect())
            .unwrap_or(DEFAULT_GRID.to_vec()),
    };
    let mu = a.mu.or(c.mu).unwrap_or(0.0);
    let sigma = a.sigma.or(c.sigma).unwrap_or(0.01);
    Ok(StudyConfig {
        grid,
        params_x: GbmParams::new(mu, sigma),
        params_y: GbmParams::new(mu, sigma),
        rho: a.rho.or(c.rho).unwrap_or(0.8),
        horizon: a.horizon.or(c.horizon).unwrap_or(50_000),
        replications: a.replications.or(c.replications).unwrap_or(10),
        master_seed: ctx.seed,
        s0: a.s0.or(c.s0).unwrap_or(100.0),
        policy: a.policy.or(c.policy).unwrap_or(ShockPolicy::Aligned),
    })
}

pub fn attenuation_study(ctx: &mut Context, a: &StudyArgs) -> Result<(), CliError> {
    let config = study_config(ctx, a)?;
    let report = par_attenuation_study(&config, ctx.jobs)?;
    if ctx.format == OutputFormat::Csv {
        let mut s = String::from(
            "p,q,pi0,rho_measured,rho_measured_prices,rho_unmodulated,rho_predicted,rho_limit_mu0,replications,degenerate\n",
        );
        for r in &report.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.p),
                fmt_f64(r.q),
                fmt_opt(r.pi0),
                fmt_opt(r.rho_measured),
                fmt_opt(r.rho_measured_prices),
                fmt_f64(r.rho_unmodulated),
                fmt_opt(r.rho_predicted),
                fmt_opt(r.rho_limit_mu0),
                r.replications,
                r.degenerate
            )
            .ok();
        }
        ctx.out.write("attenuation_report.csv", &s)?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a illiquid_core::AttenuationReport,
        config: &'a StudyConfig,
    }
    ctx.out.write(
        "attenuation_report.json",
        &to_json(&Out {
            report: &report,
            config: &config,
        }),
    )?;
    writeln!(
        ctx.report,
        "{:>6} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9}",
        "p", "q", "pi0", "measured", "plain", "predicted", "limit"
    )
    .ok();
    for r in &report.rows {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or("-".into());
        writeln!(
            ctx.report,
            "{:>6.3} {:>6.3} {:>6} {:>9} {:>9.4} {:>9} {:>9}",
            r.p,
            r.q,
            f(r.pi0),
            f(r.rho_measured),
            r.rho_unmodulated,
            f(r.rho_predicted),
            f(r.rho_limit_mu0)
        )
        .ok();
    }
    writeln!(ctx.report, "monotone non-increasing in pi0: {}", report.monotone_non_increasing).ok();
    for r in report.rows.iter().filter(|r| r.degenerate > 0) {
        ctx.warnings.push(format!(
            "cell p={} q={}: {} of {} replications had a constant leg",
            r.p, r.q, r.degenerate, r.replications
        ));
    }
    Ok(())
}

pub fn pdf_compare(ctx: &mut Context, a: &PdfArgs) -> Result<(), CliError> {
    let bins = a.bins.or(ctx.file.pdf.bins).unwrap_or(50);
    let series = read_series(&a.series)?;
    let returns = log_returns(&series)?;
    let pdf = pdf_comparison(&returns, bins)?;
    let name = format!("{}_pdf", stem(&a.series));
    if ctx.format == OutputFormat::Csv {
        let mut s = String::from("left,right,center,empirical,normal\n");
        for i in 0..pdf.centers.len() {
            writeln!(
                s,
                "{},{},{},{},{}",
                fmt_f64(pdf.edges[i]),
                fmt_f64(pdf.edges[i + 1]),
                fmt_f64(pdf.centers[i]),
                fmt_f64(pdf.empirical[i]),
                fmt_f64(pdf.normal[i])
            )
            .ok();
        }
        ctx.out.write(&format!("{name}.csv"), &s)?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        source: String,
        bins: usize,
        returns: usize,
        mass: f64,
        pdf: &'a illiquid_core::stats::PdfComparison,
    }
    ctx.out.write(
        &format!("{name}.json"),
        &to_json(&Out {
            source: file_name(&a.series),
            bins,
            returns: returns.len(),
            mass: pdf.empirical_mass(),
            pdf: &pdf,
        }),
    )?;
    writeln!(
        ctx.report,
        "{} returns, mean {:.6}, sd {:.6}, {bins} bins",
        returns.len(),
        pdf.mean,
        pdf.sd
    )
    .ok();
    Ok(())
}
