//! Run configuration (TOML) and CSV/JSON emission.
//!
//! Every file is written to a temporary sibling first and renamed into place,
//! so outputs are either complete or absent.
//!
//! Numbers are printed as `{:.8e}` (nine significant digits). Undefined
//! metrics are written as the token `nan`; no floating NaN ever reaches a file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::atomic::AtomicParams;
use crate::beam::{Grid2D, DEFAULT_PEAK_RABI, DEFAULT_WAIST};
use crate::error::{Error, Result};
use crate::field::FieldMap;
use crate::metrics::ComparisonRow;
use crate::response::{NormalizedSignal, SensingChannel};
use crate::scenario::{ScanResult, ScenarioConfig, ScenarioKind};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "TRIPOD_EIT_OUT_DIR";

pub const DEFAULT_OUTPUT_DIR: &str = "output";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// `.json` paths are JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid(
                "formats",
                format!("expected csv|json, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSpec {
    pub channel: SensingChannel,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            channel: SensingChannel::Dispersion,
            min: -0.1,
            max: 0.1,
            steps: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub scan: Option<ScanSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RawConfig::default()
            .resolve(&Overrides::default())
            .expect("defaults are valid")
    }
}

// On-disk schema: every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<ScenarioKind>,
    abs_detuning: Option<f64>,
    eit_detuning: Option<f64>,
    orders: Option<Vec<i64>>,
    gamma: Option<f64>,
    epsilon_active: Option<f64>,
    output_dir: Option<PathBuf>,
    formats: Option<Vec<Format>>,
    atomic: Option<AtomicParams>,
    beams: Option<RawBeams>,
    grid: Option<RawGrid>,
    scan: Option<RawScan>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeams {
    peak_rabi: Option<f64>,
    peak_rabi_x: Option<f64>,
    peak_rabi_y: Option<f64>,
    waist: Option<f64>,
    waist_x: Option<f64>,
    waist_y: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    half_width: Option<f64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    y_min: Option<f64>,
    y_max: Option<f64>,
    n: Option<usize>,
    nx: Option<usize>,
    ny: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    channel: Option<SensingChannel>,
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
}

/// Values supplied outside the config file; these win over file contents.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Replaces the scenario kind. Detunings not set explicitly in the file
    /// follow the new kind's defaults.
    pub scenario: Option<ScenarioKind>,
    pub output_dir: Option<PathBuf>,
}

impl RawConfig {
    fn resolve(self, ov: &Overrides) -> Result<RunConfig> {
        let kind = ov.scenario.or(self.scenario).unwrap_or(ScenarioKind::Same);
        let mut sc = ScenarioConfig::new(kind);
        let (abs_default, eit_default) = kind.default_detunings();
        sc.abs_detuning = self.abs_detuning.unwrap_or(abs_default);
        sc.eit_detuning = match (kind, self.eit_detuning) {
            (_, Some(d)) => d,
            (ScenarioKind::Same, None) => sc.abs_detuning,
            (_, None) => eit_default,
        };
        if kind == ScenarioKind::Same && self.eit_detuning.is_some() && self.abs_detuning.is_none()
        {
            sc.abs_detuning = sc.eit_detuning;
        }
        if let Some(orders) = self.orders {
            sc.orders = orders
                .into_iter()
                .map(|p| match u32::try_from(p) {
                    Ok(p) if p >= 1 => Ok(p),
                    _ => Err(Error::invalid(
                        "orders",
                        format!("super-Gaussian order must be an integer >= 1, got {p}"),
                    )),
                })
                .collect::<Result<_>>()?;
        }
        if let Some(g) = self.gamma {
            sc.gamma = g;
        }
        if let Some(e) = self.epsilon_active {
            sc.epsilon_active = e;
        }
        if let Some(a) = self.atomic {
            sc.atomic = a;
        }
        let beams = self.beams.unwrap_or_default();
        let peak = beams.peak_rabi.unwrap_or(DEFAULT_PEAK_RABI);
        let waist = beams.waist.unwrap_or(DEFAULT_WAIST);
        sc.beam_x.peak_rabi = beams.peak_rabi_x.unwrap_or(peak);
        sc.beam_y.peak_rabi = beams.peak_rabi_y.unwrap_or(peak);
        sc.beam_x.waist = beams.waist_x.unwrap_or(waist);
        sc.beam_y.waist = beams.waist_y.unwrap_or(waist);

        let g = self.grid.unwrap_or_default();
        let d = Grid2D::default();
        let hw = g.half_width.unwrap_or(d.x_max);
        let n = g.n.unwrap_or(d.nx);
        sc.grid = Grid2D {
            x_min: g.x_min.unwrap_or(-hw),
            x_max: g.x_max.unwrap_or(hw),
            y_min: g.y_min.unwrap_or(-hw),
            y_max: g.y_max.unwrap_or(hw),
            nx: g.nx.unwrap_or(n),
            ny: g.ny.unwrap_or(n),
        };
        sc.validate()?;

        let formats = self
            .formats
            .unwrap_or_else(|| vec![Format::Csv, Format::Json]);
        if formats.is_empty() {
            return Err(Error::invalid(
                "formats",
                "at least one output format is required",
            ));
        }
        let scan = self
            .scan
            .map(|s| {
                let d = ScanSpec::default();
                let spec = ScanSpec {
                    channel: s.channel.unwrap_or(d.channel),
                    min: s.min.unwrap_or(d.min),
                    max: s.max.unwrap_or(d.max),
                    steps: s.steps.unwrap_or(d.steps),
                };
                if spec.steps < 3 {
                    return Err(Error::invalid("scan.steps", "must be >= 3"));
                }
                if !(spec.min < spec.max) {
                    return Err(Error::invalid("scan.max", "must exceed scan.min"));
                }
                Ok(spec)
            })
            .transpose()?;
        let output_dir = ov
            .output_dir
            .clone()
            .or(self.output_dir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(RunConfig {
            scenario: sc,
            output_dir,
            formats,
            scan,
        })
    }
}

/// Parse and validate a TOML config document.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.resolve(overrides)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    load_config_with(path, &Overrides::default())
}

pub fn load_config_with(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text, overrides)
}

/// Nine significant digits; `-0` prints as `0`.
pub fn fmt_number(v: f64) -> String {
    debug_assert!(v.is_finite());
    format!("{:.8e}", v + 0.0)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), fmt_number)
}

fn json_opt(v: Option<f64>) -> Value {
    v.map_or_else(|| Value::from("nan"), Value::from)
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Anything that can be written by [`emit_map`].
#[derive(Debug, Clone, Copy)]
pub enum MapData<'a> {
    Real(&'a FieldMap<f64>),
    Complex(&'a FieldMap<Complex64>),
    Signal(&'a NormalizedSignal),
}

impl<'a> From<&'a FieldMap<f64>> for MapData<'a> {
    fn from(m: &'a FieldMap<f64>) -> Self {
        MapData::Real(m)
    }
}

impl<'a> From<&'a FieldMap<Complex64>> for MapData<'a> {
    fn from(m: &'a FieldMap<Complex64>) -> Self {
        MapData::Complex(m)
    }
}

impl<'a> From<&'a NormalizedSignal> for MapData<'a> {
    fn from(m: &'a NormalizedSignal) -> Self {
        MapData::Signal(m)
    }
}

fn grid_json(g: &Grid2D) -> Value {
    json!({
        "x_min": g.x_min, "x_max": g.x_max,
        "y_min": g.y_min, "y_max": g.y_max,
        "nx": g.nx, "ny": g.ny,
        "layout": "row-major, y outer, x fastest",
    })
}

pub fn render_map(map: MapData<'_>, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(render_map_csv(map)),
        Format::Json => render_map_json(map),
    }
}

fn render_map_csv(map: MapData<'_>) -> String {
    let mut out = String::new();
    let real_rows = |out: &mut String, m: &FieldMap<f64>| {
        let g = m.grid();
        out.push_str("x,y,value\n");
        for j in 0..g.ny {
            for i in 0..g.nx {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    fmt_number(g.x(i)),
                    fmt_number(g.y(j)),
                    fmt_number(m.get(j, i))
                );
            }
        }
    };
    match map {
        MapData::Real(m) => real_rows(&mut out, m),
        MapData::Signal(s) => {
            let state = if s.active { "active" } else { "inactive" };
            let _ = writeln!(out, "# channel={state} raw_peak={}", fmt_number(s.raw_peak));
            real_rows(&mut out, &s.map);
        }
        MapData::Complex(m) => {
            let g = m.grid();
            out.push_str("x,y,re,im\n");
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let c = m.get(j, i);
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        fmt_number(g.x(i)),
                        fmt_number(g.y(j)),
                        fmt_number(c.re),
                        fmt_number(c.im)
                    );
                }
            }
        }
    }
    out
}

fn render_map_json(map: MapData<'_>) -> Result<String> {
    let v = match map {
        MapData::Real(m) => json!({
            "kind": "real",
            "grid": grid_json(m.grid()),
            "values": m.values().iter().collect::<Vec<_>>(),
        }),
        MapData::Signal(s) => json!({
            "kind": "real",
            "active": s.active,
            "raw_peak": s.raw_peak,
            "grid": grid_json(s.map.grid()),
            "values": s.map.values().iter().collect::<Vec<_>>(),
        }),
        MapData::Complex(m) => json!({
            "kind": "complex",
            "grid": grid_json(m.grid()),
            "values": m.values().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        }),
    };
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.into()))?;
    s.push('\n');
    Ok(s)
}

pub fn emit_map<'a>(map: impl Into<MapData<'a>>, path: &Path, format: Format) -> Result<()> {
    write_atomic(path, render_map(map.into(), format)?.as_bytes())
}

/// A real-valued map read back from CSV (comment lines skipped).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvMap {
    pub header: Vec<String>,
    pub comments: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv_map(path: &Path) -> Result<CsvMap> {
    let text = fs::read_to_string(path)?;
    let mut comments = Vec::new();
    let mut header = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if header.is_none() {
            header = Some(line.split(',').map(str::to_string).collect::<Vec<_>>());
        } else if !line.is_empty() {
            let row = line
                .split(',')
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("`{f}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
    }
    Ok(CsvMap {
        header: header.unwrap_or_default(),
        comments,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMetadata {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub metadata: ReportMetadata,
    /// Sorted by order ascending.
    pub rows: Vec<ComparisonRow>,
    /// `P=<order>: <note>` for every row note.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(config: &ScenarioConfig, mut rows: Vec<ComparisonRow>) -> Self {
        rows.sort_by_key(|r| r.order);
        let notes = rows
            .iter()
            .flat_map(|r| r.notes.iter().map(move |n| format!("P={}: {n}", r.order)))
            .collect();
        Report {
            metadata: ReportMetadata {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                config: config.clone(),
            },
            rows,
            notes,
        }
    }
}

pub const REPORT_HEADER: &str =
    "P,max_grad_abs,max_grad_eit,gradient_ratio,fwhm_abs,fwhm_eit,fwhm_ratio,notes";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_report(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut out = String::from(REPORT_HEADER);
            out.push('\n');
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.order,
                    fmt_opt(r.abs.max_gradient),
                    fmt_opt(r.eit.max_gradient),
                    fmt_opt(r.gradient_ratio),
                    fmt_opt(r.abs.fwhm),
                    fmt_opt(r.eit.fwhm),
                    fmt_opt(r.fwhm_ratio),
                    csv_field(&r.notes.join("; ")),
                );
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "P": r.order,
                        "abs_detuning": r.abs.detuning,
                        "eit_detuning": r.eit.detuning,
                        "abs_active": r.abs.active,
                        "eit_active": r.eit.active,
                        "abs_raw_peak": r.abs.raw_peak,
                        "eit_raw_peak": r.eit.raw_peak,
                        "max_grad_abs": json_opt(r.abs.max_gradient),
                        "max_grad_eit": json_opt(r.eit.max_gradient),
                        "gradient_ratio": json_opt(r.gradient_ratio),
                        "fwhm_abs": json_opt(r.abs.fwhm),
                        "fwhm_eit": json_opt(r.eit.fwhm),
                        "fwhm_ratio": json_opt(r.fwhm_ratio),
                        "notes": r.notes,
                    })
                })
                .collect();
            let v = json!({
                "metadata": report.metadata,
                "rows": rows,
                "notes": report.notes,
            });
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.into()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn emit_report(report: &Report, path: &Path, format: Format) -> Result<()> {
    write_atomic(path, render_report(report, format)?.as_bytes())
}

pub fn render_scan(scan: &ScanResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "# channel={} order={} best_detuning={}",
                scan.channel,
                scan.order,
                fmt_opt(scan.best_detuning)
            );
            out.push_str("detuning,max_gradient,active\n");
            for (d, v) in scan.detunings.iter().zip(&scan.metric_values) {
                let _ = writeln!(out, "{},{},{}", fmt_number(*d), fmt_opt(*v), v.is_some());
            }
            Ok(out)
        }
        Format::Json => {
            let v = json!({
                "channel": scan.channel,
                "order": scan.order,
                "best_detuning": json_opt(scan.best_detuning),
                "detunings": scan.detunings,
                "max_gradient": scan.metric_values.iter().map(|v| json_opt(*v)).collect::<Vec<_>>(),
            });
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.into()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn emit_scan(scan: &ScanResult, path: &Path, format: Format) -> Result<()> {
    write_atomic(path, render_scan(scan, format)?.as_bytes())
}

/// Path for `stem` in `dir` with the extension of `format`.
pub fn output_path(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::metrics::{build_comparison_row, ChannelResult};
    use proptest::prelude::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let rc = parse_config("", &Overrides::default()).unwrap();
        let sc = &rc.scenario;
        assert_eq!(sc.kind, ScenarioKind::Same);
        assert_eq!((sc.abs_detuning, sc.eit_detuning), (0.5, 0.5));
        assert_eq!(sc.gamma, 1.0);
        assert_eq!(sc.atomic.probe_rabi, 0.1);
        assert_eq!(sc.beam_x.peak_rabi, 5.0);
        assert_eq!(sc.beam_y.waist, DEFAULT_WAIST);
        assert_eq!(sc.grid, Grid2D::default());
        assert_eq!(sc.epsilon_active, crate::response::DEFAULT_EPSILON_ACTIVE);
        assert_eq!(sc.orders, vec![1, 2, 3, 10]);
        assert_eq!(rc.formats, vec![Format::Csv, Format::Json]);
        assert!(rc.scan.is_none());
        assert_eq!(rc, RunConfig::default());
    }

    #[test]
    fn zero_order_is_rejected_by_name() {
        let err = parse_config("orders = [1, 0, 3]", &Overrides::default()).unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref field, .. } if field == "orders"),
            "{err}"
        );
        let err = parse_config("orders = [-2]", &Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "orders"));
    }

    #[test]
    fn optimal_defaults_detunings() {
        let rc = parse_config("scenario = \"optimal\"", &Overrides::default()).unwrap();
        assert_eq!(
            (rc.scenario.abs_detuning, rc.scenario.eit_detuning),
            (0.0, 0.5)
        );
        let ov = Overrides {
            scenario: Some(ScenarioKind::Switched),
            ..Default::default()
        };
        let rc = parse_config("scenario = \"optimal\"", &ov).unwrap();
        assert_eq!(rc.scenario.kind, ScenarioKind::Switched);
        assert_eq!(
            (rc.scenario.abs_detuning, rc.scenario.eit_detuning),
            (0.5, 0.0)
        );
    }

    #[test]
    fn full_document_parses() {
        let text = r#"
            # comments allowed
            scenario = "same"
            abs_detuning = 0.3
            orders = [2, 3]
            gamma = 1.5
            epsilon_active = 1e-6
            formats = ["json"]
            output_dir = "runs/a"

            [atomic]
            probe_rabi = 0.05

            [beams]
            waist = 0.15
            peak_rabi_y = 4.0

            [grid]
            half_width = 0.6
            n = 101

            [scan]
            channel = "eit"
            steps = 11
        "#;
        let rc = parse_config(text, &Overrides::default()).unwrap();
        let sc = &rc.scenario;
        assert_eq!((sc.abs_detuning, sc.eit_detuning), (0.3, 0.3));
        assert_eq!(sc.atomic.probe_rabi, 0.05);
        assert_eq!(sc.atomic.gamma14, 1.0);
        assert_eq!(
            (sc.beam_x.waist, sc.beam_y.peak_rabi, sc.beam_x.peak_rabi),
            (0.15, 4.0, 5.0)
        );
        assert_eq!((sc.grid.x_min, sc.grid.ny), (-0.6, 101));
        assert_eq!(rc.formats, vec![Format::Json]);
        assert_eq!(rc.output_dir, PathBuf::from("runs/a"));
        let scan = rc.scan.unwrap();
        assert_eq!(
            (scan.channel, scan.steps, scan.min),
            (SensingChannel::Dispersion, 11, -0.1)
        );
    }

    #[test]
    fn parse_and_validation_errors() {
        assert!(matches!(
            parse_config("orders = [1,", &Overrides::default()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_config("bogus = 1", &Overrides::default()),
            Err(Error::Parse(_))
        ));
        let err = parse_config("[grid]\nn = 64", &Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "grid.nx"));
        let err = parse_config(
            "scenario = \"same\"\nabs_detuning = 0.1\neit_detuning = 0.2",
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "eit_detuning"));
        assert!(parse_config("formats = []", &Overrides::default()).is_err());
    }

    #[test]
    fn csv_map_layouts() {
        let g = Grid2D::square(1.0, 3).unwrap();
        let m = FieldMap::from_fn(Execution::Sequential, g, |_, _| 0.25);
        let text = render_map((&m).into(), Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,value");
        assert_eq!(lines.len(), 10);
        assert!(lines[1..].iter().all(|l| l.ends_with(",2.50000000e-1")));
        // x fastest
        assert!(lines[1].starts_with("-1.00000000e0,-1.00000000e0"));
        assert!(lines[2].starts_with("0.00000000e0,-1.00000000e0"));

        let c = FieldMap::from_fn(Execution::Sequential, g, |_, _| Complex64::new(1.0, -2.0));
        let text = render_map((&c).into(), Format::Csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x,y,re,im");
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 4);

        let s = NormalizedSignal {
            map: FieldMap::from_fn(Execution::Sequential, g, |_, _| 0.0),
            raw_peak: 0.0,
            active: false,
        };
        let text = render_map((&s).into(), Format::Csv).unwrap();
        assert!(text.starts_with("# channel=inactive raw_peak=0.00000000e0\nx,y,value\n"));
    }

    #[test]
    fn json_map_has_grid_and_flat_values() {
        let g = Grid2D::square(1.0, 3).unwrap();
        let m = FieldMap::from_fn(Execution::Sequential, g, |j, i| (j * 3 + i) as f64);
        let v: Value =
            serde_json::from_str(&render_map((&m).into(), Format::Json).unwrap()).unwrap();
        assert_eq!(v["grid"]["nx"], 3);
        assert_eq!(v["values"].as_array().unwrap().len(), 9);
        assert_eq!(v["values"][5], 5.0);
    }

    fn row(order: u32, eit_active: bool) -> ComparisonRow {
        let abs = ChannelResult {
            channel: SensingChannel::Absorption,
            detuning: 0.5,
            raw_peak: 0.5,
            active: true,
            max_gradient: Some(67.54),
            fwhm: None,
            notes: vec![
                "abs: cross-section along x never falls below half maximum inside the grid".into(),
            ],
        };
        let eit = ChannelResult {
            channel: SensingChannel::Dispersion,
            detuning: 0.0,
            raw_peak: 0.0,
            active: eit_active,
            max_gradient: eit_active.then_some(158.89),
            fwhm: eit_active.then_some(0.3),
            notes: vec![],
        };
        build_comparison_row(order, abs, eit)
    }

    #[test]
    fn report_csv_columns_and_nan_tokens() {
        let cfg = ScenarioConfig::new(ScenarioKind::Switched);
        let report = Report::new(&cfg, vec![row(10, false), row(1, false)]);
        let text = render_report(&report, Format::Csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_HEADER);
        let first: Vec<&str> = lines.next().unwrap().splitn(8, ',').collect();
        assert_eq!(first[0], "1");
        assert_eq!(first[2], "nan");
        assert_eq!(first[3], "nan");
        assert_eq!(first[6], "nan");
        assert!(first[7].starts_with("abs: cross-section"));
        assert!(lines.next().unwrap().starts_with("10,"));

        let json: Value =
            serde_json::from_str(&render_report(&report, Format::Json).unwrap()).unwrap();
        assert_eq!(json["rows"][0]["gradient_ratio"], "nan");
        assert_eq!(json["metadata"]["config"]["kind"], "switched");
        assert_eq!(report.notes.len(), 2);
        assert!(report.notes[0].starts_with("P=1: abs:"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = Report::new(&ScenarioConfig::new(ScenarioKind::Same), vec![]);
        assert_eq!(
            render_report(&report, Format::Csv).unwrap(),
            format!("{REPORT_HEADER}\n")
        );
    }

    #[test]
    fn emit_writes_atomically_into_new_dirs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/deeper/map.csv");
        let g = Grid2D::square(1.0, 3).unwrap();
        let m = FieldMap::from_fn(Execution::Sequential, g, |_, _| 1.0);
        emit_map(&m, &path, Format::Csv).unwrap();
        let entries: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(entries.len(), 1);
        assert_eq!(read_csv_map(&path).unwrap().rows.len(), 9);
    }

    proptest! {
        #[test]
        fn csv_round_trip_within_print_precision(vals in proptest::collection::vec(-1e6f64..1e6, 25)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.csv");
            let g = Grid2D::square(2.0, 5).unwrap();
            let m = FieldMap::from_fn(Execution::Sequential, g, |j, i| vals[j * 5 + i]);
            emit_map(&m, &path, Format::Csv).unwrap();
            let back = read_csv_map(&path).unwrap();
            prop_assert_eq!(back.rows.len(), 25);
            for (k, r) in back.rows.iter().enumerate() {
                let v = vals[k];
                prop_assert!((r[2] - v).abs() <= 5e-9 * v.abs().max(f64::MIN_POSITIVE));
                prop_assert!((r[0] - g.x(k % 5)).abs() <= 5e-9 * 2.0);
            }
        }
    }
}
