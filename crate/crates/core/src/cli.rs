//! `tripod-eit` command line.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error. An
//! inactive channel is a reported outcome, not a failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::beam::control_field_maps;
use crate::error::{Error, Result};
use crate::io::{
    emit_map, emit_report, emit_scan, fmt_number, load_config_with, output_path, Format, Overrides,
    Report, RunConfig, ScanSpec, OUT_DIR_ENV,
};
use crate::metrics::ComparisonRow;
use crate::response::{
    activity_threshold, channel_signal, normalize_with_guard, susceptibility_map, SensingChannel,
};
use crate::scenario::{
    calibrate_waist, detuning_scan, run_scenario, ScenarioKind, DEFAULT_WAIST_CANDIDATES,
    REFERENCE_SAME,
};

#[derive(Debug, Parser)]
#[command(
    name = "tripod-eit",
    version,
    about = "Absorption vs. EIT localization metrics for a tripod atom in super-Gaussian control beams"
)]
struct Cli {
    /// TOML configuration file (all keys optional)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides config and $TRIPOD_EIT_OUT_DIR)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapChannel {
    /// -Im[χ], normalized with the activity guard
    Abs,
    /// Re[χ], normalized with the activity guard
    Eit,
    /// complex χ, raw
    Chi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Same,
    Optimal,
    Switched,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Same => ScenarioKind::Same,
            ScenarioArg::Optimal => ScenarioKind::Optimal,
            ScenarioArg::Switched => ScenarioKind::Switched,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelArg {
    Abs,
    Eit,
}

impl From<ChannelArg> for SensingChannel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Abs => SensingChannel::Absorption,
            ChannelArg::Eit => SensingChannel::Dispersion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one χ or channel map
    Map {
        #[arg(long, default_value_t = 1)]
        order: u32,
        /// Probe detuning Δp in γ
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        detuning: f64,
        #[arg(long, value_enum, default_value_t = MapChannel::Eit)]
        channel: MapChannel,
        /// Output file; format follows the extension unless --format is given
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Run one comparison protocol over all configured orders
    Compare {
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
    },
    /// Scan the probe detuning and report the channel's max gradient
    Scan {
        #[arg(long, value_enum)]
        channel: Option<ChannelArg>,
        #[arg(long, allow_negative_numbers = true)]
        min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Super-Gaussian order (default: first configured order)
        #[arg(long)]
        order: Option<u32>,
    },
    /// Pick the beam waist that best reproduces the reference same-detuning gradient ratios
    Calibrate {
        /// Candidate waists in λ
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<f64>>,
    },
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    eprint!("{}", e.render());
                    1
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

fn load(cli: &Cli, scenario: Option<ScenarioKind>) -> Result<RunConfig> {
    let overrides = Overrides {
        scenario,
        output_dir: cli
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)),
    };
    match &cli.config {
        Some(path) => load_config_with(path, &overrides),
        None => crate::io::parse_config("", &overrides),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Map {
            order,
            detuning,
            channel,
            ref out,
            format,
        } => {
            let rc = load(&cli, None)?;
            run_map(
                &rc,
                order,
                detuning,
                channel,
                out.as_deref(),
                format.map(Format::from),
            )
        }
        Command::Compare { scenario } => {
            let rc = load(&cli, scenario.map(ScenarioKind::from))?;
            run_compare(&rc)
        }
        Command::Scan {
            channel,
            min,
            max,
            steps,
            order,
        } => {
            let mut rc = load(&cli, None)?;
            let base = rc.scan.clone().unwrap_or_default();
            let spec = ScanSpec {
                channel: channel.map(SensingChannel::from).unwrap_or(base.channel),
                min: min.unwrap_or(base.min),
                max: max.unwrap_or(base.max),
                steps: steps.unwrap_or(base.steps),
            };
            if let Some(p) = order {
                rc.scenario.orders = vec![p];
            }
            run_scan(&rc, &spec)
        }
        Command::Calibrate { ref candidates } => {
            let rc = load(&cli, None)?;
            let candidates = candidates
                .clone()
                .unwrap_or_else(|| DEFAULT_WAIST_CANDIDATES.to_vec());
            run_calibrate(&rc, &candidates)
        }
    }
}

fn run_map(
    rc: &RunConfig,
    order: u32,
    detuning: f64,
    channel: MapChannel,
    out: Option<&Path>,
    format: Option<Format>,
) -> Result<()> {
    if order == 0 {
        return Err(Error::invalid("order", "super-Gaussian order must be >= 1"));
    }
    let sc = &rc.scenario;
    let (o1, o2) = control_field_maps(
        &sc.beam_x.with_order(order),
        &sc.beam_y.with_order(order),
        &sc.grid,
    )?;
    let chi = susceptibility_map(&sc.atomic, sc.gamma, detuning, &o1, &o2)?;

    let name = match channel {
        MapChannel::Abs => "abs",
        MapChannel::Eit => "eit",
        MapChannel::Chi => "chi",
    };
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => output_path(
            &rc.output_dir,
            &format!("map_{name}_P{order}_d{detuning}"),
            format.unwrap_or(rc.formats[0]),
        ),
    };
    let format = format.unwrap_or_else(|| Format::from_path(&path));

    match channel {
        MapChannel::Chi => {
            emit_map(&chi, &path, format)?;
            println!("wrote {}", path.display());
        }
        MapChannel::Abs | MapChannel::Eit => {
            let ch = if channel == MapChannel::Abs {
                SensingChannel::Absorption
            } else {
                SensingChannel::Dispersion
            };
            let signal = normalize_with_guard(
                &channel_signal(&chi, ch),
                activity_threshold(&chi, sc.epsilon_active),
            );
            emit_map(&signal, &path, format)?;
            let state = if signal.active { "active" } else { "inactive" };
            println!(
                "wrote {} ({ch} channel {state}, raw peak {})",
                path.display(),
                fmt_number(signal.raw_peak)
            );
        }
    }
    Ok(())
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |v| format!("{v:.3}"))
}

fn print_rows(rows: &[ComparisonRow]) {
    println!(
        "{:>4} {:>12} {:>12} {:>10} {:>10} {:>10} {:>10}",
        "P", "max_grad_abs", "max_grad_eit", "grad_ratio", "fwhm_abs", "fwhm_eit", "fwhm_ratio"
    );
    for r in rows {
        println!(
            "{:>4} {:>12} {:>12} {:>10} {:>10} {:>10} {:>10}",
            r.order,
            fmt_cell(r.abs.max_gradient),
            fmt_cell(r.eit.max_gradient),
            fmt_cell(r.gradient_ratio),
            fmt_cell(r.abs.fwhm),
            fmt_cell(r.eit.fwhm),
            fmt_cell(r.fwhm_ratio),
        );
    }
}

fn run_compare(rc: &RunConfig) -> Result<()> {
    let rows = run_scenario(&rc.scenario)?;
    let report = Report::new(&rc.scenario, rows);
    print_rows(&report.rows);
    for note in &report.notes {
        println!("note: {note}");
    }
    for &f in &rc.formats {
        let path = output_path(&rc.output_dir, &format!("report_{}", rc.scenario.kind), f);
        emit_report(&report, &path, f)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_scan(rc: &RunConfig, spec: &ScanSpec) -> Result<()> {
    let scan = detuning_scan(&rc.scenario, spec.channel, spec.min, spec.max, spec.steps)?;
    for (d, v) in scan.detunings.iter().zip(&scan.metric_values) {
        println!("{d:>+10.5} {}", fmt_cell(*v));
    }
    println!("best detuning: {}", fmt_cell(scan.best_detuning));
    for &f in &rc.formats {
        let path = output_path(
            &rc.output_dir,
            &format!("scan_{}_P{}", scan.channel, scan.order),
            f,
        );
        emit_scan(&scan, &path, f)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_calibrate(rc: &RunConfig, candidates: &[f64]) -> Result<()> {
    let cal = calibrate_waist(&rc.scenario, &REFERENCE_SAME, candidates)?;
    println!(
        "{:>8} {:>10}  gradient ratios (P = 1, 2, 3, 10)",
        "waist", "cost"
    );
    for e in &cal.entries {
        let ratios: Vec<String> = e.gradient_ratios.iter().map(|r| fmt_cell(*r)).collect();
        println!("{:>8.4} {:>10.5}  {}", e.waist, e.cost, ratios.join(" "));
    }
    println!("selected waist: {}", cal.waist);
    Ok(())
}
