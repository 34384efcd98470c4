//! Batch entry points for the full pipeline.
//!
//! Every subcommand reads files (or stdin for `-`) and writes files (or
//! stdout). Exit codes: 0 success, 2 input error, 3 computation error.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveTime};
use clap::{Args, Parser, Subcommand};

use crate::cluster::cluster_segments;
use crate::error::{Error, Result};
use crate::ingest::{aggregate_ticks, movements, read_bars_csv, read_ticks_csv, write_bars_csv, Model, TradingCalendar};
use crate::report::{
    compare_segmentations, export_bundle, segment_spectra, to_json_bytes, ExportFormat, PhaseAnalysis, ShockConfig,
};
use crate::segment::{Segmentation, SegmentationConfig, Segmenter};
use crate::service::{self, SessionStore};
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "regimescope", version, about = "Segment index movement series into volatility regimes")]
pub struct Cli {
    /// Report errors on stderr as one JSON object.
    #[arg(long, global = true)]
    pub json_errors: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Aggregate a `timestamp,price` tick CSV into a `timestamp,value` bar CSV.
    Ingest(IngestArgs),
    /// Write a synthetic bar CSV with known regime boundaries.
    Simulate(SimulateArgs),
    /// Segment a bar CSV and write the segmentation JSON.
    Segment(SegmentArgs),
    /// Cluster the segments of a segmentation into volatility phases.
    Cluster(ClusterArgs),
    /// Match the boundaries of two segmentations of the same bars.
    Compare(CompareArgs),
    /// Write the export bundle for a segmentation.
    Export(ExportArgs),
    /// Run the HTTP review service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Tick CSV, or `-` for stdin.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "09:30", value_parser = parse_time)]
    pub open: NaiveTime,
    #[arg(long, default_value = "16:00", value_parser = parse_time)]
    pub close: NaiveTime,
    #[arg(long, default_value_t = 30)]
    pub bar_minutes: u32,
    /// Offset of the session clock from UTC, e.g. `-05:00`.
    #[arg(long, default_value = "+00:00", value_parser = parse_offset)]
    pub utc_offset: FixedOffset,
    /// Session date to skip; repeatable.
    #[arg(long = "holiday")]
    pub holidays: Vec<NaiveDate>,
    /// Emit a short final bar at the close.
    #[arg(long)]
    pub truncated_final_bar: bool,
    /// Stop each session at the bar covering its last tick.
    #[arg(long)]
    pub no_extend_to_close: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Comma-separated `length:sigma` regimes of zero-mean log movements.
    #[arg(long, value_delimiter = ',', value_parser = parse_regime, required = true)]
    pub regimes: Vec<(usize, f64)>,
    #[arg(long)]
    pub seed: u64,
    /// Sigmas are multiplied by this to give log-price movements.
    #[arg(long, default_value_t = 1e-4)]
    pub scale: f64,
    #[arg(long, default_value_t = 10_000.0)]
    pub start: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Bar CSV, or `-` for stdin.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Model::Normal)]
    pub model: Model,
    #[arg(long, default_value_t = 10.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 13)]
    pub min_len: usize,
    #[arg(long, default_value_t = 100)]
    pub max_opt_sweeps: usize,
    /// Bars per trading day; inferred from the timestamps if omitted.
    #[arg(long)]
    pub bars_per_day: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Segmentation JSON, or `-` for stdin.
    pub input: PathBuf,
    #[arg(short, long)]
    pub k: usize,
    /// Phase analysis JSON (dendrogram, phases, timeline, shocks).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the dendrogram as Newick.
    #[arg(long)]
    pub newick: Option<PathBuf>,
    #[arg(long, default_value_t = ShockConfig::default().min_run)]
    pub min_run: usize,
    #[arg(long, default_value_t = ShockConfig::default().window_bars)]
    pub window_bars: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Match tolerance in bars; defaults to one trading day.
    #[arg(long)]
    pub tolerance: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Bar CSV the segmentation was computed from.
    #[arg(long)]
    pub bars: PathBuf,
    #[arg(long)]
    pub segmentation: PathBuf,
    /// Phase analysis JSON written by `cluster`.
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    #[arg(long)]
    pub bars_per_day: Option<usize>,
    /// Directory for the bundle files.
    #[arg(long, required_unless_present = "format")]
    pub out_dir: Option<PathBuf>,
    /// Write only this file, to `--output` or stdout.
    #[arg(long, value_enum, conflicts_with = "out_dir")]
    pub format: Option<ExportFormat>,
    #[arg(short, long, requires = "format")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// 0 picks a free port; the bound address is printed either way.
    #[arg(long, default_value_t = service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Session directory; defaults to `$REGIMESCOPE_STATE`, else memory only.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
}

fn parse_time(s: &str) -> std::result::Result<NaiveTime, String> {
    NaiveTime::parse_from_str(s, "%H:%M")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M:%S"))
        .map_err(|e| format!("{s:?}: {e}"))
}

fn parse_offset(s: &str) -> std::result::Result<FixedOffset, String> {
    DateTime::parse_from_rfc3339(&format!("2000-01-01T00:00:00{s}"))
        .map(|t| *t.offset())
        .map_err(|_| format!("{s:?} is not an offset like +05:30 or Z"))
}

fn parse_regime(s: &str) -> std::result::Result<(usize, f64), String> {
    let (len, sigma) = s.split_once(':').ok_or_else(|| format!("{s:?} is not length:sigma"))?;
    let len = len.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let sigma: f64 = sigma.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(format!("{s:?}: sigma must be positive"));
    }
    Ok((len, sigma))
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    if is_stdio(path) {
        std::io::stdin().read_to_end(&mut buf).map_err(|e| Error::io("<stdin>", e))?;
    } else {
        buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    }
    Ok(buf)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) if !is_stdio(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_segmentation(path: &Path) -> Result<Segmentation> {
    let bytes = read_input(path)?;
    Segmentation::from_json(&String::from_utf8_lossy(&bytes))
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    let calendar = TradingCalendar {
        session_open: args.open,
        session_close: args.close,
        bar_width: Duration::minutes(i64::from(args.bar_minutes)),
        holidays: args.holidays.iter().copied().collect(),
        utc_offset: args.utc_offset,
        truncated_final_bar: args.truncated_final_bar,
        extend_to_close: !args.no_extend_to_close,
    };
    calendar.validate()?;
    let ticks = read_ticks_csv(read_input(&args.input)?.as_slice())?;
    let bars = aggregate_ticks(&ticks, &calendar)?;
    let mut out = Vec::new();
    write_bars_csv(&bars, &mut out)?;
    write_output(args.output.as_deref(), &out)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    if !(args.start > 0.0 && args.scale > 0.0) {
        return Err(Error::Config("start and scale must be positive".into()));
    }
    let regimes: Vec<synth::Regime> = args.regimes.iter().map(|&(n, s)| (n, 0.0, s * args.scale)).collect();
    let bars = synth::bars_from_log_moves(args.start, &synth::piecewise_gaussian(&regimes, args.seed));
    let mut out = Vec::new();
    write_bars_csv(&bars, &mut out)?;
    write_output(args.output.as_deref(), &out)
}

/// Movements, recursive segmentation and boundary optimization.
pub fn segment_bars(bars_csv: &[u8], bars_per_day: Option<usize>, model: Model, config: SegmentationConfig) -> Result<Segmentation> {
    let bars = read_bars_csv(bars_csv, bars_per_day)?;
    service::automatic_segmentation(&movements(&bars, model)?, config)
}

pub fn cmd_segment(args: &SegmentArgs) -> Result<()> {
    let config = SegmentationConfig {
        threshold: args.threshold,
        min_len: args.min_len,
        max_opt_sweeps: args.max_opt_sweeps,
        ..SegmentationConfig::default()
    };
    config.validate()?;
    let seg = segment_bars(&read_input(&args.input)?, args.bars_per_day, args.model, config)?;
    write_output(args.output.as_deref(), &to_json_bytes(&seg)?)
}

/// Cluster the segments of `seg` and scan the resulting timeline.
pub fn analyze(seg: &Segmentation, k: usize, shocks: &ShockConfig) -> Result<PhaseAnalysis> {
    let stats: Vec<_> = seg.segments.iter().map(|s| s.stats()).collect();
    let (dendrogram, phases) = cluster_segments(&stats, k)?;
    PhaseAnalysis::new(seg, dendrogram, phases, shocks)
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    let seg = read_segmentation(&args.input)?;
    let shocks = ShockConfig {
        min_run: args.min_run,
        window_bars: args.window_bars,
    };
    let analysis = analyze(&seg, args.k, &shocks)?;
    if let Some(path) = &args.newick {
        let mut nwk = analysis.dendrogram.to_newick();
        nwk.push('\n');
        write_output(Some(path), nwk.as_bytes())?;
    }
    write_output(args.output.as_deref(), &to_json_bytes(&analysis)?)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let a = read_segmentation(&args.a)?;
    let b = read_segmentation(&args.b)?;
    let tolerance = args.tolerance.unwrap_or(a.bars_per_day);
    let report = compare_segmentations(&a, &b, tolerance)?;
    write_output(args.output.as_deref(), &to_json_bytes(&report)?)
}

pub fn cmd_export(args: &ExportArgs) -> Result<()> {
    let seg = read_segmentation(&args.segmentation)?;
    let bars = read_bars_csv(read_input(&args.bars)?.as_slice(), args.bars_per_day)?;
    let series = movements(&bars, seg.model)?;
    let segmenter = Segmenter::new(&series, seg.config)?;
    let analysis: Option<PhaseAnalysis> = match &args.analysis {
        Some(p) => Some(serde_json::from_slice(&read_input(p)?)?),
        None => None,
    };
    let spectra = segment_spectra(&segmenter, &seg, None);
    let bundle = export_bundle(&seg, analysis.as_ref(), &spectra)?;
    match (args.format, &args.out_dir) {
        (Some(f), _) => {
            let bytes = bundle
                .get(f)
                .ok_or_else(|| Error::Config(format!("{} needs --analysis", f.file_name())))?;
            write_output(args.output.as_deref(), bytes)
        }
        (None, Some(dir)) => {
            for path in bundle.write_to_dir(dir)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        (None, None) => Err(Error::Config("give --out-dir or --format".into())),
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let store = match &args.state_dir {
        Some(dir) => SessionStore::open(Some(dir.clone()))?,
        None => SessionStore::from_env()?,
    };
    let store = Arc::new(store);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("tokio runtime", e))?;
    runtime.block_on(async move {
        let addr = SocketAddr::new(args.host, args.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::io(addr.to_string(), e))?;
        let bound = listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?;
        match store.state_dir() {
            Some(dir) => eprintln!("sessions in {}", dir.display()),
            None => eprintln!("{} not set; sessions are kept in memory only", service::STATE_DIR_ENV),
        }
        write_output(None, format!("listening on http://{bound}\n").as_bytes())?;
        service::serve(listener, store, shutdown_signal()).await
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Segment(a) => cmd_segment(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Export(a) => cmd_export(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}

fn report_error(json: bool, code: &str, message: &str, exit: i32) {
    if json {
        let body = serde_json::json!({ "code": code, "message": message, "exit_code": exit });
        eprintln!("{body}");
    } else {
        eprintln!("error: {message}");
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            if args.iter().any(|a| a == "--json-errors") {
                report_error(true, "Usage", e.to_string().trim(), 2);
            } else {
                let _ = e.print();
            }
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let exit = exit_code(&e);
            report_error(cli.json_errors, e.code(), &e.to_string(), exit);
            exit
        }
    }
}

pub fn main() -> i32 {
    main_from(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_time("09:30").unwrap(), NaiveTime::from_hms_opt(9, 30, 0).unwrap());
        assert_eq!(parse_offset("-05:00").unwrap().local_minus_utc(), -5 * 3600);
        assert_eq!(parse_offset("Z").unwrap().local_minus_utc(), 0);
        assert_eq!(parse_regime("200:1.5").unwrap(), (200, 1.5));
        assert!(parse_regime("200").is_err());
        assert!(parse_regime("200:-1").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_from(["regimescope", "segment"]), 2);
        assert_eq!(main_from(["regimescope", "--json-errors", "bogus"]), 2);
        assert_eq!(main_from(["regimescope", "--help"]), 0);
    }
}
