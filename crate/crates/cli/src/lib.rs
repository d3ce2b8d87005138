//! Command-line front end: `ingest`, `scene`, `anomalies` and `serve`.
//!
//! Exit codes: 0 on success, 1 when the input cannot be read or processed, 2
//! when the invocation itself is wrong. Every failure prints one line starting
//! with `error:` on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridscape_core::anomaly::{DetectorParams, DetectorRegistry};
use gridscape_core::export::{
    write_gltf_with, write_report, write_scene_document, GltfOptions, ReportFormat, DEFAULT_INSTANCE_CAP,
};
use gridscape_core::ingest::{ingest, IngestOptions, WorkbookFormat};
use gridscape_core::scene::{
    build_with, GlyphKind, GlyphMode, NormalizationMode, NormalizationPolicy, SceneBuilderRegistry, SceneConfig,
};
use gridscape_core::{select_range, Axis, CellGrid, CellRange, FormatCategory};
use gridscape_service::SessionStore;

#[derive(Debug, Parser)]
#[command(name = "gridscape", version, about = "Spreadsheet grids as 3D scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print grid dimensions and a census of cell types.
    Ingest(InputArgs),
    /// Build a scene and write it as glTF and/or a scene document.
    Scene(SceneArgs),
    /// Scan numeric series for fins, tabs and discontinuities.
    Anomalies(AnomalyArgs),
    /// Run the session server.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Workbook to read (.csv or .xlsx; other names are sniffed).
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Worksheet name (XLSX only; default is the first sheet).
    #[arg(long)]
    sheet: Option<String>,
    /// Inclusive 0-based cell range `r,c:r,c`; default is the used range.
    #[arg(long, value_name = "R1,C1:R2,C2", value_parser = parse_range)]
    range: Option<CellRange>,
    /// CSV field delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Bars,
    Surface,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Uniform,
    PerFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Csv,
    Doc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Rows,
    Cols,
}

#[derive(Debug, Args)]
struct SceneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "bars")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "uniform")]
    normalize: NormalizeArg,
    /// Heights keep their sign around a zero baseline.
    #[arg(long)]
    signed: bool,
    /// Tallest glyph height in scene units.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    hmax: f64,
    /// Distance between neighbouring cell centres.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pitch: f64,
    /// Write a binary glTF (.glb) here.
    #[arg(long, value_name = "PATH")]
    gltf: Option<PathBuf>,
    /// Write the JSON scene document here.
    #[arg(long = "scene-doc", value_name = "PATH")]
    scene_doc: Option<PathBuf>,
    /// Largest bar/tile/patch count the glTF writer accepts.
    #[arg(long, default_value_t = DEFAULT_INSTANCE_CAP)]
    max_instances: usize,
}

#[derive(Debug, Args)]
struct AnomalyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    #[arg(long = "report-format", value_enum, default_value = "csv")]
    report_format: ReportFormatArg,
    /// Robust z-score a fin must reach.
    #[arg(long, default_value_t = 3.5, allow_negative_numbers = true)]
    z: f64,
    /// Series orientation; default follows the longer side of the view.
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// Shortest stale or missing run reported as a tab.
    #[arg(long = "tab-run", default_value_t = 5)]
    tab_run: usize,
    /// Cells on each side of a fin's local window.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Largest robust z a fin's neighbours may have.
    #[arg(long = "isolation-z", default_value_t = 3.5, allow_negative_numbers = true)]
    isolation_z: f64,
    /// Comma-separated detector names (fins, tabs, discontinuities).
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Open a session for this workbook at startup and print its id.
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Write each session's grid here as CSV when it is closed.
    #[arg(long = "persist-dir", value_name = "DIR")]
    persist_dir: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<CellRange, String> {
    s.parse().map_err(|e: gridscape_core::GridError| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn input_error(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: message.to_string(),
    }
}

fn usage_error(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            let _ = writeln!(err, "error: {first}");
            return 2;
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(&a, out, err),
        Command::Scene(a) => cmd_scene(&a, out, err),
        Command::Anomalies(a) => cmd_anomalies(&a, out, err),
        Command::Serve(a) => cmd_serve(&a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let line = f.message.replace('\n', " ");
            let _ = writeln!(err, "error: {line}");
            f.code
        }
    }
}

fn read_grid(a: &InputArgs, err: &mut dyn Write) -> Result<CellGrid, Failure> {
    let bytes = std::fs::read(&a.input).map_err(|e| input_error(format!("cannot read {}: {e}", a.input.display())))?;
    let format = WorkbookFormat::from_path(&a.input).unwrap_or_else(|| WorkbookFormat::sniff(&bytes));
    let opts = IngestOptions {
        sheet_name: a.sheet.clone(),
        csv_delimiter: a.delimiter,
        header_rows_hint: None,
    };
    let ingested = ingest(&bytes, format, &opts).map_err(|e| match e {
        gridscape_core::ingest::IngestError::BadOptions(_) => usage_error(e),
        _ => input_error(format!("{}: {e}", a.input.display())),
    })?;
    for w in &ingested.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(ingested.grid)
}

fn view_range(grid: &CellGrid, a: &InputArgs) -> Result<CellRange, Failure> {
    let range = a.range.unwrap_or_else(|| grid.full_range());
    select_range(grid, range).map_err(input_error)?;
    Ok(range)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))
}

fn cmd_ingest(a: &InputArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let grid = read_grid(a, err)?;
    let range = view_range(&grid, a)?;
    let view = select_range(&grid, range).expect("checked above");
    let mut kinds = [0usize; 3];
    let mut categories = std::collections::BTreeMap::<FormatCategory, usize>::new();
    for (_, cell) in view.cells() {
        let slot = match cell.value.kind_name() {
            "number" => 0,
            "text" => 1,
            _ => 2,
        };
        kinds[slot] += 1;
        if !cell.value.is_empty() {
            *categories.entry(cell.format.category).or_default() += 1;
        }
    }
    let mut text = format!(
        "grid {} x {}\nview {range} ({} x {}, {} cells)\nnumber {}\ntext {}\nempty {}\n",
        grid.n_rows(),
        grid.n_cols(),
        view.n_rows(),
        view.n_cols(),
        view.len(),
        kinds[0],
        kinds[1],
        kinds[2]
    );
    for (cat, n) in categories {
        text.push_str(&format!("category {} {n}\n", cat.as_str()));
    }
    out.write_all(text.as_bytes()).map_err(input_error)
}

fn scene_config(a: &SceneArgs) -> Result<SceneConfig, Failure> {
    let config = SceneConfig {
        policy: NormalizationPolicy {
            mode: match a.normalize {
                NormalizeArg::Uniform => NormalizationMode::Uniform,
                NormalizeArg::PerFormat => NormalizationMode::PerFormatGroup,
            },
            height_max: a.hmax,
            signed_baseline: a.signed,
        },
        glyph_mode: match a.mode {
            ModeArg::Bars => GlyphMode::Bars,
            ModeArg::Surface => GlyphMode::Surface,
        },
        cell_pitch: a.pitch,
        ..SceneConfig::default()
    };
    config.validate().map_err(usage_error)?;
    Ok(config)
}

fn cmd_scene(a: &SceneArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    if a.gltf.is_none() && a.scene_doc.is_none() {
        return Err(usage_error("nothing to write: pass --gltf and/or --scene-doc"));
    }
    let config = scene_config(a)?;
    let grid = read_grid(&a.input, err)?;
    let range = view_range(&grid, &a.input)?;
    let view = select_range(&grid, range).expect("checked above");
    let builder = SceneBuilderRegistry::with_defaults()
        .get(config.glyph_mode.name())
        .map_err(usage_error)?;
    let scene = build_with(builder.as_ref(), &view, &config).map_err(input_error)?;
    if let Some(path) = &a.gltf {
        let opts = GltfOptions {
            max_instances: a.max_instances,
        };
        let glb = write_gltf_with(&scene, &opts).map_err(input_error)?;
        write_file(path, &glb)?;
    }
    if let Some(path) = &a.scene_doc {
        write_file(path, &write_scene_document(&scene))?;
    }
    let line = format!(
        "{} scene over {range}: {} bars, {} tiles, {} labels, {} surface patches\n",
        config.glyph_mode.name(),
        scene.count(GlyphKind::Bar),
        scene.count(GlyphKind::Tile),
        scene.count(GlyphKind::Label),
        scene.count(GlyphKind::SurfacePatch)
    );
    out.write_all(line.as_bytes()).map_err(input_error)
}

fn cmd_anomalies(a: &AnomalyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let params = DetectorParams {
        z_threshold: a.z,
        window_radius: a.window,
        tab_min_run: a.tab_run,
        isolation_z: a.isolation_z,
        series_axis: a.axis.map(|x| match x {
            AxisArg::Rows => Axis::Rows,
            AxisArg::Cols => Axis::Columns,
        }),
    };
    params.validate().map_err(usage_error)?;
    let registry = DetectorRegistry::with_defaults();
    if let Some(names) = &a.detectors {
        for n in names {
            registry.get(n).map_err(usage_error)?;
        }
    }
    let grid = read_grid(&a.input, err)?;
    let range = view_range(&grid, &a.input)?;
    let view = select_range(&grid, range).expect("checked above");
    let report = registry
        .run(&view, &params, a.detectors.as_deref())
        .map_err(input_error)?;
    let format = match a.report_format {
        ReportFormatArg::Csv => ReportFormat::CsvTable,
        ReportFormatArg::Doc => ReportFormat::Document,
    };
    let bytes = write_report(&report, format);
    match &a.report {
        Some(path) => {
            write_file(path, &bytes)?;
            let _ = writeln!(
                out,
                "{} flags over {} numeric cells",
                report.flags.len(),
                report.cells_scanned
            );
            Ok(())
        }
        None => out.write_all(&bytes).map_err(input_error),
    }
}

fn cmd_serve(a: &ServeArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<(), Failure> {
    if let Some(dir) = &a.persist_dir {
        if !dir.is_dir() {
            return Err(input_error(format!("{} is not a directory", dir.display())));
        }
    }
    let store = Arc::new(SessionStore::new(a.persist_dir.clone()));
    if let Some(path) = &a.input {
        let bytes = std::fs::read(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
        let session = store
            .create_session(&bytes, &IngestOptions::default(), None, SceneConfig::default())
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        let _ = writeln!(out, "session {}", session.id());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(input_error)?;
    runtime.block_on(async {
        let addr = SocketAddr::new(a.host, a.port);
        let listener = gridscape_service::http::bind(addr)
            .await
            .map_err(|e| input_error(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(input_error)?;
        let _ = writeln!(out, "listening on http://{local}");
        let _ = out.flush();
        tokio::select! {
            served = gridscape_service::http::serve(listener, store) => served.map_err(input_error),
            _ = tokio::signal::ctrl_c() => Ok(()),
        }
    })
}
