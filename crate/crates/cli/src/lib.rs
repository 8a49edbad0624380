//! Command-line front end: `compute`, `validate` and `bench`.
//!
//! Every command takes a [`RunConfig`] and returns the list of written
//! artifacts. Errors carry the process exit code.

pub mod svg;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use pqcap::acpf::{LimitTolerance, PfOptions};
use pqcap::bundled;
use pqcap::lintdf::LinearOptions;
use pqcap::polytope2d::{Family, HalfspaceSet};
use pqcap::scanner::{semilog_slope, BenchRecord, ScanSample};
use pqcap::{
    analyze, compute_metrics, parse_case, scan, AnalysisOptions, CapabilityOptions, CapabilityResult, CaseFormat,
    ConvexPolygon, Metrics, NetworkCase, Point, ScanConfig, ScanError,
};

use svg::{Layer, Series};

pub const OUTPUT_DIR_ENV: &str = "PQCAP_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<pqcap::CaseError> for CliError {
    fn from(e: pqcap::CaseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<pqcap::ModelError> for CliError {
    fn from(e: pqcap::ModelError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// Where a case comes from: a file, a bundled case (`bundled:lv_feeder`)
/// or a generated radial grid (`synthetic:120`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseSource {
    File(PathBuf),
    Bundled(String),
    Synthetic(usize),
}

impl FromStr for CaseSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(name) = s.strip_prefix("bundled:") {
            return Ok(CaseSource::Bundled(name.to_string()));
        }
        if let Some(n) = s.strip_prefix("synthetic:") {
            let n: usize = n
                .parse()
                .map_err(|_| format!("`{s}`: expected synthetic:<bus count>"))?;
            if n < 2 {
                return Err(format!("`{s}`: a synthetic case needs at least 2 buses"));
            }
            return Ok(CaseSource::Synthetic(n));
        }
        Ok(CaseSource::File(PathBuf::from(s)))
    }
}

impl std::fmt::Display for CaseSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaseSource::File(p) => write!(f, "{}", p.display()),
            CaseSource::Bundled(n) => write!(f, "bundled:{n}"),
            CaseSource::Synthetic(n) => write!(f, "synthetic:{n}"),
        }
    }
}

impl CaseSource {
    pub fn load(&self, format: Option<CaseFormat>) -> Result<NetworkCase, CliError> {
        match self {
            CaseSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
                let format = format.unwrap_or_else(|| infer_format(path));
                parse_case(&text, format).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
            }
            CaseSource::Bundled(name) => bundled::all()
                .into_iter()
                .find(|(n, _)| n == name)
                .map(|(_, c)| c)
                .ok_or_else(|| {
                    let names: Vec<_> = bundled::all().into_iter().map(|(n, _)| n).collect();
                    CliError::Input(format!("unknown bundled case `{name}` (have: {})", names.join(", ")))
                }),
            CaseSource::Synthetic(n) => Ok(bundled::synthetic_radial(*n)),
        }
    }

    /// File-name stem used for artifacts.
    pub fn stem(&self) -> String {
        let raw = match self {
            CaseSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "case".into()),
            CaseSource::Bundled(n) => n.clone(),
            CaseSource::Synthetic(n) => format!("synthetic_{n}"),
        };
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect()
    }
}

fn infer_format(path: &Path) -> CaseFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("m") => CaseFormat::MatpowerSubset,
        _ => CaseFormat::NativeJson,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Export {
    pub json: bool,
    pub csv: bool,
    pub svg: bool,
}

impl Default for Export {
    fn default() -> Self {
        Self {
            json: true,
            csv: false,
            svg: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub cases: Vec<CaseSource>,
    /// `None` infers the format from the file extension.
    pub format: Option<CaseFormat>,
    pub n_sides: usize,
    pub n_p_samples: usize,
    pub q_tolerance: f64,
    pub pf_tolerance: f64,
    pub pf_max_iterations: usize,
    pub branch_offset: bool,
    pub parallel: bool,
    pub out_dir: PathBuf,
    pub export: Export,
}

impl RunConfig {
    pub fn new(cases: Vec<CaseSource>) -> Self {
        let scan = ScanConfig::default();
        Self {
            cases,
            format: None,
            n_sides: CapabilityOptions::default().n_sides,
            n_p_samples: scan.n_p_samples,
            q_tolerance: scan.q_tolerance,
            pf_tolerance: scan.pf.tolerance,
            pf_max_iterations: scan.pf.max_iterations,
            branch_offset: true,
            parallel: false,
            out_dir: PathBuf::from("."),
            export: Export::default(),
        }
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.n_sides < 4 || !self.n_sides.is_multiple_of(2) {
            return Err(CliError::Input(format!(
                "--n-sides must be even and at least 4, got {}",
                self.n_sides
            )));
        }
        if self.n_p_samples < 2 {
            return Err(CliError::Input(format!(
                "--n-p-samples must be at least 2, got {}",
                self.n_p_samples
            )));
        }
        for (name, v) in [("--q-tol", self.q_tolerance), ("--pf-tol", self.pf_tolerance)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cases.is_empty() {
            return Err(CliError::Input("no case given".into()));
        }
        Ok(())
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            linear: LinearOptions {
                branch_offset: self.branch_offset,
            },
            capability: CapabilityOptions {
                n_sides: self.n_sides,
                ..Default::default()
            },
        }
    }

    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            n_p_samples: self.n_p_samples,
            q_tolerance: self.q_tolerance,
            parallel: self.parallel,
            pf: PfOptions {
                tolerance: self.pf_tolerance,
                max_iterations: self.pf_max_iterations,
            },
            limits: LimitTolerance::default(),
            ..Default::default()
        }
    }

    fn single_case(&self) -> Result<&CaseSource, CliError> {
        match self.cases.as_slice() {
            [one] => Ok(one),
            _ => Err(CliError::Input(format!("expected exactly one case, got {}", self.cases.len()))),
        }
    }
}

/// Artifacts written by a command and a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
}

/// Writes `contents` through a temporary file in the target directory and
/// renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(outcome: &mut Outcome, path: PathBuf, contents: &[u8]) -> Result<(), CliError> {
    write_atomic(&path, contents)?;
    outcome.written.push(path);
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

/// Polyhedral result as written by `compute`.
#[derive(Debug, Serialize)]
pub struct ComputeReport<'a> {
    pub case: &'a str,
    pub n_buses: usize,
    pub n_branches: usize,
    pub n_generators: usize,
    pub n_sides: usize,
    pub branch_offset: bool,
    pub area: f64,
    pub capability: &'a CapabilityResult,
}

/// Polyhedral polygon checked against the AC scan, as written by `validate`.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub case: String,
    pub n_buses: usize,
    pub n_sides: usize,
    pub n_p_samples: usize,
    pub q_tolerance: f64,
    pub polygon: ConvexPolygon,
    pub binding: HalfspaceSet,
    pub admissible: ConvexPolygon,
    pub resulting: ConvexPolygon,
    pub error: Option<f64>,
    pub fill_factor: Option<f64>,
    pub metrics: Metrics,
    /// Centroid of the resulting area minus centroid of the admissible area.
    pub loss_shift: Option<Point>,
    pub solves: usize,
    pub traces: usize,
    /// Wall-clock timings live in this sidecar so the report itself is
    /// reproducible byte for byte.
    pub timings_file: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timings {
    pub t_poly_s: f64,
    pub t_scan_s: f64,
}

fn polygon_csv(poly: &ConvexPolygon) -> String {
    let mut s = String::from("p_pu,q_pu\n");
    for v in &poly.vertices {
        s.push_str(&format!("{:.12},{:.12}\n", v.p, v.q));
    }
    s
}

fn family_layers(cap: &CapabilityResult) -> Vec<Layer> {
    vec![
        Layer {
            label: "generator".into(),
            polygon: cap.family_polygon(Family::Generator),
            stroke: "#2b6cb0",
            fill: "rgba(43,108,176,0.10)",
            dash: Some("6 3"),
        },
        Layer {
            label: "voltage".into(),
            polygon: cap.family_polygon(Family::Voltage),
            stroke: "#2f855a",
            fill: "rgba(47,133,90,0.10)",
            dash: Some("2 2"),
        },
        Layer {
            label: "branch".into(),
            polygon: cap.family_polygon(Family::Branch),
            stroke: "#c05621",
            fill: "rgba(192,86,33,0.10)",
            dash: Some("8 2 2 2"),
        },
        Layer {
            label: "capability".into(),
            polygon: cap.polygon.clone(),
            stroke: "black",
            fill: "rgba(0,0,0,0.15)",
            dash: None,
        },
    ]
}

/// Builds the polyhedral capability polygon of one case.
pub fn cmd_compute(config: &RunConfig) -> Result<Outcome, CliError> {
    config.check()?;
    let source = config.single_case()?;
    let case = source.load(config.format)?;
    let analysis = analyze(&case, config.analysis_options())?;
    let cap = &analysis.capability;
    let stem = source.stem();

    let mut out = Outcome::default();
    if config.export.json {
        let report = ComputeReport {
            case: &case.name,
            n_buses: case.n_buses(),
            n_branches: case.n_in_service(),
            n_generators: case.generators.len(),
            n_sides: config.n_sides,
            branch_offset: config.branch_offset,
            area: cap.polygon.area(),
            capability: cap,
        };
        emit(&mut out, config.out_dir.join(format!("{stem}.capability.json")), &to_json(&report))?;
    }
    if config.export.csv {
        emit(
            &mut out,
            config.out_dir.join(format!("{stem}.polygon.csv")),
            polygon_csv(&cap.polygon).as_bytes(),
        )?;
    }
    if config.export.svg {
        let title = format!("{}: capability polygon", case.name);
        let svg = svg::polygon_overlay(&title, &family_layers(cap));
        emit(&mut out, config.out_dir.join(format!("{stem}.capability.svg")), svg.as_bytes())?;
    }

    out.summary = if cap.empty {
        format!("{}: {}", case.name, cap.diagnostics.join("; "))
    } else {
        format!(
            "{}: {} vertices, area {:.6} pu², {} binding constraints",
            case.name,
            cap.polygon.vertices.len(),
            cap.polygon.area(),
            cap.halfspaces.len()
        )
    };
    Ok(out)
}

fn scan_csv(samples: &[ScanSample]) -> String {
    let mut s = String::from("p_pu,q_min_pu,q_max_pu,solves,nonconverged\n");
    for sample in samples {
        match &sample.extremes {
            Some(e) => s.push_str(&format!(
                "{:.12},{:.12},{:.12},{},{}\n",
                sample.p, e.q_min, e.q_max, sample.solves, sample.nonconverged
            )),
            None => s.push_str(&format!(
                "{:.12},,,{},{}\n",
                sample.p, sample.solves, sample.nonconverged
            )),
        }
    }
    s
}

/// Runs the polyhedral pipeline and the AC scan on one case and compares
/// the two.
pub fn cmd_validate(config: &RunConfig) -> Result<Outcome, CliError> {
    config.check()?;
    let source = config.single_case()?;
    let case = source.load(config.format)?;

    let start = Instant::now();
    let analysis = analyze(&case, config.analysis_options())?;
    let t_poly = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let scanned = scan(&case, &analysis.gsk, &config.scan_config())?;
    let t_scan = start.elapsed().as_secs_f64();

    let cap = &analysis.capability;
    let metrics = compute_metrics(&scanned.admissible, &cap.polygon);
    let loss_shift = match (scanned.resulting.centroid(), scanned.admissible.centroid()) {
        (Some(r), Some(a)) => Some(Point::new(r.p - a.p, r.q - a.q)),
        _ => None,
    };
    let stem = source.stem();
    let timings_name = format!("{stem}.timings.json");
    let report = ValidationReport {
        case: case.name.clone(),
        n_buses: case.n_buses(),
        n_sides: config.n_sides,
        n_p_samples: config.n_p_samples,
        q_tolerance: config.q_tolerance,
        polygon: cap.polygon.clone(),
        binding: cap.halfspaces.clone(),
        admissible: scanned.admissible.clone(),
        resulting: scanned.resulting.clone(),
        error: metrics.error,
        fill_factor: metrics.fill_factor,
        metrics,
        loss_shift,
        solves: scanned.solves,
        traces: scanned.traces,
        timings_file: timings_name.clone(),
    };

    let mut out = Outcome::default();
    if config.export.json {
        emit(&mut out, config.out_dir.join(format!("{stem}.report.json")), &to_json(&report))?;
        let timings = Timings {
            t_poly_s: t_poly,
            t_scan_s: t_scan,
        };
        emit(&mut out, config.out_dir.join(timings_name), &to_json(&timings))?;
    }
    if config.export.csv {
        emit(
            &mut out,
            config.out_dir.join(format!("{stem}.scan.csv")),
            scan_csv(&scanned.samples).as_bytes(),
        )?;
    }
    if config.export.svg {
        let layers = vec![
            Layer {
                label: "admissible (AC)".into(),
                polygon: scanned.admissible.clone(),
                stroke: "#2b6cb0",
                fill: "rgba(43,108,176,0.15)",
                dash: None,
            },
            Layer {
                label: "resulting (AC)".into(),
                polygon: scanned.resulting.clone(),
                stroke: "#c05621",
                fill: "none",
                dash: Some("6 3"),
            },
            Layer {
                label: "capability".into(),
                polygon: cap.polygon.clone(),
                stroke: "black",
                fill: "none",
                dash: None,
            },
        ];
        let svg = svg::polygon_overlay(&format!("{}: capability vs. AC scan", case.name), &layers);
        emit(&mut out, config.out_dir.join(format!("{stem}.validate.svg")), svg.as_bytes())?;
    }

    let pct = |x: Option<f64>| x.map(|v| format!("{:.2}%", 100.0 * v)).unwrap_or_else(|| "n/a".into());
    out.summary = format!(
        "{}: error {}, fill factor {}, t_poly {:.3e} s, t_scan {:.3e} s",
        case.name,
        pct(metrics.error),
        pct(metrics.fill_factor),
        t_poly,
        t_scan
    );
    Ok(out)
}

/// Per-case result of `bench`.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub case: String,
    pub result: Result<BenchRecord, String>,
}

pub const BENCH_CSV_HEADER: &str = "case,n_buses,t_poly_s,t_scan_s,status";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{BENCH_CSV_HEADER}\n");
    for row in rows {
        let case = row.case.replace(',', "_");
        match &row.result {
            Ok(r) => s.push_str(&format!("{case},{},ok\n", r.csv_row())),
            Err(e) => s.push_str(&format!("{case},,,,\"failed: {}\"\n", e.replace('"', "'"))),
        }
    }
    s
}

/// Times the polyhedral pipeline and the AC scan on each case. Failing
/// cases are recorded and skipped.
pub fn cmd_bench(config: &RunConfig) -> Result<(Outcome, Vec<BenchRow>), CliError> {
    config.check()?;
    if config.cases.len() < 2 {
        return Err(CliError::Input("need ≥2 cases for regression".into()));
    }
    let sequential = ScanConfig {
        parallel: false,
        ..config.scan_config()
    };
    let mut rows = Vec::new();
    for source in &config.cases {
        let result = source
            .load(config.format)
            .and_then(|case| pqcap::scanner::benchmark(&case, config.analysis_options(), &sequential).map_err(CliError::from));
        if let Err(e) = &result {
            log::warn!("{source}: {e}");
        }
        rows.push(BenchRow {
            case: source.to_string(),
            result: result.map_err(|e| e.to_string()),
        });
    }

    let ok: Vec<&BenchRecord> = rows.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let poly: Vec<(f64, f64)> = ok.iter().map(|r| (r.n_buses as f64, r.t_poly)).collect();
    let scan_t: Vec<(f64, f64)> = ok.iter().map(|r| (r.n_buses as f64, r.t_scan)).collect();

    let mut out = Outcome::default();
    emit(&mut out, config.out_dir.join("bench.csv"), bench_csv(&rows).as_bytes())?;
    if config.export.svg {
        let series = [
            Series {
                label: "polyhedral".into(),
                points: poly.clone(),
                color: "#2b6cb0",
            },
            Series {
                label: "AC scan".into(),
                points: scan_t.clone(),
                color: "#c05621",
            },
        ];
        let svg = svg::semilog_plot("Computation time", "buses", "time (s)", &series);
        emit(&mut out, config.out_dir.join("bench.svg"), svg.as_bytes())?;
    }
    let slope = |pts: &[(f64, f64)]| {
        semilog_slope(pts)
            .map(|m| format!("{m:.4e}"))
            .unwrap_or_else(|| "n/a".into())
    };
    out.summary = format!(
        "{} of {} cases timed; ln(t) slope per bus: polyhedral {}, scan {}",
        ok.len(),
        rows.len(),
        slope(&poly),
        slope(&scan_t)
    );
    Ok((out, rows))
}

#[derive(Debug, Parser)]
#[command(name = "pqcap", version, about = "PQ capability areas of distribution grids at the feeder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the polyhedral capability polygon of a case.
    Compute {
        /// Case file, `bundled:<name>` or `synthetic:<buses>`.
        case: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare the capability polygon with an AC power flow scan.
    Validate {
        case: String,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Time the polyhedral pipeline and the scan over several cases.
    Bench {
        #[arg(required = true)]
        cases: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scan: ScanArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Case format: json or matpower (default: from the file extension).
    #[arg(long)]
    pub format: Option<String>,
    /// Sides of the polygon replacing each branch rating circle.
    #[arg(long, default_value_t = 8)]
    pub n_sides: usize,
    /// Drop the constant branch-flow term of the linear model.
    #[arg(long)]
    pub no_branch_offset: bool,
    /// Output directory.
    #[arg(long, short, env = OUTPUT_DIR_ENV, default_value = ".")]
    pub out: PathBuf,
    /// Skip the JSON output.
    #[arg(long)]
    pub no_json: bool,
    /// Also write CSV output.
    #[arg(long)]
    pub csv: bool,
    /// Also write an SVG figure.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Active power samples of the scan.
    #[arg(long, default_value_t = 100)]
    pub n_p_samples: usize,
    /// Bisection tolerance on Q (pu).
    #[arg(long, default_value_t = 1e-4)]
    pub q_tol: f64,
    /// Newton mismatch tolerance (pu).
    #[arg(long, default_value_t = 1e-8)]
    pub pf_tol: f64,
    /// Newton iteration limit.
    #[arg(long, default_value_t = 50)]
    pub pf_max_iter: usize,
    /// Scan P samples on all cores.
    #[arg(long)]
    pub parallel: bool,
}

fn parse_sources(raw: &[String]) -> Result<Vec<CaseSource>, CliError> {
    raw.iter()
        .map(|s| s.parse().map_err(CliError::Input))
        .collect()
}

fn apply_common(config: &mut RunConfig, common: &CommonArgs) -> Result<(), CliError> {
    config.format = common
        .format
        .as_deref()
        .map(|f| f.parse().map_err(CliError::Input))
        .transpose()?;
    config.n_sides = common.n_sides;
    config.branch_offset = !common.no_branch_offset;
    config.out_dir = common.out.clone();
    config.export = Export {
        json: !common.no_json,
        csv: common.csv,
        svg: common.svg,
    };
    Ok(())
}

fn apply_scan(config: &mut RunConfig, scan: &ScanArgs) {
    config.n_p_samples = scan.n_p_samples;
    config.q_tolerance = scan.q_tol;
    config.pf_tolerance = scan.pf_tol;
    config.pf_max_iterations = scan.pf_max_iter;
    config.parallel = scan.parallel;
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Compute { case, common } => {
            let mut config = RunConfig::new(parse_sources(std::slice::from_ref(case))?);
            apply_common(&mut config, common)?;
            cmd_compute(&config)
        }
        Command::Validate { case, common, scan } => {
            let mut config = RunConfig::new(parse_sources(std::slice::from_ref(case))?);
            apply_common(&mut config, common)?;
            apply_scan(&mut config, scan);
            cmd_validate(&config)
        }
        Command::Bench { cases, common, scan } => {
            let mut config = RunConfig::new(parse_sources(cases)?);
            apply_common(&mut config, common)?;
            apply_scan(&mut config, scan);
            cmd_bench(&config).map(|(out, _)| out)
        }
    }
}
