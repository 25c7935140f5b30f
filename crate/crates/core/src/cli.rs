//! Batch command-line interface: `synth`, `run`, `score` and `import`.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 validation error,
//! 4 numerical or cross-validation failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    import_csv, load_dataset, save_dataset, ContrastDataset, GridGeometry, TaskPair,
};
use crate::error::{Error, Result};
use crate::linmodel::ClassifierKind;
use crate::par;
use crate::protocols::{
    inline_curve, selection_transfer_curve, source_selections, transfer_curve, AccuracyCurve,
    InlineSelection, ProtocolConfig,
};
use crate::scale::{
    compare_curves_with, p_curve_area, select_scale_selection, select_scale_transfer,
    CurveComparison, ScaleDecision, DEFAULT_ALPHA,
};
use crate::selection::VoxelSelection;
use crate::stats::TTestKind;
use crate::synth::{generate_pair, selectivity_scores, GroundTruth, SyntheticSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "xferscope",
    version,
    about = "Cross-task transfer analysis over voxel-selection scales"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic task pair and its ground truth.
    Synth { spec: PathBuf, out_dir: PathBuf },
    /// Run the three protocols and write curves, comparisons and the report.
    Run(RunArgs),
    /// Score a selection file against a ground-truth file.
    Score { selection: PathBuf, truth: PathBuf },
    /// Convert a CSV dataset (label column then one column per voxel) to XFD1.
    Import {
        csv: PathBuf,
        out: PathBuf,
        #[arg(long, value_parser = parse_dims)]
        dims: Option<[usize; 3]>,
    },
}

/// Flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub min_voxels: Option<usize>,
    #[arg(long, value_parser = ["svc", "logreg"])]
    pub classifier: Option<String>,
    #[arg(long, value_parser = ["foldwise", "wholetask"])]
    pub inline_selection: Option<String>,
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
    #[arg(long)]
    pub from_csv: bool,
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected X,Y,Z, got {s:?}"));
    }
    let mut dims = [0; 3];
    for (d, p) in dims.iter_mut().zip(&parts) {
        *d = p.parse().map_err(|_| format!("bad dimension {p:?}"))?;
    }
    Ok(dims)
}

/// Transfer direction relative to the configured (source, target) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "A→B", alias = "AB", alias = "A->B", alias = "forward")]
    Forward,
    #[serde(rename = "B→A", alias = "BA", alias = "B->A", alias = "reverse")]
    Reverse,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Forward => "A→B",
            Direction::Reverse => "B→A",
        }
    }

    fn file_tag(self) -> &'static str {
        match self {
            Direction::Forward => "ab",
            Direction::Reverse => "ba",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_directions() -> Vec<Direction> {
    vec![Direction::Forward, Direction::Reverse]
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Csv, ReportFormat::Json]
}

/// Contents of a `run` config file. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_spec: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(flatten)]
    pub protocol: ProtocolConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub t_test: TTestKind,
    #[serde(default = "default_directions")]
    pub directions: Vec<Direction>,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
    /// Source and target are CSV files; requires `dims`.
    #[serde(default)]
    pub from_csv: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 3]>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.source, &mut cfg.target, &mut cfg.synthetic_spec]
            .into_iter()
            .flatten()
        {
            *p = base.join(&*p);
        }
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn apply(&mut self, args: &RunArgs) -> Result<()> {
        if let Some(s) = args.seed {
            self.protocol.seed = s;
        }
        if let Some(a) = args.alpha {
            self.alpha = a;
        }
        if let Some(n) = args.n_points {
            self.protocol.n_points = n;
        }
        if let Some(m) = args.min_voxels {
            self.protocol.min_voxels = m;
        }
        if let Some(c) = &args.classifier {
            self.protocol.classifier = c.parse::<ClassifierKind>()?;
        }
        if let Some(m) = &args.inline_selection {
            self.protocol.inline_selection = m.parse::<InlineSelection>()?;
        }
        if let Some(d) = args.dims {
            self.dims = Some(d);
        }
        if args.from_csv {
            self.from_csv = true;
        }
        if let Some(o) = &args.output_dir {
            self.output_dir = o.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let has_pair = self.source.is_some() || self.target.is_some();
        match (has_pair, &self.synthetic_spec) {
            (true, Some(_)) => {
                return Err(Error::Config(
                    "give either source/target or synthetic_spec, not both".into(),
                ))
            }
            (false, None) => {
                return Err(Error::Config(
                    "no input: set source and target, or synthetic_spec".into(),
                ))
            }
            (true, None) if self.source.is_none() || self.target.is_none() => {
                return Err(Error::Config("both source and target are required".into()))
            }
            _ => {}
        }
        if self.from_csv && self.dims.is_none() {
            return Err(Error::Config("from_csv requires dims".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha = {} outside (0, 1]",
                self.alpha
            )));
        }
        if self.directions.is_empty() {
            return Err(Error::Config("no directions requested".into()));
        }
        self.protocol.validate()
    }
}

/// Settings echoed into every report row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    #[serde(flatten)]
    pub protocol: ProtocolConfig,
    pub alpha: f64,
    pub t_test: TTestKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferSummary {
    pub method: crate::scale::ScaleMethod,
    pub selected_percent: f64,
    pub selected_fraction: f64,
    pub min_mean_diff: f64,
}

/// One row of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub pair: String,
    pub direction: &'static str,
    pub source: String,
    pub target: String,
    pub method: crate::scale::ScaleMethod,
    pub selected_percent: f64,
    pub selected_fraction: f64,
    pub exhausted: bool,
    pub area_under_p_curve: f64,
    pub alpha: f64,
    pub config: ReportConfig,
    pub seed: u64,
    pub transfer_learning: TransferSummary,
}

/// Everything computed for one direction.
#[derive(Debug, Clone)]
pub struct DirectionResult {
    pub direction: Direction,
    pub inline: AccuracyCurve,
    pub transfer: AccuracyCurve,
    pub selection: AccuracyCurve,
    pub transfer_cmp: CurveComparison,
    pub selection_cmp: CurveComparison,
    pub selection_scale: ScaleDecision,
    pub transfer_scale: ScaleDecision,
    pub area: f64,
    pub selected_voxels: VoxelSelection,
    pub row: ReportRow,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn context(label: &str, e: Error) -> Error {
    match e {
        Error::Protocol {
            role,
            fraction,
            replicate,
            source,
        } => Error::Protocol {
            role,
            fraction,
            replicate,
            source: Box::new(context(label, *source)),
        },
        Error::Config(m) => Error::Config(format!("{label}: {m}")),
        Error::Data(m) => Error::Data(format!("{label}: {m}")),
        Error::Stat(m) => Error::Stat(format!("{label}: {m}")),
        Error::Fit(m) => Error::Fit(format!("{label}: {m}")),
        Error::Cv(m) => Error::Cv(format!("{label}: {m}")),
        Error::Grid(m) => Error::Grid(format!("{label}: {m}")),
        Error::Dim(m) => Error::Dim(format!("{label}: {m}")),
        other => other,
    }
}

/// Runs all three protocols, the comparisons and both scale selectors for
/// one direction of `pair` (already oriented source to target).
pub fn analyze_direction(
    pair: &TaskPair,
    cfg: &ExperimentConfig,
    direction: Direction,
    pair_name: &str,
) -> Result<DirectionResult> {
    let p = &cfg.protocol;
    let inline = inline_curve(pair.target(), p)?;
    let transfer = transfer_curve(pair, p)?;
    let selection = selection_transfer_curve(pair, p)?;
    let transfer_cmp = compare_curves_with(&inline, &transfer, cfg.t_test)?;
    let selection_cmp = compare_curves_with(&inline, &selection, cfg.t_test)?;
    let selection_scale = select_scale_selection(&selection_cmp, cfg.alpha)?;
    let transfer_scale = select_scale_transfer(&transfer_cmp);
    let area = p_curve_area(&selection_cmp);
    let selected_voxels = source_selections(pair.source(), p)?.swap_remove(selection_scale.index);
    let row = ReportRow {
        pair: pair_name.to_string(),
        direction: direction.label(),
        source: pair.source().name().to_string(),
        target: pair.target().name().to_string(),
        method: selection_scale.method,
        selected_percent: round2(selection_scale.selected_percent),
        selected_fraction: selection_scale.selected_fraction,
        exhausted: selection_scale.exhausted,
        area_under_p_curve: area,
        alpha: cfg.alpha,
        config: ReportConfig {
            protocol: p.clone(),
            alpha: cfg.alpha,
            t_test: cfg.t_test,
        },
        seed: p.seed,
        transfer_learning: TransferSummary {
            method: transfer_scale.method,
            selected_percent: round2(transfer_scale.selected_percent),
            selected_fraction: transfer_scale.selected_fraction,
            min_mean_diff: transfer_cmp.mean_diff[transfer_scale.index],
        },
    };
    Ok(DirectionResult {
        direction,
        inline,
        transfer,
        selection,
        transfer_cmp,
        selection_cmp,
        selection_scale,
        transfer_scale,
        area,
        selected_voxels,
        row,
    })
}

fn load_input(path: &Path, cfg: &ExperimentConfig) -> Result<ContrastDataset> {
    let d = if cfg.from_csv {
        let dims = cfg
            .dims
            .ok_or_else(|| Error::Config("from_csv requires dims".into()))?;
        import_csv(path, GridGeometry::new(dims)?)?
    } else {
        load_dataset(path)?
    };
    if let Some(dims) = cfg.dims {
        if d.geometry().dims() != dims {
            return Err(Error::Dim(format!(
                "{}: geometry {:?} does not match dims {:?}",
                path.display(),
                d.geometry().dims(),
                dims
            )));
        }
    }
    Ok(d)
}

/// Loads or generates the configured pair. The ground truth is returned for
/// synthetic inputs.
pub fn load_pair(cfg: &ExperimentConfig) -> Result<(TaskPair, Option<GroundTruth>)> {
    if let Some(spec_path) = &cfg.synthetic_spec {
        let spec = load_spec(spec_path)?;
        let (pair, truth) = generate_pair(&spec)?;
        return Ok((pair, Some(truth)));
    }
    let (Some(s), Some(t)) = (&cfg.source, &cfg.target) else {
        return Err(Error::Config("both source and target are required".into()));
    };
    Ok((
        TaskPair::new(load_input(s, cfg)?, load_input(t, cfg)?)?,
        None,
    ))
}

pub fn load_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Computes every requested direction. No files are written.
pub fn run_experiment(cfg: &ExperimentConfig, pair: &TaskPair) -> Result<Vec<DirectionResult>> {
    cfg.validate()?;
    let pair_name = format!("{}/{}", pair.source().name(), pair.target().name());
    cfg.directions
        .iter()
        .map(|&d| {
            let oriented = match d {
                Direction::Forward => pair.clone(),
                Direction::Reverse => pair.reversed(),
            };
            analyze_direction(&oriented, cfg, d, &pair_name).map_err(|e| context(d.label(), e))
        })
        .collect()
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn curve_csv(
    results: &[DirectionResult],
    pick: impl Fn(&DirectionResult) -> &AccuracyCurve,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["direction", "role", "fraction", "replicate_id", "accuracy"])
        .map_err(fail)?;
    for r in results {
        let curve = pick(r);
        for (i, &f) in curve.fractions().iter().enumerate() {
            for (j, a) in curve.row(i).iter().enumerate() {
                w.write_record([
                    r.direction.label().to_string(),
                    curve.role.name().to_string(),
                    f.to_string(),
                    j.to_string(),
                    a.to_string(),
                ])
                .map_err(fail)?;
            }
        }
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

#[derive(Serialize)]
struct ComparisonRecord<'a> {
    direction: &'static str,
    reference: &'static str,
    candidate: &'static str,
    #[serde(flatten)]
    comparison: &'a CurveComparison,
}

#[derive(Serialize)]
struct CurveRecord<'a> {
    direction: &'static str,
    role: &'static str,
    fractions: &'a [f64],
    mean: &'a [f64],
    selection_sizes: &'a [usize],
}

#[derive(Serialize)]
struct CurveSummary<'a> {
    seed: u64,
    config: &'a ReportConfig,
    curves: Vec<CurveRecord<'a>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub direction: String,
    pub fraction: f64,
    pub percent: f64,
    pub dims: [usize; 3],
    pub indices: Vec<usize>,
}

/// Writes all artifacts for `results` into `cfg.output_dir`.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    pair: &TaskPair,
    results: &[DirectionResult],
    truth: Option<&GroundTruth>,
) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if cfg.formats.contains(&ReportFormat::Csv) {
        write_file(
            &dir.join("curve_inline.csv"),
            &curve_csv(results, |r| &r.inline)?,
        )?;
        write_file(
            &dir.join("curve_transfer.csv"),
            &curve_csv(results, |r| &r.transfer)?,
        )?;
        write_file(
            &dir.join("curve_selection.csv"),
            &curve_csv(results, |r| &r.selection)?,
        )?;
    }
    if cfg.formats.contains(&ReportFormat::Json) {
        let cmp = |candidate: &'static str,
                   pick: fn(&DirectionResult) -> &CurveComparison|
         -> Vec<ComparisonRecord<'_>> {
            results
                .iter()
                .map(|r| ComparisonRecord {
                    direction: r.direction.label(),
                    reference: "inline",
                    candidate,
                    comparison: pick(r),
                })
                .collect()
        };
        write_file(
            &dir.join("comparison_transfer.json"),
            &to_json(&cmp("transfer", |r| &r.transfer_cmp))?,
        )?;
        write_file(
            &dir.join("comparison_selection.json"),
            &to_json(&cmp("selection", |r| &r.selection_cmp))?,
        )?;
        let config = ReportConfig {
            protocol: cfg.protocol.clone(),
            alpha: cfg.alpha,
            t_test: cfg.t_test,
        };
        let curves = results
            .iter()
            .flat_map(|r| [&r.inline, &r.transfer, &r.selection].map(|c| (r.direction, c)))
            .map(|(d, c)| CurveRecord {
                direction: d.label(),
                role: c.role.name(),
                fractions: c.fractions(),
                mean: &c.mean,
                selection_sizes: &c.selection_sizes,
            })
            .collect();
        write_file(
            &dir.join("curves.json"),
            &to_json(&CurveSummary {
                seed: cfg.protocol.seed,
                config: &config,
                curves,
            })?,
        )?;
    }
    let rows: Vec<&ReportRow> = results.iter().map(|r| &r.row).collect();
    write_file(&dir.join("report.json"), &to_json(&rows)?)?;
    let dims = pair.source().geometry().dims();
    for r in results {
        let file = SelectionFile {
            direction: r.direction.label().to_string(),
            fraction: r.selection_scale.selected_fraction,
            percent: round2(r.selection_scale.selected_percent),
            dims,
            indices: r.selected_voxels.indices().to_vec(),
        };
        write_file(
            &dir.join(format!("selection_{}.json", r.direction.file_tag())),
            &to_json(&file)?,
        )?;
    }
    if let Some(t) = truth {
        write_file(&dir.join("truth.json"), &to_json(t)?)?;
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Io { .. } | Error::Format(_) => EXIT_INPUT,
        Error::Config(_)
        | Error::Data(_)
        | Error::Index { .. }
        | Error::Dim(_)
        | Error::Grid(_) => EXIT_VALIDATION,
        Error::Stat(_) | Error::Fit(_) | Error::Cv(_) | Error::Protocol { .. } => EXIT_NUMERIC,
    }
}

fn report(result: Result<()>) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("xferscope: {e}");
            exit_code(&e)
        }
    }
}

pub fn synth(spec_path: &Path, out_dir: &Path) -> Result<()> {
    let spec = load_spec(spec_path)?;
    let (pair, truth) = generate_pair(&spec)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    save_dataset(pair.source(), out_dir.join("source.xfd"))?;
    save_dataset(pair.target(), out_dir.join("target.xfd"))?;
    write_file(&out_dir.join("truth.json"), &to_json(&truth)?)
}

pub fn cmd_synth(spec_path: &Path, out_dir: &Path) -> i32 {
    report(synth(spec_path, out_dir))
}

pub fn run(args: &RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply(args)?;
    cfg.validate()?;
    par::with_threads(par::requested_threads(), || {
        let (pair, truth) = load_pair(&cfg)?;
        let results = run_experiment(&cfg, &pair)?;
        write_outputs(&cfg, &pair, &results, truth.as_ref())
    })
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    report(run(args))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SelectionInput {
    File(SelectionFile),
    Bare(Vec<usize>),
}

/// Precision/recall/dice JSON (4 decimals) against the three truth masks.
pub fn score(selection_path: &Path, truth_path: &Path) -> Result<String> {
    let text = fs::read_to_string(selection_path).map_err(|e| Error::io(selection_path, e))?;
    let sel: SelectionInput = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", selection_path.display())))?;
    let indices = match sel {
        SelectionInput::File(f) => f.indices,
        SelectionInput::Bare(v) => v,
    };
    if indices.is_empty() {
        return Err(Error::Format(format!(
            "{}: empty selection",
            selection_path.display()
        )));
    }
    let text = fs::read_to_string(truth_path).map_err(|e| Error::io(truth_path, e))?;
    let truth: GroundTruth = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", truth_path.display())))?;
    let k = GridGeometry::new(truth.dims)?.voxel_count();
    if let Some(&bad) = indices.iter().find(|&&i| i >= k) {
        return Err(Error::Index { index: bad, len: k });
    }
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"n_selected\": {},", indices.len());
    let masks = [
        ("shared", &truth.shared_mask),
        ("source", &truth.source_mask),
        ("target", &truth.target_mask),
    ];
    for (i, (name, mask)) in masks.iter().enumerate() {
        let s = selectivity_scores(&indices, mask);
        let sep = if i + 1 < masks.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "  \"{name}\": {{\"precision\": {:.4}, \"recall\": {:.4}, \"dice\": {:.4}}}{sep}",
            s.precision, s.recall, s.dice
        );
    }
    out.push('}');
    Ok(out)
}

pub fn cmd_score(selection_path: &Path, truth_path: &Path) -> i32 {
    report(score(selection_path, truth_path).map(|s| println!("{s}")))
}

pub fn import(csv_path: &Path, out: &Path, dims: Option<[usize; 3]>) -> Result<()> {
    let dims = dims.ok_or_else(|| Error::Config("--dims X,Y,Z is required".into()))?;
    let d = import_csv(csv_path, GridGeometry::new(dims)?)?;
    save_dataset(&d, out)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    main_from(std::env::args_os())
}

pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Synth { spec, out_dir } => cmd_synth(&spec, &out_dir),
        Command::Run(args) => cmd_run(&args),
        Command::Score { selection, truth } => cmd_score(&selection, &truth),
        Command::Import { csv, out, dims } => report(import(&csv, &out, dims)),
    }
}
