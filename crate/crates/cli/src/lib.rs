//! Batch front end: reads tracking files, runs the formation pipeline and
//! writes timeline, label, config and optional SVG outputs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use formfit_core::pipeline::{self, StreamTimeline};
use formfit_core::render::{render_match, RenderSpec, ShowFlags};
use formfit_core::synthetic::{self, SyntheticConfig};
use formfit_core::templates::{validate_document, DEFAULT_TEMPLATES};
use formfit_core::{
    ingest, FrameRecord, MatchMeta, PipelineConfig, Registry, Scaling, Segment, SegmentPolicy, SubstitutionMode,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Config(_) => EXIT_CONFIG,
        }
    }
}

impl From<formfit_core::Error> for CliError {
    fn from(e: formfit_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "formfit", version, about = "Formation detection and position labelling from tracking data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect formations over segments of a match.
    Run(RunArgs),
    /// Check a template file (the bundled set when no path is given).
    ValidateTemplates { path: Option<PathBuf> },
    /// Write a seeded synthetic match (tracking.csv and meta.toml).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Tracking CSV; repeat for matches split over several files.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Match metadata (TOML).
    #[arg(long)]
    pub meta: PathBuf,
    /// Template file replacing the bundled set.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Comma-separated subset of formation names.
    #[arg(long, value_delimiter = ',')]
    pub formations: Option<Vec<String>>,
    /// frame, possession, period, or a duration such as 10s or 5m.
    #[arg(long, default_value = "5m")]
    pub every: String,
    #[arg(long, default_value = "drop")]
    pub substitutions: String,
    /// Relative change threshold.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long)]
    pub change_after_possession: bool,
    #[arg(long)]
    pub no_scaling: bool,
    /// Do not split segments into attacking and defending phases.
    #[arg(long)]
    pub no_phase_split: bool,
    /// Skip segments with fewer frames than this.
    #[arg(long, default_value_t = 1)]
    pub min_frames: usize,
    /// Also write one SVG per matched segment.
    #[arg(long)]
    pub render: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2022)]
    pub seed: u64,
    /// Length of each period in minutes.
    #[arg(long, default_value_t = 6)]
    pub minutes: u32,
}

/// The resolved configuration echoed to `config.toml`. Thread count and output
/// directory are left out so that equal runs produce equal files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: Vec<String>,
    pub meta: String,
    pub templates: Option<String>,
    pub formations: Option<Vec<String>>,
    pub every: String,
    pub substitutions: SubstitutionMode,
    pub change_threshold: f64,
    pub change_after_possession: bool,
    pub scaling: bool,
    pub split_phase: bool,
    pub min_frames: usize,
    pub render: bool,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<(RunConfig, PipelineConfig), CliError> {
        let policy: SegmentPolicy = self.every.parse()?;
        let substitutions: SubstitutionMode = self.substitutions.parse()?;
        formfit_core::stability::check_epsilon(self.epsilon)?;
        if self.threads == Some(0) {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        let formations =
            self.formations.as_ref().map(|names| names.iter().map(|n| n.trim().to_owned()).collect::<Vec<_>>());
        let pipeline = PipelineConfig {
            policy,
            split_phase: !self.no_phase_split,
            substitutions,
            epsilon: self.epsilon,
            change_after_possession: self.change_after_possession,
            scaling: if self.no_scaling { Scaling::Disabled } else { Scaling::Enabled },
            min_frames: self.min_frames,
            formations: formations.clone(),
        };
        let echo = RunConfig {
            inputs: self.inputs.iter().map(|p| p.display().to_string()).collect(),
            meta: self.meta.display().to_string(),
            templates: self.templates.as_ref().map(|p| p.display().to_string()),
            formations,
            every: policy.to_string(),
            substitutions,
            change_threshold: self.epsilon,
            change_after_possession: self.change_after_possession,
            scaling: !self.no_scaling,
            split_phase: !self.no_phase_split,
            min_frames: self.min_frames,
            render: self.render,
        };
        Ok((echo, pipeline))
    }
}

fn load_registry(path: Option<&Path>) -> Result<Registry, CliError> {
    match path {
        None => Ok(Registry::bundled().clone()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            Registry::from_document(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn load_records(inputs: &[PathBuf], meta: &MatchMeta) -> Result<Vec<FrameRecord>, CliError> {
    let mut records = Vec::new();
    for path in inputs {
        let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
        let mut part = ingest::parse(std::io::BufReader::new(file), meta)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        records.append(&mut part);
    }
    if inputs.len() > 1 {
        records.sort_by(|a, b| {
            (a.period, a.frame_id, &a.team_id, &a.player_id).cmp(&(b.period, b.frame_id, &b.team_id, &b.player_id))
        });
        if let Some(w) = records.windows(2).find(|w| {
            (w[0].period, w[0].frame_id, &w[0].team_id, &w[0].player_id)
                == (w[1].period, w[1].frame_id, &w[1].team_id, &w[1].player_id)
        }) {
            return Err(CliError::Input(format!(
                "player {} appears twice in frame {} of period {} across input files",
                w[0].player_id, w[0].frame_id, w[0].period
            )));
        }
    }
    Ok(ingest::normalize_orientation(records, meta)?)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn opt_cost(c: Option<f64>) -> String {
    c.map(|c| format!("{c:.6}")).unwrap_or_default()
}

pub const TIMELINE_HEADER: &str = "team,phase,period,window,start_frame,end_frame,start_time,end_time,frames,players,status,candidate_formation,candidate_cost,incumbent_formation,incumbent_cost,adopted_formation,changed,reset";
pub const LABELS_HEADER: &str = "team,phase,period,window,start_frame,end_frame,formation,player_id,position";

/// One row per segment, matched or skipped, in segment order within each stream.
pub fn timeline_csv(streams: &[StreamTimeline]) -> String {
    let mut out = String::new();
    out.push_str(TIMELINE_HEADER);
    out.push('\n');
    for stream in streams {
        let mut rows: Vec<(&Segment, String)> = Vec::new();
        for e in &stream.timeline.entries {
            let incumbent = e.incumbent.as_ref();
            rows.push((
                &e.segment,
                format!(
                    "matched,{},{:.6},{},{},{},{},{}",
                    csv_field(&e.candidate.formation),
                    e.candidate_cost(),
                    csv_field(incumbent.map(|m| m.formation.as_str()).unwrap_or("")),
                    opt_cost(e.incumbent_cost()),
                    csv_field(e.adopted_formation()),
                    e.changed,
                    e.reset
                ),
            ));
        }
        for sk in &stream.skipped {
            rows.push((&sk.segment, format!("{},,,,,,,", csv_field(&format!("skipped: {}", sk.reason)))));
        }
        rows.sort_by_key(|(s, _)| (s.period, s.window));
        for (s, tail) in &rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.3},{:.3},{},{},{}",
                csv_field(stream.team_id.as_str()),
                stream.phase,
                s.period,
                s.window,
                s.frame_range.0,
                s.frame_range.1,
                s.time_range.0,
                s.time_range.1,
                s.frame_count,
                s.mean_positions.len(),
                tail
            );
        }
    }
    out
}

/// Adopted label of every kept player in every matched segment.
pub fn labels_csv(streams: &[StreamTimeline]) -> String {
    let mut out = String::new();
    out.push_str(LABELS_HEADER);
    out.push('\n');
    for stream in streams {
        for e in &stream.timeline.entries {
            let s = &e.segment;
            for (player, label) in e.adopted_labels() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    csv_field(stream.team_id.as_str()),
                    stream.phase,
                    s.period,
                    s.window,
                    s.frame_range.0,
                    s.frame_range.1,
                    csv_field(e.adopted_formation()),
                    csv_field(player.as_str()),
                    csv_field(label.as_str())
                );
            }
        }
    }
    out
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Renders every matched segment with its adopted formation.
pub fn svgs(streams: &[StreamTimeline], meta: &MatchMeta) -> Result<Vec<(String, String)>, CliError> {
    let spec = RenderSpec::new(meta.pitch_length, meta.pitch_width, ShowFlags::ALL)?;
    let mut out = Vec::new();
    for stream in streams {
        for e in &stream.timeline.entries {
            let s = &e.segment;
            let name = format!(
                "svg/{}_{}_p{}_w{:03}.svg",
                file_stem(stream.team_id.as_str()),
                stream.phase,
                s.period,
                s.window
            );
            out.push((name, render_match(s, e.adopted_result(), &spec)?));
        }
    }
    Ok(out)
}

/// Every output file of a run, as (path relative to the output dir, contents).
pub fn compute_outputs(args: &RunArgs) -> Result<Vec<(String, String)>, CliError> {
    let (echo, config) = args.resolve()?;
    let registry = load_registry(args.templates.as_deref())?;
    let meta_text = fs::read_to_string(&args.meta).map_err(|e| io_error(&args.meta, e))?;
    let meta =
        MatchMeta::from_toml(&meta_text).map_err(|e| CliError::Input(format!("{}: {e}", args.meta.display())))?;
    let records = load_records(&args.inputs, &meta)?;

    let streams = match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| pipeline::run(&records, &registry, &config))?
        }
        None => pipeline::run(&records, &registry, &config)?,
    };

    let echo = toml::to_string(&echo).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))?;
    let mut files = vec![
        ("timeline.csv".to_owned(), timeline_csv(&streams)),
        ("labels.csv".to_owned(), labels_csv(&streams)),
        ("config.toml".to_owned(), echo),
    ];
    if args.render {
        files.extend(svgs(&streams, &meta)?);
    }
    Ok(files)
}

/// Writes `files` under `dir`. On failure everything written by this call is
/// removed again, including directories it created.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut dirs: BTreeSet<PathBuf> = BTreeSet::new();
        for (rel, _) in files {
            if let Some(parent) = dir.join(rel).parent() {
                dirs.insert(parent.to_path_buf());
            }
        }
        dirs.insert(dir.to_path_buf());
        for d in &dirs {
            let mut missing = Vec::new();
            let mut cur = d.as_path();
            while !cur.exists() {
                missing.push(cur.to_path_buf());
                match cur.parent() {
                    Some(p) if !p.as_os_str().is_empty() => cur = p,
                    _ => break,
                }
            }
            fs::create_dir_all(d).map_err(|e| io_error(d, e))?;
            created_dirs.extend(missing.into_iter().rev());
        }
        for (rel, contents) in files {
            let path = dir.join(rel);
            fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
            written.push(path);
        }
        Ok(())
    })();
    if result.is_err() {
        for f in &written {
            let _ = fs::remove_file(f);
        }
        for d in created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
    result
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let files = compute_outputs(args)?;
    write_outputs(&args.out, &files)
}

/// Prints the validation report; returns whether the document is valid.
pub fn validate_templates(path: Option<&Path>, out: &mut String) -> Result<bool, CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| io_error(p, e))?,
        None => DEFAULT_TEMPLATES.to_owned(),
    };
    let report = validate_document(&text)?;
    for (name, count) in &report.slot_counts {
        let _ = writeln!(out, "{name}\t{count} slots");
    }
    let hist: Vec<String> = report.count_histogram().iter().map(|(n, k)| format!("{k} x {n}")).collect();
    let _ = writeln!(out, "templates: {} ({})", report.slot_counts.len(), hist.join(", "));
    match &report.bounds {
        Some(b) => {
            let _ = writeln!(out, "bounds: x [{}, {}], y [{}, {}]", b.min_x, b.max_x, b.min_y, b.max_y);
        }
        None => {
            let _ = writeln!(out, "bounds: none");
        }
    }
    let _ = writeln!(out, "violations: {}", report.violations.len());
    for v in &report.violations {
        let _ = writeln!(out, "  {v}");
    }
    Ok(report.is_valid())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let config = SyntheticConfig {
        seed: args.seed,
        period_seconds: args.minutes.saturating_mul(60),
        ..SyntheticConfig::default()
    };
    let m = synthetic::generate(&config, Registry::bundled())?;
    let mut tracking = Vec::new();
    ingest::write_records(&m.records, &mut tracking)?;
    let files = vec![
        ("tracking.csv".to_owned(), String::from_utf8(tracking).expect("csv output is utf-8")),
        ("meta.toml".to_owned(), m.meta.to_toml()),
    ];
    write_outputs(&args.out, &files)
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => run(&args).map(|_| EXIT_OK),
        Command::Synth(args) => synth(&args).map(|_| EXIT_OK),
        Command::ValidateTemplates { path } => {
            let mut report = String::new();
            let valid = validate_templates(path.as_deref(), &mut report);
            print!("{report}");
            valid.map(|ok| if ok { EXIT_OK } else { EXIT_INPUT })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("formfit: {e}");
            e.exit_code()
        }
    }
}
