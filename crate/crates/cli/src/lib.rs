//! Command implementations behind the `specforge` binary.
//!
//! Every command is a pure function of its flags. Generated spec files echo
//! the effective configuration in their `params` so a file can be traced
//! back to the run that produced it.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use specforge::dataset::{self, LabelColumn};
use specforge::generators::{self, ClusterParams, GridParams, TreeParams, DEFAULT_CELL_CAP};
use specforge::spec::{load_specset, save_specset};
use specforge::verifier::{load_network, verify_all, CounterexampleSource, Sampler};
use specforge::{Dataset, DatasetStats, EvalReport, OutputConstraint, SpecSet, TaskKind};

pub mod args;
pub mod render;

pub use args::{Algo, Cli, Command};

/// Environment variable overriding the grid cell cap.
pub const CELL_CAP_ENV: &str = "SPECFORGE_CELL_CAP";

/// Key under which `gen` records full-dataset extremes in the spec file.
pub const STATS_PARAM: &str = "data_stats";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations. Exit code 1.
    Usage(String),
    /// Unreadable, malformed or incompatible inputs. Exit code 2.
    Data(specforge::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<specforge::Error> for CliError {
    fn from(e: specforge::Error) -> Self {
        match e {
            specforge::Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(specforge::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

type CliResult<T> = Result<T, CliError>;

/// Generation fold and, unless the whole file was used, evaluation fold.
pub type Folds = (Dataset, Option<Dataset>);

/// Runs one parsed invocation. Primary output goes to `stdout`; progress
/// notes go to stderr.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(a.kind, stdout),
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Eval(a) => cmd_eval(&a, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout),
        Command::Render(a) => cmd_render(&a),
    }
}

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| io_err(Path::new("-"), e)),
    }
}

fn write_dataset(data: &Dataset, path: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => data.write_csv(p, "label")?,
        None => data.write_csv_to(stdout, "label")?,
    }
    Ok(())
}

pub fn cmd_synth(kind: args::SynthKind, stdout: &mut dyn Write) -> CliResult<()> {
    match kind {
        args::SynthKind::Spiral {
            per_class,
            classes,
            noise,
            seed,
            out,
        } => {
            let data = dataset::synth_spiral(per_class as usize, classes as usize, noise, seed)?;
            write_dataset(&data, out.as_deref(), stdout)
        }
        args::SynthKind::Timeseries {
            len,
            peak,
            window,
            bins,
            seed,
            out,
        } => {
            let series = dataset::synth_throughput(len as usize, peak, seed)?;
            let mut data = dataset::window_timeseries(&series, window as usize)?;
            if let Some(b) = bins {
                data = dataset::bin_labels(&data, b as usize, true)?;
            }
            write_dataset(&data, out.as_deref(), stdout)
        }
    }
}

fn load(path: &Path, label: &str, task: TaskKind) -> CliResult<Dataset> {
    let column: LabelColumn = label.parse().unwrap_or_else(|e| match e {});
    Ok(dataset::load_csv(path, &column, task)?)
}

fn cell_cap() -> CliResult<u64> {
    match std::env::var(CELL_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| CliError::Usage(format!("{CELL_CAP_ENV}=`{v}` is not a positive integer"))),
        Err(_) => Ok(DEFAULT_CELL_CAP),
    }
}

/// Builds the spec set for `gen` without touching the filesystem beyond
/// reading the dataset. Returns the set and the folds it was built from.
pub fn generate(a: &args::GenArgs) -> CliResult<(SpecSet, Option<Folds>)> {
    if a.algo == Algo::Human {
        if a.data.is_some() {
            return Err(CliError::Usage("the human baseline takes no dataset".into()));
        }
        let set = generators::gen_human_throughput(a.bins)?.with_param("algo", "human");
        return Ok((set, None));
    }
    let path = a
        .data
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("--algo {:?} needs a dataset", a.algo).to_lowercase()))?;
    let full = load(path, &a.label, a.task.into())?;
    let (gen, eval) = if a.no_split {
        (full.clone(), None)
    } else if a.no_shuffle {
        let (g, e) = full.split_ordered(a.split)?;
        (g, Some(e))
    } else {
        let (g, e) = full.split(a.split, a.seed)?;
        (g, Some(e))
    };

    let set = match a.algo {
        Algo::Grid => generators::gen_grid(
            &gen,
            &GridParams {
                beta: a.beta as usize,
                cell_cap: cell_cap()?,
            },
        )?,
        Algo::Cluster => generators::gen_cluster(
            &gen,
            &ClusterParams {
                k: a.k as usize,
                max_iters: a.max_iters,
                seed: a.seed,
            },
        )?,
        Algo::Tree => generators::gen_tree(
            &gen,
            &TreeParams {
                max_depth: a.max_depth,
                min_samples_leaf: a.min_leaf,
                min_samples_split: a.min_split,
                seed: a.seed,
            },
        )?,
        Algo::Human => unreachable!("handled above"),
    };
    let stats = serde_json::to_value(full.stats()).expect("stats serialize");
    let set = set
        .with_param("algo", format!("{:?}", a.algo).to_lowercase())
        .with_param("dataset", path.display().to_string())
        .with_param("label", a.label.clone())
        .with_param("split", if a.no_split { Value::Null } else { json!(a.split) })
        .with_param("shuffle", !a.no_shuffle && !a.no_split)
        .with_param("split_seed", a.seed)
        .with_param("gen_rows", gen.len())
        .with_param("eval_rows", eval.as_ref().map_or(0, Dataset::len))
        .with_param(STATS_PARAM, stats);
    Ok((set, Some((gen, eval))))
}

pub fn cmd_gen(a: &args::GenArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (set, folds) = generate(a)?;
    if let Some((gen, eval)) = &folds {
        if let Some(p) = &a.gen_out {
            gen.write_csv(p, "label")?;
        }
        if let Some(p) = &a.eval_out {
            match eval {
                Some(e) => e.write_csv(p, "label")?,
                None => return Err(CliError::Usage("--eval-out needs a split".into())),
            }
        }
    } else if a.gen_out.is_some() || a.eval_out.is_some() {
        return Err(CliError::Usage("fold outputs need a dataset".into()));
    }
    match &a.out {
        Some(p) => save_specset(&set, p)?,
        None => write_text(None, &(set.to_json()? + "\n"), stdout)?,
    }
    eprintln!("{} specs from the {} generator", set.len(), set.generator);
    Ok(())
}

/// Full-dataset extremes recorded by `gen`, if the file carries them.
pub fn recorded_stats(set: &SpecSet) -> Option<DatasetStats> {
    set.params
        .get(STATS_PARAM)
        .and_then(|v| serde_json::from_value::<DatasetStats>(v.clone()).ok())
        .filter(|s| s.n_features() == set.feature_dim())
}

fn merged_stats(set: &SpecSet, data: Option<&Dataset>) -> CliResult<Option<DatasetStats>> {
    let recorded = recorded_stats(set);
    Ok(match (data.map(Dataset::stats), recorded) {
        (Some(d), Some(r)) => Some(d.union(&r)?),
        (Some(d), None) => Some(d),
        (None, r) => r,
    })
}

fn check_dims(set: &SpecSet, data: &Dataset, spec_path: &Path, data_path: &Path) -> CliResult<()> {
    if set.feature_dim() != data.n_features() {
        return Err(CliError::Data(specforge::Error::Dimension {
            what: format!(
                "spec file {} vs dataset {} feature count",
                spec_path.display(),
                data_path.display()
            ),
            expected: set.feature_dim(),
            got: data.n_features(),
        }));
    }
    Ok(())
}

/// Scores a spec file on a dataset, widening the label range with any
/// full-dataset extremes stored in the spec file.
pub fn evaluate_files(spec_path: &Path, data_path: &Path, label: &str, alpha: f64) -> CliResult<(SpecSet, EvalReport)> {
    let set = load_specset(spec_path)?;
    let data = load(data_path, label, set.task())?;
    check_dims(&set, &data, spec_path, data_path)?;
    let stats = merged_stats(&set, Some(&data))?.expect("dataset given");
    let report = specforge::evaluate(&set, &data, alpha, &stats)?;
    Ok((set, report))
}

/// Aligned table with one row per method.
pub fn format_table(rows: &[(String, &EvalReport)]) -> String {
    let header = ["Method", "#TP", "#FP", "#FN", "Precision", "Recall", "F1"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|(name, r)| {
            let [p, rc, f] = r.percent_cells();
            [name.clone(), r.tp.to_string(), r.fp.to_string(), r.fn_.to_string(), p, rc, f]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells[1..].iter().zip(&widths[1..]) {
            s.push_str(&format!("  {cell:>w$}"));
        }
        s.push('\n');
        s
    };
    let mut out = line(&header.map(String::from));
    for row in &body {
        out.push_str(&line(row));
    }
    out
}

pub fn cmd_eval(a: &args::EvalArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (set, mut report) = evaluate_files(&a.specs, &a.data, &a.label, a.alpha)?;
    let table = format_table(&[(set.generator.clone(), &report)]);
    let mut text = format!(
        "{} specs scored, {} removed by the output-range filter (alpha {})\n",
        report.specs_scored, report.specs_filtered, a.alpha
    );
    text.push_str(&table);
    write_text(None, &text, stdout)?;
    if let Some(p) = &a.out {
        if !a.per_point {
            report.per_point = None;
        }
        let doc = json!({
            "config": {
                "specs": a.specs.display().to_string(),
                "data": a.data.display().to_string(),
                "label": a.label,
                "alpha": a.alpha,
            },
            "generator": set.generator,
            "report": report,
        });
        let body = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
        write_text(Some(p), &body, stdout)?;
    }
    Ok(())
}

fn expected_cells(c: &OutputConstraint) -> [String; 3] {
    match *c {
        OutputConstraint::ClassLabel(k) => [k.to_string(), String::new(), String::new()],
        OutputConstraint::Interval { lo, hi } => [String::new(), lo.to_string(), hi.to_string()],
    }
}

/// Writes one CSV row per counterexample: spec index and provenance, where
/// the input came from, the input, the network output and the expected
/// output.
pub fn write_counterexamples(
    path: &Path,
    summary: &specforge::verifier::VerifySummary,
    in_dim: usize,
    out_dim: usize,
) -> CliResult<()> {
    let csv_err = |e: csv::Error| io_err(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["spec_index".to_string(), "provenance".into(), "source".into(), "source_row".into()];
    header.extend((0..in_dim).map(|j| format!("x{j}")));
    header.extend((0..out_dim).map(|j| format!("y{j}")));
    header.extend(["expected_class", "expected_lo", "expected_hi"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for (r, cx) in summary.counterexamples() {
        let (source, row) = match cx.source {
            CounterexampleSource::Dataset { row } => ("dataset", row.to_string()),
            CounterexampleSource::Sample => ("sample", String::new()),
        };
        let mut rec = vec![r.spec_index.to_string(), r.provenance.clone(), source.into(), row];
        rec.extend(cx.input.iter().map(|v| v.to_string()));
        rec.extend(cx.output.iter().map(|v| v.to_string()));
        rec.extend(expected_cells(&cx.expected));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn cmd_verify(a: &args::VerifyArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let net = load_network(&a.network)?;
    let set = load_specset(&a.specs)?;
    if net.input_dim() != set.feature_dim() {
        return Err(CliError::Data(specforge::Error::Dimension {
            what: format!("network {} input vs spec file {}", a.network.display(), a.specs.display()),
            expected: set.feature_dim(),
            got: net.input_dim(),
        }));
    }
    let data = match &a.data {
        Some(p) => {
            let d = load(p, &a.label, set.task())?;
            check_dims(&set, &d, &a.specs, p)?;
            Some(d)
        }
        None => None,
    };
    let stats = merged_stats(&set, data.as_ref())?;
    let sampler = Sampler {
        budget: a.budget,
        seed: a.seed,
        max_counterexamples: a.max_counterexamples as usize,
    };
    let summary = verify_all(&net, &set, stats.as_ref(), data.as_ref(), &sampler)?;

    let mut text = format!(
        "verified {}, violated {}, unknown {} (of {} specs)\n",
        summary.verified,
        summary.violated,
        summary.unknown,
        set.len()
    );
    for r in summary.results.iter().filter(|r| r.result.is_violated()) {
        let n = summary.counterexamples().filter(|(s, _)| s.spec_index == r.spec_index).count();
        text.push_str(&format!(
            "  violated #{} {}: {} counterexample(s), expected {}\n",
            r.spec_index,
            r.provenance,
            n,
            describe(&set.specs()[r.spec_index].output)
        ));
    }
    write_text(None, &text, stdout)?;

    if let Some(p) = &a.counterexamples {
        write_counterexamples(p, &summary, net.input_dim(), net.output_dim())?;
    }
    if let Some(p) = &a.out {
        let doc = json!({
            "config": {
                "network": a.network.display().to_string(),
                "specs": a.specs.display().to_string(),
                "data": a.data.as_ref().map(|p| p.display().to_string()),
                "sampler": sampler,
            },
            "summary": summary,
        });
        let body = serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n";
        write_text(Some(p), &body, stdout)?;
    }
    Ok(())
}

fn describe(c: &OutputConstraint) -> String {
    match *c {
        OutputConstraint::ClassLabel(k) => format!("class {k}"),
        OutputConstraint::Interval { lo, hi } => format!("[{lo}, {hi}]"),
    }
}

pub fn cmd_render(a: &args::RenderArgs) -> CliResult<()> {
    let set = load_specset(&a.specs)?;
    if set.feature_dim() != 2 {
        return Err(CliError::Usage(format!(
            "render needs 2-D specs; {} has {} features",
            a.specs.display(),
            set.feature_dim()
        )));
    }
    let data = load(&a.data, &a.label, set.task())?;
    check_dims(&set, &data, &a.specs, &a.data)?;
    let svg = render::render_svg(&set, &data)?;
    write_text(Some(&a.out), &svg, &mut std::io::sink())
}

/// Parses `argv` and runs it, returning the process exit code. Errors and
/// help text are printed here.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("specforge: {e}");
            e.exit_code()
        }
    }
}

/// Paths of the demo assets shipped with the CLI crate.
pub fn asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}
