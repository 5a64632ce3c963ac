use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pedf_core::evaluation::{render_report_text, run_benchmark, write_report_csv, write_timings_csv};
use pedf_core::event_log::{
    augment_boundaries, generate_log, parse_log_with_stats, split_cases, write_log_csv, Case, EventLog,
    EventRecord, FeatureSchema, ParseConfig, ParseStats, END, START,
};
use pedf_core::network::{build_skeleton, PedfModel, PredictOptions};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| CliError::io("<stdout>", e))
}

fn required<'a>(path: Option<&'a PathBuf>, key: &str) -> Result<&'a PathBuf> {
    path.ok_or_else(|| CliError::Config(format!("no output path: set `{key}` in [output] or pass --output")))
}

pub fn cmd_gen(cfg: &RunConfig, output: Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    let g = cfg.generate()?;
    let log = generate_log(&g.spec, g.n_cases, g.seed).map_err(|e| CliError::data("generator", e))?;
    let path = output.or_else(|| cfg.output.generated.clone());
    let path = required(path.as_ref(), "generated")?;
    let mut buf = Vec::new();
    write_log_csv(&log, &mut buf).map_err(|e| CliError::data("writing log", e))?;
    write_file(path, &buf)?;
    let events: usize = log.cases.iter().map(Case::real_len).sum();
    say(out, format!("wrote {} cases ({events} events) to {}", log.cases.len(), path.display()))
}

/// Parses the configured dataset and wraps its cases in START/END.
pub fn load_dataset(cfg: &RunConfig) -> Result<(EventLog, ParseStats)> {
    let path = &cfg.dataset()?.path;
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let context = path.display().to_string();
    let (log, stats) = parse_log_with_stats(BufReader::new(file), &cfg.parse).map_err(|e| CliError::data(&context, e))?;
    let log = augment_boundaries(log).map_err(|e| CliError::data(&context, e))?;
    Ok((log, stats))
}

pub fn cmd_train(cfg: &RunConfig, output: Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    let model_cfg = cfg.model()?;
    let path = output.or_else(|| cfg.output.model.clone());
    let path = required(path.as_ref(), "model")?;
    let (log, stats) = load_dataset(cfg)?;
    let train = if cfg.split.train_on_split {
        split_cases(&log, cfg.split.train_fraction, cfg.split.seed).map_err(|e| CliError::data("split", e))?.0
    } else {
        log.clone()
    };

    let started = Instant::now();
    let model = PedfModel::train(build_skeleton(&train)?, model_cfg.training())?;
    let seconds = started.elapsed().as_secs_f64();
    write_file(path, &model.to_bytes()?)?;

    let counts = model.cluster_counts();
    say(out, format!("records read:   {}", stats.rows_read))?;
    if let Some(id) = &stats.dropped_partial_case {
        say(out, format!("dropped partially read case `{id}`"))?;
    }
    say(out, format!("cases:          {}", log.cases.len()))?;
    say(out, format!("training cases: {}", train.cases.len()))?;
    say(out, format!("nodes:          {}", model.skeleton().nodes().len()))?;
    say(out, format!("links:          {}", counts.len()))?;
    say(out, format!("clusters:       {}", counts.iter().map(|(_, k)| k).sum::<usize>()))?;
    for (link, k) in &counts {
        say(out, format!("  {link}: {k}"))?;
    }
    say(out, format!("train seconds:  {seconds:.3}"))?;
    say(out, format!("model written to {}", path.display()))
}

pub struct PredictArgs {
    pub model: PathBuf,
    /// CSV file with one or more partial cases.
    pub prefix: Option<PathBuf>,
    /// Labels of a single partial case, used when no CSV is given.
    pub events: Vec<String>,
    /// Column mapping for the prefix CSV; defaults to the model's schema.
    pub parse: Option<ParseConfig>,
    pub cap: usize,
    pub extend: bool,
    pub sample: Option<u64>,
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    case: &'a str,
    events: &'a [String],
    durations: &'a [f64],
    numeric: Vec<&'a [f64]>,
    nominal: Vec<&'a [String]>,
    terminated_by: pedf_core::network::Termination,
}

/// Reorders parsed feature slots to the model's schema, by column name.
fn align(log: &EventLog, schema: &FeatureSchema) -> Vec<Case> {
    let num_idx: Vec<Option<usize>> =
        schema.numeric.iter().map(|n| log.schema.numeric.iter().position(|m| m == n)).collect();
    let nom_idx: Vec<Option<usize>> = schema
        .nominal_names()
        .map(|n| log.schema.nominal_names().position(|m| m == n))
        .collect();
    log.cases
        .iter()
        .map(|case| {
            let mut records = vec![EventRecord::bare(&case.id, START, case.records[0].timestamp, schema)];
            records.extend(case.records.iter().map(|r| EventRecord {
                case_id: r.case_id.clone(),
                label: r.label.clone(),
                timestamp: r.timestamp,
                numeric: num_idx.iter().map(|i| i.and_then(|i| r.numeric[i])).collect(),
                nominal: nom_idx.iter().map(|i| i.and_then(|i| r.nominal[i].clone())).collect(),
            }));
            Case { id: case.id.clone(), records }
        })
        .collect()
}

fn prefixes(args: &PredictArgs, schema: &FeatureSchema) -> Result<Vec<Case>> {
    if let Some(path) = &args.prefix {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let parse = args.parse.clone().unwrap_or_else(|| ParseConfig::for_schema(schema));
        let (log, _) = parse_log_with_stats(BufReader::new(file), &parse)
            .map_err(|e| CliError::data(path.display().to_string(), e))?;
        return Ok(align(&log, schema));
    }
    if args.events.is_empty() {
        return Err(CliError::Usage("give a prefix with --prefix <csv> or --events A,B,...".into()));
    }
    let mut labels: Vec<&str> = args.events.iter().map(String::as_str).collect();
    if labels[0] != START {
        labels.insert(0, START);
    }
    let records = labels.iter().map(|l| EventRecord::bare("prefix", l, 0, schema)).collect();
    Ok(vec![Case { id: "prefix".into(), records }])
}

/// Predicts the continuation of every prefix and prints one JSON object per
/// case.
pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let bytes = std::fs::read(&args.model).map_err(|e| CliError::io(&args.model, e))?;
    let mut model = PedfModel::from_bytes(&bytes)?;
    let options = PredictOptions { cap: args.cap, sample_seed: args.sample };
    for case in prefixes(args, model.schema())? {
        if args.extend && case.records.iter().any(|r| !model.has_node(&r.label)) {
            let mut full = case.clone();
            if full.records.last().is_some_and(|r| r.label != END) {
                let last = full.records.last().map_or(0, |r| r.timestamp);
                full.records.push(EventRecord::bare(&case.id, END, last, model.schema()));
            }
            model = model.update_with_case(&full)?;
            writeln!(err, "extended network with case `{}`", case.id).map_err(|e| CliError::io("<stderr>", e))?;
        }
        let suffix = model.predict_case(&case, &options)?;
        let line = PredictionLine {
            case: &case.id,
            events: &suffix.events,
            durations: &suffix.durations,
            numeric: suffix.features.iter().map(|f| f.numeric.as_slice()).collect(),
            nominal: suffix.features.iter().map(|f| f.nominal.as_slice()).collect(),
            terminated_by: suffix.terminated_by,
        };
        say(out, serde_json::to_string(&line).expect("prediction serializes"))?;
    }
    Ok(())
}

pub fn cmd_bench(cfg: &RunConfig, cap: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut bench = cfg.bench_config()?;
    if let Some(cap) = cap {
        bench.cap = cap;
    }
    let (log, stats) = load_dataset(cfg)?;
    let mut outcome = run_benchmark(&log, &bench)?;
    let extra = BTreeMap::from([
        ("record_limit", cfg.parse.record_limit.map_or_else(|| "none".to_string(), |l| l.to_string())),
        ("records_read", stats.rows_read.to_string()),
        ("dropped_partial_case", stats.dropped_partial_case.clone().unwrap_or_else(|| "none".into())),
    ]);
    for (k, v) in extra {
        outcome.report.metadata.insert(k.to_string(), v);
    }

    let text = render_report_text(&outcome.report);
    if let Some(path) = &cfg.output.report_csv {
        let mut buf = Vec::new();
        write_report_csv(&outcome.report, &mut buf).map_err(|e| CliError::Config(e.to_string()))?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &cfg.output.report_text {
        write_file(path, text.as_bytes())?;
    }
    if let Some(path) = &cfg.output.timings {
        let mut buf = Vec::new();
        write_timings_csv(&outcome.timings, &mut buf).map_err(|e| CliError::Config(e.to_string()))?;
        write_file(path, &buf)?;
    }
    for t in &outcome.timings {
        writeln!(err, "trained {} in {:.3}s", t.model, t.train_seconds).map_err(|e| CliError::io("<stderr>", e))?;
    }
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}
