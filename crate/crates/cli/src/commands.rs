//! Subcommand bodies. Machine-readable results (cutflows, benchmark CSV)
//! go to stdout; progress notes and warnings go to stderr.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use hepdesk_columnar::{
    read_table, report_to_csv, report_to_json, run_benchmark, write_table, FileFormat, FormatKind,
    LoadedTable,
};
use hepdesk_core::analysis::{
    apply_selection, compare_data_mc, comparison_to_svg, eta_phi_image, evaluate_quantity,
    fill_histogram, histogram_to_csv, histogram_to_json, histogram_to_svg, image_to_csv,
    image_to_pgm, linear_edges, normalize_to_unity, Cutflow, EvalContext, Histogram1D, MetSource,
    Quantity, SelectionSpec,
};
use hepdesk_core::event::{
    events_from_table, table_from_events, validate_event, validate_table, Event,
};
use hepdesk_core::jetclust::ClusterConfig;
use hepdesk_core::toygen::{
    build_reco_jets, generate_truth, smear_detector, DetectorParams, ProcessParams,
};

use crate::{
    AnalyzeWArgs, BenchArgs, CliError, Command, ConvertArgs, GenerateArgs, HistArgs, ImageArgs,
    SelectArgs, SmearArgs, ValidateArgs,
};

/// The built-in W→μν selection used by `analyze-w` when no spec is given.
const DEFAULT_W_SPEC: &str = include_str!("../../../configs/w_selection.txt");

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Smear(args) => smear(args),
        Command::Convert(args) => convert(args),
        Command::Validate(args) => validate(args),
        Command::Select(args) => select(args),
        Command::Hist(args) => hist(args),
        Command::Image(args) => image(args),
        Command::Bench(args) => bench(args),
        Command::AnalyzeW(args) => analyze_w(args),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn with_path(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Read a table, surface its warnings on stderr, and tag errors with the
/// offending path.
fn load_table(path: &Path, hint: Option<FormatKind>) -> Result<LoadedTable, CliError> {
    let loaded = read_table(path, hint).map_err(|e| with_path(path, e.into()))?;
    warn_all(&loaded.warnings);
    Ok(loaded)
}

fn load_events(path: &Path, hint: Option<FormatKind>) -> Result<Vec<Event>, CliError> {
    let loaded = load_table(path, hint)?;
    events_from_table(&loaded.table).map_err(|e| with_path(path, e.into()))
}

fn write_events(
    events: &[Event],
    path: &Path,
    fmt: FileFormat,
) -> Result<(), CliError> {
    let table = table_from_events(events)?;
    write_table(&table, path, fmt).map_err(|e| with_path(path, e.into()))?;
    Ok(())
}

/// The explicit `--format` wins; otherwise the output extension decides
/// (`.gz`/`.zst` wrappers included). No match is a usage error.
fn output_format(path: &Path, flag: Option<FileFormat>) -> Result<FileFormat, CliError> {
    if let Some(fmt) = flag {
        return Ok(fmt);
    }
    format_from_path(path).ok_or_else(|| {
        CliError::Usage(format!(
            "cannot infer a format from {:?}; pass --format kind[+compression]",
            path.display().to_string()
        ))
    })
}

fn format_from_path(path: &Path) -> Option<FileFormat> {
    let name = path.file_name()?.to_str()?.to_ascii_lowercase();
    let (stem, compression) = if let Some(s) = name.strip_suffix(".gz") {
        (s.to_string(), hepdesk_columnar::Compression::Gzip)
    } else if let Some(s) = name.strip_suffix(".zst") {
        (s.to_string(), hepdesk_columnar::Compression::Zstd)
    } else {
        (name, hepdesk_columnar::Compression::None)
    };
    let kind = match stem.rsplit_once('.')?.1 {
        "feather" | "arrow" | "ipc" => FormatKind::ArrowIpc,
        "parquet" | "pq" => FormatKind::Parquet,
        "jsonl" | "ndjson" => FormatKind::Jsonl,
        "csv" => FormatKind::Csv,
        _ => return None,
    };
    FileFormat::new(kind, compression).ok()
}

fn check_weight(name: &str, w: f64) -> Result<(), CliError> {
    if !(w.is_finite() && w > 0.0) {
        return Err(CliError::Usage(format!(
            "{name} must be positive and finite, got {w}"
        )));
    }
    Ok(())
}

fn met_str(met: MetSource) -> &'static str {
    match met {
        MetSource::Stored => "stored",
        MetSource::Recomputed => "recomputed",
    }
}

fn pretty_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value is always serializable");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let mut params = ProcessParams::defaults(args.process);
    if let Some(config) = &args.config {
        params
            .apply_config(&read_to_string(config)?)
            .map_err(|e| with_path(config, e.into()))?;
    }
    let events = generate_truth(args.events, &params, args.seed)?;
    let fmt = output_format(&args.output, args.format)?;
    write_events(&events, &args.output, fmt)?;
    eprintln!(
        "generated {} {} event(s) with seed {} -> {}",
        events.len(),
        args.process.as_str(),
        args.seed,
        args.output.display()
    );
    Ok(())
}

fn smear(args: SmearArgs) -> Result<(), CliError> {
    if !(args.jet_r.is_finite() && args.jet_r > 0.0) {
        return Err(CliError::Usage(format!(
            "--jet-r must be positive and finite, got {}",
            args.jet_r
        )));
    }
    if !(args.jet_min_pt.is_finite() && args.jet_min_pt >= 0.0) {
        return Err(CliError::Usage(format!(
            "--jet-min-pt must be non-negative and finite, got {}",
            args.jet_min_pt
        )));
    }
    let truth = load_events(&args.input, args.from)?;
    let mut params = if args.identity {
        DetectorParams::identity(DetectorParams::default().seed)
    } else {
        DetectorParams::default()
    };
    if let Some(config) = &args.config {
        params
            .apply_config(&read_to_string(config)?)
            .map_err(|e| with_path(config, e.into()))?;
    }
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    let mut events = smear_detector(&truth, &params)?;
    build_reco_jets(
        &mut events,
        &ClusterConfig {
            r_param: args.jet_r,
            min_jet_pt: args.jet_min_pt,
        },
    )?;
    let fmt = output_format(&args.output, args.format)?;
    write_events(&events, &args.output, fmt)?;
    eprintln!(
        "smeared {} event(s) with detector seed {} -> {}",
        events.len(),
        params.seed,
        args.output.display()
    );
    Ok(())
}

fn convert(args: ConvertArgs) -> Result<(), CliError> {
    let loaded = load_table(&args.input, args.from)?;
    let fmt = output_format(&args.output, args.format)?;
    let bytes = write_table(&loaded.table, &args.output, fmt)
        .map_err(|e| with_path(&args.output, e.into()))?;
    eprintln!(
        "{} ({}) -> {} ({fmt}, {bytes} bytes)",
        args.input.display(),
        loaded.kind.as_str(),
        args.output.display()
    );
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let loaded = read_table(&args.input, args.from)
        .map_err(|e| with_path(&args.input, e.into()))?;
    // Schema findings are re-derived here as hard findings; only the
    // non-schema warnings stay advisory.
    warn_all(
        &loaded
            .warnings
            .iter()
            .filter(|w| !w.starts_with("schema: "))
            .cloned()
            .collect::<Vec<_>>(),
    );
    let mut findings = 0usize;
    let report = validate_table(&loaded.table);
    for v in &report.violations {
        println!("{v}");
        findings += 1;
    }
    if findings == 0 {
        let events = events_from_table(&loaded.table)
            .map_err(|e| with_path(&args.input, e.into()))?;
        for (i, e) in events.iter().enumerate() {
            for v in validate_event(e).violations {
                println!("event {i} {v}");
                findings += 1;
            }
        }
        if findings == 0 {
            println!(
                "OK: {} event(s), {} column(s)",
                events.len(),
                loaded.table.columns.len()
            );
            return Ok(());
        }
    }
    Err(CliError::Validation(format!("{findings} violation(s)")))
}

fn select(args: SelectArgs) -> Result<(), CliError> {
    check_weight("--weight", args.weight)?;
    let spec_text = read_to_string(&args.spec)?;
    let spec =
        SelectionSpec::parse(&spec_text).map_err(|e| with_path(&args.spec, e.into()))?;
    let events = load_events(&args.input, args.from)?;
    let ctx = EvalContext { met: args.met };
    let (mask, cutflow) = apply_selection(&events, &spec, args.weight, &ctx);
    print!("{}", cutflow.format_table());
    if let Some(output) = &args.output {
        let passing: Vec<Event> = events
            .iter()
            .zip(&mask)
            .filter(|(_, &keep)| keep)
            .map(|(e, _)| e.clone())
            .collect();
        let fmt = output_format(output, args.format)?;
        write_events(&passing, output, fmt)?;
        eprintln!(
            "wrote {} of {} event(s) -> {}",
            passing.len(),
            events.len(),
            output.display()
        );
    }
    Ok(())
}

fn hist(args: HistArgs) -> Result<(), CliError> {
    check_weight("--weight", args.weight)?;
    let quantity = Quantity::parse(&args.quantity)?;
    let edges = linear_edges(args.bins, args.min, args.max)?;
    let events = load_events(&args.input, args.from)?;
    let ctx = EvalContext { met: args.met };
    let values: Vec<f64> = events
        .iter()
        .filter_map(|e| evaluate_quantity(e, &quantity, &ctx))
        .collect();
    let absent = events.len() - values.len();
    if absent > 0 {
        eprintln!("note: {} is absent for {absent} event(s)", args.quantity);
    }
    let weights = vec![args.weight; values.len()];
    let mut h = fill_histogram(&values, Some(&weights), &edges)?;
    if args.normalize {
        h = normalize_to_unity(&h)?;
    }
    for output in &args.output {
        write_histogram(&h, output, &args.quantity)?;
    }
    Ok(())
}

fn write_histogram(h: &Histogram1D, path: &Path, quantity: &str) -> Result<(), CliError> {
    let rendered = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => histogram_to_csv(h),
        Some("json") => pretty_json(&histogram_to_json(h)),
        Some("svg") => histogram_to_svg(h, quantity, quantity),
        _ => {
            return Err(CliError::Usage(format!(
                "histogram outputs must end in .csv, .json or .svg, got {:?}",
                path.display().to_string()
            )))
        }
    };
    std::fs::write(path, rendered).map_err(|e| with_path(path, e.into()))
}

fn image(args: ImageArgs) -> Result<(), CliError> {
    let events = load_events(&args.input, args.from)?;
    let event = events.get(args.event).ok_or_else(|| {
        CliError::Data(format!(
            "event index {} out of range ({} event(s) in {})",
            args.event,
            events.len(),
            args.input.display()
        ))
    })?;
    let img = eta_phi_image(
        event,
        args.collection,
        args.n_eta,
        args.n_phi,
        (args.eta_min, args.eta_max),
        (args.phi_min, args.phi_max),
    )?;
    for output in &args.output {
        let bytes = match output.extension().and_then(|e| e.to_str()) {
            Some("pgm") => image_to_pgm(&img),
            Some("csv") => image_to_csv(&img).into_bytes(),
            _ => {
                return Err(CliError::Usage(format!(
                    "image outputs must end in .pgm or .csv, got {:?}",
                    output.display().to_string()
                )))
            }
        };
        std::fs::write(output, bytes).map_err(|e| with_path(output, e.into()))?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let loaded = load_table(&args.input, args.from)?;
    let matrix = if args.formats.is_empty() {
        FileFormat::support_matrix()
    } else {
        args.formats.clone()
    };
    // Bind the temp dir so it outlives the runs when no workdir is given.
    let tmp;
    let workdir: &Path = match &args.workdir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| with_path(dir, e.into()))?;
            dir
        }
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path()
        }
    };
    let report = run_benchmark(&loaded.table, &matrix, args.repetitions, workdir)?;
    let csv = report_to_csv(&report);
    print!("{csv}");
    for row in report.rows.iter().filter(|r| !r.completed) {
        eprintln!(
            "warning: {}+{} failed: {}",
            row.format.as_str(),
            row.compression.as_str(),
            row.error.as_deref().unwrap_or("unknown error")
        );
    }
    if let Some(path) = &args.out_csv {
        std::fs::write(path, &csv).map_err(|e| with_path(path, e.into()))?;
    }
    if let Some(path) = &args.out_json {
        std::fs::write(path, pretty_json(&report_to_json(&report)))
            .map_err(|e| with_path(path, e.into()))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze-w
// ---------------------------------------------------------------------------

struct Sample {
    role: String,
    path: PathBuf,
    weight: f64,
    events: Vec<Event>,
    /// Pass mask of the first cut alone; comparison panels are filled from
    /// these events so every panel variable keeps its own shape.
    panel_mask: Vec<bool>,
    cutflow: Cutflow,
}

const PANELS: [(&str, &str, usize, f64, f64); 4] = [
    ("muon_pt", "leading_muon_pt", 50, 0.0, 100.0),
    ("met_pt", "met_pt", 50, 0.0, 100.0),
    ("muon_reliso", "leading_muon_reliso", 50, 0.0, 0.5),
    ("muon_eta", "leading_muon_eta", 60, -3.0, 3.0),
];

fn analyze_w(args: AnalyzeWArgs) -> Result<(), CliError> {
    if args.background.len() != args.background_weight.len() {
        return Err(CliError::Usage(format!(
            "got {} --background but {} --background-weight; they pair up one to one",
            args.background.len(),
            args.background_weight.len()
        )));
    }
    check_weight("--signal-weight", args.signal_weight)?;
    for w in &args.background_weight {
        check_weight("--background-weight", *w)?;
    }
    let spec_text = match &args.spec {
        Some(path) => read_to_string(path)?,
        None => DEFAULT_W_SPEC.to_string(),
    };
    let spec = SelectionSpec::parse(&spec_text)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| with_path(&args.out_dir, e.into()))?;
    let ctx = EvalContext { met: args.met };

    let mut plan: Vec<(String, PathBuf, f64)> = vec![
        ("data".into(), args.data.clone(), 1.0),
        ("signal".into(), args.signal.clone(), args.signal_weight),
    ];
    for (i, (path, weight)) in args
        .background
        .iter()
        .zip(&args.background_weight)
        .enumerate()
    {
        plan.push((format!("background_{}", i + 1), path.clone(), *weight));
    }

    let mut samples = Vec::with_capacity(plan.len());
    for (role, path, weight) in plan {
        let events = load_events(&path, None)?;
        let (_, cutflow) = apply_selection(&events, &spec, weight, &ctx);
        let panel_mask: Vec<bool> = match spec.cuts.first() {
            Some(cut) => events
                .iter()
                .map(|e| {
                    evaluate_quantity(e, &cut.quantity, &ctx)
                        .is_some_and(|v| cut.comparator.apply(v, cut.threshold))
                })
                .collect(),
            None => vec![true; events.len()],
        };
        samples.push(Sample {
            role,
            path,
            weight,
            events,
            panel_mask,
            cutflow,
        });
    }

    let mut panel_stats = Vec::new();
    for (name, qid, bins, lo, hi) in PANELS {
        let quantity = Quantity::parse(qid)?;
        let edges = linear_edges(bins, lo, hi)?;
        let hists: Vec<Histogram1D> = samples
            .iter()
            .map(|s| {
                let values: Vec<f64> = s
                    .events
                    .iter()
                    .zip(&s.panel_mask)
                    .filter(|(_, &keep)| keep)
                    .filter_map(|(e, _)| evaluate_quantity(e, &quantity, &ctx))
                    .collect();
                fill_histogram(&values, None, &edges)
            })
            .collect::<Result<_, _>>()?;
        let data_hist = &hists[0];
        let mc: Vec<(Histogram1D, f64)> = hists[1..]
            .iter()
            .zip(&samples[1..])
            .map(|(h, s)| (h.clone(), s.weight))
            .collect();
        let report = compare_data_mc(data_hist, &mc)?;
        let doc = json!({
            "quantity": qid,
            "edges": data_hist.edges,
            "data": data_hist.contents,
            "stacked": report.stacked.contents,
            "ratio": report.ratio,
            "chi2": report.chi2,
            "ndf": report.ndf,
        });
        let json_path = args.out_dir.join(format!("{name}.json"));
        std::fs::write(&json_path, pretty_json(&doc))
            .map_err(|e| with_path(&json_path, e.into()))?;
        let svg_path = args.out_dir.join(format!("{name}.svg"));
        std::fs::write(&svg_path, comparison_to_svg(data_hist, &report, name, qid))
            .map_err(|e| with_path(&svg_path, e.into()))?;
        panel_stats.push(json!({
            "name": name,
            "quantity": qid,
            "chi2": report.chi2,
            "ndf": report.ndf,
        }));
    }

    let mut cutflow_txt = String::new();
    for s in &samples {
        cutflow_txt.push_str(&format!("== {} ({}) ==\n", s.role, s.path.display()));
        cutflow_txt.push_str(&s.cutflow.format_table());
        cutflow_txt.push('\n');
    }
    let cutflow_path = args.out_dir.join("cutflow.txt");
    std::fs::write(&cutflow_path, cutflow_txt)
        .map_err(|e| with_path(&cutflow_path, e.into()))?;

    let selection: Vec<Value> = spec
        .cuts
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "quantity": c.quantity.id(),
                "comparator": c.comparator.as_str(),
                "threshold": c.threshold,
            })
        })
        .collect();
    let sample_rows: Vec<Value> = samples
        .iter()
        .map(|s| {
            let (passed, weighted_passed) = match s.cutflow.rows.last() {
                Some(row) => (row.events_passed, row.weighted_passed),
                None => (s.events.len() as u64, s.weight * s.events.len() as f64),
            };
            json!({
                "role": s.role,
                "path": s.path.display().to_string(),
                "weight": s.weight,
                "events": s.events.len(),
                "passed": passed,
                "weighted_passed": weighted_passed,
            })
        })
        .collect();
    let summary = json!({
        "selection": selection,
        "met": met_str(args.met),
        "samples": sample_rows,
        "panels": panel_stats,
    });
    let summary_path = args.out_dir.join("summary.json");
    std::fs::write(&summary_path, pretty_json(&summary))
        .map_err(|e| with_path(&summary_path, e.into()))?;

    eprintln!(
        "wrote {} panel(s), cutflow.txt and summary.json -> {}",
        PANELS.len(),
        args.out_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hepdesk_columnar::Compression;

    #[test]
    fn format_follows_the_file_extension() {
        let cases = [
            ("events.feather", FormatKind::ArrowIpc, Compression::None),
            ("events.arrow", FormatKind::ArrowIpc, Compression::None),
            ("EVENTS.PARQUET", FormatKind::Parquet, Compression::None),
            ("events.pq", FormatKind::Parquet, Compression::None),
            ("events.jsonl", FormatKind::Jsonl, Compression::None),
            ("events.ndjson.gz", FormatKind::Jsonl, Compression::Gzip),
            ("events.csv.zst", FormatKind::Csv, Compression::Zstd),
        ];
        for (name, kind, compression) in cases {
            let fmt = format_from_path(Path::new(name)).unwrap_or_else(|| panic!("{name}"));
            assert_eq!((fmt.kind, fmt.compression), (kind, compression), "{name}");
        }
        assert!(format_from_path(Path::new("events.root")).is_none());
        assert!(format_from_path(Path::new("noextension")).is_none());
        // .gz alone has no inner extension to dispatch on.
        assert!(format_from_path(Path::new("events.gz")).is_none());
    }

    #[test]
    fn explicit_format_beats_the_extension() {
        let flag = FileFormat::new(FormatKind::Parquet, Compression::Zstd).unwrap();
        let got = output_format(Path::new("events.csv"), Some(flag)).unwrap();
        assert_eq!(got.kind, FormatKind::Parquet);
        assert!(matches!(
            output_format(Path::new("events.dat"), None),
            Err(CliError::Usage(_))
        ));
    }
}
