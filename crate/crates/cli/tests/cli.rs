//! End-to-end tests of the `hepdesk` binary: exit-code contract, stdout
//! shapes, and file outputs of every subcommand.

use std::path::{Path, PathBuf};
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn hepdesk<I, S>(args: I) -> Run
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = Command::new(env!("CARGO_BIN_EXE_hepdesk"))
        .args(args)
        .output()
        .expect("spawn hepdesk");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("stdout is UTF-8"),
        stderr: String::from_utf8(out.stderr).expect("stderr is UTF-8"),
    }
}

fn s(path: &Path) -> &str {
    path.to_str().expect("UTF-8 path")
}

/// Generate and smear a small sample, returning (truth, reco) paths.
fn small_sample(dir: &Path, process: &str, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let truth = dir.join(format!("{process}-{seed}-truth.feather"));
    let reco = dir.join(format!("{process}-{seed}-reco.feather"));
    let r = hepdesk([
        "generate",
        "--process",
        process,
        "-n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "-o",
        s(&truth),
    ]);
    assert_eq!(r.code, 0, "generate failed: {}", r.stderr);
    let r = hepdesk(["smear", s(&truth), "-o", s(&reco)]);
    assert_eq!(r.code, 0, "smear failed: {}", r.stderr);
    (truth, reco)
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(hepdesk(["--help"]).code, 0);
    assert_eq!(hepdesk(["--version"]).code, 0);
    for sub in [
        "generate", "smear", "convert", "validate", "select", "hist", "image", "bench",
        "analyze-w",
    ] {
        let r = hepdesk([sub, "--help"]);
        assert_eq!(r.code, 0, "{sub} --help");
        assert!(r.stdout.contains("Usage:"), "{sub} --help prints usage");
    }
}

#[test]
fn usage_errors_exit_64() {
    // Unknown subcommand, unknown flag, missing required args.
    assert_eq!(hepdesk(["frobnicate"]).code, 64);
    assert_eq!(hepdesk(["generate", "--bogus"]).code, 64);
    assert_eq!(hepdesk(["generate", "--process", "z-mumu"]).code, 64);
    // Bad enum-like values are rejected at parse time.
    let r = hepdesk(["generate", "--process", "nope", "-n", "1", "-o", "x.feather"]);
    assert_eq!(r.code, 64);
    let r = hepdesk(["bench", "in.feather", "--formats", "arrow-ipc+brotli"]);
    assert_eq!(r.code, 64);
    let r = hepdesk(["hist", "in.feather", "-q", "met_pt", "--met", "psychic", "-o", "h.csv"]);
    assert_eq!(r.code, 64);
}

#[test]
fn missing_input_exits_2() {
    let r = hepdesk(["validate", "/nonexistent/events.feather"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("/nonexistent/events.feather"));
    let r = hepdesk([
        "smear",
        "/nonexistent/events.feather",
        "-o",
        "/tmp/never-written.feather",
    ]);
    assert_eq!(r.code, 2);
}

#[test]
fn unknown_output_extension_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("events.dat");
    let r = hepdesk([
        "generate", "--process", "z-mumu", "-n", "1", "-o", s(&out),
    ]);
    assert_eq!(r.code, 64);
    assert!(r.stderr.contains("--format"), "hints at the flag: {}", r.stderr);
    assert!(!out.exists());
}

#[test]
fn generate_zero_events_still_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.feather");
    let r = hepdesk([
        "generate", "--process", "multijet", "-n", "0", "-o", s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = hepdesk(["validate", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("OK: 0 event(s)"), "{}", r.stdout);
}

#[test]
fn invalid_event_data_exits_1_and_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    // Minimal row with a negative MET; the missing columns only warn.
    std::fs::write(
        &bad,
        "{\"runNum\": 1, \"evtNum\": 1, \"lumisection\": 1, \"nEvent\": 1, \"fMET_PT\": -5.0}\n",
    )
    .unwrap();
    let r = hepdesk(["validate", s(&bad)]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("meta.met_pt"), "{}", r.stdout);
    assert!(r.stderr.contains("violation"), "{}", r.stderr);
}

#[test]
fn select_prints_a_telescoping_cutflow_and_writes_survivors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, reco) = small_sample(dir.path(), "z-mumu", 150, 31);
    let spec = dir.path().join("sel.txt");
    std::fs::write(
        &spec,
        "# two reconstructed muons, then a hard leading one\n\
         two_muons reco_muon_count >= 2\n\
         lead_pt   leading_muon_pt  > 30\n",
    )
    .unwrap();
    let passed = dir.path().join("passed.feather");
    let r = hepdesk([
        "select", s(&reco), "--spec", s(&spec), "-o", s(&passed),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines.len(), 3, "header + one row per cut: {}", r.stdout);
    assert!(lines[0].starts_with("cut"), "{}", lines[0]);
    let row = |line: &str| -> (u64, u64) {
        let f: Vec<&str> = line.split_whitespace().collect();
        (f[1].parse().unwrap(), f[2].parse().unwrap())
    };
    let (in1, out1) = row(lines[1]);
    let (in2, out2) = row(lines[2]);
    assert_eq!(in1, 150);
    assert_eq!(in2, out1, "passed of cut 1 feeds cut 2");
    assert!(out2 <= out1);

    // The survivors file holds exactly the final count.
    let r = hepdesk(["validate", s(&passed)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(
        r.stdout.contains(&format!("OK: {out2} event(s)")),
        "{} vs {out2}",
        r.stdout
    );
}

#[test]
fn convert_round_trips_through_every_text_and_binary_format() {
    let dir = tempfile::tempdir().unwrap();
    let (_, reco) = small_sample(dir.path(), "z-mumu", 40, 17);
    // feather -> csv.gz -> parquet -> jsonl -> feather; equal tables mean
    // the final feather is byte-identical to the first.
    let hops = [
        dir.path().join("hop.csv.gz"),
        dir.path().join("hop.parquet"),
        dir.path().join("hop.jsonl"),
        dir.path().join("hop.feather"),
    ];
    let mut from = reco.clone();
    for hop in &hops {
        let r = hepdesk(["convert", s(&from), "-o", s(hop)]);
        assert_eq!(r.code, 0, "{} -> {}: {}", from.display(), hop.display(), r.stderr);
        from = hop.clone();
    }
    let original = std::fs::read(&reco).unwrap();
    let round_tripped = std::fs::read(&hops[3]).unwrap();
    assert_eq!(original, round_tripped, "chained conversions preserve bytes");
}

#[test]
fn hist_writes_csv_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (_, reco) = small_sample(dir.path(), "z-mumu", 60, 8);
    let (csv, json, svg) = (
        dir.path().join("m.csv"),
        dir.path().join("m.json"),
        dir.path().join("m.svg"),
    );
    let r = hepdesk([
        "hist", s(&reco), "-q", "dimuon_mass", "--bins", "30", "--min", "60", "--max", "120",
        "-o", s(&csv), "-o", s(&json), "-o", s(&svg),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("edge_lo,edge_hi,content,sumw2\n"));
    assert_eq!(csv_text.lines().count(), 31, "header + one line per bin");

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["edges"].as_array().unwrap().len(), 31);
    assert_eq!(doc["contents"].as_array().unwrap().len(), 30);

    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.starts_with("<svg "), "{}", &svg_text[..40]);

    // Unknown histogram extension is a usage error.
    let r = hepdesk([
        "hist", s(&reco), "-q", "met_pt", "-o",
        s(&dir.path().join("h.png")),
    ]);
    assert_eq!(r.code, 64);

    // Unknown quantity ids are usage errors too.
    let r = hepdesk(["hist", s(&reco), "-q", "warp_factor", "-o", s(&csv)]);
    assert_eq!(r.code, 64);
    assert!(r.stderr.contains("warp_factor"), "{}", r.stderr);
}

#[test]
fn image_writes_pgm_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (_, reco) = small_sample(dir.path(), "z-mumu", 10, 4);
    let (pgm, csv) = (dir.path().join("e.pgm"), dir.path().join("e.csv"));
    let r = hepdesk([
        "image", s(&reco), "--event", "2", "--n-eta", "24", "--n-phi", "16",
        "-o", s(&pgm), "-o", s(&csv),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n24 16\n65535\n"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# n_eta=24 n_phi=16 "), "{}", text.lines().next().unwrap());
    assert_eq!(text.lines().count(), 25, "metadata line + one row per eta bin");

    // An out-of-range event index is a data error.
    let r = hepdesk(["image", s(&reco), "--event", "10", "-o", s(&pgm)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("out of range"), "{}", r.stderr);
}

#[test]
fn bench_prints_csv_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (truth, _) = small_sample(dir.path(), "multijet", 50, 2);
    let json_out = dir.path().join("bench.json");
    let r = hepdesk([
        "bench", s(&truth),
        "--repetitions", "3",
        "--formats", "arrow-ipc,arrow-ipc+zstd,csv",
        "--out-json", s(&json_out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "format,compression,file_bytes,write_ms,read_ms,n_events");
    assert_eq!(lines.len(), 4, "header + three completed rows: {}", r.stdout);
    assert!(lines[1].starts_with("arrow-ipc,none,"));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);

    // Too few repetitions for a median is a usage error.
    let r = hepdesk(["bench", s(&truth), "--repetitions", "2"]);
    assert_eq!(r.code, 64);
}

#[test]
fn analyze_w_writes_panels_cutflow_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (_, signal) = small_sample(dir.path(), "w-munu", 120, 41);
    let (_, background) = small_sample(dir.path(), "multijet", 120, 42);
    let (_, data) = small_sample(dir.path(), "w-munu", 80, 43);

    // Mismatched background/weight counts are usage errors.
    let r = hepdesk([
        "analyze-w",
        "--signal", s(&signal),
        "--background", s(&background),
        "--data", s(&data),
        "--out-dir", s(&dir.path().join("never")),
    ]);
    assert_eq!(r.code, 64);
    assert!(r.stderr.contains("--background-weight"), "{}", r.stderr);

    let out_dir = dir.path().join("out");
    let r = hepdesk([
        "analyze-w",
        "--signal", s(&signal), "--signal-weight", "0.6",
        "--background", s(&background), "--background-weight", "0.8",
        "--data", s(&data),
        "--out-dir", s(&out_dir),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    for panel in ["muon_pt", "met_pt", "muon_reliso", "muon_eta"] {
        assert!(out_dir.join(format!("{panel}.json")).exists(), "{panel}.json");
        assert!(out_dir.join(format!("{panel}.svg")).exists(), "{panel}.svg");
    }
    let cutflow = std::fs::read_to_string(out_dir.join("cutflow.txt")).unwrap();
    for role in ["== data (", "== signal (", "== background_1 ("] {
        assert!(cutflow.contains(role), "{role} in cutflow.txt");
    }
    assert!(cutflow.contains("one_muon"), "built-in spec applied");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["samples"].as_array().unwrap().len(), 3);
    assert_eq!(summary["selection"].as_array().unwrap().len(), 4);
    assert_eq!(summary["panels"].as_array().unwrap().len(), 4);
    assert_eq!(summary["met"], "stored");
    let panel: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("met_pt.json")).unwrap())
            .unwrap();
    assert_eq!(panel["edges"].as_array().unwrap().len(), 51);
    assert_eq!(panel["data"].as_array().unwrap().len(), 50);
    assert_eq!(panel["ratio"].as_array().unwrap().len(), 50);
}

#[test]
fn smear_identity_keeps_truth_muon_kinematics() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("t.feather");
    let reco = dir.path().join("r.jsonl");
    let r = hepdesk([
        "generate", "--process", "z-mumu", "-n", "25", "--seed", "77", "-o", s(&truth),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = hepdesk(["smear", s(&truth), "--identity", "-o", s(&reco)]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    // Under the identity detector every event keeps both muons, so the
    // two-muon cut is fully efficient.
    let spec = dir.path().join("sel.txt");
    std::fs::write(&spec, "two_muons reco_muon_count == 2\n").unwrap();
    let r = hepdesk(["select", s(&reco), "--spec", s(&spec)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let row: Vec<&str> = r.stdout.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(row[1], "25");
    assert_eq!(row[2], "25");
}
