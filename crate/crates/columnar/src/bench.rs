//! Benchmark harness comparing the serialization formats on size, write
//! speed and read speed. Rows run serially so I/O timings do not contaminate
//! each other; each row verifies the round trip before it counts.

use std::path::Path;
use std::time::Instant;

use hepdesk_core::event::EventTable;
use serde_json::{json, Value};

use crate::{format_err, read_table, write_table, ColumnarError, Compression, FileFormat, FormatKind};

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub format: FormatKind,
    pub compression: Compression,
    pub file_bytes: u64,
    /// Median over the timed repetitions.
    pub write_ms: f64,
    pub read_ms: f64,
    pub n_events: usize,
    pub completed: bool,
    pub error: Option<String>,
    pub raw_write_ms: Vec<f64>,
    pub raw_read_ms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Free-text host metadata for the JSON report.
    pub environment: String,
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn ms(from: Instant) -> f64 {
    from.elapsed().as_secs_f64() * 1e3
}

fn bench_one(
    t: &EventTable,
    fmt: FileFormat,
    repetitions: usize,
    workdir: &Path,
) -> Result<BenchRow, ColumnarError> {
    let path = workdir.join(format!(
        "bench-{}-{}.{}",
        fmt.kind,
        fmt.compression,
        fmt.extension()
    ));
    let outcome = (|| {
        // Warm-up pass, also the round-trip verification; not timed.
        write_table(t, &path, fmt)?;
        let loaded = read_table(&path, Some(fmt.kind))?;
        if &loaded.table != t {
            return Err(format_err(0, "round-trip verification failed"));
        }
        let mut raw_write_ms = Vec::with_capacity(repetitions);
        let mut raw_read_ms = Vec::with_capacity(repetitions);
        let mut file_bytes = 0;
        for _ in 0..repetitions {
            let t0 = Instant::now();
            file_bytes = write_table(t, &path, fmt)?;
            raw_write_ms.push(ms(t0));
            let t1 = Instant::now();
            read_table(&path, Some(fmt.kind))?;
            raw_read_ms.push(ms(t1));
        }
        Ok(BenchRow {
            format: fmt.kind,
            compression: fmt.compression,
            file_bytes,
            write_ms: median(&raw_write_ms),
            read_ms: median(&raw_read_ms),
            n_events: t.n_rows,
            completed: true,
            error: None,
            raw_write_ms,
            raw_read_ms,
        })
    })();
    // Temp artifacts never outlive their row, pass or fail.
    let _ = std::fs::remove_file(&path);
    outcome
}

/// Benchmark every (format, compression) pair of `matrix` on the same table.
/// A failing pair marks its row failed and the matrix continues.
pub fn run_benchmark(
    t: &EventTable,
    matrix: &[FileFormat],
    repetitions: usize,
    workdir: &Path,
) -> Result<BenchReport, ColumnarError> {
    if repetitions < 3 {
        return Err(ColumnarError::BadArgument {
            message: format!("need at least 3 repetitions for stable medians, got {repetitions}"),
        });
    }
    let rows = matrix
        .iter()
        .map(|&fmt| {
            bench_one(t, fmt, repetitions, workdir).unwrap_or_else(|e| BenchRow {
                format: fmt.kind,
                compression: fmt.compression,
                file_bytes: 0,
                write_ms: 0.0,
                read_ms: 0.0,
                n_events: t.n_rows,
                completed: false,
                error: Some(e.to_string()),
                raw_write_ms: Vec::new(),
                raw_read_ms: Vec::new(),
            })
        })
        .collect();
    let environment = format!(
        "os={} arch={} threads={}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get())
    );
    Ok(BenchReport { rows, environment })
}

/// Completed rows only, with the fixed header.
pub fn report_to_csv(report: &BenchReport) -> String {
    let mut out = String::from("format,compression,file_bytes,write_ms,read_ms,n_events\n");
    for row in report.rows.iter().filter(|r| r.completed) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.format, row.compression, row.file_bytes, row.write_ms, row.read_ms, row.n_events
        ));
    }
    out
}

/// Every row (including failures) plus raw timings and host metadata.
pub fn report_to_json(report: &BenchReport) -> Value {
    json!({
        "environment": report.environment,
        "rows": report.rows.iter().map(|r| json!({
            "format": r.format.as_str(),
            "compression": r.compression.as_str(),
            "file_bytes": r.file_bytes,
            "write_ms": r.write_ms,
            "read_ms": r.read_ms,
            "n_events": r.n_events,
            "completed": r.completed,
            "error": r.error,
            "raw_write_ms": r.raw_write_ms,
            "raw_read_ms": r.raw_read_ms,
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_handles_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }

    #[test]
    fn csv_report_skips_failed_rows() {
        let report = BenchReport {
            rows: vec![
                BenchRow {
                    format: FormatKind::ArrowIpc,
                    compression: Compression::Zstd,
                    file_bytes: 100,
                    write_ms: 1.5,
                    read_ms: 0.5,
                    n_events: 10,
                    completed: true,
                    error: None,
                    raw_write_ms: vec![1.5],
                    raw_read_ms: vec![0.5],
                },
                BenchRow {
                    format: FormatKind::ArrowIpc,
                    compression: Compression::Brotli,
                    file_bytes: 0,
                    write_ms: 0.0,
                    read_ms: 0.0,
                    n_events: 10,
                    completed: false,
                    error: Some("unsupported".into()),
                    raw_write_ms: Vec::new(),
                    raw_read_ms: Vec::new(),
                },
            ],
            environment: "test".into(),
        };
        let csv = report_to_csv(&report);
        assert_eq!(
            csv,
            "format,compression,file_bytes,write_ms,read_ms,n_events\n\
             arrow-ipc,zstd,100,1.5,0.5,10\n"
        );
        let j = report_to_json(&report);
        assert_eq!(j["rows"].as_array().unwrap().len(), 2);
        assert_eq!(j["rows"][1]["completed"], serde_json::json!(false));
    }
}
