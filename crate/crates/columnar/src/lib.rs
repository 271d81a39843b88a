//! Reading and writing event column tables in four serialization formats —
//! ArrowIPC (feather v2), Parquet, JSON Lines and CSV — with selectable
//! compression, format auto-detection, a lenient JSONL ingestion path and a
//! benchmark harness comparing size and speed across formats.

mod arrow_convert;
mod bench;
mod binary;
mod text;

pub use bench::{report_to_csv, report_to_json, run_benchmark, BenchReport, BenchRow};
pub use text::ingest_jsonl;

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use hepdesk_core::event::{validate_table, EventTable};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ColumnarError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{kind} does not support {compression} compression")]
    UnsupportedCombination {
        kind: FormatKind,
        compression: Compression,
    },
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("parse error at line {line}{}: {message}", column_suffix(.column))]
    Parse {
        line: usize,
        column: Option<String>,
        message: String,
    },
    #[error("{message}")]
    BadArgument { message: String },
}

fn column_suffix(column: &Option<String>) -> String {
    match column {
        Some(c) => format!(", column {c}"),
        None => String::new(),
    }
}

pub(crate) fn format_err(offset: u64, message: impl Into<String>) -> ColumnarError {
    ColumnarError::Format {
        offset,
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Formats and the support matrix
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatKind {
    /// Arrow IPC file format, a.k.a. feather v2.
    ArrowIpc,
    Parquet,
    Jsonl,
    Csv,
}

impl FormatKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormatKind::ArrowIpc => "arrow-ipc",
            FormatKind::Parquet => "parquet",
            FormatKind::Jsonl => "jsonl",
            FormatKind::Csv => "csv",
        }
    }

    /// Canonical file extension (before any compression suffix).
    pub fn extension(&self) -> &'static str {
        match self {
            FormatKind::ArrowIpc => "feather",
            FormatKind::Parquet => "parquet",
            FormatKind::Jsonl => "jsonl",
            FormatKind::Csv => "csv",
        }
    }

    pub const ALL: [FormatKind; 4] = [
        FormatKind::ArrowIpc,
        FormatKind::Parquet,
        FormatKind::Jsonl,
        FormatKind::Csv,
    ];
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormatKind {
    type Err = ColumnarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arrow-ipc" | "arrow" | "feather" | "ipc" => Ok(FormatKind::ArrowIpc),
            "parquet" => Ok(FormatKind::Parquet),
            "jsonl" | "ndjson" => Ok(FormatKind::Jsonl),
            "csv" => Ok(FormatKind::Csv),
            other => Err(ColumnarError::BadArgument {
                message: format!(
                    "unknown format {other:?} (expected arrow-ipc, parquet, jsonl or csv)"
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compression {
    None,
    Zstd,
    Lz4,
    Gzip,
    Brotli,
    Snappy,
}

impl Compression {
    pub fn as_str(&self) -> &'static str {
        match self {
            Compression::None => "none",
            Compression::Zstd => "zstd",
            Compression::Lz4 => "lz4",
            Compression::Gzip => "gzip",
            Compression::Brotli => "brotli",
            Compression::Snappy => "snappy",
        }
    }
}

impl fmt::Display for Compression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Compression {
    type Err = ColumnarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Compression::None),
            "zstd" => Ok(Compression::Zstd),
            "lz4" => Ok(Compression::Lz4),
            "gzip" => Ok(Compression::Gzip),
            "brotli" => Ok(Compression::Brotli),
            "snappy" => Ok(Compression::Snappy),
            other => Err(ColumnarError::BadArgument {
                message: format!(
                    "unknown compression {other:?} (expected none, zstd, lz4, gzip, brotli or snappy)"
                ),
            }),
        }
    }
}

/// A (kind, compression) pair from the support matrix:
/// ArrowIPC × {none, zstd, lz4}; Parquet × {none, zstd, gzip, brotli,
/// snappy}; Jsonl/Csv × {none, gzip, zstd} (whole-file wrappers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FileFormat {
    pub kind: FormatKind,
    pub compression: Compression,
}

impl FileFormat {
    pub fn new(kind: FormatKind, compression: Compression) -> Result<Self, ColumnarError> {
        if !Self::is_supported(kind, compression) {
            return Err(ColumnarError::UnsupportedCombination { kind, compression });
        }
        Ok(FileFormat { kind, compression })
    }

    pub fn is_supported(kind: FormatKind, compression: Compression) -> bool {
        use Compression::*;
        match kind {
            FormatKind::ArrowIpc => matches!(compression, None | Zstd | Lz4),
            FormatKind::Parquet => matches!(compression, None | Zstd | Gzip | Brotli | Snappy),
            FormatKind::Jsonl | FormatKind::Csv => matches!(compression, None | Gzip | Zstd),
        }
    }

    /// Every supported (kind, compression) pair, in a fixed order.
    pub fn support_matrix() -> Vec<FileFormat> {
        use Compression::*;
        let mut out = Vec::new();
        for kind in FormatKind::ALL {
            for compression in [None, Zstd, Lz4, Gzip, Brotli, Snappy] {
                if Self::is_supported(kind, compression) {
                    out.push(FileFormat { kind, compression });
                }
            }
        }
        out
    }

    /// Canonical extension including the compression suffix for text
    /// wrappers (e.g. `jsonl.zst`).
    pub fn extension(&self) -> String {
        let base = self.kind.extension();
        match (self.kind, self.compression) {
            (FormatKind::Jsonl | FormatKind::Csv, Compression::Gzip) => format!("{base}.gz"),
            (FormatKind::Jsonl | FormatKind::Csv, Compression::Zstd) => format!("{base}.zst"),
            _ => base.to_string(),
        }
    }
}

impl Default for FileFormat {
    /// Feather v2 with zstd bodies: compact and fast to read back.
    fn default() -> Self {
        FileFormat {
            kind: FormatKind::ArrowIpc,
            compression: Compression::Zstd,
        }
    }
}

impl fmt::Display for FileFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.kind, self.compression)
    }
}

// ---------------------------------------------------------------------------
// Top-level read/write
// ---------------------------------------------------------------------------

/// Write `t` to `path` in the requested format. Returns the bytes written.
pub fn write_table(t: &EventTable, path: &Path, fmt: FileFormat) -> Result<u64, ColumnarError> {
    if !FileFormat::is_supported(fmt.kind, fmt.compression) {
        return Err(ColumnarError::UnsupportedCombination {
            kind: fmt.kind,
            compression: fmt.compression,
        });
    }
    match fmt.kind {
        FormatKind::ArrowIpc => binary::write_arrow(t, path, fmt.compression),
        FormatKind::Parquet => binary::write_parquet(t, path, fmt.compression),
        FormatKind::Jsonl | FormatKind::Csv => {
            let raw = match fmt.kind {
                FormatKind::Jsonl => text::encode_jsonl(t)?,
                _ => text::encode_csv(t)?,
            };
            let wrapped = text::compress(raw, fmt.compression)?;
            std::fs::write(path, &wrapped)?;
            Ok(wrapped.len() as u64)
        }
    }
}

/// A table read from disk, with the detected format and any schema or
/// ingestion warnings. `compression` reports the whole-file wrapper of text
/// formats; the internal codecs of ArrowIPC/Parquet are self-describing and
/// reported as `None`.
#[derive(Debug)]
pub struct LoadedTable {
    pub table: EventTable,
    pub kind: FormatKind,
    pub compression: Compression,
    pub warnings: Vec<String>,
}

/// Read a table, auto-detecting the format from magic bytes when `hint` is
/// absent. The result always carries schema-validation findings as warnings;
/// hard structural failures are errors.
pub fn read_table(path: &Path, hint: Option<FormatKind>) -> Result<LoadedTable, ColumnarError> {
    let mut head = [0u8; 8];
    let n_head = {
        let mut f = File::open(path)?;
        read_up_to(&mut f, &mut head)?
    };
    let kind = match hint {
        Some(k) => k,
        None => sniff_kind(path, &head[..n_head])?,
    };
    let (table, compression, mut warnings) = match kind {
        FormatKind::ArrowIpc => (binary::read_arrow(path)?, Compression::None, Vec::new()),
        FormatKind::Parquet => (binary::read_parquet(path)?, Compression::None, Vec::new()),
        FormatKind::Jsonl | FormatKind::Csv => {
            let bytes = std::fs::read(path)?;
            let (inner, compression) = text::decompress(bytes)?;
            let (table, warnings) = match kind {
                FormatKind::Jsonl => text::decode_jsonl(&inner)?,
                _ => text::decode_csv(&inner)?,
            };
            (table, compression, warnings)
        }
    };
    let report = validate_table(&table);
    warnings.extend(report.warnings.iter().map(|w| w.to_string()));
    warnings.extend(report.violations.iter().map(|v| format!("schema: {v}")));
    Ok(LoadedTable {
        table,
        kind,
        compression,
        warnings,
    })
}

fn read_up_to(f: &mut File, buf: &mut [u8]) -> Result<usize, std::io::Error> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = f.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

fn sniff_kind(path: &Path, head: &[u8]) -> Result<FormatKind, ColumnarError> {
    if head.is_empty() {
        return Err(format_err(0, "empty file; pass an explicit format"));
    }
    if head.starts_with(b"ARROW1") {
        return Ok(FormatKind::ArrowIpc);
    }
    if head.starts_with(b"PAR1") {
        return Ok(FormatKind::Parquet);
    }
    // Text formats, possibly behind a whole-file compression wrapper.
    let sample: Vec<u8> = if head.starts_with(&text::GZIP_MAGIC) || head.starts_with(&text::ZSTD_MAGIC)
    {
        let bytes = std::fs::read(path)?;
        let (inner, _) = text::decompress(bytes)?;
        inner.into_iter().take(64).collect()
    } else {
        head.to_vec()
    };
    match sample.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => Ok(FormatKind::Jsonl),
        Some(_) => Ok(FormatKind::Csv),
        None => Err(format_err(0, "blank file; pass an explicit format")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_matrix_matches_the_documented_pairs() {
        let matrix = FileFormat::support_matrix();
        assert_eq!(matrix.len(), 3 + 5 + 3 + 3);
        assert!(FileFormat::is_supported(FormatKind::ArrowIpc, Compression::Lz4));
        assert!(!FileFormat::is_supported(FormatKind::ArrowIpc, Compression::Brotli));
        assert!(!FileFormat::is_supported(FormatKind::ArrowIpc, Compression::Gzip));
        assert!(!FileFormat::is_supported(FormatKind::Parquet, Compression::Lz4));
        assert!(!FileFormat::is_supported(FormatKind::Csv, Compression::Snappy));
        assert!(FileFormat::is_supported(FormatKind::Jsonl, Compression::Zstd));
    }

    #[test]
    fn format_names_round_trip() {
        for fmt in FileFormat::support_matrix() {
            assert_eq!(fmt.kind.as_str().parse::<FormatKind>().unwrap(), fmt.kind);
            assert_eq!(
                fmt.compression.as_str().parse::<Compression>().unwrap(),
                fmt.compression
            );
        }
        assert_eq!("feather".parse::<FormatKind>().unwrap(), FormatKind::ArrowIpc);
        assert!("root".parse::<FormatKind>().is_err());
        assert!("xz".parse::<Compression>().is_err());
    }

    #[test]
    fn unsupported_pairs_are_rejected_at_construction() {
        let err = FileFormat::new(FormatKind::ArrowIpc, Compression::Brotli).unwrap_err();
        assert!(matches!(err, ColumnarError::UnsupportedCombination { .. }));
        assert!(FileFormat::new(FormatKind::Parquet, Compression::Snappy).is_ok());
    }
}
