//! ArrowIPC (feather v2) and Parquet backends. Compression is internal to
//! both formats: IPC bodies support zstd/lz4, Parquet pages carry their own
//! codec configuration.

use std::fs::File;
use std::path::Path;

use arrow::array::RecordBatch;
use arrow::ipc::reader::FileReader;
use arrow::ipc::writer::{FileWriter, IpcWriteOptions};
use arrow::ipc::CompressionType;
use hepdesk_core::event::EventTable;
use parquet::arrow::arrow_reader::ParquetRecordBatchReaderBuilder;
use parquet::arrow::ArrowWriter;
use parquet::basic::{BrotliLevel, Compression as ParquetCodec, GzipLevel, ZstdLevel};
use parquet::file::properties::WriterProperties;

use crate::arrow_convert::{batches_to_table, table_to_batch};
use crate::{format_err, ColumnarError, Compression};

/// Map library errors on read to a format error anchored at the file size:
/// both formats are footer-driven, so corruption usually surfaces when the
/// trailing metadata cannot be reconstructed.
fn read_err(path: &Path, e: impl std::fmt::Display) -> ColumnarError {
    let offset = std::fs::metadata(path).map(|m| m.len()).unwrap_or(0);
    format_err(offset, e.to_string())
}

pub(crate) fn write_arrow(
    t: &EventTable,
    path: &Path,
    comp: Compression,
) -> Result<u64, ColumnarError> {
    let batch = table_to_batch(t)?;
    let codec = match comp {
        Compression::None => None,
        Compression::Zstd => Some(CompressionType::ZSTD),
        Compression::Lz4 => Some(CompressionType::LZ4_FRAME),
        other => {
            return Err(ColumnarError::UnsupportedCombination {
                kind: crate::FormatKind::ArrowIpc,
                compression: other,
            })
        }
    };
    let options = IpcWriteOptions::default()
        .try_with_compression(codec)
        .map_err(|e| format_err(0, e.to_string()))?;
    let file = File::create(path)?;
    let mut writer = FileWriter::try_new_with_options(file, batch.schema_ref(), options)
        .map_err(|e| format_err(0, e.to_string()))?;
    writer.write(&batch).map_err(|e| format_err(0, e.to_string()))?;
    writer.finish().map_err(|e| format_err(0, e.to_string()))?;
    Ok(std::fs::metadata(path)?.len())
}

pub(crate) fn read_arrow(path: &Path) -> Result<EventTable, ColumnarError> {
    let file = File::open(path)?;
    let reader = FileReader::try_new(file, None).map_err(|e| read_err(path, e))?;
    let schema = reader.schema();
    let batches: Vec<RecordBatch> = reader
        .collect::<Result<_, _>>()
        .map_err(|e| read_err(path, e))?;
    batches_to_table(&schema, &batches)
}

pub(crate) fn write_parquet(
    t: &EventTable,
    path: &Path,
    comp: Compression,
) -> Result<u64, ColumnarError> {
    let batch = table_to_batch(t)?;
    let codec = match comp {
        Compression::None => ParquetCodec::UNCOMPRESSED,
        Compression::Zstd => ParquetCodec::ZSTD(ZstdLevel::try_new(3).expect("fixed level")),
        Compression::Gzip => ParquetCodec::GZIP(GzipLevel::default()),
        Compression::Brotli => ParquetCodec::BROTLI(BrotliLevel::default()),
        Compression::Snappy => ParquetCodec::SNAPPY,
        other => {
            return Err(ColumnarError::UnsupportedCombination {
                kind: crate::FormatKind::Parquet,
                compression: other,
            })
        }
    };
    let props = WriterProperties::builder().set_compression(codec).build();
    let file = File::create(path)?;
    let mut writer = ArrowWriter::try_new(file, batch.schema(), Some(props))
        .map_err(|e| format_err(0, e.to_string()))?;
    writer.write(&batch).map_err(|e| format_err(0, e.to_string()))?;
    writer.close().map_err(|e| format_err(0, e.to_string()))?;
    Ok(std::fs::metadata(path)?.len())
}

pub(crate) fn read_parquet(path: &Path) -> Result<EventTable, ColumnarError> {
    let file = File::open(path)?;
    let builder = ParquetRecordBatchReaderBuilder::try_new(file).map_err(|e| read_err(path, e))?;
    let schema = builder.schema().clone();
    let reader = builder.build().map_err(|e| read_err(path, e))?;
    let batches: Vec<RecordBatch> = reader
        .collect::<Result<_, _>>()
        .map_err(|e| read_err(path, e))?;
    batches_to_table(&schema, &batches)
}
