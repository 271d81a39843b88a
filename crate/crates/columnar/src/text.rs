//! JSON Lines and CSV backends plus the whole-file compression wrappers.
//!
//! Both text formats print floats in the shortest representation that parses
//! back to the same bits, so round trips are exact. The JSONL decoder is the
//! lenient ingestion path: missing schema columns are filled with defaults
//! sized by the per-row object counts, unknown keys become extra columns,
//! and everything filled or inferred is reported as a warning.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use hepdesk_core::event::{
    parse_column_name, schema_column, Column, ColumnKind, EventTable, ParsedName, OBJECTS, SCHEMA,
};
use serde_json::{Map, Number, Value};

use crate::{format_err, ColumnarError, Compression, FormatKind, LoadedTable};

pub(crate) const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];
pub(crate) const ZSTD_MAGIC: [u8; 4] = [0x28, 0xb5, 0x2f, 0xfd];

fn parse_err(line: usize, column: Option<&str>, message: impl Into<String>) -> ColumnarError {
    ColumnarError::Parse {
        line,
        column: column.map(str::to_string),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Compression wrappers
// ---------------------------------------------------------------------------

pub(crate) fn compress(bytes: Vec<u8>, comp: Compression) -> Result<Vec<u8>, ColumnarError> {
    match comp {
        Compression::None => Ok(bytes),
        Compression::Gzip => {
            let mut enc =
                flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
            enc.write_all(&bytes)?;
            Ok(enc.finish()?)
        }
        Compression::Zstd => Ok(zstd::stream::encode_all(&bytes[..], 3)?),
        other => Err(ColumnarError::BadArgument {
            message: format!("{other} is not a whole-file compression"),
        }),
    }
}

/// Undo a whole-file wrapper if the magic bytes announce one.
pub(crate) fn decompress(bytes: Vec<u8>) -> Result<(Vec<u8>, Compression), ColumnarError> {
    if bytes.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(&bytes[..])
            .read_to_end(&mut out)
            .map_err(|e| format_err(bytes.len() as u64, format!("corrupt gzip stream: {e}")))?;
        return Ok((out, Compression::Gzip));
    }
    if bytes.starts_with(&ZSTD_MAGIC) {
        let out = zstd::stream::decode_all(&bytes[..])
            .map_err(|e| format_err(bytes.len() as u64, format!("corrupt zstd stream: {e}")))?;
        return Ok((out, Compression::Zstd));
    }
    Ok((bytes, Compression::None))
}

// ---------------------------------------------------------------------------
// JSONL encoding
// ---------------------------------------------------------------------------

fn json_f64(name: &str, x: f64) -> Result<Value, ColumnarError> {
    Number::from_f64(x).map(Value::Number).ok_or_else(|| {
        format_err(
            0,
            format!("column {name} holds {x}, which JSON cannot represent"),
        )
    })
}

pub(crate) fn encode_jsonl(t: &EventTable) -> Result<Vec<u8>, ColumnarError> {
    let mut out = Vec::new();
    for row in 0..t.n_rows {
        let mut obj = Map::with_capacity(t.columns.len());
        for (name, col) in &t.columns {
            let value = match col {
                Column::Int(v) => Value::from(v[row]),
                Column::Float(v) => json_f64(name, v[row])?,
                Column::Bool(v) => Value::from(v[row]),
                Column::IntList(v) => Value::Array(v[row].iter().map(|&x| Value::from(x)).collect()),
                Column::FloatList(v) => Value::Array(
                    v[row]
                        .iter()
                        .map(|&x| json_f64(name, x))
                        .collect::<Result<_, _>>()?,
                ),
                Column::BoolList(v) => {
                    Value::Array(v[row].iter().map(|&x| Value::from(x)).collect())
                }
            };
            obj.insert(name.clone(), value);
        }
        serde_json::to_writer(&mut out, &Value::Object(obj))
            .map_err(|e| format_err(0, e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSONL decoding (lenient ingestion)
// ---------------------------------------------------------------------------

/// `v` as an exact integer, accepting integral floats.
fn value_as_int(v: &Value) -> Option<i64> {
    if let Some(i) = v.as_i64() {
        return Some(i);
    }
    let f = v.as_f64()?;
    // Exact conversions only; 2^53 bounds the integers f64 stores exactly.
    (f.fract() == 0.0 && f.abs() <= 9.007_199_254_740_992e15).then_some(f as i64)
}

/// Counts for every object block in one row: explicit count column when
/// present, else the length of the first present array of the object, else 0.
fn row_counts(
    line: usize,
    obj: &Map<String, Value>,
) -> Result<HashMap<&'static str, usize>, ColumnarError> {
    let mut counts = HashMap::new();
    for &(infix, count_name) in OBJECTS {
        let count = if let Some(v) = obj.get(count_name) {
            let n = value_as_int(v)
                .filter(|&n| n >= 0)
                .ok_or_else(|| parse_err(line, Some(count_name), "expected a non-negative count"))?;
            n as usize
        } else {
            let prefix = format!("vec{infix}_");
            SCHEMA
                .iter()
                .filter(|s| s.name.starts_with(&prefix))
                .find_map(|s| obj.get(s.name).and_then(Value::as_array))
                .map_or(0, Vec::len)
        };
        counts.insert(infix, count);
    }
    Ok(counts)
}

struct JsonCell<'a> {
    line: usize,
    value: Option<&'a Value>,
    count: usize,
}

fn collect_cells<'a>(
    rows: &'a [(usize, Map<String, Value>)],
    counts: &[HashMap<&'static str, usize>],
    name: &str,
) -> Vec<JsonCell<'a>> {
    let object = match parse_column_name(name) {
        Some(ParsedName::Array { object, .. }) => Some(object.to_string()),
        _ => None,
    };
    rows.iter()
        .zip(counts)
        .map(|((line, obj), count)| JsonCell {
            line: *line,
            value: obj.get(name),
            count: object
                .as_deref()
                .and_then(|o| count.get(o).copied())
                .unwrap_or(0),
        })
        .collect()
}

fn json_scalar_column(
    name: &str,
    kind: ColumnKind,
    cells: &[JsonCell<'_>],
    filled: &mut usize,
) -> Result<Column, ColumnarError> {
    macro_rules! build {
        ($default:expr, $convert:expr, $wrap:expr) => {{
            let mut out = Vec::with_capacity(cells.len());
            for cell in cells {
                match cell.value {
                    Some(v) => out.push(
                        $convert(v).ok_or_else(|| parse_err(cell.line, Some(name), "wrong type"))?,
                    ),
                    None => {
                        *filled += 1;
                        out.push($default);
                    }
                }
            }
            Ok($wrap(out))
        }};
    }
    match kind {
        ColumnKind::Int => build!(0i64, value_as_int, Column::Int),
        ColumnKind::Float => build!(0.0f64, Value::as_f64, Column::Float),
        ColumnKind::Bool => build!(false, Value::as_bool, Column::Bool),
        _ => unreachable!("list kinds handled by json_list_column"),
    }
}

fn json_list_column(
    name: &str,
    kind: ColumnKind,
    counts_apply: bool,
    cells: &[JsonCell<'_>],
    filled: &mut usize,
) -> Result<Column, ColumnarError> {
    macro_rules! build {
        ($default:expr, $convert:expr, $wrap:expr) => {{
            let mut out = Vec::with_capacity(cells.len());
            for cell in cells {
                match cell.value {
                    Some(v) => {
                        let arr = v
                            .as_array()
                            .ok_or_else(|| parse_err(cell.line, Some(name), "expected an array"))?;
                        if counts_apply && arr.len() != cell.count {
                            return Err(parse_err(
                                cell.line,
                                Some(name),
                                format!(
                                    "object count is {} but the array has {} entries",
                                    cell.count,
                                    arr.len()
                                ),
                            ));
                        }
                        let row: Vec<_> = arr
                            .iter()
                            .map(|x| {
                                $convert(x).ok_or_else(|| {
                                    parse_err(cell.line, Some(name), "wrong element type")
                                })
                            })
                            .collect::<Result<_, _>>()?;
                        out.push(row);
                    }
                    None => {
                        *filled += 1;
                        let n = if counts_apply { cell.count } else { 0 };
                        out.push(vec![$default; n]);
                    }
                }
            }
            Ok($wrap(out))
        }};
    }
    match kind {
        ColumnKind::IntList => build!(0i64, value_as_int, Column::IntList),
        ColumnKind::FloatList => build!(0.0f64, Value::as_f64, Column::FloatList),
        ColumnKind::BoolList => build!(false, Value::as_bool, Column::BoolList),
        _ => unreachable!("scalar kinds handled by json_scalar_column"),
    }
}

/// Infer the column kind of an unknown key from the values it carries.
fn infer_kind(name: &str, cells: &[JsonCell<'_>]) -> Result<ColumnKind, ColumnarError> {
    let mut scalar: Option<ColumnKind> = None;
    let mut list: Option<ColumnKind> = None;
    let promote = |slot: &mut Option<ColumnKind>, kind: ColumnKind, line: usize| {
        match slot {
            None => *slot = Some(kind),
            Some(existing) => {
                // Ints promote to floats; anything else must agree.
                let merged = match (*existing, kind) {
                    (a, b) if a == b => a,
                    (ColumnKind::Int, ColumnKind::Float) | (ColumnKind::Float, ColumnKind::Int) => {
                        ColumnKind::Float
                    }
                    (ColumnKind::IntList, ColumnKind::FloatList)
                    | (ColumnKind::FloatList, ColumnKind::IntList) => ColumnKind::FloatList,
                    _ => return Err(parse_err(line, Some(name), "mixed value types")),
                };
                *slot = Some(merged);
            }
        }
        Ok(())
    };
    for cell in cells {
        let Some(v) = cell.value else { continue };
        match v {
            Value::Bool(_) => promote(&mut scalar, ColumnKind::Bool, cell.line)?,
            Value::Number(_) => {
                let kind = if v.as_i64().is_some() {
                    ColumnKind::Int
                } else {
                    ColumnKind::Float
                };
                promote(&mut scalar, kind, cell.line)?;
            }
            Value::Array(items) => {
                let mut kind = None;
                for item in items {
                    let item_kind = match item {
                        Value::Bool(_) => ColumnKind::BoolList,
                        Value::Number(_) if item.as_i64().is_some() => ColumnKind::IntList,
                        Value::Number(_) => ColumnKind::FloatList,
                        _ => return Err(parse_err(cell.line, Some(name), "unsupported array element")),
                    };
                    promote(&mut kind, item_kind, cell.line)?;
                }
                promote(&mut list, kind.unwrap_or(ColumnKind::FloatList), cell.line)?;
            }
            _ => return Err(parse_err(cell.line, Some(name), "unsupported value type")),
        }
    }
    match (scalar, list) {
        (Some(_), Some(_)) => Err(parse_err(
            cells[0].line,
            Some(name),
            "column mixes scalars and arrays",
        )),
        (Some(kind), None) => Ok(kind),
        (None, Some(kind)) => Ok(kind),
        // Key seen nowhere? Cannot happen: extras are collected from rows.
        (None, None) => Ok(ColumnKind::FloatList),
    }
}

pub(crate) fn decode_jsonl(bytes: &[u8]) -> Result<(EventTable, Vec<String>), ColumnarError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| format_err(e.valid_up_to() as u64, "invalid UTF-8"))?;
    let mut rows: Vec<(usize, Map<String, Value>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| parse_err(i + 1, None, e.to_string()))?;
        match value {
            Value::Object(map) => rows.push((i + 1, map)),
            _ => return Err(parse_err(i + 1, None, "expected a JSON object per line")),
        }
    }
    if rows.is_empty() {
        return Ok((EventTable::new(0), Vec::new()));
    }

    let counts: Vec<HashMap<&'static str, usize>> = rows
        .iter()
        .map(|(line, obj)| row_counts(*line, obj))
        .collect::<Result<_, _>>()?;

    let mut table = EventTable::new(rows.len());
    let mut warnings = Vec::new();

    for spec in SCHEMA {
        let present_in = rows
            .iter()
            .filter(|(_, obj)| obj.contains_key(spec.name))
            .count();
        if !spec.required && present_in == 0 {
            continue;
        }
        // Count columns come straight from `counts`: when explicit they were
        // validated there, when absent they derive from the array lengths.
        if let Some(&(infix, _)) = OBJECTS.iter().find(|&&(_, cn)| cn == spec.name) {
            if present_in < rows.len() {
                warnings.push(format!(
                    "column {}: missing in {} row(s), derived from array lengths",
                    spec.name,
                    rows.len() - present_in
                ));
            }
            table.insert(
                spec.name,
                Column::Int(counts.iter().map(|c| c[infix] as i64).collect()),
            );
            continue;
        }
        let cells = collect_cells(&rows, &counts, spec.name);
        let mut filled = 0usize;
        let column = match spec.kind {
            ColumnKind::Int | ColumnKind::Float | ColumnKind::Bool => {
                json_scalar_column(spec.name, spec.kind, &cells, &mut filled)?
            }
            _ => json_list_column(spec.name, spec.kind, true, &cells, &mut filled)?,
        };
        if filled > 0 {
            warnings.push(format!(
                "column {}: missing in {filled} row(s), filled with defaults",
                spec.name
            ));
        }
        table.insert(spec.name, column);
    }

    // Unknown keys, in first-appearance order.
    for (_, obj) in &rows {
        for name in obj.keys() {
            if schema_column(name).is_some() || table.get(name).is_some() {
                continue;
            }
            let cells = collect_cells(&rows, &counts, name);
            let kind = infer_kind(name, &cells)?;
            let mut filled = 0usize;
            let column = match kind {
                ColumnKind::Int | ColumnKind::Float | ColumnKind::Bool => {
                    json_scalar_column(name, kind, &cells, &mut filled)?
                }
                _ => json_list_column(name, kind, false, &cells, &mut filled)?,
            };
            warnings.push(format!("unknown column {name} kept as {kind}"));
            table.insert(name.as_str(), column);
        }
    }

    Ok((table, warnings))
}

/// Lenient per-event JSONL ingestion (also accepts gzip/zstd-wrapped files).
pub fn ingest_jsonl(path: &Path) -> Result<LoadedTable, ColumnarError> {
    crate::read_table(path, Some(FormatKind::Jsonl))
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

fn float_cell(x: f64) -> String {
    // Shortest representation that parses back to the same bits.
    format!("{x}")
}

fn list_cell<T, F: Fn(&T) -> String>(row: &[T], f: F) -> String {
    let items: Vec<String> = row.iter().map(f).collect();
    format!("[{}]", items.join(","))
}

pub(crate) fn encode_csv(t: &EventTable) -> Result<Vec<u8>, ColumnarError> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(t.columns.keys())
        .map_err(|e| format_err(0, e.to_string()))?;
    for row in 0..t.n_rows {
        let record: Vec<String> = t
            .columns
            .values()
            .map(|col| match col {
                Column::Int(v) => v[row].to_string(),
                Column::Float(v) => float_cell(v[row]),
                Column::Bool(v) => v[row].to_string(),
                Column::IntList(v) => list_cell(&v[row], |x| x.to_string()),
                Column::FloatList(v) => list_cell(&v[row], |x| float_cell(*x)),
                Column::BoolList(v) => list_cell(&v[row], |x| x.to_string()),
            })
            .collect();
        w.write_record(&record)
            .map_err(|e| format_err(0, e.to_string()))?;
    }
    w.into_inner().map_err(|e| format_err(0, e.to_string()))
}

fn strip_brackets<'a>(cell: &'a str, line: usize, name: &str) -> Result<&'a str, ColumnarError> {
    cell.trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, Some(name), "expected a [..] list cell"))
}

fn parse_items<T: std::str::FromStr>(
    inner: &str,
    line: usize,
    name: &str,
) -> Result<Vec<T>, ColumnarError> {
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| parse_err(line, Some(name), format!("bad list item {:?}", s.trim())))
        })
        .collect()
}

fn csv_column(
    name: &str,
    kind: ColumnKind,
    cells: &[(usize, &str)],
) -> Result<Column, ColumnarError> {
    macro_rules! scalars {
        ($ty:ty, $wrap:expr) => {{
            let mut out = Vec::with_capacity(cells.len());
            for &(line, cell) in cells {
                out.push(cell.trim().parse::<$ty>().map_err(|_| {
                    parse_err(line, Some(name), format!("bad value {:?}", cell.trim()))
                })?);
            }
            Ok($wrap(out))
        }};
    }
    macro_rules! lists {
        ($ty:ty, $wrap:expr) => {{
            let mut out = Vec::with_capacity(cells.len());
            for &(line, cell) in cells {
                out.push(parse_items::<$ty>(strip_brackets(cell, line, name)?, line, name)?);
            }
            Ok($wrap(out))
        }};
    }
    match kind {
        ColumnKind::Int => scalars!(i64, Column::Int),
        ColumnKind::Float => scalars!(f64, Column::Float),
        ColumnKind::Bool => scalars!(bool, Column::Bool),
        ColumnKind::IntList => lists!(i64, Column::IntList),
        ColumnKind::FloatList => lists!(f64, Column::FloatList),
        ColumnKind::BoolList => lists!(bool, Column::BoolList),
    }
}

/// Kind of an unknown CSV column, decided from its cell shapes: lists by
/// brackets, then the narrowest scalar type that parses every row.
fn infer_csv_kind(cells: &[(usize, &str)]) -> ColumnKind {
    let non_empty: Vec<&str> = cells.iter().map(|&(_, c)| c.trim()).collect();
    let is_list = non_empty.iter().any(|c| c.starts_with('['));
    if is_list {
        let all = |f: &dyn Fn(&str) -> bool| {
            non_empty.iter().all(|c| {
                c.strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .is_some_and(|inner| {
                        inner.trim().is_empty() || inner.split(',').all(|i| f(i.trim()))
                    })
            })
        };
        if all(&|i| i.parse::<i64>().is_ok()) {
            ColumnKind::IntList
        } else if all(&|i| i.parse::<f64>().is_ok()) {
            ColumnKind::FloatList
        } else {
            ColumnKind::BoolList
        }
    } else if non_empty.iter().all(|c| c.parse::<i64>().is_ok()) {
        ColumnKind::Int
    } else if non_empty.iter().all(|c| c.parse::<f64>().is_ok()) {
        ColumnKind::Float
    } else {
        ColumnKind::Bool
    }
}

pub(crate) fn decode_csv(bytes: &[u8]) -> Result<(EventTable, Vec<String>), ColumnarError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, None, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut records: Vec<csv::StringRecord> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        records.push(record.map_err(|e| parse_err(i + 2, None, e.to_string()))?);
    }

    let mut table = EventTable::new(records.len());
    let mut warnings = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        // Header line is line 1; data rows follow.
        let cells: Vec<(usize, &str)> = records
            .iter()
            .enumerate()
            .map(|(row, rec)| (row + 2, rec.get(idx).unwrap_or("")))
            .collect();
        let kind = match schema_column(name) {
            Some(spec) => spec.kind,
            None => {
                let inferred = if records.is_empty() {
                    ColumnKind::Float
                } else {
                    infer_csv_kind(&cells)
                };
                warnings.push(format!("unknown column {name} kept as {inferred}"));
                inferred
            }
        };
        table.insert(name.as_str(), csv_column(name, kind, &cells)?);
    }
    Ok((table, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> EventTable {
        let mut t = EventTable::new(2);
        t.insert("nEvent", Column::Int(vec![1, 2]));
        t.insert("fMET_PT", Column::Float(vec![12.75, 0.0625]));
        t.insert("HLT_Mu24", Column::Bool(vec![true, false]));
        t.insert("nMuon", Column::Int(vec![2, 0]));
        t.insert(
            "vecMuon_PT",
            Column::FloatList(vec![vec![30.5, 8.25], vec![]]),
        );
        t.insert("vecMuon_Q", Column::FloatList(vec![vec![1.0, -1.0], vec![]]));
        t
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let t = sample_table();
        let bytes = encode_jsonl(&t).unwrap();
        let (back, warnings) = decode_jsonl(&bytes).unwrap();
        for (name, col) in &t.columns {
            assert_eq!(back.get(name), Some(col), "{name}");
        }
        assert_eq!(back.n_rows, 2);
        // The sample carries only a few schema columns; the rest are filled.
        assert!(warnings.iter().any(|w| w.contains("filled with defaults")));
    }

    #[test]
    fn jsonl_reports_count_array_mismatches() {
        let line = r#"{"nMuon": 2, "vecMuon_PT": [1.0, 2.0, 3.0]}"#;
        let err = decode_jsonl(line.as_bytes()).unwrap_err();
        match err {
            ColumnarError::Parse { line, column, message } => {
                assert_eq!(line, 1);
                assert_eq!(column.as_deref(), Some("vecMuon_PT"));
                assert!(message.contains("2") && message.contains("3"), "{message}");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn jsonl_derives_counts_and_keeps_unknown_keys() {
        let text = concat!(
            "{\"vecMuon_PT\": [5.0, 6.0], \"myScore\": 0.5}\n",
            "{\"vecMuon_PT\": [7.0], \"myScore\": 1.5}\n",
        );
        let (t, warnings) = decode_jsonl(text.as_bytes()).unwrap();
        assert_eq!(t.get("nMuon"), Some(&Column::Int(vec![2, 1])));
        // Sibling muon arrays are filled to the derived count.
        assert_eq!(
            t.get("vecMuon_Eta"),
            Some(&Column::FloatList(vec![vec![0.0, 0.0], vec![0.0]]))
        );
        assert_eq!(t.get("myScore"), Some(&Column::Float(vec![0.5, 1.5])));
        assert!(warnings.iter().any(|w| w.contains("myScore")));
    }

    #[test]
    fn jsonl_rejects_malformed_lines_with_positions() {
        let err = decode_jsonl(b"{\"nEvent\": 1}\nnot json\n").unwrap_err();
        assert!(matches!(err, ColumnarError::Parse { line: 2, .. }));
        let err = decode_jsonl(b"[1, 2]\n").unwrap_err();
        assert!(matches!(err, ColumnarError::Parse { line: 1, .. }));
        let err = decode_jsonl(b"{\"nEvent\": \"seven\"}\n").unwrap_err();
        match err {
            ColumnarError::Parse { column, .. } => assert_eq!(column.as_deref(), Some("nEvent")),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn empty_jsonl_is_an_empty_table() {
        let (t, warnings) = decode_jsonl(b"").unwrap();
        assert_eq!(t.n_rows, 0);
        assert!(t.columns.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample_table();
        let bytes = encode_csv(&t).unwrap();
        let (back, warnings) = decode_csv(&bytes).unwrap();
        assert_eq!(back, t);
        assert!(warnings.is_empty());
    }

    #[test]
    fn csv_infers_unknown_columns() {
        let data = b"nEvent,myTag,myList\n1,0.5,\"[1,2]\"\n2,1.5,[]\n";
        let (t, warnings) = decode_csv(data).unwrap();
        assert_eq!(t.get("myTag"), Some(&Column::Float(vec![0.5, 1.5])));
        assert_eq!(t.get("myList"), Some(&Column::IntList(vec![vec![1, 2], vec![]])));
        assert_eq!(warnings.len(), 2);
    }

    #[test]
    fn csv_errors_name_row_and_column() {
        let data = b"nEvent\n1\nx\n";
        let err = decode_csv(data).unwrap_err();
        match err {
            ColumnarError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column.as_deref(), Some("nEvent"));
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn compression_wrappers_round_trip() {
        let payload = b"nEvent\n1\n2\n".to_vec();
        for comp in [Compression::Gzip, Compression::Zstd] {
            let packed = compress(payload.clone(), comp).unwrap();
            assert_ne!(packed, payload);
            let (unpacked, detected) = decompress(packed).unwrap();
            assert_eq!(unpacked, payload);
            assert_eq!(detected, comp);
        }
        let (same, detected) = decompress(payload.clone()).unwrap();
        assert_eq!(same, payload);
        assert_eq!(detected, Compression::None);
    }

    #[test]
    fn corrupt_wrappers_are_format_errors() {
        let mut packed = compress(b"payload".to_vec(), Compression::Gzip).unwrap();
        packed.truncate(packed.len() / 2);
        assert!(matches!(
            decompress(packed),
            Err(ColumnarError::Format { .. })
        ));
    }
}
