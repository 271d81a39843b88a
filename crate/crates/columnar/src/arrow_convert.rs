//! EventTable <-> Arrow RecordBatch conversion shared by the ArrowIPC and
//! Parquet backends. Scalars map to Int64/Float64/Boolean, ragged columns to
//! List<...> with no nulls anywhere.

use std::sync::Arc;

use arrow::array::{
    Array, ArrayRef, BooleanArray, BooleanBuilder, Float64Array, Float64Builder, Int64Array,
    Int64Builder, ListArray, ListBuilder, RecordBatch, RecordBatchOptions,
};
use arrow::datatypes::{DataType, Field, Schema};
use hepdesk_core::event::{Column, EventTable};

use crate::{format_err, ColumnarError};

pub(crate) fn table_to_batch(t: &EventTable) -> Result<RecordBatch, ColumnarError> {
    let mut fields = Vec::with_capacity(t.columns.len());
    let mut arrays: Vec<ArrayRef> = Vec::with_capacity(t.columns.len());
    for (name, col) in &t.columns {
        let array: ArrayRef = match col {
            Column::Int(v) => Arc::new(Int64Array::from(v.clone())),
            Column::Float(v) => Arc::new(Float64Array::from(v.clone())),
            Column::Bool(v) => Arc::new(BooleanArray::from(v.clone())),
            Column::IntList(v) => {
                let mut b = ListBuilder::new(Int64Builder::new());
                for row in v {
                    b.values().append_slice(row);
                    b.append(true);
                }
                Arc::new(b.finish())
            }
            Column::FloatList(v) => {
                let mut b = ListBuilder::new(Float64Builder::new());
                for row in v {
                    b.values().append_slice(row);
                    b.append(true);
                }
                Arc::new(b.finish())
            }
            Column::BoolList(v) => {
                let mut b = ListBuilder::new(BooleanBuilder::new());
                for row in v {
                    b.values().append_slice(row);
                    b.append(true);
                }
                Arc::new(b.finish())
            }
        };
        fields.push(Field::new(name.as_str(), array.data_type().clone(), false));
        arrays.push(array);
    }
    let schema = Arc::new(Schema::new(fields));
    RecordBatch::try_new_with_options(
        schema,
        arrays,
        &RecordBatchOptions::new().with_row_count(Some(t.n_rows)),
    )
    .map_err(|e| format_err(0, e.to_string()))
}

fn no_nulls(name: &str, array: &dyn Array) -> Result<(), ColumnarError> {
    if array.null_count() > 0 {
        return Err(format_err(
            0,
            format!("column {name} contains nulls, which the event schema does not use"),
        ));
    }
    Ok(())
}

fn downcast_err(name: &str, expected: &str) -> ColumnarError {
    format_err(0, format!("column {name} is not a {expected} array"))
}

pub(crate) fn batches_to_table(
    schema: &Schema,
    batches: &[RecordBatch],
) -> Result<EventTable, ColumnarError> {
    let n_rows = batches.iter().map(RecordBatch::num_rows).sum();
    let mut t = EventTable::new(n_rows);
    for (idx, field) in schema.fields().iter().enumerate() {
        let name = field.name().as_str();
        let column = match field.data_type() {
            DataType::Int64 => {
                let mut v = Vec::with_capacity(n_rows);
                for b in batches {
                    let a = b
                        .column(idx)
                        .as_any()
                        .downcast_ref::<Int64Array>()
                        .ok_or_else(|| downcast_err(name, "Int64"))?;
                    no_nulls(name, a)?;
                    v.extend_from_slice(a.values());
                }
                Column::Int(v)
            }
            DataType::Float64 => {
                let mut v = Vec::with_capacity(n_rows);
                for b in batches {
                    let a = b
                        .column(idx)
                        .as_any()
                        .downcast_ref::<Float64Array>()
                        .ok_or_else(|| downcast_err(name, "Float64"))?;
                    no_nulls(name, a)?;
                    v.extend_from_slice(a.values());
                }
                Column::Float(v)
            }
            DataType::Boolean => {
                let mut v = Vec::with_capacity(n_rows);
                for b in batches {
                    let a = b
                        .column(idx)
                        .as_any()
                        .downcast_ref::<BooleanArray>()
                        .ok_or_else(|| downcast_err(name, "Boolean"))?;
                    no_nulls(name, a)?;
                    v.extend((0..a.len()).map(|i| a.value(i)));
                }
                Column::Bool(v)
            }
            DataType::List(inner) => list_column(name, inner.data_type(), batches, idx, n_rows)?,
            other => {
                return Err(format_err(
                    0,
                    format!("column {name} has unsupported arrow type {other}"),
                ))
            }
        };
        t.insert(name, column);
    }
    Ok(t)
}

fn list_column(
    name: &str,
    inner: &DataType,
    batches: &[RecordBatch],
    idx: usize,
    n_rows: usize,
) -> Result<Column, ColumnarError> {
    macro_rules! gather {
        ($elem:ty, $wrap:expr, $extract:expr) => {{
            let mut v = Vec::with_capacity(n_rows);
            for b in batches {
                let list = b
                    .column(idx)
                    .as_any()
                    .downcast_ref::<ListArray>()
                    .ok_or_else(|| downcast_err(name, "List"))?;
                no_nulls(name, list)?;
                for row in 0..list.len() {
                    let values = list.value(row);
                    let typed = values
                        .as_any()
                        .downcast_ref::<$elem>()
                        .ok_or_else(|| downcast_err(name, stringify!($elem)))?;
                    no_nulls(name, typed)?;
                    v.push($extract(typed));
                }
            }
            Ok($wrap(v))
        }};
    }
    match inner {
        DataType::Int64 => gather!(Int64Array, Column::IntList, |a: &Int64Array| a
            .values()
            .to_vec()),
        DataType::Float64 => gather!(Float64Array, Column::FloatList, |a: &Float64Array| a
            .values()
            .to_vec()),
        DataType::Boolean => gather!(BooleanArray, Column::BoolList, |a: &BooleanArray| (0..a
            .len())
            .map(|i| a.value(i))
            .collect()),
        other => Err(format_err(
            0,
            format!("column {name} has unsupported list element type {other}"),
        )),
    }
}
