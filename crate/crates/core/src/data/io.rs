use std::io::{Read, Write};

use super::{AttributeKind, Column, DataError, Dataset, Schema};
use crate::data::CaseId;

/// Reads a CSV stream (header row first) into a validated dataset.
///
/// Header columns may appear in any order but must name exactly the schema's
/// attributes. Case ids are assigned `0..n` in file order. Row numbers in
/// errors count data rows from 1.
pub fn load_dataset<R: Read>(source: R, schema: &Schema) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    let mut layout = Vec::with_capacity(header.len());
    for name in &header {
        match schema.index_of(name) {
            Some(i) if !layout.contains(&i) => layout.push(i),
            _ => return Err(header_mismatch(schema, &header)),
        }
    }
    if layout.len() != schema.len() {
        return Err(header_mismatch(schema, &header));
    }

    let mut columns: Vec<Column> = schema
        .attributes()
        .iter()
        .map(|a| match a.kind {
            AttributeKind::Continuous => Column::Continuous(Vec::new()),
            AttributeKind::Categorical => Column::Categorical(Vec::new()),
        })
        .collect();

    let mut n = 0usize;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| DataError::Csv(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(DataError::Ragged { row, expected: header.len(), found: record.len() });
        }
        for (token, &attr) in record.iter().zip(&layout) {
            let column = schema.name(attr);
            if token.is_empty() {
                return Err(DataError::Missing { row, column: column.to_string() });
            }
            match &mut columns[attr] {
                Column::Continuous(values) => {
                    let x: f64 = token.parse().map_err(|_| DataError::NotNumeric {
                        row,
                        column: column.to_string(),
                        token: token.to_string(),
                    })?;
                    if !x.is_finite() {
                        return Err(DataError::NonFinite { row, column: column.to_string() });
                    }
                    values.push(x);
                }
                Column::Categorical(labels) => labels.push(token.to_string()),
            }
        }
        n += 1;
    }
    let ids = (0..n as u64).map(CaseId).collect();
    Dataset::new(schema.clone(), ids, columns)
}

fn header_mismatch(schema: &Schema, found: &[String]) -> DataError {
    DataError::HeaderMismatch {
        expected: schema.attributes().iter().map(|a| a.name.clone()).collect(),
        found: found.to_vec(),
    }
}

/// Writes the dataset as CSV in schema column order. Continuous values use the
/// shortest representation that parses back to the identical `f64`.
pub fn write_dataset<W: Write>(dataset: &Dataset, sink: W) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    writer
        .write_record(dataset.schema().attributes().iter().map(|a| a.name.as_str()))
        .map_err(csv_err)?;
    let mut record = Vec::with_capacity(dataset.schema().len());
    for row in 0..dataset.len() {
        record.clear();
        for column in dataset.columns() {
            match column {
                Column::Continuous(v) => record.push(format_exact(v[row])),
                Column::Categorical(v) => record.push(v[row].clone()),
            }
        }
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| DataError::Csv(e.to_string()))?;
    Ok(())
}

/// Shortest round-trip decimal form of `x`.
pub fn format_exact(x: f64) -> String {
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}
