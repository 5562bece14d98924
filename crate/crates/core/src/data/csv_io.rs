//! CSV ingestion for already-discrete data.
//!
//! Values are arbitrary tokens. Without an explicit schema, category indices
//! are assigned per column in first-appearance order; with one, unknown
//! tokens are format errors carrying the offending row number.

use super::{DataError, DiscreteDataset};
use crate::graph::VariableMeta;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CsvColumn {
    pub name: String,
    /// Category tokens in index order.
    pub categories: Vec<String>,
}

/// Column names plus category tables; the label-level counterpart of the
/// dataset schema.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CsvSchema {
    pub columns: Vec<CsvColumn>,
}

impl CsvSchema {
    pub fn variables(&self) -> Result<Vec<VariableMeta>, DataError> {
        self.columns
            .iter()
            .map(|c| {
                if c.categories.len() < 2 {
                    return Err(DataError::ConstantColumn(c.name.clone()));
                }
                Ok(VariableMeta::new(c.name.clone(), c.categories.len())?)
            })
            .collect()
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    schema: Option<&CsvSchema>,
) -> Result<(DiscreteDataset, CsvSchema), DataError> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, schema)
}

pub fn load_csv_reader(
    reader: impl io::Read,
    schema: Option<&CsvSchema>,
) -> Result<(DiscreteDataset, CsvSchema), DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let d = headers.len();
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(DataError::DuplicateColumn(h.clone()));
        }
    }

    let mut columns: Vec<CsvColumn> = match schema {
        Some(s) => {
            if s.columns.len() != d {
                return Err(DataError::RaggedRow { row: 0, expected: s.columns.len(), got: d });
            }
            s.columns.clone()
        }
        None => headers
            .iter()
            .map(|h| CsvColumn { name: h.clone(), categories: Vec::new() })
            .collect(),
    };
    let inferring = schema.is_none();

    let mut cells: Vec<u32> = Vec::new();
    let mut n = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let row_no = idx + 2; // 1-based, after the header line
        let record = record?;
        if record.len() != d {
            return Err(DataError::RaggedRow { row: row_no, expected: d, got: record.len() });
        }
        for (c, raw) in record.iter().enumerate() {
            let token = raw.trim();
            let pos = columns[c].categories.iter().position(|t| t == token);
            let code = match (pos, inferring) {
                (Some(p), _) => p,
                (None, true) => {
                    columns[c].categories.push(token.to_string());
                    columns[c].categories.len() - 1
                }
                (None, false) => {
                    return Err(DataError::UnknownCategory {
                        row: row_no,
                        column: columns[c].name.clone(),
                        value: token.to_string(),
                    })
                }
            };
            cells.push(code as u32);
        }
        n += 1;
    }

    let out_schema = CsvSchema { columns };
    let variables = out_schema.variables()?;
    let dataset = DiscreteDataset::from_flat(variables, n, cells)?;
    Ok((dataset, out_schema))
}

pub fn write_csv(
    data: &DiscreteDataset,
    schema: &CsvSchema,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_csv_writer(data, schema, file)
}

pub fn write_csv_writer(
    data: &DiscreteDataset,
    schema: &CsvSchema,
    writer: impl io::Write,
) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(schema.columns.iter().map(|c| c.name.as_str()))?;
    for r in 0..data.len() {
        let row = data.row(r);
        wtr.write_record(
            row.iter()
                .enumerate()
                .map(|(c, &v)| schema.columns[c].categories[v as usize].as_str()),
        )?;
    }
    wtr.flush()?;
    Ok(())
}

/// Default label table (stringified indices) for datasets born numeric.
pub fn numeric_csv_schema(variables: &[VariableMeta]) -> CsvSchema {
    CsvSchema {
        columns: variables
            .iter()
            .map(|v| CsvColumn {
                name: v.name.clone(),
                categories: (0..v.cardinality).map(|c| c.to_string()).collect(),
            })
            .collect(),
    }
}
