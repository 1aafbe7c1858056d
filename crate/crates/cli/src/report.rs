//! Tabular reports and their CSV / JSON encodings.
//!
//! Both encodings print numbers through `serde_json`'s shortest
//! round-trip formatter, so a CSV cell and the matching JSON value are the
//! same decimal literal.

use std::io::Write;

use serde_json::{json, Map, Number, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn to_json(&self) -> Result<Value, CliError> {
        match self {
            Cell::Num(v) => Number::from_f64(*v).map(Value::Number).ok_or_else(|| {
                CliError::Numerical(pqk_core::Error::Overflow(format!("{v} in output")))
            }),
            Cell::Int(v) => Ok(Value::from(*v)),
            Cell::Text(s) => Ok(Value::from(s.as_str())),
        }
    }

    fn to_csv_field(&self) -> Result<String, CliError> {
        Ok(match self {
            Cell::Text(s) => s.clone(),
            other => other.to_json()?.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub extra_meta: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Self {
        Self {
            command: command.to_string(),
            params: Map::new(),
            extra_meta: Map::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.extra_meta.insert(key.to_string(), value.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `{meta: {command, params, version, ...}, rows: [{column: value}, ...]}`
    pub fn to_json(&self) -> Result<Value, CliError> {
        let mut meta = Map::new();
        meta.insert("command".into(), json!(self.command));
        meta.insert("params".into(), Value::Object(self.params.clone()));
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.extra_meta {
            meta.insert(k.clone(), v.clone());
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert((*col).to_string(), cell.to_json()?);
                }
                Ok(Value::Object(obj))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(json!({ "meta": Value::Object(meta), "rows": rows }))
    }

    /// Header row plus one record per row, LF line endings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        wtr.write_record(&self.columns)
            .map_err(|e| CliError::Output(e.to_string()))?;
        for row in &self.rows {
            let fields = row
                .iter()
                .map(Cell::to_csv_field)
                .collect::<Result<Vec<_>, _>>()?;
            wtr.write_record(&fields)
                .map_err(|e| CliError::Output(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.to_json()?)
                    .map_err(|e| CliError::Output(e.to_string()))?;
                writeln!(out)?;
                Ok(())
            }
        }
    }
}
