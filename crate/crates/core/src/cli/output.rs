//! CSV and JSON emission.
//!
//! CSV is UTF-8 with '.' decimals, LF line endings, and a header row
//! always; the column set of each subcommand is fixed and versioned
//! through the leading `schema` column. Every row carries the master seed
//! and the config hash. JSON mirrors the CSV rows and adds arg-min
//! distributions.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::Result;

/// Nats-to-display conversion: the library works in nats throughout; bits
/// are a display-only scaling of rate-like columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    pub fn label(&self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }

    /// Convert a nat-valued quantity for display.
    pub fn convert(&self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

impl std::str::FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "nats" => Ok(Units::Nats),
            "bits" => Ok(Units::Bits),
            other => Err(format!("unknown units {other:?} (expected nats|bits)")),
        }
    }
}

/// One output cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Int(i64),
    UInt(u64),
    Float(f64),
    /// Optional float; empty CSV field when absent.
    MaybeFloat(Option<f64>),
    Bool(bool),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Text(s) => {
                debug_assert!(!s.contains(',') && !s.contains('\n'));
                s.clone()
            }
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::MaybeFloat(Some(v)) => format_float(*v),
            Cell::MaybeFloat(None) => String::new(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(v) => json!(v),
            Cell::UInt(v) => json!(v),
            Cell::Float(v) => float_json(*v),
            Cell::MaybeFloat(Some(v)) => float_json(*v),
            Cell::MaybeFloat(None) => Value::Null,
            Cell::Bool(b) => json!(b),
        }
    }
}

fn format_float(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        // Shortest round-trip representation; deterministic.
        format!("{v}")
    }
}

fn float_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(format_float(v))
    }
}

/// A fixed-schema table accumulated row by row.
pub struct Table {
    schema: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    /// Extra JSON-only payloads per row (e.g. arg-min distributions).
    extras: Vec<Option<Value>>,
}

impl Table {
    pub fn new(schema: &'static str, columns: Vec<&'static str>) -> Self {
        Self {
            schema,
            columns,
            rows: Vec::new(),
            extras: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.push_with_extra(row, None);
    }

    pub fn push_with_extra(&mut self, row: Vec<Cell>, extra: Option<Value>) {
        assert_eq!(row.len(), self.columns.len(), "schema violation");
        self.rows.push(row);
        self.extras.push(extra);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["schema"];
        header.extend(&self.columns);
        out.write_all(header.join(",").as_bytes())?;
        out.write_all(b"\n")?;
        for row in &self.rows {
            let mut fields = vec![self.schema.to_string()];
            fields.extend(row.iter().map(Cell::to_csv));
            out.write_all(fields.join(",").as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .zip(&self.extras)
            .map(|(row, extra)| {
                let mut obj = Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    obj.insert((*name).into(), cell.to_json());
                }
                if let Some(v) = extra {
                    obj.insert("argmin".into(), v.clone());
                }
                Value::Object(obj)
            })
            .collect();
        json!({
            "schema": self.schema,
            "rows": rows,
        })
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn write_json_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        let text = serde_json::to_string_pretty(&self.to_json()).expect("rows serialize");
        file.write_all(text.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// JSON form of exponent arg-min vectors.
pub fn argmin_json(argmin: &[crate::exponents::NamedVector]) -> Value {
    let mut obj = Map::new();
    for nv in argmin {
        obj.insert(nv.name.clone(), json!(nv.values));
    }
    Value::Object(obj)
}
