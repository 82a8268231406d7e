//! Tabular schema, CSV ingestion, and one-hot/min-max encoding.
//!
//! A schema declares each column as numeric with a-priori bounds or as
//! categorical/ordinal with a cardinality; both discrete kinds are stored as
//! non-negative integer codes in CSV and one-hot encoded. The label column
//! must be categorical and is split off during encoding.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{Decoder, OutputBlock};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ColumnKind {
    Numeric { min: f64, max: f64 },
    Categorical { cardinality: usize },
    Ordinal { cardinality: usize },
}

impl ColumnKind {
    pub fn encoded_width(&self) -> usize {
        match self {
            ColumnKind::Numeric { .. } => 1,
            ColumnKind::Categorical { cardinality } | ColumnKind::Ordinal { cardinality } => {
                *cardinality
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, ColumnKind::Numeric { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSchema {
    pub columns: Vec<Column>,
    pub label: String,
}

impl TabularSchema {
    pub fn from_json(json: &str) -> Result<Self> {
        let schema: TabularSchema = serde_json::from_str(json)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("schema declares no columns".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column {:?}", col.name)));
            }
            match &col.kind {
                ColumnKind::Numeric { min, max } => {
                    if !(min.is_finite() && max.is_finite() && max > min) {
                        return Err(Error::Schema(format!(
                            "column {:?} has invalid bounds ({min}, {max})",
                            col.name
                        )));
                    }
                }
                ColumnKind::Categorical { cardinality } | ColumnKind::Ordinal { cardinality } => {
                    if *cardinality < 2 {
                        return Err(Error::Schema(format!(
                            "column {:?} needs cardinality >= 2",
                            col.name
                        )));
                    }
                }
            }
        }
        let label = self.label_column()?;
        if !matches!(label.kind, ColumnKind::Categorical { .. }) {
            return Err(Error::Schema("label column must be categorical".into()));
        }
        Ok(())
    }

    pub fn label_index(&self) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == self.label)
            .ok_or_else(|| Error::Schema(format!("label column {:?} not in schema", self.label)))
    }

    pub fn label_column(&self) -> Result<&Column> {
        Ok(&self.columns[self.label_index()?])
    }

    pub fn num_classes(&self) -> Result<usize> {
        match self.label_column()?.kind {
            ColumnKind::Categorical { cardinality } => Ok(cardinality),
            _ => Err(Error::Schema("label column must be categorical".into())),
        }
    }

    /// Columns excluding the label, in schema order.
    pub fn feature_columns(&self) -> Vec<&Column> {
        self.columns.iter().filter(|c| c.name != self.label).collect()
    }

    pub fn encoded_width(&self) -> usize {
        self.feature_columns()
            .iter()
            .map(|c| c.kind.encoded_width())
            .sum()
    }

    /// Generator output blocks matching the encoded layout.
    pub fn output_blocks(&self) -> Vec<OutputBlock> {
        self.feature_columns()
            .iter()
            .map(|c| match &c.kind {
                ColumnKind::Numeric { .. } => OutputBlock {
                    decoder: Decoder::Sigmoid,
                    width: 1,
                },
                ColumnKind::Categorical { cardinality } | ColumnKind::Ordinal { cardinality } => {
                    OutputBlock {
                        decoder: Decoder::Softmax,
                        width: *cardinality,
                    }
                }
            })
            .collect()
    }
}

/// One cell: a numeric value or a discrete code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(usize),
}

/// Rows in schema column order, label column included.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: TabularSchema,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Parse CSV whose header matches the schema columns (any order).
    /// Lines starting with `#` are skipped.
    pub fn read_csv(reader: impl std::io::Read, schema: &TabularSchema) -> Result<Table> {
        schema.validate()?;
        let mut csv_reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers: Vec<String> = csv_reader
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut positions = Vec::with_capacity(schema.columns.len());
        for col in &schema.columns {
            let pos = headers
                .iter()
                .position(|h| *h == col.name)
                .ok_or_else(|| Error::Schema(format!("column {:?} missing from CSV", col.name)))?;
            positions.push(pos);
        }
        let mut rows = Vec::new();
        for record in csv_reader.records() {
            let record = record?;
            let mut row = Vec::with_capacity(schema.columns.len());
            for (col, &pos) in schema.columns.iter().zip(&positions) {
                let field = record
                    .get(pos)
                    .ok_or_else(|| Error::Schema("short CSV row".into()))?
                    .trim();
                let cell = match &col.kind {
                    ColumnKind::Numeric { .. } => Cell::Num(field.parse().map_err(|e| {
                        Error::Schema(format!("column {:?}: bad number {field:?}: {e}", col.name))
                    })?),
                    ColumnKind::Categorical { cardinality }
                    | ColumnKind::Ordinal { cardinality } => {
                        let code: usize = field.parse().map_err(|e| {
                            Error::Schema(format!(
                                "column {:?}: bad code {field:?}: {e}",
                                col.name
                            ))
                        })?;
                        if code >= *cardinality {
                            return Err(Error::Schema(format!(
                                "column {:?}: code {code} exceeds cardinality {cardinality}",
                                col.name
                            )));
                        }
                        Cell::Cat(code)
                    }
                };
                row.push(cell);
            }
            rows.push(row);
        }
        Ok(Table {
            schema: schema.clone(),
            rows,
        })
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = self.schema.columns.iter().map(|c| c.name.as_str()).collect();
        w.write_record(&header)?;
        for row in &self.rows {
            let record: Vec<String> = row
                .iter()
                .map(|cell| match cell {
                    Cell::Num(v) => format!("{v}"),
                    Cell::Cat(c) => c.to_string(),
                })
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Encoded features in [0,1]^{n×D}, labels, and the clamp count for numeric
/// values that fell outside their declared bounds.
#[derive(Debug, Clone)]
pub struct EncodedTable {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub clamped: usize,
}

/// Min–max numeric scaling and one-hot expansion, per the schema.
/// Out-of-bounds numeric values clamp (counted, not an error).
pub fn encode(table: &Table) -> Result<EncodedTable> {
    let schema = &table.schema;
    schema.validate()?;
    let label_idx = schema.label_index()?;
    let width = schema.encoded_width();
    let mut features = Array2::zeros((table.len(), width));
    let mut labels = Vec::with_capacity(table.len());
    let mut clamped = 0;
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != schema.columns.len() {
            return Err(Error::Schema(format!("row {i} has wrong arity")));
        }
        let mut offset = 0;
        for (j, (col, cell)) in schema.columns.iter().zip(row).enumerate() {
            if j == label_idx {
                match cell {
                    Cell::Cat(code) => labels.push(*code),
                    Cell::Num(_) => return Err(Error::Schema("numeric label cell".into())),
                }
                continue;
            }
            match (&col.kind, cell) {
                (ColumnKind::Numeric { min, max }, Cell::Num(v)) => {
                    let scaled = (v - min) / (max - min);
                    if !(0.0..=1.0).contains(&scaled) {
                        clamped += 1;
                    }
                    features[[i, offset]] = scaled.clamp(0.0, 1.0);
                    offset += 1;
                }
                (
                    ColumnKind::Categorical { cardinality } | ColumnKind::Ordinal { cardinality },
                    Cell::Cat(code),
                ) => {
                    if *code >= *cardinality {
                        return Err(Error::Schema(format!(
                            "column {:?}: code {code} exceeds cardinality",
                            col.name
                        )));
                    }
                    features[[i, offset + code]] = 1.0;
                    offset += cardinality;
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column {:?}: cell kind does not match schema",
                        col.name
                    )))
                }
            }
        }
    }
    Ok(EncodedTable {
        features,
        labels,
        clamped,
    })
}

/// Inverse of [`encode`]: numeric blocks rescale, discrete blocks take the
/// arg-max code. Values outside [0,1] are clamped on the way out.
pub fn decode(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    schema: &TabularSchema,
) -> Result<Table> {
    schema.validate()?;
    if features.ncols() != schema.encoded_width() {
        return Err(Error::DimensionMismatch {
            expected: schema.encoded_width(),
            got: features.ncols(),
        });
    }
    if labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            got: labels.len(),
        });
    }
    let num_classes = schema.num_classes()?;
    let label_idx = schema.label_index()?;
    let mut rows = Vec::with_capacity(features.nrows());
    for (i, feat_row) in features.rows().into_iter().enumerate() {
        if labels[i] >= num_classes {
            return Err(Error::invalid(format!(
                "label {} out of range for {num_classes} classes",
                labels[i]
            )));
        }
        let mut row = Vec::with_capacity(schema.columns.len());
        let mut offset = 0;
        for (j, col) in schema.columns.iter().enumerate() {
            if j == label_idx {
                row.push(Cell::Cat(labels[i]));
                continue;
            }
            match &col.kind {
                ColumnKind::Numeric { min, max } => {
                    let v = feat_row[offset].clamp(0.0, 1.0);
                    row.push(Cell::Num(min + v * (max - min)));
                    offset += 1;
                }
                ColumnKind::Categorical { cardinality } | ColumnKind::Ordinal { cardinality } => {
                    let block = feat_row.slice(ndarray::s![offset..offset + cardinality]);
                    let code = block
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite block"))
                        .map(|(k, _)| k)
                        .unwrap_or(0);
                    row.push(Cell::Cat(code));
                    offset += cardinality;
                }
            }
        }
        rows.push(row);
    }
    Ok(Table {
        schema: schema.clone(),
        rows,
    })
}

/// Convenience: parse CSV and encode in one step.
pub fn read_labeled_csv(
    reader: impl std::io::Read,
    schema: &TabularSchema,
) -> Result<EncodedTable> {
    encode(&Table::read_csv(reader, schema)?)
}

/// Convenience: decode and write CSV in one step.
pub fn write_labeled_csv(
    writer: impl std::io::Write,
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    schema: &TabularSchema,
) -> Result<()> {
    decode(features, labels, schema)?.write_csv(writer)
}
