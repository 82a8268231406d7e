//! Ground-truth data generation, tabular ingestion, and evaluation metrics.

mod gmm;
mod metrics;
mod tabular;

pub use gmm::{
    gmm_nll, gmm_sample, mode_coverage, sample_cluster, train_test_split, GmmSpec,
    ModeCoverageParams,
};
pub use metrics::{
    alpha_way_error, downstream_logreg, histogram_tv, AlphaWayReport, DownstreamReport,
};
pub use tabular::{
    decode, encode, read_labeled_csv, write_labeled_csv, Cell, Column, ColumnKind, EncodedTable,
    Table, TabularSchema,
};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Read a numeric-features CSV with a trailing label column. Lines starting
/// with `#` are skipped.
pub fn read_feature_csv(reader: impl std::io::Read) -> Result<(Array2<f64>, Vec<usize>, Vec<String>)> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers: Vec<String> = csv_reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.len() < 2 {
        return Err(Error::Schema(
            "expected at least one feature column and a label column".into(),
        ));
    }
    let width = headers.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in csv_reader.records() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Schema(format!(
                "row has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for field in record.iter().take(width) {
            features.push(field.trim().parse::<f64>().map_err(|e| {
                Error::Schema(format!("bad numeric value {field:?}: {e}"))
            })?);
        }
        let label_field = &record[width];
        labels.push(label_field.trim().parse::<usize>().map_err(|e| {
            Error::Schema(format!("bad label {label_field:?}: {e}"))
        })?);
    }
    let rows = labels.len();
    let features = Array2::from_shape_vec((rows, width), features)
        .map_err(|e| Error::Schema(e.to_string()))?;
    Ok((features, labels, headers))
}

/// Write features and labels as CSV with the given header names.
pub fn write_feature_csv(
    writer: impl std::io::Write,
    features: ndarray::ArrayView2<'_, f64>,
    labels: &[usize],
    feature_names: &[String],
    label_name: &str,
) -> Result<()> {
    if feature_names.len() != features.ncols() || labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch {
            expected: features.ncols(),
            got: feature_names.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = feature_names.to_vec();
    header.push(label_name.to_string());
    w.write_record(&header)?;
    for (row, &label) in features.rows().into_iter().zip(labels) {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        record.push(label.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
