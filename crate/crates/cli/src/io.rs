//! CSV ingestion and emission. Comma-separated, mandatory header row,
//! '.' decimal point.

use anyhow::{bail, Context, Result};
use std::path::Path;

use vinegrow_core::dependence::{to_copula_scale, CopulaSample};

/// Read a numeric CSV into columns with header labels.
pub fn read_csv_columns(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let labels: Vec<String> = reader
        .headers()
        .context("missing header row")?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if labels.len() < 2 {
        bail!("need at least 2 columns, found {}", labels.len());
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed CSV at data row {}", row_idx + 1))?;
        if record.len() != labels.len() {
            bail!(
                "row {} has {} fields, expected {}",
                row_idx + 1,
                record.len(),
                labels.len()
            );
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().with_context(|| {
                format!(
                    "row {}, column {:?}: {:?} is not a number",
                    row_idx + 1,
                    labels[j],
                    field
                )
            })?;
            columns[j].push(value);
        }
    }
    if columns[0].is_empty() {
        bail!("no data rows");
    }
    Ok((columns, labels))
}

/// Load a CSV as a copula-scale sample; `pit` applies the empirical
/// probability integral transform first.
pub fn load_sample(path: &Path, pit: bool) -> Result<CopulaSample> {
    let (columns, labels) = read_csv_columns(path)?;
    let sample = if pit {
        to_copula_scale(&columns, labels)?
    } else {
        CopulaSample::new(columns, labels).map_err(|e| {
            anyhow::anyhow!("{e}; pass --pit for raw (non copula scale) data")
        })?
    };
    Ok(sample)
}

/// Write a sample as CSV. Uses the shortest lossless float representation,
/// so output is byte-stable for identical inputs.
pub fn write_sample_csv<W: std::io::Write>(sample: &CopulaSample, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(sample.labels())?;
    for i in 0..sample.n() {
        let row: Vec<String> = (0..sample.d())
            .map(|j| format!("{}", sample.column(j)[i]))
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Resolve a column selector (header name, or 1-based index) to an index.
pub fn resolve_column(selector: &str, labels: &[String]) -> Result<usize> {
    if let Some(pos) = labels.iter().position(|l| l == selector) {
        return Ok(pos);
    }
    if let Ok(idx) = selector.parse::<usize>() {
        if idx >= 1 && idx <= labels.len() {
            return Ok(idx - 1);
        }
    }
    bail!(
        "unknown column {selector:?}; available: {}",
        labels.join(", ")
    )
}
