use std::collections::HashMap;
use std::path::Path;

use super::{Dataset, FeatureSchema};
use crate::error::{Error, Result};

/// Load a CSV whose header holds every schema feature plus the target, in any
/// column order. Columns are reordered to schema order. Row numbers in errors
/// are 1-based data rows (the header is not counted).
pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
    let (rows, target) = read_table(path, schema, true)?;
    Dataset::new(schema.clone(), rows, target.expect("target required"))
}

/// Like [`load_csv`] but the target column is optional. Missing targets are
/// returned as `None`; the feature buffer is row-major in schema order.
pub fn load_features_csv(
    path: &Path,
    schema: &FeatureSchema,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    read_table(path, schema, false)
}

fn read_table(
    path: &Path,
    schema: &FeatureSchema,
    require_target: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    schema.validate()?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Empty(format!("{} has no header", path.display())));
    }

    let mut position: HashMap<&str, usize> = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        if position.insert(name.as_str(), i).is_some() {
            return Err(Error::SchemaMismatch(format!("duplicate column {name}")));
        }
    }
    let missing: Vec<&str> = schema
        .names()
        .filter(|n| !position.contains_key(n))
        .collect();
    if !missing.is_empty() {
        return Err(Error::SchemaMismatch(format!(
            "missing columns: {}",
            missing.join(", ")
        )));
    }
    let target_name = schema.target.name.as_str();
    let target_col = position.get(target_name).copied();
    if require_target && target_col.is_none() {
        return Err(Error::SchemaMismatch(format!(
            "missing columns: {target_name}"
        )));
    }
    let extra: Vec<&str> = header
        .iter()
        .map(String::as_str)
        .filter(|h| *h != target_name && schema.index_of(h).is_none())
        .collect();
    if !extra.is_empty() {
        return Err(Error::SchemaMismatch(format!(
            "unexpected columns: {}",
            extra.join(", ")
        )));
    }

    let feature_cols: Vec<usize> = schema.names().map(|n| position[n]).collect();
    let mut rows = Vec::new();
    let mut target = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: name.to_owned(),
                message: format!("cannot parse {raw:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    column: name.to_owned(),
                    message: format!("non-finite value {raw:?}"),
                });
            }
            Ok(v)
        };
        for (spec, &col) in schema.features.iter().zip(&feature_cols) {
            rows.push(cell(col, &spec.name)?);
        }
        if let Some(col) = target_col {
            target.push(cell(col, target_name)?);
        }
    }
    let n = rows.len() / schema.len();
    if n == 0 {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    }
    Ok((rows, target_col.map(|_| target)))
}

/// Write `ds` as CSV in schema order, target last. Values use the shortest
/// representation that parses back to the same double.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header: Vec<&str> = ds.schema().names().collect();
    header.push(&ds.schema().target.name);
    w.write_record(&header)?;
    let mut buf = Vec::with_capacity(header.len());
    for (row, y) in ds.rows().zip(ds.target()) {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        buf.push(y.to_string());
        w.write_record(&buf)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
