//! Binary datasets as CSV: one column per feature, then `__outcome__`, then
//! an optional `__split__` column holding `train` or `test`.

use std::io::{Read, Write};

use amie_core::data::{Dataset, Split};

use super::FormatError;

pub const OUTCOME_COLUMN: &str = "__outcome__";
pub const SPLIT_COLUMN: &str = "__split__";

pub fn write_dataset<W: Write>(data: &Dataset, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let tags = data.split_tags();
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.push(OUTCOME_COLUMN);
    if tags.is_some() {
        header.push(SPLIT_COLUMN);
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in data.rows().enumerate() {
        record.clear();
        record.extend(row.iter().map(u8::to_string));
        record.push(data.outcome()[i].to_string());
        if let Some(t) = tags {
            record.push(t[i].as_str().to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset, FormatError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| FormatError::at(1, 1, e.to_string()))?.clone();
    let y_col = header
        .iter()
        .position(|h| h == OUTCOME_COLUMN)
        .ok_or_else(|| FormatError::at(1, 1, format!("missing `{OUTCOME_COLUMN}` column")))?;
    let split_col = header.iter().position(|h| h == SPLIT_COLUMN);
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != y_col && Some(c) != split_col).collect();
    let names: Vec<String> = feature_cols.iter().map(|&c| header[c].to_string()).collect();
    let mut values = Vec::new();
    let mut outcome = Vec::new();
    let mut tags = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| FormatError::at(line, 1, e.to_string()))?;
        let cell = |c: usize| -> Result<u8, FormatError> {
            let raw = rec.get(c).unwrap_or("");
            match raw.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(FormatError::at(line, c + 1, format!("expected 0 or 1, found `{other}`"))),
            }
        };
        for &c in &feature_cols {
            values.push(cell(c)?);
        }
        outcome.push(cell(y_col)?);
        if let Some(c) = split_col {
            tags.push(match rec.get(c).map(str::trim) {
                Some("train") => Split::Train,
                Some("test") => Split::Test,
                other => {
                    return Err(FormatError::at(
                        line,
                        c + 1,
                        format!("expected `train` or `test`, found `{}`", other.unwrap_or("")),
                    ))
                }
            });
        }
    }
    let data = Dataset::binary(names, values, outcome).map_err(FormatError::from_core)?;
    if split_col.is_some() {
        data.with_split_tags(tags).map_err(FormatError::from_core)
    } else {
        Ok(data)
    }
}
