//! CSV emission for flat serializable rows.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Full-precision scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:e}")
}

fn is_float_cell(cell: &str) -> bool {
    matches!(cell, "inf" | "-inf" | "NaN")
        || (cell.contains(['.', 'e']) && cell.parse::<f64>().is_ok())
}

/// Writes rows of a flat struct with a header taken from its field names.
/// Floats are rewritten in scientific notation; integers and strings pass
/// through.
pub fn write_rows_csv<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut raw = csv::Writer::from_writer(Vec::new());
    for r in rows {
        raw.serialize(r)?;
    }
    let bytes = raw.into_inner().map_err(|e| e.into_error())?;
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes.as_slice());
    let mut w = csv::Writer::from_writer(out);
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if i == 0 {
            w.write_record(&rec)?;
            continue;
        }
        w.write_record(rec.iter().map(|c| {
            if is_float_cell(c) {
                sci(c.parse().unwrap_or(f64::NAN))
            } else {
                c.to_string()
            }
        }))?;
    }
    w.flush()?;
    Ok(())
}
