use super::{names, valid_row_name, NavData, NavDataError, Row};
use indexmap::IndexMap;
use std::io::{Read, Write};
use std::path::Path;

impl NavData {
    /// Reads a CSV whose first line holds row names (when `header` is set)
    /// and each following line is one column of the table. A CSV column is
    /// numeric iff every non-empty cell parses as a float.
    pub fn from_csv(path: impl AsRef<Path>, header: bool) -> Result<NavData, NavDataError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, header)
    }

    pub fn from_csv_reader<R: Read>(reader: R, header: bool) -> Result<NavData, NavDataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .from_reader(reader);
        let mut records = rdr.records();

        let names: Vec<String> = if header {
            match records.next() {
                Some(rec) => rec?.iter().map(|s| s.trim().to_string()).collect(),
                None => return Ok(NavData::new()),
            }
        } else {
            Vec::new()
        };

        let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        let mut width = if header { Some(names.len()) } else { None };
        for rec in records {
            let rec = rec?;
            let w = *width.get_or_insert(rec.len());
            if cells.is_empty() {
                cells = vec![Vec::new(); w];
            }
            for (i, field) in rec.iter().enumerate() {
                cells[i].push(field.to_string());
            }
        }

        let names: Vec<String> = if header {
            names
        } else {
            (0..cells.len()).map(|i| format!("row_{i}")).collect()
        };

        let mut seen = IndexMap::new();
        for (name, values) in names.into_iter().zip(cells) {
            if !valid_row_name(&name) {
                return Err(NavDataError::InvalidName(name));
            }
            if seen.contains_key(&name) {
                return Err(NavDataError::DuplicateName(name));
            }
            let row = infer_row(&name, values);
            seen.insert(name, row);
        }
        NavData::from_rows(seen)
    }

    /// Writes the table with one CSV column per row. NaN and "" become
    /// empty fields; floats use the shortest representation that parses back
    /// to the same bits.
    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<(), NavDataError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), NavDataError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        if self.rows.is_empty() {
            w.flush()?;
            return Ok(());
        }
        w.write_record(self.rows.keys())?;
        let mut record: Vec<String> = Vec::with_capacity(self.rows.len());
        for col in 0..self.len {
            record.clear();
            for row in self.rows.values() {
                record.push(match row {
                    Row::Numeric(v) => format_float(v[col]),
                    Row::Categorical(v) => v[col].clone(),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        // Writing into a Vec cannot fail.
        self.write_csv(&mut buf).expect("in-memory csv write");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

pub(crate) fn format_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // Debug formatting is shortest round-trip and switches to exponent
        // notation for very large/small magnitudes.
        let s = format!("{v:?}");
        s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
    }
}

fn parse_float(cell: &str) -> Option<f64> {
    let t = cell.trim();
    match t {
        "nan" | "NaN" => Some(f64::NAN),
        _ => t.parse::<f64>().ok(),
    }
}

/// A column of only empty fields is numeric NaN, except `gnss_id`.
fn infer_row(name: &str, values: Vec<String>) -> Row {
    let blank = values.iter().all(|c| c.trim().is_empty());
    let numeric = !(blank && name == names::GNSS_ID)
        && values
            .iter()
            .all(|c| c.trim().is_empty() || parse_float(c).is_some());
    if numeric {
        Row::Numeric(
            values
                .iter()
                .map(|c| {
                    if c.trim().is_empty() {
                        f64::NAN
                    } else {
                        parse_float(c).unwrap_or(f64::NAN)
                    }
                })
                .collect(),
        )
    } else {
        Row::Categorical(values)
    }
}
