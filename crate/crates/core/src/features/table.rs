use std::io::{Read, Write};

use super::schema::fingerprint_of;
use super::FeatureError;

/// Round to nine significant digits, the precision of the CSV form.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Feature rows keyed by record id. Values are stored quantized so a table
/// read back from CSV equals the one that was written.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    names: Vec<String>,
    fingerprint: String,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>, ids: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(ids.len(), rows.len(), "one row per id");
        assert!(rows.iter().all(|r| r.len() == names.len()), "row width equals feature count");
        let fingerprint = fingerprint_of(&names);
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(quantize).collect())
            .collect();
        FeatureTable {
            names,
            fingerprint,
            ids,
            rows,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|i| i == id).map(|p| self.rows[p].as_slice())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, FeatureError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let table_err = |line: usize, message: String| FeatureError::Table { line, message };
        let headers = r.headers().map_err(|e| table_err(1, e.to_string()))?.clone();
        if headers.get(0) != Some("id") {
            return Err(table_err(1, "first column must be `id`".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        if names.is_empty() {
            return Err(table_err(1, "no feature columns".into()));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| {
                table_err(e.position().map(|p| p.line() as usize).unwrap_or(0), e.to_string())
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != names.len() + 1 {
                return Err(table_err(line, format!("expected {} fields, got {}", names.len() + 1, rec.len())));
            }
            ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .zip(&names)
                .map(|(v, n)| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| table_err(line, format!("column `{n}`: `{v}` is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(FeatureTable::new(names, ids, rows))
    }
}
