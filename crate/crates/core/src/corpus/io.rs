use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use super::{CorpusError, Dataset, Sex, TranscriptRecord, MMSE_MAX};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guess from the file extension; anything other than `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

const COLUMNS: [&str; 7] = ["id", "text", "diagnosis", "mmse", "age", "sex", "language"];

pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    match format {
        Format::Jsonl => parse_jsonl(&name, &text),
        Format::Csv => parse_csv(&name, &text),
    }
}

fn field_err(line: usize, field: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Field {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Raw, untyped field values collected from either input format.
struct RawFields<'a> {
    line: usize,
    get: Box<dyn Fn(&str) -> Option<RawValue> + 'a>,
}

enum RawValue {
    Str(String),
    Int(i64),
    Other(String),
}

impl RawFields<'_> {
    fn string(&self, field: &str) -> Result<Option<String>, CorpusError> {
        match (self.get)(field) {
            None => Ok(None),
            Some(RawValue::Str(s)) => Ok(Some(s)),
            Some(RawValue::Int(i)) => Ok(Some(i.to_string())),
            Some(RawValue::Other(_)) => Err(field_err(self.line, field, "must be a string")),
        }
    }

    fn int(&self, field: &str) -> Result<Option<i64>, CorpusError> {
        match (self.get)(field) {
            None => Ok(None),
            Some(RawValue::Int(i)) => Ok(Some(i)),
            Some(RawValue::Str(s)) => s
                .trim()
                .parse::<i64>()
                .map(Some)
                .map_err(|_| field_err(self.line, field, format!("`{s}` is not an integer"))),
            Some(RawValue::Other(v)) => {
                Err(field_err(self.line, field, format!("`{v}` is not an integer")))
            }
        }
    }

    fn record(&self) -> Result<TranscriptRecord, CorpusError> {
        let line = self.line;
        let id = self
            .string("id")?
            .ok_or_else(|| field_err(line, "id", "missing"))?;
        if id.is_empty() {
            return Err(field_err(line, "id", "must be non-empty"));
        }
        let text = self
            .string("text")?
            .ok_or_else(|| field_err(line, "text", "missing"))?;
        let diagnosis = match self.int("diagnosis")? {
            None => None,
            Some(0) => Some(false),
            Some(1) => Some(true),
            Some(v) => return Err(field_err(line, "diagnosis", format!("must be 0 or 1, got {v}"))),
        };
        let mmse = match self.int("mmse")? {
            None => None,
            Some(m) if (0..=MMSE_MAX).contains(&m) => Some(m as u8),
            Some(_) => return Err(field_err(line, "mmse", "out of range [0,30]")),
        };
        let age = match self.int("age")? {
            None => None,
            Some(a) if (0..=150).contains(&a) => Some(a as u32),
            Some(a) => return Err(field_err(line, "age", format!("implausible value {a}"))),
        };
        let sex = match self.string("sex")? {
            None => None,
            Some(s) => Some(Sex::parse(&s).ok_or_else(|| {
                field_err(line, "sex", format!("must be \"female\" or \"male\", got `{s}`"))
            })?),
        };
        let language = self.string("language")?.unwrap_or_else(|| "en".to_string());
        Ok(TranscriptRecord {
            id,
            text,
            diagnosis,
            mmse,
            age,
            sex,
            language,
        })
    }
}

fn json_raw(v: &Value) -> Option<RawValue> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(RawValue::Str(s.clone())),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Some(RawValue::Int(i)),
            None => Some(RawValue::Other(n.to_string())),
        },
        Value::Bool(b) => Some(RawValue::Int(i64::from(*b))),
        other => Some(RawValue::Other(other.to_string())),
    }
}

/// One JSON object per non-blank line.
pub fn parse_jsonl(name: &str, text: &str) -> Result<Dataset, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> =
            serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        let raw = RawFields {
            line: line_no,
            get: Box::new(|k| obj.get(k).and_then(json_raw)),
        };
        records.push(raw.record()?);
    }
    Dataset::new(name, records)
}

/// Header row with exact column names; unknown columns are ignored.
pub fn parse_csv(name: &str, text: &str) -> Result<Dataset, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    for h in headers.iter() {
        if !COLUMNS.contains(&h) {
            log::warn!("ignoring unknown column `{h}` in {name}");
        }
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let positions: Vec<(&str, Option<usize>)> = COLUMNS.iter().map(|c| (*c, column(c))).collect();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CorpusError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line_no = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw = RawFields {
            line: line_no,
            get: Box::new(|k| {
                let idx = positions.iter().find(|(c, _)| *c == k).and_then(|(_, p)| *p)?;
                let v = row.get(idx)?;
                if v.is_empty() && k != "text" {
                    None
                } else {
                    Some(RawValue::Str(v.to_string()))
                }
            }),
        };
        records.push(raw.record()?);
    }
    Dataset::new(name, records)
}

/// Write records in the JSONL interchange format.
pub fn write_jsonl<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    for r in dataset {
        let mut obj = Map::new();
        obj.insert("id".into(), Value::from(r.id.clone()));
        obj.insert("text".into(), Value::from(r.text.clone()));
        if let Some(d) = r.diagnosis {
            obj.insert("diagnosis".into(), Value::from(u8::from(d)));
        }
        if let Some(m) = r.mmse {
            obj.insert("mmse".into(), Value::from(m));
        }
        if let Some(a) = r.age {
            obj.insert("age".into(), Value::from(a));
        }
        if let Some(s) = r.sex {
            obj.insert("sex".into(), Value::from(s.as_str()));
        }
        obj.insert("language".into(), Value::from(r.language.clone()));
        serde_json::to_writer(&mut out, &obj)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
