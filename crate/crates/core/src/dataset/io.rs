//! CSV and JSONL reading and writing of respondent records.
//!
//! CSV layout (header required), for `P = n(n-1)/2` pairs in presentation
//! order and items in canonical order:
//!
//! ```text
//! id, pair_1_a, pair_1_b, pair_1_preferred, pair_1_category, ..., pair_P_category,
//! score_<item1>, ..., score_<itemN>, repeat_preferred, repeat_category, gender, age, county
//! ```
//!
//! The item list is read from the `score_` columns. Pair columns hold item
//! names, preferred is an item name or `neither`, categories are
//! `equal|little|moderate|much`. JSONL holds one serialized
//! [`RespondentRecord`] per line.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{pair_count, Demographics, Judgment, Preferred, RecordError, RespondentRecord};
use crate::scales::VerbalCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Picks the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext)
                if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") =>
            {
                DataFormat::Jsonl
            }
            _ => DataFormat::Csv,
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" | "ndjson" => Ok(DataFormat::Jsonl),
            other => Err(format!(
                "unknown data format '{other}', expected csv or jsonl"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("header: {0}")]
    Header(String),
    #[error("line {line}, field {field}: {reason}")]
    Field {
        line: u64,
        field: String,
        reason: String,
    },
    #[error("line {line}: duplicate respondent id '{id}'")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: {source}")]
    Record { line: u64, source: RecordError },
    #[error("line {line}: malformed JSON: {reason}")]
    Json { line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("records do not share one item list; '{0}' differs from the first record")]
    MixedItems(String),
}

impl IngestError {
    pub fn line(&self) -> Option<u64> {
        match self {
            IngestError::Field { line, .. }
            | IngestError::DuplicateId { line, .. }
            | IngestError::Record { line, .. }
            | IngestError::Json { line, .. } => Some(*line),
            _ => None,
        }
    }

    pub fn field(&self) -> Option<String> {
        match self {
            IngestError::Field { field, .. } => Some(field.clone()),
            IngestError::Record { source, .. } => Some(source.field()),
            IngestError::DuplicateId { .. } => Some("id".into()),
            _ => None,
        }
    }
}

pub fn ingest<R: Read>(
    source: R,
    format: DataFormat,
) -> Result<Vec<RespondentRecord>, IngestError> {
    match format {
        DataFormat::Csv => ingest_csv(source),
        DataFormat::Jsonl => ingest_jsonl(source),
    }
}

pub fn ingest_path(
    path: &Path,
    format: Option<DataFormat>,
) -> Result<Vec<RespondentRecord>, IngestError> {
    let file = std::fs::File::open(path)?;
    ingest(file, format.unwrap_or_else(|| DataFormat::from_path(path)))
}

struct CsvLayout {
    items: Vec<String>,
    id: usize,
    pairs: Vec<[usize; 4]>,
    scores: Vec<usize>,
    repeat_preferred: usize,
    repeat_category: usize,
    gender: usize,
    age: usize,
    county: usize,
}

impl CsvLayout {
    fn from_header(header: &csv::StringRecord) -> Result<Self, IngestError> {
        let names: Vec<&str> = header.iter().collect();
        let find = |name: &str| -> Result<usize, IngestError> {
            names
                .iter()
                .position(|h| *h == name)
                .ok_or_else(|| IngestError::Header(format!("missing column '{name}'")))
        };
        let scores: Vec<usize> = (0..names.len())
            .filter(|&i| names[i].starts_with("score_"))
            .collect();
        let items: Vec<String> = scores
            .iter()
            .map(|&i| names[i]["score_".len()..].to_string())
            .collect();
        if items.len() < 3 {
            return Err(IngestError::Header(format!(
                "need at least 3 score_ columns, found {}",
                items.len()
            )));
        }
        let pairs = (1..=pair_count(items.len()))
            .map(|k| {
                Ok([
                    find(&format!("pair_{k}_a"))?,
                    find(&format!("pair_{k}_b"))?,
                    find(&format!("pair_{k}_preferred"))?,
                    find(&format!("pair_{k}_category"))?,
                ])
            })
            .collect::<Result<Vec<_>, IngestError>>()?;
        Ok(CsvLayout {
            id: find("id")?,
            pairs,
            repeat_preferred: find("repeat_preferred")?,
            repeat_category: find("repeat_category")?,
            gender: find("gender")?,
            age: find("age")?,
            county: find("county")?,
            items,
            scores,
        })
    }

    fn item_index(&self, name: &str, line: u64, field: &str) -> Result<usize, IngestError> {
        self.items
            .iter()
            .position(|i| i == name)
            .ok_or_else(|| IngestError::Field {
                line,
                field: field.to_string(),
                reason: format!("unknown item '{name}'"),
            })
    }
}

fn parse_category(text: &str, line: u64, field: &str) -> Result<VerbalCategory, IngestError> {
    text.parse()
        .map_err(|e: crate::scales::ScaleError| IngestError::Field {
            line,
            field: field.to_string(),
            reason: e.to_string(),
        })
}

/// Maps an item name (or `neither`) onto the canonical pair.
fn parse_preferred(
    text: &str,
    a: usize,
    b: usize,
    layout: &CsvLayout,
    line: u64,
    field: &str,
) -> Result<Preferred, IngestError> {
    if text.eq_ignore_ascii_case("neither") {
        return Ok(Preferred::Neither);
    }
    let idx = layout.item_index(text, line, field)?;
    if idx == a {
        Ok(Preferred::A)
    } else if idx == b {
        Ok(Preferred::B)
    } else {
        Err(IngestError::Field {
            line,
            field: field.to_string(),
            reason: format!("item '{text}' is not in the pair"),
        })
    }
}

fn ingest_csv<R: Read>(source: R) -> Result<Vec<RespondentRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = match reader.headers() {
        Ok(h) if h.is_empty() => return Ok(Vec::new()),
        Ok(h) => h.clone(),
        Err(e) => return Err(e.into()),
    };
    let layout = CsvLayout::from_header(&header)?;
    let mut ids = HashSet::new();
    let mut records = Vec::new();

    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |i: usize| row.get(i).unwrap_or("");
        let id = get(layout.id).to_string();
        if id.is_empty() {
            return Err(IngestError::Field {
                line,
                field: "id".into(),
                reason: "empty id".into(),
            });
        }

        let mut judgments = Vec::with_capacity(layout.pairs.len());
        for (k, cols) in layout.pairs.iter().enumerate() {
            let position = k + 1;
            let field_a = format!("pair_{position}_a");
            let field_b = format!("pair_{position}_b");
            let x = layout.item_index(get(cols[0]), line, &field_a)?;
            let y = layout.item_index(get(cols[1]), line, &field_b)?;
            if x == y {
                return Err(IngestError::Field {
                    line,
                    field: field_b,
                    reason: "pair repeats one item".into(),
                });
            }
            let (a, b) = (x.min(y), x.max(y));
            let preferred = parse_preferred(
                get(cols[2]),
                a,
                b,
                &layout,
                line,
                &format!("pair_{position}_preferred"),
            )?;
            let category =
                parse_category(get(cols[3]), line, &format!("pair_{position}_category"))?;
            judgments.push(Judgment {
                item_a: a,
                item_b: b,
                preferred,
                category,
                presentation_order: position,
                reversed: false,
            });
        }

        let mut scores = Vec::with_capacity(layout.items.len());
        for (item, &col) in layout.items.iter().zip(&layout.scores) {
            let field = format!("score_{item}");
            let score: u8 = get(col).parse().map_err(|_| IngestError::Field {
                line,
                field: field.clone(),
                reason: format!("'{}' is not an integer in 0..=10", get(col)),
            })?;
            scores.push(score);
        }

        let second = judgments
            .get(1)
            .cloned()
            .ok_or_else(|| IngestError::Header("fewer than two pairs".into()))?;
        let repeated = Judgment {
            item_a: second.item_a,
            item_b: second.item_b,
            preferred: parse_preferred(
                get(layout.repeat_preferred),
                second.item_a,
                second.item_b,
                &layout,
                line,
                "repeat_preferred",
            )?,
            category: parse_category(get(layout.repeat_category), line, "repeat_category")?,
            presentation_order: judgments.len() + 1,
            reversed: true,
        };

        let record = RespondentRecord {
            id,
            items: layout.items.clone(),
            judgments,
            scores,
            repeated,
            demographics: Demographics {
                gender: get(layout.gender).to_string(),
                age: get(layout.age).to_string(),
                county: get(layout.county).to_string(),
            },
        };
        record
            .validate()
            .map_err(|source| IngestError::Record { line, source })?;
        if !ids.insert(record.id.clone()) {
            return Err(IngestError::DuplicateId {
                line,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn ingest_jsonl<R: Read>(source: R) -> Result<Vec<RespondentRecord>, IngestError> {
    let mut ids = HashSet::new();
    let mut records = Vec::new();
    for (idx, text) in BufReader::new(source).lines().enumerate() {
        let text = text?;
        let line = idx as u64 + 1;
        if text.trim().is_empty() {
            continue;
        }
        let record: RespondentRecord =
            serde_json::from_str(&text).map_err(|e| IngestError::Json {
                line,
                reason: e.to_string(),
            })?;
        record
            .validate()
            .map_err(|source| IngestError::Record { line, source })?;
        if !ids.insert(record.id.clone()) {
            return Err(IngestError::DuplicateId {
                line,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the given format. CSV requires a shared item list and
/// writes nothing at all for an empty slice.
pub fn write_records<W: Write>(
    records: &[RespondentRecord],
    format: DataFormat,
    mut out: W,
) -> Result<(), IngestError> {
    match format {
        DataFormat::Jsonl => {
            for record in records {
                serde_json::to_writer(&mut out, record).map_err(|e| IngestError::Io(e.into()))?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            Ok(())
        }
        DataFormat::Csv => write_csv(records, out),
    }
}

fn preferred_name(record: &RespondentRecord, j: &Judgment) -> String {
    match j.preferred {
        Preferred::A => record.items[j.item_a].clone(),
        Preferred::B => record.items[j.item_b].clone(),
        Preferred::Neither => "neither".into(),
    }
}

fn write_csv<W: Write>(records: &[RespondentRecord], out: W) -> Result<(), IngestError> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let items = &first.items;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);

    let mut header = vec!["id".to_string()];
    for k in 1..=pair_count(items.len()) {
        for suffix in ["a", "b", "preferred", "category"] {
            header.push(format!("pair_{k}_{suffix}"));
        }
    }
    header.extend(items.iter().map(|i| format!("score_{i}")));
    header.extend(
        [
            "repeat_preferred",
            "repeat_category",
            "gender",
            "age",
            "county",
        ]
        .map(String::from),
    );
    writer.write_record(&header)?;

    for record in records {
        if &record.items != items {
            return Err(IngestError::MixedItems(record.id.clone()));
        }
        let mut row = vec![record.id.clone()];
        for j in &record.judgments {
            row.push(record.items[j.item_a].clone());
            row.push(record.items[j.item_b].clone());
            row.push(preferred_name(record, j));
            row.push(j.category.to_string());
        }
        row.extend(record.scores.iter().map(u8::to_string));
        row.push(preferred_name(record, &record.repeated));
        row.push(record.repeated.category.to_string());
        row.push(record.demographics.gender.clone());
        row.push(record.demographics.age.clone());
        row.push(record.demographics.county.clone());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
