//! CSV ingestion and export.
//!
//! * expression: `sample_id,<gene>,<gene>,...`, one sample per row
//! * embedding: `sample_id,0,1,...`, dimension-index headers
//! * clinical: `sample_id,patient_id,time_days,event,grade`

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::cohort::{Cohort, Sample};
use crate::error::{Error, Result};

pub const EXPRESSION_FILE: &str = "expression.csv";
pub const EMBEDDING_FILE: &str = "embedding.csv";
pub const CLINICAL_FILE: &str = "clinical.csv";
pub const CLINICAL_COLUMNS: [&str; 5] = ["sample_id", "patient_id", "time_days", "event", "grade"];

/// Samples dropped while loading, with the reason.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub rejected: Vec<(String, String)>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<(usize, String, Vec<f64>)>,
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn context(path: &Path, line: usize) -> String {
    format!("{}:{line}", path.display())
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Reads a `sample_id,<numeric columns...>` table.
fn read_matrix_table(path: &Path) -> Result<Table> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("sample_id") {
        return Err(Error::data(context(path, 1), "first column must be sample_id"));
    }
    let width = header.len() - 1;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != width + 1 {
            return Err(Error::data(context(path, line), format!("{} fields, header has {}", rec.len(), width + 1)));
        }
        let values = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, f)| {
                f.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::data(context(path, line), format!("column {}: '{f}' is not a finite number", header[j + 1]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, rec[0].to_string(), values));
    }
    Ok(Table { header: header[1..].to_vec(), rows })
}

/// One parsed clinical row; `line` is its 1-based position in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct ClinicalRecord {
    pub line: usize,
    pub sample_id: String,
    pub patient_id: String,
    pub time: f64,
    pub event: bool,
    pub grade: usize,
}

/// Reads a clinical table on its own. `grade` may be a class index or one of
/// `grade_names`.
pub fn read_clinical(path: &Path, grade_names: &[String]) -> Result<Vec<ClinicalRecord>> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(context(path, 1), format!("missing column {name}")))
    };
    let [sid, pid, time, event, grade] =
        [col("sample_id")?, col("patient_id")?, col("time_days")?, col("event")?, col("grade")?];
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let at = context(path, line);
        let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
        let t: f64 =
            field(time).parse().ok().filter(|t: &f64| t.is_finite() && *t >= 0.0).ok_or_else(|| {
                Error::data(&at, format!("time_days '{}' must be a non-negative number", field(time)))
            })?;
        let e = match field(event) {
            "1" => true,
            "0" => false,
            other => return Err(Error::data(&at, format!("event '{other}' must be 0 or 1"))),
        };
        let g_text = field(grade);
        let g = match g_text.parse::<usize>() {
            Ok(g) if g < grade_names.len() => g,
            _ => grade_names.iter().position(|n| n == g_text).ok_or_else(|| {
                Error::data(&at, format!("grade '{g_text}' is neither an index nor one of {grade_names:?}"))
            })?,
        };
        out.push(ClinicalRecord {
            line,
            sample_id: field(sid).to_string(),
            patient_id: field(pid).to_string(),
            time: t,
            event: e,
            grade: g,
        });
    }
    Ok(out)
}

/// Joins the modality files onto the clinical table (which fixes sample
/// order). Clinical rows with no modality data are dropped and reported.
pub fn load_cohort(
    expression: Option<&Path>,
    embedding: Option<&Path>,
    clinical: &Path,
    grade_names: &[String],
) -> Result<(Cohort, LoadReport)> {
    let rows = read_clinical(clinical, grade_names)?;
    let mut clinical_index: HashMap<&str, usize> = HashMap::new();
    for (i, r) in rows.iter().enumerate() {
        if clinical_index.insert(r.sample_id.as_str(), i).is_some() {
            return Err(Error::data(context(clinical, r.line), format!("duplicate sample id {}", r.sample_id)));
        }
    }

    let load = |path: Option<&Path>| -> Result<(Vec<String>, HashMap<String, Vec<f64>>)> {
        let Some(path) = path else {
            return Ok((Vec::new(), HashMap::new()));
        };
        let table = read_matrix_table(path)?;
        let mut map = HashMap::new();
        for (line, id, values) in table.rows {
            if !clinical_index.contains_key(id.as_str()) {
                return Err(Error::data(context(path, line), format!("sample {id} is not in the clinical table")));
            }
            if map.insert(id.clone(), values).is_some() {
                return Err(Error::data(context(path, line), format!("duplicate sample id {id}")));
            }
        }
        Ok((table.header, map))
    };
    let (genes, mut expr) = load(expression)?;
    let (dims, mut emb) = load(embedding)?;

    let mut report = LoadReport::default();
    let mut samples = Vec::with_capacity(rows.len());
    for r in rows {
        let expression = expr.remove(&r.sample_id);
        let image = emb.remove(&r.sample_id);
        if expression.is_none() && image.is_none() {
            warn!("sample {} has no modality data and is dropped", r.sample_id);
            report.rejected.push((r.sample_id, "no modality data".into()));
            continue;
        }
        samples.push(Sample {
            patient_id: r.patient_id,
            sample_id: r.sample_id,
            image,
            expression,
            time: r.time,
            event: r.event,
            grade: r.grade,
        });
    }
    let cohort = Cohort::new(samples, genes, dims.len(), grade_names.to_vec())?;
    Ok((cohort, report))
}

/// Loads `expression.csv`, `embedding.csv` and `clinical.csv` from `dir`;
/// either modality file may be absent.
pub fn load_cohort_dir(dir: &Path, grade_names: &[String]) -> Result<(Cohort, LoadReport)> {
    let expr = dir.join(EXPRESSION_FILE);
    let emb = dir.join(EMBEDDING_FILE);
    load_cohort(
        expr.exists().then_some(expr.as_path()),
        emb.exists().then_some(emb.as_path()),
        &dir.join(CLINICAL_FILE),
        grade_names,
    )
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn matrix_text(header: &[String], rows: impl Iterator<Item = (String, Vec<f64>)>) -> String {
    let mut out = String::from("sample_id");
    for h in header {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    for (id, values) in rows {
        out.push_str(&id);
        for v in values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes the cohort in the three-file layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn save_cohort(cohort: &Cohort, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if cohort.has_expression() {
        let rows = cohort.samples().iter().filter_map(|s| s.expression.clone().map(|x| (s.sample_id.clone(), x)));
        write_text(&dir.join(EXPRESSION_FILE), &matrix_text(cohort.genes(), rows))?;
    }
    if cohort.has_image() {
        let header: Vec<String> = (0..cohort.image_dim()).map(|d| d.to_string()).collect();
        let rows = cohort.samples().iter().filter_map(|s| s.image.clone().map(|x| (s.sample_id.clone(), x)));
        write_text(&dir.join(EMBEDDING_FILE), &matrix_text(&header, rows))?;
    }
    let mut text = CLINICAL_COLUMNS.join(",");
    text.push('\n');
    for s in cohort.samples() {
        let _ = writeln!(text, "{},{},{},{},{}", s.sample_id, s.patient_id, s.time, u8::from(s.event), s.grade);
    }
    write_text(&dir.join(CLINICAL_FILE), &text)
}
