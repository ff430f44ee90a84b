//! CSV input and output.
//!
//! Inputs have a header row and are matched by column name:
//!
//! - sample files: `y,delta,x`, plus `id` when the sample is linked to a
//!   covariate file;
//! - covariate files: `id,x` for every population unit;
//! - population files for design-based runs: `y,delta,x` for every unit.
//!
//! Numbers are written in the shortest form that parses back to the same
//! value.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::PopulationFrame;
use crate::sample::CensoredSample;

/// A sample file, with its unit ids when it has an `id` column.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub ids: Option<Vec<String>>,
    pub sample: CensoredSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateFile {
    pub ids: Vec<String>,
    pub x: Vec<f64>,
}

fn ingest(path: &Path, line: Option<u64>, message: impl Into<String>) -> Error {
    Error::Ingest {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

struct Reader {
    path: PathBuf,
    inner: csv::Reader<std::fs::File>,
    columns: HashMap<String, usize>,
}

impl Reader {
    fn open(path: &Path) -> Result<Self> {
        let mut inner = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let columns = inner
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_ascii_lowercase(), i))
            .collect();
        Ok(Self {
            path: path.to_path_buf(),
            inner,
            columns,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .get(name)
            .copied()
            .ok_or_else(|| ingest(&self.path, Some(1), format!("missing column `{name}`")))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    /// Calls `f` with each record and its line number.
    fn for_each(&mut self, mut f: impl FnMut(&csv::StringRecord, u64) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.inner.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line());
                    f(&record, line)?;
                }
                Err(e) => return Err(csv_error(&self.path, e)),
            }
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => ingest(path, line, format!("{kind:?}")),
    }
}

fn field<'a>(
    path: &Path,
    rec: &'a csv::StringRecord,
    line: u64,
    col: usize,
    name: &str,
) -> Result<&'a str> {
    rec.get(col)
        .ok_or_else(|| ingest(path, Some(line), format!("missing value for `{name}`")))
}

fn number(path: &Path, rec: &csv::StringRecord, line: u64, col: usize, name: &str) -> Result<f64> {
    let raw = field(path, rec, line, col, name)?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ingest(
            path,
            Some(line),
            format!("`{name}` is not a finite number: {raw:?}"),
        )),
    }
}

fn indicator(path: &Path, rec: &csv::StringRecord, line: u64, col: usize) -> Result<bool> {
    match field(path, rec, line, col, "delta")? {
        "1" => Ok(true),
        "0" => Ok(false),
        raw => Err(ingest(
            path,
            Some(line),
            format!("`delta` must be 0 or 1, got {raw:?}"),
        )),
    }
}

fn triples(path: &Path, with_ids: bool) -> Result<(Option<Vec<String>>, CensoredSample)> {
    let mut reader = Reader::open(path)?;
    let (cy, cd, cx) = (
        reader.column("y")?,
        reader.column("delta")?,
        reader.column("x")?,
    );
    let cid = if with_ids {
        reader.optional("id")
    } else {
        None
    };
    let (mut ids, mut y, mut delta, mut x) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    reader.for_each(|rec, line| {
        if let Some(c) = cid {
            ids.push(field(path, rec, line, c, "id")?.to_string());
        }
        y.push(number(path, rec, line, cy, "y")?);
        delta.push(indicator(path, rec, line, cd)?);
        x.push(number(path, rec, line, cx, "x")?);
        Ok(())
    })?;
    if y.is_empty() {
        return Err(ingest(path, None, "no data rows"));
    }
    let sample = CensoredSample::new(y, delta, x).map_err(|e| ingest(path, None, e.to_string()))?;
    Ok((cid.map(|_| ids), sample))
}

/// Reads a sample file (`y,delta,x`, optional `id`).
pub fn read_sample(path: &Path) -> Result<SampleFile> {
    let (ids, sample) = triples(path, true)?;
    Ok(SampleFile { ids, sample })
}

/// Reads a full population of observed triples (`y,delta,x`).
pub fn read_population(path: &Path) -> Result<CensoredSample> {
    Ok(triples(path, false)?.1)
}

/// Reads population covariates (`id,x`).
pub fn read_covariates(path: &Path) -> Result<CovariateFile> {
    let mut reader = Reader::open(path)?;
    let (cid, cx) = (reader.column("id")?, reader.column("x")?);
    let (mut ids, mut x) = (Vec::new(), Vec::new());
    let mut seen = HashMap::new();
    reader.for_each(|rec, line| {
        let id = field(path, rec, line, cid, "id")?.to_string();
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(ingest(
                path,
                Some(line),
                format!("duplicate id {id:?} (first on line {first})"),
            ));
        }
        ids.push(id);
        x.push(number(path, rec, line, cx, "x")?);
        Ok(())
    })?;
    if ids.is_empty() {
        return Err(ingest(path, None, "no data rows"));
    }
    Ok(CovariateFile { ids, x })
}

/// Links sampled units to the population through their ids.
pub fn link_frame(sample: &SampleFile, covariates: &CovariateFile) -> Result<PopulationFrame> {
    let ids = sample.ids.as_ref().ok_or_else(|| {
        Error::invalid("the sample file needs an `id` column to link with the population")
    })?;
    let index: HashMap<&str, usize> = covariates
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let sampled = ids
        .iter()
        .map(|id| {
            index.get(id.as_str()).copied().ok_or_else(|| {
                Error::invalid(format!("sampled id {id:?} is not in the population file"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PopulationFrame::new(covariates.x.clone(), sampled, sample.sample.clone())
}

/// Writes named columns of numbers.
pub fn write_columns(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    assert_eq!(names.len(), columns.len());
    let rows = columns.first().map_or(0, |c| c.len());
    assert!(columns.iter().all(|c| c.len() == rows));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(names).map_err(|e| csv_error(path, e))?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c[i].to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a sample file; `ids` adds a leading `id` column.
pub fn write_sample(path: &Path, ids: Option<&[String]>, sample: &CensoredSample) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["y", "delta", "x"];
    if ids.is_some() {
        header.insert(0, "id");
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for j in 0..sample.len() {
        let mut row = Vec::with_capacity(4);
        if let Some(ids) = ids {
            row.push(ids[j].clone());
        }
        row.push(sample.y()[j].to_string());
        row.push(u8::from(sample.delta()[j]).to_string());
        row.push(sample.x()[j].to_string());
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_covariates(path: &Path, ids: &[String], x: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["id", "x"])
        .map_err(|e| csv_error(path, e))?;
    for (id, v) in ids.iter().zip(x) {
        w.write_record([id.as_str(), &v.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}
